"""Deterministic sweep campaign over (ring size, flux, potential) cells.

Each trial is seeded independently from (seed, n, theta index, trial index),
so results do not depend on execution order or thread count.  Trials write
their own report file; the manifest is assembled by the coordinator once all
trials finish.  Completed trial files are trusted and skipped on re-runs, so
a finished sweep is byte-identical when repeated.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, build_model
from .reports import (
    atomic_write_text,
    levinson_report_dict,
    read_levinson_report,
    write_json,
    _fmt,
)
from .winding import levinson_report

MANIFEST_HEADER = "trial_id,n,theta,intricate,C,var_det_s,bound_total,residual,status"


@dataclass(frozen=True)
class VDistribution:
    """Potential sampler: unit-sphere, scaled ("deep"), or sparse with zeros."""

    kind: str  # "unit-sphere" | "deep" | "sparse"
    scale: float = 1.0
    p_zero: float = 0.5

    @staticmethod
    def parse(text: str) -> "VDistribution":
        base, _, arg = text.partition(":")
        base = base.strip().lower()
        if base in ("unit-sphere", "unitsphere"):
            return VDistribution("unit-sphere")
        if base == "deep":
            return VDistribution("deep", scale=float(arg) if arg else 5.0)
        if base in ("sparse", "sparsewithzeros"):
            return VDistribution("sparse", p_zero=float(arg) if arg else 0.5)
        raise ValueError(f"unknown distribution {text!r}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        for _ in range(1000):
            g = rng.normal(size=n)
            if self.kind == "sparse":
                g[rng.random(n) < self.p_zero] = 0.0
                if not np.any(g):
                    continue
                return g
            norm = float(np.linalg.norm(g))
            if norm < 1e-12:
                continue
            if self.kind == "unit-sphere":
                return g / norm
            if self.kind == "deep":
                return self.scale * g / norm
            raise ValueError(f"unknown kind {self.kind!r}")
        raise RuntimeError("sampler failed to produce a nonzero potential")


@dataclass
class SweepConfig:
    n_values: list[int]
    theta_grid: int = 16
    trials_per_cell: int = 5
    rng_seed: int = 12345
    v_distribution: VDistribution = field(default_factory=lambda: VDistribution("unit-sphere"))
    out_dir: str = "sweep_out"
    oracle_layers: int = 600


@dataclass
class ManifestRow:
    trial_id: str
    n: int
    theta: float
    intricate: bool
    correction_c: int | None
    var_det_s: float | None
    bound_total: int | None
    residual: float | None
    status: str

    def as_csv(self) -> str:
        def opt(x, fmt):
            return "" if x is None else fmt(x)

        return ",".join(
            [
                self.trial_id,
                str(self.n),
                _fmt(self.theta),
                "true" if self.intricate else "false",
                opt(self.correction_c, str),
                opt(self.var_det_s, _fmt),
                opt(self.bound_total, str),
                opt(self.residual, _fmt),
                self.status,
            ]
        )


def theta_values(grid: int) -> list[float]:
    """Uniform flux grid on [0, 2pi) with 0 and pi included exactly."""
    vals = {0.0, math.pi}
    for i in range(grid):
        vals.add((2.0 * math.pi * i) / grid)
    return sorted(vals)


def trial_id(n: int, theta_idx: int, trial: int) -> str:
    return f"n{n}_t{theta_idx:02d}_r{trial:03d}"


def trial_path(out_dir: str, tid: str) -> str:
    return os.path.join(out_dir, f"trial_{tid}.json")


def trial_potential(config: SweepConfig, n: int, theta_idx: int, trial: int) -> np.ndarray:
    rng = np.random.default_rng([config.rng_seed, n, theta_idx, trial])
    return config.v_distribution.sample(rng, n)


def _row_from_report_dict(tid: str, data: dict) -> ManifestRow:
    bs = data["bound_states"]
    status = "ok"
    if bs.get("oracle_total") is not None and bs["oracle_total"] != bs["total"]:
        status = "mismatch"
    return ManifestRow(
        trial_id=tid,
        n=int(data["params"]["n"]),
        theta=float(data["params"]["theta"]),
        intricate=bool(data["intricate"]["flag"]),
        correction_c=int(data["correction_C"]),
        var_det_s=float(data["var_det_s"]),
        bound_total=int(bs["total"]),
        residual=float(data["residual"]),
        status=status,
    )


def run_trial(config: SweepConfig, n: int, theta_idx: int, theta: float, trial: int) -> ManifestRow:
    tid = trial_id(n, theta_idx, trial)
    path = trial_path(config.out_dir, tid)
    if os.path.exists(path):
        try:
            return _row_from_report_dict(tid, read_levinson_report(path))
        except Exception:
            pass  # stale or corrupt file: recompute below
    v = trial_potential(config, n, theta_idx, trial)
    try:
        model = build_model(ModelParams(n=n, theta=theta, v=tuple(float(x) for x in v)))
        report = levinson_report(model, oracle_layers=config.oracle_layers)
    except Exception as exc:
        return ManifestRow(
            trial_id=tid,
            n=n,
            theta=theta,
            intricate=False,
            correction_c=None,
            var_det_s=None,
            bound_total=None,
            residual=None,
            status=f"error:{type(exc).__name__}",
        )
    write_json(path, levinson_report_dict(report))
    return _row_from_report_dict(tid, read_levinson_report(path))


def worker_count() -> int:
    env = os.environ.get("QLEV_THREADS", "").strip()
    if env:
        return max(int(env), 1)
    return max(os.cpu_count() or 1, 1)


def run_sweep(config: SweepConfig, progress=None) -> list[ManifestRow]:
    """Run every (n, theta, trial) cell, write trial reports and manifest.csv.

    Returns the manifest rows in deterministic order.  Individual trial
    failures become status != ok rows; the sweep always completes.
    """
    os.makedirs(config.out_dir, exist_ok=True)
    thetas = theta_values(config.theta_grid)
    tasks = [
        (n, ti, theta, r)
        for n in config.n_values
        for ti, theta in enumerate(thetas)
        for r in range(config.trials_per_cell)
    ]

    def one(task):
        n, ti, theta, r = task
        row = run_trial(config, n, ti, theta, r)
        if progress is not None:
            progress(row)
        return row

    threads = worker_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, tasks))
    else:
        rows = [one(t) for t in tasks]

    rows.sort(key=lambda r: (r.n, r.trial_id))
    lines = [MANIFEST_HEADER] + [r.as_csv() for r in rows]
    atomic_write_text(os.path.join(config.out_dir, "manifest.csv"), "\n".join(lines) + "\n")
    return rows
