"""The three figure kinds rendered from published engine output.

phase-trace   arg det S staircase per interval + unimodularity panel
hexagon-trace closed edge-determinant curve of the six-edge contour
sweep-census  residual histogram over a sweep manifest

Each renderer returns a small dict of the numbers it drew, so tests can
cross-read annotations against the source files without parsing images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    read_hexagon_csv,
    read_hexagon_json,
    read_levinson_json,
    read_manifest_csv,
    read_trace_csv,
)

KINDS = ("phase-trace", "hexagon-trace", "sweep-census")

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    out_path: str
    json_path: str | None = None
    csv_path: str | None = None


def render(spec: FigureSpec) -> dict:
    if spec.kind == "phase-trace":
        if not (spec.json_path and spec.csv_path):
            raise ValueError("phase-trace needs json_path and csv_path")
        return render_phase_trace(spec.json_path, spec.csv_path, spec.out_path)
    if spec.kind == "hexagon-trace":
        if not (spec.json_path and spec.csv_path):
            raise ValueError("hexagon-trace needs json_path and csv_path")
        return render_hexagon_trace(spec.json_path, spec.csv_path, spec.out_path)
    if spec.kind == "sweep-census":
        if not spec.csv_path:
            raise ValueError("sweep-census needs csv_path")
        return render_sweep_census(spec.csv_path, spec.out_path)
    raise ValueError(f"unknown figure kind {spec.kind!r}; expected one of {KINDS}")


def render_phase_trace(json_path: str, csv_path: str, out_path: str) -> dict:
    """Two panels: unwrapped arg det S per interval with threshold lines and
    per-interval variation labels, and the unimodularity defect of the same
    samples.  The labelled variations are -delta(arg)/2pi, clockwise
    positive, summed in the legend next to var_det_s from the JSON report."""
    report = read_levinson_json(json_path)
    intervals = read_trace_csv(csv_path)

    variations = [-(it["arg"][-1] - it["arg"][0]) / TWO_PI for it in intervals]
    total = math.fsum(variations)
    var_json = float(report["var_det_s"])
    thresholds = sorted({it["a"] for it in intervals} | {it["b"] for it in intervals})

    fig, (ax_arg, ax_uni) = plt.subplots(
        2, 1, figsize=(8.0, 6.0), sharex=True, height_ratios=[2.4, 1.0]
    )
    for t in thresholds:
        ax_arg.axvline(t, color="0.75", lw=0.8, zorder=0)
        ax_uni.axvline(t, color="0.75", lw=0.8, zorder=0)
    for it, var in zip(intervals, variations):
        lam = np.asarray(it["lam"])
        arg = np.asarray(it["arg"])
        ax_arg.plot(lam, arg, lw=1.4)
        ax_arg.annotate(
            f"{var:+.3f}",
            ((it["a"] + it["b"]) / 2.0, arg.mean()),
            textcoords="offset points",
            xytext=(0, 10),
            ha="center",
            fontsize=9,
        )
        defect = np.abs(np.hypot(it["re"], it["im"]) - 1.0) + 1e-18
        ax_uni.semilogy(lam, defect, lw=1.0)
    p = report["params"]
    ax_arg.set_ylabel("arg det S (unwrapped)")
    ax_arg.set_title(
        f"n={p['n']} theta={p['theta']:.6g} v={tuple(p['v'])}   "
        f"sum of interval variations {total:+.6f} / report {var_json:+.6f}"
    )
    ax_uni.set_ylabel("| |det S| - 1 |")
    ax_uni.set_xlabel("energy")
    fig.tight_layout()
    fig.savefig(out_path, dpi=140)
    plt.close(fig)
    return {
        "out": out_path,
        "variations": variations,
        "sum": total,
        "var_det_s": var_json,
        "thresholds": thresholds,
    }


def render_hexagon_trace(json_path: str, csv_path: str, out_path: str) -> dict:
    report = read_hexagon_json(json_path)
    edges = read_hexagon_csv(csv_path)

    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    circle = np.exp(1j * np.linspace(0.0, TWO_PI, 361))
    ax.plot(circle.real, circle.imag, ls="--", color="0.8", lw=0.8, zorder=0)
    worst = 0.0
    for name in sorted(edges):
        re = np.asarray(edges[name]["re"])
        im = np.asarray(edges[name]["im"])
        worst = max(worst, float(np.abs(np.hypot(re, im) - 1.0).max()))
        ax.plot(re, im, lw=1.4, label=name)
        ax.plot(re[0], im[0], marker="o", ms=3.5, color=ax.lines[-1].get_color())
    ax.set_aspect("equal")
    ax.set_xlabel("Re det")
    ax.set_ylabel("Im det")
    p = report["params"]
    ax.set_title(
        f"case {report['case']}   winding {report['winding']:+.6f} "
        f"(nearest {report['winding_nearest_int']:+d})   "
        f"n={p['n']} v={tuple(p['v'])}"
    )
    ax.legend(fontsize=8, loc="center")
    fig.tight_layout()
    fig.savefig(out_path, dpi=140)
    plt.close(fig)
    return {
        "out": out_path,
        "case": report["case"],
        "winding": float(report["winding"]),
        "winding_nearest_int": int(report["winding_nearest_int"]),
        "max_unimodularity_defect": worst,
        "edges": sorted(edges),
    }


def render_sweep_census(csv_path: str, out_path: str) -> dict:
    rows = read_manifest_csv(csv_path)
    residuals = [r["residual"] for r in rows if r["residual"] is not None]
    status_counts: dict[str, int] = {}
    for r in rows:
        status_counts[r["status"]] = status_counts.get(r["status"], 0) + 1

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    span = max(0.011, max((abs(x) for x in residuals), default=0.0) * 1.1)
    ax.hist(residuals, bins=41, range=(-span, span), color="#4878a8")
    for g in (-0.01, 0.01):
        ax.axvline(g, color="crimson", ls="--", lw=1.0)
    parts = ", ".join(f"{k}: {v}" for k, v in sorted(status_counts.items()))
    ax.set_title(f"{len(rows)} trials ({parts})")
    ax.set_xlabel("identity residual")
    ax.set_ylabel("trials")
    fig.tight_layout()
    fig.savefig(out_path, dpi=140)
    plt.close(fig)
    return {
        "out": out_path,
        "total": len(rows),
        "status_counts": status_counts,
        "max_abs_residual": max((abs(x) for x in residuals), default=0.0),
    }
