"""Winding numbers, phase traces, and the integer-valued counting identity.

The determinant of the open-channel scattering matrix is unimodular on every
interval between consecutive thresholds.  Summing its (clockwise) argument
variation over all such intervals, adding one half-turn contribution per
threshold side, and correcting for resonant and coinciding thresholds must
reproduce the number of eigenvalues exactly:

    var + n_channels - C/2 - (1/2 if coinciding-threshold pair) = #eigenvalues

where C counts, over all (threshold, side) pairs, the sides whose limit is
+1 (weight 1), +Identity_2 (weight 2), or a reflection (weight 1).

``levinson_report`` assembles every ingredient and checks the identity to
machine-level accuracy; the residual is reported, never rounded away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bound_states import BoundStateSummary, _refine_dip, bound_state_census
from .model import Model
from .resolvent import (
    NonInvertibleError,
    bs_matrix_batch,
    bs_matrix_closed_part,
    bs_matrix_unphysical,
)
from .scattering import (
    ThresholdClass,
    ThresholdLimit,
    UnclassifiedThresholdError,
    all_threshold_limits,
    s_matrix_batch,
    unitarity_defect_batch,
)

TWO_PI = 2.0 * math.pi

# refinement targets for phase traces
PHASE_GAP_HARD = math.pi / 2.0   # a single step may never exceed this
PHASE_GAP_TARGET = 0.1           # refined until below this
MAX_TRACE_SAMPLES = 1_000_000
UNIMODULAR_TOL = 1e-6
# the innermost sample misses ~2*sqrt(offset/b) radians of the approach to
# the threshold limit when a state is bound by b just outside; the census
# keeps states down to b = 1e-8, so the offset must sit well below that
ENDPOINT_OFFSET = 1e-12
# resonance hunting: a closed-channel level embedded in an open band becomes a
# resonance whose width shrinks quadratically as the channels decouple, so its
# full-turn det S swing can slide between trace samples; seeds come from the
# closed-channel spectrum and are polished on the second sheet
RESONANCE_SCAN_POINTS = 1601
RESONANCE_EDGE_MARGIN = 1e-6
RESONANCE_WIDTH_FLOOR = 1e-12


class PhaseJumpTooLarge(ValueError):
    """Consecutive samples of a unimodular trace differ by >= pi/2."""


class RefinementBudgetExceeded(RuntimeError):
    """Adaptive refinement hit the sample cap before resolving the phase."""


def arg_variation(values, require_unimodular: bool = True) -> float:
    """Clockwise winding of a sampled unimodular path, in full turns.

    pre: consecutive phase increments all below pi/2 in magnitude.
    Returns ``-(total unwrapped argument change) / (2 pi)`` so that a path
    traversed clockwise yields a positive number.
    """
    vals = np.asarray(values, dtype=complex).ravel()
    if vals.size < 2:
        return 0.0
    mags = np.abs(vals)
    if require_unimodular and np.any(np.abs(mags - 1.0) > UNIMODULAR_TOL):
        worst = float(np.abs(mags - 1.0).max())
        raise ValueError(f"trace is not unimodular (max |.|-1 = {worst:.3e})")
    inc = np.angle(vals[1:] / vals[:-1])
    big = np.abs(inc) >= PHASE_GAP_HARD
    if np.any(big):
        i = int(np.argmax(big))
        raise PhaseJumpTooLarge(
            f"phase step {inc[i]:+.4f} rad at sample {i} exceeds pi/2; "
            "refine the sampling"
        )
    return float(-inc.sum() / TWO_PI)


@dataclass
class PhaseTrace:
    """det S sampled along one inter-threshold interval, refined until the
    phase is resolved."""

    a: float
    b: float
    open_channels: tuple[int, ...]
    lams: np.ndarray
    dets: np.ndarray
    skipped: tuple[float, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def variation(self) -> float:
        return arg_variation(self.dets)

    @property
    def unwrapped_args(self) -> np.ndarray:
        inc = np.angle(self.dets[1:] / self.dets[:-1])
        args = np.empty(self.dets.size, dtype=float)
        args[0] = float(np.angle(self.dets[0]))
        np.cumsum(inc, out=args[1:])
        args[1:] += args[0]
        return args


def _det_samples(model: Model, lams: np.ndarray, js: tuple[int, ...]):
    """det of the open-block scattering matrix at each lam; NaN where the
    linear solve degenerates."""
    try:
        with np.errstate(all="ignore"):
            mats = s_matrix_batch(model, lams, js)
    except np.linalg.LinAlgError:
        # an exactly singular sample poisons the whole batch; redo one by one
        dets = np.empty(lams.size, dtype=complex)
        for i, lam in enumerate(lams):
            try:
                with np.errstate(all="ignore"):
                    one = s_matrix_batch(model, np.array([lam]), js)
                dets[i] = np.linalg.det(one[0])
                if unitarity_defect_batch(one)[0] > 1e-5:
                    dets[i] = np.nan
            except np.linalg.LinAlgError:
                dets[i] = np.nan
        return dets
    with np.errstate(all="ignore"):
        dets = np.linalg.det(mats)
        defect = unitarity_defect_batch(mats)
    bad = ~np.isfinite(dets) | (defect > 1e-5)
    dets = np.where(bad, np.nan + 0j, dets)
    return dets


def _closed_part_det(model: Model, lam: float, closed) -> float:
    return float(
        np.linalg.det(bs_matrix_closed_part(model, np.array([lam]), closed)[0]).real
    )


def _closed_part_smin2(model: Model, lam: float, closed) -> float:
    m = bs_matrix_closed_part(model, np.array([lam]), closed)[0]
    return float(np.linalg.svd(m, compute_uv=False)[-1]) ** 2


def _polish_resonance(model: Model, js, seed: float, a: float, b: float, exclude=()):
    """Secant iteration for a zero of the continued det B near ``seed``.

    The starting depths scale with the seed's distance to the interval ends:
    next to a threshold the boundary matrix is dominated by the square-root
    blowup of a closing channel, and only iterates below that scale stay in
    the basin of the local zero instead of drifting to a distant fat one.
    ``exclude`` deflates zeros already found, so degenerate seeds yield their
    full set.  Returns the zero (Im <= 0) or None when the iteration leaves
    the seed's neighborhood or stalls before converging.
    """

    def f(z):
        val = np.linalg.det(bs_matrix_unphysical(model, z, js))
        for zx in exclude:
            val /= z - zx
        return val

    span = b - a
    h = min(seed - a, b - seed)
    cap = min(0.25 * span, max(0.02 * span, 1e3 * h))
    z0 = complex(seed, -min(1e-4 * span, 0.1 * h))
    z1 = complex(seed, -min(1e-5 * span, 0.01 * h))
    f0, f1 = f(z0), f(z1)
    for _ in range(80):
        if f1 == f0:
            # flat at the noise floor; accept only if already converged
            if abs(z1 - z0) < 1e-12 * max(1.0, abs(z1)):
                break
            return None
        z2 = z1 - f1 * (z1 - z0) / (f1 - f0)
        if not np.isfinite(z2) or abs(z2 - seed) > cap:
            return None
        if abs(z2 - z1) < 1e-14 * max(1.0, abs(z2)):
            z1 = z2
            break
        z0, f0 = z1, f1
        z1, f1 = z2, f(z2)
    else:
        return None
    if z1.imag > 1e-9 * span:
        return None
    return complex(z1.real, min(z1.imag, 0.0))


def _axis_kernel_probe(model: Model, seed: float, a: float, b: float):
    """Near-singularity of B(lam + i0) around ``seed``: (location, rel smin).

    A failed polish is harmless if the boundary matrix stays well conditioned
    on the axis there (the feature is broad and plain sampling resolves it);
    a deep dip betrays a narrow feature that must be reported.
    """
    span = b - a
    half = min(2e-3 * span, 0.5 * (b - seed), 0.5 * (seed - a))
    lams = np.linspace(seed - half, seed + half, 81)
    mats = bs_matrix_batch(model, lams, "plus")
    sv = np.linalg.svd(mats, compute_uv=False)
    rel = sv[:, -1] / np.maximum(sv[:, 0], 1.0)
    i = int(np.argmin(rel))
    return float(lams[i]), float(rel[i])


def _interval_resonances(model: Model, a: float, b: float, js):
    """Resonances inside (a, b): (energy, width) pairs plus warning notes.

    Each eigenvalue of the problem with the open channels deleted (a root of
    the closed-channel partial determinant) seeds one resonance; polishing
    moves it to the nearby zero of the continued det B at ``e - i*width/2``.
    Whatever cannot be pinned down is reported in the notes, not dropped.
    """
    closed = [j for j in range(1, model.n + 1) if j not in js]
    if not closed:
        return [], []
    span = b - a
    # geometric ladders pick up levels hugging a threshold, where the uniform
    # grid's margin would hide them
    ladder = span * np.float_power(10.0, -np.arange(3, 13, dtype=float))
    grid = np.unique(
        np.concatenate(
            [
                np.linspace(
                    a + RESONANCE_EDGE_MARGIN * span,
                    b - RESONANCE_EDGE_MARGIN * span,
                    RESONANCE_SCAN_POINTS,
                ),
                a + ladder,
                b - ladder,
            ]
        )
    )
    mats = bs_matrix_closed_part(model, grid, closed)
    dets = np.linalg.det(mats).real

    seeds: list[tuple[float, int]] = []
    sgn = np.sign(dets)
    for i in np.flatnonzero(sgn[:-1] * sgn[1:] < 0):
        lo, hi, flo = float(grid[i]), float(grid[i + 1]), float(dets[i])
        while hi - lo > 1e-13 * max(1.0, abs(lo)):
            mid = 0.5 * (lo + hi)
            fm = _closed_part_det(model, mid, closed)
            if flo * fm <= 0.0:
                hi = mid
            else:
                lo, flo = mid, fm
        seeds.append((0.5 * (lo + hi), 1))

    # an even-multiplicity closed level (degenerate channel pair) never flips
    # the sign of the determinant; catch it as a dip of the smallest singular
    # value instead, and read the multiplicity off the refined kernel
    sv = np.linalg.svd(mats, compute_uv=False)
    rel = sv[:, -1] / np.maximum(sv[:, 0], 1.0)
    dips = (
        np.flatnonzero((rel[1:-1] < 1e-2) & (rel[1:-1] <= rel[:-2]) & (rel[1:-1] <= rel[2:]))
        + 1
    )
    def _bisect(lo: float, hi: float, flo: float) -> float:
        while hi - lo > 1e-13 * max(1.0, abs(lo)):
            mid = 0.5 * (lo + hi)
            fm = _closed_part_det(model, mid, closed)
            if flo * fm <= 0.0:
                hi = mid
            else:
                lo, flo = mid, fm
        return 0.5 * (lo + hi)

    for i in dips:
        lo = float(grid[max(i - 2, 0)])
        hi = float(grid[min(i + 2, grid.size - 1)])
        x = _refine_dip(lambda t: _closed_part_smin2(model, t, closed), lo, hi)
        if any(lo <= s <= hi for s, _ in seeds):
            continue  # the sign-change pass already owns this dip
        flo, fx = _closed_part_det(model, lo, closed), _closed_part_det(model, x, closed)
        if np.sign(fx) != np.sign(flo) and np.sign(fx) != 0:
            # a root pair inside one grid cell: the flanking signs agree, so
            # the plain scan saw nothing; split the dip and take both roots
            seeds.append((_bisect(lo, x, flo), 1))
            seeds.append((_bisect(x, hi, fx), 1))
            continue
        s0 = np.linalg.svd(
            bs_matrix_closed_part(model, np.array([x]), closed)[0], compute_uv=False
        )
        mult = int(np.sum(s0 < 1e-7 * max(float(s0[0]), 1.0)))
        if mult > 0:
            seeds.append((x, mult))

    resonances: list[tuple[float, float]] = []
    notes: list[str] = []
    found: list[complex] = []
    for seed, mult in sorted(seeds):
        got = 0
        for _ in range(mult):
            z = _polish_resonance(model, js, seed, a, b, exclude=found)
            if z is None:
                break
            found.append(z)
            got += 1
        if got < mult:
            # only dangerous when a narrow feature really sits on the axis;
            # a dissolved (broad) level leaves B well conditioned and plain
            # sampling handles it
            loc, rel = _axis_kernel_probe(model, seed, a, b)
            if rel < 1e-8:
                continue  # an embedded eigenvalue; the census owns it
            if rel > 1e-3:
                continue
            notes.append(
                f"closed-channel level at {seed:.9g} in ({a:.6g}, {b:.6g}): "
                f"polished {got} of {mult} resonance zero(s) and B nearly "
                f"singular at {loc:.9g}, winding may be unresolved"
            )
    for z in found:
        e, width = float(z.real), float(-2.0 * z.imag)
        if not (a - 0.02 * span < e < b + 0.02 * span):
            notes.append(f"resonance zero {e:.9g} left the interval ({a:.6g}, {b:.6g})")
            continue
        if width < RESONANCE_WIDTH_FLOOR:
            # indistinguishable from a genuinely embedded eigenvalue: if the
            # boundary matrix is singular there the census counts the state
            # and det S carries no swing, otherwise the turn is unresolvable
            bb = bs_matrix_batch(model, np.array([e]), "plus")[0]
            s = np.linalg.svd(bb, compute_uv=False)
            if s[-1] < 1e-8 * max(float(s[0]), 1.0):
                continue
            notes.append(
                f"resonance at {e:.9g} narrower than {RESONANCE_WIDTH_FLOOR:g}, "
                "winding not certified"
            )
            continue
        resonances.append((e, min(width, span)))
    return resonances, notes


def _resonance_samples(e: float, width: float, a: float, b: float) -> np.ndarray:
    """Sample ladder across one resonance, uniform in the phase it unwinds."""
    t = np.tan(np.linspace(-1.47, 1.47, 33))
    pts = e + 0.5 * width * t
    return pts[(pts > a) & (pts < b)]


def interval_phase_trace(
    model: Model,
    a: float,
    b: float,
    base_points: int = 128,
    seeds: np.ndarray | None = None,
    notes: tuple[str, ...] = (),
) -> PhaseTrace:
    """Adaptively sampled det S on the open interval (a, b).

    The endpoints are approached through a geometric ladder down to 1e-9 so
    the trace captures the threshold behavior; midpoint refinement then
    splits any step whose phase increment exceeds 0.1 rad.
    """
    if not b > a:
        raise ValueError("empty interval")
    span = b - a
    mid = 0.5 * (a + b)
    js = model.open_channels(mid)
    if not js:
        raise ValueError(f"no open channel on ({a}, {b})")

    offsets = []
    off = ENDPOINT_OFFSET * span / 4.0 if span < 4.0 * ENDPOINT_OFFSET else ENDPOINT_OFFSET
    while off < span / 4.0:
        offsets.append(off)
        off *= 4.0
    ladder = np.asarray(offsets, dtype=float)
    parts = [
        a + ladder,
        b - ladder,
        np.linspace(a + span * 0.01, b - span * 0.01, base_points),
    ]
    if seeds is not None and np.size(seeds) and ladder.size:
        # keep injected samples off the endpoints by the ladder's innermost
        # rung: any closer and lam - center can round onto an exact band edge
        s = np.asarray(seeds, dtype=float)
        parts.append(s[(s > a + ladder[0]) & (s < b - ladder[0])])
    lams = np.unique(np.concatenate(parts))
    dets = _det_samples(model, lams, js)
    skipped = []

    total = lams.size
    while True:
        good = np.isfinite(dets)
        if not np.all(good):
            skipped.extend(lams[~good].tolist())
            lams, dets = lams[good], dets[good]
        if lams.size < 2:
            raise RefinementBudgetExceeded("interval trace lost all samples")
        inc = np.angle(dets[1:] / dets[:-1])
        bad = np.abs(inc) > PHASE_GAP_TARGET
        if not np.any(bad):
            break
        left = lams[:-1][bad]
        right = lams[1:][bad]
        new = 0.5 * (left + right)
        new = new[(new > lams[0]) & (new < lams[-1])]
        # drop midpoints that no longer split anything at float resolution
        keep = (new - left > 0) & (right - new > 0)
        new = np.unique(new[keep])
        if new.size == 0:
            raise PhaseJumpTooLarge(
                f"unresolvable phase jump inside ({a:.6g}, {b:.6g})"
            )
        total += new.size
        if total > MAX_TRACE_SAMPLES:
            raise RefinementBudgetExceeded(
                f"phase refinement on ({a:.6g}, {b:.6g}) exceeded "
                f"{MAX_TRACE_SAMPLES} samples"
            )
        new_dets = _det_samples(model, new, js)
        lams = np.concatenate([lams, new])
        order = np.argsort(lams)
        lams = lams[order]
        dets = np.concatenate([dets, new_dets])[order]

    return PhaseTrace(
        a=a,
        b=b,
        open_channels=js,
        lams=lams,
        dets=dets,
        skipped=tuple(skipped),
        notes=tuple(notes),
    )


def var_det_s(model: Model, base_points: int = 128):
    """Total clockwise winding of det S over the whole spectrum, plus the
    per-interval traces it came from."""
    cuts = model.threshold_energies()
    traces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        a, b = float(a), float(b)
        if b - a < 1e-12:
            continue
        js = model.open_channels(0.5 * (a + b))
        if not js:
            continue
        resonances, notes = _interval_resonances(model, a, b, js)
        seeds = (
            np.concatenate([_resonance_samples(e, w, a, b) for e, w in resonances])
            if resonances
            else None
        )
        traces.append(
            interval_phase_trace(
                model, a, b, base_points=base_points, seeds=seeds, notes=tuple(notes)
            )
        )
    return float(sum(t.variation for t in traces)), traces


# -- vertical-edge (threshold) contributions --------------------------------

_ETA_PIECE_EXPECTED = {
    ThresholdClass.PLUS_ONE: 0.0,
    ThresholdClass.PLUS_IDENTITY2: 0.0,
    ThresholdClass.MINUS_ONE: 0.5,
    ThresholdClass.REFLECTION: 0.5,
    ThresholdClass.MINUS_IDENTITY2: 1.0,
}


def eta_piece_expected(classification: ThresholdClass) -> float:
    """Closed-form winding of one threshold's vertical edge."""
    try:
        return _ETA_PIECE_EXPECTED[classification]
    except KeyError:
        raise ValueError(
            f"no generic vertical edge for class {classification.value}; "
            "coinciding thresholds take the six-edge route"
        ) from None


def eta_piece_winding(limit: ThresholdLimit, points: int = 4001) -> float:
    """Numeric winding of ``det(1 + (1 - eta)/2 * (S_thr - 1))`` along the
    vertical edge attached to one threshold side.

    Lower thresholds use ``eta_minus`` traversed from +inf to -inf; upper
    thresholds use ``eta_plus`` traversed from -inf to +inf.  Coinciding
    (intricate) classes are rejected: their edges only close up inside the
    six-edge contour.
    """
    from .special import eta_minus, eta_plus

    if limit.classification not in _ETA_PIECE_EXPECTED:
        raise ValueError(
            f"class {limit.classification.value} has no standalone edge"
        )
    s = np.linspace(-40.0, 40.0, points)
    if limit.side == "lower":
        eta = eta_minus(s)[::-1]
    elif limit.side == "upper":
        eta = eta_plus(s)
    else:
        raise ValueError(f"unknown side {limit.side!r}")
    mat = np.asarray(limit.matrix, dtype=complex)
    d = mat.shape[0]
    eye = np.eye(d, dtype=complex)
    z = (1.0 - eta)[:, None, None] / 2.0
    sym = eye[None, :, :] + z * (mat - eye)[None, :, :]
    dets = np.linalg.det(sym)
    return arg_variation(dets)


# -- contour bookkeeping -----------------------------------------------------

@dataclass(frozen=True)
class ContourEdge:
    """One edge of the rectangular comb enclosing the spectrum.

    kind: "down" (vertical edge at a lower threshold), "up" (vertical edge at
    an upper threshold), or "across" (horizontal edge between consecutive
    thresholds).  ``level_k`` tags vertical edges; ``span`` tags horizontal
    ones.
    """

    kind: str
    level_k: int | None = None
    span: tuple[float, float] | None = None


def comb_edges(model: Model) -> list[ContourEdge]:
    """Ordered edges of the spectral contour.

    Generic models alternate down / across / up around each band overlap; at
    a coinciding threshold (loop flux 0, even ring) the horizontal edge
    between the two middle thresholds degenerates to a point and is omitted,
    which is exactly where the six-edge patch takes over.
    """
    cuts = [float(c) for c in model.threshold_energies()]
    edges: list[ContourEdge] = []
    by_energy: dict[float, list] = {}
    for t in model.thresholds:
        by_energy.setdefault(round(t.energy, 12), []).append(t)

    for idx, e in enumerate(cuts):
        for t in by_energy[round(e, 12)]:
            kind = "down" if t.side == "lower" else "up"
            edges.append(ContourEdge(kind=kind, level_k=t.k))
        if idx + 1 < len(cuts):
            a, b = e, cuts[idx + 1]
            if b - a > 1e-12 and model.open_channels(0.5 * (a + b)):
                edges.append(ContourEdge(kind="across", span=(a, b)))
    return edges


# -- the counting identity ---------------------------------------------------

@dataclass
class LevinsonReport:
    """Everything needed to state the counting identity for one model."""

    n: int
    theta: float
    v: tuple[float, ...]
    intricate: bool
    alpha: int
    thresholds: list[ThresholdLimit]
    correction_c: int
    var_det_s: float
    traces: list[PhaseTrace]
    discrete: BoundStateSummary
    embedded: BoundStateSummary
    oracle_total: int | None
    lhs: float
    residual: float
    warnings: list[str] = field(default_factory=list)

    @property
    def bound_total(self) -> int:
        return self.discrete.total + self.embedded.total

    def identity_holds(self, tol: float = 1e-2) -> bool:
        return abs(self.residual) < tol


def correction_count(limits) -> int:
    """C: total exceptional weight over all (threshold, side) pairs."""
    return int(sum(l.correction_weight for l in limits))


def simple_channel_correction(limits) -> int:
    """The same count written channel-by-channel, only valid when every
    level is simple (no two ring momenta share a dispersion curve): each
    one-channel threshold side contributes 1 exactly when its limit is +1."""
    for l in limits:
        if l.matrix.shape[0] != 1:
            raise ValueError(
                "channel-resolved count requires simple levels only"
            )
    return sum(1 for l in limits if l.classification is ThresholdClass.PLUS_ONE)


def levinson_report(
    model: Model,
    include_oracle: bool = True,
    oracle_layers: int = 600,
    base_points: int = 128,
) -> LevinsonReport:
    """Assemble and check the counting identity for one model.

    Raises UnclassifiedThresholdError if any threshold limit fails to match
    a known class; raises ExtrapolationDiverged / RefinementBudgetExceeded
    from the underlying stages.  A nonzero residual is reported as-is.
    """
    warnings: list[str] = []
    limits = all_threshold_limits(model)
    unknown = [l for l in limits if l.classification is ThresholdClass.UNCLASSIFIED]
    if unknown:
        locs = ", ".join(f"(level {l.k}, {l.side})" for l in unknown)
        raise UnclassifiedThresholdError(f"unclassified threshold limits: {locs}")

    c_count = correction_count(limits)
    var, traces = var_det_s(model, base_points=base_points)
    for t in traces:
        if t.skipped:
            warnings.append(
                f"dropped {len(t.skipped)} non-invertible sample(s) in "
                f"({t.a:.6g}, {t.b:.6g})"
            )
        warnings.extend(t.notes)

    discrete, embedded = bound_state_census(model)
    warnings.extend(discrete.warnings)
    warnings.extend(embedded.warnings)
    bound_total = discrete.total + embedded.total

    oracle_total = None
    if include_oracle:
        from .bound_states import census_crosscheck

        oracle = census_crosscheck(
            model, discrete.states + embedded.states, base_layers=oracle_layers
        )
        oracle_total = oracle.total
        warnings.extend(oracle.warnings)
        if oracle_total != bound_total:
            warnings.append(
                f"resolvent census ({bound_total}) and lattice oracle "
                f"({oracle_total}) disagree"
            )

    half = 0.5 if model.intricate.is_intricate else 0.0
    lhs = var + model.n - 0.5 * c_count - half
    residual = lhs - bound_total
    return LevinsonReport(
        n=model.n,
        theta=model.theta,
        v=model.params.v,
        intricate=model.intricate.is_intricate,
        alpha=model.intricate.alpha,
        thresholds=limits,
        correction_c=c_count,
        var_det_s=var,
        traces=traces,
        discrete=discrete,
        embedded=embedded,
        oracle_total=oracle_total,
        lhs=lhs,
        residual=residual,
        warnings=warnings,
    )
