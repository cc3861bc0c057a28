"""Six-edge contour replacing the pinch at a coinciding threshold.

When the loop flux vanishes on an even ring, the top of the lowest band and
the bottom of the highest band meet at energy 0.  The rectangular comb
contour degenerates there; the fix is a hexagonal patch whose six edges carry
a 4x4 symbol built from the two extreme channels, each doubled:

    edge 1   both diagonal entries swept upward in tandem (lam, lam + 4)
    edge 2   unimodular interpolation, eta_minus flavor, traversed inward
    edge 3   constant corner connector
    edge 4   unimodular interpolation, eta_plus flavor, traversed outward
    edge 5   both diagonal entries swept downward in tandem
    edge 6   constant-determinant connector closing the loop

The diagonal 2x2 blocks mix each channel's two copies; for a pair of
boundary vectors that are parallel (the "intricate" case) the off-diagonal
blocks carry the Fourier factor ``psi`` and the determinant of every edge
collapses to a short closed form, tabulated by the signs of the outermost
band-edge limits.  All matrices here are built from numerically extrapolated
boundary constants; the tabulated patterns are checked against them, not
assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Model
from .scattering import (
    ThresholdClass,
    ThresholdLimit,
    _richardson,
    s_matrix_batch,
    threshold_limit,
)
from .special import eta_minus, eta_plus, phi_symbol, psi, sech
from .winding import arg_variation

# tanh(16) is within 2.3e-14 of 1, yet still strictly below it in float64;
# larger cutoffs would park samples exactly on the threshold.
PARAM_CUTOFF = 16.0
PATTERN_TOL = 1e-4
VERTEX_TOL = 1e-6
PHASE_GAP_TARGET = 0.1
EDGE_BUDGET = 300_000

_OFF_UPPER = np.array([[-1.0, 1.0], [-1.0, 1.0]])
_OFF_LOWER = np.array([[-1.0, -1.0], [1.0, 1.0]])


class HexagonDomainError(ValueError):
    """The six-edge contour only exists at zero flux on an even ring."""


@dataclass(frozen=True)
class HexagonConstants:
    """One-sided boundary values feeding the edge matrices."""

    s_low_m4: complex   # lowest channel at the bottom of its band
    s_low_0: complex    # lowest channel at the coinciding threshold (from below)
    s_up_0: complex     # highest channel at the coinciding threshold (from above)
    s_up_4: complex     # highest channel at the top of its band
    s_mid_low: complex  # lowest channel at band midpoint -2
    s_mid_high: complex # highest channel at band midpoint +2
    cls_low_m4: ThresholdClass
    cls_low_0: ThresholdClass
    cls_up_0: ThresholdClass
    cls_up_4: ThresholdClass
    alpha: int

    @property
    def s_half_plus(self) -> complex:
        return 0.5 * (self.s_low_0 + self.s_low_m4)

    @property
    def s_half_minus(self) -> complex:
        return 0.5 * (self.s_low_0 - self.s_low_m4)

    @property
    def s_n_plus(self) -> complex:
        return 0.5 * (self.s_up_4 + self.s_up_0)

    @property
    def s_n_minus(self) -> complex:
        return 0.5 * (self.s_up_4 - self.s_up_0)


@dataclass
class EdgeTrace:
    """One edge sampled in traversal order."""

    name: str
    params: np.ndarray       # edge parameter, +/-inf marks formal endpoints
    mats: np.ndarray         # (L, 4, 4)
    dets: np.ndarray         # (L,)

    @property
    def start(self) -> np.ndarray:
        return self.mats[0]

    @property
    def end(self) -> np.ndarray:
        return self.mats[-1]


@dataclass
class HexagonSymbol:
    model: Model
    constants: HexagonConstants
    edges: dict[str, EdgeTrace]
    warnings: list[str] = field(default_factory=list)

    ORDER = ("edge1", "edge2", "edge3", "edge4", "edge5", "edge6")

    def vertex_gap(self) -> float:
        """Largest mismatch between consecutive edge endpoints (cyclic)."""
        gaps = []
        for a, b in zip(self.ORDER, self.ORDER[1:] + self.ORDER[:1]):
            gaps.append(float(np.abs(self.edges[a].end - self.edges[b].start).max()))
        return max(gaps)


@dataclass
class HexagonWinding:
    winding: float
    case_label: str
    sigma_low: int
    sigma_high: int
    pattern_residual: float
    det_formula_residual: float
    unimodularity_defect: float
    vertex_gap: float
    warnings: list[str] = field(default_factory=list)

    @property
    def nearest_int(self) -> int:
        return int(round(self.winding))

    @property
    def integrality_gap(self) -> float:
        return abs(self.winding - round(self.winding))


# -- diagonal entries of the compressed scattering matrix ---------------------


def _diag_entry(model: Model, lams: np.ndarray, channel_j: int) -> np.ndarray:
    """S[j, j] over energies inside channel j's band; other channels may open
    and close across the range, so samples are grouped by open-channel set.
    Samples landing exactly on a foreign threshold are nudged off it."""
    lams = np.array(lams, dtype=float, copy=True)
    thr = model.threshold_energies()
    near = np.abs(lams[:, None] - thr[None, :]).min(axis=1) < 1e-12
    lams[near] += 1e-9

    out = np.empty(lams.size, dtype=complex)
    groups: dict[tuple, list[int]] = {}
    for i, lam in enumerate(lams):
        groups.setdefault(tuple(model.open_channels(lam)), []).append(i)
    for js, idx in groups.items():
        if channel_j not in js:
            raise ValueError(
                f"channel {channel_j} closed at {lams[idx[0]]}; outside its band"
            )
        pos = js.index(channel_j)
        s = s_matrix_batch(model, lams[idx], list(js))
        out[idx] = s[:, pos, pos]
    return out


def _one_sided_constant(model: Model, channel_j: int, x0: float, sgn: float):
    """Richardson limit of the channel diagonal entry as lam -> x0 from the
    sgn side; same sqrt(eps) ladder (with shrink-and-retry) as the threshold
    limits."""
    thr = model.threshold_energies()
    others = thr[np.abs(thr - x0) > 1e-9]
    gap = float(np.abs(others - x0).min()) if others.size else 4.0
    eps_base = min(1e-3, gap / 8.0)
    limit, resid = None, np.inf
    for attempt in range(4):
        eps = (eps_base / 16.0**attempt) * 4.0 ** -np.arange(7)
        vals = _diag_entry(model, x0 + sgn * eps, channel_j)
        if not np.all(np.isfinite(vals)):
            continue
        limit, resid = _richardson(vals[:, None, None])
        if np.isfinite(resid) and resid <= 1e-5:
            break
    if limit is None:
        raise ArithmeticError(f"one-sided entry at {x0} did not stabilize")
    return complex(limit[0, 0]), float(resid)


def _mid_constant(model: Model, channel_j: int, x0: float, warnings: list[str]):
    """Channel diagonal entry at a band midpoint.  For rings divisible by 4
    the midpoint coincides with an interior threshold, so the value is taken
    as the two-sided Richardson limit (the sides must agree)."""
    below, r1 = _one_sided_constant(model, channel_j, x0, -1.0)
    above, r2 = _one_sided_constant(model, channel_j, x0, +1.0)
    if abs(below - above) > 2e-3:
        warnings.append(
            f"channel {channel_j} entry discontinuous across {x0:+g}: "
            f"{below:.6f} vs {above:.6f}"
        )
    return 0.5 * (below + above), max(r1, r2)


# -- edge matrices -------------------------------------------------------------


def _eta_block(s_plus: complex, s_minus: complex, eta: np.ndarray) -> np.ndarray:
    """(L, 2, 2) diagonal block [[a, b], [b, a]] with
    a = (1 + s_plus - eta*s_minus)/2, b = (eta*(1 - s_plus) + s_minus)/2."""
    eta = np.asarray(eta, dtype=complex)
    a = 0.5 * (1.0 + s_plus - eta * s_minus)
    b = 0.5 * (eta * (1.0 - s_plus) + s_minus)
    out = np.empty(eta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 1, 1] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = b
    return out


def _tent_block(s: np.ndarray, opening: bool) -> np.ndarray:
    """Diagonal block on the sweeping edges: [[1+s, s-1], [s-1, 1+s]]/2 on the
    upward sweep (opening=True), [[1+s, 1-s], [1-s, 1+s]]/2 downward."""
    s = np.asarray(s, dtype=complex)
    off = 0.5 * (s - 1.0) if opening else 0.5 * (1.0 - s)
    out = np.empty(s.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = 0.5 * (1.0 + s)
    out[..., 1, 1] = 0.5 * (1.0 + s)
    out[..., 0, 1] = off
    out[..., 1, 0] = off
    return out


def _edge6_block(s_const: complex, phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    out = np.empty(phi.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = 0.5 * (1.0 + s_const)
    out[..., 1, 1] = 0.5 * (1.0 + s_const)
    out[..., 0, 1] = 0.5 * phi * (s_const - 1.0)
    out[..., 1, 0] = 0.5 * np.conj(phi) * (s_const - 1.0)
    return out


def _assemble(low_blk: np.ndarray, high_blk: np.ndarray, c, d) -> np.ndarray:
    """Stack 2x2 blocks into the patterned 4x4 edge matrix."""
    length = low_blk.shape[0]
    out = np.zeros((length, 4, 4), dtype=complex)
    out[:, :2, :2] = low_blk
    out[:, 2:, 2:] = high_blk
    c = np.asarray(c, dtype=complex).reshape(length, 1, 1)
    d = np.asarray(d, dtype=complex).reshape(length, 1, 1)
    out[:, :2, 2:] = c * _OFF_UPPER
    out[:, 2:, :2] = d * _OFF_LOWER
    return out


def _off_coeffs(alpha: int, args: np.ndarray):
    """Off-diagonal scalars c (upper right) and d (lower left)."""
    scale = alpha / (2.0 * math.sqrt(2.0 * math.pi))
    pbar = np.conj(psi(args))
    return (1.0 + 1j) * scale * pbar, (1.0 - 1j) * scale * pbar


def _refine_edge(params: np.ndarray, eval_fn) -> tuple[np.ndarray, np.ndarray]:
    """Insert parameter midpoints until det phase gaps drop below target.
    params must be finite, strictly ascending."""
    mats = eval_fn(params)
    total = params.size
    while True:
        dets = np.linalg.det(mats)
        inc = np.angle(dets[1:] / dets[:-1])
        bad = np.abs(inc) > PHASE_GAP_TARGET
        if not np.any(bad):
            return params, mats
        mid = 0.5 * (params[:-1][bad] + params[1:][bad])
        keep = (mid > params[:-1][bad]) & (mid < params[1:][bad])
        mid = np.unique(mid[keep])
        if mid.size == 0:
            raise ArithmeticError("edge phase jump unresolvable at float resolution")
        total += mid.size
        if total > EDGE_BUDGET:
            raise ArithmeticError(f"edge refinement exceeded {EDGE_BUDGET} samples")
        new = eval_fn(mid)
        params = np.concatenate([params, mid])
        order = np.argsort(params)
        params = params[order]
        mats = np.concatenate([mats, new], axis=0)[order]


def _ladder(lo: float, hi: float, base_points: int) -> np.ndarray:
    """Uniform grid plus geometric approach ladders at both endpoints."""
    span = hi - lo
    offs = []
    off = 1e-9
    while off < span / 4.0:
        offs.append(off)
        off *= 4.0
    offs = np.asarray(offs)
    return np.unique(
        np.concatenate(
            [lo + offs, hi - offs, np.linspace(lo + 0.01 * span, hi - 0.01 * span, base_points)]
        )
    )


def hexagon_symbol(model: Model, base_points: int = 257) -> HexagonSymbol:
    """Build the six sampled edges for a zero-flux even-ring model."""
    n = model.n
    if n % 2 != 0 or min(model.theta, 2.0 * math.pi - model.theta) > 1e-10:
        raise HexagonDomainError(
            "six-edge contour requires an even ring at zero flux"
        )
    if len(model.levels) != n // 2 + 1:
        raise HexagonDomainError(
            "six-edge contour requires the coinciding middle level; the flux "
            "is close enough to zero to pass the gate but still splits it"
        )
    # pick the channels centered at -2 and +2 by value; the channel indices
    # rotate when the flux sits just below 2 pi
    j_low = int(np.argmin(np.abs(model.centers + 2.0))) + 1
    j_high = int(np.argmin(np.abs(model.centers - 2.0))) + 1
    m_levels = len(model.levels)
    warnings: list[str] = []

    lim_low_m4 = threshold_limit(model, 1, "lower")
    lim_low_0 = threshold_limit(model, 1, "upper")
    lim_up_0 = threshold_limit(model, m_levels, "lower")
    lim_up_4 = threshold_limit(model, m_levels, "upper")
    s_mid_low, _ = _mid_constant(model, j_low, -2.0, warnings)
    s_mid_high, _ = _mid_constant(model, j_high, 2.0, warnings)

    const = HexagonConstants(
        s_low_m4=complex(lim_low_m4.matrix[0, 0]),
        s_low_0=complex(lim_low_0.matrix[0, 0]),
        s_up_0=complex(lim_up_0.matrix[0, 0]),
        s_up_4=complex(lim_up_4.matrix[0, 0]),
        s_mid_low=s_mid_low,
        s_mid_high=s_mid_high,
        cls_low_m4=lim_low_m4.classification,
        cls_low_0=lim_low_0.classification,
        cls_up_0=lim_up_0.classification,
        cls_up_4=lim_up_4.classification,
        alpha=model.intricate.alpha,
    )
    alpha = const.alpha

    zero2 = np.zeros(1)

    def sweep_eval(lams: np.ndarray, opening: bool) -> np.ndarray:
        low = _tent_block(_diag_entry(model, lams, j_low), opening)
        high = _tent_block(_diag_entry(model, lams + 4.0, j_high), opening)
        z = np.zeros(lams.size)
        return _assemble(low, high, z, z)

    def eta_eval(xis: np.ndarray, flavor: str) -> np.ndarray:
        if flavor == "plus":
            eta = eta_plus(xis)
            args = -xis
        else:
            eta = -eta_minus(xis)
            args = xis
        low = _eta_block(const.s_half_plus, const.s_half_minus, eta)
        high = _eta_block(const.s_n_plus, const.s_n_minus, eta)
        c, d = _off_coeffs(alpha, args)
        return _assemble(low, high, c, d)

    # edge 1: lam runs -2 -> 0, companion +2 -> +4; vertices are exact
    lams1 = _ladder(-2.0, 0.0, base_points)
    p1, m1 = _refine_edge(lams1, lambda xs: sweep_eval(xs, opening=True))
    v_start1 = _assemble(
        _tent_block(np.array([s_mid_low]), True),
        _tent_block(np.array([s_mid_high]), True),
        zero2,
        zero2,
    )
    v_end1 = _assemble(
        _tent_block(np.array([const.s_low_0]), True),
        _tent_block(np.array([const.s_up_4]), True),
        zero2,
        zero2,
    )
    edge1 = EdgeTrace(
        "edge1",
        np.concatenate([[-2.0], p1, [0.0]]),
        np.concatenate([v_start1, m1, v_end1], axis=0),
        np.array([]),
    )

    # edge 2: eta_minus flavor, traversed from the far end inward (xi inf -> 0)
    xis2 = np.linspace(0.0, PARAM_CUTOFF, base_points)
    p2, m2 = _refine_edge(xis2, lambda xs: eta_eval(xs, "minus"))
    edge2 = EdgeTrace(
        "edge2",
        np.concatenate([[np.inf], p2[::-1]]),
        np.concatenate([eta_eval(np.array([np.inf]), "minus"), m2[::-1]], axis=0),
        np.array([]),
    )

    # edge 3: constant corner connector (eta pinned at +i, psi at 0)
    low3 = _eta_block(const.s_half_plus, const.s_half_minus, np.full(2, 1j))
    high3 = _eta_block(const.s_n_plus, const.s_n_minus, np.full(2, 1j))
    c3, d3 = _off_coeffs(alpha, np.zeros(2))
    edge3 = EdgeTrace("edge3", np.array([0.0, 1.0]), _assemble(low3, high3, c3, d3), np.array([]))

    # edge 4: eta_plus flavor, traversed outward (xi 0 -> inf)
    xis4 = np.linspace(0.0, PARAM_CUTOFF, base_points)
    p4, m4 = _refine_edge(xis4, lambda xs: eta_eval(xs, "plus"))
    edge4 = EdgeTrace(
        "edge4",
        np.concatenate([p4, [np.inf]]),
        np.concatenate([m4, eta_eval(np.array([np.inf]), "plus")], axis=0),
        np.array([]),
    )

    # edge 5: lam runs -4 -> -2, companion 0 -> +2
    lams5 = _ladder(-4.0, -2.0, base_points)
    p5, m5 = _refine_edge(lams5, lambda xs: sweep_eval(xs, opening=False))
    v_start5 = _assemble(
        _tent_block(np.array([const.s_low_m4]), False),
        _tent_block(np.array([const.s_up_0]), False),
        zero2,
        zero2,
    )
    v_end5 = _assemble(
        _tent_block(np.array([s_mid_low]), False),
        _tent_block(np.array([s_mid_high]), False),
        zero2,
        zero2,
    )
    edge5 = EdgeTrace(
        "edge5",
        np.concatenate([[-4.0], p5, [-2.0]]),
        np.concatenate([v_start5, m5, v_end5], axis=0),
        np.array([]),
    )

    # edge 6: s runs +inf -> -inf; phi sweeps -1 -> +1, determinant constant
    svals = np.linspace(-PARAM_CUTOFF, PARAM_CUTOFF, base_points)
    m6 = _assemble(
        _edge6_block(s_mid_low, phi_symbol(svals)),
        _edge6_block(s_mid_high, phi_symbol(svals)),
        np.zeros(svals.size),
        np.zeros(svals.size),
    )
    edge6 = EdgeTrace("edge6", svals[::-1], m6[::-1], np.array([]))

    edges = {}
    for e in (edge1, edge2, edge3, edge4, edge5, edge6):
        e.dets = np.linalg.det(e.mats)
        edges[e.name] = e
    return HexagonSymbol(model=model, constants=const, edges=edges, warnings=warnings)


# -- closed-form determinants and case tables ----------------------------------


def _canonical_value(cls: ThresholdClass) -> complex:
    return {
        ThresholdClass.PLUS_ONE: 1.0 + 0j,
        ThresholdClass.MINUS_ONE: -1.0 + 0j,
        ThresholdClass.INTRICATE_PLUS_I: 1j,
        ThresholdClass.INTRICATE_MINUS_I: -1j,
    }[cls]


def predicted_edge_det(
    edge: str, params: np.ndarray, const: HexagonConstants
) -> np.ndarray:
    """Closed-form determinant along one of the interpolation edges, computed
    from the canonical (classified) boundary values."""
    s_m4 = _canonical_value(const.cls_low_m4)
    s0m = _canonical_value(const.cls_low_0)
    s0p = _canonical_value(const.cls_up_0)
    s_p4 = _canonical_value(const.cls_up_4)
    a2 = const.alpha * const.alpha
    xs = np.asarray(params, dtype=float)
    finite = np.where(np.isfinite(xs), xs, PARAM_CUTOFF * 4.0)
    if edge == "edge4":
        eta = eta_plus(finite)
        four_cd = -1j * a2 * sech(np.pi * finite) * eta_plus(finite)
    elif edge == "edge2":
        eta = -eta_minus(finite)
        four_cd = 1j * a2 * sech(np.pi * finite) * eta_minus(finite)
    elif edge == "edge3":
        eta = np.full(xs.shape, 1j)
        four_cd = np.full(xs.shape, a2, dtype=complex)
    else:
        raise ValueError(f"no closed-form pattern for {edge!r}")
    b_minus_a = 0.5 * ((1.0 - s_m4) * eta - (1.0 + s_m4))
    b_plus_a = 0.5 * ((1.0 - s0m) * eta + (1.0 + s0m))
    f_minus_e = 0.5 * ((1.0 - s0p) * eta - (1.0 + s0p))
    f_plus_e = 0.5 * ((1.0 - s_p4) * eta + (1.0 + s_p4))
    return b_minus_a * f_plus_e * (four_cd + b_plus_a * f_minus_e)


_PLAIN_LABELS = {
    (-1, -1): "i",
    (1, -1): "ii",
    (-1, 1): "iii",
    (1, 1): "ii+iii",
}


def _case_label(const: HexagonConstants) -> tuple[str, int, int]:
    sig1 = 1 if const.cls_low_m4 is ThresholdClass.PLUS_ONE else -1
    sig2 = 1 if const.cls_up_4 is ThresholdClass.PLUS_ONE else -1
    if const.alpha != 0:
        label = "iv" if (sig1, sig2) == (-1, -1) else f"iv({sig1:+d},{sig2:+d})"
    else:
        label = _PLAIN_LABELS[(sig1, sig2)]
    return label, sig1, sig2


def _det4_residual(mats: np.ndarray) -> float:
    """Check sampled matrices against the patterned closed form.

    Applies to the five edges whose off-diagonal 2x2 blocks are real
    multiples of the fixed sign patterns; the phase connector (edge 6) has
    conjugate off-diagonal entries instead and is checked for determinant
    constancy separately.
    """
    from .special import det4_structured

    a = mats[:, 0, 0]
    b = mats[:, 0, 1]
    c = mats[:, 0, 3]
    d = mats[:, 3, 0]
    e = mats[:, 2, 2]
    f = mats[:, 2, 3]
    closed = det4_structured(a, b, c, d, e, f)
    return float(np.abs(np.linalg.det(mats) - closed).max())


def hexagon_winding(model_or_symbol) -> HexagonWinding:
    """Winding of det along the closed six-edge contour, with the measured
    interpolation edges checked pointwise against the tabulated patterns."""
    if isinstance(model_or_symbol, HexagonSymbol):
        symbol = model_or_symbol
    else:
        symbol = hexagon_symbol(model_or_symbol)
    const = symbol.constants
    warnings = list(symbol.warnings)

    dets = np.concatenate([symbol.edges[k].dets for k in HexagonSymbol.ORDER])
    mags = np.abs(dets)
    unimod = float(np.abs(mags - 1.0).max()) if dets.size else 0.0
    winding = arg_variation(dets / mags, require_unimodular=False)

    pattern = 0.0
    for name in ("edge2", "edge3", "edge4"):
        tr = symbol.edges[name]
        pred = predicted_edge_det(name, tr.params, const)
        pattern = max(pattern, float(np.abs(tr.dets - pred).max()))

    det_resid = max(
        _det4_residual(symbol.edges[k].mats) for k in HexagonSymbol.ORDER[:5]
    )
    const_det = const.s_mid_low * const.s_mid_high
    det_resid = max(
        det_resid, float(np.abs(symbol.edges["edge6"].dets - const_det).max())
    )
    label, sig1, sig2 = _case_label(const)
    return HexagonWinding(
        winding=winding,
        case_label=label,
        sigma_low=sig1,
        sigma_high=sig2,
        pattern_residual=pattern,
        det_formula_residual=det_resid,
        unimodularity_defect=unimod,
        vertex_gap=symbol.vertex_gap(),
        warnings=warnings,
    )


# -- mixed-entry limits at the coinciding threshold -----------------------------


@dataclass(frozen=True)
class MixedLimits:
    """One-sided limits of the cross-channel renormalized entries at the
    coinciding threshold of an intricate model."""

    upper: complex
    lower: complex
    predicted_upper: complex
    predicted_lower: complex
    residual_upper: float
    residual_lower: float

    @property
    def max_error(self) -> float:
        return max(
            abs(self.upper - self.predicted_upper),
            abs(self.lower - self.predicted_lower),
        )


def q_limit(model: Model) -> MixedLimits:
    """Mixed-entry limits ``-(1+i) alpha / 2`` (from above) and
    ``(1-i) alpha / 2`` (from below), Richardson-extrapolated."""
    from .resolvent import bs_matrix_batch
    from .scattering import betas

    if not model.intricate.is_intricate:
        raise HexagonDomainError("mixed-entry limits require an intricate model")
    n = model.n
    alpha = model.intricate.alpha
    y_low = model.boundary_vectors[:, n // 2 - 1]
    y_high = model.boundary_vectors[:, n - 1]

    thr = model.threshold_energies()
    others = thr[np.abs(thr) > 1e-9]
    gap = float(np.abs(others).min()) if others.size else 4.0
    eps_base = min(1e-3, gap / 8.0)

    def mixed(lams: np.ndarray, bra: np.ndarray, ket: np.ndarray, j_closed: int):
        b = bs_matrix_batch(model, lams, "plus")
        m = np.linalg.inv(b)
        core = np.einsum("k,lkm,m->l", bra.conj(), m, ket) / n
        return core / betas(model, lams, [j_closed])[:, 0] ** 2

    def extrapolate(sgn: float, bra, ket, j_closed):
        limit, resid = None, np.inf
        for attempt in range(4):
            eps = (eps_base / 16.0**attempt) * 4.0 ** -np.arange(7)
            vals = mixed(sgn * eps, bra, ket, j_closed)
            if not np.all(np.isfinite(vals)):
                continue
            limit, resid = _richardson(vals[:, None, None])
            if np.isfinite(resid) and resid <= 1e-5:
                break
        if limit is None:
            raise ArithmeticError("mixed-entry limit did not stabilize")
        return limit, resid

    up, r_up = extrapolate(+1.0, y_low, y_high, n // 2)
    lo, r_lo = extrapolate(-1.0, y_high, y_low, n)
    return MixedLimits(
        upper=complex(up[0, 0]),
        lower=complex(lo[0, 0]),
        predicted_upper=-(1.0 + 1j) * alpha / 2.0,
        predicted_lower=(1.0 - 1j) * alpha / 2.0,
        residual_upper=float(r_up),
        residual_lower=float(r_lo),
    )
