"""On-shell scattering matrix, threshold limits and their classification.

At energy ``lam`` inside the essential spectrum the scattering matrix acts on
the open channels (those whose band strictly contains ``lam``).  In the
normalized channel basis it is assembled from the inverted boundary-coupled
matrix ``M = B(lam + i0)^{-1}`` as

    S(lam)[a, b] = delta_ab - (2i/n) * (Y_a^* M Y_b) / (beta_a * beta_b),

where ``Y_j = vhalf * xi_j`` and ``beta_j = |(lam - center_j)**2 - 4|**(1/4)``.
The constant ``-2i`` is pinned by three independent requirements: exact
unitarity, the generic band-edge limit ``-1`` of diagonal entries, and the
``-i`` / ``+i`` limits at the doubly degenerate threshold of an intricate
model.  One-sided limits at band edges are computed by Richardson
extrapolation in ``sqrt(eps)`` and classified against the small set of
canonical forms a threshold limit can take: ``+/-1`` for simple levels,
``+/-identity`` or a reflection ``[[a, b], [conj(b), -a]]`` (``a`` real,
``a**2 + |b|**2 = 1``) for doubly degenerate levels, and ``-i`` / ``+i`` at
the coinciding threshold of an intricate model.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import Model
from .resolvent import (
    Energy,
    NonInvertibleError,
    ThresholdEnergyError,
    bs_matrix_batch,
    m_matrix,
)

CLASSIFY_TOL = 1e-4

# Richardson ladder: eps_m = EXTRAP_EPS0 * 4**-m, m = 0..EXTRAP_STEPS-1.
EXTRAP_EPS0 = 1e-3
EXTRAP_STEPS = 7
EXTRAP_RESID_LIMIT = 1e-5


class UnclassifiedThresholdError(ValueError):
    """A threshold limit matched none of the canonical forms."""


class ExtrapolationDiverged(ArithmeticError):
    """The Richardson tableau did not stabilize."""


class ThresholdClass(enum.Enum):
    PLUS_ONE = "PlusOne"
    MINUS_ONE = "MinusOne"
    PLUS_IDENTITY2 = "PlusIdentity2"
    MINUS_IDENTITY2 = "MinusIdentity2"
    REFLECTION = "Reflection"
    INTRICATE_PLUS_I = "IntricatePlusI"
    INTRICATE_MINUS_I = "IntricateMinusI"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class ScatteringSample:
    lam: float
    open_channels: tuple[int, ...]
    matrix: np.ndarray
    unitarity_defect: float


@dataclass(frozen=True)
class ThresholdLimit:
    k: int
    side: str
    energy: float
    matrix: np.ndarray  # 1x1 or 2x2 compressed limit
    classification: ThresholdClass
    extrap_residual: float
    reflection_a: float | None = None
    reflection_b: complex | None = None

    @property
    def correction_weight(self) -> int:
        """Contribution to the threshold-count correction term."""
        return {
            ThresholdClass.PLUS_ONE: 1,
            ThresholdClass.PLUS_IDENTITY2: 2,
            ThresholdClass.REFLECTION: 1,
        }.get(self.classification, 0)


def betas(model: Model, lam, js) -> np.ndarray:
    """Band-edge scale factors ``|(lam - center_j)**2 - 4|**0.25``."""
    lam = np.asarray(lam, dtype=float)
    cen = model.centers[np.asarray(js, dtype=int) - 1]
    x = lam[..., None] - cen if lam.ndim else lam - cen
    return np.abs(x**2 - 4.0) ** 0.25


def s_matrix(model: Model, lam: float) -> ScatteringSample:
    """Scattering matrix on the open channels at one energy."""
    lam = float(lam)
    js = model.open_channels(lam)
    if not js:
        raise ThresholdEnergyError(f"no open channel at {lam}; energy outside the spectrum")
    if np.any(np.abs(np.abs(lam - model.centers) - 2.0) == 0.0):
        raise ThresholdEnergyError(f"{lam} is a threshold energy")
    m = m_matrix(model, Energy.plus(lam))
    s = _compress(model, lam, js, m)
    return ScatteringSample(lam, tuple(js), s, unitarity_defect(s))


def _compress(model: Model, lam: float, js, m: np.ndarray) -> np.ndarray:
    yo = model.boundary_vectors[:, np.asarray(js, dtype=int) - 1]
    core = yo.conj().T @ m @ yo / model.n
    bet = betas(model, lam, js)
    s = -2j * core / np.outer(bet, bet)
    s[np.diag_indices_from(s)] += 1.0
    return s


def s_matrix_batch(model: Model, lams: np.ndarray, js) -> np.ndarray:
    """Stack of compressed scattering matrices over energies in one
    inter-threshold interval (shared open-channel set ``js``).

    No invertibility guard here; callers handle non-finite rows.
    """
    lams = np.asarray(lams, dtype=float)
    b = bs_matrix_batch(model, lams, "plus")
    m = np.linalg.inv(b)
    yo = model.boundary_vectors[:, np.asarray(js, dtype=int) - 1]
    core = np.einsum("ka,lkm,mb->lab", yo.conj(), m, yo) / model.n
    bet = betas(model, lams, js)
    s = -2j * core / (bet[:, :, None] * bet[:, None, :])
    d = len(js)
    s[:, np.arange(d), np.arange(d)] += 1.0
    return s


def unitarity_defect(s: np.ndarray) -> float:
    d = s.shape[-1]
    return float(np.abs(s @ s.conj().swapaxes(-1, -2) - np.eye(d)).max())


def unitarity_defect_batch(s: np.ndarray) -> np.ndarray:
    g = np.einsum("lab,lcb->lac", s, s.conj())
    g[:, np.arange(s.shape[-1]), np.arange(s.shape[-1])] -= 1.0
    return np.abs(g).max(axis=(1, 2))


# -- threshold limits ---------------------------------------------------------


def threshold_limit(model: Model, level_k: int, side: str) -> ThresholdLimit:
    """One-sided limit of the level-compressed scattering matrix at a band edge.

    Samples ``S`` at ``energy + eps`` (side="lower", channel opening) or
    ``energy - eps`` (side="upper", channel closing) over a geometric ladder
    and Richardson-extrapolates in ``sqrt(eps)``.  The ladder start shrinks
    when another threshold is nearby.
    """
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    level = model.levels[level_k - 1]
    energy = level.value - 2.0 if side == "lower" else level.value + 2.0
    sgn = 1.0 if side == "lower" else -1.0

    others = [t.energy for t in model.thresholds if abs(t.energy - energy) > 1e-9]
    gap = min((abs(t - energy) for t in others), default=4.0)
    eps_base = min(EXTRAP_EPS0, gap / 8.0)

    # The sqrt(eps) expansion converges only inside the distance to the
    # nearest resonance or eigenvalue; when the tableau stalls, restart the
    # ladder closer to the edge.
    limit = resid = None
    for attempt in range(4):
        eps0 = eps_base / 16.0**attempt
        eps = eps0 * 4.0 ** -np.arange(EXTRAP_STEPS)
        lams = energy + sgn * eps
        js = model.open_channels(lams[0])
        rows = [js.index(j) for j in level.channels]
        samples = s_matrix_batch(model, lams, js)[:, rows][:, :, rows]
        if not np.all(np.isfinite(samples)):
            continue
        limit, resid = _richardson(samples)
        if np.isfinite(resid) and resid <= EXTRAP_RESID_LIMIT:
            break
    if limit is None or not np.isfinite(resid) or resid > EXTRAP_RESID_LIMIT:
        fallback = (None, None)
        if len(level.channels) == 1:
            fallback = _cayley_edge_limit(model, level, energy, sgn, eps_base)
        if fallback[0] is None:
            raise ExtrapolationDiverged(
                f"threshold limit at level {level_k} ({side}) not stabilizing: "
                f"residual {float('nan') if resid is None else resid:.2e}"
            )
        limit, resid = fallback

    allow_intricate = (
        model.intricate.is_intricate
        and any(t.k == level_k and t.side == side and t.partner for t in model.thresholds)
    )
    cls, refl_a, refl_b = _classify(limit, allow_intricate)
    return ThresholdLimit(
        k=level_k,
        side=side,
        energy=energy,
        matrix=limit,
        classification=cls,
        extrap_residual=float(resid),
        reflection_a=refl_a,
        reflection_b=refl_b,
    )


def _richardson(samples: np.ndarray) -> tuple[np.ndarray, float]:
    """Extrapolate a sequence sampled at eps_m = eps0/4**m to eps -> 0.

    The entries expand in powers of sqrt(eps), so with h = sqrt(eps) this is
    a classic Neville tableau with step ratio 2.
    """
    tableau = [samples.astype(complex)]
    for k in range(1, len(samples)):
        prev = tableau[-1]
        fac = 2.0**k
        tableau.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    limit = tableau[-1][0]
    resid = float(np.abs(limit - tableau[-2][0]).max()) if len(samples) > 1 else np.inf
    return limit, resid


def _cayley_edge_limit(model: Model, level, energy: float, sgn: float, eps_base: float):
    """Rescue for a one-channel limit with an accidentally weak edge coupling.

    The approach to the limit is a Moebius function of sqrt(eps) whose
    crossover sits at eps ~ (c/a)^2; when the effective coupling c is tiny no
    representable ladder gets past it.  The ratio
    u = sqrt(eps) * i (1 - s)/(1 + s) tends to c/a with an O(1) convergence
    radius instead, so its tableau stabilizes at moderate depth: u bounded
    away from zero forces the limit -1, while a vanishing u hands over to the
    finite Cayley transform of s for the remaining classes.
    """
    eps = (eps_base / 16.0) * 4.0 ** -np.arange(EXTRAP_STEPS)
    lams = energy + sgn * eps
    js = model.open_channels(lams[0])
    rows = [js.index(j) for j in level.channels]
    s = s_matrix_batch(model, lams, js)[:, rows][:, :, rows][:, 0, 0]
    if not np.all(np.isfinite(s)) or np.any(np.abs(1.0 + s) < 1e-14):
        return None, None
    w = 1j * (1.0 - s) / (1.0 + s)
    u_lim, u_resid = _richardson(np.sqrt(eps) * w)
    if np.isfinite(u_resid) and u_resid <= 1e-6 + 1e-3 * abs(u_lim) and abs(u_lim) > 1e-5:
        return np.array([[-1.0 + 0j]]), float(u_resid)
    w_lim, w_resid = _richardson(w)
    if np.isfinite(w_resid) and w_resid <= 1e-4 and abs(1j + w_lim) > 1e-6:
        return np.array([[(1j - w_lim) / (1j + w_lim)]]), float(w_resid)
    return None, None


def _classify(mat: np.ndarray, allow_intricate: bool):
    dim = mat.shape[0]
    tol = CLASSIFY_TOL
    if dim == 1:
        x = complex(mat[0, 0])
        if abs(x - 1.0) < tol:
            return ThresholdClass.PLUS_ONE, None, None
        if abs(x + 1.0) < tol:
            return ThresholdClass.MINUS_ONE, None, None
        if allow_intricate and abs(x - 1j) < tol:
            return ThresholdClass.INTRICATE_PLUS_I, None, None
        if allow_intricate and abs(x + 1j) < tol:
            return ThresholdClass.INTRICATE_MINUS_I, None, None
        return ThresholdClass.UNCLASSIFIED, None, None
    if dim == 2:
        eye = np.eye(2)
        if np.abs(mat - eye).max() < tol:
            return ThresholdClass.PLUS_IDENTITY2, None, None
        if np.abs(mat + eye).max() < tol:
            return ThresholdClass.MINUS_IDENTITY2, None, None
        a = float(mat[0, 0].real)
        b = complex(mat[0, 1])
        ok = (
            abs(mat[0, 0].imag) < tol
            and abs(mat[1, 1] + mat[0, 0]) < tol
            and abs(mat[1, 0] - np.conj(mat[0, 1])) < tol
            and abs(a * a + abs(b) ** 2 - 1.0) < tol
        )
        if ok:
            return ThresholdClass.REFLECTION, a, b
        return ThresholdClass.UNCLASSIFIED, None, None
    return ThresholdClass.UNCLASSIFIED, None, None


def all_threshold_limits(model: Model) -> list[ThresholdLimit]:
    """Limits for every (level, side) pair, ascending level, lower first."""
    out = []
    for lev in model.levels:
        for side in ("lower", "upper"):
            out.append(threshold_limit(model, lev.k, side))
    return out


# -- continuity diagnostic ----------------------------------------------------


@dataclass(frozen=True)
class ContinuityRecord:
    j: int
    j_other: int
    endpoint: float
    distances: tuple[float, ...]
    magnitudes: tuple[float, ...]
    fitted_exponent: float

    @property
    def decays(self) -> bool:
        # The vanishing rate forced by the S assembly is eps**(1/4); accept a
        # fitted exponent in a generous band around it and a decreasing tail.
        tail_drops = self.magnitudes[-1] < 0.5 * self.magnitudes[0] + 1e-12
        return tail_drops and 0.1 < self.fitted_exponent < 0.6


def algebra_continuity_check(model: Model, distances=None) -> list[ContinuityRecord]:
    """Verify decay of off-diagonal channel entries at band-intersection ends.

    For channels with different bands, the (j, j') entry must vanish at both
    endpoints of the band intersection.  The decay is measured on a geometric
    ladder of distances and summarized by a fitted power law; the exponent is
    1/4 (the closing channel's ``beta`` factor).  Diagnostic only.
    """
    if distances is None:
        distances = tuple(10.0 ** -np.arange(2, 11))
    records: list[ContinuityRecord] = []
    n = model.n
    for ja in range(1, n + 1):
        for jb in range(ja + 1, n + 1):
            ca, cb = model.centers[ja - 1], model.centers[jb - 1]
            if abs(ca - cb) <= 1e-12 or abs(ca - cb) >= 4.0:
                continue  # same band, or disjoint bands: nothing to check
            lo, hi = max(ca, cb) - 2.0, min(ca, cb) + 2.0
            for endpoint, sgn in ((lo, 1.0), (hi, -1.0)):
                mags = []
                for d in distances:
                    lam = endpoint + sgn * d
                    js = model.open_channels(lam)
                    if ja not in js or jb not in js:
                        mags.append(np.nan)
                        continue
                    s = s_matrix_batch(model, np.array([lam]), js)[0]
                    mags.append(float(abs(s[js.index(ja), js.index(jb)])))
                mags = np.asarray(mags)
                good = np.isfinite(mags) & (mags > 0)
                if good.sum() >= 3:
                    slope = np.polyfit(np.log(np.asarray(distances)[good]), np.log(mags[good]), 1)[0]
                else:
                    slope = np.nan
                records.append(
                    ContinuityRecord(
                        j=ja,
                        j_other=jb,
                        endpoint=endpoint,
                        distances=tuple(distances),
                        magnitudes=tuple(float(x) for x in mags),
                        fitted_exponent=float(slope),
                    )
                )
    return records


def s_matrix_safe(model: Model, lam: float) -> ScatteringSample | None:
    """Like :func:`s_matrix` but returns None where the inverse is unreliable
    (candidate embedded eigenvalue)."""
    try:
        return s_matrix(model, lam)
    except NonInvertibleError:
        return None
