"""Bound states: kernel energies of the boundary-coupled matrix, and an
independent truncated-lattice oracle.

Discrete eigenvalues (outside the essential spectrum) are zeros of
``det B(w)`` with ``B`` Hermitian there; they are located by a sign-change
scan plus a singular-value dip pass that also catches even-multiplicity
zeros.  Embedded eigenvalues (inside a band) are energies where
``B(lam + i0)`` has a kernel whose vectors decouple from every open channel.

The oracle diagonalizes the truncated half-line operator directly: layers
``0..L-1`` with the sqrt(2) first hop, the ring adjacency on each layer, the
potential on layer 0, and a Dirichlet cut at the far end.  An eigenvector
counts as a bound state when the mass in the last 20% of layers is below
1e-6; the count must be stable when L doubles.  Eigenvalues are obtained from
the banded form (bandwidth = ring size), and eigenvectors only for the few
candidate energies, by subspace inverse iteration with banded solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.optimize import minimize_scalar

from .model import Model
from .resolvent import channel_resolvent, bs_matrix_batch

KERNEL_REL_TOL = 1e-8  # singular value < tol * ||B|| counts as kernel
AT_THRESHOLD_TOL = 1e-8
CHANNEL_DECOUPLE_TOL = 1e-6
TAIL_MASS_TOL = 1e-6
ORACLE_MATCH_TOL = 1e-8
ORACLE_CLUSTER_WINDOW = 1e-7
ORACLE_LAYER_CAP = 2400  # deepest box the dense diagonalization may request
TARGETED_LAYER_CAP = 150_000


class NoConvergenceError(RuntimeError):
    """Oracle count failed to stabilize within the allowed doublings."""


@dataclass(frozen=True)
class BoundState:
    energy: float
    multiplicity: int
    kind: str  # "discrete" | "embedded"


@dataclass
class BoundStateSummary:
    states: list[BoundState]
    at_threshold: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(s.multiplicity for s in self.states)


@dataclass
class OracleResult:
    energies: list[float]
    total: int
    layers: int
    warnings: list[str] = field(default_factory=list)


def _bs_outside_batch(model: Model, ws: np.ndarray) -> np.ndarray:
    r = channel_resolvent(ws[:, None].astype(complex) - model.centers[None, :])
    b = np.tensordot(r, model.coupling, axes=(1, 0))
    b += np.diag(model.usign)
    return b


def _near_threshold(model: Model, e: float) -> bool:
    return bool(np.min(np.abs(model.threshold_energies() - e)) < AT_THRESHOLD_TOL)


def find_discrete(model: Model, scan_step: float = 1e-3) -> BoundStateSummary:
    """Eigenvalues outside the essential spectrum via ``det B`` roots.

    Scans both flanks of the spectral hull out to the largest possible
    displacement ``max|v|``, bisects sign changes of the (real) determinant
    to 1e-11, and sweeps the smallest singular value for sign-preserving
    zeros.  Multiplicity is the number of singular values below
    ``1e-8 * ||B||`` at the root.
    """
    lo, hi = model.spectrum_interval()
    margin = float(np.max(np.abs(model.params.v))) + 0.1
    summary = BoundStateSummary(states=[])
    for a, b in ((lo - margin, lo - 1e-9), (hi + 1e-9, hi + margin)):
        count = max(int(np.ceil((b - a) / scan_step)), 8) + 1
        ws = np.linspace(a, b, count)
        bmats = _bs_outside_batch(model, ws)
        dets = np.linalg.det(bmats).real
        roots = _bisect_sign_changes(model, ws, dets)
        roots += _dip_roots(model, ws, bmats, roots)
        for root in sorted(roots):
            mult = _kernel_dimension(_bs_outside_batch(model, np.array([root]))[0])
            if mult == 0:
                continue
            if _near_threshold(model, root):
                summary.at_threshold.append(root)
                summary.warnings.append(
                    f"eigenvalue {root:.12g} within {AT_THRESHOLD_TOL} of a threshold; excluded"
                )
                continue
            summary.states.append(BoundState(root, mult, "discrete"))
    return summary


def _bisect_sign_changes(model: Model, ws, dets, tol: float = 1e-11) -> list[float]:
    sgn = np.sign(dets)
    idx = np.flatnonzero((sgn[:-1] * sgn[1:] < 0))
    roots = []
    for i in idx:
        a, b = ws[i], ws[i + 1]
        fa = dets[i]
        while b - a > tol:
            mid = 0.5 * (a + b)
            fm = float(np.linalg.det(_bs_outside_batch(model, np.array([mid]))[0]).real)
            if fa * fm <= 0:
                b = mid
            else:
                a, fa = mid, fm
        roots.append(0.5 * (a + b))
    return roots


def _dip_roots(model: Model, ws, bmats, known, rel_tol: float = 0.5) -> list[float]:
    """Sign-preserving det zeros: refine local minima of the smallest singular
    value (catches even-multiplicity roots the bisection cannot see).

    The denominator is floored at 1 (the scale of the sign part) so that a
    matrix whose singular values all vanish together, as happens when the
    coupling is a multiple of the identity, still registers as a dip.
    """
    sv = np.linalg.svd(bmats, compute_uv=False)
    smin, smax = sv[:, -1], sv[:, 0]
    rel = smin / np.maximum(smax, 1.0)
    cand = np.flatnonzero(
        (rel[1:-1] < rel_tol) & (rel[1:-1] <= rel[:-2]) & (rel[1:-1] <= rel[2:])
    )
    roots = []
    for i in cand + 1:
        a, b = ws[max(i - 1, 0)], ws[min(i + 1, len(ws) - 1)]
        root = _refine_dip(lambda w: _smin_at(model, w), a, b)
        # a simple root shows a sign change right at the dip; bisect it so the
        # location matches the sign-change pass to full accuracy
        h = 1e-6
        da = float(np.linalg.det(_bs_outside_batch(model, np.array([root - h]))[0]).real)
        db = float(np.linalg.det(_bs_outside_batch(model, np.array([root + h]))[0]).real)
        if da * db < 0:
            root = _bisect_sign_changes(model, np.array([root - h, root + h]), np.array([da, db]))[0]
        if any(abs(root - r) < 1e-6 for r in known + roots):
            continue
        if _kernel_dimension(_bs_outside_batch(model, np.array([root]))[0]) > 0:
            roots.append(root)
    return roots


def _smin_at(model: Model, w: float) -> float:
    b = _bs_outside_batch(model, np.array([w]))[0]
    return float(np.linalg.svd(b, compute_uv=False)[-1])


def _smin_plus(model: Model, lam: float) -> float:
    b = bs_matrix_batch(model, np.array([lam]), "plus")[0]
    return float(np.linalg.svd(b, compute_uv=False)[-1])


def _refine_dip(f, a: float, b: float, tol: float = 1e-12) -> float:
    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": tol})
    return float(res.x)


def _kernel_dimension(b: np.ndarray) -> int:
    sv = np.linalg.svd(b, compute_uv=False)
    # floor the scale at 1 so a fully vanishing matrix keeps its full kernel
    return int(np.sum(sv < KERNEL_REL_TOL * max(float(sv[0]), 1.0)))


def find_embedded(model: Model, scan_step: float = 1e-3) -> BoundStateSummary:
    """Eigenvalues inside the bands: kernel energies of ``B(lam + i0)`` whose
    kernel vectors decouple from every open channel.

    Dips of the smallest singular value are scanned per inter-threshold
    interval and refined; a refined zero is accepted only if each kernel
    vector ``x`` has ``|<xi_j, vhalf x>| / sqrt(n) < 1e-6`` for every open
    channel j (otherwise it is a resonance, not an eigenvalue).
    """
    summary = BoundStateSummary(states=[])
    tvals = model.threshold_energies()
    for a, b in zip(tvals[:-1], tvals[1:]):
        if b - a < 1e-6 or not model.open_channels(0.5 * (a + b)):
            continue
        count = max(int(np.ceil((b - a) / scan_step)), 16) + 1
        lams = np.linspace(a + 1e-7, b - 1e-7, count)
        bmats = bs_matrix_batch(model, lams, "plus")
        sv = np.linalg.svd(bmats, compute_uv=False)
        rel = sv[:, -1] / np.maximum(sv[:, 0], 1.0)
        cand = np.flatnonzero(
            (rel[1:-1] < 1e-2) & (rel[1:-1] <= rel[:-2]) & (rel[1:-1] <= rel[2:])
        )
        for i in cand + 1:
            # minimize the squared singular value: a simple kernel crossing
            # gives a V shape whose corner the bounded minimizer overshoots,
            # while its square is a parabola it localizes to full precision
            lam = _refine_dip(
                lambda x: _smin_plus(model, x) ** 2,
                lams[max(i - 1, 0)],
                lams[min(i + 1, len(lams) - 1)],
            )
            bmat = bs_matrix_batch(model, np.array([lam]), "plus")[0]
            _, sval, vh = np.linalg.svd(bmat)
            scale = max(float(sval[0]), 1.0)
            kernel = [vh[m].conj() for m in range(len(sval)) if sval[m] < KERNEL_REL_TOL * scale]
            if not kernel:
                continue
            open_js = model.open_channels(lam)
            good = []
            for x in kernel:
                overlap = np.abs(model.boundary_vectors[:, np.array(open_js) - 1].conj().T @ x)
                if np.all(overlap / np.sqrt(model.n) < CHANNEL_DECOUPLE_TOL):
                    good.append(x)
            if not good:
                continue
            if _near_threshold(model, lam):
                summary.at_threshold.append(lam)
                summary.warnings.append(
                    f"embedded kernel energy {lam:.12g} within {AT_THRESHOLD_TOL} of a threshold; excluded"
                )
                continue
            if any(abs(lam - s.energy) < 1e-8 for s in summary.states):
                continue
            summary.states.append(BoundState(lam, len(good), "embedded"))
    return summary


def bound_state_census(model: Model) -> tuple[BoundStateSummary, BoundStateSummary]:
    return find_discrete(model), find_embedded(model)


# -- truncated-lattice oracle -------------------------------------------------


def _banded_hamiltonian(model: Model, layers: int) -> np.ndarray:
    """Lower-banded storage (bandwidth n) of the truncated operator."""
    n = model.n
    size = layers * n
    ring = model.cycle_matrix()
    ab = np.zeros((n + 1, size), dtype=complex)
    for s in range(n):
        for s2 in range(s, n):
            if ring[s2, s] != 0 or s2 == s:
                ab[s2 - s, s::n] += ring[s2, s]
    ab[0, :n] += np.asarray(model.params.v, dtype=float)
    hops = np.ones(layers - 1)
    if layers > 1:
        hops[0] = np.sqrt(2.0)
    for layer in range(layers - 1):
        ab[n, layer * n : (layer + 1) * n] = hops[layer]
    return ab


def _oracle_eigvals(model: Model, layers: int) -> np.ndarray:
    ab = _banded_hamiltonian(model, layers)
    return scipy.linalg.eig_banded(ab, lower=True, eigvals_only=True)


def _candidates(model: Model, w_small: np.ndarray, w_big: np.ndarray) -> np.ndarray:
    lo, hi = model.spectrum_interval()
    outside = w_small[(w_small < lo - 1e-12) | (w_small > hi + 1e-12)]
    inside = w_small[(w_small >= lo - 1e-12) & (w_small <= hi + 1e-12)]
    pos = np.searchsorted(w_big, inside)
    pos = np.clip(pos, 1, len(w_big) - 1)
    nearest = np.minimum(np.abs(w_big[pos] - inside), np.abs(w_big[pos - 1] - inside))
    matched = inside[nearest < ORACLE_MATCH_TOL]
    return np.sort(np.concatenate([outside, matched]))


def _clusters(values: np.ndarray, window: float) -> list[np.ndarray]:
    if len(values) == 0:
        return []
    splits = np.flatnonzero(np.diff(values) > window) + 1
    return np.split(values, splits)


def _cluster_vectors(ab: np.ndarray, energies: np.ndarray, rng) -> np.ndarray:
    """Subspace inverse iteration for the eigenvalues in one tight cluster.

    Returns orthonormal columns approximating the eigenvectors.  ``ab`` is
    the lower-banded Hermitian storage.
    """
    n_band, size = ab.shape[0] - 1, ab.shape[1]
    sigma = float(np.mean(energies)) + 3e-13
    full = np.zeros((2 * n_band + 1, size), dtype=complex)
    full[n_band] = ab[0] - sigma
    for d in range(1, n_band + 1):
        full[n_band + d, : size - d] = ab[d, : size - d]
        full[n_band - d, d:] = np.conj(ab[d, : size - d])
    m = len(energies)
    x = rng.standard_normal((size, m)) + 1j * rng.standard_normal((size, m))
    x, _ = np.linalg.qr(x)
    for _ in range(6):
        x = scipy.linalg.solve_banded((n_band, n_band), full, x)
        x, _ = np.linalg.qr(x)
    return x


def _tail_bound_count(
    model: Model,
    layers: int,
    counterpart: np.ndarray,
    rng,
    w: np.ndarray | None = None,
    ignore: tuple[tuple[float, float], ...] = (),
) -> tuple[int, list[float], list[str], int]:
    if w is None:
        w = _oracle_eigvals(model, layers)
    cands = _candidates(model, w, counterpart)
    ab = _banded_hamiltonian(model, layers)
    cut = int(np.ceil(0.8 * layers)) * model.n
    lo, hi = model.spectrum_interval()
    total = 0
    underresolved = 0
    energies: list[float] = []
    warnings: list[str] = []
    for cluster in _clusters(cands, ORACLE_CLUSTER_WINDOW):
        vecs = _cluster_vectors(ab, cluster, rng)
        for col, energy in zip(vecs.T, cluster):
            e = float(energy)
            if any(abs(e - center) <= window for center, window in ignore):
                continue
            tail = float(np.sum(np.abs(col[cut:]) ** 2))
            if tail >= TAIL_MASS_TOL:
                # an eigenvalue strictly outside the hull cannot be a
                # truncation artifact of the continuum: a fat tail there
                # means the box is still too shallow for its decay length
                if (e < lo - 1e-9 or e > hi + 1e-9) and not _near_threshold(model, e):
                    underresolved += 1
                continue
            if _near_threshold(model, e):
                warnings.append(
                    f"oracle eigenvalue {energy:.12g} within {AT_THRESHOLD_TOL} of a threshold; excluded"
                )
                continue
            total += 1
            energies.append(e)
    return total, energies, warnings, underresolved


def _decay_kappa(model: Model, e: float) -> float:
    """Decay rate of a bound state at ``e``: its slowest closed channel."""
    d = np.abs(float(e) - model.centers)
    closed = d > 2.0 + 1e-12
    if not np.any(closed):
        return np.inf
    return float(np.min(np.arccosh(d[closed] / 2.0)))


def _layers_for_kappa(kappa: float) -> int:
    # the tail test integrates the last fifth of the box, so the depth must
    # satisfy exp(-1.6 * kappa * layers) < tail tolerance with an order of
    # margin: 1.6 * kappa * L > ln(1e7)
    return int(np.ceil(10.5 / kappa))


def required_layers(
    model: Model, energies, base: int = 600, cap: int = ORACLE_LAYER_CAP
) -> int:
    """Box depth that resolves states decaying as slowly as ``energies``.

    Each state falls off like exp(-kappa * layer) with kappa set by its
    slowest closed channel, kappa_j = arccosh(|e - c_j| / 2).
    """
    kappas = [_decay_kappa(model, e) for e in energies]
    kappas = [k for k in kappas if np.isfinite(k)]
    if not kappas:
        return base
    return int(max(base, min(_layers_for_kappa(min(kappas)), cap)))


def lattice_oracle(
    model: Model, layers: int = 600, max_doublings: int = 3, ignore_near=()
) -> OracleResult:
    """Independent bound-state count from the truncated lattice.

    Diagonalizes at ``layers`` and ``2 * layers`` and accepts when the two
    localized counts agree and the larger box has no underresolved
    outside-hull candidate; otherwise doubles (up to ``max_doublings``).
    Eigenvalues near an energy in ``ignore_near`` are skipped entirely;
    callers that verify those energies by other means use this to keep a
    half-formed state from stalling the doubling ladder.
    """
    if layers < 500:
        raise ValueError("truncation must keep at least 500 layers")
    thresholds = model.threshold_energies()
    ignore = tuple(
        (float(e), float(np.min(np.abs(e - thresholds))) + 1e-7) for e in ignore_near
    )
    rng = np.random.default_rng(12345)
    current = layers
    w_small = _oracle_eigvals(model, current)
    w_big = _oracle_eigvals(model, 2 * current)
    for _ in range(max_doublings + 1):
        c_small, _, warn_small, _ = _tail_bound_count(
            model, current, w_big, rng, w=w_small, ignore=ignore
        )
        c_big, energies, warn_big, u_big = _tail_bound_count(
            model, 2 * current, w_small, rng, w=w_big, ignore=ignore
        )
        if c_small == c_big and u_big == 0:
            return OracleResult(
                energies=energies, total=c_big, layers=2 * current, warnings=warn_small + warn_big
            )
        current *= 2
        w_small = w_big
        w_big = _oracle_eigvals(model, 2 * current)
    raise NoConvergenceError(
        f"oracle count not stable after {max_doublings} doublings (layers {current})"
    )


def _sparse_hamiltonian(model: Model, layers: int) -> scipy.sparse.csc_matrix:
    ab = _banded_hamiltonian(model, layers)
    n_band, size = ab.shape[0] - 1, ab.shape[1]
    diags = [ab[0]]
    offsets = [0]
    for d in range(1, n_band + 1):
        diags.append(ab[d, : size - d])
        offsets.append(-d)
        diags.append(np.conj(ab[d, : size - d]))
        offsets.append(d)
    return scipy.sparse.diags(diags, offsets, format="csc", dtype=complex)


def _confirm_targeted(model: Model, energy: float, mult: int) -> bool:
    """Confirm one weakly bound census state by shift-invert diagonalization.

    A state at binding b decays with kappa ~ sqrt(b), so the box the dense
    oracle can afford never resolves small b.  A sparse solve targeted at
    the census energy handles the same box at any depth: it must find
    ``mult`` localized eigenvalues closer to ``energy`` than half its gap
    to the nearest threshold, a window no continuum level can enter.
    """
    kappa = _decay_kappa(model, energy)
    if not np.isfinite(kappa):
        return False
    layers = _layers_for_kappa(kappa)
    if layers > TARGETED_LAYER_CAP:
        return False
    layers = max(layers, 600)
    h = _sparse_hamiltonian(model, layers)
    try:
        vals, vecs = scipy.sparse.linalg.eigsh(h, k=mult + 1, sigma=energy, which="LM")
    except Exception:
        return False
    window = 0.5 * float(np.min(np.abs(energy - model.threshold_energies())))
    cut = int(np.ceil(0.8 * layers)) * model.n
    hits = 0
    for val, col in zip(vals, vecs.T):
        tail = float(np.sum(np.abs(col[cut:]) ** 2))
        if abs(float(val) - energy) < window and tail < TAIL_MASS_TOL:
            hits += 1
    return hits >= mult


def census_crosscheck(model: Model, states, base_layers: int = 600) -> OracleResult:
    """Oracle count with the box sized against the census being checked.

    States the dense box can afford set its depth; each state too shallow
    for ``ORACLE_LAYER_CAP`` is excluded from the box count and verified
    individually by ``_confirm_targeted``.  A shallow state that fails its
    targeted check is simply not counted, which surfaces as a census/oracle
    disagreement at the caller.
    """
    deep: list[float] = []
    shallow: list[BoundState] = []
    for s in states:
        kappa = _decay_kappa(model, s.energy)
        if np.isfinite(kappa) and _layers_for_kappa(kappa) > ORACLE_LAYER_CAP:
            shallow.append(s)
        else:
            deep.append(s.energy)
    box = lattice_oracle(
        model,
        layers=required_layers(model, deep, base=base_layers),
        ignore_near=[s.energy for s in shallow],
    )
    total = box.total
    energies = list(box.energies)
    warnings = list(box.warnings)
    for s in shallow:
        if _confirm_targeted(model, s.energy, s.multiplicity):
            total += s.multiplicity
            energies.append(s.energy)
        else:
            warnings.append(
                f"state near {s.energy:.12g} not confirmed by the targeted solve"
            )
    return OracleResult(energies=sorted(energies), total=total, layers=box.layers, warnings=warnings)
