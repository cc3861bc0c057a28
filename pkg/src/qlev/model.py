"""Model construction for a half-line lattice with a magnetic N-site ring fiber.

The unperturbed operator is a nearest-neighbour hopping chain on the half line
(with a sqrt(2) first hop) tensored with the identity, plus a ring adjacency
matrix carrying a magnetic flux ``theta`` through its single loop.  A real
diagonal potential acts on the N fiber sites of the boundary layer only.

Diagonalizing the ring adjacency splits the problem into N channels.  Channel
``j`` (1-based) has dispersion ``center_j + 2*cos(omega)`` with

    center_j = 2*cos((theta + 2*pi*j)/N),

so it contributes the band ``(center_j - 2, center_j + 2)`` to the essential
spectrum.  Distinct channel centers are grouped into "levels"; each band edge
``level +/- 2`` is a spectral threshold.  For ``theta = 0`` and even N the
extreme levels are -2 and +2 and two thresholds coincide at energy 0; if the
potential additionally couples the two extreme channels through proportional
boundary vectors, threshold limits at 0 degenerate further (the "intricate"
configuration detected by :func:`detect_intricate`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

# Channel centers closer than this are treated as one level.
LEVEL_GROUP_TOL = 1e-10

# Gram determinant threshold for declaring the boundary vectors dependent.
INTRICATE_GRAM_TOL = 1e-12


class ModelError(ValueError):
    """Raised for parameter sets outside the supported domain."""


@dataclass(frozen=True)
class ModelParams:
    """Validated model parameters.

    Parameters
    ----------
    n : int
        Number of fiber sites, at least 2.
    theta : float
        Magnetic flux through the ring, in ``[0, 2*pi)``.
    v : tuple of float
        Boundary potential, exactly ``n`` real entries, not all zero.
        Individual zeros are allowed.
    """

    n: int
    theta: float
    v: tuple[float, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ModelError(f"fiber size must be an integer, got {self.n!r}")
        if self.n < 2:
            raise ModelError(f"fiber size must be >= 2, got {self.n}")
        theta = float(self.theta)
        if not np.isfinite(theta) or not 0.0 <= theta < TWO_PI:
            raise ModelError(f"flux must lie in [0, 2*pi), got {self.theta!r}")
        v = tuple(float(x) for x in self.v)
        if len(v) != self.n:
            raise ModelError(f"potential needs exactly {self.n} entries, got {len(v)}")
        if not all(np.isfinite(v)):
            raise ModelError("potential entries must be finite")
        if all(x == 0.0 for x in v):
            raise ModelError("potential must not be identically zero")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class Channel:
    """One fiber channel: index ``j`` in 1..N, its center and ring vector."""

    j: int
    center: float
    vector: np.ndarray  # shape (n,), entries exp(i*(theta + 2*pi*j)*k/n), k = 1..n

    @property
    def band(self) -> tuple[float, float]:
        return (self.center - 2.0, self.center + 2.0)


@dataclass(frozen=True)
class Level:
    """A distinct channel center with the channels that share it."""

    k: int  # 1-based position in ascending order
    value: float
    channels: tuple[int, ...]  # member channel indices j

    @property
    def multiplicity(self) -> int:
        return len(self.channels)


@dataclass(frozen=True)
class ThresholdPoint:
    """A band edge ``level value -/+ 2`` of one level.

    ``side`` is "lower" for ``value - 2`` (the channel opens there as energy
    increases) and "upper" for ``value + 2`` (the channel closes).  When two
    band edges of different levels land on the same energy, each records the
    other as ``partner`` (a ``(k, side)`` pair).
    """

    k: int
    side: str  # "lower" | "upper"
    energy: float
    partner: tuple[int, str] | None = None


@dataclass(frozen=True)
class IntricateInfo:
    """Outcome of the boundary-vector dependence test at theta=0, even N."""

    is_intricate: bool
    alpha: int  # +1 or -1 when intricate, else 0


class Model:
    """Everything derived from :class:`ModelParams` that later stages reuse.

    Attributes of note:

    ``centers``
        Array of the N channel centers, index ``j-1``.
    ``xi``
        Complex (n, n) matrix whose column ``j-1`` is the ring vector of
        channel ``j`` (norm ``sqrt(n)``).
    ``vhalf``, ``usign``
        The factorization ``diag(v) = usign * vhalf**2`` with
        ``vhalf = sqrt(|v|) >= 0`` and ``usign[j] = +1`` for ``v[j] >= 0``,
        ``-1`` otherwise.
    ``coupling``
        Stack of N matrices ``vhalf * P_j * vhalf`` where ``P_j`` is the
        rank-one spectral projection of the ring adjacency onto channel j.
    """

    def __init__(self, params: ModelParams):
        self.params = params
        n, theta = params.n, params.theta
        j = np.arange(1, n + 1)
        phases = (theta + TWO_PI * j) / n
        self.centers = 2.0 * np.cos(phases)

        k = np.arange(1, n + 1)
        self.xi = np.exp(1j * np.outer(k, phases))  # xi[k-1, j-1]

        v = np.asarray(params.v, dtype=float)
        self.vhalf = np.sqrt(np.abs(v))
        self.usign = np.where(v >= 0.0, 1.0, -1.0)

        # vhalf P_j vhalf, shape (n, n, n): coupling[j-1] is n x n.
        y = self.vhalf[:, None] * self.xi  # column j-1: vhalf * xi_j
        self.boundary_vectors = y
        self.coupling = np.einsum("kj,lj->jkl", y, y.conj()) / n

        self.channels = tuple(
            Channel(j=int(jj), center=float(c), vector=self.xi[:, jj - 1])
            for jj, c in zip(j, self.centers)
        )
        self.levels = _group_levels(self.centers)
        self.thresholds = _threshold_points(self.levels)
        self.intricate = detect_intricate(self)

    # -- convenience queries ------------------------------------------------

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def theta(self) -> float:
        return self.params.theta

    def level_of_channel(self, j: int) -> Level:
        for lev in self.levels:
            if j in lev.channels:
                return lev
        raise KeyError(j)

    def open_channels(self, lam: float) -> list[int]:
        """Channels whose band strictly contains ``lam``."""
        return [int(j) for j in np.flatnonzero(np.abs(lam - self.centers) < 2.0) + 1]

    def spectrum_interval(self) -> tuple[float, float]:
        """Convex hull of the essential spectrum."""
        return (float(self.centers.min()) - 2.0, float(self.centers.max()) + 2.0)

    def threshold_energies(self) -> np.ndarray:
        """Sorted distinct threshold energies."""
        vals = sorted({round(t.energy, 12) for t in self.thresholds})
        return np.asarray(vals, dtype=float)

    def cycle_matrix(self) -> np.ndarray:
        return cycle_matrix(self.params.n, self.params.theta)


def build_model(params: ModelParams | None = None, **kwargs) -> Model:
    """Construct a :class:`Model`, validating parameters.

    Accepts either a ready :class:`ModelParams` or the keyword arguments
    ``n``, ``theta``, ``v``.
    """
    if params is None:
        params = ModelParams(**kwargs)
    return Model(params)


def cycle_matrix(n: int, theta: float) -> np.ndarray:
    """Ring adjacency with magnetic phase on the wrap-around edge.

    Entry (0, n-1) carries ``exp(-i*theta)`` and (n-1, 0) carries
    ``exp(+i*theta)``.  For n = 2 the direct and wrap edges join the same
    pair of sites and their weights add.
    """
    a = np.zeros((n, n), dtype=complex)
    for i in range(n - 1):
        a[i, i + 1] += 1.0
        a[i + 1, i] += 1.0
    a[n - 1, 0] += np.exp(1j * theta)
    a[0, n - 1] += np.exp(-1j * theta)
    return a


def _group_levels(centers: np.ndarray) -> tuple[Level, ...]:
    order = np.argsort(centers, kind="stable")
    levels: list[Level] = []
    members: list[int] = []
    start = None
    for idx in order:
        c = centers[idx]
        if start is None or c - start > LEVEL_GROUP_TOL:
            if members:
                levels.append(_mk_level(len(levels) + 1, centers, members))
            members = [int(idx) + 1]
            start = c
        else:
            members.append(int(idx) + 1)
    if members:
        levels.append(_mk_level(len(levels) + 1, centers, members))
    return tuple(levels)


def _mk_level(k: int, centers: np.ndarray, members: list[int]) -> Level:
    value = float(np.mean([centers[j - 1] for j in members]))
    return Level(k=k, value=value, channels=tuple(sorted(members)))


def _threshold_points(levels: tuple[Level, ...]) -> tuple[ThresholdPoint, ...]:
    raw: list[tuple[int, str, float]] = []
    for lev in levels:
        raw.append((lev.k, "lower", lev.value - 2.0))
        raw.append((lev.k, "upper", lev.value + 2.0))
    points: list[ThresholdPoint] = []
    for k, side, energy in raw:
        partner = None
        for k2, side2, energy2 in raw:
            if (k2, side2) != (k, side) and abs(energy2 - energy) <= LEVEL_GROUP_TOL:
                partner = (k2, side2)
        points.append(ThresholdPoint(k=k, side=side, energy=energy, partner=partner))
    return tuple(points)


def distinct_level_count(n: int, theta: float) -> int:
    """Closed form for the number of distinct channel centers."""
    at_zero = abs(theta) <= LEVEL_GROUP_TOL or abs(theta - TWO_PI) <= LEVEL_GROUP_TOL
    at_pi = abs(theta - np.pi) <= LEVEL_GROUP_TOL
    if not (at_zero or at_pi):
        return n
    if n % 2 == 0:
        return n // 2 + 1 if at_zero else n // 2
    return (n + 1) // 2


def detect_intricate(model: Model) -> IntricateInfo:
    """Test whether the two extreme-channel boundary vectors are dependent.

    Only possible for ``theta = 0`` and even N, where channels N/2 and N have
    centers -2 and +2 and share the threshold energy 0.  The test compares
    ``vhalf * xi_{N/2}`` and ``vhalf * xi_N`` through their Gram determinant;
    dependence means ``vhalf * xi_{N/2} = alpha * vhalf * xi_N`` with
    ``alpha in {-1, +1}`` (the potential is then supported on a single parity
    class of fiber sites).
    """
    n, theta = model.params.n, model.params.theta
    if n % 2 != 0 or min(theta, TWO_PI - theta) > LEVEL_GROUP_TOL:
        return IntricateInfo(False, 0)
    a = model.boundary_vectors[:, n // 2 - 1]
    b = model.boundary_vectors[:, n - 1]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    gram = (na * nb) ** 2 - abs(np.vdot(b, a)) ** 2
    if abs(gram) >= INTRICATE_GRAM_TOL * na * nb:
        return IntricateInfo(False, 0)
    alpha = int(round(float(np.real(np.vdot(b, a))) / nb**2))
    if alpha not in (-1, 1):
        return IntricateInfo(False, 0)
    return IntricateInfo(True, alpha)
