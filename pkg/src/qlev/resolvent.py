"""Channel resolvent and the boundary-coupled inverse it feeds.

Each channel contributes the momentum average

    r(w) = (1/pi) * integral_0^pi  domega / (2*cos(omega) - w),

which has the closed form ``r(w) = -1 / (sqrt(w - 2) * sqrt(w + 2))`` with
principal-branch square roots.  ``r`` is Herglotz (``Im r > 0`` on the upper
half plane), odd, and conjugate-symmetric.  Its boundary values on the real
axis are used directly instead of taking small-imaginary-part limits:

    |x| < 2:  r(x +/- i0) = +/- i / sqrt(4 - x**2)
    |x| > 2:  r(x)        = -sign(x) / sqrt(x**2 - 4)

The boundary-coupled operator at energy ``z`` is the n x n matrix

    B(z) = usign + sum_j r(z - center_j) * vhalf P_j vhalf,

whose inverse (when it exists) drives the scattering matrix and whose kernel
signals bound states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Model

# Condition number beyond which B is treated as singular.
CONDITION_LIMIT = 1e12


class ThresholdEnergyError(ValueError):
    """Energy sits exactly on a band edge, where r diverges."""


class NonInvertibleError(ArithmeticError):
    """The boundary-coupled matrix has no reliable inverse at this energy."""

    def __init__(self, message: str, energy=None):
        super().__init__(message)
        self.energy = energy


@dataclass(frozen=True)
class Energy:
    """Energy argument: an off-axis point or a boundary value ``lam +/- i0``.

    ``boundary`` is ``None`` for a genuine complex point (real values are then
    only legal outside every band), ``"plus"`` or ``"minus"`` for the two
    sides of the essential spectrum.
    """

    value: complex
    boundary: str | None = None

    @staticmethod
    def point(z: complex) -> "Energy":
        return Energy(complex(z), None)

    @staticmethod
    def plus(lam: float) -> "Energy":
        return Energy(complex(float(lam)), "plus")

    @staticmethod
    def minus(lam: float) -> "Energy":
        return Energy(complex(float(lam)), "minus")


def channel_resolvent(w):
    """Closed form of the momentum average at complex ``w`` off [-2, 2].

    Uses principal branches of ``sqrt(w - 2)`` and ``sqrt(w + 2)`` separately,
    which picks the branch of ``sqrt(w**2 - 4)`` that behaves like ``w`` at
    infinity.  Real ``w`` with ``|w| > 2`` is fine; real ``|w| <= 2`` is not
    (use :func:`channel_resolvent_boundary`).
    """
    w = np.asarray(w, dtype=complex)
    on_cut = (w.imag == 0) & (np.abs(w.real) <= 2.0)
    if np.any(on_cut):
        raise ThresholdEnergyError("real argument inside [-2, 2]; pick a boundary side")
    return -1.0 / (np.sqrt(w - 2.0) * np.sqrt(w + 2.0))


def channel_resolvent_continued(w):
    """Continuation of the upper boundary value ``r(x + i0)`` through the band.

    ``i / (sqrt(2 - w) * sqrt(2 + w))`` with principal roots is analytic off
    ``(-inf, -2] u [2, inf)``, agrees with ``r(x + i0)`` for ``-2 < x < 2``,
    and follows it analytically into the lower half plane (the second sheet,
    where scattering resonances live as zeros of the continued det B).
    """
    w = np.asarray(w, dtype=complex)
    return 1j / (np.sqrt(2.0 - w) * np.sqrt(2.0 + w))


def channel_resolvent_boundary(x, side: str):
    """Boundary values ``r(x + i0)`` (side="plus") or ``r(x - i0)``.

    Piecewise explicit: ``+/- i / sqrt(4 - x**2)`` inside the band,
    ``-sign(x) / sqrt(x**2 - 4)`` outside.  Exact band-edge arguments raise
    :class:`ThresholdEnergyError`.
    """
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) == 2.0):
        raise ThresholdEnergyError("argument is exactly a band edge")
    sgn = 1.0 if side == "plus" else -1.0
    inside = np.abs(x) < 2.0
    out = np.empty(x.shape, dtype=complex)
    out[inside] = sgn * 1j / np.sqrt(4.0 - x[inside] ** 2)
    out[~inside] = -np.sign(x[~inside]) / np.sqrt(x[~inside] ** 2 - 4.0)
    return complex(out[0]) if scalar else out


def resolvent_profile(model: Model, energy: Energy) -> np.ndarray:
    """Vector of ``r(energy - center_j)`` over the n channels."""
    if energy.boundary is None:
        return channel_resolvent(energy.value - model.centers)
    return channel_resolvent_boundary(energy.value.real - model.centers, energy.boundary)


def bs_matrix(model: Model, energy: Energy) -> np.ndarray:
    """Boundary-coupled matrix ``usign + sum_j r_j * vhalf P_j vhalf``.

    Hermitian whenever every ``r_j`` is real (energy outside all bands); its
    anti-Hermitian part has rank equal to the number of open channels for
    boundary energies inside the essential spectrum.
    """
    r = resolvent_profile(model, energy)
    return np.diag(model.usign).astype(complex) + np.tensordot(r, model.coupling, axes=(0, 0))


def bs_matrix_batch(model: Model, lams: np.ndarray, side: str) -> np.ndarray:
    """Stack of boundary matrices ``B(lam + i0)`` (or ``- i0``) over ``lams``."""
    lams = np.asarray(lams, dtype=float)
    r = channel_resolvent_boundary(lams[:, None] - model.centers[None, :], side)
    b = np.tensordot(r, model.coupling, axes=(1, 0))
    b += np.diag(model.usign)
    return b


def bs_matrix_unphysical(model: Model, z: complex, open_js) -> np.ndarray:
    """B at complex ``z`` with the channels in ``open_js`` continued through
    their band cut and the rest kept on the physical branch.

    On an inter-threshold interval where exactly ``open_js`` are open this
    matches ``B(lam + i0)`` on the axis and is analytic in a neighborhood of
    it; zeros of its determinant at ``e - i*width/2`` below the axis are the
    interval's scattering resonances.
    """
    w = complex(z) - model.centers.astype(complex)
    cont = np.zeros(model.n, dtype=bool)
    cont[[j - 1 for j in open_js]] = True
    r = np.empty(model.n, dtype=complex)
    r[cont] = channel_resolvent_continued(w[cont])
    if np.any(~cont):
        r[~cont] = channel_resolvent(w[~cont])
    return np.diag(model.usign).astype(complex) + np.tensordot(r, model.coupling, axes=(0, 0))


def bs_matrix_closed_part(model: Model, lams: np.ndarray, closed_js) -> np.ndarray:
    """Stack of partial boundary matrices keeping only the closed channels.

    Dropping the open-channel terms decouples those channels entirely, so a
    vanishing determinant marks an eigenvalue of the truncated problem: the
    seed from which a nearby scattering resonance of the full model grows.
    Hermitian (every retained ``r_j`` is real), so the determinant is real.
    """
    lams = np.asarray(lams, dtype=float)
    b = np.broadcast_to(
        np.diag(model.usign).astype(complex), (lams.size, model.n, model.n)
    ).copy()
    for j in closed_js:
        r = channel_resolvent(lams.astype(complex) - model.centers[j - 1])
        b += r[:, None, None] * model.coupling[j - 1][None, :, :]
    return b


def m_matrix(model: Model, energy: Energy) -> np.ndarray:
    """Inverse of :func:`bs_matrix`, guarded by a condition-number check."""
    b = bs_matrix(model, energy)
    return _guarded_inverse(b, energy)


def _guarded_inverse(b: np.ndarray, energy=None) -> np.ndarray:
    cond = np.linalg.cond(b)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise NonInvertibleError(
            f"boundary-coupled matrix condition {cond:.3e} exceeds {CONDITION_LIMIT:.0e}",
            energy=energy,
        )
    m = np.linalg.inv(b)
    resid = np.linalg.norm(b @ m - np.eye(b.shape[0]))
    if resid >= 1e-10:
        raise NonInvertibleError(f"inverse residual {resid:.3e} too large", energy=energy)
    return m
