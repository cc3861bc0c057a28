"""Unimodular edge symbols and related special functions.

``eta_plus`` / ``eta_minus`` trace the unit circle as their argument runs over
the real line; they parametrize how a threshold limit is joined to the
identity along the vertical edges of the spectral contour.  ``psi`` is the
(normalized) Fourier transform of ``x -> exp(x/2) * sech(x)``; its squared
conjugate contracts to a sech-weighted eta function, which is what makes the
coinciding-threshold determinants computable in closed form.  All formulas
are exp-scaled so that arguments up to a few hundred stay finite.
"""

from __future__ import annotations

import numpy as np

SQRT_PI = float(np.sqrt(np.pi))


def sech(x):
    """Numerically safe ``1/cosh`` for large arguments."""
    x = np.abs(np.asarray(x, dtype=float))
    e = np.exp(-x)
    return 2.0 * e / (1.0 + e * e)


def eta_plus(s):
    """``tanh(pi s) + i sech(pi s)``; runs from -1 to +1 through +i."""
    s = np.asarray(s, dtype=float)
    return np.tanh(np.pi * s) + 1j * sech(np.pi * s)


def eta_minus(s):
    """``tanh(pi s) - i sech(pi s)``; runs from -1 to +1 through -i."""
    s = np.asarray(s, dtype=float)
    return np.tanh(np.pi * s) - 1j * sech(np.pi * s)


def phi_symbol(s):
    """``-tanh(pi s) + i sech(pi s)``, the unitary factor on the constant
    horizontal edge of the six-edge contour."""
    s = np.asarray(s, dtype=float)
    return -np.tanh(np.pi * s) + 1j * sech(np.pi * s)


def psi(y):
    """``sqrt(pi) * (cosh(pi y/2) - i sinh(pi y/2)) / cosh(pi y)``.

    Equals ``(2*pi)**(-1/2)`` times the Fourier transform of
    ``x -> exp(x/2) sech(x)`` evaluated at ``y``; ``psi(0) = sqrt(pi)``.
    Computed from ratios of decaying exponentials, so large ``|y|`` neither
    overflows nor loses the phase.
    """
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    e1 = np.exp(-np.pi * a / 2.0)
    e3 = np.exp(-3.0 * np.pi * a / 2.0)
    e2 = np.exp(-2.0 * np.pi * a)
    val = SQRT_PI * ((1.0 - 1j) * e1 + (1.0 + 1j) * e3) / (1.0 + e2)
    out = np.where(y >= 0, val, np.conj(val))
    if out.ndim == 0:
        return complex(out)
    return out


def det4_structured(a, b, c, d, e, f):
    """Determinant of the patterned 4x4 matrix

        [[ a,  b, -c,  c],
         [ b,  a, -c,  c],
         [-d, -d,  e,  f],
         [ d,  d,  f,  e]]

    in closed form: ``(b - a) * (f + e) * (4*c*d + (b + a) * (f - e))``.
    Degenerate checks: ``c = d = 0`` gives ``(a**2 - b**2) * (e**2 - f**2)``
    up to the sign bookkeeping ``(b-a)(b+a)(f+e)(f-e)``, and ``a = b`` kills
    the determinant.
    """
    return (b - a) * (f + e) * (4.0 * c * d + (b + a) * (f - e))


def det4_matrix(a, b, c, d, e, f) -> np.ndarray:
    """The patterned matrix itself (for cross-checks against brute force)."""
    return np.array(
        [
            [a, b, -c, c],
            [b, a, -c, c],
            [-d, -d, e, f],
            [d, d, f, e],
        ],
        dtype=complex,
    )
