"""Independent reference computations used to check the package.

Nothing here imports from qlev's numerics beyond model construction and the
beta normalization; every quantity is rebuilt from the defining equations by
a different route (direct quadrature, wave matching on the lattice, closed
forms for decoupled cases).
"""

import numpy as np
import scipy.integrate


def resolvent_quadrature(w: complex) -> complex:
    """(1/pi) * integral_0^pi d omega / (2 cos omega - w) by adaptive quadrature."""
    kwargs = {"limit": 400}
    if abs(complex(w).imag) < 1e-2 and abs(complex(w).real) < 2.0:
        # near-pole: tell the integrator where the denominator almost vanishes
        kwargs["points"] = [float(np.arccos(complex(w).real / 2.0))]
    re = scipy.integrate.quad(lambda t: (1.0 / (2.0 * np.cos(t) - w)).real, 0.0, np.pi, **kwargs)[0]
    im = scipy.integrate.quad(lambda t: (1.0 / (2.0 * np.cos(t) - w)).imag, 0.0, np.pi, **kwargs)[0]
    return (re + 1j * im) / np.pi


def boundary_resolvent_quadrature(x: float, side: str) -> complex:
    """Limit onto the cut (-2, 2): exact principal value for the real part,
    shrinking Lorentzian widths for the imaginary part.
    """
    omega0 = float(np.arccos(x / 2.0))

    def smooth(t):
        t = np.asarray(t, dtype=float)
        num = t - omega0
        den = 2.0 * np.cos(t) - x
        # removable singularity at omega0; the ratio tends to -1/(2 sin omega0)
        safe = np.abs(num) > 1e-9
        out = np.where(safe, num / np.where(safe, den, 1.0), -1.0 / (2.0 * np.sin(omega0)))
        return out

    pv = scipy.integrate.quad(smooth, 0.0, np.pi, weight="cauchy", wvar=omega0, limit=400)[0]

    sgn = 1.0 if side == "plus" else -1.0
    eps = 1e-4

    def lorentz(t, e):
        den = 2.0 * np.cos(t) - x
        return sgn * e / (den * den + e * e)

    vals = [
        scipy.integrate.quad(lorentz, 0.0, np.pi, args=(eps / 2.0**m,), points=[omega0], limit=400)[0]
        for m in range(3)
    ]
    f1, f2, f3 = vals
    g1, g2 = 2.0 * f2 - f1, 2.0 * f3 - f2
    im = (4.0 * g2 - g1) / 3.0
    return (pv + 1j * im) / np.pi


def wave_matching_s(model, lam: float) -> tuple[np.ndarray, list[int]]:
    """Scattering matrix by direct wave matching on the half line.

    Expands psi = sum_j phi_j(m) xi_j.  For m >= 2 the free recursion holds
    automatically; the m=0 and m=1 rows (with the sqrt(2) hop and diag(v))
    become a square linear system for the layer-0 values and one outgoing
    amplitude per channel.  The band runs 2 cos k, so group velocity is
    -2 sin k and the incoming wave carries e^{+ikm}.
    """
    n = model.n
    centers = np.array([c.center for c in model.channels])
    w = lam - centers
    open_mask = np.abs(w) < 2.0
    k = np.arccos(np.clip(w / 2.0, -1.0, 1.0))
    with np.errstate(invalid="ignore"):
        x = np.where(
            ~open_mask,
            (w - np.sign(w) * np.sqrt(np.maximum(w * w - 4.0, 0.0))) / 2.0,
            0.0,
        )
    v = np.asarray(model.params.v, dtype=float)
    basis = model.xi / np.sqrt(n)
    ring = model.cycle_matrix()
    opens = np.flatnonzero(open_mask)
    closed = np.flatnonzero(~open_mask)
    raw = np.zeros((len(opens), len(opens)), dtype=complex)
    for col, a in enumerate(opens):
        def layer(m):
            inc = np.exp(1j * k[a] * m) * basis[:, a]
            mat = np.zeros((n, n), dtype=complex)
            for j in opens:
                mat[:, j] = np.exp(-1j * k[j] * m) * basis[:, j]
            for j in closed:
                mat[:, j] = x[j] ** m * basis[:, j]
            return mat, inc

        m1_mat, m1_inc = layer(1)
        m2_mat, m2_inc = layer(2)
        lhs = np.zeros((2 * n, 2 * n), dtype=complex)
        rhs = np.zeros(2 * n, dtype=complex)
        lhs[:n, :n] = ring + np.diag(v) - lam * np.eye(n)
        lhs[:n, n:] = np.sqrt(2.0) * m1_mat
        rhs[:n] = -np.sqrt(2.0) * m1_inc
        lhs[n:, :n] = np.sqrt(2.0) * np.eye(n)
        lhs[n:, n:] = m2_mat + (ring - lam * np.eye(n)) @ m1_mat
        rhs[n:] = -(m2_inc + (ring - lam * np.eye(n)) @ m1_inc)
        sol = np.linalg.solve(lhs, rhs)
        raw[:, col] = sol[n:][opens]
    js = [int(o) + 1 for o in opens]
    flux = np.abs((lam - centers[opens]) ** 2 - 4.0) ** 0.25
    return np.diag(flux) @ raw @ np.diag(1.0 / flux), js


def decoupled_site_energies(v) -> list[float]:
    """Bound-state energies when the ring term vanishes (n=2 at flux pi).

    Each site k with v_k != 0 carries one half-line with a single boundary
    potential; x^2 + v x - 1 = 0 picks the |x| < 1 root and the energy is
    x + 1/x = sign(v) sqrt(v^2 + 4).
    """
    return [float(np.sign(vk) * np.sqrt(vk * vk + 4.0)) for vk in v if vk != 0.0]


def decoupled_site_reflection(vk: float, lam: float) -> complex:
    """Reflection amplitude of one decoupled half line at energy lam = 2 cos k.

    The band is 2 cos k, so the group velocity is -2 sin k and the incoming
    wave carries e^{+ikm}; matching psi_m = e^{ikm} + R e^{-ikm} against the
    boundary row gives R with -2i sin k in place of the usual +2i sin k.
    """
    sink = np.sqrt(1.0 - (lam / 2.0) ** 2)
    return (-2j * sink - vk) / (-2j * sink + vk) if vk != 0.0 else 1.0 + 0j


def dense_truncation_eigvals(model, layers: int) -> np.ndarray:
    """Eigenvalues of the truncated operator via a dense Hermitian solve."""
    n = model.n
    size = layers * n
    h = np.zeros((size, size), dtype=complex)
    ring = model.cycle_matrix()
    for layer in range(layers):
        h[layer * n : (layer + 1) * n, layer * n : (layer + 1) * n] = ring
    h[:n, :n] += np.diag(np.asarray(model.params.v, dtype=float))
    for layer in range(layers - 1):
        hop = np.sqrt(2.0) if layer == 0 else 1.0
        i, j = layer * n, (layer + 1) * n
        h[i : i + n, j : j + n] += hop * np.eye(n)
        h[j : j + n, i : i + n] += hop * np.eye(n)
    return np.linalg.eigvalsh(h)


def psi_fourier_quadrature(y: float) -> complex:
    """(1/sqrt(2 pi)) * integral e^{x/2} sech(x) e^{-ixy} dx by quadrature."""
    def weight(x):
        # e^{x/2} sech(x) without overflowing either factor
        return 2.0 * np.exp(x / 2.0 - np.abs(x)) / (1.0 + np.exp(-2.0 * np.abs(x)))

    re = scipy.integrate.quad(lambda x: weight(x) * np.cos(x * y), -np.inf, np.inf, limit=400)[0]
    im = scipy.integrate.quad(lambda x: -weight(x) * np.sin(x * y), -np.inf, np.inf, limit=400)[0]
    return (re + 1j * im) / np.sqrt(2.0 * np.pi)
