import numpy as np
import pytest

from qlev.special import (
    det4_matrix,
    det4_structured,
    eta_minus,
    eta_plus,
    phi_symbol,
    psi,
    sech,
)
from oracles import psi_fourier_quadrature


def test_psi_at_zero():
    assert psi(0.0) == pytest.approx(np.sqrt(np.pi), abs=1e-15)


@pytest.mark.parametrize("y", [0.0, 0.5, -0.5, 2.0, -2.0])
def test_psi_matches_fourier_quadrature(y):
    # 1/sqrt(2 pi) * FT of x -> e^{x/2} sech(x), evaluated by adaptive quadrature
    assert psi(y) == pytest.approx(psi_fourier_quadrature(y), abs=1e-8)


@pytest.mark.parametrize("y", [0.1, 1.0, 3.3, 17.0, 80.0, 500.0])
def test_psi_conjugate_symmetry_and_decay(y):
    assert psi(-y) == pytest.approx(np.conj(psi(y)), abs=1e-15)
    assert np.isfinite(psi(y))
    assert abs(psi(y)) <= abs(psi(0.0)) + 1e-12


def test_psi_closed_form_direct():
    # same function without the overflow-safe scaling, on moderate arguments
    for y in np.linspace(-5.0, 5.0, 41):
        direct = np.sqrt(np.pi) * (np.cosh(np.pi * y / 2.0) - 1j * np.sinh(np.pi * y / 2.0)) / np.cosh(np.pi * y)
        assert psi(y) == pytest.approx(direct, abs=1e-13)


@pytest.mark.parametrize("s", np.linspace(-6.0, 6.0, 25).tolist() + [40.0, -40.0])
def test_eta_unimodular(s):
    assert abs(eta_plus(s)) == pytest.approx(1.0, abs=1e-12)
    assert abs(eta_minus(s)) == pytest.approx(1.0, abs=1e-12)
    assert abs(phi_symbol(s)) == pytest.approx(1.0, abs=1e-12)
    assert eta_plus(s) == pytest.approx(np.conj(eta_minus(s)), abs=1e-15)


def test_eta_endpoints():
    assert eta_plus(0.0) == pytest.approx(1j)
    assert eta_minus(0.0) == pytest.approx(-1j)
    assert eta_plus(50.0) == pytest.approx(1.0, abs=1e-12)
    assert eta_plus(-50.0) == pytest.approx(-1.0, abs=1e-12)
    assert phi_symbol(50.0) == pytest.approx(-1.0, abs=1e-12)
    assert phi_symbol(-50.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("xi", np.linspace(-8.0, 8.0, 33).tolist())
def test_psi_bar_squared_identity(xi):
    # conj(psi(xi))^2 = i pi sech(pi xi) eta_minus(xi), and the mirrored form
    lhs_plus = np.conj(psi(xi)) ** 2
    rhs_plus = 1j * np.pi * sech(np.pi * xi) * eta_minus(xi)
    assert lhs_plus == pytest.approx(rhs_plus, abs=1e-12)
    lhs_minus = np.conj(psi(-xi)) ** 2
    rhs_minus = -1j * np.pi * sech(np.pi * xi) * eta_plus(xi)
    assert lhs_minus == pytest.approx(rhs_minus, abs=1e-12)


def test_sech_overflow_safe():
    assert sech(800.0) == 0.0 or sech(800.0) < 1e-300
    assert sech(0.0) == 1.0
    assert sech(-3.0) == pytest.approx(1.0 / np.cosh(3.0), rel=1e-14)


def test_structured_determinant_vs_brute_force():
    rng = np.random.default_rng(20240817)
    for _ in range(100):
        a, b, c, d, e, f = (rng.standard_normal() + 1j * rng.standard_normal() for _ in range(6))
        full = det4_matrix(a, b, c, d, e, f)
        assert np.linalg.det(full) == pytest.approx(det4_structured(a, b, c, d, e, f), abs=1e-12)


def test_structured_determinant_vectorized():
    rng = np.random.default_rng(7)
    args = [rng.standard_normal(50) + 1j * rng.standard_normal(50) for _ in range(6)]
    vec = det4_structured(*args)
    for i in range(50):
        one = det4_structured(*(x[i] for x in args))
        assert vec[i] == pytest.approx(one, abs=1e-13)
