import numpy as np
import pytest

from qlev import (
    Energy,
    NonInvertibleError,
    ThresholdEnergyError,
    bs_matrix,
    bs_matrix_batch,
    bs_matrix_closed_part,
    bs_matrix_unphysical,
    build_model,
    channel_resolvent,
    channel_resolvent_boundary,
    channel_resolvent_continued,
    m_matrix,
    resolvent_profile,
)
from oracles import boundary_resolvent_quadrature, resolvent_quadrature


@pytest.mark.parametrize("w", [2.5, -2.5, 7.0, -11.0, 2.0001])
def test_closed_form_matches_quadrature_real(w):
    assert channel_resolvent(w) == pytest.approx(resolvent_quadrature(w), abs=1e-9)


@pytest.mark.parametrize("w", [1.0 + 0.5j, -0.3 - 0.2j, 3.0 + 1e-6j, -2.0 + 0.01j])
def test_closed_form_matches_quadrature_complex(w):
    assert channel_resolvent(w) == pytest.approx(resolvent_quadrature(w), abs=1e-7)


@pytest.mark.parametrize("x", [0.0, 1.5, -1.9, 0.73])
@pytest.mark.parametrize("side", ["plus", "minus"])
def test_boundary_values_match_quadrature(x, side):
    got = channel_resolvent_boundary(x, side)
    want = boundary_resolvent_quadrature(x, side)
    assert got == pytest.approx(want, abs=1e-6)
    sgn = 1.0 if side == "plus" else -1.0
    assert got == pytest.approx(sgn * 1j / np.sqrt(4.0 - x * x), abs=1e-12)


def test_boundary_values_outside_band_real():
    for x in (2.3, -2.3, 6.0):
        got = channel_resolvent_boundary(x, "plus")
        assert got.imag == 0.0
        assert got == pytest.approx(-np.sign(x) / np.sqrt(x * x - 4.0), abs=1e-14)
        # both sides agree off the cut
        assert got == channel_resolvent_boundary(x, "minus")


def test_rejects_cut_and_edge_arguments():
    with pytest.raises(ThresholdEnergyError):
        channel_resolvent(1.0)
    with pytest.raises(ThresholdEnergyError):
        channel_resolvent_boundary(2.0, "plus")
    with pytest.raises(ValueError):
        channel_resolvent_boundary(1.0, "above")


def test_resolvent_decays_at_infinity():
    # r(w) ~ -1/w far away
    for w in (1e4, -1e4, 1e4 + 1e3j):
        assert channel_resolvent(w) * w == pytest.approx(-1.0, abs=1e-6)


def test_bs_matrix_structure_two_channels():
    m = build_model(n=2, theta=0.8, v=(2.0, -0.5))
    z = Energy.point(9.0)
    b = bs_matrix(m, z)
    # hand-built: usign + sum_j r(z - center_j) vhalf P_j vhalf
    r = channel_resolvent(9.0 - m.centers)
    want = np.diag(m.usign).astype(complex)
    for j in range(2):
        y = m.boundary_vectors[:, j]
        want += r[j] * np.outer(y, y.conj()) / 2.0
    assert np.allclose(b, want, atol=1e-14)
    # Hermitian outside every band (complex entries for generic theta)
    assert np.allclose(b, b.conj().T, atol=1e-14)
    # real only when the corner phase degenerates
    m0 = build_model(n=2, theta=0.0, v=(2.0, -0.5))
    b0 = bs_matrix(m0, Energy.point(9.0))
    assert np.abs(b0.imag).max() < 1e-14


def test_bs_matrix_boundary_antihermitian_rank():
    m = build_model(n=3, theta=2.2, v=(1.1, 0.4, -0.7))
    lam = 0.3
    b = bs_matrix(m, Energy.plus(lam))
    anti = (b - b.conj().T) / 2.0
    rank = np.linalg.matrix_rank(anti, tol=1e-10)
    assert rank == len(m.open_channels(lam))


def test_bs_matrix_batch_matches_single():
    m = build_model(n=4, theta=1.7, v=(0.2, -1.0, 0.6, 1.4))
    lams = np.array([-2.2, 0.1, 1.9])
    batch = bs_matrix_batch(m, lams, "plus")
    for i, lam in enumerate(lams):
        assert np.allclose(batch[i], bs_matrix(m, Energy.plus(lam)), atol=1e-14)


def test_m_matrix_inverts_and_guards():
    m = build_model(n=2, theta=np.pi, v=(1.0, 0.0))
    z = Energy.point(8.0)
    assert np.allclose(m_matrix(m, z) @ bs_matrix(m, z), np.eye(2), atol=1e-12)
    # the decoupled site has its eigenvalue at sqrt(5); the matrix is singular there
    with pytest.raises(NonInvertibleError):
        m_matrix(m, Energy.point(np.sqrt(5.0)))


def test_resolvent_profile_orders_by_channel():
    m = build_model(n=3, theta=0.9, v=(0.3, 0.3, 0.3))
    prof = resolvent_profile(m, Energy.point(10.0))
    assert np.allclose(prof, channel_resolvent(10.0 - m.centers), atol=1e-15)


def test_continued_branch_agrees_with_upper_boundary():
    x = np.linspace(-1.99, 1.99, 401)
    assert np.allclose(
        channel_resolvent_continued(x + 0j),
        channel_resolvent_boundary(x, "plus"),
        atol=1e-14,
    )
    # on the physical (upper) side the continuation is the resolvent itself,
    # and it stays analytic when pushed below the axis
    zs = x + 1j * 0.05
    assert np.allclose(channel_resolvent_continued(zs), channel_resolvent(zs), atol=1e-14)
    down = channel_resolvent_continued(x - 1j * 0.05)
    assert np.all(np.isfinite(down))


def test_unphysical_matrix_matches_boundary_on_axis():
    m = build_model(n=3, theta=1.3, v=(0.6, -0.9, 0.4))
    lam = 0.5 * (m.threshold_energies()[1] + m.threshold_energies()[2])
    js = m.open_channels(lam)
    got = bs_matrix_unphysical(m, complex(lam, 0.0), js)
    want = bs_matrix_batch(m, np.array([lam]), "plus")[0]
    assert np.allclose(got, want, atol=1e-13)


def test_closed_part_root_is_single_channel_level():
    # with one closed channel the partial determinant factors through the
    # rank-1 lemma: since every boundary-vector entry has unit modulus, the
    # channel coupling scalar is mean(v) and the root condition collapses to
    # 1 + r(e - c) * mean(v) = 0
    v = (0.6, -0.9, 0.4)
    m = build_model(n=3, theta=1.3, v=v)
    cuts = m.threshold_energies()
    a, b = float(cuts[3]), float(cuts[4])
    closed = [j for j in range(1, 4) if j not in m.open_channels(0.5 * (a + b))]
    assert closed == [1]
    lams = np.linspace(a + 1e-6, b - 1e-6, 2001)
    dets = np.linalg.det(bs_matrix_closed_part(m, lams, closed)).real
    cond = 1.0 + channel_resolvent((lams - m.centers[0]).astype(complex)).real * np.mean(v)
    det_flips = np.flatnonzero(np.sign(dets[:-1]) * np.sign(dets[1:]) < 0)
    cond_flips = np.flatnonzero(np.sign(cond[:-1]) * np.sign(cond[1:]) < 0)
    assert det_flips.size >= 1
    assert np.array_equal(det_flips, cond_flips)
