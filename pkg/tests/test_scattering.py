import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlev import build_model
from qlev.scattering import (
    ThresholdClass,
    algebra_continuity_check,
    all_threshold_limits,
    betas,
    s_matrix,
    s_matrix_batch,
    threshold_limit,
    unitarity_defect,
    unitarity_defect_batch,
)
from oracles import decoupled_site_reflection, wave_matching_s

WAVE_CASES = [
    (2, 1.3, (0.9, -0.4), 0.0),
    (2, 0.0, (1.0, 0.0), -1.0),
    (2, 0.0, (0.7, -1.3), -3.5),
    (3, 2.2, (1.1, 0.0, -0.7), 0.3),
    (4, 0.9, (0.4, -1.2, 2.0, 0.1), -0.5),
    (5, 4.4, (0.2, 1.0, -0.6, 0.0, 0.9), 0.1),
    (6, 5.9, (0.2, -1.0, 0.6, 0.0, 0.9, -1.4), -0.33),
    (4, 0.0, (0.0, 2.0, 0.0, -1.0), 1.7),
    (2, np.pi, (3.0, -0.2), 0.4),
]


@pytest.mark.parametrize("n,theta,v,lam", WAVE_CASES)
def test_s_matrix_matches_wave_matching(n, theta, v, lam):
    m = build_model(n=n, theta=theta, v=v)
    sample = s_matrix(m, lam)
    want, js = wave_matching_s(m, lam)
    assert list(sample.open_channels) == js
    assert np.abs(sample.matrix - want).max() < 1e-10


def test_s_matrix_decoupled_sites():
    # ring term vanishes at flux pi on two sites; the channel-basis matrix is
    # a rotation of the two independent site reflections
    v = (1.0, -2.5)
    m = build_model(n=2, theta=np.pi, v=v)
    lam = 0.6
    site = np.diag([decoupled_site_reflection(vk, lam) for vk in v])
    basis = m.xi / np.sqrt(2.0)
    want = basis.conj().T @ site @ basis
    assert np.abs(s_matrix(m, lam).matrix - want).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(min_value=2, max_value=5),
    theta=st.floats(min_value=0.0, max_value=2.0 * np.pi, exclude_max=True),
    seed=st.integers(min_value=0, max_value=2**31),
    frac=st.floats(min_value=0.02, max_value=0.98),
)
def test_s_matrix_unitary_everywhere(n, theta, seed, frac):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    if not v.any():
        v[0] = 1.0
    m = build_model(n=n, theta=theta, v=tuple(v))
    lo, hi = m.threshold_energies()[0], m.threshold_energies()[-1]
    lam = lo + frac * (hi - lo)
    # stay away from thresholds where S is not defined
    if np.min(np.abs(m.threshold_energies() - lam)) < 1e-6 or not m.open_channels(lam):
        return
    assert unitarity_defect(s_matrix(m, lam).matrix) < 1e-11


def test_batch_matches_single_and_defect_batch():
    m = build_model(n=3, theta=2.2, v=(1.1, 0.4, -0.7))
    lams = np.array([0.2, 0.25, 0.3])
    js = m.open_channels(lams[0])
    batch = s_matrix_batch(m, lams, js)
    for i, lam in enumerate(lams):
        assert np.allclose(batch[i], s_matrix(m, lam).matrix, atol=1e-13)
    defects = unitarity_defect_batch(batch)
    assert defects.shape == (3,)
    assert defects.max() < 1e-12


def test_betas_are_quarter_root_band_distances():
    m = build_model(n=2, theta=1.3, v=(0.9, -0.4))
    lam = np.array([0.0])
    b = betas(m, lam, [1, 2])[0]
    for i, j in enumerate([1, 2]):
        w = 0.0 - m.channels[j - 1].center
        assert b[i] == pytest.approx(abs(w * w - 4.0) ** 0.25, abs=1e-14)


# threshold classifications on models with known structure


def test_threshold_classes_intricate_two_ring():
    m = build_model(n=2, theta=0.0, v=(1.0, 0.0))
    got = {(t.k, t.side): t.classification for t in all_threshold_limits(m)}
    assert got == {
        (1, "lower"): ThresholdClass.MINUS_ONE,
        (1, "upper"): ThresholdClass.INTRICATE_MINUS_I,
        (2, "lower"): ThresholdClass.INTRICATE_PLUS_I,
        (2, "upper"): ThresholdClass.MINUS_ONE,
    }


def test_threshold_values_intricate_exact():
    # the coinciding-threshold limits are -i from below and +i from above,
    # band ends are -1; true for either orientation of the support
    for v in [(1.0, 0.0), (0.0, 3.0), (-0.5, 0.0), (0.0, -10.0)]:
        m = build_model(n=2, theta=0.0, v=v)
        assert complex(threshold_limit(m, 1, "upper").matrix[0, 0]) == pytest.approx(-1j, abs=1e-4)
        assert complex(threshold_limit(m, 2, "lower").matrix[0, 0]) == pytest.approx(1j, abs=1e-4)
        assert complex(threshold_limit(m, 1, "lower").matrix[0, 0]) == pytest.approx(-1.0, abs=1e-4)
        assert complex(threshold_limit(m, 2, "upper").matrix[0, 0]) == pytest.approx(-1.0, abs=1e-4)


def test_threshold_class_generic_minus_one():
    m = build_model(n=2, theta=0.0, v=(0.7, -1.3))
    for t in all_threshold_limits(m):
        assert t.classification is ThresholdClass.MINUS_ONE
        assert t.extrap_residual < 1e-5


def test_threshold_limit_survives_weak_edge_coupling():
    """A top channel with accidentally small effective coupling keeps s near
    +1 until eps ~ 1e-7, far inside the plain ladder; the Cayley-ratio
    fallback must still resolve the limit to -1."""
    v = (-0.7679667151791384, 0.3579525519404961, -0.24453681301392954, 0.4714857813521436)
    m = build_model(n=4, theta=0.38168554938480814, v=v)
    t = threshold_limit(m, 4, "upper")
    assert t.classification is ThresholdClass.MINUS_ONE
    assert abs(complex(t.matrix[0, 0]) + 1.0) < 1e-4
    assert t.extrap_residual < 1e-5


def test_threshold_reflection_from_free_site():
    # flux pi decouples the sites; a zero entry leaves one line free, so the
    # degenerate threshold limit swaps the two channel combinations
    m = build_model(n=2, theta=np.pi, v=(1.0, 0.0))
    for side in ("lower", "upper"):
        t = threshold_limit(m, 1, side)
        assert t.classification is ThresholdClass.REFLECTION
        assert np.abs(t.matrix - np.array([[0.0, 1.0], [1.0, 0.0]])).max() < 1e-6
        assert t.correction_weight == 1


def test_threshold_minus_identity_from_two_interacting_sites():
    m = build_model(n=2, theta=np.pi, v=(3.0, -0.2))
    for side in ("lower", "upper"):
        t = threshold_limit(m, 1, side)
        assert t.classification is ThresholdClass.MINUS_IDENTITY2
        assert np.abs(t.matrix + np.eye(2)).max() < 1e-4
        assert t.correction_weight == 0


def test_correction_weights():
    from qlev.scattering import ThresholdLimit

    weights = {
        ThresholdClass.PLUS_ONE: 1,
        ThresholdClass.MINUS_ONE: 0,
        ThresholdClass.PLUS_IDENTITY2: 2,
        ThresholdClass.MINUS_IDENTITY2: 0,
        ThresholdClass.REFLECTION: 1,
        ThresholdClass.INTRICATE_PLUS_I: 0,
        ThresholdClass.INTRICATE_MINUS_I: 0,
    }
    for cls, w in weights.items():
        t = ThresholdLimit(1, "lower", -2.0, np.eye(1, dtype=complex), cls, 0.0)
        assert t.correction_weight == w


def test_off_diagonal_decay_toward_foreign_threshold():
    # entries coupling an open channel to one that closes decay like the
    # fourth root of the distance; the fitted exponent makes that visible
    m = build_model(n=2, theta=1.3, v=(0.9, -0.4))
    records = algebra_continuity_check(m)
    assert records
    for rec in records:
        assert rec.decays
        assert 0.15 < rec.fitted_exponent < 0.45
