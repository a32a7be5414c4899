import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from squeezelab.errors import InvalidArgument
from squeezelab.gaussian_core import (
    Beamsplitter,
    BogoliubovMap,
    Displace,
    Dopa,
    Nopa,
    Phase,
    SqueezeParams,
    apply_beamsplitter,
    apply_dopa,
    apply_nopa,
    apply_phase,
    build_map,
    compose,
    db_to_r,
    displace,
    identity_map,
    mean_photon,
    photon_covariance,
    quadratic_covariance,
    quadratic_mean,
    quadrature_stats,
    su11_nopa_program,
    two_arm_program,
    validate_bogoliubov,
)

SINH2_HALF = 0.2715403174076219  # sinh(0.5)^2


# -- squeeze parameters ------------------------------------------------------


def test_negative_r_folds_into_angle():
    sq = SqueezeParams(-0.4, 0.2)
    assert sq.r == pytest.approx(0.4)
    assert sq.theta == pytest.approx(0.2 + math.pi / 2)
    np.testing.assert_allclose(sq.coeffs[1], -np.exp(0.4j) * math.sinh(0.4))


def test_db_conversion():
    assert db_to_r(20 * math.log10(math.e)) == pytest.approx(1.0)
    assert SqueezeParams.from_db(0.0).r == 0.0


def test_squeeze_rejects_nonfinite():
    with pytest.raises(InvalidArgument):
        SqueezeParams(float("nan"))


# -- elementary maps ---------------------------------------------------------


def test_identity_map():
    m = identity_map(1)
    np.testing.assert_array_equal(m.d, [0])
    np.testing.assert_array_equal(m.C, [[1]])
    np.testing.assert_array_equal(m.S, [[0]])
    np.testing.assert_array_equal(identity_map(2).C, np.eye(2))
    assert validate_bogoliubov(identity_map(3)).ok()
    assert validate_bogoliubov(identity_map(2)) == (0.0, 0.0)
    with pytest.raises(InvalidArgument):
        identity_map(0)


def test_maps_are_immutable():
    m = identity_map(2)
    with pytest.raises(ValueError):
        m.d[0] = 1.0


def test_displace():
    np.testing.assert_allclose(displace(identity_map(1), 0, 2).d, [2])
    m = displace(displace(identity_map(1), 0, 1), 0, 1j)
    np.testing.assert_allclose(m.d, [1 + 1j])
    assert mean_photon(displace(identity_map(1), 0, 3), 0) == pytest.approx(9)
    with pytest.raises(IndexError):
        displace(identity_map(1), 1, 1.0)


def test_phase():
    m = displace(identity_map(1), 0, 2)
    assert apply_phase(m, 0, 0.0).allclose(m)
    np.testing.assert_allclose(apply_phase(m, 0, math.pi).d, [-2], atol=1e-15)
    with pytest.raises(IndexError):
        apply_phase(m, 3, 0.1)


def test_beamsplitter():
    m = displace(identity_map(2), 0, math.sqrt(2))
    np.testing.assert_allclose(apply_beamsplitter(m, 0, 1, 0.5).d, [1, 1])
    m = displace(displace(identity_map(2), 0, 1.0), 1, 2.0)
    np.testing.assert_allclose(apply_beamsplitter(m, 0, 1, 1.0).d, [1, -2])
    with pytest.raises(InvalidArgument):
        apply_beamsplitter(m, 0, 1, 1.5)
    with pytest.raises(InvalidArgument):
        apply_beamsplitter(m, 1, 1, 0.5)


def test_dopa():
    m = apply_dopa(identity_map(1), 0, SqueezeParams(0.5))
    assert mean_photon(m, 0) == pytest.approx(SINH2_HALF, abs=1e-12)
    assert apply_dopa(identity_map(1), 0, SqueezeParams(0.0)).allclose(identity_map(1))


def test_nopa():
    m = apply_nopa(identity_map(2), 0, 1, SqueezeParams(0.5, 0.3))
    np.testing.assert_allclose(photon_covariance(m).mean_n, [SINH2_HALF] * 2, atol=1e-12)
    assert apply_nopa(identity_map(2), 0, 1, SqueezeParams(0.0)).allclose(identity_map(2))
    with pytest.raises(InvalidArgument):
        apply_nopa(identity_map(2), 1, 1, SqueezeParams(0.5))


@pytest.mark.parametrize("theta", [0.0, 0.4, 1.3])
def test_nopa_equals_two_squeezers_on_beamsplitter(theta):
    # vacuum-seeded NOPA == squeezers (-r, theta), (r, theta) on a 50/50 splitter
    r = 0.5
    a = build_map(su11_nopa_program(0.0, 0.0, SqueezeParams(r, theta)), 2)
    b = build_map(two_arm_program(0.0, 0.0, SqueezeParams(-r, theta), SqueezeParams(r, theta)), 2)
    np.testing.assert_allclose(photon_covariance(a).cov_n, photon_covariance(b).cov_n, atol=1e-12)
    np.testing.assert_allclose(photon_covariance(a).mean_n, photon_covariance(b).mean_n, atol=1e-12)


def test_compose():
    m = build_map([Dopa(0, SqueezeParams(0.3, 0.2)), Displace(0, 1 + 0.5j)])
    assert compose(identity_map(1), m).allclose(m)
    assert compose(m, identity_map(1)).allclose(m)
    sq = apply_dopa(identity_map(1), 0, SqueezeParams(0.7))
    inv = apply_dopa(identity_map(1), 0, SqueezeParams(-0.7))
    assert compose(sq, inv).allclose(identity_map(1), atol=1e-12)
    with pytest.raises(InvalidArgument):
        compose(identity_map(1), identity_map(2))


def test_compose_matches_sequential_application():
    first = [Dopa(0, SqueezeParams(0.4, 0.1)), Displace(1, 0.7j), Beamsplitter(0, 1, 0.3)]
    second = [Nopa(0, 1, SqueezeParams(0.2, 0.9)), Phase(1, 0.4), Displace(0, -1.0)]
    assert compose(build_map(first, 2), build_map(second, 2)).allclose(build_map(first + second, 2))


def test_corrupted_map_is_reported():
    m = apply_dopa(identity_map(1), 0, SqueezeParams(0.8))
    bad = BogoliubovMap(m.d, m.C, 1.1 * m.S)
    assert validate_bogoliubov(bad).unitarity > 0.1
    assert not validate_bogoliubov(bad).ok()


# -- moments -----------------------------------------------------------------


def squeezed_coherent(alpha, r, theta=0.0):
    return build_map([Dopa(0, SqueezeParams(r, theta)), Displace(0, alpha)])


def test_mean_photon_examples():
    assert mean_photon(identity_map(1), 0) == 0
    assert mean_photon(squeezed_coherent(2, 0.5), 0) == pytest.approx(4.2715403, abs=1e-7)


def test_photon_covariance_examples():
    assert photon_covariance(squeezed_coherent(2, 0.0)).cov_n[0, 0] == pytest.approx(4)
    assert photon_covariance(squeezed_coherent(2, 0.5)).cov_n[0, 0] == pytest.approx(11.5636762, abs=1e-7)
    caves = build_map(two_arm_program(2.0, 0.0, SqueezeParams(0.0), SqueezeParams(0.5)), 2)
    cov = photon_covariance(caves).cov_n
    var_minus = cov[0, 0] + cov[1, 1] - 2 * cov[0, 1]
    assert var_minus == pytest.approx(4 * math.e + SINH2_HALF, abs=1e-12)
    assert var_minus == pytest.approx(11.1446676, abs=1e-7)


def test_quadrature_examples():
    for angle in (0.0, 0.7, math.pi / 2):
        np.testing.assert_allclose(quadrature_stats(identity_map(1), 0, angle), (0, 0.5), atol=1e-15)
    _, var = quadrature_stats(squeezed_coherent(0, 0.5), 0, math.pi / 2)
    assert var == pytest.approx(math.exp(-1) / 2, abs=1e-12)
    assert quadrature_stats(squeezed_coherent(2, 0.0), 0, 0.0)[0] == pytest.approx(2 * math.sqrt(2))


def test_quadratic_forms_reduce_to_photon_covariance():
    m = build_map(two_arm_program(1.3, 0.4, SqueezeParams(0.3, 0.2), SqueezeParams(0.5, 1.1)), 2)
    mom = photon_covariance(m)
    P = [np.diag([1, 0]), np.diag([0, 1])]
    for j in range(2):
        assert quadratic_mean(m, P[j]) == pytest.approx(mom.mean_n[j], rel=1e-12)
        for k in range(2):
            assert quadratic_covariance(m, P[j], P[k]) == pytest.approx(mom.cov_n[j, k], rel=1e-12)


# -- properties --------------------------------------------------------------

real = st.floats(-1.0, 1.0, allow_nan=False)
angle = st.floats(0.0, 2 * math.pi, allow_nan=False)
squeeze = st.builds(SqueezeParams, st.floats(-0.8, 0.8), angle)


@st.composite
def elements(draw, M=3):
    kind = draw(st.sampled_from(["displace", "phase", "bs", "dopa", "nopa"]))
    j = draw(st.integers(0, M - 1))
    k = draw(st.integers(0, M - 1).filter(lambda x: x != j))
    if kind == "displace":
        return Displace(j, complex(draw(real), draw(real)))
    if kind == "phase":
        return Phase(j, draw(angle))
    if kind == "bs":
        return Beamsplitter(j, k, draw(st.floats(0.0, 1.0)))
    if kind == "dopa":
        return Dopa(j, draw(squeeze))
    return Nopa(j, k, draw(squeeze))


@settings(max_examples=60, deadline=None)
@given(st.lists(elements(), min_size=10, max_size=20))
def test_random_chains_stay_bogoliubov(program):
    diag = validate_bogoliubov(build_map(program, 3))
    assert diag.ok(1e-10), diag


@settings(max_examples=40, deadline=None)
@given(st.lists(elements(), min_size=3, max_size=8), st.integers(0, 2), angle)
def test_phase_leaves_moments_unchanged(program, mode, phi):
    m = build_map(program, 3)
    a, b = photon_covariance(m), photon_covariance(apply_phase(m, mode, phi))
    np.testing.assert_allclose(b.mean_n, a.mean_n, atol=1e-12 * max(1, a.mean_n.max()))
    np.testing.assert_allclose(b.cov_n, a.cov_n, atol=1e-12 * max(1, np.abs(a.cov_n).max()))


@settings(max_examples=40, deadline=None)
@given(st.lists(elements(), min_size=3, max_size=8), st.floats(0.0, 1.0), angle)
def test_passive_elements_conserve_total_number(program, T, phi):
    m = build_map(program, 3)
    after = apply_phase(apply_beamsplitter(m, 0, 2, T), 2, phi)
    a, b = photon_covariance(m), photon_covariance(after)
    scale = max(1.0, np.abs(a.cov_n).max())
    assert b.mean_n.sum() == pytest.approx(a.mean_n.sum(), abs=1e-10 * scale)
    # Var(N_total) is invariant under passive mixing
    assert b.cov_n.sum() == pytest.approx(a.cov_n.sum(), abs=1e-10 * scale)


def two_arm_reduced_moments(a1, a2, r1, t1, r2, t2):
    """Closed-form N_pm moments for inputs a_j = alpha_j + z_j G_j + z_j^+ g_j."""
    G = [math.cosh(r1), math.cosh(r2)]
    g = [np.exp(2j * t1) * math.sinh(r1), np.exp(2j * t2) * math.sinh(r2)]
    al = [a1, a2]

    def A(j, k):
        return al[j] * G[k] + np.conj(al[j]) * g[k]

    vp = sum(abs(A(j, j)) ** 2 + 2 * G[j] ** 2 * abs(g[j]) ** 2 for j in range(2))
    vm = abs(A(1, 0)) ** 2 + abs(A(0, 1)) ** 2 + abs(G[0] * g[1] + G[1] * g[0]) ** 2
    cpm = np.conj(A(0, 0)) * A(1, 0) + np.conj(A(1, 1)) * A(0, 1)
    return vp, vm, cpm


def test_two_arm_moment_reduction_random():
    rng = np.random.default_rng(20240611)
    for _ in range(100):
        a1, a2 = rng.normal(size=2) + 1j * rng.normal(size=2)
        r1, r2 = rng.uniform(-1, 1, size=2)
        t1, t2 = rng.uniform(0, math.pi, size=2)
        program = [
            Dopa(0, SqueezeParams(r1, t1)),
            Dopa(1, SqueezeParams(r2, t2)),
            Displace(0, a1),
            Displace(1, a2),
            Beamsplitter(0, 1, 0.5),
        ]
        cov = photon_covariance(build_map(program, 2)).cov_n
        vp, vm, cpm = two_arm_reduced_moments(a1, a2, r1, t1, r2, t2)
        assert cov.sum() == pytest.approx(vp, abs=1e-10)
        assert cov[0, 0] + cov[1, 1] - 2 * cov[0, 1] == pytest.approx(vm, abs=1e-10)
        assert cov[0, 0] - cov[1, 1] == pytest.approx(cpm.real, abs=1e-10)
