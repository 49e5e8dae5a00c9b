import numpy as np
import pytest

from iqmimo.model import (augment, build_bs_iqi, build_ut_iqi, covariance_profile, draw_channel,
                          hex_topology, iid_profile, no_bs_iqi, permutation_matrix, stack_re_im,
                          steering_matrix, ula_covariance)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_augment_is_a_homomorphism():
    rng = np.random.default_rng(0)
    a, b = crandn(rng, 4, 3), crandn(rng, 3, 5)
    assert np.allclose(augment(a @ b), augment(a) @ augment(b))
    assert np.allclose(augment(a.conj().T), augment(a).T)
    assert np.allclose(augment(a + 2 * a), 3 * augment(a))


def test_augment_acts_on_stacked_vectors():
    rng = np.random.default_rng(1)
    a, x = crandn(rng, 4, 3), crandn(rng, 3)
    assert np.allclose(augment(a) @ stack_re_im(x), stack_re_im(a @ x))
    assert np.allclose(augment(x), stack_re_im(x))


@pytest.mark.parametrize("n", [1, 2, 7])
def test_permutation_is_orthogonal(n):
    p = permutation_matrix(n)
    assert np.array_equal(p @ p.T, np.eye(2 * n))
    assert p.sum() == 2 * n


def test_permutation_pairs_re_im_per_branch():
    z = np.array([1 + 2j, 3 + 4j, 5 + 6j])
    assert np.array_equal(permutation_matrix(3) @ stack_re_im(z), [1, 2, 3, 4, 5, 6])


def test_permutation_rejects_empty():
    with pytest.raises(ValueError):
        permutation_matrix(0)


@pytest.mark.parametrize("eps,theta", [(0.0, 0.0), (0.1, 0.05), (0.2, -0.3)])
def test_ut_iqi_block_matches_complex_action(eps, theta):
    u = build_ut_iqi(eps, theta)
    x = 0.7 - 0.4j
    y = u.xi_a * x + u.xi_b * np.conj(x)
    assert np.allclose(u.Xi @ [x.real, x.imag], [y.real, y.imag])


@pytest.mark.parametrize("eps,theta", [(0.0, 0.0), (0.15, 0.02), (0.3, 1.0)])
def test_ut_iqi_frobenius_norm(eps, theta):
    # ||Xi||_F^2 = 2 (1 + eps^2), whatever the phase
    assert np.isclose(np.sum(build_ut_iqi(eps, theta).Xi ** 2), 2 * (1 + eps**2), rtol=0, atol=1e-13)


def test_ut_iqi_values():
    u = build_ut_iqi(0.0, 0.0)
    assert u.xi_a == 1 and u.xi_b == 0
    assert np.array_equal(u.Xi, np.eye(2))


@pytest.mark.parametrize("eps,theta", [(-0.1, 0.0), (0.1, np.pi), (np.nan, 0.0), (0.1, np.inf)])
def test_ut_iqi_rejects_bad_values(eps, theta):
    with pytest.raises(ValueError):
        build_ut_iqi(eps, theta)


def test_bs_iqi_trace_law():
    rng = np.random.default_rng(2)
    eps, theta = rng.uniform(0.1, 0.2, 16), rng.uniform(0.0, 0.05, 16)
    bs = build_bs_iqi(eps, theta)
    assert np.isclose(np.trace(bs.psi_aug @ bs.psi_aug.T), 2 * 16 + 2 * np.sum(eps**2), rtol=1e-13)


def test_bs_iqi_augmented_matches_apply():
    rng = np.random.default_rng(3)
    bs = build_bs_iqi(rng.uniform(0, 0.2, 5), rng.uniform(-0.1, 0.1, 5))
    z = crandn(rng, 5)
    assert np.allclose(bs.psi_aug @ stack_re_im(z), stack_re_im(bs.apply(z)))
    zz = crandn(rng, 5, 3)
    assert np.allclose(bs.apply(zz)[:, 1], bs.apply(zz[:, 1]))


def test_no_bs_iqi_is_identity():
    bs = no_bs_iqi(4)
    assert np.array_equal(bs.psi_aug, np.eye(8))
    assert np.allclose(bs.psi_b, 0)


def test_bs_iqi_shape_mismatch():
    with pytest.raises(ValueError):
        build_bs_iqi(np.zeros(3), np.zeros(4))


def test_hex_topology_geometry():
    top = hex_topology(7, 5, seed=4)
    assert top.distances.shape == (7, 7, 5)
    assert np.allclose(np.linalg.norm(top.bs_pos[1:], axis=1), np.sqrt(3))
    for i in range(7):
        assert np.allclose(top.distances[i, i], 2 / 3)
    # neighbouring UTs lie between sqrt(3) - 2/3 and sqrt(3) + 2/3 of the centre BS
    d = top.distances[0, 1:]
    assert d.min() >= np.sqrt(3) - 2 / 3 - 1e-12 and d.max() <= np.sqrt(3) + 2 / 3 + 1e-12


def test_hex_topology_is_seeded():
    a, b = hex_topology(7, 3, seed=9), hex_topology(7, 3, seed=9)
    assert np.array_equal(a.distances, b.distances)


@pytest.mark.parametrize("L,K", [(2, 3), (7, 0)])
def test_hex_topology_rejects(L, K):
    with pytest.raises(ValueError):
        hex_topology(L, K)


def test_steering_vectors_unit_norm_over_m():
    b = steering_matrix(8, 4)
    assert np.allclose(np.sum(np.abs(b) ** 2, axis=0), 8 / 4)
    # first AoA is -pi/2: phase advances by pi per element at half-wavelength spacing
    assert np.allclose(b[:, 0] * 2, np.exp(-1j * np.pi * np.arange(8) * -1.0))


@pytest.mark.parametrize("c", [2 / 3, 1.0, 2.1])
def test_covariance_trace_law(c):
    # tr(R) = c^-3 * N whatever M is
    n = 12
    for m in (1, 6, 12):
        r = ula_covariance(c, n, m)
        assert np.isclose(np.trace(r @ r.conj().T).real, c**-3 * n, rtol=1e-12)


def test_covariance_rank_is_m():
    r = ula_covariance(1.0, 16, 5)
    assert np.linalg.matrix_rank(r @ r.conj().T, tol=1e-9) == 5


@pytest.mark.parametrize("c,m", [(0.0, 2), (1.0, 0), (1.0, 17)])
def test_covariance_rejects(c, m):
    with pytest.raises(ValueError):
        ula_covariance(c, 16, m)


def test_profile_scaling():
    top = hex_topology(7, 2, seed=1)
    prof = covariance_profile(top, 8)
    assert np.allclose(prof.r(0, 3, 1), top.distances[0, 3, 1] ** -3 * prof.r_unit)
    a = augment(prof.r_sqrt(0, 3, 1))
    assert np.allclose(prof.r_aug(0, 3, 1), a @ a.T)
    assert np.allclose(prof.r_aug(0, 3, 1), augment(prof.r(0, 3, 1)))


def test_channel_covariance_matches_profile():
    rng = np.random.default_rng(5)
    top = hex_topology(7, 2, seed=2)
    prof = covariance_profile(top, 6, 3)
    acc = np.zeros((6, 6), complex)
    trials = 4000
    for _ in range(trials):
        h = draw_channel(prof, rng).h[(0, 2)][:, 1]
        acc += np.outer(h, h.conj())
    r = prof.r(0, 2, 1)
    assert np.allclose(acc / trials, r, atol=6 * np.abs(r).max() / np.sqrt(trials))


def test_iid_profile_unit_variance():
    rng = np.random.default_rng(6)
    h = draw_channel(iid_profile(1, 200, 50), rng).h[(0, 0)]
    assert abs(np.mean(np.abs(h) ** 2) - 1) < 0.02
    assert abs(np.mean(h.real**2) - 0.5) < 0.02
