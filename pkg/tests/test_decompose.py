import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from swarm_spectral.configuration import Configuration, random_cloud
from swarm_spectral.decompose import decompose, evolve, reconstruct, reconstruct_many, rotate_coefficients
from swarm_spectral.spectral import closed_form_spectrum
from swarm_spectral.topology import dense_matrix, go_to_the_middle, lift, make_circulant, n_bug


def exact_by_expm(top, z0, t):
    A = lift(dense_matrix(top), "stacked").entries - np.eye(2 * top.n)
    return Configuration.from_stacked(expm(A * t) @ z0.stacked).positions


@pytest.mark.parametrize("top", [n_bug(7), n_bug(6), go_to_the_middle(5), make_circulant([0, 5, -4])])
def test_matches_matrix_exponential(top):
    z0 = random_cloud(top.n, 11)
    dec = decompose(z0, closed_form_spectrum(top))
    for t in (0.0, 0.3, 1.7, 4.0):
        np.testing.assert_allclose(reconstruct(dec, t).positions, exact_by_expm(top, z0, t), atol=1e-10)


def test_zstar_is_mean():
    z0 = random_cloud(9, 3)
    dec = decompose(z0, closed_form_spectrum(n_bug(9)))
    np.testing.assert_allclose(dec.zstar, z0.positions.mean(axis=0), atol=1e-15)
    np.testing.assert_allclose(dec.zstar_stacked, np.repeat(dec.zstar, 9))


def test_components_sum_to_configuration():
    z0 = random_cloud(8, 5)
    dec = decompose(z0, closed_form_spectrum(go_to_the_middle(8)))
    total = dec.zstar_stacked + sum(dec.xi0)
    np.testing.assert_allclose(total, z0.stacked, atol=1e-13)


def test_norm_conservation_and_decay():
    z0 = random_cloud(7, 2)
    dec = decompose(z0, closed_form_spectrum(n_bug(7)))
    for t in np.linspace(0, 10, 21):
        comp = evolve(dec, t)
        for b0, b in zip(dec.beta0, comp.beta):
            assert abs(np.linalg.norm(b) - np.linalg.norm(b0)) < 1e-12
        np.testing.assert_allclose(comp.alpha, np.exp(dec.rates * t))


def test_rotation_of_coefficients():
    sub = closed_form_spectrum(n_bug(5)).subspaces[1]
    beta = np.array([1.0, 0.0, 0.0, 1.0])
    theta = sub.rotation * 0.5
    out = rotate_coefficients(sub, beta, 0.5)
    np.testing.assert_allclose(out, [np.cos(theta), np.sin(theta), -np.sin(theta), np.cos(theta)])


def test_rejects_non_gathering():
    with pytest.raises(ValueError, match="not consistent"):
        decompose(random_cloud(3, 0), closed_form_spectrum(make_circulant([0, 0.5, 0.4])))
    with pytest.raises(ValueError, match="not gathering"):
        decompose(random_cloud(4, 0), closed_form_spectrum(make_circulant([0, 0, 1, 0])))


def test_rejects_bad_inputs():
    spec = closed_form_spectrum(n_bug(4))
    with pytest.raises(ValueError):
        decompose(random_cloud(5, 0), spec)
    with pytest.raises(ValueError):
        evolve(decompose(random_cloud(4, 0), spec), -1.0)


def test_reconstruct_many_shape():
    dec = decompose(random_cloud(4, 1), closed_form_spectrum(n_bug(4)))
    assert reconstruct_many(dec, [0, 1, 2]).shape == (3, 4, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1), st.floats(0, 5))
def test_flow_property(n, seed, t):
    top = go_to_the_middle(n) if n > 2 else n_bug(2)
    spec = closed_form_spectrum(top)
    z0 = random_cloud(n, seed)
    dec = decompose(z0, spec)
    zt = reconstruct(dec, t)
    # semigroup: evolving zt by s equals evolving z0 by t + s
    np.testing.assert_allclose(reconstruct(decompose(zt, spec), 0.5).positions,
                               reconstruct(dec, t + 0.5).positions, atol=1e-12)
    np.testing.assert_allclose(zt.positions.mean(axis=0), z0.positions.mean(axis=0), atol=1e-12)


def test_residual_at_t30_is_the_slow_mode_not_integration_error():
    # on a unit cloud the go-to-the-middle N=7 residual after t=30 is set by exp(30 (cos(2 pi/7) - 1))
    from swarm_spectral.dynamics import simulate

    top = go_to_the_middle(7)
    z0 = random_cloud(7, 0)
    dec = decompose(z0, closed_form_spectrum(top))
    exact = reconstruct(dec, 30.0).positions
    rk4 = simulate(dense_matrix(top), z0, dt=1e-3, T=30.0).final.positions
    assert np.abs(exact - rk4).max() < 1e-12
    residual = np.linalg.norm(exact - dec.zstar, axis=1).max()
    bound = np.exp(30 * (np.cos(2 * np.pi / 7) - 1))
    assert 1e-6 < residual <= bound * np.linalg.norm(dec.beta0[0]) * np.sqrt(2 / 7) + 1e-15
