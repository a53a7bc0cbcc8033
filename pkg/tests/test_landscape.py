import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polgyro.field import make_grid
from polgyro.landscape import (
    DisorderSpec,
    Landscape,
    kagome_periods,
    kagome_vectors,
    potential_disorder,
    potential_flat,
    potential_kagome,
    potential_mexican_hat,
    potential_periodic_1d,
    pump_gaussian,
    pump_periodic,
    pump_ring,
    pump_uniform,
)

G = make_grid(256, 256, 32, 32, "dirichlet")


def at(sampler, x, y=0.0):
    return float(sampler(np.array(x, float), np.array(y, float)))


def test_flat():
    V = Landscape(potential_flat(), pump_uniform(0)).sample_potential(G)
    assert V.shape == G.shape and not V.any()


def test_disorder_statistics_and_determinism():
    spec = DisorderSpec(0.5, 2.0, 42)
    V = potential_disorder(spec, G)
    assert abs(np.sqrt(np.mean(V**2)) - 0.5) <= 0.01
    assert abs(V.mean()) < 1e-12
    assert np.array_equal(V, potential_disorder(spec, G))
    assert not np.array_equal(V, potential_disorder(DisorderSpec(0.5, 2.0, 43), G))
    assert not potential_disorder(DisorderSpec(0.0, 2.0, 1), G).any()


def test_disorder_correlation_length():
    V = potential_disorder(DisorderSpec(1.0, 2.0, 7), make_grid(512, 512, 128, 128))
    c0 = np.mean(V * V)
    # correlation ~ exp(-r^2 / (2 lc^2)); at r = lc expect exp(-1/2)
    shift = int(round(2.0 / 0.25))
    c1 = 0.5 * (np.mean(V * np.roll(V, shift, 0)) + np.mean(V * np.roll(V, shift, 1)))
    assert c1 / c0 == pytest.approx(np.exp(-0.5), abs=0.08)


def test_disorder_rejects_short_correlation():
    with pytest.raises(ValueError):
        potential_disorder(DisorderSpec(0.5, G.dx, 0), G)
    with pytest.raises(ValueError):
        DisorderSpec(-1, 2)


def test_mexican_hat_values():
    V = potential_mexican_hat(1.5, 5.0)
    assert at(V, 5.0) == pytest.approx(-1.5)
    assert at(V, 0.0) == 0
    assert at(V, np.sqrt(2) * 5.0) == pytest.approx(0, abs=1e-12)
    assert at(V, 3.0, 4.0) == pytest.approx(-1.5)


def test_kagome_vectors_at_three_halves():
    b1, b2, b3, q = kagome_vectors(1.5)
    assert np.allclose(b1, [1 / 3, 0]) and np.allclose(b2, [-1 / 6, -np.sqrt(3) / 2])
    assert np.allclose(b3, [-1 / 6, np.sqrt(3) / 2]) and q == 0.5


def test_kagome_origin_and_positivity():
    V = potential_kagome(0.7, 4.0)
    assert at(V, 0.0) == pytest.approx(9 * 0.7)
    X, Y = G.mesh()
    assert V(X, Y).min() >= 0


def test_kagome_translation_symmetry():
    k0 = 3.0
    Tx, Ty = kagome_periods(k0)
    g = make_grid(120, 104, 3 * Tx, 4 * Ty, "periodic")
    V = potential_kagome(1.0, k0)(*g.mesh())
    assert np.max(np.abs(np.roll(V, 40, axis=1) - V)) <= 1e-12
    assert np.max(np.abs(np.roll(V, 26, axis=0) - V)) <= 1e-12
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-20, 20, (2, 200))
    Vs = potential_kagome(1.0, k0)
    assert np.allclose(Vs(x + Tx, y), Vs(x, y), atol=1e-12)
    assert np.allclose(Vs(x, y + Ty), Vs(x, y), atol=1e-12)
    assert np.allclose(Vs(-x, -y), Vs(x, y), atol=1e-12)


def test_periodic_potential():
    k0 = 2 * np.pi / 10
    V = potential_periodic_1d(2.0, k0)
    assert at(V, 0.0) == pytest.approx(2.0)
    assert at(V, np.pi / (2 * k0)) == pytest.approx(-2.0)
    x = np.linspace(-10, 10, 41)
    assert np.allclose(V(x + np.pi / k0, 0 * x), V(x, 0 * x))
    g = make_grid(128, 8, 40, 4, "periodic")
    Vg = potential_periodic_1d(1.0, k0, g)(*g.mesh())
    assert np.max(np.abs(np.roll(Vg, 16, axis=1) - Vg)) <= 1e-12


def test_incommensurate_warning():
    g = make_grid(64, 64, 33, 33, "periodic")
    with pytest.warns(UserWarning):
        potential_periodic_1d(1.0, 2 * np.pi / 10, g)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        potential_periodic_1d(1.0, 2 * np.pi / 10, make_grid(64, 64, 40, 40, "periodic"))
        potential_periodic_1d(1.0, 2 * np.pi / 10, make_grid(64, 64, 33, 33, "dirichlet"))


def test_gaussian_pump():
    P = pump_gaussian(2.0, 5.35)
    assert at(P, 0) == 2.0
    assert at(P, 5.35) == pytest.approx(2 / np.e)
    assert at(P, 0, 5.35) == pytest.approx(0.7358, abs=1e-4)


def test_uniform_pump():
    assert np.all(pump_uniform(2.0)(*G.mesh()) == 2.0)
    assert not pump_uniform(0.0)(*G.mesh()).any()
    with pytest.raises(ValueError):
        pump_uniform(-1.0)


def test_periodic_pump():
    k0 = 2 * np.pi / 10
    P = pump_periodic(2.0, k0, 1.0, 1.0)
    assert at(P, 0) == 3.0
    assert at(P, np.pi / (2 * k0)) == pytest.approx(1.0)
    vals = P(*G.mesh())
    assert vals.min() >= 1.0 - 1e-12 and vals.max() <= 3.0 + 1e-12


def test_ring_pump():
    P = pump_ring(2.0, 3, 1.0, 5.0)
    assert at(P, 5.0) == 2.0
    assert at(P, 6.0) == pytest.approx(2 * np.exp(-2 / 5))
    assert at(P, 6.0) == pytest.approx(1.3406, abs=1e-4)
    X, Y = G.mesh()
    assert np.array_equal(P(X, Y), pump_ring(2.0, -7, 1.0, 5.0)(X, Y))


@given(st.floats(0, 10), st.floats(0.1, 10), st.floats(0, 3), st.floats(0, 3))
def test_pumps_non_negative(P0, r0, eta, gamma):
    X, Y = make_grid(16, 16, 20, 20).mesh()
    for P in (pump_gaussian(P0, r0), pump_uniform(P0), pump_periodic(P0, 0.7, eta, gamma),
              pump_ring(P0, 1, r0, r0)):
        assert P(X, Y).min() >= 0


def test_landscape_validation():
    g = make_grid(8, 8, 1, 1)
    with pytest.raises(ValueError):
        Landscape(potential_flat(), -np.ones(g.shape)).sample_pump(g)
    with pytest.raises(ValueError):
        Landscape(np.zeros((3, 3)), pump_uniform(1)).sample_potential(g)
    arr = np.ones(g.shape)
    assert np.array_equal(Landscape(arr, arr).sample_pump(g), arr)
