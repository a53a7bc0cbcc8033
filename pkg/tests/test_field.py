import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polgyro.field import (
    Boundary,
    ComplexField,
    SimParams,
    UnitSystem,
    density_and_phase,
    field_norm,
    make_grid,
    read_snapshot,
    write_snapshot,
)
from polgyro.oam import LGParams, lg_mode


def test_grid_spacing():
    g = make_grid(64, 64, 32, 32, "periodic")
    assert g.dx == g.dy == 0.5
    assert g.shape == (64, 64)


def test_minimal_dirichlet_grid():
    g = make_grid(8, 8, 8, 8, "dirichlet")
    assert g.boundary is Boundary.DIRICHLET


@pytest.mark.parametrize("args", [(4, 64, 32, 32), (64, 64, 0, 32), (64, 64, 32, -1)])
def test_grid_rejects_bad_sizes(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_coordinates_and_origin():
    g = make_grid(16, 8, 8, 4)
    assert g.x[0] == -4 and g.x[8] == 0.0
    assert g.y[0] == -2 and g.y[4] == 0.0
    X, Y = g.mesh()
    assert X.shape == (8, 16) and X[0, 3] == g.x[3] and Y[5, 0] == g.y[5]


@given(st.integers(8, 40), st.integers(8, 40), st.floats(0.5, 50), st.floats(0.5, 50))
def test_index_coordinate_round_trip(nx, ny, lx, ly):
    g = make_grid(nx, ny, lx, ly)
    for i in range(nx):
        for j in (0, ny // 2, ny - 1):
            assert g.nearest_index(g.x[i], g.y[j]) == (i, j)


def test_boundary_parse():
    assert Boundary.parse("Dirichlet-zero") is Boundary.DIRICHLET
    assert Boundary.parse("PERIODIC") is Boundary.PERIODIC
    with pytest.raises(ValueError):
        Boundary.parse("open")


def test_field_rejects_nonfinite_and_wrong_shape():
    g = make_grid(8, 8, 1, 1)
    bad = np.zeros(g.shape, complex)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        ComplexField(g, bad)
    with pytest.raises(ValueError):
        ComplexField(g, np.zeros((3, 3)))


def test_field_is_immutable():
    g = make_grid(8, 8, 1, 1)
    f = ComplexField.zeros(g)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1


def test_norm_trivial_cases():
    g = make_grid(32, 32, 32, 32)
    assert field_norm(ComplexField.zeros(g)) == 0
    assert field_norm(ComplexField(g, np.ones(g.shape))) == pytest.approx(1024)


def test_norm_of_sampled_gaussian_mode():
    g = make_grid(256, 256, 24, 24)
    f = lg_mode(0, 0, LGParams.from_waist(2.0), 0.0, g)
    assert abs(field_norm(f) - 1) <= 1e-6


@given(st.floats(-10, 10))
def test_norm_invariant_under_global_phase(theta):
    g = make_grid(16, 16, 4, 4)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    a = field_norm(ComplexField(g, v))
    b = field_norm(ComplexField(g, v * np.exp(1j * theta)))
    assert abs(a - b) <= 1e-12 * a


def test_density_and_phase_examples():
    g = make_grid(8, 8, 1, 1)
    d, p = density_and_phase(ComplexField(g, np.full(g.shape, 1j)))
    assert np.allclose(d, 1) and np.allclose(p, np.pi / 2)
    d, p = density_and_phase(ComplexField(g, np.full(g.shape, -1 + 0j)))
    assert np.all(p == np.pi)
    d, p = density_and_phase(ComplexField(g, np.full(g.shape, complex(-1.0, -0.0))))
    assert np.all(p == np.pi)
    _, p = density_and_phase(ComplexField.zeros(g))
    assert np.all(p == 0)


def test_vortex_phase_decreases_with_azimuth():
    g = make_grid(64, 64, 8, 8)
    _, phi = g.polar()
    f = ComplexField(g, np.exp(-1j * phi))
    _, p = density_and_phase(f)
    # walk a circle counter-clockwise: the unwrapped phase must fall by 2 pi
    ang = np.linspace(0, 2 * np.pi, 65)[:-1]
    idx = [g.nearest_index(2.5 * np.cos(a), 2.5 * np.sin(a)) for a in ang]
    seq = np.unwrap([p[j, i] for i, j in idx])
    assert seq[-1] - seq[0] < -5.5


@given(st.integers(0, 2**31))
def test_density_phase_reconstructs_field(seed):
    g = make_grid(8, 8, 1, 1)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    d, p = density_and_phase(ComplexField(g, v))
    rebuilt = np.sqrt(d) * np.exp(1j * p)
    assert np.max(np.abs(rebuilt - v) / np.abs(v)) <= 1e-12


def test_unit_systems():
    u = UnitSystem()
    assert u.time_unit == pytest.approx(2 * u.mass * 1e-12 / 1.054571817e-34)
    m = UnitSystem("physical-meV")
    assert m.kind == "mev"
    assert m.time_unit == pytest.approx(1.054571817e-34 / 1.602176634e-22)
    # hbar^2 / (2 m a^2) equals one meV in the meV system
    assert 1.054571817e-34**2 / (2 * m.mass * m.length_unit**2) == pytest.approx(1.602176634e-22)
    with pytest.raises(ValueError):
        UnitSystem("furlongs")


def test_sim_params_validation():
    SimParams(g=-1.0)  # attractive interaction is allowed
    with pytest.raises(ValueError):
        SimParams(gamma=-0.1)
    with pytest.raises(ValueError):
        SimParams(eta=-1)


def test_snapshot_round_trip_and_layout(tmp_path):
    g = make_grid(12, 10, 6, 5, "dirichlet")
    rng = np.random.default_rng(0)
    v = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    f = ComplexField(g, v, t=2.5)
    path = tmp_path / "a.pgyr"
    write_snapshot(f, path)
    raw = path.read_bytes()
    magic, ver, nx, ny, dx, dy, t, code = struct.unpack_from("<4sIIIdddB", raw)
    assert (magic, ver, nx, ny, dx, dy, t, code) == (b"PGYR", 1, 12, 10, 0.5, 0.5, 2.5, 1)
    assert len(raw) == struct.calcsize("<4sIIIdddB") + 16 * 120
    # first value is sample (i=0, j=0) followed by (i=1, j=0): x runs fastest
    re0, im0, re1, im1 = struct.unpack_from("<4d", raw, struct.calcsize("<4sIIIdddB"))
    assert (re0, im0, re1, im1) == (v[0, 0].real, v[0, 0].imag, v[0, 1].real, v[0, 1].imag)
    assert read_snapshot(path) == f


def test_snapshot_rejects_corrupt_files(tmp_path):
    g = make_grid(8, 8, 1, 1)
    path = tmp_path / "a.pgyr"
    write_snapshot(ComplexField.zeros(g), path)
    data = path.read_bytes()
    (tmp_path / "b.pgyr").write_bytes(b"XXXX" + data[4:])
    (tmp_path / "c.pgyr").write_bytes(data[:-3])
    for name in ("b.pgyr", "c.pgyr"):
        with pytest.raises(ValueError):
            read_snapshot(tmp_path / name)
