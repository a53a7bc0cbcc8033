import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polgyro.analysis import (
    AngularProfile,
    NoSignalError,
    ObservableSeries,
    UndefinedWindingError,
    angular_profile,
    estimate_rotation,
    interlobe_phase,
    lobe_angles,
    lobe_radius,
    lobe_stats,
    make_lobe_observer,
    make_momentum_observer,
    momentum_populations,
    phase_winding,
    steady_state_reached,
    synth_rotated_pattern,
)
from polgyro.field import ComplexField, make_grid
from polgyro.oam import LGParams, ModeSpec, lg_mode, sample_superposition
from polgyro.solver import seed_ring_superposition

LG = LGParams.from_waist(3.0)


@pytest.fixture(scope="module")
def grid():
    return make_grid(128, 128, 24, 24, "dirichlet")


@pytest.fixture(scope="module")
def dipole(grid):
    return sample_superposition(ModeSpec([(1, 0, 2**-0.5), (-1, 0, 2**-0.5)]), LG, 0.0, grid)


def cos2_profile(l, nbins=360, shift=0.0):
    ang = np.arange(nbins) * 2 * np.pi / nbins
    return AngularProfile(5.0, nbins, np.cos(l * (ang + shift)) ** 2)


def test_winding_of_lg_modes(grid):
    for l in (1, 2, -3):
        assert phase_winding(lg_mode(l, 0, LG, 0.0, grid), (0, 0), 2.0) == -l
    with pytest.raises(UndefinedWindingError):
        phase_winding(ComplexField(grid, np.zeros(grid.shape)), (0, 0), 2.0)


def test_winding_of_standing_wave_is_zero(dipole):
    assert phase_winding(dipole, (0, 0), 2.12) == 0


def test_dipole_profile_and_phase(dipole):
    r = lobe_radius(dipole)
    assert r == pytest.approx(3 / np.sqrt(2), abs=0.2)
    prof = angular_profile(dipole, r, 360)
    count, contrast = lobe_stats(prof)
    assert count == 2 and contrast > 0.99
    ang = lobe_angles(prof)
    assert abs(abs(ang[1] - ang[0]) - np.pi) < 0.02
    assert interlobe_phase(dipole, prof) == pytest.approx(np.pi, abs=0.1)


def test_uniform_field_flat_profile(grid):
    f = ComplexField(grid, np.ones(grid.shape))
    prof = angular_profile(f, 5.0, 360)
    assert np.ptp(prof.values) / prof.values.mean() < 1e-10
    assert lobe_stats(prof) == (0, pytest.approx(0.0, abs=1e-12))
    with pytest.raises(ValueError):
        interlobe_phase(f, prof)


def test_ring_l5_ten_maxima():
    g = make_grid(256, 256, 20, 20, "dirichlet")
    f = seed_ring_superposition(5, 1.0, 5.0, g)
    prof = angular_profile(f, 5.0, 720)
    assert lobe_stats(prof)[0] == 10
    assert interlobe_phase(f, prof) == pytest.approx(np.pi, abs=0.1)


@pytest.mark.parametrize("l", [1, 2, 5])
def test_ideal_cos2_profile(l):
    count, contrast = lobe_stats(cos2_profile(l))
    assert count == 2 * l and contrast == pytest.approx(1.0)


def test_single_vortex_has_no_lobes(grid):
    f = lg_mode(1, 0, LG, 0.0, grid)
    prof = angular_profile(f, lobe_radius(f), 360)
    assert lobe_stats(prof)[0] == 0
    with pytest.raises(ValueError, match="2 lobes"):
        interlobe_phase(f, prof)


def test_angular_profile_rejects_few_bins(dipole):
    with pytest.raises(ValueError):
        angular_profile(dipole, 2.0, 4)


def test_momentum_populations_examples():
    g = make_grid(64, 64, 40, 40, "periodic")
    X, _ = g.mesh()
    k0 = 2 * np.pi / 10
    pops = momentum_populations(ComplexField(g, np.exp(1j * k0 * X)), [k0, 0.0])
    assert pops[k0] == pytest.approx(1.0) and pops[0.0] == pytest.approx(0.0, abs=1e-20)
    f = ComplexField(g, (np.exp(1j * k0 * X) + np.exp(-1j * k0 * X)) / np.sqrt(2))
    pops = momentum_populations(f, [(k0, 0.0), (-k0, 0.0), (0.0, 0.0)])
    assert pops[(k0, 0.0)] == pytest.approx(0.5)
    assert pops[(-k0, 0.0)] == pytest.approx(0.5)
    assert pops[(0.0, 0.0)] == pytest.approx(0.0, abs=1e-20)
    with pytest.raises(ValueError):
        momentum_populations(f, [0.1])
    with pytest.raises(ValueError):
        momentum_populations(ComplexField(make_grid(8, 8, 4, 4, "dirichlet"), np.ones((8, 8))), [0.0])


def test_momentum_observer_names():
    g = make_grid(32, 32, 40, 40, "periodic")
    obs = make_momentum_observer({"zero": [0.0, 0.0], "k": 2 * np.pi / 10})
    out = obs(ComplexField(g, np.ones(g.shape)))
    assert out == {"pop_zero": pytest.approx(1.0), "pop_k": pytest.approx(0.0)}


def test_lobe_observer_zero_field(grid):
    assert make_lobe_observer()(ComplexField(grid, np.zeros(grid.shape))) == {"lobe_count": 0.0, "lobe_contrast": 0.0}


def series_of(values, dt=0.5):
    s = ObservableSeries()
    for i, v in enumerate(values):
        s.append(i * dt, {"peak_density": v})
    return s


def test_steady_state():
    assert steady_state_reached(series_of([1.0] * 10), 1e-3, 2.0)
    assert not steady_state_reached(series_of(np.linspace(1, 2, 10)), 1e-3, 2.0)
    # too short a record to cover the window
    assert not steady_state_reached(series_of([1.0, 1.0]), 1e-3, 2.0)
    # only the trailing window matters
    assert steady_state_reached(series_of([5.0, 3.0] + [1.0] * 6), 1e-3, 2.0)


def test_series_rules_and_csv(tmp_path):
    s = series_of([1.0, 2.0 / 3.0, np.pi])
    with pytest.raises(ValueError):
        s.append(0.0, {"peak_density": 1.0})
    with pytest.raises(ValueError):
        s.append(9.0, {"other": 1.0})
    s.to_csv(tmp_path / "s.csv")
    assert ObservableSeries.from_csv(tmp_path / "s.csv") == s
    assert s.last() == {"peak_density": np.pi}


def test_profile_csv(tmp_path):
    prof = cos2_profile(1, 16)
    prof.to_csv(tmp_path / "p.csv")
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0] == "angle_bin,value" and len(rows) == 17


def test_synth_pattern(dipole):
    base = ComplexField(dipole.grid, np.exp(-np.sum(np.square(dipole.grid.mesh()), axis=0) / 18))
    r = 3.0
    p0 = angular_profile(synth_rotated_pattern(base, 1, 0.0, 1.0), r, 720)
    assert lobe_angles(p0)[0] == pytest.approx(0.0, abs=2 * np.pi / 720)
    half = angular_profile(synth_rotated_pattern(base, 1, np.pi / 2, 1.0), r, 720)
    # maxima and minima exchange
    assert np.argmax(half.values) in (179, 180, 181, 539, 540, 541)
    shifted = angular_profile(synth_rotated_pattern(base, 1, 0.3, 1.0), r, 720)
    d = (lobe_angles(shifted)[0] - lobe_angles(p0)[0] + 0.3) % np.pi
    assert min(d, np.pi - d) <= 2 * np.pi / 720


def test_estimate_rotation_examples():
    before = cos2_profile(1, 720)
    assert estimate_rotation(before, before, 1) == 0.0
    after = cos2_profile(1, 720, 0.3)
    assert estimate_rotation(before, after, 1) == pytest.approx(0.3, abs=2 * np.pi / 720)
    assert estimate_rotation(cos2_profile(3, 720), cos2_profile(3, 720), 3) == 0.0
    assert estimate_rotation(cos2_profile(3, 720), cos2_profile(3, 720, np.pi / 3), 3) == pytest.approx(0.0, abs=1e-9)
    flat = AngularProfile(5.0, 720, np.ones(720))
    with pytest.raises(NoSignalError):
        estimate_rotation(before, flat, 1)
    with pytest.raises(ValueError):
        estimate_rotation(before, cos2_profile(1, 360), 1)
    with pytest.raises(ValueError):
        estimate_rotation(before, before, 0)


@given(l=st.sampled_from([1, 2, 5]), frac=st.floats(0.0, 0.999))
def test_estimate_rotation_recovers_shift(l, frac):
    theta = frac * np.pi / l
    est = estimate_rotation(cos2_profile(l, 720), cos2_profile(l, 720, theta), l)
    d = abs(est - theta)
    assert min(d, np.pi / l - d) <= 2 * np.pi / 720
