"""Diagnostics: windings, angular lobe profiles, momentum populations,
steady-state detection and lobe-rotation estimation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.ndimage import map_coordinates
from scipy.signal import find_peaks

from polgyro.field import Boundary, ComplexField, field_norm

PROMINENCE_FRACTION = 0.1
ANNULUS_HALF_WIDTH_DX = 2.0
MIN_CONTRAST = 0.05


class UndefinedWindingError(ValueError):
    pass


class NoSignalError(ValueError):
    pass


class ObservableSeries:
    """Time-stamped scalar channels sharing one strictly increasing time axis."""

    def __init__(self):
        self._times: list[float] = []
        self._channels: dict[str, list[float]] = {}

    def append(self, t: float, row: Mapping[str, float]) -> None:
        if self._times and not t > self._times[-1]:
            raise ValueError(f"times must increase strictly ({t} after {self._times[-1]})")
        if self._times and set(row) != set(self._channels):
            raise ValueError(f"channel set changed: {sorted(row)} vs {sorted(self._channels)}")
        if not self._times:
            self._channels = {name: [] for name in row}
        self._times.append(float(t))
        for name, value in row.items():
            self._channels[name].append(float(value))

    def __len__(self):
        return len(self._times)

    @property
    def times(self) -> np.ndarray:
        return np.array(self._times)

    @property
    def names(self) -> list[str]:
        return list(self._channels)

    def channel(self, name: str) -> np.ndarray:
        return np.array(self._channels[name])

    def last(self) -> dict[str, float]:
        return {name: vals[-1] for name, vals in self._channels.items()}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + self.names)
            for k, t in enumerate(self._times):
                w.writerow([repr(t)] + [repr(self._channels[n][k]) for n in self.names])

    @classmethod
    def from_csv(cls, path) -> "ObservableSeries":
        series = cls()
        with open(path, newline="") as fh:
            rows = csv.reader(fh)
            header = next(rows)
            for r in rows:
                series.append(float(r[0]), {n: float(v) for n, v in zip(header[1:], r[1:])})
        return series

    def __eq__(self, other):
        if not isinstance(other, ObservableSeries):
            return NotImplemented
        return self._times == other._times and self._channels == other._channels


@dataclass(frozen=True, eq=False)
class AngularProfile:
    radius: float
    nbins: int
    values: np.ndarray
    half_width: float = 0.0

    @property
    def angles(self) -> np.ndarray:
        """Bin-centre angles ``b * 2pi / nbins``."""
        return np.arange(self.nbins) * (2 * np.pi / self.nbins)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["angle_bin", "value"])
            for b, v in enumerate(self.values):
                w.writerow([b, repr(float(v))])


def _interp(f: ComplexField, x: np.ndarray, y: np.ndarray, values=None) -> np.ndarray:
    """Bilinear interpolation of the field (or of ``values`` on its grid) at points."""
    g = f.grid
    data = f.values if values is None else values
    coords = np.array([(np.asarray(y) + g.ly / 2) / g.dy, (np.asarray(x) + g.lx / 2) / g.dx])
    mode = "grid-wrap" if g.boundary is Boundary.PERIODIC else "constant"
    if np.iscomplexobj(data):
        re = map_coordinates(data.real, coords, order=1, mode=mode)
        im = map_coordinates(data.imag, coords, order=1, mode=mode)
        return re + 1j * im
    return map_coordinates(data, coords, order=1, mode=mode)


def phase_winding(f: ComplexField, center=(0.0, 0.0), radius: float = 1.0,
                  n_samples: int | None = None, flip_tol: float = 1e-6) -> int:
    """Net phase winding (in units of 2pi) around a circle.

    Samples sit at the half-offset angles ``(j + 1/2) 2pi / n``.  A jump
    within ``flip_tol`` of +-pi between neighbours is the sign flip of a real
    standing-wave amplitude across a nodal line and contributes nothing.
    """
    g = f.grid
    if n_samples is None:
        need = max(256, 4 * 2 * np.pi * radius / min(g.dx, g.dy))
        n_samples = 1 << int(np.ceil(np.log2(need)))
    ang = (np.arange(n_samples) + 0.5) * (2 * np.pi / n_samples)
    z = _interp(f, center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang))
    peak = np.max(np.abs(f.values))
    if peak == 0 or np.min(np.abs(z)) <= 1e-8 * peak:
        raise UndefinedWindingError("density on the sampling circle falls below 1e-8 of the peak")
    d = np.angle(np.roll(z, -1) * np.conj(z))
    d = np.where(np.abs(d) > np.pi - flip_tol, 0.0, d)
    return int(np.rint(np.sum(d) / (2 * np.pi)))


def lobe_radius(f: ComplexField, center=(0.0, 0.0)) -> float:
    """Radius of the maximum of the azimuthally averaged density."""
    g = f.grid
    X, Y = g.mesh()
    r = np.hypot(X - center[0], Y - center[1])
    h = min(g.dx, g.dy)
    idx = np.rint(r / h).astype(int)
    dens = np.abs(f.values) ** 2
    sums = np.bincount(idx.ravel(), weights=dens.ravel())
    counts = np.bincount(idx.ravel())
    # only radii whose circle lies fully inside the domain
    rmax = int(min(g.lx, g.ly) / 2 / h) - 1
    avg = sums[: rmax + 1] / np.maximum(counts[: rmax + 1], 1)
    avg[:2] = -np.inf
    return float(np.argmax(avg) * h)


def angular_profile(f: ComplexField, radius: float, nbins: int = 360, center=(0.0, 0.0)) -> AngularProfile:
    """Density integrated over a thin annulus in each of ``nbins`` angular bins.

    The annulus half-width is ``2 dx``; each bin is sampled on a 5 (radial) x
    4 (angular) sub-grid by bilinear interpolation and multiplied by its area.
    """
    if nbins < 8:
        raise ValueError("need at least 8 angular bins")
    g = f.grid
    hw = ANNULUS_HALF_WIDTH_DX * g.dx
    dth = 2 * np.pi / nbins
    radii = np.clip(radius + np.linspace(-hw, hw, 5), 0.0, None)
    sub = (np.arange(4) + 0.5) / 4 - 0.5
    theta = np.arange(nbins)[:, None] * dth + sub[None, :] * dth
    R, T = np.meshgrid(radii, theta.ravel())
    dens = _interp(f, center[0] + R * np.cos(T), center[1] + R * np.sin(T), values=np.abs(f.values) ** 2)
    mean = dens.reshape(nbins, -1).mean(axis=1)
    area = dth * (radii[-1] ** 2 - radii[0] ** 2) / 2
    return AngularProfile(float(radius), int(nbins), np.clip(mean, 0.0, None) * area, hw)


def _peak_indices(values: np.ndarray, prominence_fraction: float = PROMINENCE_FRACTION) -> np.ndarray:
    n = values.size
    vmax = values.max()
    if vmax <= 0:
        return np.array([], dtype=int)
    tiled = np.concatenate([values, values, values])
    peaks, _ = find_peaks(tiled, prominence=prominence_fraction * vmax)
    return np.sort(peaks[(peaks >= n) & (peaks < 2 * n)] - n)


def lobe_stats(profile: AngularProfile) -> tuple[int, float]:
    """Number of lobes (peaks with prominence >= 10% of max) and (max-min)/(max+min)."""
    v = profile.values
    vmax, vmin = float(v.max()), float(v.min())
    contrast = 0.0 if vmax + vmin <= 0 else (vmax - vmin) / (vmax + vmin)
    return int(len(_peak_indices(v))), contrast


def lobe_angles(profile: AngularProfile) -> np.ndarray:
    """Angles of lobe maxima, refined by a parabola through the neighbouring bins."""
    v = profile.values
    n = v.size
    idx = _peak_indices(v)
    ym, y0, yp = v[(idx - 1) % n], v[idx], v[(idx + 1) % n]
    den = ym - 2 * y0 + yp
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = np.where(den != 0, 0.5 * (ym - yp) / den, 0.0)
    return (idx + delta) * (2 * np.pi / n)


def interlobe_phase(f: ComplexField, profile: AngularProfile, center=(0.0, 0.0)) -> float:
    """Mean absolute phase jump between adjacent lobe maxima, in ``[0, pi]``."""
    ang = lobe_angles(profile)
    if ang.size < 2:
        raise ValueError(f"need at least 2 lobes to compare phases, found {ang.size}")
    z = _interp(f, center[0] + profile.radius * np.cos(ang), center[1] + profile.radius * np.sin(ang))
    d = np.angle(np.roll(z, -1) * np.conj(z))
    return float(np.mean(np.abs(d)))


def momentum_populations(f: ComplexField, targets: Sequence) -> dict:
    """Fraction of discrete spectral power at each target wavevector.

    Targets are scalars (along x) or ``(kx, ky)`` pairs lying on the
    reciprocal lattice of the periodic grid.
    """
    g = f.grid
    if g.boundary is not Boundary.PERIODIC:
        raise ValueError("momentum populations need a periodic grid")
    power = np.abs(np.fft.fft2(f.values)) ** 2
    total = float(np.sum(power))
    out = {}
    for k in targets:
        kx, ky = (float(k), 0.0) if np.ndim(k) == 0 else (float(k[0]), float(k[1]))
        idx = []
        for kk, length, n in ((kx, g.lx, g.nx), (ky, g.ly, g.ny)):
            m = kk * length / (2 * np.pi)
            if abs(m - round(m)) > 1e-6 * max(1.0, abs(m)):
                raise ValueError(f"wavenumber {kk} is not on the reciprocal lattice (length {length})")
            idx.append(int(round(m)) % n)
        key = k if np.ndim(k) == 0 else tuple(k)
        out[key] = float(power[idx[1], idx[0]] / total) if total > 0 else 0.0
    return out


def steady_state_reached(series: ObservableSeries, eps: float, window: float,
                         channel: str = "peak_density") -> bool:
    """True iff the channel's spread over the trailing window is within ``eps`` of its last value."""
    t = series.times
    if len(t) < 2 or t[-1] - t[0] < window - 1e-12:
        return False
    vals = series.channel(channel)[t >= t[-1] - window - 1e-12]
    scale = abs(vals[-1])
    spread = float(vals.max() - vals.min())
    if scale == 0:
        return spread == 0
    return spread / scale <= eps


def synth_rotated_pattern(f: ComplexField, l: int, omega: float, t: float,
                          ring_k0r: float | None = None) -> ComplexField:
    """Density modulated as ``(1 + cos[2l(phi + omega t)]) |psi|^2``.

    With ``ring_k0r`` the ring-geometry factor ``2 k0 r`` replaces ``2l``.
    The returned field is the real square root of the modulated density.
    """
    _, phi = f.grid.polar()
    m = 2 * (ring_k0r if ring_k0r is not None else l)
    dens = (1 + np.cos(m * (phi + omega * t))) * np.abs(f.values) ** 2
    return f.with_values(np.sqrt(dens))


def estimate_rotation(before: AngularProfile, after: AngularProfile, l: int) -> float:
    """Angle ``theta`` with ``after(phi) ~ before(phi + theta)``, reported in ``[0, pi/|l|)``.

    The circular cross-correlation is folded onto one lobe period
    (``nbins / 2|l|`` bins) and its maximum refined by a parabola.
    """
    l = abs(int(l))
    if l == 0:
        raise ValueError("l must be non-zero")
    if before.nbins != after.nbins or not np.isclose(before.radius, after.radius):
        raise ValueError("profiles must share radius and bin count")
    n = before.nbins
    if n % (2 * l):
        raise ValueError(f"nbins={n} must be a multiple of 2l={2 * l}")
    for name, prof in (("before", before), ("after", after)):
        if lobe_stats(prof)[1] < MIN_CONTRAST:
            raise NoSignalError(f"{name} profile contrast below {MIN_CONTRAST}")
    a = after.values - after.values.mean()
    b = before.values - before.values.mean()
    corr = np.fft.ifft(np.conj(np.fft.fft(a)) * np.fft.fft(b)).real
    period = n // (2 * l)
    folded = corr.reshape(2 * l, period).sum(axis=0)
    m = int(np.argmax(folded))
    ym, y0, yp = folded[(m - 1) % period], folded[m], folded[(m + 1) % period]
    den = ym - 2 * y0 + yp
    delta = 0.5 * (ym - yp) / den if den != 0 else 0.0
    span = np.pi / l
    theta = ((m + delta) * (2 * np.pi / n)) % span
    if span - theta < 1e-9 * span:
        theta = 0.0
    return float(theta)


# ---------------------------------------------------------------- observers


def observe_norm(f: ComplexField) -> dict[str, float]:
    return {"norm": field_norm(f)}


def observe_peak_density(f: ComplexField) -> dict[str, float]:
    return {"peak_density": float(np.max(np.abs(f.values) ** 2))}


def make_lobe_observer(radius: float | None = None, nbins: int = 360):
    def observe(f: ComplexField) -> dict[str, float]:
        if not np.any(f.values):
            return {"lobe_count": 0.0, "lobe_contrast": 0.0}
        r = lobe_radius(f) if radius is None else radius
        count, contrast = lobe_stats(angular_profile(f, r, nbins))
        return {"lobe_count": float(count), "lobe_contrast": contrast}

    return observe


def make_momentum_observer(targets: Mapping[str, object]):
    names = list(targets)
    ks = [targets[n] for n in names]

    def observe(f: ComplexField) -> dict[str, float]:
        pops = momentum_populations(f, ks)
        return {f"pop_{name}": pops[k if np.ndim(k) == 0 else tuple(k)] for name, k in zip(names, ks)}

    return observe
