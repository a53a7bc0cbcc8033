"""External potentials and pump profiles.

Samplers are plain callables ``f(x, y) -> ndarray`` evaluated on coordinate
arrays; a :class:`Landscape` pairs a potential with a pump and evaluates both
on a grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from polgyro.field import Boundary, GridSpec

Sampler = Callable[[np.ndarray, np.ndarray], np.ndarray]
FieldOrSampler = Union[np.ndarray, Sampler]


@dataclass(frozen=True)
class DisorderSpec:
    rms: float
    corr_len: float
    seed: int = 0

    def __post_init__(self):
        if self.rms < 0:
            raise ValueError(f"disorder rms must be >= 0, got {self.rms}")
        if not self.corr_len > 0:
            raise ValueError(f"correlation length must be positive, got {self.corr_len}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("disorder seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class Landscape:
    potential: FieldOrSampler
    pump: FieldOrSampler
    metadata: dict = field(default_factory=dict)

    def _eval(self, what: FieldOrSampler, grid: GridSpec, name: str) -> np.ndarray:
        if callable(what):
            X, Y = grid.mesh()
            arr = np.broadcast_to(np.asarray(what(X, Y), dtype=float), grid.shape)
        else:
            arr = np.asarray(what, dtype=float)
            if arr.shape != grid.shape:
                raise ValueError(f"{name} array has shape {arr.shape}, grid needs {grid.shape}")
        if not np.isfinite(arr).all():
            raise ValueError(f"{name} is not finite on the grid")
        return np.array(arr, dtype=float)

    def sample_potential(self, grid: GridSpec) -> np.ndarray:
        return self._eval(self.potential, grid, "potential")

    def sample_pump(self, grid: GridSpec) -> np.ndarray:
        P = self._eval(self.pump, grid, "pump")
        if (P < 0).any():
            raise ValueError(f"pump must be non-negative, minimum is {P.min():.3g}")
        return P


def potential_flat() -> Sampler:
    def V(x, y):
        return np.zeros(np.broadcast(x, y).shape)

    return V


def potential_disorder(spec: DisorderSpec, grid: GridSpec) -> np.ndarray:
    """Mean-zero Gaussian random potential with Gaussian correlations.

    White noise from ``numpy.random.default_rng(seed)`` is filtered in Fourier
    space by ``exp(-k^2 corr_len^2 / 4)``, which gives a two-point correlation
    ``~exp(-r^2 / (2 corr_len^2))``, then shifted to zero mean and rescaled to
    the requested RMS.
    """
    if spec.corr_len <= max(grid.dx, grid.dy):
        raise ValueError(
            f"correlation length {spec.corr_len} must exceed the grid spacing {max(grid.dx, grid.dy):.3g}"
        )
    if spec.rms == 0:
        return np.zeros(grid.shape)
    rng = np.random.default_rng(int(spec.seed))
    noise = rng.standard_normal(grid.shape)
    kx, ky = grid.wavenumbers()
    k2 = kx[None, :] ** 2 + ky[:, None] ** 2
    smooth = np.fft.ifft2(np.fft.fft2(noise) * np.exp(-k2 * spec.corr_len**2 / 4)).real
    smooth -= smooth.mean()
    rms = np.sqrt(np.mean(smooth**2))
    return smooth * (spec.rms / rms)


def potential_mexican_hat(V0: float, r_min: float) -> Sampler:
    """``V0 (r^4/r_min^4 - 2 r^2/r_min^2)``: a circular channel of depth V0 at r_min."""
    if not (V0 > 0 and r_min > 0):
        raise ValueError("mexican hat needs V0 > 0 and r_min > 0")

    def V(x, y):
        s = (x**2 + y**2) / r_min**2
        return V0 * (s**2 - 2 * s)

    return V


def kagome_vectors(p_param: float = 1.5):
    """Reciprocal vectors b1, b2, b3 and the f1 prefactor scale of the Kagome potential."""
    s = 1 + 4 * p_param / 3
    b1 = np.array([1 / s, 0.0])
    b2 = np.array([-1 / (2 * s), -np.sqrt(3) / 2])
    b3 = np.array([-1 / (2 * s), np.sqrt(3) / 2])
    return b1, b2, b3, p_param / s


def potential_kagome(V0: float, k0: float, p_param: float = 1.5) -> Sampler:
    """Three-wave Kagome potential ``V0 |f1 e^{i k0 b1.x} + e^{i k0 b2.x} + e^{i k0 b3.x}|^2``
    with ``f1(x) = exp(i k0 q x) cos(k0 q x)`` and ``q = p / (1 + 4p/3)``."""
    if not (V0 > 0 and k0 > 0):
        raise ValueError("Kagome potential needs V0 > 0 and k0 > 0")
    b1, b2, b3, q = kagome_vectors(p_param)

    def V(x, y):
        f1 = np.exp(1j * k0 * q * x) * np.cos(k0 * q * x)
        amp = (
            f1 * np.exp(1j * k0 * (b1[0] * x + b1[1] * y))
            + np.exp(1j * k0 * (b2[0] * x + b2[1] * y))
            + np.exp(1j * k0 * (b3[0] * x + b3[1] * y))
        )
        return V0 * np.abs(amp) ** 2

    return V


def kagome_periods(k0: float) -> tuple[float, float]:
    """Shortest pure-x and pure-y translations leaving the p=3/2 Kagome potential invariant."""
    return 4 * np.pi / k0, 4 * np.pi / (np.sqrt(3) * k0)


def _warn_incommensurate(length: float, period: float, what: str, grid: GridSpec | None):
    if grid is None or grid.boundary is not Boundary.PERIODIC:
        return
    ratio = length / period
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        warnings.warn(
            f"{what}: domain length {length:.6g} is not a multiple of the period {period:.6g}",
            stacklevel=3,
        )


def potential_periodic_1d(V0: float, k0: float, grid: GridSpec | None = None) -> Sampler:
    """``V0 cos(2 k0 x)``; period pi/k0, half that of the matching pump."""
    if k0 <= 0:
        raise ValueError("k0 must be positive")
    _warn_incommensurate(grid.lx if grid else 0.0, np.pi / k0, "periodic potential", grid)

    def V(x, y):
        return V0 * np.cos(2 * k0 * x) + 0 * y

    return V


def pump_gaussian(P0: float, r0: float) -> Sampler:
    if P0 < 0 or r0 <= 0:
        raise ValueError("Gaussian pump needs P0 >= 0 and r0 > 0")

    def P(x, y):
        return P0 * np.exp(-(x**2 + y**2) / r0**2)

    return P


def pump_uniform(P0: float) -> Sampler:
    if P0 < 0:
        raise ValueError(f"pump rate must be non-negative, got P0={P0}")

    def P(x, y):
        return np.full(np.broadcast(x, y).shape, float(P0))

    return P


def pump_periodic(P0: float, k0: float, eta: float, gamma: float, grid: GridSpec | None = None) -> Sampler:
    """``P0 eta cos^2(k0 x) + gamma``: gain shaped like the target ``cos(k0 x)`` density."""
    if P0 < 0 or eta < 0 or gamma < 0:
        raise ValueError("periodic pump needs non-negative P0, eta and gamma")
    if k0 <= 0:
        raise ValueError("k0 must be positive")
    _warn_incommensurate(grid.lx if grid else 0.0, np.pi / k0, "periodic pump", grid)

    def P(x, y):
        return P0 * eta * np.cos(k0 * x) ** 2 + gamma + 0 * y

    return P


def pump_ring(P0: float, l: int, V0: float, r_min: float) -> Sampler:
    """``P0 |psi_l|^2`` for the ring wavefunction; the winding ``l`` drops out."""
    if P0 < 0 or V0 <= 0 or r_min <= 0:
        raise ValueError("ring pump needs P0 >= 0, V0 > 0, r_min > 0")
    del l

    def P(x, y):
        r = np.hypot(x, y)
        return P0 * np.exp(-2 * np.sqrt(V0) * (r - r_min) ** 2 / r_min)

    return P
