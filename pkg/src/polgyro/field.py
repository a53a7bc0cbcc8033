"""Grids, complex fields, unit systems and the PGYR snapshot format.

Arrays are stored with shape ``(ny, nx)``: row ``j`` holds the samples at
``y_j`` and the column index runs over ``x_i``.  With C ordering this is the
row-major layout of the snapshot format (x fastest).

Sample ``(i, j)`` sits at ``x_i = -lx/2 + i*dx``, ``y_j = -ly/2 + j*dy``.
For even ``nx`` the origin is a grid point (``i = nx/2``).  With periodic
boundaries the first sample is identified with ``+lx/2``.  With Dirichlet-zero
boundaries the first row and column are the wall itself and are held at zero,
so the interior points ``1..nx-1`` are mirror symmetric about the origin.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from polgyro import constants

MIN_POINTS = 8

_MAGIC = b"PGYR"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIdddB")


class Boundary(enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"

    @classmethod
    def parse(cls, value: "Boundary | str") -> "Boundary":
        if isinstance(value, Boundary):
            return value
        key = str(value).strip().lower().replace("-zero", "").replace("_zero", "")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown boundary {value!r}; expected 'periodic' or 'dirichlet'")


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    lx: float
    ly: float
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("grid counts must be integers")
        if self.nx < MIN_POINTS or self.ny < MIN_POINTS:
            raise ValueError(f"grid needs at least {MIN_POINTS} points per axis, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0) or not np.isfinite([self.lx, self.ly]).all():
            raise ValueError(f"side lengths must be positive, got lx={self.lx}, ly={self.ly}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary))

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def x(self) -> np.ndarray:
        return -self.lx / 2 + np.arange(self.nx) * self.dx

    @property
    def y(self) -> np.ndarray:
        return -self.ly / 2 + np.arange(self.ny) * self.dy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``X, Y`` of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def polar(self) -> tuple[np.ndarray, np.ndarray]:
        """Radius and azimuth ``atan2(y, x)`` at every grid point."""
        X, Y = self.mesh()
        return np.hypot(X, Y), np.arctan2(Y, X)

    def nearest_index(self, x: float, y: float) -> tuple[int, int]:
        """Index ``(i, j)`` of the sample closest to ``(x, y)``."""
        i = int(np.rint((x + self.lx / 2) / self.dx))
        j = int(np.rint((y + self.ly / 2) / self.dy))
        if self.boundary is Boundary.PERIODIC:
            return i % self.nx, j % self.ny
        return min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1)

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular wavenumbers of the discrete Fourier modes along x and y."""
        kx = 2 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)
        ky = 2 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)
        return kx, ky


def make_grid(nx: int, ny: int, lx: float, ly: float, boundary="periodic") -> GridSpec:
    """Build a grid centred on the origin; see the module docstring for the mapping."""
    return GridSpec(nx, ny, lx, ly, Boundary.parse(boundary))


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex order parameter sampled on ``grid`` at time ``t``."""

    grid: GridSpec
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128, order="C", copy=True)
        if vals.shape != self.grid.shape:
            if vals.size == self.grid.nx * self.grid.ny:
                vals = vals.reshape(self.grid.shape)
            else:
                raise ValueError(f"values have shape {vals.shape}, grid needs {self.grid.shape}")
        if not np.isfinite(vals).all():
            raise ValueError("field contains non-finite values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def zeros(cls, grid: GridSpec, t: float = 0.0) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), t)

    def with_values(self, values: np.ndarray, t: float | None = None) -> "ComplexField":
        return ComplexField(self.grid, values, self.t if t is None else t)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def __eq__(self, other):
        if not isinstance(other, ComplexField):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.t == other.t
            and np.array_equal(self.values, other.values)
        )


def field_norm(f: ComplexField) -> float:
    """Midpoint-rule integral of ``|psi|^2`` (numpy pairwise summation)."""
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.dx * f.grid.dy)


def density_and_phase(f: ComplexField) -> tuple[np.ndarray, np.ndarray]:
    """Return ``|psi|^2`` and the principal argument in ``(-pi, pi]``.

    The argument of an exact zero is 0.  ``np.angle`` returns ``-pi`` for
    negative reals carrying a ``-0.0`` imaginary part, so that branch is folded
    back onto ``+pi``.
    """
    vals = f.values
    phase = np.angle(vals)
    phase = np.where(phase <= -np.pi, np.pi, phase)
    return np.abs(vals) ** 2, phase


@dataclass(frozen=True)
class UnitSystem:
    """Unit conventions for the dimensionless dGPE.

    ``dimensionless``: lengths in units of ``length_scale`` (a, metres) and
    time in units of ``2 m a^2 / hbar``.

    ``mev``: energies in meV and time in ``hbar / meV``.  The length unit is
    fixed by requiring ``hbar^2 / (2 m a^2) = 1 meV`` so the kinetic term keeps
    the form ``-laplacian``.
    """

    kind: str = "dimensionless"
    length_scale: float = 1e-6
    mass_ratio: float = 1e-4  # polariton mass / electron mass

    def __post_init__(self):
        kind = str(self.kind).strip().lower().replace("physical-", "").replace("_", "-")
        if kind not in ("dimensionless", "mev"):
            raise ValueError(f"unknown unit system {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.length_scale <= 0 or self.mass_ratio <= 0:
            raise ValueError("length_scale and mass_ratio must be positive")

    @property
    def mass(self) -> float:
        return self.mass_ratio * constants.M_E

    @property
    def length_unit(self) -> float:
        """Metres per simulation length unit."""
        if self.kind == "mev":
            return constants.HBAR / np.sqrt(2 * self.mass * constants.MEV)
        return self.length_scale

    @property
    def time_unit(self) -> float:
        """Seconds per simulation time unit."""
        if self.kind == "mev":
            return constants.HBAR / constants.MEV
        return 2 * self.mass * self.length_scale**2 / constants.HBAR

    @property
    def energy_unit(self) -> float:
        """Joules per simulation energy unit (hbar / time unit)."""
        return constants.HBAR / self.time_unit


@dataclass(frozen=True)
class SimParams:
    """dGPE coefficients: interaction ``g``, loss ``gamma``, gain saturation ``eta``."""

    g: float = 1.0
    gamma: float = 1.0
    eta: float = 1.0
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self):
        if not np.isfinite([self.g, self.gamma, self.eta]).all():
            raise ValueError("dGPE coefficients must be finite")
        if self.gamma < 0 or self.eta < 0:
            raise ValueError(f"gamma and eta must be non-negative, got gamma={self.gamma}, eta={self.eta}")


def write_snapshot(f: ComplexField, path) -> None:
    """Write ``f`` in the little-endian PGYR v1 format."""
    g = f.grid
    code = 0 if g.boundary is Boundary.PERIODIC else 1
    header = _HEADER.pack(_MAGIC, _VERSION, g.nx, g.ny, g.dx, g.dy, f.t, code)
    body = np.ascontiguousarray(f.values).astype("<c16", copy=False).tobytes()
    Path(path).write_bytes(header + body)


def read_snapshot(path) -> ComplexField:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated PGYR header")
    magic, version, nx, ny, dx, dy, t, code = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported PGYR version {version}")
    if code not in (0, 1):
        raise ValueError(f"{path}: bad boundary code {code}")
    expected = _HEADER.size + 16 * nx * ny
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    vals = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape(ny, nx)
    grid = GridSpec(nx, ny, nx * dx, ny * dy, Boundary.PERIODIC if code == 0 else Boundary.DIRICHLET)
    return ComplexField(grid, vals, t)
