"""Explicit integration of the open-dissipative Gross-Pitaevskii equation

    i dpsi/dt = [-lap + V + g|psi|^2 + (i/2)(P - gamma - eta|psi|^2)] psi

in dimensionless form.  The Laplacian is the fourth-order centered stencil.
Two time integrators are provided:

``rk4-fd4``
    classical four-stage Runge-Kutta (reference).
``gfdtd``
    the field is split into real and imaginary parts; their Taylor
    coefficients in time are generated recursively from the coupled
    equations (time derivatives become spatial stencils and Cauchy products
    of the cubic terms) and summed to the requested order.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, Iterable, Mapping

import numba as nb
import numpy as np

from polgyro.analysis import ObservableSeries
from polgyro.field import Boundary, ComplexField, GridSpec, SimParams
from polgyro.landscape import Landscape
from polgyro.oam import LGParams, lg_mode

log = logging.getLogger(__name__)

TAYLOR_ORDERS = (3, 4, 7, 8)  # orders whose stability region covers part of the imaginary axis
# Largest y with |sum_k (iy)^k / k!| <= 1 on [0, y], per Taylor order (order 4 is also RK4).
IMAG_AXIS_LIMIT = {3: math.sqrt(3), 4: 2 * math.sqrt(2), 7: 1.7644, 8: 3.3951}


class Scheme(enum.Enum):
    RK4 = "rk4-fd4"
    GFDTD = "gfdtd"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, Scheme):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if member.value == key or member.name.lower() == key:
                return member
        raise ValueError(f"unknown scheme {value!r}; expected one of {[m.value for m in cls]}")


class BlowUpError(RuntimeError):
    """The field became non-finite; ``last_good`` holds the previous valid field."""

    def __init__(self, message: str, last_good: ComplexField, step: int):
        super().__init__(message)
        self.last_good = last_good
        self.step = step


@dataclass(frozen=True)
class SolverConfig:
    dt: float | None = None  # None -> stable_dt(safety)
    scheme: Scheme = Scheme.RK4
    safety: float = 0.8
    t_end: float = 10.0
    snapshot_every: int = 100
    taylor_order: int = 4
    allow_unstable_dt: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.safety <= 1:
            raise ValueError(f"safety factor must lie in (0, 1], got {self.safety}")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")
        if self.taylor_order not in TAYLOR_ORDERS:
            raise ValueError(f"taylor_order must be one of {TAYLOR_ORDERS}")


@dataclass(frozen=True, eq=False)
class SimState:
    field: ComplexField
    params: SimParams
    landscape: Landscape
    step_count: int = 0


# ---------------------------------------------------------------- kernels


def _neighbour_table(n: int, periodic: bool) -> np.ndarray:
    """Indices of samples at offsets -2..+2 for positions 0..n-1, stored at k+2.

    For Dirichlet walls every out-of-range neighbour maps to index 0, the
    pinned wall sample, so it reads as zero.
    """
    k = np.arange(-2, n + 2)
    if periodic:
        return (k % n).astype(np.int64)
    return np.where((k >= 0) & (k < n), k, 0).astype(np.int64)


@nb.njit(cache=True)
def _lap_kernel(f, cx, cy, ix, iy, wall, out):
    ny, nx = f.shape
    for j in range(ny):
        jm2 = iy[j]
        jm1 = iy[j + 1]
        jp1 = iy[j + 3]
        jp2 = iy[j + 4]
        for i in range(nx):
            if wall and (i == 0 or j == 0):
                out[j, i] = 0.0
                continue
            c = f[j, i]
            lx = 16.0 * (f[j, ix[i + 1]] + f[j, ix[i + 3]]) - (f[j, ix[i]] + f[j, ix[i + 4]]) - 30.0 * c
            ly = 16.0 * (f[jm1, i] + f[jp1, i]) - (f[jm2, i] + f[jp2, i]) - 30.0 * c
            out[j, i] = lx * cx + ly * cy


@nb.njit(cache=True)
def _rhs_kernel(psi, V, D0, g, eta, cx, cy, ix, iy, wall, out):
    ny, nx = psi.shape
    for j in range(ny):
        jm2 = iy[j]
        jm1 = iy[j + 1]
        jp1 = iy[j + 3]
        jp2 = iy[j + 4]
        for i in range(nx):
            if wall and (i == 0 or j == 0):
                out[j, i] = 0.0
                continue
            c = psi[j, i]
            lx = 16.0 * (psi[j, ix[i + 1]] + psi[j, ix[i + 3]]) - (psi[j, ix[i]] + psi[j, ix[i + 4]]) - 30.0 * c
            ly = 16.0 * (psi[jm1, i] + psi[jp1, i]) - (psi[jm2, i] + psi[jp2, i]) - 30.0 * c
            lap = lx * cx + ly * cy
            dens = c.real * c.real + c.imag * c.imag
            a = 0.5 * (D0[j, i] - eta * dens)
            b = V[j, i] + g * dens
            # i*lap + (a - i b) * c
            out[j, i] = complex(-lap.imag + a * c.real + b * c.imag, lap.real + a * c.imag - b * c.real)


@nb.njit(cache=True)
def _axpy(y, a, x, out):
    ny, nx = y.shape
    for j in range(ny):
        for i in range(nx):
            out[j, i] = y[j, i] + a * x[j, i]


@nb.njit(cache=True)
def _rk4_kernel(psi, dt, V, D0, g, eta, cx, cy, ix, iy, wall, k, tmp, acc):
    _rhs_kernel(psi, V, D0, g, eta, cx, cy, ix, iy, wall, k)
    _axpy(psi, 0.5 * dt, k, tmp)
    acc[:, :] = k
    _rhs_kernel(tmp, V, D0, g, eta, cx, cy, ix, iy, wall, k)
    _axpy(psi, 0.5 * dt, k, tmp)
    _axpy(acc, 2.0, k, acc)
    _rhs_kernel(tmp, V, D0, g, eta, cx, cy, ix, iy, wall, k)
    _axpy(psi, dt, k, tmp)
    _axpy(acc, 2.0, k, acc)
    _rhs_kernel(tmp, V, D0, g, eta, cx, cy, ix, iy, wall, k)
    _axpy(acc, 1.0, k, acc)
    _axpy(psi, dt / 6.0, acc, psi)


@nb.njit(cache=True)
def _taylor_kernel(psi, dt, order, V, D0, g, eta, cx, cy, ix, iy, wall, R, I, N, LR, LI):
    ny, nx = psi.shape
    for j in range(ny):
        for i in range(nx):
            R[0, j, i] = psi[j, i].real
            I[0, j, i] = psi[j, i].imag
    for k in range(order):
        # density coefficient n_k by Cauchy product
        for j in range(ny):
            for i in range(nx):
                s = 0.0
                for a in range(k + 1):
                    s += R[a, j, i] * R[k - a, j, i] + I[a, j, i] * I[k - a, j, i]
                N[k, j, i] = s
        _lap_kernel(R[k], cx, cy, ix, iy, wall, LR)
        _lap_kernel(I[k], cx, cy, ix, iy, wall, LI)
        inv = 1.0 / (k + 1)
        for j in range(ny):
            for i in range(nx):
                if wall and (i == 0 or j == 0):
                    R[k + 1, j, i] = 0.0
                    I[k + 1, j, i] = 0.0
                    continue
                # W = V + g n (real part of the Hamiltonian), G = D0 - eta n (gain)
                w0 = V[j, i] + g * N[0, j, i]
                g0 = D0[j, i] - eta * N[0, j, i]
                sr = w0 * I[k, j, i] + 0.5 * g0 * R[k, j, i]
                si = -w0 * R[k, j, i] + 0.5 * g0 * I[k, j, i]
                for m in range(1, k + 1):
                    wm = g * N[m, j, i]
                    gm = -eta * N[m, j, i]
                    sr += wm * I[k - m, j, i] + 0.5 * gm * R[k - m, j, i]
                    si += -wm * R[k - m, j, i] + 0.5 * gm * I[k - m, j, i]
                R[k + 1, j, i] = (-LI[j, i] + sr) * inv
                I[k + 1, j, i] = (LR[j, i] + si) * inv
    for j in range(ny):
        for i in range(nx):
            re = R[order, j, i]
            im = I[order, j, i]
            for k in range(order - 1, -1, -1):
                re = re * dt + R[k, j, i]
                im = im * dt + I[k, j, i]
            psi[j, i] = complex(re, im)


# ---------------------------------------------------------------- integrator


class Integrator:
    """Holds the sampled landscape, stencil tables and work buffers for one run."""

    def __init__(self, grid: GridSpec, params: SimParams, landscape: Landscape,
                 scheme: Scheme = Scheme.RK4, taylor_order: int = 4):
        self.grid = grid
        self.params = params
        self.scheme = Scheme.parse(scheme)
        self.taylor_order = taylor_order
        V = landscape.sample_potential(grid)
        # a constant offset is applied as an exact phase so that V + c is a pure gauge change
        self.v_ref = float(np.mean(V))
        self.V = np.ascontiguousarray(V - self.v_ref)
        self.P = np.ascontiguousarray(landscape.sample_pump(grid))
        self.D0 = self.P - params.gamma
        periodic = grid.boundary is Boundary.PERIODIC
        self.wall = not periodic
        self.ix = _neighbour_table(grid.nx, periodic)
        self.iy = _neighbour_table(grid.ny, periodic)
        self.cx = 1.0 / (12.0 * grid.dx**2)
        self.cy = 1.0 / (12.0 * grid.dy**2)
        shape = grid.shape
        if self.scheme is Scheme.RK4:
            self._bufs = tuple(np.empty(shape, dtype=np.complex128) for _ in range(3))
        else:
            m = taylor_order + 1
            self._bufs = (
                np.empty((m,) + shape), np.empty((m,) + shape), np.empty((m,) + shape),
                np.empty(shape), np.empty(shape),
            )

    def prepare(self, values: np.ndarray) -> np.ndarray:
        psi = np.array(values, dtype=np.complex128, order="C", copy=True)
        if self.wall:
            psi[0, :] = 0
            psi[:, 0] = 0
        return psi

    def advance(self, psi: np.ndarray, dt: float) -> None:
        """Advance ``psi`` in place by one step."""
        p = self.params
        if self.scheme is Scheme.RK4:
            _rk4_kernel(psi, dt, self.V, self.D0, p.g, p.eta, self.cx, self.cy,
                        self.ix, self.iy, self.wall, *self._bufs)
        else:
            _taylor_kernel(psi, dt, self.taylor_order, self.V, self.D0, p.g, p.eta,
                           self.cx, self.cy, self.ix, self.iy, self.wall, *self._bufs)
        if self.v_ref != 0.0:
            psi *= np.exp(-1j * self.v_ref * dt)

    def rhs(self, psi: np.ndarray) -> np.ndarray:
        out = np.empty_like(psi)
        p = self.params
        _rhs_kernel(np.ascontiguousarray(psi, dtype=np.complex128), self.V, self.D0, p.g, p.eta,
                    self.cx, self.cy, self.ix, self.iy, self.wall, out)
        return out - 1j * self.v_ref * psi


def laplacian(f: ComplexField) -> np.ndarray:
    """Fourth-order discrete Laplacian honoring the grid boundary."""
    g = f.grid
    periodic = g.boundary is Boundary.PERIODIC
    vals = np.ascontiguousarray(f.values)
    out = np.empty_like(vals)
    _lap_kernel(vals, 1 / (12 * g.dx**2), 1 / (12 * g.dy**2), _neighbour_table(g.nx, periodic),
                _neighbour_table(g.ny, periodic), not periodic, out)
    return out


def energy_functional(f: ComplexField, potential: np.ndarray, g: float) -> float:
    """Discrete conservative energy ``sum[-psi* lap psi + V|psi|^2 + g/2 |psi|^4] dx dy``."""
    psi = f.values
    dens = np.abs(psi) ** 2
    kinetic = -np.real(np.conj(psi) * laplacian(f))
    return float(np.sum(kinetic + potential * dens + 0.5 * g * dens**2) * f.grid.dx * f.grid.dy)


# ---------------------------------------------------------------- seeds


def seed_vortex_superposition(l: int, grid: GridSpec, landscape: Landscape, params: SimParams,
                              lg: LGParams) -> ComplexField:
    """Equilibrium-amplitude estimate times the (l, -l) Laguerre-Gauss superposition at the waist.

    Where ``P - gamma < 0`` the amplitude is clamped to zero.
    """
    if params.eta <= 0:
        raise ValueError("seeding needs eta > 0 (amplitude is (P - gamma) / (sqrt(2) eta))")
    P = landscape.sample_pump(grid)
    amp = np.maximum(P - params.gamma, 0.0) / (np.sqrt(2) * params.eta)
    modes = lg_mode(l, 0, lg, 0.0, grid).values + lg_mode(-l, 0, lg, 0.0, grid).values
    return ComplexField(grid, amp * modes)


def ring_wavefunction(l: int, V0: float, r_min: float, grid: GridSpec) -> np.ndarray:
    """Harmonic approximation of the channel state with winding ``l``."""
    r, phi = grid.polar()
    return np.exp(-np.sqrt(V0) / r_min * (r - r_min) ** 2) * np.exp(-1j * l * phi)


def seed_ring_superposition(l: int, V0: float, r_min: float, grid: GridSpec) -> ComplexField:
    if V0 <= 0 or r_min <= 0:
        raise ValueError("ring seed needs V0 > 0 and r_min > 0")
    vals = (ring_wavefunction(l, V0, r_min, grid) + ring_wavefunction(-l, V0, r_min, grid)) / np.sqrt(2)
    return ComplexField(grid, vals)


def _as_kvec(k) -> tuple[float, float]:
    if np.ndim(k) == 0:
        return float(k), 0.0
    kx, ky = k
    return float(kx), float(ky)


def seed_momentum_mixture(xi: Mapping, grid: GridSpec) -> ComplexField:
    """Sum of plane waves ``xi[k] exp(i k.x)``; ``k`` is a scalar (along x) or a pair."""
    if grid.boundary is not Boundary.PERIODIC:
        raise ValueError("momentum mixtures need a periodic grid")
    X, Y = grid.mesh()
    vals = np.zeros(grid.shape, dtype=np.complex128)
    for k, amp in xi.items():
        kx, ky = _as_kvec(k)
        for kk, length in ((kx, grid.lx), (ky, grid.ly)):
            m = kk * length / (2 * np.pi)
            if abs(m - round(m)) > 1e-9 * max(1.0, abs(m)):
                raise ValueError(f"wavenumber {kk} is not commensurate with domain length {length}")
        vals += complex(amp) * np.exp(1j * (kx * X + ky * Y))
    return ComplexField(grid, vals)


# ---------------------------------------------------------------- stepping


def rate_bound(grid: GridSpec, params: SimParams, landscape: Landscape) -> float:
    """Upper bound on the local (non-kinetic) rates, with the density estimated as (P - gamma)/eta."""
    V = landscape.sample_potential(grid)
    V = V - np.mean(V)  # the mean is integrated exactly
    P = landscape.sample_pump(grid)
    n_est = float(np.max(np.maximum(P - params.gamma, 0.0)) / params.eta) if params.eta > 0 else 0.0
    return float(np.max(np.abs(V)) + abs(params.g) * n_est
                 + 0.5 * (np.max(P) + params.gamma + params.eta * n_est))


def stable_dt(grid: GridSpec, params: SimParams, landscape: Landscape, safety: float = 0.5,
              scheme: Scheme | str = Scheme.RK4, taylor_order: int = 4) -> float:
    """Explicit-step bound ``safety * c / (4/h^2 + rate_bound)`` with ``h = min(dx, dy)``.

    The fourth-order 2D Laplacian has spectral radius ``32 / (3 h^2)``.  For
    RK4 (and degree-4 Taylor) ``c = 1``, which keeps every eigenvalue within
    ``8 safety / 3`` of the origin, inside the imaginary-axis limit ``2 sqrt(2)``.
    Other Taylor orders scale ``c`` by the ratio of their own limit to ``2 sqrt(2)``.
    """
    if not 0 < safety <= 1:
        raise ValueError(f"safety factor must lie in (0, 1], got {safety}")
    order = 4 if Scheme.parse(scheme) is Scheme.RK4 else int(taylor_order)
    if order not in IMAG_AXIS_LIMIT:
        raise ValueError(f"Taylor order must be one of {TAYLOR_ORDERS}, got {taylor_order}")
    c = IMAG_AXIS_LIMIT[order] / IMAG_AXIS_LIMIT[4]
    h = min(grid.dx, grid.dy)
    return safety * c / (4.0 / h**2 + rate_bound(grid, params, landscape))


def step(state: SimState, dt: float, scheme: Scheme | str = Scheme.RK4, taylor_order: int = 4,
         allow_unstable_dt: bool = False) -> SimState:
    """Advance ``state`` by one step of size ``dt``."""
    grid = state.field.grid
    if not allow_unstable_dt:
        limit = stable_dt(grid, state.params, state.landscape, 1.0, scheme, taylor_order)
        if dt > limit:
            raise ValueError(f"dt={dt:.4g} exceeds the stability bound {limit:.4g}")
    integ = Integrator(grid, state.params, state.landscape, scheme, taylor_order)
    psi = integ.prepare(state.field.values)
    integ.advance(psi, dt)
    if not np.isfinite(psi).all():
        raise BlowUpError(f"non-finite field after step {state.step_count + 1}", state.field, state.step_count + 1)
    return replace(state, field=ComplexField(grid, psi, state.field.t + dt), step_count=state.step_count + 1)


Observer = Callable[[ComplexField], Mapping[str, float]]


def _observe(f: ComplexField, observers: Iterable[Observer]) -> dict[str, float]:
    row: dict[str, float] = {}
    for obs in observers:
        row.update(obs(f))
    return row


def evolve(state: SimState, cfg: SolverConfig, observers: Iterable[Observer] = (),
           on_snapshot: Callable[[ComplexField], None] | None = None,
           keep_snapshots: bool = True) -> tuple[ObservableSeries, list[ComplexField], SimState]:
    """Integrate to ``cfg.t_end`` and record observables every ``snapshot_every`` steps.

    The step is shrunk so an integer number of steps lands exactly on
    ``t_end``.  Returns the series, the retained snapshots and the final state.
    """
    observers = list(observers)
    grid = state.field.grid
    bound = partial(stable_dt, grid, state.params, state.landscape, scheme=cfg.scheme,
                    taylor_order=cfg.taylor_order)
    dt = bound(cfg.safety) if cfg.dt is None else cfg.dt
    if cfg.dt is not None and cfg.dt > bound(1.0) and not cfg.allow_unstable_dt:
        raise ValueError(f"dt={cfg.dt:.4g} exceeds the stability bound; set allow_unstable_dt to override")
    nsteps = math.ceil(cfg.t_end / dt - 1e-9) if cfg.t_end > 0 else 0
    dt = cfg.t_end / nsteps if nsteps else dt

    integ = Integrator(grid, state.params, state.landscape, cfg.scheme, cfg.taylor_order)
    psi = integ.prepare(state.field.values)
    t0 = state.field.t
    current = ComplexField(grid, psi, t0)
    series = ObservableSeries()
    snapshots: list[ComplexField] = []

    def record(f: ComplexField):
        series.append(f.t, _observe(f, observers))
        if keep_snapshots:
            snapshots.append(f)
        if on_snapshot is not None:
            on_snapshot(f)

    record(current)
    log.info("evolve: %d steps of dt=%.5g with %s", nsteps, dt, integ.scheme.value)
    last_good = psi.copy()
    for n in range(1, nsteps + 1):
        last_good[...] = psi
        integ.advance(psi, dt)
        if not math.isfinite(float(np.sum(psi.real) + np.sum(psi.imag))):
            raise BlowUpError(f"non-finite field at step {n} (t={t0 + n * dt:.4g})",
                              ComplexField(grid, last_good, t0 + (n - 1) * dt), n)
        if n % cfg.snapshot_every == 0 or n == nsteps:
            current = ComplexField(grid, psi, t0 + n * dt)
            record(current)
    final = SimState(current, state.params, state.landscape, state.step_count + nsteps)
    return series, snapshots, final
