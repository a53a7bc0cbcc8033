"""Laguerre-Gauss modes, ladder-operator construction and the Mach-Zehnder
superposition used to seed vortex-antivortex states.

Phase convention: a mode with winding number ``l`` carries ``exp(-i l phi)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import factorial

import numpy as np

from polgyro.field import ComplexField, GridSpec

# Central first-derivative weights for offsets 1..m (antisymmetric stencil).
_D1_WEIGHTS = {
    2: (1 / 2,),
    4: (2 / 3, -1 / 12),
    6: (3 / 4, -3 / 20, 1 / 60),
    8: (4 / 5, -1 / 5, 4 / 105, -1 / 280),
}
# Coarsest spacing (in beam waists) at which the ladder construction is accepted.
LADDER_MAX_DX_OVER_W = 0.125


@dataclass(frozen=True)
class LGParams:
    """Rayleigh range ``b`` and optical wavenumber ``k``; waist ``w0 = sqrt(2b/k)``."""

    b: float
    k: float = 1.0

    def __post_init__(self):
        if not (self.b > 0 and self.k > 0):
            raise ValueError(f"LG parameters must be positive, got b={self.b}, k={self.k}")

    @classmethod
    def from_waist(cls, w0: float, k: float = 1.0) -> "LGParams":
        return cls(b=k * w0**2 / 2, k=k)

    def width(self, z: float = 0.0) -> float:
        return float(np.sqrt(2 * (z**2 + self.b**2) / (self.k * self.b)))

    @property
    def w0(self) -> float:
        return self.width(0.0)


class ModeSpec:
    """Weighted set of ``(l, p)`` modes; duplicate labels are merged on construction."""

    def __init__(self, terms=()):
        merged: dict[tuple[int, int], complex] = {}
        for l, p, c in terms:
            if int(l) != l or int(p) != p:
                raise ValueError(f"mode labels must be integers, got ({l}, {p})")
            if p < 0:
                raise ValueError(f"radial index must be >= 0, got p={p}")
            key = (int(l), int(p))
            merged[key] = merged.get(key, 0j) + complex(c)
        self._terms = tuple((l, p, c) for (l, p), c in merged.items())

    @property
    def terms(self) -> tuple[tuple[int, int, complex], ...]:
        return self._terms

    def as_dict(self) -> dict[tuple[int, int], complex]:
        return {(l, p): c for l, p, c in self._terms}

    def norm2(self) -> float:
        return float(sum(abs(c) ** 2 for _, _, c in self._terms))

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def normalized(self) -> "ModeSpec":
        n = np.sqrt(self.norm2())
        if n == 0:
            raise ValueError("cannot normalize an empty mode spec")
        return ModeSpec((l, p, c / n) for l, p, c in self._terms)

    def to_config(self) -> list[dict]:
        return [{"l": l, "p": p, "re": c.real, "im": c.imag} for l, p, c in self._terms]

    @classmethod
    def from_config(cls, entries) -> "ModeSpec":
        return cls((e["l"], e.get("p", 0), complex(e.get("re", 0.0), e.get("im", 0.0))) for e in entries)

    def __eq__(self, other):
        if not isinstance(other, ModeSpec):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def __repr__(self):
        return f"ModeSpec({list(self._terms)!r})"


def laguerre_poly(p: int, l_abs: int, r):
    """Generalized Laguerre polynomial ``L_p^{|l|}(r)`` by its finite sum."""
    if p < 0 or l_abs < 0:
        raise ValueError("p and |l| must be non-negative")
    r = np.asarray(r, dtype=float)
    total = np.zeros_like(r)
    # Horner from the highest power down keeps cancellation modest.
    for m in range(p, -1, -1):
        coeff = (-1) ** m * factorial(l_abs + p) / (factorial(p - m) * factorial(l_abs + m) * factorial(m))
        total = total * r + coeff
    return total if total.ndim else float(total)


def lg_mode(l: int, p: int, params: LGParams, z: float, grid: GridSpec) -> ComplexField:
    """Sample the normalized Laguerre-Gauss mode ``u_{l,p}(r, phi, z)``.

    At the waist the wavefront-curvature term is taken as zero.
    """
    if p < 0:
        raise ValueError(f"radial index must be >= 0, got p={p}")
    la = abs(int(l))
    w = params.width(z)
    if min(grid.lx, grid.ly) < 6 * w:
        warnings.warn(
            f"grid extent {min(grid.lx, grid.ly):.3g} is below 6 beam widths ({6 * w:.3g}); "
            "mode normalization will be inaccurate",
            stacklevel=2,
        )
    r, phi = grid.polar()
    s = 2 * r**2 / w**2
    amp = np.sqrt(2 * factorial(p) / (np.pi * w**2 * factorial(la + p)))
    radial = amp * (np.sqrt(2) * r / w) ** la * np.exp(-(r**2) / w**2) * laguerre_poly(p, la, s)
    gouy = (2 * p + la + 1) * np.arctan2(z, params.b)
    curvature = 0.0 if z == 0 else params.k * r**2 * z / (2 * (z**2 + params.b**2))
    values = radial * np.exp(-1j * (curvature + l * phi - gouy))
    return ComplexField(grid, values)


def _d1(f: np.ndarray, h: float, axis: int, order: int) -> np.ndarray:
    """Centered derivative along ``axis`` treating the field as zero outside the grid."""
    weights = _D1_WEIGHTS[order]
    m = len(weights)
    pad = [(m, m) if a == axis else (0, 0) for a in range(f.ndim)]
    fp = np.pad(f, pad)
    n = f.shape[axis]

    def shifted(s):
        idx = [slice(None)] * f.ndim
        idx[axis] = slice(m + s, m + s + n)
        return fp[tuple(idx)]

    out = np.zeros_like(f)
    for s, c in enumerate(weights, start=1):
        out += c * (shifted(s) - shifted(-s))
    return out / h


def _creation_ops(params: LGParams, grid: GridSpec, order: int):
    """Return the OAM-raising (l -> l+1) and OAM-lowering (l -> l-1) creation operators.

    In Cartesian form the waist operators read ``A_x^dag = (k x - b d/dx) / sqrt(2bk)``
    (and likewise for y).  With the ``exp(-i l phi)`` convention ``A_-^dag`` raises l.
    """
    X, Y = grid.mesh()
    k, b = params.k, params.b
    norm = 1 / np.sqrt(2 * b * k)

    def ax_dag(f):
        return norm * (k * X * f - b * _d1(f, grid.dx, 1, order))

    def ay_dag(f):
        return norm * (k * Y * f - b * _d1(f, grid.dy, 0, order))

    def raise_l(f):
        return (ax_dag(f) - 1j * ay_dag(f)) / np.sqrt(2)

    def lower_l(f):
        return (ax_dag(f) + 1j * ay_dag(f)) / np.sqrt(2)

    return raise_l, lower_l


def ladder_counts(l: int, p: int) -> tuple[int, int]:
    """Number of OAM-raising and OAM-lowering quanta that build mode ``(l, p)``."""
    return p + (abs(l) + l) // 2, p + (abs(l) - l) // 2


def ladder_lg(l: int, p: int, params: LGParams, grid: GridSpec, order: int = 8) -> ComplexField:
    """Build ``u_{l,p}`` at the waist by applying creation operators to TEM00.

    Derivatives use centered finite differences of the given ``order``
    (2, 4, 6 or 8).  The product carries a sign ``(-1)^p`` relative to the
    closed form, which is removed so both constructions agree.
    """
    if p < 0:
        raise ValueError(f"radial index must be >= 0, got p={p}")
    if order not in _D1_WEIGHTS:
        raise ValueError(f"unsupported stencil order {order}")
    w = params.w0
    if max(grid.dx, grid.dy) > LADDER_MAX_DX_OVER_W * w:
        raise ValueError(
            f"grid spacing {max(grid.dx, grid.dy):.3g} too coarse for ladder derivatives; "
            f"need <= {LADDER_MAX_DX_OVER_W} * w0 = {LADDER_MAX_DX_OVER_W * w:.3g}"
        )
    n_up, n_down = ladder_counts(l, p)
    raise_l, lower_l = _creation_ops(params, grid, order)
    f = lg_mode(0, 0, params, 0.0, grid).values.copy()
    for _ in range(n_down):
        f = lower_l(f)
    for _ in range(n_up):
        f = raise_l(f)
    f *= (-1) ** p / np.sqrt(factorial(n_up) * factorial(n_down))
    result = ComplexField(grid, f)
    norm = np.sqrt(np.sum(np.abs(f) ** 2) * grid.dx * grid.dy)
    return result.with_values(f / norm)


def mach_zehnder(input_mode: tuple[int, int], split: tuple[float, float], phase: float) -> ModeSpec:
    """Superposition leaving the real port of the SPP + Dove-prism interferometer.

    The first splitter sends amplitude ``sqrt(split[0])`` down the direct arm
    and ``sqrt(split[1])`` down the arm with the Dove prism (``l -> -l``) and
    phase shifter.  The recombined real-port state is
    ``alpha a_{l,p} + beta exp(i phase) a_{-l,p}``.
    """
    l, p = input_mode
    a2, b2 = split
    if a2 < 0 or b2 < 0 or abs(a2 + b2 - 1.0) > 1e-12:
        raise ValueError(f"split ratios must be non-negative and sum to 1, got {split}")
    if l == 0:
        raise ValueError("l = 0 is mapped onto itself by the Dove prism; no superposition forms")
    alpha = np.sqrt(a2)
    beta = np.sqrt(b2) * np.exp(1j * phase)
    terms = [(l, p, alpha), (-l, p, beta)]
    return ModeSpec((ll, pp, c) for ll, pp, c in terms if c != 0)


def sample_superposition(spec: ModeSpec, params: LGParams, z: float, grid: GridSpec) -> ComplexField:
    if not spec.terms:
        raise ValueError("empty mode spec")
    if not spec.is_normalized(1e-9):
        warnings.warn(f"mode spec is not normalized (sum |c|^2 = {spec.norm2():.6g})", stacklevel=2)
    total = np.zeros(grid.shape, dtype=np.complex128)
    for l, p, c in spec.terms:
        total += c * lg_mode(l, p, params, z, grid).values
    return ComplexField(grid, total)

