"""Closed-form Sagnac phases, shot-noise sensitivity and a cross-technology table.

All quantities are SI.  Phases that grow with time (ring laser, vortex,
BEC loop, ring BEC) are reported through a *phase coefficient* ``K`` with
``phi = K * Omega * t``; the fiber gyroscope phase has no time dependence
and its coefficient is ``phi / Omega``.

Shot noise: ``SNR = phi * sqrt(N_total)`` with ``N_total = N_rate * t``
detected photons.  Setting ``SNR = 1`` gives ``Omega_min``.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, fields

import numpy as np

from polgyro.constants import C, H, HBAR


class GyroKind(enum.Enum):
    FIBER_OPTIC = "fiber-optic"
    RING_LASER = "ring-laser"
    VORTEX_SUPERPOSITION = "vortex-superposition"
    BEC_LOOP = "bec-loop"
    RING_BEC = "ring-bec"

    @classmethod
    def parse(cls, value) -> "GyroKind":
        if isinstance(value, GyroKind):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if key in (member.value, member.value.replace("-", "")):
                return member
        raise ValueError(f"unknown gyroscope kind {value!r}; expected one of {[m.value for m in cls]}")


# ---------------------------------------------------------------- phases


def sagnac_fiber(A: float, wavelength: float, omega: float) -> float:
    """Fiber-loop phase ``8 pi A Omega / (lambda c)``."""
    return 8 * np.pi * A * omega / (wavelength * C)


def sagnac_ring_laser(A: float, p: float, wavelength: float, omega: float, t: float) -> float:
    """Accumulated ring-laser phase ``8 pi A Omega t / (lambda p)``."""
    return 8 * np.pi * A * omega * t / (wavelength * p)


def sagnac_vortex(l: int, omega: float, t: float, **_ignored) -> float:
    """``2 l Omega t``; any area or mass passed in is ignored."""
    return 2 * l * omega * t


def revolutions(t: float, k0: float, r: float, m: float) -> float:
    """Number of loops ``t hbar k0 / (2 pi r m)`` made by a particle of momentum ``hbar k0``."""
    return t * HBAR * k0 / (2 * np.pi * r * m)


def bec_loop_phase(n_rev: float, m: float, A: float, omega: float) -> float:
    """Matter-wave loop phase ``n_rev * 4 m A Omega / hbar``."""
    return n_rev * 4 * m * A * omega / HBAR


def sagnac_ring_bec(k0: float, r: float, omega: float, t: float) -> float:
    """Counter-propagating ``+-k0`` currents on a ring of radius ``r``: ``2 k0 r Omega t``."""
    return 2 * k0 * r * omega * t


def de_broglie_wavelength(m: float, v: float) -> float:
    return H / (m * v)


# ---------------------------------------------------------------- noise


def snr(phi: float, n_rate: float, t: float) -> float:
    return phi * np.sqrt(n_rate * t)


def omega_min_from_coefficient(coef: float, t: float, n_total: float, time_domain: bool = True) -> float:
    """Rotation rate at which ``SNR = 1`` for ``phi = coef * Omega (* t)``."""
    if coef <= 0 or n_total <= 0 or (time_domain and t <= 0):
        raise ValueError("coefficient, integration time and photon count must be positive")
    scale = coef * t if time_domain else coef
    return 1.0 / (scale * np.sqrt(n_total))


def ground_rotation(vx: np.ndarray, vy: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Local rotation rate ``(d vy/dx - d vx/dy) / 2`` of a sampled velocity field.

    Arrays are indexed ``[j, i]`` with ``x`` along the last axis.
    """
    vx = np.asarray(vx, dtype=float)
    vy = np.asarray(vy, dtype=float)
    if vx.shape != vy.shape or vx.ndim != 2:
        raise ValueError("velocity components must be 2D arrays of equal shape")
    dvy_dx = np.gradient(vy, dx, axis=1)
    dvx_dy = np.gradient(vx, dy, axis=0)
    return 0.5 * (dvy_dx - dvx_dy)


# ---------------------------------------------------------------- configs


@dataclass(frozen=True)
class GyroConfig:
    """One gyroscope scenario.  Only the fields used by ``kind`` need values.

    fiber-optic: A, wavelength.  ring-laser: A, p, wavelength.
    vortex-superposition: l.  bec-loop: A, k0, r, m.  ring-bec: k0, r.
    ``n_rate`` (photons per second) and ``t`` feed the sensitivity estimate.
    """

    kind: GyroKind
    label: str = ""
    A: float | None = None
    p: float | None = None
    r: float | None = None
    wavelength: float | None = None
    k0: float | None = None
    l: int | None = None
    m: float | None = None
    t: float = 1.0
    n_rate: float | None = None

    _REQUIRED = {
        GyroKind.FIBER_OPTIC: ("A", "wavelength"),
        GyroKind.RING_LASER: ("A", "p", "wavelength"),
        GyroKind.VORTEX_SUPERPOSITION: ("l",),
        GyroKind.BEC_LOOP: ("A", "k0", "r", "m"),
        GyroKind.RING_BEC: ("k0", "r"),
    }

    def __post_init__(self):
        object.__setattr__(self, "kind", GyroKind.parse(self.kind))
        for name in self._REQUIRED[self.kind]:
            value = getattr(self, name)
            if value is None:
                raise ValueError(f"{self.kind.value} gyroscope needs '{name}'")
            if name == "l":
                if int(value) != value or value < 1:
                    raise ValueError(f"winding number must be an integer >= 1, got {value}")
            elif not value > 0:
                raise ValueError(f"'{name}' must be positive, got {value}")
        if not self.t > 0:
            raise ValueError(f"integration time must be positive, got {self.t}")
        if self.n_rate is not None and not self.n_rate > 0:
            raise ValueError(f"photon rate must be positive, got {self.n_rate}")

    @property
    def time_domain(self) -> bool:
        return self.kind is not GyroKind.FIBER_OPTIC

    def phase(self, omega: float, t: float | None = None) -> float:
        t = self.t if t is None else t
        k = self.kind
        if k is GyroKind.FIBER_OPTIC:
            return sagnac_fiber(self.A, self.wavelength, omega)
        if k is GyroKind.RING_LASER:
            return sagnac_ring_laser(self.A, self.p, self.wavelength, omega, t)
        if k is GyroKind.VORTEX_SUPERPOSITION:
            return sagnac_vortex(self.l, omega, t)
        if k is GyroKind.BEC_LOOP:
            return bec_loop_phase(revolutions(t, self.k0, self.r, self.m), self.m, self.A, omega)
        return sagnac_ring_bec(self.k0, self.r, omega, t)

    def coefficient(self) -> float:
        """``phi / (Omega t)``, or ``phi / Omega`` for the fiber gyroscope."""
        return self.phase(1.0, 1.0)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None:
                out[f.name] = v.value if isinstance(v, GyroKind) else v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "GyroConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown gyroscope fields: {sorted(unknown)}")
        if "kind" not in d:
            raise ValueError("gyroscope entry needs a 'kind'")
        return cls(**d)


def omega_min(cfg: GyroConfig, t: float | None = None, n_total: float | None = None) -> float:
    """Shot-noise-limited rate; ``n_total`` defaults to ``n_rate * t``."""
    t = cfg.t if t is None else t
    if n_total is None:
        if cfg.n_rate is None:
            raise ValueError(f"{cfg.label or cfg.kind.value}: no photon rate given")
        n_total = cfg.n_rate * t
    return omega_min_from_coefficient(cfg.coefficient(), t, n_total, cfg.time_domain)


def default_configs() -> list[GyroConfig]:
    """Representative optical, cold-atom and polariton scenarios."""
    from polgyro.constants import M_RB87

    return [
        GyroConfig(GyroKind.RING_LASER, "optical ring laser (He-Ne)", A=1.0, p=1.0, wavelength=632.8e-9),
        GyroConfig(GyroKind.RING_LASER, "cold-atom loop (Rb-87, 1 m/s)", A=1e-6, p=1e-2,
                   wavelength=de_broglie_wavelength(M_RB87, 1.0)),
        GyroConfig(GyroKind.RING_BEC, "polariton ring", k0=1e7, r=1e-4, n_rate=1e14),
        GyroConfig(GyroKind.VORTEX_SUPERPOSITION, "polariton vortex l=1", l=1, n_rate=1e14),
    ]


# ---------------------------------------------------------------- table

TABLE_COLUMNS = ("label", "kind", "coefficient", "coefficient_units", "t_s", "n_rate_per_s", "omega_min_rad_s")


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[dict, ...]

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: ("" if row[k] is None else row[k]) for k in TABLE_COLUMNS})
        return buf.getvalue()

    def to_text(self) -> str:
        def fmt(v):
            if v is None:
                return "-"
            if isinstance(v, float):
                return f"{v:.4g}"
            return str(v)

        cells = [list(TABLE_COLUMNS)] + [[fmt(r[c]) for c in TABLE_COLUMNS] for r in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(TABLE_COLUMNS))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        note = "omega_min is evaluated at the stated t with N_total = n_rate * t (reads as rad/s/sqrt(Hz) at t = 1 s)"
        return "\n".join(lines + ["", note]) + "\n"


def comparison_table(configs) -> ComparisonTable:
    rows = []
    for cfg in configs:
        coef = cfg.coefficient()
        rows.append({
            "label": cfg.label or cfg.kind.value,
            "kind": cfg.kind.value,
            "coefficient": coef,
            "coefficient_units": "rad/(rad/s)" if not cfg.time_domain else "rad/rad",
            "t_s": cfg.t,
            "n_rate_per_s": cfg.n_rate,
            "omega_min_rad_s": omega_min(cfg) if cfg.n_rate is not None else None,
        })
    return ComparisonTable(tuple(rows))
