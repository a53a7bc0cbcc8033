"""Run a RunConfig end to end and write its artifacts.

Output directory layout::

    config.yaml          the fully resolved configuration
    snapshots/snap_NNNNNN.pgyr
    observables.csv
    density_initial.pgm, phase_initial.pgm, density_final.pgm, phase_final.pgm
    summary.yaml

Heatmaps are 8-bit binary PGM with +y pointing up.  Density maps linearly
from 0 (black) to the frame maximum (white); phase maps (-pi, pi] onto
0..255.
"""

from __future__ import annotations

import logging
import time
from pathlib import Path

import numpy as np
import yaml

from polgyro.analysis import (
    NoSignalError,
    ObservableSeries,
    UndefinedWindingError,
    angular_profile,
    interlobe_phase,
    lobe_radius,
    lobe_stats,
    make_lobe_observer,
    make_momentum_observer,
    momentum_populations,
    observe_norm,
    observe_peak_density,
    phase_winding,
    steady_state_reached,
)
from polgyro.config import RunConfig
from polgyro.field import Boundary, ComplexField, density_and_phase, field_norm, write_snapshot
from polgyro.solver import BlowUpError, SimState, evolve, stable_dt

log = logging.getLogger(__name__)


def write_pgm(path, image: np.ndarray) -> None:
    """Write an 8-bit grayscale image; row 0 of ``image`` is the top row."""
    img = np.ascontiguousarray(image, dtype=np.uint8)
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported")
    return np.frombuffer(parts[4], dtype=np.uint8, count=w * h).reshape(h, w)


def density_image(f: ComplexField) -> np.ndarray:
    dens, _ = density_and_phase(f)
    top = dens.max()
    scaled = dens / top if top > 0 else dens
    return np.rint(scaled * 255).astype(np.uint8)[::-1]


def phase_image(f: ComplexField) -> np.ndarray:
    _, phase = density_and_phase(f)
    scaled = (phase + np.pi) / (2 * np.pi)  # (-pi, pi] -> (0, 1]
    return np.rint(scaled * 255).astype(np.uint8)[::-1]


def build_observers(cfg: RunConfig):
    a = cfg.analysis
    obs = []
    for name in a.observers:
        if name == "norm":
            obs.append(observe_norm)
        elif name == "peak_density":
            obs.append(observe_peak_density)
        elif name == "lobes":
            obs.append(make_lobe_observer(a.lobe_radius, a.nbins))
        elif name == "momentum" and a.momentum_targets:
            obs.append(make_momentum_observer({k: tuple(v) for k, v in a.momentum_targets.items()}))
    return obs


def analyze_field(f: ComplexField, nbins: int = 360, radius: float | None = None,
                  momentum_targets: dict | None = None) -> dict:
    """Lobe statistics, winding and (periodic grids) momentum populations of one field."""
    out: dict = {"t": float(f.t), "norm": field_norm(f), "peak_density": float(np.max(np.abs(f.values) ** 2))}
    r = lobe_radius(f) if radius is None else float(radius)
    prof = angular_profile(f, r, nbins)
    count, contrast = lobe_stats(prof)
    out["lobes"] = {"radius": r, "count": int(count), "contrast": float(contrast), "interlobe_phase": None}
    if count >= 2:
        out["lobes"]["interlobe_phase"] = float(interlobe_phase(f, prof))
    try:
        out["winding"] = int(phase_winding(f, (0.0, 0.0), r))
    except UndefinedWindingError:
        out["winding"] = None
    if momentum_targets and f.grid.boundary is Boundary.PERIODIC:
        ks = {n: tuple(float(v) for v in k) for n, k in momentum_targets.items()}
        pops = momentum_populations(f, list(ks.values()))
        out["momentum_populations"] = {n: float(pops[k]) for n, k in ks.items()}
    return out


def _summary(cfg: RunConfig, series: ObservableSeries, final: SimState, dt: float, elapsed: float) -> dict:
    a = cfg.analysis
    summary = {
        "name": cfg.name,
        "status": "ok",
        "t_final": float(final.field.t),
        "steps": int(final.step_count),
        "dt": float(dt),
        "runtime_s": round(elapsed, 3),
    }
    if a.steady_channel in series.names and len(series) > 0:
        summary["steady_state"] = bool(steady_state_reached(series, a.steady_eps, a.steady_window, a.steady_channel))
    else:
        summary["steady_state"] = None
    try:
        summary.update(analyze_field(final.field, a.nbins, a.lobe_radius, a.momentum_targets))
    except NoSignalError as exc:
        summary["analysis_error"] = str(exc)
    if "momentum_populations" in summary and {"plus_k0", "minus_k0"} <= set(summary["momentum_populations"]):
        mp = summary["momentum_populations"]
        summary["pm_k0_population"] = mp["plus_k0"] + mp["minus_k0"]
    return summary


def run_experiment(cfg: RunConfig, out_dir=None, write: bool = True) -> dict:
    """Run ``cfg``; returns the summary dictionary.

    Raises :class:`BlowUpError` after writing ``last_good.pgyr`` if the field
    diverges.
    """
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    grid = cfg.grid_spec()
    params = cfg.sim_params()
    landscape = cfg.build_landscape(grid)
    seed = cfg.build_seed(grid, landscape, params)
    solver = cfg.solver_config()
    state = SimState(seed, params, landscape)
    dt = solver.dt or stable_dt(grid, params, landscape, solver.safety, solver.scheme, solver.taylor_order)
    if solver.t_end > 0:
        dt = solver.t_end / int(np.ceil(solver.t_end / dt - 1e-9))

    snap_dir = out / "snapshots"
    if write:
        out.mkdir(parents=True, exist_ok=True)
        cfg.save(out / "config.yaml")
        if cfg.output.snapshots:
            snap_dir.mkdir(exist_ok=True)
        if cfg.output.heatmaps:
            write_pgm(out / "density_initial.pgm", density_image(seed))
            write_pgm(out / "phase_initial.pgm", phase_image(seed))

    counter = {"n": 0}

    def on_snapshot(f: ComplexField):
        if write and cfg.output.snapshots:
            write_snapshot(f, snap_dir / f"snap_{counter['n']:06d}.pgyr")
        counter["n"] += 1

    t0 = time.perf_counter()
    try:
        series, _, final = evolve(state, solver, build_observers(cfg), on_snapshot, keep_snapshots=False)
    except BlowUpError as exc:
        if write:
            write_snapshot(exc.last_good, out / "last_good.pgyr")
            summary = {"name": cfg.name, "status": "blow-up", "message": str(exc), "step": exc.step,
                       "t_last_good": float(exc.last_good.t)}
            (out / "summary.yaml").write_text(yaml.safe_dump(summary, sort_keys=False))
        raise
    elapsed = time.perf_counter() - t0
    summary = _summary(cfg, series, final, dt, elapsed)
    if write:
        series.to_csv(out / "observables.csv")
        if cfg.output.heatmaps:
            write_pgm(out / "density_final.pgm", density_image(final.field))
            write_pgm(out / "phase_final.pgm", phase_image(final.field))
        (out / "summary.yaml").write_text(yaml.safe_dump(summary, sort_keys=False))
    log.info("%s finished in %.1f s", cfg.name, elapsed)
    return summary
