"""Named experiments, each a fully populated RunConfig.

Pump, loss, interaction and landscape values follow the experiment
definitions.  Domain, resolution, seed waist, meV pump strength and spot
size, Kagome k0 and V0 and the metastable run length are free choices
fixed here.

Dimensionless runs use a 256x256 Dirichlet grid of side 32 (six pump radii)
and a Laguerre-Gauss seed of waist 3.  meV runs keep the same grid, pump
shape and seed in meV length units with ``P0 = 2 meV/hbar``.
"""

from __future__ import annotations

import copy

import numpy as np

from polgyro.config import RunConfig, merge_dicts

K0_METASTABLE = 2 * np.pi / 10

_FLAT = {
    "grid": {"nx": 256, "ny": 256, "lx": 32.0, "ly": 32.0, "boundary": "dirichlet"},
    "units": {"kind": "dimensionless"},
    "params": {"g": 1.0, "gamma": 1.0, "eta": 1.0},
    "landscape": {
        "potential": {"kind": "flat"},
        "pump": {"kind": "gaussian", "P0": 2.0, "r0": 5.35},
    },
    "seed": {"kind": "vortex_superposition", "l": 1, "w0": 3.0},
    "solver": {"scheme": "rk4-fd4", "safety": 0.8, "t_end": 10.0, "snapshot_every": 162},
    "analysis": {"observers": ["norm", "peak_density", "lobes"], "nbins": 360},
}

_MEV = {"units": {"kind": "mev"}, "params": {"g": 0.05, "gamma": 1.0, "eta": 0.1}}

_DISORDER = {"landscape": {"potential": {"kind": "disorder", "rms": 0.5, "corr_len": 2.0, "seed": 0}}}


def _ring(l: int) -> dict:
    return {
        "grid": {"nx": 256, "ny": 256, "lx": 20.0, "ly": 20.0, "boundary": "dirichlet"},
        "landscape": {
            "potential": {"kind": "mexican_hat", "V0": 1.0, "r_min": 5.0},
            "pump": {"kind": "ring", "P0": 2.0, "l": l, "V0": 1.0, "r_min": 5.0},
        },
        "seed": {"kind": "ring_superposition", "l": l, "V0": 1.0, "r_min": 5.0},
        "solver": {"snapshot_every": 176},
        "analysis": {"nbins": 720},
    }


def _metastable(pump: dict) -> dict:
    k0 = K0_METASTABLE
    amp = 1 / np.sqrt(3)
    return {
        "grid": {"nx": 128, "ny": 128, "lx": 40.0, "ly": 40.0, "boundary": "periodic"},
        "landscape": {"potential": {"kind": "periodic_1d", "V0": 1.0, "k0": k0}, "pump": pump},
        "seed": {
            "kind": "momentum_mixture",
            "components": [{"k": [0.0, 0.0], "amp": amp}, {"k": [k0, 0.0], "amp": amp},
                           {"k": [-k0, 0.0], "amp": amp}],
        },
        "solver": {"t_end": 100.0, "snapshot_every": 100},
        "analysis": {
            "observers": ["norm", "peak_density", "momentum"],
            "momentum_targets": {"zero": [0.0, 0.0], "plus_k0": [k0, 0.0], "minus_k0": [-k0, 0.0]},
        },
    }


_KAGOME = {"landscape": {"potential": {"kind": "kagome", "V0": 1.0, "k0": 6.0, "p_param": 1.5}}}


_PRESETS = {
    "fig-flat": (_FLAT, "vortex-antivortex superposition, Gaussian pump, flat potential"),
    "fig-flat-meV": (merge_dicts(_FLAT, _MEV), "as fig-flat with meV parameters"),
    "fig-disorder": (merge_dicts(_FLAT, _DISORDER), "fig-flat in a Gaussian-correlated disorder potential"),
    "fig-disorder-meV": (merge_dicts(_FLAT, _MEV, _DISORDER), "fig-disorder with meV parameters"),
    "fig-ring-l1": (merge_dicts(_FLAT, _ring(1)), "l = +-1 counter-propagating currents in a mexican-hat ring"),
    "fig-ring-l5": (merge_dicts(_FLAT, _ring(5)), "l = +-5 counter-propagating currents in a mexican-hat ring"),
    "fig-metastable-uniform": (
        merge_dicts(_FLAT, _metastable({"kind": "uniform", "P0": 2.0})),
        "k = 0, +-k0 mixture under a uniform pump (selects k = 0)",
    ),
    "fig-metastable-periodic": (
        merge_dicts(_FLAT, _metastable({"kind": "periodic", "P0": 2.0, "k0": K0_METASTABLE})),
        "k = 0, +-k0 mixture under a cos^2 pump (selects +-k0)",
    ),
    "fig-kagome": (merge_dicts(_FLAT, _MEV, _KAGOME), "vortex superposition in a Kagome lattice, meV parameters"),
}

PRESET_NAMES = tuple(_PRESETS)


def preset_dict(name: str) -> dict:
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    data = copy.deepcopy(_PRESETS[name][0])
    data["name"] = name
    data.setdefault("output", {})["dir"] = f"out/{name}"
    return data


def preset(name: str) -> RunConfig:
    return RunConfig.from_dict(preset_dict(name))


def describe(name: str) -> str:
    return _PRESETS[name][1]
