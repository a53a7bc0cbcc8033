"""Open-dissipative Gross-Pitaevskii simulation and Sagnac metrology for
polariton vortex-superposition gyroscopes."""

from polgyro.field import (
    Boundary,
    ComplexField,
    GridSpec,
    SimParams,
    UnitSystem,
    density_and_phase,
    field_norm,
    make_grid,
    read_snapshot,
    write_snapshot,
)

__all__ = [
    "Boundary",
    "ComplexField",
    "GridSpec",
    "SimParams",
    "UnitSystem",
    "density_and_phase",
    "field_norm",
    "make_grid",
    "read_snapshot",
    "write_snapshot",
]

__version__ = "0.1.0"
