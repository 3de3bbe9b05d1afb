"""Linear-optics entangled state analyzer for time-bin encoded photonic qudits."""

from .applications import entanglement_swap, sweep, teleport
from .emitter import generate, generate_d4, verify_schedule
from .errors import (
    AuxConstraintError,
    DimensionError,
    ModeOverlapError,
    NonUnitaryError,
    NormalizationError,
    QesaError,
    ScheduleError,
    SymmetryCheckError,
)
from .esa import build_aux, correction_unitary, enumerate_success, project_ab, projection_bra
from .fock import FockState, QuditVector, fidelity, inner_product, partial_project, schmidt_rank, tensor
from .interferometer import ModeUnitary, apply_netlist, apply_spatial, decompose, qft_matrix

__all__ = [
    "AuxConstraintError", "DimensionError", "FockState", "ModeOverlapError", "ModeUnitary",
    "NonUnitaryError", "NormalizationError", "QesaError", "QuditVector", "ScheduleError",
    "SymmetryCheckError", "apply_netlist", "apply_spatial", "build_aux", "correction_unitary",
    "decompose", "entanglement_swap", "enumerate_success", "fidelity", "generate", "generate_d4",
    "inner_product", "partial_project", "project_ab", "projection_bra", "qft_matrix", "schmidt_rank",
    "sweep", "teleport", "tensor", "verify_schedule",
]
