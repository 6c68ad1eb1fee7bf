"""Normal-form reduction of the gauge equation: resonance functions,
multipliers, multilinear terms, the integrated residual and the lattice
verifier."""

from .lattice import LatticeReport, verify_lattice
from .multipliers import MULTIPLIERS, multiplier_value
from .phases import Omega, omega, omega2, omega3, total_phase
from .residual import ResidualReport, normalform_residual
from .terms import TERMS, NormalFormTermId, boundary_term, eval_term, get_term

__all__ = [
    "LatticeReport", "verify_lattice", "MULTIPLIERS", "multiplier_value", "Omega", "omega",
    "omega2", "omega3", "total_phase", "ResidualReport", "normalform_residual", "TERMS",
    "NormalFormTermId", "boundary_term", "eval_term", "get_term",
]
