"""Finite quantum groups, their actions, crossed products and unitary implementations."""
from .errors import FinqError, InputError, NumericalError, StructureError, TheoremViolation
from .linalg import get_tol, set_tol, tolerance
from .finvn import ConcreteStarAlgebra, Weight, gns
from .qgroup import FiniteQuantumGroup, validate

__version__ = "0.1.0"
