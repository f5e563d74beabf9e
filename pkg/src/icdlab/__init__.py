"""Concurrence, separability and Lewenstein-Sanpera decompositions of two-qubit states."""

from .concurrence import concurrence_general, eof_from_concurrence, takagi
from .errors import IcdLabError
from .icd import ICDParams, classify_region, concurrence_icd, icd_density
from .lsd import LSDecomposition, ls_decompose, lsd_closed_form, verify_optimality
from .oracle import bsa_numeric, random_density, random_icd

__all__ = [
    "ICDParams", "IcdLabError", "LSDecomposition", "bsa_numeric", "classify_region",
    "concurrence_general", "concurrence_icd", "eof_from_concurrence", "icd_density",
    "ls_decompose", "lsd_closed_form", "random_density", "random_icd", "takagi",
    "verify_optimality",
]
__version__ = "0.1.0"
