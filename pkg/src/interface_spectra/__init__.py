"""Spectra of linearized two-fluid interface waves over shear flows.

Modules: ``profile`` (velocity profiles), ``rayleigh`` (Rayleigh equation solutions),
``dispersion`` (the dispersion function and its derivatives), ``spectrum`` (root finding,
continuation and counting), ``thresholds`` (gravity thresholds and exclusion tests) and
``cli``.
"""

from .dispersion import DispersionPoint, Y, evaluate
from .errors import SpectraError
from .profile import InterfaceConfig, ShearProfile
from .spectrum import Tolerances, continue_branch, count_eigenvalues, large_k_roots, newton_root
from .thresholds import c0_solve, exclusion_certificate, g_sharp, g_star

__all__ = [
    "DispersionPoint", "InterfaceConfig", "ShearProfile", "SpectraError", "Tolerances", "Y",
    "c0_solve", "continue_branch", "count_eigenvalues", "evaluate", "exclusion_certificate",
    "g_sharp", "g_star", "large_k_roots", "newton_root",
]
__version__ = "0.1.0"
