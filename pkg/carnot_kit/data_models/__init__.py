from .group import GroupSpec
from .hopf_lax import HopfLaxProblem
from .hopf_lax import HopfLaxResult
from .probe import ProbeReport
from .report import Report

__all__ = [
    "GroupSpec",
    "HopfLaxProblem",
    "HopfLaxResult",
    "ProbeReport",
    "Report",
]
