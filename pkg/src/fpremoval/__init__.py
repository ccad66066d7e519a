"""Exact toolkit for induced arithmetic removal over F_p^n."""
from .counting import Colouring, lambda_forms, pattern_density, pattern_free_check
from .fourier import BoundedFunction, coset_spectrum, partition_report, uniformity
from .gf import CapExceeded, Coset, Subspace, complement, intersect, perp
from .patterns import LinearSystem, Pattern, build_system, check_column_conditions, is_partition_regular
from .regularity import arl, multi_subcoset_select, two_level_select
from .removal import PipelineConfig, recolour, verify_removal

__all__ = [
    "BoundedFunction",
    "CapExceeded",
    "Colouring",
    "Coset",
    "LinearSystem",
    "Pattern",
    "PipelineConfig",
    "Subspace",
    "arl",
    "build_system",
    "check_column_conditions",
    "complement",
    "coset_spectrum",
    "intersect",
    "is_partition_regular",
    "lambda_forms",
    "multi_subcoset_select",
    "pattern_density",
    "partition_report",
    "pattern_free_check",
    "perp",
    "recolour",
    "two_level_select",
    "uniformity",
    "verify_removal",
]
