"""Isometric deformations of minimal surfaces and their verification."""
from .congruence import CongruenceReport, congruence
from .family import FrameField, associated_family, h_values, polar_surface, source_connection
from .sampled import (
    DeformationSpec,
    SampledSurface,
    conformality_residual,
    direct_sum,
    isometry_residual,
    load_surface,
    loads_surface,
    minimality_residual,
    sample_spec,
    substantial_dimension,
)

__all__ = [
    "CongruenceReport", "congruence", "FrameField", "associated_family", "h_values",
    "polar_surface", "source_connection", "DeformationSpec", "SampledSurface",
    "conformality_residual", "direct_sum", "isometry_residual", "load_surface",
    "loads_surface", "minimality_residual", "sample_spec", "substantial_dimension",
]

from .moduli import ModuliReport, moduli_probe  # noqa: E402

__all__ += ["ModuliReport", "moduli_probe"]
