"""Guided modes, spectral measure, modal transform and Green's function of a
cylindrically symmetric open waveguide (scalar Helmholtz model)."""
from __future__ import annotations

__version__ = "0.1.0"

from ._backend import BACKEND, set_threads
from .field import (
    FieldGrid,
    FieldMeasures,
    SourceSpec,
    axial_kernel,
    decompose_source,
    field_rule,
    greens_kernel,
    helmholtz_residual,
    ring_source,
    solve_field,
)
from .radial import RadialError, match_cladding, regular_values, solve_regular
from .spectrum import (
    GuidedMode,
    SpectralMeasure,
    assemble_measure,
    continuous_density,
    find_guided_modes,
    sweep_modes,
)
from .transform import forward, inverse, parseval_gap
from .waveguide import Coaxial, Parabolic, SpecError, Step, Tabulated, WaveguideSpec, make_spec

__all__ = [
    "__version__",
    "BACKEND",
    "set_threads",
    "Step",
    "Parabolic",
    "Coaxial",
    "Tabulated",
    "WaveguideSpec",
    "SpecError",
    "make_spec",
    "RadialError",
    "solve_regular",
    "regular_values",
    "match_cladding",
    "GuidedMode",
    "SpectralMeasure",
    "find_guided_modes",
    "sweep_modes",
    "continuous_density",
    "assemble_measure",
    "forward",
    "inverse",
    "parseval_gap",
    "FieldGrid",
    "FieldMeasures",
    "SourceSpec",
    "axial_kernel",
    "decompose_source",
    "field_rule",
    "greens_kernel",
    "helmholtz_residual",
    "ring_source",
    "solve_field",
]
