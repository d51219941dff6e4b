"""Exponential Riesz-basis frequency sets for lattice multi-tiling domains.

Construction by cut-and-project sets in R^{d+1}, with numerical certification
of tiling multiplicity, block structure, mean-deviation conditions, and
truncated Gram frame bounds.
"""

__version__ = "0.1.0"

from .errors import QuasibasisError
from .geometry import (
    BoxUnionRegion,
    IndicatorRegion,
    Lattice,
    bounding_radius,
    generic_translate,
    measure,
    multiplicity,
    normalize_to_integer_lattice,
    verify_multitiling,
)
from .quasicrystal import (
    BlockEnumeration,
    CutProjectParams,
    default_params,
    density_estimate,
    gamma_generators,
    generate_lambda,
    generate_lambda_star,
    make_params,
    separation_gap,
)
from .avdonin import (
    AvdoninReport,
    block_sum_identity_check,
    check_conditions,
    constant_c,
    kadec_check,
    phi,
    torus_integral_phi,
    window_deviation,
)
from .riesz import (
    FrameReport,
    GramMatrix,
    duality_cross_check,
    frame_bounds,
    ft_region,
    gram_1d,
    gram_dd,
    riesz_trend,
)

__all__ = [
    "__version__",
    "QuasibasisError",
    "BoxUnionRegion",
    "IndicatorRegion",
    "Lattice",
    "measure",
    "multiplicity",
    "verify_multitiling",
    "normalize_to_integer_lattice",
    "generic_translate",
    "bounding_radius",
    "CutProjectParams",
    "make_params",
    "default_params",
    "gamma_generators",
    "generate_lambda",
    "generate_lambda_star",
    "separation_gap",
    "density_estimate",
    "BlockEnumeration",
    "phi",
    "torus_integral_phi",
    "constant_c",
    "block_sum_identity_check",
    "window_deviation",
    "check_conditions",
    "kadec_check",
    "AvdoninReport",
    "ft_region",
    "gram_dd",
    "gram_1d",
    "frame_bounds",
    "riesz_trend",
    "duality_cross_check",
    "GramMatrix",
    "FrameReport",
]
