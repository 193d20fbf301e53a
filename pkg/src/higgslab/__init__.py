"""Numerical laboratory for Hermitian-Yang-Mills pairs and moduli geometry
on flat complex tori."""

from .geometry import TorusGeometry
from .fields import (
    FormField,
    adjoint_star,
    identity_section,
    kahler_form_field,
    l2_inner_product,
    l2_norm,
    lambda_contract,
    random_band_limited,
    spectral_derivative,
    tilde_lambda_bracket,
    trace_free,
    trace_part,
    wedge_bracket,
    wedge_product_trace,
)

__all__ = [
    "TorusGeometry",
    "FormField",
    "adjoint_star",
    "identity_section",
    "kahler_form_field",
    "l2_inner_product",
    "l2_norm",
    "lambda_contract",
    "random_band_limited",
    "spectral_derivative",
    "tilde_lambda_bracket",
    "trace_free",
    "trace_part",
    "wedge_bracket",
    "wedge_product_trace",
]

__version__ = "0.1.0"
