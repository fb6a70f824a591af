"""Conformable fractional calculus: derivatives, alpha-integrals and rules."""

from .core import (
    AlphaGrid,
    FractionalOrder,
    alpha_integral_from,
    alpha_integral_of_bivariate,
    conformable_derivative,
    conformable_derivative_limit,
    conformable_integral,
    gauss_legendre,
    leibniz_alpha,
    matrix_inverse_alpha_derivative,
    right_conformable_derivative,
)
from .functions import (
    BivariateFunction,
    Composition,
    Constant,
    MatrixFunction,
    Monomial,
    Polynomial,
    Product,
    Quotient,
    ScalarFunction,
    Scaled,
    Sinusoid,
    Sum,
    Tabulated,
    alpha_power,
)

__all__ = [
    "AlphaGrid",
    "BivariateFunction",
    "Composition",
    "Constant",
    "FractionalOrder",
    "MatrixFunction",
    "Monomial",
    "Polynomial",
    "Product",
    "Quotient",
    "ScalarFunction",
    "Scaled",
    "Sinusoid",
    "Sum",
    "Tabulated",
    "alpha_integral_from",
    "alpha_integral_of_bivariate",
    "alpha_power",
    "conformable_derivative",
    "conformable_derivative_limit",
    "conformable_integral",
    "gauss_legendre",
    "leibniz_alpha",
    "matrix_inverse_alpha_derivative",
    "right_conformable_derivative",
]
