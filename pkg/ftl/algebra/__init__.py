# flake8: noqa
from .coefficients import GaussianRational
from .polynomials import (
    ConjPoly,
    PolarizedKernel,
    SYMBOLS,
    Z1,
    ZB1,
    Z2,
    ZB2,
    evaluate,
    polarize,
    symbol_index,
    wirtinger_derivative,
)
from .rational import RationalExpr, rational_arith
