"""Arithmetic dynamics of Henon maps over Q and Q(t)."""

from .arith import QPlace, enumerate_rationals, mult_height, padic_valuation, weil_height
from .core import HenonMap, Matrix2, PlanePoint, apply, apply_inverse, jacobian, multiplier, orbit

__all__ = [
    "HenonMap", "Matrix2", "PlanePoint", "QPlace",
    "apply", "apply_inverse", "enumerate_rationals", "jacobian", "mult_height",
    "multiplier", "orbit", "padic_valuation", "weil_height",
]
