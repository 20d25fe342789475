from typing import Union
import numpy as np
from ..errors import ZeroDenominatorError
from .polynomials import ConjPoly


class RationalExpr:
    """
    Quotient of two ConjPoly values.

    Only monomial content is cancelled; there is no polynomial GCD, so two
    equal expressions need not share a representation. Equality is decided
    by cross multiplication.
    """

    __slots__ = ("numerator", "denominator")

    def __init__(self, numerator, denominator=None):
        numerator = ConjPoly._lift(numerator)
        if denominator is None:
            denominator = ConjPoly.constant(1)
        denominator = ConjPoly._lift(denominator)
        if denominator.is_zero():
            raise ZeroDenominatorError(
                "rational expression with the zero polynomial as denominator"
            )
        if numerator.is_zero():
            denominator = ConjPoly.constant(1)
        else:
            contents = zip(numerator.monomial_content(), denominator.monomial_content())
            shared = tuple(min(a, b) for a, b in contents)
            if any(shared):
                numerator = numerator.divide_monomial(shared)
                denominator = denominator.divide_monomial(shared)
            _, lead = denominator.leading()
            if lead != 1:
                numerator = numerator.scale(1 / lead)
                denominator = denominator.scale(1 / lead)
        self.numerator = numerator
        self.denominator = denominator

    @classmethod
    def lift(cls, value) -> "RationalExpr":
        if isinstance(value, RationalExpr):
            return value
        return cls(value)

    def is_zero(self) -> bool:
        return self.numerator.is_zero()

    def is_polynomial(self) -> bool:
        return self.denominator == 1

    def _monomial_denominator(self) -> bool:
        return self.denominator.is_monomial()

    def __add__(self, other):
        other = RationalExpr.lift(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.denominator == other.denominator:
            return RationalExpr(self.numerator + other.numerator, self.denominator)
        if self._monomial_denominator() and other._monomial_denominator():
            # both denominators are monic monomials after normalisation
            (e1, _), (e2, _) = self.denominator.leading(), other.denominator.leading()
            lcm = tuple(max(a, b) for a, b in zip(e1, e2))
            left = self.numerator * ConjPoly.monomial(
                tuple(m - a for m, a in zip(lcm, e1))
            )
            right = other.numerator * ConjPoly.monomial(
                tuple(m - b for m, b in zip(lcm, e2))
            )
            return RationalExpr(left + right, ConjPoly.monomial(lcm))
        return RationalExpr(
            self.numerator * other.denominator + other.numerator * self.denominator,
            self.denominator * other.denominator,
        )

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr(-self.numerator, self.denominator)

    def __sub__(self, other):
        return self + (-RationalExpr.lift(other))

    def __rsub__(self, other):
        return RationalExpr.lift(other) - self

    def __mul__(self, other):
        other = RationalExpr.lift(other)
        if self.is_zero() or other.is_zero():
            return RationalExpr(0)
        return RationalExpr(
            self.numerator * other.numerator, self.denominator * other.denominator
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = RationalExpr.lift(other)
        if other.is_zero():
            raise ZeroDenominatorError("division by the zero rational expression")
        return RationalExpr(
            self.numerator * other.denominator, self.denominator * other.numerator
        )

    def __rtruediv__(self, other):
        return RationalExpr.lift(other) / self

    def __eq__(self, other):
        try:
            other = RationalExpr.lift(other)
        except TypeError:
            return NotImplemented
        if self.denominator == other.denominator:
            return self.numerator == other.numerator
        return self.numerator * other.denominator == other.numerator * self.denominator

    __hash__ = None

    def derivative(self, var: Union[int, str]) -> "RationalExpr":
        num, den = self.numerator, self.denominator
        if den == 1:
            return RationalExpr(num.derivative(var))
        return RationalExpr(
            num.derivative(var) * den - num * den.derivative(var), den * den
        )

    def conjugate(self) -> "RationalExpr":
        return RationalExpr(self.numerator.conjugate(), self.denominator.conjugate())

    def evaluate(self, z1, z2):
        den = self.denominator.evaluate(z1, z2)
        if np.any(den == 0):
            raise ZeroDenominatorError(
                f"denominator {self.denominator!r} vanishes at the evaluation point"
            )
        return self.numerator.evaluate(z1, z2) / den

    def to_json(self) -> dict:
        return {"num": self.numerator.to_json(), "den": self.denominator.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "RationalExpr":
        return cls(ConjPoly.from_json(data["num"]), ConjPoly.from_json(data["den"]))

    def __repr__(self):
        if self.denominator == 1:
            return repr(self.numerator)
        return f"({self.numerator!r}) / ({self.denominator!r})"


def rational_arith(a: RationalExpr, b: RationalExpr, op: str) -> RationalExpr:
    a, b = RationalExpr.lift(a), RationalExpr.lift(b)
    if op == "+":
        return a + b
    if op in ("-", "−"):
        return a - b
    if op in ("*", "×"):
        return a * b
    if op in ("/", "÷"):
        return a / b
    raise ValueError(f"unknown operation {op!r}")
