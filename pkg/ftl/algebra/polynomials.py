import json
import math
from typing import Dict, Iterable, List, Tuple, Union
import numpy as np
from .coefficients import GaussianRational, ONE

Exponent = Tuple[int, int, int, int]

# exponent slots, fixed order (z1, zb1, z2, zb2)
Z1, ZB1, Z2, ZB2 = range(4)
SYMBOLS = ("z1", "zb1", "z2", "zb2")


def symbol_index(var: Union[int, str]) -> int:
    if isinstance(var, int) and 0 <= var < 4:
        return var
    try:
        return SYMBOLS.index(var)
    except ValueError:
        raise ValueError(f"unknown symbol {var!r}, expected one of {SYMBOLS}")


def _conj(value):
    return value.conjugate()


def _powers(value, top: int) -> list:
    out = [1, value]
    for _ in range(top - 1):
        out.append(out[-1] * value)
    return out[: top + 1]


class ConjPoly:
    """
    Polynomial in the four independent symbols z1, zb1, z2, zb2 with exact
    Gaussian-rational coefficients.

    Terms are kept in canonical form: a dict from exponent 4-tuple to a nonzero
    coefficient. Instances are treated as immutable; every operation returns
    a new polynomial.
    """

    __slots__ = ("terms", "_compiled")

    def __init__(self, terms: Dict[Exponent, GaussianRational] = None):
        clean = {}
        for exp, coeff in (terms or {}).items():
            coeff = GaussianRational.coerce(coeff)
            if not coeff.is_zero():
                clean[tuple(exp)] = coeff
        self.terms = clean
        self._compiled = None

    @classmethod
    def constant(cls, value) -> "ConjPoly":
        return cls({(0, 0, 0, 0): value})

    @classmethod
    def symbol(cls, var: Union[int, str]) -> "ConjPoly":
        exp = [0, 0, 0, 0]
        exp[symbol_index(var)] = 1
        return cls({tuple(exp): ONE})

    @classmethod
    def monomial(cls, exp: Exponent, coeff=1) -> "ConjPoly":
        return cls({tuple(exp): coeff})

    @classmethod
    def _lift(cls, other) -> "ConjPoly":
        if isinstance(other, ConjPoly):
            return other
        return cls.constant(other)

    # arithmetic

    def __add__(self, other):
        other = ConjPoly._lift(other)
        terms = dict(self.terms)
        for exp, coeff in other.terms.items():
            terms[exp] = terms[exp] + coeff if exp in terms else coeff
        return ConjPoly(terms)

    __radd__ = __add__

    def __neg__(self):
        return ConjPoly({exp: -coeff for exp, coeff in self.terms.items()})

    def __sub__(self, other):
        return self + (-ConjPoly._lift(other))

    def __rsub__(self, other):
        return ConjPoly._lift(other) - self

    def __mul__(self, other):
        other = ConjPoly._lift(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3])
                product = c1 * c2
                terms[exp] = terms[exp] + product if exp in terms else product
        return ConjPoly(terms)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if power < 0:
            raise ValueError("negative powers are not polynomials")
        result = ConjPoly.constant(1)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, ConjPoly):
            try:
                other = ConjPoly._lift(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    # structure

    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def degree(self) -> int:
        return max((sum(exp) for exp in self.terms), default=0)

    def leading(self) -> Tuple[Exponent, GaussianRational]:
        exp = max(self.terms)
        return exp, self.terms[exp]

    def monomial_content(self) -> Exponent:
        """largest monomial dividing every term"""
        if not self.terms:
            return (0, 0, 0, 0)
        exps = list(self.terms)
        return tuple(min(exp[i] for exp in exps) for i in range(4))

    def divide_monomial(self, exp: Exponent) -> "ConjPoly":
        return ConjPoly(
            {
                tuple(e[i] - exp[i] for i in range(4)): coeff
                for e, coeff in self.terms.items()
            }
        )

    def scale(self, factor) -> "ConjPoly":
        factor = GaussianRational.coerce(factor)
        return ConjPoly({exp: coeff * factor for exp, coeff in self.terms.items()})

    def derivative(self, var: Union[int, str]) -> "ConjPoly":
        slot = symbol_index(var)
        terms = {}
        for exp, coeff in self.terms.items():
            power = exp[slot]
            if power:
                lowered = list(exp)
                lowered[slot] -= 1
                terms[tuple(lowered)] = coeff * power
        return ConjPoly(terms)

    def conjugate(self) -> "ConjPoly":
        return ConjPoly(
            {
                (b, a, d, c): coeff.conjugate()
                for (a, b, c, d), coeff in self.terms.items()
            }
        )

    def is_real(self) -> bool:
        return self.conjugate() == self

    # numeric evaluation

    def _compile(self):
        if self._compiled is None:
            rows = [(complex(coeff),) + exp for exp, coeff in self.terms.items()]
            tops = [max((exp[i] for exp in self.terms), default=0) for i in range(4)]
            self._compiled = (rows, tops)
        return self._compiled

    def evaluate(self, z1, z2):
        """
        Value at (z1, z2) with the true conjugates substituted for zb1 and zb2.
        Accepts complex scalars or numpy arrays of matching shape.
        """
        rows, tops = self._compile()
        if isinstance(z1, np.ndarray) or isinstance(z2, np.ndarray):
            z1 = np.asarray(z1, dtype=complex)
            z2 = np.asarray(z2, dtype=complex)
        values = (z1, _conj(z1), z2, _conj(z2))
        powers = [_powers(values[i], tops[i]) for i in range(4)]
        total = 0j
        for coeff, a, b, c, d in rows:
            total = total + (
                coeff * powers[0][a] * powers[1][b] * powers[2][c] * powers[3][d]
            )
        if isinstance(total, np.ndarray):
            return total
        if isinstance(z1, np.ndarray):
            return np.full(np.shape(z1), total, dtype=complex)
        return complex(total)

    # serialisation

    def to_json(self) -> List[dict]:
        return [
            {"e": list(exp), "re": str(coeff.re), "im": str(coeff.im)}
            for exp, coeff in sorted(self.terms.items())
        ]

    @classmethod
    def from_json(cls, data: Iterable[dict]) -> "ConjPoly":
        if isinstance(data, str):
            data = json.loads(data)
        terms = {}
        for item in data:
            exp = tuple(int(e) for e in item["e"])
            if len(exp) != 4 or min(exp) < 0:
                raise ValueError(f"bad exponent {item['e']!r}")
            coeff = GaussianRational(item.get("re", "0"), item.get("im", "0"))
            terms[exp] = terms[exp] + coeff if exp in terms else coeff
        return cls(terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for exp, coeff in sorted(self.terms.items(), reverse=True):
            factors = [
                SYMBOLS[i] if p == 1 else f"{SYMBOLS[i]}^{p}"
                for i, p in enumerate(exp)
                if p
            ]
            parts.append("*".join([repr(coeff)] + factors) if factors else repr(coeff))
        return " + ".join(parts)


def wirtinger_derivative(p: ConjPoly, var: Union[int, str]) -> ConjPoly:
    return p.derivative(var)


def evaluate(expr, z):
    """evaluate a ConjPoly or RationalExpr at the point z = (z1, z2)"""
    return expr.evaluate(z[0], z[1])


class PolarizedKernel:
    """
    R(z, w) stored as a dict from (z1, z2, wb1, wb2) exponents to coefficients.
    Holomorphic in z because no zb symbol can occur in the key layout.
    """

    __slots__ = ("terms", "_compiled")

    def __init__(self, terms: Dict[Exponent, GaussianRational] = None):
        self.terms = {
            tuple(exp): GaussianRational.coerce(coeff)
            for exp, coeff in (terms or {}).items()
            if not GaussianRational.coerce(coeff).is_zero()
        }
        self._compiled = None

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, PolarizedKernel):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __sub__(self, other: "PolarizedKernel") -> "PolarizedKernel":
        terms = dict(self.terms)
        for exp, coeff in other.terms.items():
            terms[exp] = terms[exp] - coeff if exp in terms else -coeff
        return PolarizedKernel(terms)

    def diagonal(self) -> ConjPoly:
        """restriction w := z, back in (z1, zb1, z2, zb2) layout"""
        terms = {}
        for (a, c, b, d), coeff in self.terms.items():
            exp = (a, b, c, d)
            terms[exp] = terms[exp] + coeff if exp in terms else coeff
        return ConjPoly(terms)

    def conjugate_swap(self) -> "PolarizedKernel":
        """the kernel (z, w) -> conj R(w, z)"""
        return PolarizedKernel(
            {
                (b, d, a, c): coeff.conjugate()
                for (a, c, b, d), coeff in self.terms.items()
            }
        )

    def derivative_z(self, index: int) -> "PolarizedKernel":
        """holomorphic derivative in z1 (index 0) or z2 (index 1)"""
        terms = {}
        for exp, coeff in self.terms.items():
            if exp[index]:
                lowered = list(exp)
                lowered[index] -= 1
                terms[tuple(lowered)] = coeff * exp[index]
        return PolarizedKernel(terms)

    def _compile(self):
        if self._compiled is None:
            rows = [(complex(coeff),) + exp for exp, coeff in self.terms.items()]
            tops = [max((exp[i] for exp in self.terms), default=0) for i in range(4)]
            self._compiled = (rows, tops)
        return self._compiled

    def evaluate(self, z, w):
        """R(z, w); each of z, w is a pair (first, second) of scalars or arrays"""
        rows, tops = self._compile()
        z1, z2 = z
        w1, w2 = w
        array = any(isinstance(v, np.ndarray) for v in (z1, z2, w1, w2))
        values = (z1, z2, _conj(w1), _conj(w2))
        if array:
            values = tuple(np.asarray(v, dtype=complex) for v in values)
        powers = [_powers(values[i], tops[i]) for i in range(4)]
        total = 0j
        for coeff, a, c, b, d in rows:
            total = total + (
                coeff * powers[0][a] * powers[1][c] * powers[2][b] * powers[3][d]
            )
        if array and not isinstance(total, np.ndarray):
            shape = np.broadcast(*values).shape
            return np.full(shape, total, dtype=complex)
        return total if array else complex(total)

    def to_json(self) -> List[dict]:
        return [
            {"e": list(exp), "re": str(coeff.re), "im": str(coeff.im)}
            for exp, coeff in sorted(self.terms.items())
        ]

    def __repr__(self):
        names = ("z1", "z2", "wb1", "wb2")
        if not self.terms:
            return "0"
        parts = []
        for exp, coeff in sorted(self.terms.items(), reverse=True):
            factors = [
                names[i] if p == 1 else f"{names[i]}^{p}"
                for i, p in enumerate(exp)
                if p
            ]
            parts.append("*".join([repr(coeff)] + factors) if factors else repr(coeff))
        return " + ".join(parts)

    def increment(self, w, h):
        """
        R(w + h, w) - R(w, w), expanded in powers of h so that it stays
        accurate relative to its own size when h is small
        """
        rows, tops = self._compile()
        w1, w2 = w
        h1, h2 = h
        array = any(isinstance(v, np.ndarray) for v in (w1, w2, h1, h2))
        values = (w1, w2, _conj(w1), _conj(w2), h1, h2)
        if array:
            values = tuple(np.asarray(v, dtype=complex) for v in values)
        base = [_powers(values[i], tops[i]) for i in range(4)]
        step = [_powers(values[4], tops[0]), _powers(values[5], tops[1])]
        total = 0j
        for coeff, a, c, b, d in rows:
            inner = 0j
            for i in range(a + 1):
                for j in range(c + 1):
                    if i or j:
                        inner = inner + (
                            math.comb(a, i)
                            * math.comb(c, j)
                            * base[0][a - i]
                            * step[0][i]
                            * base[1][c - j]
                            * step[1][j]
                        )
            total = total + coeff * base[2][b] * base[3][d] * inner
        if array and not isinstance(total, np.ndarray):
            shape = np.broadcast(*values).shape
            return np.full(shape, total, dtype=complex)
        return total if array else complex(total)


def polarize(p: ConjPoly) -> PolarizedKernel:
    """
    replace every zb factor by the matching wb factor:
    z1^a zb1^b z2^c zb2^d -> z1^a z2^c wb1^b wb2^d
    """
    return PolarizedKernel(
        {(a, c, b, d): coeff for (a, b, c, d), coeff in p.terms.items()}
    )
