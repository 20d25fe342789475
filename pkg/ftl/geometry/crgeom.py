import logging
from typing import Dict, List, NamedTuple, Sequence, Tuple
import numpy as np
from ..algebra import ZB1, ZB2, Z1, Z2, ConjPoly, RationalExpr
from ..errors import DomainError, SingularFrameError, TypeExceedsError, UsageError
from ..schemas import TypeReport, as_point

logger = logging.getLogger(__name__)

# basis order (d/dz1, d/dz2, d/dzb1, d/dzb2) mapped onto ConjPoly symbol slots
BASIS_SLOTS = (Z1, Z2, ZB1, ZB2)
BASIS_NAMES = ("d1", "d2", "db1", "db2")
WORD_L, WORD_LB = "L", "Lb"
MAX_DEGREE = 12
DEFAULT_K_MAX = 8
DEDUP_POLICY = "exact-duplicates-and-negations"


class VectorField:
    """
    Complex vector field with rational coefficients in the ordered basis
    d/dz1, d/dz2, d/dzb1, d/dzb2. Immutable.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        coeffs = tuple(RationalExpr.lift(c) for c in coeffs)
        if len(coeffs) != 4:
            raise ValueError("a vector field needs exactly four coefficients")
        self.coeffs = coeffs

    @classmethod
    def zero(cls) -> "VectorField":
        return cls((0, 0, 0, 0))

    @classmethod
    def basis(cls, index: int, coeff=1) -> "VectorField":
        coeffs = [0, 0, 0, 0]
        coeffs[index] = coeff
        return cls(coeffs)

    def apply(self, f) -> RationalExpr:
        """X(f) = sum of coefficient times Wirtinger derivative"""
        f = RationalExpr.lift(f)
        total = RationalExpr(0)
        for coeff, slot in zip(self.coeffs, BASIS_SLOTS):
            if not coeff.is_zero():
                total = total + coeff * f.derivative(slot)
        return total

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def is_polynomial(self) -> bool:
        return all(c.is_polynomial() for c in self.coeffs)

    def key(self):
        """hash of the coefficient numerators, meaningful for polynomial fields"""
        return tuple(hash(c.numerator) for c in self.coeffs)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField([a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "VectorField":
        return VectorField([-c for c in self.coeffs])

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + (-other)

    def scale(self, factor) -> "VectorField":
        return VectorField([factor * c for c in self.coeffs])

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return all(a == b for a, b in zip(self.coeffs, other.coeffs))

    __hash__ = None

    def conjugate(self) -> "VectorField":
        c1, c2, cb1, cb2 = (c.conjugate() for c in self.coeffs)
        return VectorField((cb1, cb2, c1, c2))

    def evaluate(self, z1, z2) -> np.ndarray:
        return np.array([c.evaluate(z1, z2) for c in self.coeffs])

    def to_json(self) -> dict:
        return {name: c.to_json() for name, c in zip(BASIS_NAMES, self.coeffs)}

    def __repr__(self):
        parts = [
            f"({c!r})*{name}"
            for c, name in zip(self.coeffs, BASIS_NAMES)
            if not c.is_zero()
        ]
        return " + ".join(parts) if parts else "0"


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    return VectorField(
        [X.apply(y) - Y.apply(x) for x, y in zip(X.coeffs, Y.coeffs)]
    )


class Frame(NamedTuple):
    L: VectorField
    Lb: VectorField
    T: VectorField
    N: VectorField
    rho: ConjPoly
    # first derivatives rho_1, rho_2, rho_1b, rho_2b
    d1: RationalExpr
    d2: RationalExpr
    db1: RationalExpr
    db2: RationalExpr
    # T-coefficients of [L, T] and [L, Lb]
    lambda_LT: RationalExpr
    lambda_LLb: RationalExpr


def tangential_frame(domain) -> Tuple[VectorField, VectorField, VectorField]:
    frame = frame_of(domain.rho)
    return frame.L, frame.Lb, frame.T


def frame_of(rho: ConjPoly) -> Frame:
    d1, d2, db1, db2 = (rho.derivative(slot) for slot in BASIS_SLOTS)
    if d1.is_zero():
        raise DomainError("d rho / d z1 is the zero polynomial; the frame is undefined")
    d1, d2, db1, db2 = (RationalExpr(p) for p in (d1, d2, db1, db2))
    L = VectorField((-d2, d1, 0, 0))
    Lb = VectorField((0, 0, -db2, db1))
    T = VectorField((db1, 0, -d1, 0))
    N = VectorField((db1, db2, d1, d2))

    def second(a, b):
        return RationalExpr(rho.derivative(a).derivative(b))

    r11, r12 = second(Z1, Z1), second(Z1, Z2)
    r11b, r22b = second(Z1, ZB1), second(Z2, ZB2)
    r12b, r21b = second(Z1, ZB2), second(Z2, ZB1)
    lambda_LT = r12 - d2 * r11 / d1
    lambda_LLb = (
        r11b * d2 * db2 + r22b * d1 * db1 - r12b * d2 * db1 - r21b * d1 * db2
    ) / (d1 * db1)
    return Frame(L, Lb, T, N, rho, d1, d2, db1, db2, lambda_LT, lambda_LLb)


def decompose_symbolic(X: VectorField, frame: Frame):
    """
    Exact coefficients (f1, f2, lam, normal) with
    X = f1 L + f2 Lb + lam T + normal N as rational functions.
    """
    X1, X2, Xb1, Xb2 = X.coeffs
    Xrho = X.apply(frame.rho)
    if Xrho.is_zero():
        normal = RationalExpr(0)
    else:
        normal = Xrho / (2 * (frame.d1 * frame.db1 + frame.d2 * frame.db2))
    f1 = (X2 - normal * frame.db2) / frame.d1
    f2 = (Xb2 - normal * frame.d2) / frame.db1
    lam = (
        frame.d1 * X1 + frame.d2 * X2 - frame.db1 * Xb1 - frame.db2 * Xb2
    ) / (2 * frame.d1 * frame.db1)
    return f1, f2, lam, normal


def decompose_in_frame(X: VectorField, frame: Frame, point, cond_max: float = 1e12):
    """numeric coordinates of X(point) in the basis L, Lb, T, N"""
    z1, z2 = point
    basis = (frame.L, frame.Lb, frame.T, frame.N)
    M = np.column_stack([F.evaluate(z1, z2) for F in basis])
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > cond_max:
        raise SingularFrameError(
            f"frame is singular at {point} (condition number {cond:.3g})"
        )
    f1, f2, lam, residual = np.linalg.solve(M, X.evaluate(z1, z2))
    return complex(f1), complex(f2), complex(lam), complex(residual)


class CommutatorEntry:
    """
    One iterated bracket. The word is read outermost first, so ("L", "Lb")
    is [L, Lb] and ("Lb", "L", "Lb") is [Lb, [L, Lb]].
    """

    __slots__ = ("word", "field", "f1", "f2", "lambda_")

    def __init__(self, word, field, f1, f2, lambda_):
        self.word = tuple(word)
        self.field = field
        self.f1 = f1
        self.f2 = f2
        self.lambda_ = lambda_

    @property
    def degree(self) -> int:
        return len(self.word)

    @property
    def inner_word(self) -> tuple:
        return self.word[1:]

    @property
    def label(self) -> str:
        return _label(self.word)

    def to_json(self) -> dict:
        return {
            "word": list(self.word),
            "label": self.label,
            "degree": self.degree,
            "f1": self.f1.to_json(),
            "f2": self.f2.to_json(),
            "lambda": self.lambda_.to_json(),
        }

    def __repr__(self):
        return f"CommutatorEntry({self.label})"


def _label(word) -> str:
    if len(word) == 1:
        return word[0]
    return f"[{word[0]},{_label(word[1:])}]"


class CommutatorTable:
    """all kept bracket words up to degree k_max, in generation order"""

    def __init__(
        self,
        entries: List[CommutatorEntry],
        k_max: int,
        *,
        rho: ConjPoly = None,
        boundary_tol: float = 1e-10,
    ):
        self.entries = tuple(entries)
        self.k_max = k_max
        self.rho = rho
        self.boundary_tol = boundary_tol
        self.dedup = DEDUP_POLICY
        self._degrees = np.array([e.degree for e in self.entries])

    def by_degree(self, k: int) -> List[CommutatorEntry]:
        return [e for e in self.entries if e.degree == k]

    def words(self) -> List[tuple]:
        return [e.word for e in self.entries]

    def __len__(self):
        return len(self.entries)

    def lambda_values(self, z1, z2) -> np.ndarray:
        """lambda of every entry, stacked along the first axis"""
        return np.array([np.asarray(e.lambda_.evaluate(z1, z2)) for e in self.entries])

    def capital_lambdas(self, z1, z2, upto: int = None) -> np.ndarray:
        """
        Lambda_k for k = 0..upto (rows 0 and 1 are zero), computed as the
        square root of the running sum of |lambda|^2 over degrees <= k.
        Works on scalar points or arrays of points.
        """
        upto = self.k_max if upto is None else upto
        shape = np.shape(np.asarray(z1))
        squares = np.zeros((upto + 1,) + shape)
        for entry in self.entries:
            if entry.degree > upto or entry.lambda_.is_zero():
                continue
            value = entry.lambda_.evaluate(z1, z2)
            squares[entry.degree] += np.abs(value) ** 2
        return np.sqrt(np.cumsum(squares, axis=0))

    def to_json(self) -> dict:
        return {
            "k_max": self.k_max,
            "dedup": self.dedup,
            "entries": [e.to_json() for e in self.entries],
        }


def lambda_step_explicit(entry: CommutatorEntry, domain) -> RationalExpr:
    """T-coefficient of [L, entry] from the entry's own (f2, lambda)"""
    frame = domain.frame
    lam = entry.lambda_
    out = entry.f2 * frame.lambda_LLb
    if not lam.is_zero():
        out = out + frame.L.apply(lam) + lam * frame.lambda_LT
    return out


def _first_degree(frame: Frame) -> List[CommutatorEntry]:
    zero, one = RationalExpr(0), RationalExpr(1)
    return [
        CommutatorEntry((WORD_L,), frame.L, one, zero, zero),
        CommutatorEntry((WORD_LB,), frame.Lb, zero, one, zero),
    ]


def _extend(entries: List[CommutatorEntry], domain) -> List[CommutatorEntry]:
    frame = domain.frame
    degree = max(e.degree for e in entries)
    seen: Dict[tuple, List[VectorField]] = {}
    for e in entries:
        seen.setdefault(e.field.key(), []).append(e.field)

    def duplicate(field: VectorField) -> bool:
        for candidate in (field, -field):
            for kept in seen.get(candidate.key(), ()):
                if kept == candidate:
                    return True
        return False

    added = []
    top = [e for e in entries if e.degree == degree]
    for letter, outer in ((WORD_L, frame.L), (WORD_LB, frame.Lb)):
        for entry in top:
            field = lie_bracket(outer, entry.field)
            if field.is_zero() or duplicate(field):
                continue
            f1, f2, lam, _ = decompose_symbolic(field, frame)
            if letter == WORD_L:
                lam = lambda_step_explicit(entry, domain)
            new = CommutatorEntry((letter,) + entry.word, field, f1, f2, lam)
            seen.setdefault(field.key(), []).append(field)
            added.append(new)
    assert len(added) <= 2 ** (degree + 1), "commutator table outgrew its degree"
    logger.debug("degree %d: %d new brackets", degree + 1, len(added))
    return list(entries) + added


def build_table(domain, k_max: int = DEFAULT_K_MAX) -> CommutatorTable:
    if not 2 <= k_max <= MAX_DEGREE:
        raise UsageError(f"k_max must lie in [2, {MAX_DEGREE}], got {k_max}")
    cache = domain.table_cache
    with domain._lock:
        if k_max in cache:
            return cache[k_max]
        below = [k for k in cache if k < k_max]
        if below:
            start = max(below)
            entries = list(cache[start].entries)
        else:
            start = 1
            entries = _first_degree(domain.frame)
        for k in range(start + 1, k_max + 1):
            entries = _extend(entries, domain)
            cache[k] = CommutatorTable(
                entries, k, rho=domain.rho, boundary_tol=domain.boundary_tol
            )
        return cache[k_max]


def check_on_boundary(rho: ConjPoly, point, tol: float):
    value = abs(rho.evaluate(point[0], point[1]))
    if not value < tol:
        raise DomainError(
            f"{as_point(point)} is not a boundary point (|rho| = {value:.3g})"
        )


def capital_lambda(table: CommutatorTable, k: int, point) -> float:
    if k > table.k_max:
        raise UsageError(f"table only reaches degree {table.k_max}, asked for {k}")
    if table.rho is not None:
        check_on_boundary(table.rho, point, table.boundary_tol)
    if k < 2:
        return 0.0
    return float(table.capital_lambdas(point[0], point[1], upto=k)[k])


def point_type(
    domain, point, tol: float = 1e-8, k_max: int = DEFAULT_K_MAX
) -> TypeReport:
    """smallest k with Lambda_k(point) > tol, building the table one degree at a time"""
    point = as_point(point)
    check_on_boundary(domain.rho, point, domain.boundary_tol)
    z1, z2 = point
    total = 0.0
    values = []
    for k in range(2, k_max + 1):
        table = build_table(domain, k)
        for entry in table.by_degree(k):
            if not entry.lambda_.is_zero():
                total += abs(entry.lambda_.evaluate(z1, z2)) ** 2
        values.append(float(np.sqrt(total)))
        if values[-1] > tol:
            return TypeReport(point=point, tau_z=k, lambda_values=values, tolerance=tol)
    raise TypeExceedsError(
        f"Lambda_k <= {tol:g} for every k <= {k_max} at {point}",
        point=point,
        k_max=k_max,
    )
