"""
Exact number substrate
Rationals, the real quadratic field Q(sqrt(D)) with D = 2pq, truncated formal
power series, and the exact linear algebra used by every other service:
- QuadExt: a + b*sqrt(D), immutable, closed under + - * /
- TruncatedSeries: rational power series known up to a fixed order
- EchelonBasis: incremental row reduction of sparse vectors over any exact field
- rational_nullspace / rational_rank: sympy DomainMatrix kernels over QQ
"""

import logging
from bisect import insort
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Any, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from mpmath import mp
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from src.services.errors import AmbientMismatch, DivisionByZero, NotRational, VariableMismatch

logger = logging.getLogger(__name__)

RationalLike = Union[int, Fraction]


def as_fraction(value: RationalLike) -> Fraction:
    """Coerce an int or Fraction to a Fraction (lowest terms, positive denominator)"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"Expected an exact rational, got {type(value).__name__}")


def rational_sqrt(value: Fraction) -> Optional[Fraction]:
    """Return the non-negative rational square root of value, or None if it is irrational"""
    value = as_fraction(value)
    if value < 0:
        return None
    num_root = isqrt(value.numerator)
    den_root = isqrt(value.denominator)
    if num_root * num_root != value.numerator or den_root * den_root != value.denominator:
        return None
    return Fraction(num_root, den_root)


# =============================================
# QUADRATIC FIELD
# =============================================

@dataclass(frozen=True, eq=False)
class QuadExt:
    """An element a + b*sqrt(d) of Q(sqrt(d))

    d is fixed per central charge (d = 2pq). When d happens to be a perfect
    square the irrational part is folded into a, so b == 0 always means the
    value is rational.
    """

    a: Fraction
    b: Fraction
    d: int

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d <= 0:
            raise ValueError(f"Ambient radicand must be a positive integer, got {self.d!r}")
        a = as_fraction(self.a)
        b = as_fraction(self.b)
        root = isqrt(self.d)
        if b and root * root == self.d:
            a, b = a + b * root, Fraction(0)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def rational(cls, value: RationalLike, d: int) -> "QuadExt":
        return cls(as_fraction(value), Fraction(0), d)

    @classmethod
    def sqrt_d(cls, d: int) -> "QuadExt":
        """The generator sqrt(d) itself"""
        return cls(Fraction(0), Fraction(1), d)

    def _coerce(self, other: Any) -> Optional["QuadExt"]:
        if isinstance(other, QuadExt):
            if other.d != self.d:
                raise AmbientMismatch(f"Cannot combine values in Q(sqrt({self.d})) and Q(sqrt({other.d}))")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadExt(as_fraction(other), Fraction(0), self.d)
        return None

    # Arithmetic

    def __add__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return QuadExt(self.a + rhs.a, self.b + rhs.b, self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return QuadExt(self.a - rhs.a, self.b - rhs.b, self.d)

    def __rsub__(self, other):
        lhs = self._coerce(other)
        if lhs is None:
            return NotImplemented
        return lhs - self

    def __mul__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return QuadExt(
            self.a * rhs.a + self.b * rhs.b * self.d,
            self.a * rhs.b + self.b * rhs.a,
            self.d,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QuadExt":
        """Multiplicative inverse (a - b*sqrt(d)) / (a^2 - b^2 d)"""
        if not self:
            raise DivisionByZero("Division by zero in the quadratic field")
        norm = self.norm()
        return QuadExt(self.a / norm, -self.b / norm, self.d)

    def __truediv__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return self * rhs.inverse()

    def __rtruediv__(self, other):
        lhs = self._coerce(other)
        if lhs is None:
            return NotImplemented
        return lhs * self.inverse()

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = QuadExt.rational(1, self.d)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    # Comparison and inspection

    def __eq__(self, other):
        if isinstance(other, QuadExt):
            return self.d == other.d and self.a == other.a and self.b == other.b
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        return NotImplemented

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def is_rational(self) -> bool:
        return self.b == 0

    def rational_part(self) -> Fraction:
        """The value as a Fraction; only defined when the irrational part vanishes"""
        if self.b != 0:
            raise NotRational(f"{self} is not rational")
        return self.a

    def conjugate(self) -> "QuadExt":
        return QuadExt(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def to_mpf(self):
        """Numeric value at the current mpmath precision"""
        value = mp.mpf(self.a.numerator) / self.a.denominator
        if self.b:
            value += mp.mpf(self.b.numerator) / self.b.denominator * mp.sqrt(self.d)
        return value

    def __repr__(self):
        return f"QuadExt({self.a} + {self.b}*sqrt({self.d}))"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt({self.d})"
        return f"{self.a} + {self.b}*sqrt({self.d})"


# =============================================
# TRUNCATED FORMAL SERIES
# =============================================

@dataclass(frozen=True)
class TruncatedSeries:
    """Rational power series sum c_n x^n known for 0 <= n <= order"""

    variable: str
    order: int
    coeffs: Tuple[Fraction, ...]

    def __post_init__(self):
        if self.order < 0:
            raise ValueError(f"Series order must be non-negative, got {self.order}")
        padded = [as_fraction(c) for c in self.coeffs[: self.order + 1]]
        padded.extend([Fraction(0)] * (self.order + 1 - len(padded)))
        object.__setattr__(self, "coeffs", tuple(padded))

    @classmethod
    def from_coefficients(cls, variable: str, order: int, coeffs: Iterable[RationalLike]) -> "TruncatedSeries":
        return cls(variable, order, tuple(as_fraction(c) for c in coeffs))

    @classmethod
    def zero(cls, variable: str, order: int) -> "TruncatedSeries":
        return cls(variable, order, ())

    @classmethod
    def monomial(cls, variable: str, order: int, power: int, coefficient: RationalLike = 1) -> "TruncatedSeries":
        coeffs = [Fraction(0)] * (order + 1)
        if 0 <= power <= order:
            coeffs[power] = as_fraction(coefficient)
        return cls(variable, order, tuple(coeffs))

    def _aligned(self, other: "TruncatedSeries") -> int:
        if not isinstance(other, TruncatedSeries):
            raise TypeError(f"Expected a TruncatedSeries, got {type(other).__name__}")
        if other.variable != self.variable:
            raise VariableMismatch(f"Series in {self.variable!r} and {other.variable!r} cannot be combined")
        return min(self.order, other.order)

    def coefficient(self, n: int) -> Fraction:
        if n < 0 or n > self.order:
            raise IndexError(f"Coefficient {n} outside 0..{self.order}")
        return self.coeffs[n]

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self.variable, min(order, self.order), self.coeffs)

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = TruncatedSeries.monomial(self.variable, self.order, 0, other)
        order = self._aligned(other)
        return TruncatedSeries(
            self.variable, order, tuple(self.coeffs[n] + other.coeffs[n] for n in range(order + 1))
        )

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor: RationalLike) -> "TruncatedSeries":
        factor = as_fraction(factor)
        return TruncatedSeries(self.variable, self.order, tuple(factor * c for c in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        order = self._aligned(other)
        product = [Fraction(0)] * (order + 1)
        for i in range(order + 1):
            left = self.coeffs[i]
            if not left:
                continue
            for j in range(order + 1 - i):
                if other.coeffs[j]:
                    product[i + j] += left * other.coeffs[j]
        return TruncatedSeries(self.variable, order, tuple(product))

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def derivative(self) -> "TruncatedSeries":
        """Term-wise derivative; the result is known one order less (order 0 stays at order 0)"""
        if self.order == 0:
            return TruncatedSeries.zero(self.variable, 0)
        return TruncatedSeries(
            self.variable, self.order - 1, tuple(n * self.coeffs[n] for n in range(1, self.order + 1))
        )

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __str__(self):
        terms = [f"{c}*{self.variable}^{n}" for n, c in enumerate(self.coeffs) if c]
        body = " + ".join(terms) if terms else "0"
        return f"{body} + O({self.variable}^{self.order + 1})"


# =============================================
# SPARSE VECTORS AND LINEAR ALGEBRA
# =============================================

def add_scaled(target: Dict[Hashable, Any], source: Mapping[Hashable, Any], factor: Any = 1) -> None:
    """target += factor * source, dropping entries that cancel to zero"""
    for key, value in source.items():
        updated = target.get(key, 0) + factor * value
        if updated:
            target[key] = updated
        else:
            target.pop(key, None)


def scaled(source: Mapping[Hashable, Any], factor: Any) -> Dict[Hashable, Any]:
    result: Dict[Hashable, Any] = {}
    add_scaled(result, source, factor)
    return result


class EchelonBasis:
    """Incremental echelon form of a span of sparse vectors

    Vectors are mappings key -> field element (Fraction or QuadExt). The pivot of a
    stored row is its earliest key in `key_order`, normalized to 1.
    """

    def __init__(self, key_order: Sequence[Hashable]):
        self._keys = list(key_order)
        self._position = {key: index for index, key in enumerate(self._keys)}
        self._rows: Dict[int, Dict[Hashable, Any]] = {}
        self._pivot_positions: List[int] = []

    def __len__(self):
        return len(self._rows)

    @property
    def dimension(self) -> int:
        return len(self._rows)

    def rows(self) -> List[Dict[Hashable, Any]]:
        return [dict(self._rows[position]) for position in self._pivot_positions]

    def reduce(self, vector: Mapping[Hashable, Any]) -> Dict[Hashable, Any]:
        """Residue of vector after eliminating every stored pivot"""
        residue = {key: value for key, value in vector.items() if value}
        for position in self._pivot_positions:
            coefficient = residue.get(self._keys[position])
            if coefficient:
                add_scaled(residue, self._rows[position], -coefficient)
        return residue

    def add(self, vector: Mapping[Hashable, Any]) -> bool:
        """Insert vector; returns True when it enlarged the span"""
        residue = self.reduce(vector)
        if not residue:
            return False
        pivot = min(residue, key=self._position.__getitem__)
        lead = residue[pivot]
        position = self._position[pivot]
        self._rows[position] = {key: value / lead for key, value in residue.items()}
        insort(self._pivot_positions, position)
        return True

    def contains(self, vector: Mapping[Hashable, Any]) -> bool:
        return not self.reduce(vector)


def _to_qq(value: RationalLike):
    value = as_fraction(value)
    return QQ(value.numerator, value.denominator)


def _from_sympy(value) -> Fraction:
    return Fraction(int(value.p), int(value.q))


def rational_nullspace(rows: Sequence[Sequence[RationalLike]], ncols: int) -> List[List[Fraction]]:
    """Basis of {x : rows * x = 0} over Q, one list per basis vector"""
    if ncols == 0:
        return []
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    matrix = DomainMatrix([[_to_qq(entry) for entry in row] for row in rows], (len(rows), ncols), QQ)
    kernel = matrix.nullspace().to_Matrix().tolist()
    logger.debug(f"Nullspace of {len(rows)}x{ncols} rational matrix has dimension {len(kernel)}")
    return [[_from_sympy(entry) for entry in row] for row in kernel]


def rational_rank(rows: Sequence[Sequence[RationalLike]], ncols: int) -> int:
    if not rows or ncols == 0:
        return 0
    matrix = DomainMatrix([[_to_qq(entry) for entry in row] for row in rows], (len(rows), ncols), QQ)
    return int(matrix.rank())
