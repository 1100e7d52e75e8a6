"""
Central charge c_{p,q} and the Kac table
- CentralCharge: exact parameters p, q, t = q/p, c, Q
- conformal weights h_{r,s} and Heisenberg weights lambda_{r,s}
- canonical labels: 1 <= r <= p and ps >= qr (mirror: 1 <= s <= q and qr >= ps)
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import List, Tuple

from src.services.errors import InvalidParameters, NotKacWeight
from src.services.exactnum import QuadExt, rational_sqrt

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class KacLabel:
    """Index pair (r, s) of h_{r,s}, V_{r,s}, K_{r,s}, L_{r,s}, F_{r,s}"""

    r: int
    s: int

    def swapped(self) -> "KacLabel":
        return KacLabel(self.s, self.r)

    def __str__(self):
        return f"({self.r},{self.s})"


@dataclass(frozen=True)
class CentralCharge:
    """Central charge c_{p,q} = 13 - 6t - 6/t with t = q/p

    Fock computations live in Q(sqrt(D)) with D = 2pq, where
    sqrt(q/2p) = sqrt(D)/(2p) and sqrt(p/2q) = sqrt(D)/(2q).
    """

    p: int
    q: int

    @property
    def t(self) -> Fraction:
        return Fraction(self.q, self.p)

    @property
    def c(self) -> Fraction:
        t = self.t
        return 13 - 6 * t - 6 / t

    @property
    def radicand(self) -> int:
        return 2 * self.p * self.q

    @property
    def sigma(self) -> QuadExt:
        """sqrt(q / 2p)"""
        return QuadExt(Fraction(0), Fraction(1, 2 * self.p), self.radicand)

    @property
    def tau(self) -> QuadExt:
        """sqrt(p / 2q)"""
        return QuadExt(Fraction(0), Fraction(1, 2 * self.q), self.radicand)

    @property
    def Q(self) -> QuadExt:
        """Background charge sqrt(2/pq) (q - p)"""
        return QuadExt(Fraction(0), Fraction(self.q - self.p, self.p * self.q), self.radicand)

    def zero(self) -> QuadExt:
        return QuadExt.rational(0, self.radicand)

    def scalar(self, value) -> QuadExt:
        return QuadExt.rational(value, self.radicand)

    def swapped(self) -> "CentralCharge":
        """The same central charge presented as c_{q,p}"""
        return CentralCharge(self.q, self.p)

    def __str__(self):
        return f"c_{{{self.p},{self.q}}} = {self.c}"


def central_charge(p: int, q: int) -> CentralCharge:
    """Validate (p, q) and build c_{p,q}

    Args:
        p: first coprime parameter, p >= 2
        q: second coprime parameter, q >= 2

    Returns:
        The CentralCharge context

    Raises:
        InvalidParameters: when p or q is below 2 or gcd(p, q) != 1
    """
    if not isinstance(p, int) or not isinstance(q, int):
        raise InvalidParameters(f"p and q must be integers, got {p!r}, {q!r}")
    if p < 2 or q < 2:
        raise InvalidParameters(f"p and q must both be at least 2, got p={p}, q={q}")
    if gcd(p, q) != 1:
        raise InvalidParameters(f"p and q must be coprime, got gcd({p},{q}) = {gcd(p, q)}")
    return CentralCharge(p, q)


def h(cc: CentralCharge, r: int, s: int) -> Fraction:
    """Conformal weight h_{r,s} = (r^2-1)t/4 - (rs-1)/2 + (s^2-1)/(4t); any integers r, s"""
    t = cc.t
    return Fraction(r * r - 1, 4) * t - Fraction(r * s - 1, 2) + Fraction(s * s - 1, 4) / t


def heisenberg_weight(cc: CentralCharge, r: int, s: int) -> QuadExt:
    """lambda_{r,s} = (1-r) sqrt(q/2p) - (1-s) sqrt(p/2q)"""
    return cc.sigma * (1 - r) - cc.tau * (1 - s)


def fock_weight(cc: CentralCharge, lam: QuadExt) -> Fraction:
    """Conformal weight 1/2 lambda (lambda - Q) of the Fock generator v_lambda"""
    return (lam * (lam - cc.Q) / 2).rational_part()


def _kac_offset(cc: CentralCharge, r: int, s: int) -> int:
    """|rq - sp|; two labels share a weight exactly when these agree"""
    return abs(r * cc.q - s * cc.p)


def _canonical_from_offset(cc: CentralCharge, offset: int) -> KacLabel:
    # unique r in 1..p with r q + offset = 0 mod p; s then follows
    for r in range(1, cc.p + 1):
        if (r * cc.q + offset) % cc.p == 0:
            return KacLabel(r, (r * cc.q + offset) // cc.p)
    raise AssertionError("gcd(p, q) = 1 guarantees a solution")


def _mirror_from_offset(cc: CentralCharge, offset: int) -> KacLabel:
    for s in range(1, cc.q + 1):
        if (s * cc.p + offset) % cc.q == 0:
            return KacLabel((s * cc.p + offset) // cc.q, s)
    raise AssertionError("gcd(p, q) = 1 guarantees a solution")


def _identified_labels(cc: CentralCharge, offset: int) -> List[KacLabel]:
    labels = {_canonical_from_offset(cc, offset)}
    # the other sign: r q - s p = +offset with 1 <= r <= p
    for r in range(1, cc.p + 1):
        if (r * cc.q - offset) % cc.p == 0:
            s = (r * cc.q - offset) // cc.p
            if s >= 1:
                labels.add(KacLabel(r, s))
    return sorted(labels)


def normalize_label(cc: CentralCharge, r: int, s: int, mirror: bool = False) -> Tuple[KacLabel, List[KacLabel]]:
    """Canonical representative of h_{r,s} and every label with 1 <= r <= p sharing it

    Args:
        cc: central charge context
        r, s: any integers (non-positive values denote the same formula)
        mirror: use the convention 1 <= s <= q and qr >= ps instead

    Returns:
        (canonical label, sorted list of identified labels including the canonical one)
    """
    offset = _kac_offset(cc, r, s)
    canonical = _mirror_from_offset(cc, offset) if mirror else _canonical_from_offset(cc, offset)
    return canonical, _identified_labels(cc, offset)


def canonical_label(cc: CentralCharge, r: int, s: int) -> KacLabel:
    return _canonical_from_offset(cc, _kac_offset(cc, r, s))


def is_canonical(cc: CentralCharge, label: KacLabel) -> bool:
    return 1 <= label.r <= cc.p and label.s >= 1 and cc.p * label.s >= cc.q * label.r


def discriminant(cc: CentralCharge, weight: Fraction) -> Fraction:
    """4 t h + (t - 1)^2, which equals (rt - s)^2 when h = h_{r,s}"""
    t = cc.t
    return 4 * t * weight + (t - 1) ** 2


def kac_label_for_weight(cc: CentralCharge, weight: Fraction) -> KacLabel:
    """Canonical label of a Kac-table weight

    Raises:
        NotKacWeight: when the discriminant is not the square of some (rq - sp)/p
    """
    root = rational_sqrt(discriminant(cc, Fraction(weight)))
    if root is None or (root * cc.p).denominator != 1:
        raise NotKacWeight(f"h = {weight} is not a Kac-table weight at c_{{{cc.p},{cc.q}}}")
    return _canonical_from_offset(cc, int(root * cc.p))


def is_kac_weight(cc: CentralCharge, weight: Fraction) -> bool:
    try:
        kac_label_for_weight(cc, weight)
        return True
    except NotKacWeight:
        return False


def minimal_model_labels(cc: CentralCharge) -> List[KacLabel]:
    """Simple modules of the rational quotient: L_{r,s} with r < p, s < q, one per weight"""
    labels = {canonical_label(cc, r, s) for r in range(1, cc.p) for s in range(1, cc.q)}
    return sorted(labels)


def weight_grid(cc: CentralCharge, rmax: int, smax: int) -> List[List[Fraction]]:
    """h_{r,s} for 1 <= r <= rmax (rows) and 1 <= s <= smax (columns)"""
    return [[h(cc, r, s) for s in range(1, smax + 1)] for r in range(1, rmax + 1)]
