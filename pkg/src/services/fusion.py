"""
Grothendieck-level fusion at c_{p,q}
Includes:
- classes of Kac modules as multisets of simple labels
- fusion with K_{1,2} and K_{2,1} (Kac modules and simple modules)
- K_{r,1} x K_{1,s}
- Zhu-algebra lowest-weight constraints and rigidity status
- the consistency sweep tying all of the above to characters
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from mpmath import mp

from src.services.fock import kac_structure
from src.services.kactable import CentralCharge, KacLabel, canonical_label, h
from src.services.verma import c1_cofinite_dimension, partition_count, simple_character

logger = logging.getLogger(__name__)

GrothendieckClass = Counter
ClassTable = Callable[[CentralCharge, int, int], Counter]


# =============================================
# CLASSES
# =============================================

def kac_class(cc: CentralCharge, r: int, s: int) -> GrothendieckClass:
    """Composition factors of K_{r,s}; empty when r or s is zero"""
    return Counter(kac_structure(cc, r, s).factors)


def class_size(cls: GrothendieckClass) -> int:
    return sum(cls.values())


def class_contains(big: GrothendieckClass, small: GrothendieckClass) -> bool:
    return all(big[label] >= count for label, count in small.items())


def class_entries(cls: GrothendieckClass) -> List[Tuple[KacLabel, int]]:
    """Sorted (label, multiplicity) pairs with zero entries dropped"""
    return sorted((label, count) for label, count in cls.items() if count)


def same_class(left: GrothendieckClass, right: GrothendieckClass) -> bool:
    return class_entries(left) == class_entries(right)


@dataclass
class FusionOutcome:
    """Grothendieck class of a fusion product plus its exact-sequence data"""

    factors: GrothendieckClass
    sequence: Optional[Tuple[KacLabel, KacLabel]] = None
    splits: bool = True
    logarithmic: bool = False
    indecomposable: Optional[bool] = None
    socle: Optional[KacLabel] = None
    summands: List[KacLabel] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)


# =============================================
# FUSION WITH K_{1,2} AND K_{2,1}
# =============================================

def fuse_k12_kac(cc: CentralCharge, r: int, s: int, table: Optional[ClassTable] = None) -> FusionOutcome:
    """K_{1,2} x K_{r,s}: extension of K_{r,s+1} by K_{r,s-1}, split iff q does not divide s"""
    table = table or kac_class
    splits = s % cc.q != 0
    sub, quotient = KacLabel(r, s - 1), KacLabel(r, s + 1)
    factors = table(cc, sub.r, sub.s) + table(cc, quotient.r, quotient.s)
    outcome = FusionOutcome(factors=factors, sequence=(sub, quotient), splits=splits, logarithmic=not splits)
    if not splits:
        if 1 <= r <= cc.p:
            outcome.indecomposable = True
            outcome.notes.append("non-split: L_0 acts with rank-2 Jordan blocks")
    elif s > 1:
        outcome.indecomposable = False
        outcome.summands = [sub, quotient]
    else:
        outcome.summands = [quotient]
        outcome.notes.append("K_{r,0} = 0")
    return outcome


def fuse_k21_kac(cc: CentralCharge, r: int, s: int, table: Optional[ClassTable] = None) -> FusionOutcome:
    """K_{2,1} x K_{r,s}: extension of K_{r+1,s} by K_{r-1,s}, split iff p does not divide r"""
    table = table or kac_class
    splits = r % cc.p != 0
    sub, quotient = KacLabel(r - 1, s), KacLabel(r + 1, s)
    factors = table(cc, sub.r, sub.s) + table(cc, quotient.r, quotient.s)
    outcome = FusionOutcome(factors=factors, sequence=(sub, quotient), splits=splits, logarithmic=not splits)
    if not splits:
        if 1 <= s <= cc.q:
            outcome.indecomposable = True
            outcome.notes.append("non-split: L_0 acts with rank-2 Jordan blocks")
    elif r > 1:
        outcome.indecomposable = False
        outcome.summands = [sub, quotient]
    else:
        outcome.summands = [quotient]
        outcome.notes.append("K_{0,s} = 0")
    return outcome


def fuse_kr1_k1s(cc: CentralCharge, r: int, s: int, table: Optional[ClassTable] = None) -> Tuple[GrothendieckClass, bool]:
    """K_{r,1} x K_{1,s} is isomorphic to K_{r,s}"""
    table = table or kac_class
    return table(cc, r, s), True


def fuse_k12_simple(cc: CentralCharge, label: KacLabel, table: Optional[ClassTable] = None) -> FusionOutcome:
    """K_{1,2} x L_{r,nq+s} for a canonical simple label

    1 <= s <= q-2 gives L_{r,nq+s-1} + L_{r,nq+s+1}, s = q-1 gives L_{r,(n+1)q-2},
    and s = 0 gives the staggered extension of K_{r,nq+1} by K_{r,nq-1}.
    """
    table = table or kac_class
    label = canonical_label(cc, label.r, label.s)
    q = cc.q
    r = label.r
    n, s = divmod(label.s, q)

    if s == 0:
        sub, quotient = KacLabel(r, n * q - 1), KacLabel(r, n * q + 1)
        return FusionOutcome(
            factors=table(cc, sub.r, sub.s) + table(cc, quotient.r, quotient.s),
            sequence=(sub, quotient),
            splits=False,
            logarithmic=True,
            indecomposable=True,
            socle=canonical_label(cc, r, n * q + 1),
            notes=["staggered"],
        )

    if s <= q - 2:
        targets = [(r, n * q + s - 1), (r, n * q + s + 1)]
    else:
        targets = [(r, (n + 1) * q - 2)]
    summands = [canonical_label(cc, rr, ss) for rr, ss in targets if ss > 0]
    return FusionOutcome(
        factors=Counter(summands),
        splits=True,
        indecomposable=len(summands) == 1 if summands else None,
        summands=summands,
    )


def _mirror_class(cc: CentralCharge, cls: GrothendieckClass) -> GrothendieckClass:
    return Counter({canonical_label(cc, label.s, label.r): count for label, count in cls.items()})


def fuse_k21_simple(cc: CentralCharge, label: KacLabel, table: Optional[ClassTable] = None) -> FusionOutcome:
    """K_{2,1} x L_{r,s}, through c_{p,q} = c_{q,p} with (r,s) -> (s,r)"""
    mirror = cc.swapped()
    base_table = table or kac_class

    def mirror_table(_, r, s):
        return Counter({lab.swapped(): count for lab, count in base_table(cc, s, r).items()})

    mirrored = fuse_k12_simple(mirror, canonical_label(mirror, label.s, label.r), mirror_table)
    return FusionOutcome(
        factors=_mirror_class(cc, mirrored.factors),
        sequence=tuple(lab.swapped() for lab in mirrored.sequence) if mirrored.sequence else None,
        splits=mirrored.splits,
        logarithmic=mirrored.logarithmic,
        indecomposable=mirrored.indecomposable,
        socle=canonical_label(cc, mirrored.socle.s, mirrored.socle.r) if mirrored.socle else None,
        summands=[canonical_label(cc, lab.s, lab.r) for lab in mirrored.summands],
        notes=list(mirrored.notes),
    )


def fuse_class(cc: CentralCharge, first: str, cls: GrothendieckClass, table: Optional[ClassTable] = None) -> GrothendieckClass:
    """K_{1,2} or K_{2,1} fused with a class, factor by factor"""
    fuse = fuse_k12_simple if first == "k12" else fuse_k21_simple
    result: GrothendieckClass = Counter()
    for label, count in cls.items():
        for factor, multiplicity in fuse(cc, label, table).factors.items():
            result[factor] += count * multiplicity
    return result


# =============================================
# ZHU CONSTRAINTS AND RIGIDITY
# =============================================

class ZhuCase(Enum):
    TWO_SEMISIMPLE = "two_semisimple"
    SINGLE_EIGENVALUE = "single_eigenvalue"
    JORDAN_BLOCK = "jordan_block"


@dataclass(frozen=True)
class ZhuConstraint:
    """Monic polynomial (x - h_a)(x - h_b) that L_0 satisfies on the lowest weight space"""

    coefficients: Tuple[Fraction, Fraction, Fraction]
    roots: Tuple[Fraction, Fraction]
    case: ZhuCase


def zhu_constraint(cc: CentralCharge, first: str, label: KacLabel) -> ZhuConstraint:
    """Lowest-weight constraint for K_{1,2} x K_{r,s} ("k12") or K_{2,1} x K_{r,s} ("k21")"""
    r, s = label.r, label.s
    if first == "k12":
        a, b = h(cc, r, s - 1), h(cc, r, s + 1)
    elif first == "k21":
        a, b = h(cc, r - 1, s), h(cc, r + 1, s)
    else:
        raise ValueError(f"Unknown first factor {first!r}; expected 'k12' or 'k21'")
    if a == b:
        case = ZhuCase.JORDAN_BLOCK
    elif (a - b).denominator == 1:
        case = ZhuCase.SINGLE_EIGENVALUE
    else:
        case = ZhuCase.TWO_SEMISIMPLE
    return ZhuConstraint((Fraction(1), -(a + b), a * b), tuple(sorted((a, b))), case)


class RigidityStatus(Enum):
    RIGID_SELF_DUAL = "rigid_self_dual"
    NOT_RIGID = "not_rigid"
    OPEN = "open"


def rigidity_status(cc: CentralCharge, label: KacLabel) -> RigidityStatus:
    r, s = label.r, label.s
    if r <= cc.p and s <= cc.q:
        return RigidityStatus.RIGID_SELF_DUAL
    if (s == cc.q + 1 and 1 <= r <= cc.p - 1) or (r == cc.p + 1 and 1 <= s <= cc.q - 1):
        return RigidityStatus.NOT_RIGID
    return RigidityStatus.OPEN


# =============================================
# RESOLUTIONS AND STAGGERED DATA
# =============================================

def kac_resolution(cc: CentralCharge, label: KacLabel, length: int) -> List[KacLabel]:
    """Kac modules K_{r,nq+s}, K_{r,(n+2)q-s}, K_{r,(n+2)q+s}, ... resolving L_{r,nq+s}

    Only labels with q not dividing s have this resolution.
    """
    label = canonical_label(cc, label.r, label.s)
    n, s = divmod(label.s, cc.q)
    if s == 0:
        raise ValueError(f"L{label} has q | s and no Kac resolution of this shape")
    chain = []
    for k in range(length):
        if k % 2:
            chain.append(KacLabel(label.r, (n + k + 1) * cc.q - s))
        else:
            chain.append(KacLabel(label.r, (n + k) * cc.q + s))
    return chain


def staggered_exponent(cc: CentralCharge, r: int, n: int) -> Fraction:
    """h_{r,nq+1} - h_{1,2} - h_{r,nq}, the leading power of Y(v_{1,2}, z) into the staggered module"""
    return h(cc, r, n * cc.q + 1) - h(cc, 1, 2) - h(cc, r, n * cc.q)


def double_braiding_phase(cc: CentralCharge, r: int, n: int, precision: int = 256):
    """exp(2 pi i * staggered exponent); different from 1 for the non-split products"""
    exponent = staggered_exponent(cc, r, n)
    with mp.workprec(precision):
        return mp.expj(2 * mp.pi * mp.mpf(exponent.numerator) / exponent.denominator)


# =============================================
# CONSISTENCY SWEEP
# =============================================

@dataclass
class ConsistencyReport:
    passed: bool = True
    checks: Dict[str, int] = field(default_factory=dict)
    first_failure: Optional[str] = None

    def record(self, name: str, ok: bool, detail: str):
        self.checks[name] = self.checks.get(name, 0) + 1
        if not ok and self.passed:
            self.passed = False
            self.first_failure = f"{name}: {detail}"
            logger.error(f"❌ Grothendieck consistency failed at {self.first_failure}")


def _kac_character(cc: CentralCharge, r: int, s: int, levels: int, table: ClassTable) -> Dict[Fraction, int]:
    """Weight-graded character of K_{r,s}; from p(n) - p(n-rs) when r <= p or s <= q"""
    result: Dict[Fraction, int] = {}
    if r <= 0 or s <= 0:
        return result
    base = h(cc, r, s)
    if r <= cc.p or s <= cc.q:
        for n in range(levels + 1):
            dim = partition_count(n) - partition_count(n - r * s)
            if dim:
                result[base + n] = dim
        return result
    return class_character(cc, table(cc, r, s), base + levels)


def class_character(cc: CentralCharge, cls: GrothendieckClass, max_weight: Fraction) -> Dict[Fraction, int]:
    """Weight-graded character of a class, through conformal weight max_weight"""
    result: Dict[Fraction, int] = {}
    for label, count in cls.items():
        weight = h(cc, label.r, label.s)
        if weight > max_weight:
            continue
        levels = int(max_weight - weight)
        for n, dim in enumerate(simple_character(cc, label, levels)):
            if dim:
                result[weight + n] = result.get(weight + n, 0) + count * dim
    return result


def _truncate(character: Dict[Fraction, int], max_weight: Fraction) -> Dict[Fraction, int]:
    return {weight: dim for weight, dim in character.items() if weight <= max_weight and dim}


def exact_sequence_class_check(cc: CentralCharge, m: int, r: int, table: Optional[ClassTable] = None) -> Tuple[bool, int, int]:
    """class(K_{mp+r,q}) = class(K_{r,(m+1)q}) + class(K_{p-r,mq}), and the factor counts of
    K_{1,2} fused with both sides

    Returns:
        (classes agree, factors of K_{mp+r,q-1} + K_{mp+r,q+1}, factors on the other side)
    """
    table = table or kac_class
    p, q = cc.p, cc.q
    whole = table(cc, m * p + r, q)
    parts = table(cc, r, (m + 1) * q) + table(cc, p - r, m * q)
    left = class_size(table(cc, m * p + r, q - 1)) + class_size(table(cc, m * p + r, q + 1))
    right = sum(
        class_size(table(cc, rr, ss - 1)) + class_size(table(cc, rr, ss + 1))
        for rr, ss in ((r, (m + 1) * q), (p - r, m * q))
    )
    return same_class(whole, parts), left, right


def iterated_fusion_class(cc: CentralCharge, r: int, s: int, table: Optional[ClassTable] = None) -> GrothendieckClass:
    """K_{2,1} fused r-1 times, then K_{1,2} fused s-1 times, onto the class of K_{1,1}"""
    table = table or kac_class
    iterated = table(cc, 1, 1)
    for _ in range(r - 1):
        iterated = fuse_class(cc, "k21", iterated, table)
    for _ in range(s - 1):
        iterated = fuse_class(cc, "k12", iterated, table)
    return iterated


# singular levels above this use the closed form rs
COFINITE_BRUTE_FORCE_LEVEL = 4


def kac_cofinite_dimension(cc: CentralCharge, r: int, s: int, levels: int) -> int:
    """C_1-cofinite dimension of K_{r,s}

    Counted on the Verma quotient V_{r,s}/<v~_{r,s}> when r <= p or s <= q and the
    singular level rs is within reach; otherwise rs. Zero for K_{r,0} and K_{0,s}.
    """
    rs = r * s
    if r <= 0 or s <= 0:
        return 0
    if (r <= cc.p or s <= cc.q) and rs <= min(levels, COFINITE_BRUTE_FORCE_LEVEL):
        return c1_cofinite_dimension(cc.c, h(cc, r, s), rs, rs)
    return rs


def check_grothendieck_consistency(
    cc: CentralCharge,
    rmax: int,
    smax: int,
    levels: int = 8,
    table: Optional[ClassTable] = None,
) -> ConsistencyReport:
    """Cross-check Kac classes, the K_{1,2}/K_{2,1} fusion rules and characters

    Args:
        cc: central charge
        rmax, smax: label bounds
        levels: character comparison depth above the lowest weight
        table: replacement for kac_class (used to inject corrupted data)

    Returns:
        ConsistencyReport with the first failing identity, if any
    """
    table = table or kac_class
    report = ConsistencyReport()
    dims: Dict[Tuple[int, int], int] = {}

    def cofinite(r: int, s: int) -> int:
        if (r, s) not in dims:
            dims[(r, s)] = kac_cofinite_dimension(cc, r, s, levels)
        return dims[(r, s)]

    for r in range(1, rmax + 1):
        for s in range(1, smax + 1):
            source = table(cc, r, s)
            for first, fuse in (("k12", fuse_k12_kac), ("k21", fuse_k21_kac)):
                outcome = fuse(cc, r, s, table)
                by_factors = fuse_class(cc, first, source, table)
                report.record(
                    f"additivity[{first}]",
                    same_class(by_factors, outcome.factors),
                    f"{first} x K_({r},{s}): factor-wise {class_entries(by_factors)} vs sequence {class_entries(outcome.factors)}",
                )

                sub, quotient = outcome.sequence
                base = min(
                    (h(cc, lab.r, lab.s) for lab in by_factors.elements()),
                    default=Fraction(0),
                )
                top = base + levels
                expected: Dict[Fraction, int] = {}
                for lab in (sub, quotient):
                    for weight, dim in _kac_character(cc, lab.r, lab.s, levels, table).items():
                        expected[weight] = expected.get(weight, 0) + dim
                report.record(
                    f"characters[{first}]",
                    _truncate(expected, top) == _truncate(class_character(cc, by_factors, top), top),
                    f"{first} x K_({r},{s}) characters differ below weight {top}",
                )

            iterated = iterated_fusion_class(cc, r, s, table)
            report.record(
                "iterated_fusion",
                class_contains(iterated, source),
                f"K_({r},{s}) not contained in the iterated product of K_21 and K_12",
            )

            fused = cofinite(r, s - 1) + cofinite(r, s + 1)
            bound = cofinite(1, 2) * cofinite(r, s)
            report.record(
                "miyamoto_bound",
                fused <= bound,
                f"cofinite dimensions {fused} of K_12 x K_({r},{s}) exceed {bound}",
            )

    for r in range(1, cc.p):
        for m in range(1, max(1, rmax // cc.p) + 1):
            agree, left, right = exact_sequence_class_check(cc, m, r, table)
            report.record("exact_sequence", agree, f"class of K_({m * cc.p + r},{cc.q}) does not split as expected")
            report.record("factor_count", left == right, f"{left} != {right} factors for m={m}, r={r}")

    if report.passed:
        logger.info(f"✅ Grothendieck consistency at c_({cc.p},{cc.q}) passed: {report.checks}")
    return report
