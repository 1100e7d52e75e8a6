"""
Heisenberg Fock modules as Virasoro modules at c_{p,q}
Includes:
- the Heisenberg action a_n and the background-charge Virasoro action L_n
- Kac submodules K_{r,s}, computed level by level as exact spans
- Feigin-Fuchs and Kac composition data (factors, arrows, lengths)
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Tuple

from src.services.exactnum import EchelonBasis, QuadExt, add_scaled, scaled
from src.services.kactable import CentralCharge, KacLabel, canonical_label, fock_weight, h, heisenberg_weight
from src.services.verma import DiagramCase, Partition, classify_label, level_basis, simple_character

logger = logging.getLogger(__name__)

FockCoefficients = Dict[Partition, QuadExt]


# =============================================
# FOCK VECTORS
# =============================================

@dataclass(frozen=True)
class FockVector:
    """Element of F_lambda at a fixed level; partitions encode a_{-n_1}...a_{-n_k} v_lambda"""

    lam: QuadExt
    level: int
    coeffs: Mapping[Partition, QuadExt] = field(default_factory=dict)

    def __add__(self, other: "FockVector") -> "FockVector":
        if self.lam != other.lam or self.level != other.level:
            raise ValueError(f"Cannot add Fock vectors of ({self.lam}, {self.level}) and ({other.lam}, {other.level})")
        coeffs = dict(self.coeffs)
        add_scaled(coeffs, other.coeffs)
        return FockVector(self.lam, self.level, coeffs)

    def __mul__(self, factor) -> "FockVector":
        return FockVector(self.lam, self.level, scaled(self.coeffs, factor))

    __rmul__ = __mul__

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + other * -1

    def __eq__(self, other):
        if not isinstance(other, FockVector):
            return NotImplemented
        return self.lam == other.lam and self.level == other.level and dict(self.coeffs) == dict(other.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, part: Partition) -> QuadExt:
        return self.coeffs.get(tuple(part), self.lam * 0)


def _insert_part(part: Partition, k: int) -> Partition:
    return tuple(sorted(part + (k,), reverse=True))


def _remove_part(part: Partition, k: int) -> Partition:
    index = part.index(k)
    return part[:index] + part[index + 1:]


# =============================================
# FOCK MODULE
# =============================================

class FockModule:
    """F_lambda with the Virasoro action L_n = 1/2 sum :a_j a_{n-j}: - 1/2 (n+1) Q a_n"""

    def __init__(self, cc: CentralCharge, lam: QuadExt):
        self.cc = cc
        self.lam = lam
        self.logger = logging.getLogger(__name__)
        self._vir_cache: Dict[Tuple[int, Partition], FockCoefficients] = {}
        self.logger.debug(f"Fock module F_({lam}) at c_({cc.p},{cc.q})")

    @property
    def conformal_weight(self) -> Fraction:
        return fock_weight(self.cc, self.lam)

    @property
    def contragredient_weight(self) -> QuadExt:
        """Q - lambda; F_{Q - lambda} is the contragredient of F_lambda"""
        return self.cc.Q - self.lam

    def generator(self) -> FockVector:
        return FockVector(self.lam, 0, {(): self.cc.scalar(1)})

    def monomial(self, part) -> FockVector:
        part = tuple(sorted(part, reverse=True))
        return FockVector(self.lam, sum(part), {part: self.cc.scalar(1)})

    def vector(self, level: int, coeffs: Mapping[Partition, QuadExt]) -> FockVector:
        return FockVector(self.lam, level, {k: v for k, v in coeffs.items() if v})

    # Heisenberg

    def heis_on_basis(self, n: int, part: Partition) -> FockCoefficients:
        if n < 0:
            return {_insert_part(part, -n): self.cc.scalar(1)}
        if n == 0:
            return {part: self.lam} if self.lam else {}
        multiplicity = part.count(n)
        if not multiplicity:
            return {}
        return {_remove_part(part, n): self.cc.scalar(n * multiplicity)}

    # Virasoro

    def vir_on_basis(self, n: int, part: Partition) -> FockCoefficients:
        """L_n on one monomial; the returned dict must not be mutated"""
        key = (n, part)
        cached = self._vir_cache.get(key)
        if cached is not None:
            return cached

        level = sum(part)
        result: FockCoefficients = {}
        if n == 0:
            eigenvalue = self.cc.scalar(self.conformal_weight + level)
            if eigenvalue:
                result[part] = eigenvalue
        else:
            # pairs j1 < j2 with j1 + j2 = n; a_{j2} acts first, and it annihilates once j2 > level
            for j2 in range(n // 2 + 1, level + 1):
                j1 = n - j2
                for mono, coefficient in self.heis_on_basis(j2, part).items():
                    add_scaled(result, self.heis_on_basis(j1, mono), coefficient)
            if n % 2 == 0:
                half = n // 2
                for mono, coefficient in self.heis_on_basis(half, part).items():
                    add_scaled(result, self.heis_on_basis(half, mono), coefficient * Fraction(1, 2))
            background = self.cc.Q * Fraction(-(n + 1), 2)
            if background:
                add_scaled(result, self.heis_on_basis(n, part), background)

        self._vir_cache[key] = result
        return result

    def vir_on_coeffs(self, n: int, coeffs: Mapping[Partition, QuadExt]) -> FockCoefficients:
        result: FockCoefficients = {}
        for part, coefficient in coeffs.items():
            add_scaled(result, self.vir_on_basis(n, part), coefficient)
        return result


@lru_cache(maxsize=256)
def fock_module(cc: CentralCharge, lam: QuadExt) -> FockModule:
    return FockModule(cc, lam)


def fock_module_for_label(cc: CentralCharge, r: int, s: int) -> FockModule:
    return fock_module(cc, heisenberg_weight(cc, r, s))


def heis_act(n: int, v: FockVector) -> FockVector:
    """a_n with K = 1, a_0 = lambda on F_lambda"""
    result: FockCoefficients = {}
    one = QuadExt.rational(1, v.lam.d)
    for part, coefficient in v.coeffs.items():
        if n < 0:
            add_scaled(result, {_insert_part(part, -n): one}, coefficient)
        elif n == 0:
            add_scaled(result, {part: v.lam}, coefficient)
        elif part.count(n):
            add_scaled(result, {_remove_part(part, n): one * (n * part.count(n))}, coefficient)
    return FockVector(v.lam, v.level - n, result)


def vir_act_on_fock(cc: CentralCharge, n: int, v: FockVector) -> FockVector:
    module = fock_module(cc, v.lam)
    return FockVector(v.lam, v.level - n, module.vir_on_coeffs(n, v.coeffs))


# =============================================
# KAC SUBMODULES
# =============================================

@dataclass
class KacModuleBasis:
    """Level-wise exact bases of K_{r,s} inside F_{r,s}"""

    label: KacLabel
    levels: List[List[FockVector]]
    cutoff_weight: Fraction
    spans: List[EchelonBasis] = field(default_factory=list, repr=False)

    @property
    def dims(self) -> List[int]:
        return [len(level) for level in self.levels]


def kac_basis(cc: CentralCharge, r: int, s: int, max_level: int) -> KacModuleBasis:
    """K_{r,s}: the Virasoro submodule of F_{r,s} generated by all vectors below h_{r,s} + rs

    The generating set is closed under positive modes, so each level n >= rs is the
    span of L_{-1} K_{n-1} + L_{-2} K_{n-2}; below rs it is the whole Fock level.
    """
    if r < 1 or s < 1:
        raise ValueError(f"Kac labels need r, s >= 1, got ({r},{s})")
    module = fock_module_for_label(cc, r, s)
    spans: List[EchelonBasis] = []
    for n in range(max_level + 1):
        span = EchelonBasis(level_basis(n))
        if n < r * s:
            for part in level_basis(n):
                span.add({part: cc.scalar(1)})
        else:
            for step in (1, 2):
                if n - step >= 0:
                    for row in spans[n - step].rows():
                        span.add(module.vir_on_coeffs(-step, row))
        spans.append(span)
    levels = [[module.vector(n, row) for row in span.rows()] for n, span in enumerate(spans)]
    logger.debug(f"K_({r},{s}) at c_({cc.p},{cc.q}): dims {[len(level) for level in levels]}")
    return KacModuleBasis(KacLabel(r, s), levels, h(cc, r, s) + r * s, spans)


# =============================================
# COMPOSITION STRUCTURE
# =============================================

class ModuleKind(Enum):
    FEIGIN_FUCHS = "feigin_fuchs"
    KAC = "kac"


@dataclass
class ModuleStructure:
    """Composition factors of a Fock or Kac module; arrows point from a factor to one below it"""

    kind: ModuleKind
    case: Optional[DiagramCase]
    label: KacLabel
    factors: List[KacLabel]
    arrows: List[Tuple[int, int]]

    @property
    def length(self) -> int:
        return len(self.factors)

    def reversed(self) -> "ModuleStructure":
        return ModuleStructure(self.kind, self.case, self.label, list(self.factors), [(b, a) for a, b in self.arrows])


class _Builder:
    """Collects labelled factors and arrows by name"""

    def __init__(self, cc: CentralCharge):
        self.cc = cc
        self.factors: List[KacLabel] = []
        self.index: Dict[str, int] = {}
        self.arrows: List[Tuple[int, int]] = []

    def node(self, name: str, r: int, s: int):
        self.index[name] = len(self.factors)
        self.factors.append(canonical_label(self.cc, r, s))

    def arrow(self, source: str, target: str):
        if source in self.index and target in self.index:
            self.arrows.append((self.index[source], self.index[target]))


def _ff_direct(cc: CentralCharge, head: KacLabel, max_level: int) -> ModuleStructure:
    p, q = cc.p, cc.q
    case, n, s = classify_label(cc, head)
    r = head.r
    head_weight = h(cc, head.r, head.s)
    b = _Builder(cc)

    def within(rr, ss):
        return h(cc, rr, ss) - head_weight <= max_level

    if case is DiagramCase.BULK:
        b.node("H", r, n * q + s)
        k = 0
        while True:
            added = False
            labels = {
                f"T{2 * k}": (p - r, (n + 2 * k + 1) * q + s),
                f"T{2 * k + 1}": (p - r, (n + 2 * k + 3) * q - s),
                f"B{2 * k}": (r, (n + 2 * k + 2) * q - s),
                f"B{2 * k + 1}": (r, (n + 2 * k + 2) * q + s),
            }
            for name, (rr, ss) in labels.items():
                if within(rr, ss):
                    b.node(name, rr, ss)
                    added = True
            if not added:
                break
            k += 1
        b.arrow("H", "B0")
        b.arrow("T0", "H")
        b.arrow("T0", "T1")
        b.arrow("T0", "B1")
        for j in range(1, 2 * k + 2):
            if j % 2 == 0:
                for target in (f"T{j - 1}", f"T{j + 1}", f"B{j - 1}", f"B{j + 1}"):
                    b.arrow(f"T{j}", target)
            else:
                for target in (f"B{j - 1}", f"B{j + 1}"):
                    b.arrow(f"T{j}", target)
                    b.arrow(f"B{j}", target)
    elif case is DiagramCase.BOUNDARY_S:
        k = 0
        while within(p, (n + 2 * k) * q + s):
            b.node(f"X{2 * k}", p, (n + 2 * k) * q + s)
            if within(p, (n + 2 * k + 2) * q - s):
                b.node(f"X{2 * k + 1}", p, (n + 2 * k + 2) * q - s)
            k += 1
        for j in range(0, 2 * k + 1, 2):
            b.arrow(f"X{j}", f"X{j - 1}")
            b.arrow(f"X{j}", f"X{j + 1}")
    elif case is DiagramCase.BOUNDARY_R:
        k = 0
        while within(r, (n + 2 * k) * q):
            b.node(f"Y{2 * k}", r, (n + 2 * k) * q)
            if within(p - r, (n + 2 * k + 1) * q):
                b.node(f"Y{2 * k + 1}", p - r, (n + 2 * k + 1) * q)
            k += 1
        for j in range(1, 2 * k + 1, 2):
            b.arrow(f"Y{j}", f"Y{j - 1}")
            b.arrow(f"Y{j}", f"Y{j + 1}")
    else:
        k = 0
        while within(p, (n + 2 * k) * q):
            b.node(f"Z{k}", p, (n + 2 * k) * q)
            k += 1

    return ModuleStructure(ModuleKind.FEIGIN_FUCHS, case, head, b.factors, b.arrows)


def _fock_partner(cc: CentralCharge, r: int, s: int) -> Tuple[KacLabel, bool]:
    """A label of the same Fock module in direct form, and whether arrows must be reversed

    Direct form: r <= p and ps >= qr. Otherwise F_{r,s} is the contragredient of the
    direct-form module F_{Q - lambda_{r,s}} and its diagram is the reversed one.
    """
    p, q = cc.p, cc.q
    while r > p and s > q:
        r, s = r - p, s - q
    if r <= p and p * s >= q * r:
        return KacLabel(r, s), False
    if s < q:
        if r % p:
            n = -(-r // p) - 1
            return KacLabel((n + 1) * p - r, n * q + q - s), True
        return KacLabel(p, (r // p) * q + q - s), True
    if r % p:
        k = -(-r // p)
        return KacLabel(k * p - r, (k - 1) * q), True
    return KacLabel(p, (r // p) * q), True


def ff_structure(cc: CentralCharge, r: int, s: int, max_level: int) -> ModuleStructure:
    """Composition factors of the Feigin-Fuchs module F_{r,s} up to max_level above its head

    Args:
        cc: central charge
        r, s: Fock label, r, s >= 1
        max_level: factors with weight above h_head + max_level are omitted
    """
    if r < 1 or s < 1:
        raise ValueError(f"Fock labels need r, s >= 1, got ({r},{s})")
    partner, reverse = _fock_partner(cc, r, s)
    head = canonical_label(cc, partner.r, partner.s)
    structure = _ff_direct(cc, head, max_level)
    structure.label = KacLabel(r, s)
    return structure.reversed() if reverse else structure


def kac_structure(cc: CentralCharge, r_label: int, s_label: int) -> ModuleStructure:
    """Composition factors of K_{R,S}; the label is kept verbatim since K_{r,s} != K_{r+p,s+q}"""
    p, q = cc.p, cc.q
    label = KacLabel(r_label, s_label)
    if r_label <= 0 or s_label <= 0:
        return ModuleStructure(ModuleKind.KAC, None, label, [], [])
    m, r = divmod(r_label, p)
    n, s = divmod(s_label, q)
    b = _Builder(cc)

    if r and s:
        case = DiagramCase.BULK
        if m <= n:
            b.node("A0", r, (n - m) * q + s)
            for j in range(1, m + 1):
                b.node(f"B{j}", r, (n - m + 2 * j) * q - s)
                b.node(f"C{j}", r, (n - m + 2 * j) * q + s)
            b.node("Aend", r, (n + m + 2) * q - s)
            for j in range(1, m + 1):
                b.node(f"D{j}", p - r, (n - m + 2 * j - 1) * q + s)
                b.node(f"E{j}", p - r, (n - m + 2 * j + 1) * q - s)

            def below(j):
                return f"B{j}" if j <= m else "Aend"

            b.arrow("A0", below(1))
            for j in range(1, m + 1):
                for source in (f"C{j}", f"E{j}"):
                    b.arrow(source, f"B{j}")
                    b.arrow(source, below(j + 1))
                b.arrow(f"D{j}", "A0" if j == 1 else f"C{j - 1}")
                b.arrow(f"D{j}", f"C{j}")
                if j >= 2:
                    b.arrow(f"D{j}", f"E{j - 1}")
                b.arrow(f"D{j}", f"E{j}")
        else:
            b.node("P0", p - r, (m - n + 1) * q - s)
            for j in range(1, n + 1):
                b.node(f"Q{j}", p - r, (m - n + 2 * j - 1) * q + s)
                b.node(f"R{j}", p - r, (m - n + 2 * j + 1) * q - s)
                b.node(f"S{j}", r, (m - n + 2 * j) * q - s)
                b.node(f"T{j}", r, (m - n + 2 * j) * q + s)
            b.node("U", r, (n + m + 2) * q - s)

            def below(j):
                return f"S{j}" if j <= n else "U"

            b.arrow("P0", below(1))
            for j in range(1, n + 1):
                b.arrow(f"Q{j}", "P0" if j == 1 else f"R{j - 1}")
                b.arrow(f"Q{j}", f"R{j}")
                if j >= 2:
                    b.arrow(f"Q{j}", f"T{j - 1}")
                b.arrow(f"Q{j}", f"T{j}")
                for source in (f"R{j}", f"T{j}"):
                    b.arrow(source, f"S{j}")
                    b.arrow(source, below(j + 1))
    elif s:
        # K_{mp, nq+s}: chain with the "+s" factors on top
        case = DiagramCase.BOUNDARY_S
        heads = []
        if m <= n:
            starts = range(n - m + 1, n + m, 2)
        else:
            b.node("F", p, (m - n + 1) * q - s)
            starts = range(m - n + 1, m + n, 2)
        for k in starts:
            heads.append(len(b.factors))
            b.node(f"X{k}+", p, k * q + s)
            b.node(f"X{k}-", p, (k + 2) * q - s)
        for position in heads:
            for neighbour in (position - 1, position + 1):
                if 0 <= neighbour < len(b.factors):
                    b.arrows.append((position, neighbour))
    elif r:
        # K_{mp+r, nq}: chain with the (p-r)-factors on top
        case = DiagramCase.BOUNDARY_R
        tops = []
        if m < n:
            for j in range(m + 1):
                b.node(f"Y{j}", r, (n - m + 2 * j) * q)
                if j < m:
                    tops.append(len(b.factors))
                    b.node(f"W{j}", p - r, (n - m + 2 * j + 1) * q)
        else:
            for j in range(n):
                tops.append(len(b.factors))
                b.node(f"W{j}", p - r, (m - n + 1 + 2 * j) * q)
                b.node(f"Y{j}", r, (m - n + 2 + 2 * j) * q)
        for position in tops:
            for neighbour in (position - 1, position + 1):
                if 0 <= neighbour < len(b.factors):
                    b.arrows.append((position, neighbour))
    else:
        case = DiagramCase.CORNER
        for j in range(min(m, n)):
            b.node(f"Z{j}", p, (abs(m - n) + 1 + 2 * j) * q)

    return ModuleStructure(ModuleKind.KAC, case, label, b.factors, b.arrows)


def expected_kac_length(cc: CentralCharge, r_label: int, s_label: int) -> int:
    """Closed-form composition length of K_{R,S}"""
    if r_label <= 0 or s_label <= 0:
        return 0
    m, r = divmod(r_label, cc.p)
    n, s = divmod(s_label, cc.q)
    if r and s:
        return 4 * min(m, n) + 2
    if s:
        return 2 * m if m <= n else 2 * n + 1
    if r:
        return 2 * m + 1 if m < n else 2 * n
    return min(m, n)


def composition_character(cc: CentralCharge, structure: ModuleStructure, base_weight: Fraction, levels: int) -> List[int]:
    """Sum of simple characters of the factors, graded by level above base_weight"""
    dims = [0] * (levels + 1)
    for factor in structure.factors:
        offset = h(cc, factor.r, factor.s) - base_weight
        if offset.denominator != 1 or offset < 0:
            raise ValueError(f"Factor {factor} sits at non-integral or negative offset {offset} from {base_weight}")
        offset = int(offset)
        if offset > levels:
            continue
        for n, dim in enumerate(simple_character(cc, factor, levels - offset)):
            dims[offset + n] += dim
    return dims
