"""
Virasoro Verma modules at bounded level
Includes:
- PBW bases indexed by partitions (reverse-lexicographic order)
- exact Virasoro action on PBW monomials
- singular vectors as exact kernels of L_1 and L_2
- submodules generated by singular vectors
- embedding diagrams at c_{p,q} and the characters they imply
- C_1-cofinite dimensions of Verma quotients
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from sympy import npartitions
from sympy.utilities.iterables import partitions

from src.services.errors import AmbientMismatch, NoSingularVector, NotKacWeight
from src.services.exactnum import EchelonBasis, add_scaled, rational_nullspace, scaled
from src.services.kactable import CentralCharge, KacLabel, canonical_label, h, kac_label_for_weight

logger = logging.getLogger(__name__)

Partition = Tuple[int, ...]
Coefficients = Dict[Partition, Fraction]


# =============================================
# PARTITIONS
# =============================================

@lru_cache(maxsize=None)
def level_basis(n: int) -> Tuple[Partition, ...]:
    """All partitions of n as weakly decreasing tuples, reverse-lexicographic

    The first entry is (n,) and the last is (1,)*n, i.e. L_{-1}^n.
    """
    if n < 0:
        return ()
    if n == 0:
        return ((),)
    parts = []
    for multiplicities in partitions(n):
        parts.append(tuple(sorted((k for k, m in multiplicities.items() for _ in range(m)), reverse=True)))
    return tuple(sorted(parts, reverse=True))


def partition_count(n: int) -> int:
    """p(n), with p(n) = 0 for n < 0"""
    if n < 0:
        return 0
    return int(npartitions(n))


# =============================================
# PBW VECTORS
# =============================================

@dataclass(frozen=True)
class PBWVector:
    """Element of V_h at a fixed level, keyed by PBW monomial partitions

    Zero vectors may carry a negative level when an L_m lowered past the generator.
    """

    c: Fraction
    h: Fraction
    level: int
    coeffs: Mapping[Partition, Fraction] = field(default_factory=dict)

    def _check_compatible(self, other: "PBWVector"):
        if (self.c, self.h, self.level) != (other.c, other.h, other.level):
            raise AmbientMismatch(
                f"Incompatible PBW vectors: (c={self.c}, h={self.h}, level {self.level}) "
                f"vs (c={other.c}, h={other.h}, level {other.level})"
            )

    def __add__(self, other: "PBWVector") -> "PBWVector":
        self._check_compatible(other)
        coeffs = dict(self.coeffs)
        add_scaled(coeffs, other.coeffs)
        return PBWVector(self.c, self.h, self.level, coeffs)

    def __sub__(self, other: "PBWVector") -> "PBWVector":
        return self + other * -1

    def __mul__(self, factor) -> "PBWVector":
        return PBWVector(self.c, self.h, self.level, scaled(self.coeffs, Fraction(factor)))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __eq__(self, other):
        if not isinstance(other, PBWVector):
            return NotImplemented
        return (self.c, self.h, self.level) == (other.c, other.h, other.level) and dict(self.coeffs) == dict(other.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, part: Partition) -> Fraction:
        return self.coeffs.get(tuple(part), Fraction(0))

    def normalized(self) -> "PBWVector":
        """Scale so the L_{-1}^N coefficient is 1, or else the first non-zero coefficient"""
        if not self.coeffs:
            return self
        lead = self.coeffs.get((1,) * self.level)
        if not lead:
            lead = next(self.coeffs[part] for part in level_basis(self.level) if part in self.coeffs)
        return self * (1 / lead)


# =============================================
# VERMA MODULE ACTION
# =============================================

class VermaModule:
    """Verma module V_h at central charge c with a memoized PBW action"""

    def __init__(self, c: Fraction, weight: Fraction):
        self.c = Fraction(c)
        self.h = Fraction(weight)
        self.logger = logging.getLogger(__name__)
        self._cache: Dict[Tuple[int, Partition], Coefficients] = {}

    def generator(self) -> PBWVector:
        return PBWVector(self.c, self.h, 0, {(): Fraction(1)})

    def monomial(self, part: Sequence[int]) -> PBWVector:
        part = tuple(sorted(part, reverse=True))
        return PBWVector(self.c, self.h, sum(part), {part: Fraction(1)})

    def vector(self, level: int, coeffs: Mapping[Partition, Fraction]) -> PBWVector:
        return PBWVector(self.c, self.h, level, {k: v for k, v in coeffs.items() if v})

    def act_on_basis(self, m: int, part: Partition) -> Coefficients:
        """L_m applied to the monomial indexed by part; the returned dict must not be mutated"""
        key = (m, part)
        cached = self._cache.get(key)
        if cached is not None:
            return cached

        if not part:
            if m > 0:
                result = {}
            elif m == 0:
                result = {(): self.h} if self.h else {}
            else:
                result = {(-m,): Fraction(1)}
        elif m == 0:
            eigenvalue = self.h + sum(part)
            result = {part: eigenvalue} if eigenvalue else {}
        elif -m >= part[0]:
            result = {(-m,) + part: Fraction(1)}
        else:
            first, rest = part[0], part[1:]
            result = {}
            # L_m L_{-first} rest = L_{-first} L_m rest + [L_m, L_{-first}] rest
            for mono, coefficient in self.act_on_basis(m, rest).items():
                add_scaled(result, self.act_on_basis(-first, mono), coefficient)
            if m + first:
                add_scaled(result, self.act_on_basis(m - first, rest), m + first)
            if m == first:
                central = Fraction(m ** 3 - m, 12) * self.c
                if central:
                    add_scaled(result, {rest: Fraction(1)}, central)

        self._cache[key] = result
        return result

    def act_on_coeffs(self, m: int, coeffs: Mapping[Partition, Fraction]) -> Coefficients:
        result: Coefficients = {}
        for part, coefficient in coeffs.items():
            add_scaled(result, self.act_on_basis(m, part), coefficient)
        return result

    def act(self, m: int, v: PBWVector) -> PBWVector:
        if v.c != self.c or v.h != self.h:
            self.logger.error(f"Error applying L_{m}: vector of V_{v.h} at c={v.c} given to V_{self.h} at c={self.c}")
            raise AmbientMismatch(f"Vector of V_{v.h} at c={v.c} does not belong to V_{self.h} at c={self.c}")
        return PBWVector(self.c, self.h, v.level - m, self.act_on_coeffs(m, v.coeffs))


@lru_cache(maxsize=256)
def verma_module(c: Fraction, weight: Fraction) -> VermaModule:
    """Shared module instance per (c, h) so action caches are reused"""
    return VermaModule(Fraction(c), Fraction(weight))


def act(m: int, v: PBWVector) -> PBWVector:
    """Apply L_m to a PBW vector of V_h at central charge c (both carried by v)"""
    return verma_module(v.c, v.h).act(m, v)


# =============================================
# SINGULAR VECTORS AND SUBMODULES
# =============================================

def submodule_basis(module: VermaModule, generators: Sequence[PBWVector], max_level: int) -> List[EchelonBasis]:
    """Level-wise span of the submodule generated by singular vectors

    Singular generators make U(Vir) g = U(Vir_-) g, and Vir_- is generated by
    L_{-1} and L_{-2}, so closing under those two modes is enough.
    """
    bases: List[EchelonBasis] = []
    for n in range(max_level + 1):
        basis = EchelonBasis(level_basis(n))
        for generator in generators:
            if generator.level == n:
                basis.add(generator.coeffs)
        for step in (1, 2):
            if n - step >= 0:
                for row in bases[n - step].rows():
                    basis.add(module.act_on_coeffs(-step, row))
        bases.append(basis)
    return bases


def _image_rows(module: VermaModule, columns: Sequence[Partition], m: int, targets: Sequence[Partition]) -> List[List[Fraction]]:
    images = [module.act_on_basis(m, part) for part in columns]
    return [[image.get(target, Fraction(0)) for image in images] for target in targets]


def singular_vectors(
    c: Fraction,
    weight: Fraction,
    level: int,
    quotient_generators: Optional[Sequence[PBWVector]] = None,
) -> List[PBWVector]:
    """Basis of the singular vectors of V_h at a given level

    Args:
        c: central charge
        weight: highest weight h
        level: N >= 1
        quotient_generators: singular vectors generating a submodule S; when given,
            the kernel is computed in V_h / S, i.e. L_1 w and L_2 w are only required
            to lie in S, and the result is reduced modulo S_N

    Returns:
        Normalized PBW vectors (L_{-1}^N coefficient 1 where non-zero)
    """
    if level < 1:
        raise ValueError(f"Singular vectors live at level >= 1, got {level}")
    module = verma_module(Fraction(c), Fraction(weight))
    columns = level_basis(level)
    rows = _image_rows(module, columns, 1, level_basis(level - 1))
    rows += _image_rows(module, columns, 2, level_basis(level - 2))

    if not quotient_generators:
        kernel = rational_nullspace(rows, len(columns))
        found = [module.vector(level, dict(zip(columns, vector))).normalized() for vector in kernel]
        logger.debug(f"c={c}, h={weight}: {len(found)} singular vector(s) at level {level}")
        return found

    sub = submodule_basis(module, quotient_generators, level)
    lower = [sub[level - step].rows() if level - step >= 0 else [] for step in (1, 2)]
    extra = len(lower[0]) + len(lower[1])
    width = len(columns) + extra
    padded: List[List[Fraction]] = []
    offset = len(columns)
    for step, targets in ((1, level_basis(level - 1)), (2, level_basis(level - 2))):
        block = _image_rows(module, columns, step, targets)
        for row, target in zip(block, targets):
            full = row + [Fraction(0)] * extra
            for index, s_row in enumerate(lower[step - 1]):
                full[offset + index] = -s_row.get(target, Fraction(0))
            padded.append(full)
        offset += len(lower[step - 1])

    residues = EchelonBasis(columns)
    for vector in rational_nullspace(padded, width):
        residue = sub[level].reduce(dict(zip(columns, vector[: len(columns)])))
        residues.add(residue)
    found = [module.vector(level, row).normalized() for row in residues.rows()]
    logger.debug(f"c={c}, h={weight}: {len(found)} singular vector(s) at level {level} in the quotient")
    return found


def kac_singular_vector(c: Fraction, weight: Fraction, level: int) -> PBWVector:
    """The level-N singular vector with non-zero L_{-1}^N coefficient, monic

    Raises:
        NoSingularVector: when no such vector exists at this level
    """
    for vector in singular_vectors(c, weight, level):
        if vector.coefficient((1,) * level):
            return vector
    raise NoSingularVector(f"V_h with c={c}, h={weight} has no singular vector at level {level} with an L_-1^{level} term")


# =============================================
# EMBEDDING DIAGRAMS
# =============================================

class DiagramCase(Enum):
    BULK = "bulk"
    BOUNDARY_S = "boundary_s"
    BOUNDARY_R = "boundary_r"
    CORNER = "corner"
    IRREDUCIBLE = "irreducible"


@dataclass(frozen=True)
class DiagramNode:
    label: Optional[KacLabel]
    weight: Fraction
    level: int
    layer: int


@dataclass
class EmbeddingDiagram:
    """Submodule structure of a Verma module; arrows point from a module to its submodule"""

    case: DiagramCase
    nodes: List[DiagramNode]
    arrows: List[Tuple[int, int]]

    def levels(self) -> List[int]:
        return [node.level for node in self.nodes]


def classify_label(cc: CentralCharge, label: KacLabel) -> Tuple[DiagramCase, int, int]:
    """Case and (n, s) with label.s = n q + s, for a canonical label"""
    n, s = divmod(label.s, cc.q)
    if label.r < cc.p:
        return (DiagramCase.BULK if s else DiagramCase.BOUNDARY_R), n, s
    return (DiagramCase.BOUNDARY_S if s else DiagramCase.CORNER), n, s


def _layer_labels(cc: CentralCharge, case: DiagramCase, r: int, n: int, s: int, layer: int) -> List[KacLabel]:
    p, q = cc.p, cc.q
    k = layer
    if case is DiagramCase.BULK:
        top = KacLabel(p - r, (n + k) * q + s) if k % 2 else KacLabel(p - r, (n + k + 1) * q - s)
        bottom = KacLabel(r, (n + k + 1) * q - s) if k % 2 else KacLabel(r, (n + k) * q + s)
        return [top, bottom]
    if case is DiagramCase.BOUNDARY_S:
        return [KacLabel(p, (n + k + 1) * q - s) if k % 2 else KacLabel(p, (n + k) * q + s)]
    if case is DiagramCase.BOUNDARY_R:
        return [KacLabel(p - r, (n + k) * q) if k % 2 else KacLabel(r, (n + k) * q)]
    return [KacLabel(p, (n + 2 * k) * q)]


def embedding_diagram(
    cc: CentralCharge,
    label: KacLabel,
    depth: int,
    max_level: Optional[int] = None,
) -> EmbeddingDiagram:
    """Embedding diagram of V_{r,s}, truncated after `depth` layers below the head

    A layer is one step of diagram distance: two nodes in the bulk case, one in the
    chain cases. When max_level is given, nodes deeper than that level are dropped too.
    The label is normalized first.
    """
    head_label = canonical_label(cc, label.r, label.s)
    case, n, s = classify_label(cc, head_label)
    head_weight = h(cc, head_label.r, head_label.s)
    nodes = [DiagramNode(head_label, head_weight, 0, 0)]
    arrows: List[Tuple[int, int]] = []
    previous = [0]
    for layer in range(1, depth + 1):
        current = []
        for node_label in _layer_labels(cc, case, head_label.r, n, s, layer):
            weight = h(cc, node_label.r, node_label.s)
            level = weight - head_weight
            if level.denominator != 1 or level <= 0:
                raise AssertionError(f"Diagram node {node_label} has non-integral level {level}")
            if max_level is not None and level > max_level:
                continue
            nodes.append(DiagramNode(node_label, weight, int(level), layer))
            current.append(len(nodes) - 1)
        if not current:
            break
        arrows.extend((parent, child) for parent in previous for child in current)
        previous = current
    return EmbeddingDiagram(case, nodes, arrows)


def embedding_diagram_for_weight(cc: CentralCharge, weight: Fraction, depth: int) -> EmbeddingDiagram:
    """Diagram of V_h for an arbitrary weight; non-Kac weights give one irreducible node"""
    try:
        label = kac_label_for_weight(cc, weight)
    except NotKacWeight:
        return EmbeddingDiagram(DiagramCase.IRREDUCIBLE, [DiagramNode(None, Fraction(weight), 0, 0)], [])
    return embedding_diagram(cc, label, depth)


# =============================================
# CHARACTERS
# =============================================

def verma_character(levels: int) -> List[int]:
    return [partition_count(n) for n in range(levels + 1)]


def kac_quotient_character(r: int, s: int, levels: int) -> List[int]:
    """Graded dimensions of V_{r,s} / <singular vector at level rs>"""
    return [partition_count(n) - partition_count(n - r * s) for n in range(levels + 1)]


def simple_character(cc: CentralCharge, label: KacLabel, levels: int) -> List[int]:
    """Graded dimensions of L_{r,s} by inclusion-exclusion over the embedding diagram

    Bulk: alternating sum over layers (both strands). Chains: the maximal
    submodule is the first node, so only ch V_0 - ch V_1 remains.
    """
    diagram = embedding_diagram(cc, label, depth=levels + 1, max_level=levels)
    chain = diagram.case is not DiagramCase.BULK
    dims = [0] * (levels + 1)
    for node in diagram.nodes:
        if chain and node.layer > 1:
            continue
        sign = -1 if node.layer % 2 else 1
        for n in range(node.level, levels + 1):
            dims[n] += sign * partition_count(n - node.level)
    return dims


def characters(cc: CentralCharge, r: int, s: int, levels: int) -> Dict[str, List[int]]:
    """Verma, Verma-quotient and simple graded dimensions for label (r, s)"""
    return {
        "verma": verma_character(levels),
        "kac_quotient": kac_quotient_character(r, s, levels),
        "simple": simple_character(cc, KacLabel(r, s), levels),
    }


def simple_character_bruteforce(c: Fraction, weight: Fraction, levels: int) -> List[int]:
    """Graded dimensions of V_h modulo the submodule generated by all singular vectors up to `levels`"""
    module = verma_module(Fraction(c), Fraction(weight))
    generators: List[PBWVector] = []
    for n in range(1, levels + 1):
        generators.extend(singular_vectors(c, weight, n, quotient_generators=generators or None))
    sub = submodule_basis(module, generators, levels)
    return [partition_count(n) - sub[n].dimension for n in range(levels + 1)]


# =============================================
# C_1-COFINITENESS
# =============================================

def c1_cofinite_dimension(c: Fraction, weight: Fraction, singular_level: int, level_cap: int) -> int:
    """dim (V_h / <v~>) / C_1 counted through level_cap

    C_1 is spanned by the L_{-n} w with n >= 2, so a level-k space contributes one
    dimension exactly when L_{-1}^k v survives modulo C_1 + <v~>.

    Raises:
        NoSingularVector: when V_h has no suitable singular vector at singular_level
    """
    if level_cap < singular_level:
        raise ValueError(f"Level cap {level_cap} is below the singular level {singular_level}")
    module = verma_module(Fraction(c), Fraction(weight))
    singular = kac_singular_vector(c, weight, singular_level)
    sub = submodule_basis(module, [singular], level_cap)
    surviving = 0
    for k in range(level_cap + 1):
        span = EchelonBasis(level_basis(k))
        for n in range(2, k + 1):
            for part in level_basis(k - n):
                span.add(module.act_on_basis(-n, part))
        for row in sub[k].rows():
            span.add(row)
        if not span.contains({(1,) * k: Fraction(1)}):
            surviving += 1
    logger.debug(f"c={c}, h={weight}: C_1-cofinite dimension {surviving} through level {level_cap}")
    return surviving
