"""
Intertwining operators of type (K_{1,2}, V_{h1}; V_{h2}) and their Fock counterparts
Includes:
- branch choices and admissibility for the primary-field recursion
- the coefficient recursion phi_k and its primary-condition verification
- descent of the recursion-built operator to Verma quotients
- the Fock intertwining operator, its commutator identities and image dimensions
- the hypergeometric BPZ identity and the rigidity constants
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import comb, factorial
from typing import Dict, List, Tuple

from mpmath import mp

from src.services.errors import AmbientMismatch, InadmissibleBranch, InvalidP, LevelTooSmall
from src.services.exactnum import EchelonBasis, QuadExt, TruncatedSeries, add_scaled, scaled
from src.services.fock import FockCoefficients, FockModule, FockVector, fock_module, kac_basis
from src.services.kactable import CentralCharge, KacLabel, h, heisenberg_weight, kac_label_for_weight
from src.services.verma import (
    Coefficients,
    PBWVector,
    Partition,
    kac_singular_vector,
    level_basis,
    submodule_basis,
    verma_module,
)

logger = logging.getLogger(__name__)


# =============================================
# BRANCHES
# =============================================

class BranchChoice(Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class BranchTarget:
    """One choice of square root sqrt(4 t h1 + (t-1)^2) = +-(rt - s)"""

    branch: BranchChoice
    root: Fraction
    target_label: KacLabel
    target_weight: Fraction
    admissible: bool


def _branch_target(cc: CentralCharge, label: KacLabel, branch: BranchChoice) -> BranchTarget:
    t = cc.t
    r, s = label.r, label.s
    root = r * t - s if branch is BranchChoice.PLUS else s - r * t
    h1 = h(cc, r, s)
    h2 = h1 + 1 / (4 * t) - root / (2 * t)
    target = KacLabel(r, s + 1) if branch is BranchChoice.PLUS else KacLabel(r, s - 1)
    if h2 != h(cc, target.r, target.s):
        raise AssertionError(f"Branch {branch.value} of {label} does not land on h{target}")
    ratio = root / t
    admissible = not (ratio.denominator == 1 and ratio >= 1)
    return BranchTarget(branch, root, target, h2, admissible)


def allowed_targets(cc: CentralCharge, label: KacLabel) -> List[BranchTarget]:
    """Both branch targets h2 for h1 = h_{r,s}, with admissibility

    Admissible means r - ps/q (Plus) or ps/q - r (Minus) is not a positive integer.
    """
    return [_branch_target(cc, label, branch) for branch in (BranchChoice.PLUS, BranchChoice.MINUS)]


def allowed_targets_for_weight(cc: CentralCharge, h1: Fraction) -> List[BranchTarget]:
    """Same as allowed_targets for a bare weight

    Raises:
        NotKacWeight: when 4 t h1 + (t-1)^2 is not the square of some (rq - sp)/p
    """
    return allowed_targets(cc, kac_label_for_weight(cc, h1))


# =============================================
# PRIMARY FIELD RECURSION
# =============================================

@dataclass
class PrimaryFieldCoefficients:
    """phi_0..phi_N of Y(v_{1,2}, z) v_{h1} = sum_k phi_k z^{h + k}, phi_k at level k of V_{h2}"""

    cc: CentralCharge
    label: KacLabel
    branch: BranchChoice
    h1: Fraction
    h2: Fraction
    root: Fraction
    level: int
    phis: List[PBWVector] = field(default_factory=list)
    source_label: KacLabel = KacLabel(1, 2)

    @property
    def h12(self) -> Fraction:
        return h(self.cc, 1, 2)

    @property
    def exponent(self) -> Fraction:
        """h = h2 - h_{1,2} - h1"""
        return self.h2 - self.h12 - self.h1

    @property
    def target_label(self) -> KacLabel:
        return KacLabel(self.label.r, self.label.s + (1 if self.branch is BranchChoice.PLUS else -1))


def recursion_factor(coeffs: PrimaryFieldCoefficients, k: int) -> Fraction:
    """t k^2 + (t(2h-1)+1) k + (t h(h-1) + h - h1), the unfactored left side of the recursion"""
    t = coeffs.cc.t
    e = coeffs.exponent
    return t * k * k + (t * (2 * e - 1) + 1) * k + (t * e * (e - 1) + e - coeffs.h1)


def build_primary_coefficients(
    cc: CentralCharge,
    label: KacLabel,
    branch: BranchChoice,
    level: int,
) -> PrimaryFieldCoefficients:
    """Solve k (t k - root) phi_k = sum_{i=1}^k L_{-i} phi_{k-i} with phi_0 the target generator

    Raises:
        InadmissibleBranch: when k (t k - root) vanishes for some 1 <= k <= level
    """
    target = _branch_target(cc, label, branch)
    module = verma_module(cc.c, target.target_weight)
    coeffs = PrimaryFieldCoefficients(
        cc=cc,
        label=label,
        branch=branch,
        h1=h(cc, label.r, label.s),
        h2=target.target_weight,
        root=target.root,
        level=level,
    )
    coeffs.phis.append(module.generator())
    for k in range(1, level + 1):
        factor = k * (cc.t * k - target.root)
        if factor == 0:
            raise InadmissibleBranch(
                f"Branch {branch.value} at {label}: recursion factor vanishes at k={k} (root/t = {target.root / cc.t})"
            )
        total: Coefficients = {}
        for i in range(1, k + 1):
            add_scaled(total, module.act_on_coeffs(-i, coeffs.phis[k - i].coeffs))
        coeffs.phis.append(module.vector(k, {part: value / factor for part, value in total.items()}))
    logger.debug(f"Built phi_0..phi_{level} for {label} on the {branch.value} branch, h2={target.target_weight}")
    return coeffs


def verify_primary_condition(coeffs: PrimaryFieldCoefficients, max_level: int) -> bool:
    """Check L_m phi_k = (k + m(h_{1,2}-1) + h2 - h1) phi_{k-m} and L_0 phi_k = (h2+k) phi_k exactly

    L_m phi_k with m > k lands below level 0 and vanishes by grading.
    """
    if max_level > coeffs.level:
        raise LevelTooSmall(f"Coefficients built to level {coeffs.level}, asked to verify through {max_level}")
    module = verma_module(coeffs.cc.c, coeffs.h2)
    h12 = coeffs.h12
    for k in range(max_level + 1):
        phi = coeffs.phis[k]
        if module.act_on_coeffs(0, phi.coeffs) != scaled(phi.coeffs, coeffs.h2 + k):
            logger.debug(f"L_0 fails on phi_{k}")
            return False
        for m in range(1, k + 1):
            expected = scaled(coeffs.phis[k - m].coeffs, k + m * (h12 - 1) + coeffs.h2 - coeffs.h1)
            if module.act_on_coeffs(m, phi.coeffs) != expected:
                logger.debug(f"L_{m} phi_{k} differs from the primary condition")
                return False
    return True


def verify_recursion_identity(coeffs: PrimaryFieldCoefficients) -> bool:
    """recursion_factor(k) phi_k = sum_{i=1}^k L_{-i} phi_{k-i} for every built k"""
    module = verma_module(coeffs.cc.c, coeffs.h2)
    for k in range(1, coeffs.level + 1):
        total: Coefficients = {}
        for i in range(1, k + 1):
            add_scaled(total, module.act_on_coeffs(-i, coeffs.phis[k - i].coeffs))
        if total != scaled(coeffs.phis[k].coeffs, recursion_factor(coeffs, k)):
            return False
    return True


# =============================================
# DESCENT TO KAC QUOTIENTS
# =============================================

def descent_predicted(cc: CentralCharge, label: KacLabel, branch: BranchChoice) -> bool:
    """Sufficient criterion for the operator to factor through V_{h1}/<v~_{r,s}> -> V_{h2}/<v~_{r,s+-1}>"""
    r, s = label.r, label.s
    if s % cc.q:
        return True
    if branch is BranchChoice.PLUS:
        return 1 <= r <= cc.p - 1
    return cc.p * s <= cc.q * r


class _DescendantImages:
    """Phi(w)[n] for PBW monomials w of V_{h1}, from the primary rule for v_{1,2}"""

    def __init__(self, coeffs: PrimaryFieldCoefficients):
        self.coeffs = coeffs
        self.target = verma_module(coeffs.cc.c, coeffs.h2)
        self.h12 = coeffs.h12
        self.exponent = coeffs.exponent
        self._cache: Dict[Tuple[Partition, int], Coefficients] = {}

    def image(self, part: Partition, n: int) -> Coefficients:
        if n < 0:
            return {}
        key = (part, n)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        if not part:
            result = dict(self.coeffs.phis[n].coeffs)
        else:
            m, rest = part[0], part[1:]
            j = sum(rest)
            result = dict(self.target.act_on_coeffs(-m, self.image(rest, n - m)))
            shift = (1 - m) * self.h12 + self.exponent + n - j
            if shift:
                add_scaled(result, self.image(rest, n), -shift)
        self._cache[key] = result
        return result

    def image_of(self, vector: PBWVector, n: int) -> Coefficients:
        result: Coefficients = {}
        for part, value in vector.coeffs.items():
            add_scaled(result, self.image(part, n), value)
        return result


def descends_to_kac_quotient(coeffs: PrimaryFieldCoefficients, max_level: int) -> bool:
    """Whether Y(v_{1,2}, z) v~_{r,s} vanishes in V_{h2}/<v~_{r,s+-1}> through target level max_level

    Raises:
        LevelTooSmall: when max_level is below the level of the target singular vector
    """
    r, s = coeffs.label.r, coeffs.label.s
    target = coeffs.target_label
    target_level = target.r * target.s
    if target_level == 0:
        return True
    if max_level < target_level:
        raise LevelTooSmall(
            f"Level {max_level} cannot see the singular vector of V_{target} at level {target_level}"
        )
    if coeffs.level < max_level:
        coeffs = build_primary_coefficients(coeffs.cc, coeffs.label, coeffs.branch, max_level)

    c = coeffs.cc.c
    source_singular = kac_singular_vector(c, coeffs.h1, r * s)
    target_singular = kac_singular_vector(c, coeffs.h2, target_level)
    quotient = submodule_basis(verma_module(c, coeffs.h2), [target_singular], max_level)
    images = _DescendantImages(coeffs)
    for n in range(max_level + 1):
        if not quotient[n].contains(images.image_of(source_singular, n)):
            logger.debug(f"{coeffs.label} {coeffs.branch.value}: image of v~ survives at target level {n}")
            return False
    return True


# =============================================
# FOCK INTERTWINING OPERATOR
# =============================================

class FockIntertwinerBlock:
    """Coefficients of Y(u, z) w : F_lambda x F_mu -> F_{lambda+mu}{z}

    Y(u, z) w = sum_n Y(u)w[n] z^{lambda mu + n - deg u - deg w}, with Y(u)w[n] at level n
    of F_{lambda+mu}; on generators Y(v_lambda, z) v_mu = z^{lambda mu} exp(lambda sum a_{-k} z^k / k) v_{lambda+mu}.
    """

    def __init__(self, cc: CentralCharge, lam: QuadExt, mu: QuadExt, level: int):
        self.cc = cc
        self.lam = lam
        self.mu = mu
        self.level = level
        self.source = fock_module(cc, mu)
        self.left = fock_module(cc, lam)
        self.target = fock_module(cc, lam + mu)
        self.logger = logging.getLogger(__name__)
        self._cache: Dict[Tuple[Partition, Partition, int], FockCoefficients] = {}

    @property
    def leading_exponent(self) -> Fraction:
        """lambda mu, rational since both weights are multiples of sqrt(2pq)"""
        return (self.lam * self.mu).rational_part()

    def _generator_term(self, n: int) -> FockCoefficients:
        # coefficient of z^n in exp(lambda sum_k a_{-k} z^k / k): sum over partitions of prod (lambda/k)^m_k / m_k!
        result: FockCoefficients = {}
        for part in level_basis(n):
            value = self.cc.scalar(1)
            for k in set(part):
                multiplicity = part.count(k)
                value = value * (self.lam * Fraction(1, k)) ** multiplicity * Fraction(1, factorial(multiplicity))
            if value:
                result[part] = value
        return result

    def component(self, u_part: Partition, w_part: Partition, n: int) -> FockCoefficients:
        """Y(a_{-u} v_lambda)(a_{-w} v_mu)[n]; the returned dict must not be mutated"""
        if n < 0:
            return {}
        key = (u_part, w_part, n)
        cached = self._cache.get(key)
        if cached is not None:
            return cached

        result: FockCoefficients = {}
        if not u_part and not w_part:
            result = self._generator_term(n)
        elif not u_part:
            # [a_m, Y(v_lambda, z)] = lambda z^m Y(v_lambda, z)
            k, rest = w_part[0], w_part[1:]
            for part, value in self.component((), rest, n - k).items():
                add_scaled(result, self.target.heis_on_basis(-k, part), value)
            add_scaled(result, self.component((), rest, n), -self.lam)
        else:
            # iterate formula for a_{-m} u
            m, rest = u_part[0], u_part[1:]
            for i in range(0, n - m + 1):
                weight = comb(m + i - 1, i)
                for part, value in self.component(rest, w_part, n - m - i).items():
                    add_scaled(result, self.target.heis_on_basis(-m - i, part), value * weight)
            sign = -1 if m % 2 else 1
            for i in range(0, sum(w_part) + 1):
                weight = comb(m + i - 1, i) * sign
                for lowered, value in self.source.heis_on_basis(i, w_part).items():
                    add_scaled(result, self.component(rest, lowered, n), -value * weight)

        self._cache[key] = result
        return result

    def apply(self, u: FockVector, w: FockVector, n: int) -> FockCoefficients:
        """Y(u)w[n] for arbitrary vectors of F_lambda and F_mu"""
        if u.lam != self.lam or w.lam != self.mu:
            self.logger.error(f"Error applying the Fock intertwiner: got F_({u.lam}) x F_({w.lam}), expected F_({self.lam}) x F_({self.mu})")
            raise AmbientMismatch("Fock intertwiner applied to vectors of the wrong modules")
        result: FockCoefficients = {}
        for u_part, u_value in u.coeffs.items():
            for w_part, w_value in w.coeffs.items():
                add_scaled(result, self.component(u_part, w_part, n), u_value * w_value)
        return result

    def generator_series(self) -> List[FockVector]:
        return [self.target.vector(n, self.component((), (), n)) for n in range(self.level + 1)]

    def heisenberg_commutator_holds(self, n: int, u_part: Partition, w_part: Partition, level: int) -> bool:
        """a_n Y(u)w[t+n] - Y(u)(a_n w)[t] = sum_i C(n,i) Y(a_i u)w[t]"""
        lhs: FockCoefficients = {}
        for part, value in self.component(u_part, w_part, level + n).items():
            add_scaled(lhs, self.target.heis_on_basis(n, part), value)
        for lowered, value in self.source.heis_on_basis(n, w_part).items():
            add_scaled(lhs, self.component(u_part, lowered, level), -value)
        for i in range(0, sum(u_part) + 1):
            weight = _binomial(n, i)
            if not weight:
                continue
            for lowered, value in self.left.heis_on_basis(i, u_part).items():
                add_scaled(lhs, self.component(lowered, w_part, level), -value * weight)
        return not lhs

    def virasoro_commutator_holds(self, m: int, u_part: Partition, w_part: Partition, level: int) -> bool:
        """L_m Y(u)w[t+m] - Y(u)(L_m w)[t] = sum_i C(m+1,i) Y(L_{i-1} u)w[t]"""
        lhs: FockCoefficients = {}
        for part, value in self.component(u_part, w_part, level + m).items():
            add_scaled(lhs, self.target.vir_on_basis(m, part), value)
        for lowered, value in self.source.vir_on_basis(m, w_part).items():
            add_scaled(lhs, self.component(u_part, lowered, level), -value)
        for i in range(0, sum(u_part) + 2):
            weight = _binomial(m + 1, i)
            if not weight:
                continue
            for moved, value in self.left.vir_on_basis(i - 1, u_part).items():
                add_scaled(lhs, self.component(moved, w_part, level), -value * weight)
        return not lhs


def _binomial(top: int, k: int) -> Fraction:
    """C(top, k) for any integer top and k >= 0"""
    value = Fraction(1)
    for j in range(k):
        value = value * (top - j) / (j + 1)
    return value


def fock_intertwiner_block(cc: CentralCharge, lam: QuadExt, mu: QuadExt, level: int) -> FockIntertwinerBlock:
    """Fock intertwiner for Kac-type weights; lambda mu must be rational"""
    block = FockIntertwinerBlock(cc, lam, mu, level)
    logger.debug(f"Fock intertwiner F_({lam}) x F_({mu}): leading power z^{block.leading_exponent}")
    return block


def kac_image_graded_dims(cc: CentralCharge, left: KacLabel, right: KacLabel, max_level: int) -> List[int]:
    """Graded dimensions of the image of Y restricted to K_{r,s} x K_{r',s'} inside F_{r+r'-1,s+s'-1}

    The coefficients of Y on the generating levels (below rs and r's') span a space closed
    under positive modes, so closing it under L_{-1} and L_{-2} gives the whole image.
    """
    block = fock_intertwiner_block(
        cc, heisenberg_weight(cc, left.r, left.s), heisenberg_weight(cc, right.r, right.s), max_level
    )
    u_parts = [part for n in range(left.r * left.s) for part in level_basis(n)]
    w_parts = [part for n in range(right.r * right.s) for part in level_basis(n)]
    target: FockModule = block.target
    spans: List[EchelonBasis] = []
    for n in range(max_level + 1):
        span = EchelonBasis(level_basis(n))
        for u_part in u_parts:
            for w_part in w_parts:
                span.add(block.component(u_part, w_part, n))
        for step in (1, 2):
            if n - step >= 0:
                for row in spans[n - step].rows():
                    span.add(target.vir_on_coeffs(-step, row))
        spans.append(span)
    dims = [span.dimension for span in spans]
    logger.debug(f"Image of K{left} x K{right}: dims {dims}")
    return dims


def kac_target_dims(cc: CentralCharge, left: KacLabel, right: KacLabel, max_level: int) -> List[int]:
    return kac_basis(cc, left.r + right.r - 1, left.s + right.s - 1, max_level).dims


# =============================================
# HYPERGEOMETRIC IDENTITY AND RIGIDITY CONSTANTS
# =============================================

def _check_odd_p(p: int):
    if not isinstance(p, int) or p < 3 or p % 2 == 0:
        raise InvalidP(f"The q=2 hypergeometric check needs an odd p >= 3, got {p!r}")


def hypergeometric_parameters(p: int) -> Tuple[Fraction, Fraction, Fraction]:
    """(a, b, c) = (p/2, 3p/2 - 1, p)"""
    return Fraction(p, 2), Fraction(3 * p, 2) - 1, Fraction(p)


def hypergeometric_series(p: int, order: int) -> TruncatedSeries:
    """2F1(p/2, 3p/2-1; p; u) as an exact series in u through u^order"""
    _check_odd_p(p)
    a, b, c = hypergeometric_parameters(p)
    coeffs = [Fraction(1)]
    for n in range(order):
        coeffs.append(coeffs[-1] * (a + n) * (b + n) / ((c + n) * (n + 1)))
    return TruncatedSeries.from_coefficients("u", order, coeffs)


def verify_bpz_hypergeometric(p: int, order: int) -> TruncatedSeries:
    """Residual of u(1-u) f'' + p(1-2u) f' + (p/2)(1-3p/2) f for f = 2F1(p/2, 3p/2-1; p; u)

    The residual is known through order-2 and should be the zero series.

    Raises:
        InvalidP: for even p or p < 3
    """
    _check_odd_p(p)
    if order < 2:
        raise ValueError(f"Order must be at least 2, got {order}")
    f = hypergeometric_series(p, order)
    df = f.derivative()
    ddf = df.derivative()
    u = TruncatedSeries.monomial("u", order, 1)
    one = TruncatedSeries.monomial("u", order, 0)
    residual = u * (one - u) * ddf + (one - u * 2) * df * p + f * (Fraction(p, 2) * (1 - Fraction(3 * p, 2)))
    return residual.truncate(order - 2)


def bpz_numeric_check(p: int, u: Fraction, precision: int = 256, terms: int = 200) -> Tuple[object, object]:
    """mpmath hyp2f1 against the exact partial sum at a point |u| < 1

    Returns:
        (hyp2f1 value, partial sum value), both mpf at the requested precision
    """
    _check_odd_p(p)
    a, b, c = hypergeometric_parameters(p)
    series = hypergeometric_series(p, terms)
    with mp.workprec(precision):
        point = mp.mpf(u.numerator) / u.denominator
        numeric = mp.hyp2f1(mp.mpf(a.numerator) / a.denominator, mp.mpf(b.numerator) / b.denominator, c.numerator, point)
        partial = mp.mpf(0)
        power = mp.mpf(1)
        for coefficient in series.coeffs:
            partial += mp.mpf(coefficient.numerator) / coefficient.denominator * power
            power *= point
    return numeric, partial


@dataclass
class RigidityConstants:
    p: int
    q: int
    precision: int
    R_pairing: object
    R_pairing_mirror: object
    d_K12: object
    d_K21: object


def _pairing_constant(p: int, q: int):
    if q == 2:
        return 4 * (mp.mpf(1) / p - 1) * mp.factorial(p - 2) / (mp.gamma(mp.mpf(p) / 2) * mp.gamma(mp.mpf(3 * p) / 2 - 1))
    return (2 - mp.mpf(q) / p) / mp.cos(p * mp.pi / q)


def rigidity_constants(cc: CentralCharge, precision: int = 256) -> RigidityConstants:
    """Evaluation/coevaluation scalar and intrinsic dimensions of K_{1,2} and K_{2,1}

    R_pairing = (2 - q/p)/cos(p pi/q) for q >= 3, and for q = 2
    4(1/p - 1)(p-2)!/(Gamma(p/2) Gamma(3p/2 - 1)); the mirror swaps p and q.
    """
    with mp.workprec(precision):
        constants = RigidityConstants(
            p=cc.p,
            q=cc.q,
            precision=precision,
            R_pairing=_pairing_constant(cc.p, cc.q),
            R_pairing_mirror=_pairing_constant(cc.q, cc.p),
            d_K12=-2 * mp.cos(cc.p * mp.pi / cc.q),
            d_K21=-2 * mp.cos(cc.q * mp.pi / cc.p),
        )
    logger.debug(f"Rigidity constants at c_({cc.p},{cc.q}) computed with {precision} bits")
    return constants


def q2_pairing_from_lowest_order(p: int, precision: int = 256):
    """The q=2 pairing constant rebuilt as ((4/p)(-2 h_{1,2}) - 1) times the Gamma ratio"""
    _check_odd_p(p)
    h12 = h(CentralCharge(p, 2), 1, 2)
    prefactor = Fraction(4, p) * (-2 * h12) - 1
    with mp.workprec(precision):
        ratio = mp.factorial(p - 2) / (mp.gamma(mp.mpf(p) / 2) * mp.gamma(mp.mpf(3 * p) / 2 - 1))
        return mp.mpf(prefactor.numerator) / prefactor.denominator * ratio
