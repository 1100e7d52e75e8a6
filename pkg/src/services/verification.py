"""
Acceptance suite behind `verify`: every check recomputes an exact identity
and reports expected vs actual; failures never raise.
"""

import logging
import time
from fractions import Fraction
from typing import Callable, Dict, List, Tuple

from mpmath import mp

from src.models.schemas import CheckResult, VerifyReport, format_coefficients
from src.services.fock import composition_character, expected_kac_length, ff_structure, kac_basis, kac_structure
from src.services.fusion import check_grothendieck_consistency
from src.services.intertwiner import (
    allowed_targets,
    bpz_numeric_check,
    build_primary_coefficients,
    descends_to_kac_quotient,
    descent_predicted,
    kac_image_graded_dims,
    kac_target_dims,
    q2_pairing_from_lowest_order,
    rigidity_constants,
    verify_bpz_hypergeometric,
    verify_primary_condition,
    verify_recursion_identity,
)
from src.services.kactable import CentralCharge, KacLabel, central_charge, h
from src.services.verma import (
    act,
    c1_cofinite_dimension,
    embedding_diagram,
    level_basis,
    partition_count,
    singular_vectors,
    verma_module,
)

logger = logging.getLogger(__name__)

CheckOutcome = Tuple[bool, str, str]


def _kac_formula(r: int, s: int, levels: int) -> List[int]:
    return [partition_count(n) - partition_count(n - r * s) for n in range(levels + 1)]


# =============================================
# CHECKS
# =============================================

def check_verma_brackets(cc: CentralCharge, level: int) -> CheckOutcome:
    module = verma_module(cc.c, h(cc, 1, 2))
    failures = 0
    for n_level in range(min(level, 4) + 1):
        for part in level_basis(n_level):
            v = module.monomial(part)
            for m in range(-3, 4):
                for n in range(-3, 4):
                    lhs = act(m, act(n, v)) - act(n, act(m, v))
                    rhs = act(m + n, v) * (m - n)
                    if m == -n:
                        rhs = rhs + v * (Fraction(m ** 3 - m, 12) * cc.c)
                    if lhs.coeffs != rhs.coeffs:
                        failures += 1
    return failures == 0, "0 bracket violations", f"{failures} bracket violations"


def _terms_text(coeffs) -> str:
    """Terms as {(2): -2/3, (1,1): 1/1}, in PBW basis order"""
    entries = format_coefficients(coeffs, sorted(coeffs, reverse=True))
    return "{" + ", ".join(f"({entry['monomial']}): {entry['coefficient']}" for entry in entries) + "}"


def check_singular_h12(cc: CentralCharge, level: int) -> CheckOutcome:
    found = singular_vectors(cc.c, h(cc, 1, 2), 2)
    expected = {(1, 1): Fraction(1), (2,): -1 / cc.t}
    actual = [dict(v.coeffs) for v in found]
    return actual == [expected], f"[{_terms_text(expected)}]", "[" + "; ".join(_terms_text(c) for c in actual) + "]"


def check_embedding_levels(cc: CentralCharge, level: int) -> CheckOutcome:
    mismatches = []
    for label in (KacLabel(1, 1), KacLabel(1, 2), KacLabel(2, 1), KacLabel(cc.p, cc.q)):
        diagram = embedding_diagram(cc, label, depth=level, max_level=level)
        predicted = sorted(node.level for node in diagram.nodes if node.level > 0)
        weight = h(cc, label.r, label.s)
        found = []
        for n in range(1, level + 1):
            kernel = singular_vectors(cc.c, weight, n)
            found.extend([n] * len(kernel))
        if found != predicted:
            mismatches.append(f"{label}: diagram {predicted}, kernels {found}")
    return not mismatches, "singular levels match the diagram", "; ".join(mismatches) or "all match"


def check_cofinite_dimension(cc: CentralCharge, level: int) -> CheckOutcome:
    mismatches = []
    for label in (KacLabel(1, 1), KacLabel(1, 2), KacLabel(1, 3), KacLabel(2, 2), KacLabel(2, 3)):
        rs = label.r * label.s
        if rs > level:
            continue
        dim = c1_cofinite_dimension(cc.c, h(cc, label.r, label.s), rs, rs)
        if dim != rs:
            mismatches.append(f"{label}: {dim} != {rs}")
    return not mismatches, "cofinite dimension = rs", "; ".join(mismatches) or "all equal rs"


def check_kac_dimensions(cc: CentralCharge, level: int) -> CheckOutcome:
    levels = min(level, 8)
    mismatches = []
    for r in range(1, 6):
        for s in range(1, 6):
            if r > cc.p and s > cc.q:
                continue
            dims = kac_basis(cc, r, s, levels).dims
            if dims != _kac_formula(r, s, levels):
                mismatches.append(f"K({r},{s}): {dims}")
    return not mismatches, "dims = p(n) - p(n-rs)", "; ".join(mismatches) or "all match"


def check_kac_structures(cc: CentralCharge, level: int) -> CheckOutcome:
    levels = min(level, 8)
    mismatches = []
    for r in range(1, 9):
        for s in range(1, 9):
            structure = kac_structure(cc, r, s)
            if structure.length != expected_kac_length(cc, r, s):
                mismatches.append(f"K({r},{s}) length {structure.length}")
            if r <= cc.p or s <= cc.q:
                character = composition_character(cc, structure, h(cc, r, s), levels)
                if character != _kac_formula(r, s, levels):
                    mismatches.append(f"K({r},{s}) character {character}")
    return not mismatches, "closed-form lengths and Kac characters", "; ".join(mismatches) or "all match"


def check_fock_characters(cc: CentralCharge, level: int) -> CheckOutcome:
    levels = min(level, 8)
    expected = [partition_count(n) for n in range(levels + 1)]
    mismatches = []
    for r in range(1, 7):
        for s in range(1, 7):
            structure = ff_structure(cc, r, s, levels)
            character = composition_character(cc, structure, h(cc, r, s), levels)
            if character != expected:
                mismatches.append(f"F({r},{s}): {character}")
    return not mismatches, f"p(n) = {expected}", "; ".join(mismatches) or "all match"


def check_fock_surjectivity(cc: CentralCharge, level: int) -> CheckOutcome:
    levels = min(level, 6)
    pairs = [
        (KacLabel(1, 2), KacLabel(1, 1)),
        (KacLabel(1, 2), KacLabel(3, 4)),
        (KacLabel(2, 1), KacLabel(1, 3)),
    ]
    mismatches = []
    for left, right in pairs:
        image = kac_image_graded_dims(cc, left, right, levels)
        target = kac_target_dims(cc, left, right, levels)
        if image != target:
            mismatches.append(f"{left}x{right}: image {image}, target {target}")
    return not mismatches, "image dims = Kac target dims", "; ".join(mismatches) or "all match"


def check_primary_condition(cc: CentralCharge, level: int) -> CheckOutcome:
    failures = []
    for r in range(1, 6):
        for s in range(1, 6):
            label = KacLabel(r, s)
            for target in allowed_targets(cc, label):
                if not target.admissible:
                    if descent_predicted(cc, label, target.branch):
                        failures.append(f"{label} {target.branch.value}: inadmissible but predicted to descend")
                    continue
                coeffs = build_primary_coefficients(cc, label, target.branch, level)
                if not (verify_primary_condition(coeffs, level) and verify_recursion_identity(coeffs)):
                    failures.append(f"{label} {target.branch.value}")
    return not failures, "primary condition and recursion identity hold", "; ".join(failures) or "all hold"


def check_descent(cc: CentralCharge, level: int) -> CheckOutcome:
    failures = []
    checked = 0
    for r in range(1, 7):
        for s in range(1, 7):
            if r * s > 6 or (r > cc.p and s > cc.q):
                continue
            label = KacLabel(r, s)
            for target in allowed_targets(cc, label):
                target_level = target.target_label.r * target.target_label.s
                if not target.admissible or target_level > level:
                    continue
                if not descent_predicted(cc, label, target.branch):
                    continue
                coeffs = build_primary_coefficients(cc, label, target.branch, level)
                checked += 1
                if not descends_to_kac_quotient(coeffs, level):
                    failures.append(f"{label} {target.branch.value}")
    return not failures, "predicted descents hold", "; ".join(failures) or f"{checked} descents hold"


def check_grothendieck(cc: CentralCharge, level: int) -> CheckOutcome:
    bound = 8 if cc.p * cc.q <= 6 else 6
    report = check_grothendieck_consistency(cc, bound, bound, levels=min(level, 8))
    return report.passed, f"all identities for r,s <= {bound}", report.first_failure or f"passed {report.checks}"


def check_bpz(cc: CentralCharge, level: int) -> CheckOutcome:
    failures = []
    tolerance = mp.mpf(2) ** -200
    for p in (3, 5, 7):
        if not verify_bpz_hypergeometric(p, 40).is_zero():
            failures.append(f"p={p}: non-zero residual")
        with mp.workprec(256):
            numeric, partial = bpz_numeric_check(p, Fraction(1, 4))
            if abs(numeric - partial) > tolerance:
                failures.append(f"p={p}: hyp2f1 differs from the exact series")
    return not failures, "zero residual through order 38", "; ".join(failures) or "all zero"


def check_rigidity(cc: CentralCharge, level: int) -> CheckOutcome:
    failures = []
    with mp.workprec(256):
        tight = mp.mpf(2) ** -200
        reference = rigidity_constants(central_charge(2, 3))
        if abs(reference.R_pairing + 1) > tight or abs(reference.d_K12 - 1) > tight:
            failures.append("(2,3) constants")
        if abs(rigidity_constants(CentralCharge(3, 2)).d_K12) > tight:
            failures.append("q=2 dimension")
        expected = -128 / (45 * mp.pi)
        if abs(rigidity_constants(CentralCharge(3, 2)).R_pairing - expected) > mp.mpf(2) ** -100:
            failures.append("q=2 pairing")
        if abs(q2_pairing_from_lowest_order(3) - expected) > mp.mpf(2) ** -100:
            failures.append("q=2 lowest-order rebuild")
        constants = rigidity_constants(cc)
        if abs(constants.d_K12 + 2 * mp.cos(cc.p * mp.pi / cc.q)) > tight:
            failures.append(f"d(K12) at ({cc.p},{cc.q})")
    return not failures, "constants within tolerance", "; ".join(failures) or "all within tolerance"


CHECKS: Dict[str, Callable[[CentralCharge, int], CheckOutcome]] = {
    "bpz_hypergeometric": check_bpz,
    "cofinite_dimension": check_cofinite_dimension,
    "embedding_diagram_levels": check_embedding_levels,
    "fock_characters": check_fock_characters,
    "fock_surjectivity": check_fock_surjectivity,
    "grothendieck_consistency": check_grothendieck,
    "intertwiner_descent": check_descent,
    "intertwiner_primary_condition": check_primary_condition,
    "kac_dimensions": check_kac_dimensions,
    "kac_structures": check_kac_structures,
    "rigidity_constants": check_rigidity,
    "singular_vector_h12": check_singular_h12,
    "verma_brackets": check_verma_brackets,
}


def verify_all(cc: CentralCharge, level: int) -> VerifyReport:
    """Run every acceptance check for c_{p,q}; the report is sorted by check name"""
    report = VerifyReport(p=cc.p, q=cc.q, level=level)
    for name in sorted(CHECKS):
        start = time.perf_counter()
        try:
            ok, expected, actual = CHECKS[name](cc, level)
        except Exception as e:
            ok, expected, actual = False, "no error", f"{type(e).__name__}: {str(e)}"
        elapsed = time.perf_counter() - start
        status = "pass" if ok else "fail"
        if ok:
            logger.info(f"✅ {name} passed in {elapsed:.2f}s")
        else:
            logger.error(f"❌ {name} failed in {elapsed:.2f}s: {actual}")
        report.checks.append(CheckResult(name=name, status=status, expected=expected, actual=actual, elapsed=elapsed))
    return report
