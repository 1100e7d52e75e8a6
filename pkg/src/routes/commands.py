"""
Subcommand handlers: each takes a request dict and returns (payload, exit status)
"""

import logging
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from mpmath.libmp import prec_to_dps

from src.models.schemas import (
    format_class,
    format_coefficients,
    format_decimal,
    format_fraction,
    format_label,
    parse_fraction,
)
from src.services.errors import InvalidParameters, LevelTooSmall
from src.services.fock import ff_structure, kac_basis, kac_structure, ModuleStructure
from src.services.fusion import (
    FusionOutcome,
    check_grothendieck_consistency,
    double_braiding_phase,
    fuse_k12_kac,
    fuse_k12_simple,
    fuse_k21_kac,
    fuse_k21_simple,
    fuse_kr1_k1s,
    kac_resolution,
    rigidity_status,
    staggered_exponent,
    zhu_constraint,
)
from src.services.intertwiner import (
    BranchChoice,
    allowed_targets,
    bpz_numeric_check,
    build_primary_coefficients,
    descends_to_kac_quotient,
    descent_predicted,
    hypergeometric_parameters,
    kac_image_graded_dims,
    kac_target_dims,
    q2_pairing_from_lowest_order,
    rigidity_constants,
    verify_bpz_hypergeometric,
    verify_primary_condition,
    verify_recursion_identity,
)
from src.services.kactable import (
    CentralCharge,
    KacLabel,
    canonical_label,
    central_charge,
    h,
    minimal_model_labels,
    weight_grid,
)
from src.services.verification import verify_all
from src.services.verma import (
    EmbeddingDiagram,
    characters,
    embedding_diagram,
    embedding_diagram_for_weight,
    level_basis,
    singular_vectors,
)

logger = logging.getLogger(__name__)

Payload = Dict[str, Any]
Response = Tuple[Payload, int]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


# =============================================
# REQUEST HELPERS
# =============================================

def _central_charge(data: Payload) -> CentralCharge:
    p, q = data.get("p"), data.get("q")
    if p is None or q is None:
        raise InvalidParameters("--p and --q are required (or set VIRASORO_P / VIRASORO_Q)")
    return central_charge(p, q)


def _label(data: Payload, r_key: str = "r", s_key: str = "s") -> KacLabel:
    r, s = data.get(r_key), data.get(s_key)
    if r is None or s is None:
        raise InvalidParameters(f"--{r_key} and --{s_key} are required")
    if r < 1 or s < 1:
        raise InvalidParameters(f"Kac labels need positive entries, got ({r},{s})")
    return KacLabel(r, s)


def _level(data: Payload, fallback: Optional[int] = None) -> int:
    """--level when given (0 included), else fallback, else the configured default"""
    for level in (data.get("level"), fallback, data.get("default_level")):
        if level is not None:
            if level < 0:
                raise InvalidParameters(f"Level must be non-negative, got {level}")
            return level
    return 8


def _option(data: Payload, key: str, default: Any) -> Any:
    value = data.get(key)
    return default if value is None else value


def _verma_level(data: Payload, level: int) -> int:
    cap = data.get("level_cap")
    if cap is not None and level > cap:
        raise InvalidParameters(f"Level {level} is above the Verma level cap {cap} (VIRASORO_LEVEL_CAP)")
    return level


def _header(cc: CentralCharge) -> Payload:
    return {"p": cc.p, "q": cc.q, "c": format_fraction(cc.c)}


def _digits(precision: int) -> int:
    return max(10, prec_to_dps(precision) - 5)


def _diagram_payload(diagram: EmbeddingDiagram) -> Payload:
    return {
        "case": diagram.case.value,
        "nodes": [
            {
                "label": format_label(node.label) if node.label else None,
                "weight": format_fraction(node.weight),
                "level": node.level,
                "layer": node.layer,
            }
            for node in diagram.nodes
        ],
        "arrows": [list(arrow) for arrow in diagram.arrows],
    }


def _structure_payload(structure: ModuleStructure) -> Payload:
    return {
        "kind": structure.kind.value,
        "case": structure.case.value if structure.case else None,
        "label": format_label(structure.label),
        "length": structure.length,
        "factors": [format_label(label) for label in structure.factors],
        "arrows": [list(arrow) for arrow in structure.arrows],
    }


def _outcome_payload(outcome: FusionOutcome) -> Payload:
    return {
        "factors": format_class(outcome.factors),
        "sequence": [format_label(label) for label in outcome.sequence] if outcome.sequence else None,
        "splits": outcome.splits,
        "logarithmic": outcome.logarithmic,
        "indecomposable": outcome.indecomposable,
        "socle": format_label(outcome.socle) if outcome.socle else None,
        "summands": [format_label(label) for label in outcome.summands],
        "notes": list(outcome.notes),
    }


# =============================================
# KAC TABLE AND VERMA MODULES
# =============================================

def table(data: Payload) -> Response:
    """Weight grid h_{r,s} plus the minimal-model labels"""
    cc = _central_charge(data)
    rmax = _option(data, "rmax", cc.p)
    smax = _option(data, "smax", cc.q)
    grid = weight_grid(cc, rmax, smax)
    payload = _header(cc)
    payload["t"] = format_fraction(cc.t)
    payload["rows"] = [
        {"r": r, "weights": [format_fraction(weight) for weight in row]}
        for r, row in enumerate(grid, start=1)
    ]
    payload["minimal_model"] = [format_label(label) for label in minimal_model_labels(cc)]
    return payload, EXIT_OK


def singular(data: Payload) -> Response:
    cc = _central_charge(data)
    label = _label(data)
    level = _verma_level(data, _level(data, label.r * label.s))
    weight = h(cc, label.r, label.s)
    found = singular_vectors(cc.c, weight, level)
    payload = _header(cc)
    payload.update({
        "label": format_label(label),
        "weight": format_fraction(weight),
        "level": level,
        "dimension": len(found),
        "vectors": [format_coefficients(vector.coeffs, level_basis(level)) for vector in found],
    })
    return payload, EXIT_OK


def diagram(data: Payload) -> Response:
    """Embedding diagram of V_{r,s}, or of V_h when a bare weight is given"""
    cc = _central_charge(data)
    depth = _option(data, "depth", 2)
    payload = _header(cc)
    if data.get("weight") is not None:
        weight = parse_fraction(data["weight"])
        payload["weight"] = format_fraction(weight)
        payload.update(_diagram_payload(embedding_diagram_for_weight(cc, weight, depth)))
        return payload, EXIT_OK
    label = _label(data)
    payload["label"] = format_label(canonical_label(cc, label.r, label.s))
    payload.update(_diagram_payload(embedding_diagram(cc, label, depth)))
    return payload, EXIT_OK


def char(data: Payload) -> Response:
    cc = _central_charge(data)
    label = _label(data)
    levels = _verma_level(data, _level(data))
    which = data.get("which") or "all"
    computed = characters(cc, label.r, label.s, levels)
    names = {"verma": "verma", "kac": "kac_quotient", "simple": "simple"}
    payload = _header(cc)
    payload["label"] = format_label(label)
    payload["levels"] = levels
    if which == "all":
        payload["characters"] = computed
    elif which in names:
        payload["characters"] = {names[which]: computed[names[which]]}
    else:
        raise InvalidParameters(f"Unknown character {which!r}; expected verma, kac or simple")
    if which in ("all", "simple"):
        try:
            payload["kac_resolution"] = [format_label(step) for step in kac_resolution(cc, label, 4)]
        except ValueError:
            payload["kac_resolution"] = None
    return payload, EXIT_OK


# =============================================
# FOCK AND KAC MODULES
# =============================================

def kac_structure_command(data: Payload) -> Response:
    """Composition structure of K_{r,s}, or of F_{r,s} with --fock"""
    cc = _central_charge(data)
    label = _label(data)
    payload = _header(cc)
    if data.get("fock"):
        structure = ff_structure(cc, label.r, label.s, _level(data))
    else:
        structure = kac_structure(cc, label.r, label.s)
    payload.update(_structure_payload(structure))
    return payload, EXIT_OK


def kac_dims(data: Payload) -> Response:
    cc = _central_charge(data)
    label = _label(data)
    level = _level(data)
    basis = kac_basis(cc, label.r, label.s, level)
    payload = _header(cc)
    payload.update({
        "label": format_label(label),
        "cutoff_weight": format_fraction(basis.cutoff_weight),
        "dims": basis.dims,
    })
    return payload, EXIT_OK


# =============================================
# INTERTWINING OPERATORS
# =============================================

def intertwiner(data: Payload) -> Response:
    """Coefficients phi_k of Y(v_{1,2}, z) v_{r,s} on one branch, optionally verified"""
    cc = _central_charge(data)
    label = _label(data)
    level = _level(data)
    try:
        branch = BranchChoice(data.get("branch") or "plus")
    except ValueError:
        raise InvalidParameters(f"Unknown branch {data.get('branch')!r}; expected plus or minus")

    coeffs = build_primary_coefficients(cc, label, branch, _verma_level(data, level))
    payload = _header(cc)
    payload.update({
        "label": format_label(label),
        "branch": branch.value,
        "h1": format_fraction(coeffs.h1),
        "h2": format_fraction(coeffs.h2),
        "target": format_label(coeffs.target_label),
        "exponent": format_fraction(coeffs.exponent),
        "targets": [
            {
                "branch": target.branch.value,
                "target": format_label(target.target_label),
                "weight": format_fraction(target.target_weight),
                "admissible": target.admissible,
            }
            for target in allowed_targets(cc, label)
        ],
        "phis": [
            {"level": k, "terms": format_coefficients(phi.coeffs, level_basis(k))}
            for k, phi in enumerate(coeffs.phis)
        ],
    })
    if not data.get("verify"):
        return payload, EXIT_OK

    primary = verify_primary_condition(coeffs, level)
    recursion = verify_recursion_identity(coeffs)
    predicted = descent_predicted(cc, label, branch)
    try:
        descends = descends_to_kac_quotient(coeffs, level)
    except LevelTooSmall as e:
        logger.info(f"Descent not checked: {str(e)}")
        descends = None
    payload["verification"] = {
        "primary_condition": primary,
        "recursion_identity": recursion,
        "descent_predicted": predicted,
        "descends": descends,
    }
    consistent = not (predicted and descends is False)
    status = EXIT_OK if primary and recursion and consistent else EXIT_CHECK_FAILED
    return payload, status


def fock_image(data: Payload) -> Response:
    cc = _central_charge(data)
    left = _label(data)
    right = _label(data, "r2", "s2")
    level = _level(data)
    image = kac_image_graded_dims(cc, left, right, level)
    target = kac_target_dims(cc, left, right, level)
    payload = _header(cc)
    payload.update({
        "left": format_label(left),
        "right": format_label(right),
        "image_dims": image,
        "target_dims": target,
        "surjective": image == target,
    })
    return payload, EXIT_OK


def bpz(data: Payload) -> Response:
    """Residual of the q=2 hypergeometric ODE and a numeric hyp2f1 comparison"""
    p = data.get("p")
    order = _option(data, "order", 40)
    precision = _option(data, "precision", 256)
    residual = verify_bpz_hypergeometric(p, order)
    a, b, c = hypergeometric_parameters(p)
    point = Fraction(1, 4)
    numeric, partial = bpz_numeric_check(p, point, precision)
    digits = _digits(precision)
    payload = {
        "p": p,
        "order": order,
        "parameters": {"a": format_fraction(a), "b": format_fraction(b), "c": format_fraction(c)},
        "residual_order": residual.order,
        "residual_zero": residual.is_zero(),
        "numeric": {
            "u": format_fraction(point),
            "hyp2f1": format_decimal(numeric, digits),
            "partial_sum": format_decimal(partial, digits),
            "precision": precision,
        },
    }
    return payload, EXIT_OK if residual.is_zero() else EXIT_CHECK_FAILED


def constants(data: Payload) -> Response:
    cc = _central_charge(data)
    precision = _option(data, "precision", 256)
    digits = _digits(precision)
    values = rigidity_constants(cc, precision)
    payload = _header(cc)
    payload.update({
        "precision": precision,
        "digits": digits,
        "R_pairing": format_decimal(values.R_pairing, digits),
        "R_pairing_mirror": format_decimal(values.R_pairing_mirror, digits),
        "d_K12": format_decimal(values.d_K12, digits),
        "d_K21": format_decimal(values.d_K21, digits),
    })
    if cc.q == 2:
        payload["R_pairing_lowest_order"] = format_decimal(q2_pairing_from_lowest_order(cc.p, precision), digits)
    return payload, EXIT_OK


# =============================================
# FUSION
# =============================================

def fuse(data: Payload) -> Response:
    """K_{1,2}, K_{2,1} or K_{r,1} fused with K_{r,s} (or L_{r,s} with --simple)"""
    cc = _central_charge(data)
    label = _label(data)
    left = data.get("left") or "k12"
    simple = bool(data.get("simple"))
    payload = _header(cc)
    payload.update({"left": left, "right": format_label(label), "simple": simple})

    if left == "kr1":
        if simple:
            raise InvalidParameters("--simple is only defined for k12 and k21")
        factors, _ = fuse_kr1_k1s(cc, label.r, label.s)
        payload["factors"] = format_class(factors)
        payload["result"] = format_label(label)
        return payload, EXIT_OK
    if left not in ("k12", "k21"):
        raise InvalidParameters(f"Unknown left factor {left!r}; expected k12, k21 or kr1")

    if simple:
        fuse_simple = fuse_k12_simple if left == "k12" else fuse_k21_simple
        outcome = fuse_simple(cc, label)
    else:
        fuse_kac = fuse_k12_kac if left == "k12" else fuse_k21_kac
        outcome = fuse_kac(cc, label.r, label.s)
    payload.update(_outcome_payload(outcome))

    if left == "k12" and not simple and outcome.logarithmic and 1 <= label.r <= cc.p:
        n = label.s // cc.q
        precision = _option(data, "precision", 256)
        phase = double_braiding_phase(cc, label.r, n, precision)
        digits = _digits(precision)
        payload["staggered"] = {
            "exponent": format_fraction(staggered_exponent(cc, label.r, n)),
            "double_braiding": {
                "re": format_decimal(phase.real, digits),
                "im": format_decimal(phase.imag, digits),
            },
        }
    return payload, EXIT_OK


def zhu(data: Payload) -> Response:
    cc = _central_charge(data)
    label = _label(data)
    first = data.get("first") or "k12"
    if first not in ("k12", "k21"):
        raise InvalidParameters(f"Unknown first factor {first!r}; expected k12 or k21")
    constraint = zhu_constraint(cc, first, label)
    payload = _header(cc)
    payload.update({
        "first": first,
        "label": format_label(label),
        "polynomial": [format_fraction(value) for value in constraint.coefficients],
        "roots": [format_fraction(root) for root in constraint.roots],
        "case": constraint.case.value,
    })
    return payload, EXIT_OK


def rigidity(data: Payload) -> Response:
    cc = _central_charge(data)
    label = _label(data)
    payload = _header(cc)
    payload.update({"label": format_label(label), "status": rigidity_status(cc, label).value})
    return payload, EXIT_OK


def consistency(data: Payload) -> Response:
    cc = _central_charge(data)
    rmax = _option(data, "rmax", 6)
    smax = _option(data, "smax", 6)
    levels = _level(data)
    report = check_grothendieck_consistency(cc, rmax, smax, levels=levels)
    payload = _header(cc)
    payload.update({
        "rmax": rmax,
        "smax": smax,
        "levels": levels,
        "passed": report.passed,
        "checks": dict(sorted(report.checks.items())),
        "first_failure": report.first_failure,
    })
    return payload, EXIT_OK if report.passed else EXIT_CHECK_FAILED


def verify(data: Payload) -> Response:
    cc = _central_charge(data)
    level = _level(data)
    report = verify_all(cc, level)
    return report.summary(), EXIT_OK if report.passed else EXIT_CHECK_FAILED


HANDLERS: Dict[str, Callable[[Payload], Response]] = {
    "table": table,
    "singular": singular,
    "diagram": diagram,
    "char": char,
    "kac-structure": kac_structure_command,
    "kac-dims": kac_dims,
    "intertwiner": intertwiner,
    "fock-image": fock_image,
    "bpz": bpz,
    "constants": constants,
    "fuse": fuse,
    "zhu": zhu,
    "rigidity": rigidity,
    "consistency": consistency,
    "verify": verify,
}


def dispatch(name: str, data: Payload) -> Response:
    """Run one handler; ValueErrors (VirasoroError included) become usage errors"""
    handler = HANDLERS.get(name)
    if handler is None:
        return {"error": f"Unknown subcommand {name!r}"}, EXIT_USAGE
    try:
        return handler(data)
    except ValueError as e:
        logger.error(f"Error running {name}: {str(e)}")
        return {"error": str(e)}, EXIT_USAGE


# =============================================
# TEXT RENDERING
# =============================================

def render_text(payload: Any, indent: int = 0) -> List[str]:
    """Plain "key: value" lines; nested structures are indented"""
    pad = "  " * indent
    lines: List[str] = []
    if isinstance(payload, dict):
        for key, value in payload.items():
            if isinstance(value, (dict, list)) and value:
                lines.append(f"{pad}{key}:")
                lines.extend(render_text(value, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_scalar_text(value)}")
    elif isinstance(payload, list):
        for item in payload:
            if isinstance(item, dict) and item and item.keys() <= {"r", "s", "mult"}:
                lines.append(f"{pad}- {_label_text(item)}")
            elif isinstance(item, (dict, list)):
                lines.append(f"{pad}-")
                lines.extend(render_text(item, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar_text(item)}")
    else:
        lines.append(f"{pad}{_scalar_text(payload)}")
    return lines


def _label_text(item: Dict[str, int]) -> str:
    text = f"({item.get('r')},{item.get('s')})"
    if "mult" in item:
        text += f" x{item['mult']}"
    return text


def _scalar_text(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (dict, list)):
        return "none"
    return str(value)
