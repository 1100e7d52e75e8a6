"""
Command-line front end: argparse subcommands dispatched to src.routes.commands
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from src.config import Settings, get_settings
from src.models.schemas import SUBCOMMANDS, Command
from src.routes.commands import EXIT_USAGE, dispatch, render_text

logger = logging.getLogger(__name__)

COMMON_FIELDS = ("p", "q", "r", "s", "level", "branch", "precision")


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--p", type=int, help="central charge parameter p (VIRASORO_P)")
    parser.add_argument("--q", type=int, help="central charge parameter q (VIRASORO_Q)")
    parser.add_argument("--level", type=int, help="grading level (VIRASORO_LEVEL, default 8)")
    parser.add_argument("--precision", type=int, help="binary precision in bits (VIRASORO_PRECISION, default 256)")
    parser.add_argument("--format", choices=("json", "text"), default="json")


def _add_label(parser: argparse.ArgumentParser):
    parser.add_argument("--r", type=int, required=True)
    parser.add_argument("--s", type=int, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="virasoro",
        description="Exact computations with Virasoro Kac modules at central charge c_{p,q}",
    )
    sub = parser.add_subparsers(dest="command", metavar="|".join(SUBCOMMANDS))
    sub.required = True

    table = sub.add_parser("table", help="Kac table weights h_{r,s}")
    _add_common(table)
    table.add_argument("--rmax", type=int)
    table.add_argument("--smax", type=int)

    singular = sub.add_parser("singular", help="singular vectors of V_{r,s} at a level")
    _add_common(singular)
    _add_label(singular)

    diagram = sub.add_parser("diagram", help="embedding diagram of V_{r,s}")
    _add_common(diagram)
    diagram.add_argument("--r", type=int)
    diagram.add_argument("--s", type=int)
    diagram.add_argument("--weight", help="a bare weight h as a fraction, instead of --r/--s")
    diagram.add_argument("--depth", type=int, default=2)

    char = sub.add_parser("char", help="graded characters of V_{r,s}, its Kac quotient and L_{r,s}")
    _add_common(char)
    _add_label(char)
    char.add_argument("--which", choices=("verma", "kac", "simple"))

    kac_structure = sub.add_parser("kac-structure", help="composition structure of K_{r,s}")
    _add_common(kac_structure)
    _add_label(kac_structure)
    kac_structure.add_argument("--fock", action="store_true", help="structure of F_{r,s} instead")

    kac_dims = sub.add_parser("kac-dims", help="graded dimensions of K_{r,s}")
    _add_common(kac_dims)
    _add_label(kac_dims)

    intertwiner = sub.add_parser("intertwiner", help="primary field coefficients of Y(v_{1,2}, z) v_{r,s}")
    _add_common(intertwiner)
    _add_label(intertwiner)
    intertwiner.add_argument("--branch", choices=("plus", "minus"), default="plus")
    intertwiner.add_argument("--verify", action="store_true")

    fock_image = sub.add_parser("fock-image", help="graded image of the Fock intertwiner on Kac modules")
    _add_common(fock_image)
    _add_label(fock_image)
    fock_image.add_argument("--r2", type=int, required=True)
    fock_image.add_argument("--s2", type=int, required=True)

    bpz = sub.add_parser("bpz", help="hypergeometric solution of the q=2 BPZ equation")
    _add_common(bpz)
    bpz.add_argument("--order", type=int, default=40)

    sub_constants = sub.add_parser("constants", help="rigidity constants and intrinsic dimensions")
    _add_common(sub_constants)

    fuse = sub.add_parser("fuse", help="Grothendieck class of a fusion product")
    _add_common(fuse)
    _add_label(fuse)
    fuse.add_argument("--left", choices=("k12", "k21", "kr1"), default="k12")
    fuse.add_argument("--simple", action="store_true", help="fuse with L_{r,s} instead of K_{r,s}")

    zhu = sub.add_parser("zhu", help="Zhu-algebra constraint on the lowest weight space")
    _add_common(zhu)
    _add_label(zhu)
    zhu.add_argument("--first", choices=("k12", "k21"), default="k12")

    rigidity = sub.add_parser("rigidity", help="rigidity status of K_{r,s}")
    _add_common(rigidity)
    _add_label(rigidity)

    consistency = sub.add_parser("consistency", help="Grothendieck-ring consistency sweep")
    _add_common(consistency)
    consistency.add_argument("--rmax", type=int, default=6)
    consistency.add_argument("--smax", type=int, default=6)

    verify = sub.add_parser("verify", help="run the acceptance suite")
    _add_common(verify)

    return parser


def parse_command(argv: List[str], settings: Optional[Settings] = None) -> Command:
    """Parse argv into a Command; p, q and precision fall back to settings

    Raises:
        SystemExit: on argparse usage errors (code 2)
    """
    settings = settings or get_settings()
    args = vars(build_parser().parse_args(argv))
    name = args.pop("command")
    output_format = args.pop("format")
    fields: Dict[str, Any] = {key: args.pop(key, None) for key in COMMON_FIELDS}
    if fields["p"] is None:
        fields["p"] = settings.default_p
    if fields["q"] is None:
        fields["q"] = settings.default_q
    if fields["precision"] is None:
        fields["precision"] = settings.precision
    return Command(name=name, format=output_format, options=args, **fields)


def run(argv: Optional[List[str]] = None, settings: Optional[Settings] = None) -> int:
    """Parse, dispatch and print; returns 0 on success, 1 on a failed check, 2 on usage errors"""
    settings = settings or get_settings()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        command = parse_command(argv, settings)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    data = command.model_dump(exclude={"name", "format", "options"})
    data.update(command.options)
    data["default_level"] = settings.level
    data["level_cap"] = settings.verma_level_cap
    logger.debug(f"Dispatching {command.name} with {data}")

    payload, status = dispatch(command.name, data)
    if status == EXIT_USAGE and "error" in payload:
        print(f"error: {payload['error']}", file=sys.stderr)
        return status

    if command.format == "text":
        print("\n".join(render_text(payload)))
    else:
        print(json.dumps(payload, indent=2))
    return status
