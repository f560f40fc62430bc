"""Command-line front end: ``roe-calc <subcommand> [flags]``.

Exit codes: 0 when every check passes, 1 when a check fails (the report is
still written), 2 for unreadable or structurally invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from . import __version__
from .almost_isometry import (
    PartialMap,
    defect,
    extract_close_map,
    glue_from_map,
    near_identity_check,
)
from .catalog import RNG_NAME, dzero_family, idem_scenario, nonupper_scenario, resolve, sparse_line
from .errors import EmptySupportError, StructuralError
from .metric import (
    GlueMetric,
    adjoint_glue,
    compose_glue,
    identity_glue,
    meet_glue,
    self_isometries,
    validate_glue,
)
from .operators import (
    band_decompose,
    compose,
    factor_through,
    operator_norm,
    propagation,
    support_degree,
)
from .order import (
    FAILS,
    HOLDS,
    ObstructionCertificate,
    close_pair_matching,
    domination_profile,
    equivalence_check,
    family_profile,
    idempotent_check,
    inv_semi_check,
    order_check,
    selfadjoint_check,
    upper_bound_feasibility,
)
from .serialize import dumps, load, round_sig, to_json, validation_of

PASS, FAIL, INPUT_ERROR = 0, 1, 2


class InputError(Exception):
    """Input that cannot be used; carries an optional report for stdout."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# input resolution ----------------------------------------------------------

def _obtain(value: str, kind: str, *, check=True):
    """Load ``value`` as a JSON file if it exists, else as a catalog reference."""
    if value is None:
        raise InputError(f"missing --{kind} argument")
    if Path(value).is_file():
        obj = load(value, kind)
        if check:
            report = validation_of(obj)
            if report is not None and not report.ok:
                first = report.violations[0]
                raise InputError(
                    f"{value}: invalid {kind}: {first.kind} violation at {list(first.witness)}",
                    report.to_dict(),
                )
        return obj
    if kind == "operator":
        raise InputError(f"operator file not found: {value}")
    return resolve(value, kind)


def _family(value: str, max_n):
    """A family reference, with ``--max-n`` filling in a missing size."""
    if value is None:
        raise InputError("missing family argument")
    try:
        return resolve(value, "family")
    except StructuralError:
        if max_n is None:
            raise
        return resolve(f"{value}:{max_n}", "family")


def _radii(text):
    if text is None:
        return None
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"radii must be a comma list of numbers, got {text!r}")
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise argparse.ArgumentTypeError("radii must be a nonempty increasing list")
    return tuple(values)


def _need(value, flag):
    if value is None:
        raise InputError(f"{flag} is required")
    return value


# subcommands ----------------------------------------------------------------
# Each returns (report, ok): a JSON-ready dict and whether the check passed.

def cmd_validate(a):
    for kind in ("space", "glue", "map", "operator"):
        value = getattr(a, kind)
        if value is not None:
            obj = _obtain(value, kind, check=False)
            report = validation_of(obj)
            if not report.ok:
                first = report.violations[0]
                raise InputError(
                    f"{value}: {first.kind} violation at {list(first.witness)}: "
                    f"{first.lhs} > {first.rhs}",
                    {"kind": kind, **report.to_dict()},
                )
            return {"kind": kind, **report.to_dict()}, True
    raise InputError("validate needs one of --space, --glue, --map, --operator")


def _glue_result(g: GlueMetric):
    report = validate_glue(g)
    return {"glue": to_json(g), "validation": report.to_dict()}, report.ok


def cmd_compose(a):
    return _glue_result(compose_glue(_obtain(_need(a.g1, "--g1"), "glue"), _obtain(_need(a.g2, "--g2"), "glue")))


def cmd_dzero(a):
    return _glue_result(identity_glue(_obtain(_need(a.space, "--space"), "space")))


def cmd_adjoint(a):
    return _glue_result(adjoint_glue(_obtain(_need(a.glue, "--glue"), "glue")))


def cmd_meet(a):
    return _glue_result(meet_glue(_obtain(_need(a.g1, "--g1"), "glue"), _obtain(_need(a.g2, "--g2"), "glue")))


def cmd_from_map(a):
    return _glue_result(glue_from_map(_obtain(_need(a.map, "--map"), "map"), a.epsilon))


def cmd_defect(a):
    rep = defect(_obtain(_need(a.map, "--map"), "map"))
    ok = a.bound is None or rep.defect <= a.bound
    return {"defect": rep.defect, "witness": list(rep.witness) if rep.witness else None}, ok


def cmd_extract_map(a):
    result = extract_close_map(_obtain(_need(a.glue, "--glue"), "glue"), _need(a.bound, "--bound"))
    if isinstance(result, PartialMap):
        rep = defect(result)
        return {"found": True, "pairs": [list(p) for p in result.pairs], "defect": rep.defect}, True
    return {"found": False, "witness": result.witness, "nearest": result.nearest, "bound": result.bound}, False


def cmd_near_identity(a):
    rep = near_identity_check(_obtain(_need(a.glue, "--glue"), "glue"))
    return rep.to_dict(), rep.holds


def _operator_glue(a, T):
    if a.glue is not None:
        return _obtain(a.glue, "glue")
    if T.source == T.target:
        return T.source
    raise InputError("--glue is required for operators between different spaces")


def cmd_band_decompose(a):
    T = _obtain(_need(a.operator, "--operator"), "operator")
    metric = _operator_glue(a, T) if (a.glue is not None or T.source == T.target) else None
    dec = band_decompose(T)
    bands = []
    for i, band in enumerate(dec.bands):
        op = band.operator()
        bands.append({
            "band": i,
            "support": len(band),
            "propagation": propagation(op, metric) if metric is not None else None,
        })
    exact = dec.reassemble() == T
    degree = support_degree(T)
    report = {"count": dec.count, "max_degree": degree, "exact": exact, "bands": bands}
    return report, exact and dec.count <= max(degree, 0)


def cmd_factor(a):
    T = _obtain(_need(a.operator, "--operator"), "operator")
    g_xy = _obtain(_need(a.g1, "--g1"), "glue")
    g_yz = _obtain(_need(a.g2, "--g2"), "glue")
    fac = factor_through(T, g_xy, g_yz)
    g_xz = compose_glue(g_xy, g_yz)
    pieces, ok = [], True
    for k, piece in enumerate(fac.pieces):
        band_op = piece.band.operator()
        exact = compose(piece.S, piece.R) == band_op
        prop_r = propagation(piece.R, g_xy)
        prop_s = propagation(piece.S, g_yz)
        target = propagation(band_op, g_xz)
        within = max(prop_r, prop_s) <= target + 1 + 1e-9
        ok = ok and exact and within
        pieces.append({"piece": k, "support": len(piece.band), "exact": exact,
                       "prop_R": prop_r, "prop_S": prop_s, "prop_band": target})
    relay = [[x, y] for x, y in fac.relay.items()]
    return {"injective": fac.injective, "relay": relay, "pieces": pieces}, ok


def cmd_propagation(a):
    T = _obtain(_need(a.operator, "--operator"), "operator")
    value = propagation(T, _operator_glue(a, T))
    ok = a.bound is None or value < a.bound
    return {"propagation": value, "bound": a.bound}, ok


def cmd_norm(a):
    T = _obtain(_need(a.operator, "--operator"), "operator")
    value = operator_norm(T)
    ok = a.bound is None or value <= a.bound
    return {"norm": value, "bound": a.bound}, ok


def _profile_rows(profile):
    return [{"n": n, "R": r, "h": h} for n, r, h in profile.rows()]


def cmd_profile(a):
    try:
        g, gp = _obtain(_need(a.g1, "--g1"), "glue"), _obtain(_need(a.g2, "--g2"), "glue")
        profile = domination_profile(g, gp, a.radii)
    except StructuralError:
        profile = family_profile(_family(a.g1, a.max_n), _family(a.g2, a.max_n), a.radii)
    rows = _profile_rows(profile)
    return {"direction": profile.direction, "rows": rows}, True


def cmd_order_check(a):
    v = order_check(_family(_need(a.g1, "--g1"), a.max_n), _family(_need(a.g2, "--g2"), a.max_n),
                    a.radii, a.threshold)
    return v.to_dict(), v.relation == HOLDS


def cmd_equiv_check(a):
    v = equivalence_check(_family(_need(a.g1, "--g1"), a.max_n), _family(_need(a.g2, "--g2"), a.max_n),
                          a.radii, a.threshold)
    return v.to_dict(), v.relation == "equivalent"


def cmd_inv_semi(a):
    rep = inv_semi_check(_obtain(_need(a.glue, "--glue"), "glue"))
    return rep.to_dict(), rep.holds


def cmd_idempotent(a):
    rep = idempotent_check(_family(_need(a.glue, "--glue"), a.max_n), a.threshold)
    return rep.to_dict(), rep.verdict == "idempotent"


def cmd_selfadjoint(a):
    rep = selfadjoint_check(_family(_need(a.glue, "--glue"), a.max_n), a.threshold)
    return rep.to_dict(), rep.verdict == "selfadjoint"


def cmd_join_feasible(a):
    g1 = _obtain(_need(a.g1, "--g1"), "glue")
    g2 = _obtain(_need(a.g2, "--g2"), "glue")
    result = upper_bound_feasibility(g1, g2, _need(a.bound, "--bound"))
    if isinstance(result, ObstructionCertificate):
        return {"feasible": False, "certificate": result.to_dict()}, False
    return {"feasible": True, "glue": to_json(result), "validation": validate_glue(result).to_dict()}, True


def cmd_close_pairs(a):
    m = close_pair_matching(_obtain(_need(a.glue, "--glue"), "glue"), _need(a.bound, "--bound"))
    return m.to_dict(), True


# demos ------------------------------------------------------------------------

def demo_idem(n, a):
    fam = idem_scenario(n)
    d0 = dzero_family(n)
    sa = selfadjoint_check(fam)
    idem = idempotent_check(fam)
    fwd = order_check(fam, d0, a.radii)
    bwd = order_check(d0, fam, a.radii)
    matchings = [close_pair_matching(fam[k], 1.0).size for k in fam.indices]
    ok = (sa.exact and idem.verdict == "idempotent" and idem.bound == 0.5
          and fwd.relation == HOLDS and bwd.relation == FAILS)
    return {
        "max_n": n,
        "selfadjoint": sa.to_dict(),
        "idempotent": idem.to_dict(),
        "order_df_below_dzero": fwd.to_dict(),
        "order_dzero_below_df": bwd.to_dict(),
        "equivalent_to_dzero": False if bwd.relation == FAILS else None,
        "close_pairs_within_1": {"indices": list(fam.indices), "sizes": matchings},
    }, ok


def demo_nonupper(n, a):
    bound = a.bound if a.bound is not None else 3.0
    g1 = resolve(f"df:id:{n}", "glue")
    g2 = resolve(f"df:neg:{n}", "glue")
    result = upper_bound_feasibility(g1, g2, bound)
    control = upper_bound_feasibility(identity_glue(g1.left), identity_glue(g1.left), bound)
    f1, f2 = nonupper_scenario(n)
    eq = equivalence_check(f1, f2, a.radii)
    obstructed = isinstance(result, ObstructionCertificate)
    control_ok = isinstance(control, GlueMetric) and validate_glue(control).ok
    return {
        "max_n": n,
        "bound": bound,
        "certificate": result.to_dict() if obstructed else None,
        "control_feasible": control_ok,
        "equivalence": eq.to_dict(),
    }, obstructed and control_ok


def demo_sparse_line(n, a):
    mirrored = sparse_line(n)
    literal = sparse_line(n, "literal")
    rep = defect(mirrored.reflection)
    small = min(n, 6)
    space = sparse_line(small).space
    isos = self_isometries(space)
    identity_only = isos == [space.points]
    return {
        "max_n": n,
        "defect": rep.defect,
        "defect_witness": list(rep.witness) if rep.witness else None,
        "injective": mirrored.injective,
        "isometry_search_n": small,
        "isometries": len(isos),
        "identity_only": identity_only,
        "literal_convention": {"injective": literal.injective, "injective_up_to": literal.injective_up_to},
    }, identity_only and mirrored.injective


DEMOS = {"idem": (demo_idem, 50), "nonupper": (demo_nonupper, 10), "sparse-line": (demo_sparse_line, 20)}


def cmd_demo(a):
    fn, default_n = DEMOS[a.name]
    return fn(a.max_n or default_n, a)


COMMANDS = {
    "validate": cmd_validate,
    "compose": cmd_compose,
    "dzero": cmd_dzero,
    "adjoint": cmd_adjoint,
    "meet": cmd_meet,
    "from-map": cmd_from_map,
    "defect": cmd_defect,
    "extract-map": cmd_extract_map,
    "near-identity": cmd_near_identity,
    "band-decompose": cmd_band_decompose,
    "factor": cmd_factor,
    "propagation": cmd_propagation,
    "norm": cmd_norm,
    "profile": cmd_profile,
    "order-check": cmd_order_check,
    "equiv-check": cmd_equiv_check,
    "inv-semi": cmd_inv_semi,
    "idempotent": cmd_idempotent,
    "selfadjoint": cmd_selfadjoint,
    "join-feasible": cmd_join_feasible,
    "close-pairs": cmd_close_pairs,
    "demo": cmd_demo,
}


# scenario files -----------------------------------------------------------------

SCENARIO_FIELDS = {"name", "operation", "inputs", "parameters", "outputs"}
_INPUT_FLAGS = {"space", "glue", "g1", "g2", "map", "operator"}
_PARAM_FLAGS = {"seed", "radii", "bound", "epsilon", "max_n", "format", "threshold", "demo"}
_OUTPUT_FLAGS = {"output"}


def scenario_argv(doc, base: Path) -> list:
    """Translate a scenario document into an argument list."""
    if not isinstance(doc, dict):
        raise InputError("scenario must be a JSON object")
    unknown = set(doc) - SCENARIO_FIELDS
    if unknown:
        raise InputError(f"scenario: unknown field(s) {', '.join(sorted(unknown))}")
    op = doc.get("operation")
    if op not in COMMANDS:
        raise InputError(f"scenario: unknown operation {op!r}")
    argv = [op]
    params = dict(doc.get("parameters", {}))
    if op == "demo":
        argv.append(str(params.pop("demo", "idem")))
    for section, allowed in (("inputs", _INPUT_FLAGS), ("parameters", _PARAM_FLAGS), ("outputs", _OUTPUT_FLAGS)):
        values = params if section == "parameters" else doc.get(section, {})
        if not isinstance(values, dict):
            raise InputError(f"scenario.{section}: expected an object")
        bad = set(values) - allowed
        if bad:
            raise InputError(f"scenario.{section}: unknown field(s) {', '.join(sorted(bad))}")
        for key, value in values.items():
            if section == "inputs" and (base / str(value)).is_file():
                value = str(base / str(value))
            if section == "outputs":
                value = str(base / str(value))
            if key == "radii" and isinstance(value, list):
                value = ",".join(str(v) for v in value)
            argv += [f"--{key.replace('_', '-')}", str(value)]
    return argv


# output -------------------------------------------------------------------------

def _csv_text(report) -> str:
    rows = report.get("rows")
    if rows is None:
        rows = report.get("bands")
    if rows is None:
        raise InputError("csv output is only available for profile and band-decompose")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["n", "R", "h"], lineterminator="\n")
    writer.writeheader()
    for row in round_sig(rows):
        writer.writerow({k: "" if v is None else v for k, v in row.items()})
    return buf.getvalue()


def _render(command, report, fmt) -> str:
    if fmt == "csv":
        return _csv_text(report)
    if command == "band-decompose" and fmt == "text":
        lines = [f"{b['band']}\t{b['support']}\t{round_sig(b['propagation'])}" for b in report["bands"]]
        return "\n".join(lines) + "\n"
    return dumps(report) + "\n"


def _write(text, output, argv, ok):
    if output is None:
        sys.stdout.write(text)
        return
    path = Path(output)
    path.write_text(text)
    meta = {
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "version": __version__,
        "rng": RNG_NAME,
        "argv": list(argv),
        "passed": ok,
    }
    Path(f"{output}.meta.json").write_text(json.dumps(meta, indent=1) + "\n")


HELP = {
    "validate": "check a space, glue or map file for metric violations",
    "compose": "min-plus composition of --g1 then --g2",
    "dzero": "identity glue (distance + 1) on --space",
    "adjoint": "transpose of --glue",
    "meet": "pointwise max of --g1 and --g2",
    "from-map": "glue induced by --map",
    "defect": "almost-isometry defect of --map",
    "extract-map": "recover a map from --glue within --bound",
    "near-identity": "smallest L with d0 - L - 1 <= g <= d0 + L - 1",
    "band-decompose": "split --operator into width-1 bands",
    "factor": "factor a band of --operator through --g1 and --g2",
    "propagation": "propagation of --operator with respect to --glue",
    "norm": "operator norm of --operator",
    "profile": "domination profile of --g1 against --g2",
    "order-check": "is --g1 dominated by --g2 across the family",
    "equiv-check": "domination in both directions",
    "inv-semi": "g <= g g* g <= 3g for --glue",
    "idempotent": "g g versus g for a glue family",
    "selfadjoint": "g* versus g for a glue family",
    "join-feasible": "common upper bound for --g1 and --g2 within --bound",
    "close-pairs": "pairs at cross distance within --bound",
    "demo": "built-in worked examples",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roe-calc", description="Glue metrics, almost isometries and finite-propagation operators.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="scenario JSON file; its fields replace the other flags")
    common.add_argument("--output", help="write the report here (metadata goes to <output>.meta.json)")
    common.add_argument("--space")
    common.add_argument("--glue", help="glue file or catalog ref (family ref for idempotent/selfadjoint)")
    common.add_argument("--g1")
    common.add_argument("--g2")
    common.add_argument("--map")
    common.add_argument("--operator", help="operator JSON file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--radii", type=_radii)
    common.add_argument("--bound", type=float)
    common.add_argument("--epsilon", type=float, default=1.0)
    common.add_argument("--max-n", type=int)
    common.add_argument("--threshold", type=float, default=2.0, help="growth ratio for fails-growing")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None)

    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=HELP[name])
        if name == "demo":
            p.add_argument("name", choices=sorted(DEMOS))
    sub.add_parser("run", parents=[common], help="execute a scenario file given with --input")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else PASS
    if args.command is None:
        parser.print_help(sys.stderr)
        return INPUT_ERROR
    try:
        if args.input is not None:
            path = Path(args.input)
            try:
                doc = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read scenario {path}: {exc}")
            argv = scenario_argv(doc, path.parent)
            try:
                args = parser.parse_args(argv)
            except SystemExit:
                return INPUT_ERROR
        if args.command == "run":
            raise InputError("run needs --input <scenario.json>")
        fmt = args.format or ("text" if args.command == "band-decompose" else "json")
        report, ok = COMMANDS[args.command](args)
        text = _render(args.command, report, fmt)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.report is not None:
            sys.stdout.write(dumps(exc.report) + "\n")
        return INPUT_ERROR
    except (StructuralError, EmptySupportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    _write(text, args.output, argv, ok)
    return PASS if ok else FAIL


if __name__ == "__main__":
    sys.exit(main())
