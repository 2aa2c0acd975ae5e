"""Command-line front end: ``fedosov {build,star,strata,verify}``.

Exit codes: 0 when every check in the report passed, 1 when some check failed,
2 for unreadable or inconsistent input.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from .chart import (
    Chart,
    check_connection_invariance,
    chart_to_dict,
    is_fully_symmetric,
    is_torsionfree,
    load_chart,
    poisson_bracket,
    symplectize_connection,
)
from .engine import conventions, solve_chart, star_series
from .errors import FedosovError, FlatnessError, GroupBoundError, ParseError, StructuralError
from .groups import check_symplectic_action, orbit_type_stratification
from .scalar import I
from .text import format_poly, parse_poly
from .verify import run_property_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--chart", required=True, help="chart description (JSON)")
    common.add_argument("--n-max", type=int, default=None, help="override the chart's truncation degree")
    common.add_argument("--seed", type=int, default=0, help="seed for random samples (echoed in every report)")
    common.add_argument("--samples", type=int, default=50, help="number of random samples for property checks")
    common.add_argument("--json", action="store_true", help="emit JSON instead of a text table")
    common.add_argument(
        "--flip-pi",
        action="store_true",
        help="debug: use the opposite sign of the Poisson tensor in the Moyal product",
    )
    common.add_argument(
        "--symplectize",
        action="store_true",
        help="correct a torsionfree Christoffel input to a symplectic connection first",
    )

    p = argparse.ArgumentParser(prog="fedosov", description="Fedosov star products on linear symplectic orbifold charts.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="solve for r and check Omega = -omega")
    star = sub.add_parser("star", parents=[common], help="star product coefficients of two polynomials")
    star.add_argument("f")
    star.add_argument("g")
    star.add_argument("--orders", type=int, default=None, help="highest lambda-order to print")
    sub.add_parser("strata", parents=[common], help="orbit-type stratification of the chart group")
    sub.add_parser("verify", parents=[common], help="run the property suite")
    return p


def _load(args) -> Chart:
    try:
        chart = load_chart(args.chart, args.n_max, -1 if not args.flip_pi else 1)
    except OSError as exc:
        raise InputError(f"cannot read chart file: {exc}") from None
    if args.symplectize:
        if not is_torsionfree(chart.christoffel):
            raise InputError("--symplectize needs a torsionfree connection (Gamma_ijk symmetric in i, j)")
        chart = chart.with_christoffel(symplectize_connection(chart.christoffel, chart))
    return chart


def _base_report(args, chart: Chart) -> dict:
    return {
        "command": args.command,
        "chart": chart_to_dict(chart),
        "seed": args.seed,
        "conventions": conventions(chart.policy),
    }


def _precheck(chart: Chart, report: dict) -> bool:
    """Group and connection checks shared by build, star and verify."""
    action = check_symplectic_action(chart.group)
    report["symplectic_action"] = action.to_dict()
    if not action.ok:
        return False
    if not is_fully_symmetric(chart.christoffel):
        raise InputError("Christoffel symbols are not fully symmetric; pass --symplectize for a torsionfree input")
    invariance = check_connection_invariance(chart)
    report["connection_invariance"] = invariance.to_dict()
    return invariance.ok


def cmd_build(args) -> tuple[dict, bool]:
    chart = _load(args)
    report = _base_report(args, chart)
    if not _precheck(chart, report):
        return report, False
    try:
        data = solve_chart(chart)
    except FlatnessError as exc:
        report["omega_residual"] = str(exc)
        return report, False
    report["build"] = data.summary()
    return report, report["build"]["flat"]


def cmd_star(args) -> tuple[dict, bool]:
    chart = _load(args)
    report = _base_report(args, chart)
    f = parse_poly(args.f, chart.dim)
    g = parse_poly(args.g, chart.dim)
    if not _precheck(chart, report):
        return report, False
    try:
        data = solve_chart(chart)
    except FlatnessError as exc:
        report["omega_residual"] = str(exc)
        return report, False
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fg = star_series(f, g, data, args.orders)
        gf = star_series(g, f, data, args.orders)
    bracket = poisson_bracket(f, g)
    commutator = [a - b for a, b in zip(fg.mu, gf.mu)]
    # order 0 must commute; order 1 is i{f,g} when the truncation reaches it
    dq2 = not commutator[0] and (len(commutator) < 2 or commutator[1] == bracket * I)
    report["star"] = {
        "f": format_poly(f),
        "g": format_poly(g),
        "safe_k": data.safe_k,
        "coefficients": [format_poly(p) for p in fg.mu],
        "commutator": [format_poly(p) for p in commutator],
        "i_times_bracket": format_poly(bracket * I),
        "commutator_matches_bracket": dq2,
        "warnings": [str(w.message) for w in caught],
    }
    return report, dq2


def cmd_strata(args) -> tuple[dict, bool]:
    chart = _load(args)
    report = _base_report(args, chart)
    strata = orbit_type_stratification(chart.group)
    report["group_order"] = chart.group.order
    report["strata"] = [d.to_dict() for d in strata]
    return report, True


def cmd_verify(args) -> tuple[dict, bool]:
    chart = _load(args)
    report = _base_report(args, chart)
    if not _precheck(chart, report):
        return report, False
    data, error = None, None
    try:
        data = solve_chart(chart)
    except FlatnessError as exc:
        error = exc
    suite = run_property_suite(data, chart, args.seed, args.samples, error)
    report["verify"] = suite
    return report, suite["ok"]


COMMANDS = {"build": cmd_build, "star": cmd_star, "strata": cmd_strata, "verify": cmd_verify}


# -- text rendering -------------------------------------------------------------------


def _table(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def _render_text(report: dict, ok: bool) -> str:
    lines = [f"command: {report['command']}", f"seed: {report['seed']}"]
    conv = report["conventions"]
    lines.append(
        f"conventions: pi_sign={conv['pi_sign']} delta_sign_in_D={conv['delta_sign_in_D']} "
        f"moyal_constant={conv['moyal_constant']}"
    )
    for key in ("symplectic_action", "connection_invariance"):
        if key in report and not report[key]["ok"]:
            lines.append(f"{key}: FAILED {json.dumps(report[key]['violations'])}")
    if "omega_residual" in report:
        lines.append(f"flatness: FAILED {report['omega_residual']}")
    if "build" in report:
        b = report["build"]
        lines += [
            f"n_max: {b['n_max']} (work {b['work_n_max']})",
            f"group order: {b['group_order']}",
            f"iterations: {b['iterations']}",
            f"deg_F(r): {b['r_fedosov_degree']}",
            f"Omega + omega: {b['omega_residual']}",
        ]
    if "star" in report:
        s = report["star"]
        rows = [["k", "mu_k(f,g)", "mu_k(f,g) - mu_k(g,f)"]]
        rows += [[str(k), c, d] for k, (c, d) in enumerate(zip(s["coefficients"], s["commutator"]))]
        lines.append(_table(rows))
        lines.append(f"i*{{f,g}}: {s['i_times_bracket']}  matches: {s['commutator_matches_bracket']}")
        lines += [f"warning: {w}" for w in s["warnings"]]
    if "strata" in report:
        rows = [["isotropy_order", "class_size", "fixed_dim", "principal"]]
        rows += [
            [str(d["isotropy_order"]), str(d["class_size"]), str(d["fixed_dim"]), "yes" if d["principal"] else "no"]
            for d in report["strata"]
        ]
        lines.append(_table(rows))
    if "verify" in report:
        rows = [["check", "checked", "result"]]
        for name, entry in sorted(report["verify"]["checks"].items()):
            rows.append([name, str(entry["checked"]), "pass" if entry["passed"] else "FAIL"])
        lines.append(_table(rows))
        for name, entry in sorted(report["verify"]["checks"].items()):
            if not entry["passed"]:
                lines.append(f"counterexample for {name}: {json.dumps(entry['counterexample'])}")
    lines.append("result: " + ("ok" if ok else "FAILED"))
    return "\n".join(lines)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        report, ok = COMMANDS[args.command](args)
    except (InputError, ParseError, StructuralError, GroupBoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FedosovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    report["ok"] = ok
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(_render_text(report, ok))
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
