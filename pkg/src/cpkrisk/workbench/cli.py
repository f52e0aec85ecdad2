"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .. import __version__
from .._errors import CpkRiskError, InputError
from ..amplification import amplification_from_z, amplification_normal
from ..reliability import RULES, DecisionPolicy, bootstrap_reliability
from ..samplesize import DEFAULT_N_MAX, bootstrap_pass_curve, n_min_search, pass_curve
from ..statcore import SeedSpec
from .emit import render_curves, render_reports, sidecar_path, write_sidecar
from .io import convert_wide, ingest, load_fixture
from .report import analyze_dataset, dimension_seed

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2

logger = logging.getLogger("cpkrisk")


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p, *, fmt=("json", "csv"), B=False, R=False):
    p.add_argument("--c0", type=float, default=1.33, help="capability threshold (default 1.33)")
    p.add_argument("--gamma", type=float, default=0.95, help="reliability target (default 0.95)")
    p.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
    if B:
        p.add_argument("--B", type=int, default=2000, help="bootstrap resamples (default 2000)")
    if R:
        p.add_argument("--R", type=int, default=5000, help="Monte Carlo replications (default 5000)")
    p.add_argument("--format", choices=fmt, default=fmt[0])
    p.add_argument("--out", type=Path, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cpkrisk", description="Capability, defect-risk amplification and decision reliability.")
    ap.add_argument("--version", action="version", version=f"cpkrisk {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="validation table for every dimension of a dataset")
    p.add_argument("data", nargs="?", type=Path, help="long-form CSV (default: bundled fixture)")
    p.add_argument("--rule", choices=RULES, default="point_threshold")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    _common(p, B=True)

    p = sub.add_parser("passcurve", help="probability of pass against sample size")
    p.add_argument("--cpk", type=float, nargs="+", default=[1.00, 1.33, 1.67], help="true capabilities")
    p.add_argument("--n", type=int, nargs="+", default=[5, 10, 20, 40, 80, 160], help="sample-size grid")
    p.add_argument("--data", type=Path, help="bootstrap curve from this dataset instead of normal MC")
    p.add_argument("--dim", help="dimension id (with --data)")
    p.add_argument("--B", type=int, default=2000, help="bootstrap resamples (with --data)")
    _common(p, fmt=("svg", "csv", "json"), R=True)

    p = sub.add_parser("samplesize", help="minimum n reaching the reliability target")
    p.add_argument("--cpk", type=float, nargs="+", required=True, help="true capabilities")
    p.add_argument("--n-max", type=int, default=DEFAULT_N_MAX)
    _common(p, R=True)

    p = sub.add_parser("amplify", help="amplification coefficient profile")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--cpk", type=float, nargs="+")
    g.add_argument("--z", type=float, nargs="+")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("bootstrap", help="bootstrap decision reliability for one dimension")
    p.add_argument("data", nargs="?", type=Path, help="long-form CSV (default: bundled fixture)")
    p.add_argument("--dim", required=True)
    p.add_argument("--rule", choices=RULES, default="point_threshold")
    _common(p, B=True)

    p = sub.add_parser("convert", help="wide (one column per dimension) to long-form CSV")
    p.add_argument("src", type=Path)
    p.add_argument("--out", type=Path, required=True)
    return ap


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _records(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _dataset(path):
    return load_fixture() if path is None else ingest(path)


def _find(dataset, dim_id):
    for d in dataset:
        if d.dimension_id == dim_id:
            return d
    raise InputError(f"dimension {dim_id!r} not in dataset")


def _policy(a, rule="point_threshold"):
    return DecisionPolicy(c0=a.c0, gamma=a.gamma, rule=rule)


def cmd_analyze(a) -> int:
    reports = analyze_dataset(_dataset(a.data), _policy(a, a.rule), B=a.B, seed=a.seed, n_jobs=a.jobs)
    _write(render_reports(reports, a.format), a.out)
    if a.out is not None:
        write_sidecar(a.out)
        logger.info("conventions written to %s", sidecar_path(a.out))
    failed = [r.dim for r in reports if r.error]
    for r in reports:
        if r.error:
            print(f"{r.dim}: {r.error}", file=sys.stderr)
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_passcurve(a) -> int:
    seed = SeedSpec(a.seed)
    if a.data is not None:
        if not a.dim:
            raise InputError("--data needs --dim")
        batch, spec = _find(ingest(a.data), a.dim)
        curves = [bootstrap_pass_curve(batch, spec, a.c0, a.n, B=a.B, seed=dimension_seed(a.seed, a.dim))]
    else:
        curves = [pass_curve(c, a.c0, a.n, R=a.R, seed=seed.child(i)) for i, c in enumerate(a.cpk)]
    _write(render_curves(curves, a.format, gamma=a.gamma), a.out)
    return EXIT_OK


def cmd_samplesize(a) -> int:
    rows = []
    for i, c in enumerate(a.cpk):
        res = n_min_search(c, a.c0, a.gamma, R=a.R, n_max=a.n_max, seed=SeedSpec(a.seed).child(i))
        rows.append(
            {"cpk_true": c, "c0": a.c0, "gamma": a.gamma, "n_min": res.n_min, "status": res.status,
             "reason": res.reason, "R": a.R, "seed": a.seed}
        )
    _write(_records(rows, a.format), a.out)
    return EXIT_OK


def cmd_amplify(a) -> int:
    profs = [amplification_normal(c) for c in a.cpk] if a.cpk else [amplification_from_z(z) for z in a.z]
    rows = [{"cpk": p.cpk_equiv, "z": p.z, "mills_ratio": p.mills, "a_sigma": p.a_sigma} for p in profs]
    _write(_records(rows, a.format), a.out)
    return EXIT_OK


def cmd_bootstrap(a) -> int:
    batch, spec = _find(_dataset(a.data), a.dim)
    seed = dimension_seed(a.seed, a.dim)
    rel = bootstrap_reliability(batch, spec, _policy(a, a.rule), B=a.B, seed=seed)
    row = {
        "dim": a.dim, "n": batch.n, "cpk": rel.cpk_point, "p_hat": rel.p_hat, "lcb": rel.lcb,
        "decision": rel.decision, "rule": rel.rule_used, "B": rel.b_resamples,
        "n_degenerate": rel.n_degenerate, "c0": a.c0, "gamma": a.gamma,
        "seed_root": seed.root_seed, "seed_stream": seed.stream_id, "lcb_convention": rel.lcb_convention,
    }
    _write(_records([row], a.format), a.out)
    return EXIT_OK


def cmd_convert(a) -> int:
    n = convert_wide(a.src, a.out)
    logger.info("wrote %d records to %s", n, a.out)
    return EXIT_OK


_COMMANDS = {
    "analyze": cmd_analyze,
    "passcurve": cmd_passcurve,
    "samplesize": cmd_samplesize,
    "amplify": cmd_amplify,
    "bootstrap": cmd_bootstrap,
    "convert": cmd_convert,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return _COMMANDS[args.command](args)
    except (InputError, OSError) as exc:
        print(f"cpkrisk: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CpkRiskError, ArithmeticError, ValueError) as exc:
        print(f"cpkrisk: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
