"""Command-line entry point: ``chaoscalc <subcommand> ...``.

Exit codes: 0 success, 1 a check or criterion failed, 2 bad input.
Results go to standard output (or --out files), diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config
from .algebra import absolute_continuity_verdict, cross_check_dependence, find_annihilator
from .errors import ChaosCalcError, ConfigError, DimensionMismatch, OrderMismatch, RangeError
from .harness import SCENARIOS, run_scenario, verify_identities
from .rng import Rng

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
# errors that mean the input itself is malformed
INPUT_ERRORS = (ConfigError, DimensionMismatch, OrderMismatch, RangeError)


def _err(msg: str):
    print(msg, file=sys.stderr)


def _report_checks(result) -> int:
    for c in result.checks:
        _err(c.line())
    # no wall-clock time here, so repeated runs print identical bytes
    _err(f"{result.scenario}: {'ok' if result.ok else 'FAILED'} ({len(result.checks)} checks)")
    return EXIT_OK if result.ok else EXIT_FAIL


def cmd_verify(args) -> int:
    result = verify_identities(args.seed, args.samples)
    sys.stdout.write(result.summary_json())
    return _report_checks(result)


def cmd_ac_verdict(args) -> int:
    data = config.load(args.config)
    F = config.parse_vector(data)
    seed = args.seed if args.seed is not None else int(data.get("seed", 1))
    m = args.samples if args.samples is not None else int(data.get("samples", 10_000))
    rng = Rng(seed)
    if args.cross_check:
        report = cross_check_dependence(F, rng, m)
        print(report.summary())
    else:
        v = absolute_continuity_verdict(F, m, rng)
        print(f"{v.verdict.value}: E[det Gamma]={v.det_mean:.6g} (+/- {v.det_stderr:.3g}), "
              f"zero fraction {v.zero_fraction:.4g} over {v.samples} samples (seed {seed})")
    return EXIT_OK


def cmd_annihilate(args) -> int:
    data = config.load(args.polys)
    polys = config.parse_polynomials(data)
    cap = args.degree_cap if args.degree_cap is not None else data.get("degree_cap")
    seed = args.seed if args.seed is not None else int(data.get("seed", 1))
    H = find_annihilator(polys, None if cap is None else int(cap), Rng(seed))
    if H is None:
        print("no annihilating polynomial up to the degree cap (family is algebraically independent)")
        return EXIT_OK
    print(f"H(t) = {H.format('t')}")
    for exps, c in H.to_pairs():
        print(f"{list(exps)} {c!r}")
    return EXIT_OK


def cmd_scenario(args) -> int:
    data = config.load(args.config) if args.config else {}
    data = dict(data)
    data["scenario"] = args.name
    for key in ("t_max", "samples", "seed", "gamma", "bins", "support_cap", "repetitions"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    cfg = config.ScenarioConfig.from_mapping(data)
    result = run_scenario(cfg)
    if args.out:
        out = Path(args.out)
        out.write_text(result.csv_text())
        out.with_suffix(".json").write_text(result.summary_json())
        _err(f"wrote {out} and {out.with_suffix('.json')}")
    else:
        sys.stdout.write(result.summary_json())
    return _report_checks(result)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chaoscalc", description="Finite Wiener chaos calculus toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify-identities", help="closed forms against Monte Carlo")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--samples", type=int, default=100_000)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("ac-verdict", help="absolute-continuity verdict for a chaos vector")
    s.add_argument("config")
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--cross-check", action="store_true",
                   help="also run Jacobian rank and annihilator search and require agreement")
    s.set_defaults(func=cmd_ac_verdict)

    s = sub.add_parser("annihilate", help="search for an annihilating polynomial")
    s.add_argument("polys")
    s.add_argument("--degree-cap", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_annihilate)

    s = sub.add_parser("scenario", help="run a seeded convergence scenario")
    s.add_argument("name", choices=sorted(SCENARIOS))
    s.add_argument("--config", help="YAML/JSON file with scenario settings")
    s.add_argument("--t-max", dest="t_max", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--bins", type=int)
    s.add_argument("--support-cap", dest="support_cap", type=int)
    s.add_argument("--repetitions", type=int)
    s.add_argument("--out", help="CSV path; a JSON summary is written next to it")
    s.set_defaults(func=cmd_scenario)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        _err(f"error [{exc.code}]: {exc}")
        return EXIT_CONFIG
    except ChaosCalcError as exc:
        _err(f"failed [{exc.code}]: {exc}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
