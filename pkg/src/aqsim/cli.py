"""``aqsim`` command line: ``run``, ``demo`` and ``validate-scheme``.

Exit codes: 0 success, 1 runtime error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .experiment import (
    DEMO_SEED,
    FORMATS,
    ConfigError,
    build_config,
    demo_configs,
    emit_report,
    parse_config,
    parse_scheme,
    run,
)
from .qotp import validate_encryption_set

log = logging.getLogger("aqsim")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError("arguments", message)


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", help=f"one of {', '.join(FORMATS)}")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--timing", action="store_true", help="include wall-clock duration in json output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aqsim", description="Arbitrated quantum signature simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one seeded batch of trials")
    p.add_argument("--config", help="flat key=value file; flags override its values")
    p.add_argument("--n")
    p.add_argument("--trials")
    p.add_argument("--seed")
    p.add_argument("--scheme", help="pauli | ih | uv:U,V")
    p.add_argument("--variant", help="A | B")
    p.add_argument("--test-mode", dest="test_mode", help="projective | swap")
    p.add_argument(
        "--attack",
        help="none | pauli:XZ.. | pauli-adapted:XZ.. | ma-exchange:0,1 | ma-exchange-z:0 | permutation:1,0 | symmetric-demo",
    )
    p.add_argument("--message", help="random | zero | plus")
    p.add_argument("--per-trial", dest="per_trial", action="store_const", const="true")
    _add_output(p)

    p = sub.add_parser("demo", help="the four headline experiments with fixed seeds")
    p.add_argument("--seed", default=str(DEMO_SEED))
    p.add_argument("--n", default="4")
    p.add_argument("--trials", default="1000")
    _add_output(p)

    p = sub.add_parser("validate-scheme", help="check an encryption scheme's operator set")
    p.add_argument("--scheme", required=True, help="pauli | ih | uv:U,V")
    p.add_argument("--subset", help="comma-separated operator indices to keep (0-3)")
    p.add_argument("--probs", help="comma-separated probabilities (default: uniform)")
    p.add_argument("--format", default="table", help="table | json")
    return parser


def _cmd_run(args) -> int:
    flags = {k: getattr(args, k) for k in ("n", "trials", "seed", "scheme", "variant", "test_mode",
                                           "attack", "message", "per_trial", "format", "out")}
    config, out = parse_config(flags, args.config)
    log.info("running %s", config)
    report = run(config)
    emit_report(report, out["format"], out["out"], include_timing=args.timing)
    return EXIT_OK


def _cmd_demo(args) -> int:
    config, out = build_config(
        {"n": args.n, "trials": args.trials, "seed": args.seed, "scheme": "pauli",
         "format": args.format, "out": args.out}
    )
    reports = [run(c) for c in demo_configs(config.seed, config.n, config.trials)]
    emit_report(reports, out["format"], out["out"], include_timing=args.timing)
    return EXIT_OK


def _cmd_validate(args) -> int:
    scheme = parse_scheme(args.scheme)
    ops = scheme.operator_set()
    if args.subset:
        try:
            keep = [int(k) for k in args.subset.split(",")]
            ops = [ops[k] for k in keep]
        except (ValueError, IndexError):
            raise ConfigError("subset", f"expected indices in 0-3, got {args.subset!r}") from None
    if args.probs:
        try:
            probs = [float(p) for p in args.probs.split(",")]
        except ValueError:
            raise ConfigError("probs", f"expected numbers, got {args.probs!r}") from None
        if len(probs) != len(ops):
            raise ConfigError("probs", f"{len(probs)} probabilities for {len(ops)} operators")
    else:
        probs = [1 / len(ops)] * len(ops)
    check = validate_encryption_set(ops, probs)
    if args.format == "json":
        gram = None if check.gram is None else np.round(check.gram.real, 12).tolist()
        print(json.dumps({"scheme": args.scheme, "valid": check.valid, "reasons": check.reasons,
                          "gram_real": gram}, indent=2, sort_keys=True))
    elif args.format == "table":
        print(f"scheme {args.scheme}: {'valid' if check.valid else 'INVALID'} ({len(ops)} operators)")
        for reason in check.reasons:
            print(f"  - {reason}")
        if check.gram is not None:
            print("Hilbert-Schmidt Gram matrix Tr(U_j^dag U_k):")
            print(np.array2string(np.round(check.gram, 9), precision=3, suppress_small=True))
    else:
        raise ConfigError("format", f"expected table or json, got {args.format!r}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        handler = {"run": _cmd_run, "demo": _cmd_demo, "validate-scheme": _cmd_validate}[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"aqsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"aqsim: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - report any module failure as a runtime error
        log.debug("runtime failure", exc_info=True)
        print(f"aqsim: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
