"""Command-line entry point: ``membandit {run,oracle,bounds,spectrum}``.

Exit codes: 0 success, 2 configuration error, 3 ledger budget violation,
4 out-of-regime bound request.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .core import BudgetViolation, MatrixRewardModel
from .harness.bounds import BOUND_KINDS, theoretical_bound
from .harness.oracles import arm_totals, shifting_benchmark
from .harness.runner import (
    AuditError,
    ConfigError,
    ExperimentConfig,
    curves_csv,
    fmt,
    run_experiment,
    write_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_REGIME = 0, 2, 3, 4


def _overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--T", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--V", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")


def _apply_overrides(d: dict, args) -> dict:
    d = json.loads(json.dumps(d))
    adv = d.setdefault("adversary", {})
    if args.T is not None:
        d["T"] = args.T
    if args.K is not None:
        if adv.get("kind") == "bernoulli":
            raise ConfigError("--K cannot resize a Bernoulli adversary; edit its means")
        adv["K"] = args.K
    if args.M is not None:
        if "M" in adv:
            adv["M"] = args.M
        for p in d.get("policies", []):
            if p.get("M") is not None or p.get("kind") in ("ucbm", "exp3m"):
                p["M"] = args.M
    if args.V is not None:
        if "V" in adv:
            adv["V"] = args.V
        reg = d.setdefault("regret", {"kind": "weak"})
        if reg.get("kind") == "shifting":
            reg["V"] = args.V
        for p in d.get("policies", []):
            if "V" in p.get("params", {}):
                p["params"]["V"] = args.V
    if args.runs is not None:
        d["replications"] = args.runs
    if args.seed is not None:
        d["seed"] = args.seed
    if args.out is not None:
        d["out"] = args.out
    return d


def _emit(text: str, out) -> None:
    if out:
        write_csv(text, out)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    cfg = ExperimentConfig.from_dict(_apply_overrides(raw, args))
    curves = run_experiment(cfg, workers=args.workers)
    _emit(curves_csv(curves), cfg.out)
    return EXIT_OK


def _load_matrix(path: str) -> MatrixRewardModel:
    try:
        if path.endswith(".npy"):
            m = np.load(path)
        else:
            m = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read reward matrix {path}: {exc}") from None
    try:
        return MatrixRewardModel(m)
    except ValueError as exc:
        raise ConfigError(f"invalid reward matrix {path}: {exc}") from None


def cmd_oracle(args) -> int:
    model = _load_matrix(args.matrix)
    t = model.T if args.t is None else args.t
    if not 1 <= t <= model.T:
        raise ConfigError(f"--t must lie in [1, {model.T}]")
    totals = arm_totals(model, [t])[0]
    report = {
        "T": model.T,
        "K": model.K,
        "t": t,
        "best_arm": int(np.argmax(totals)),
        "weak_benchmark": float(totals.max()),
    }
    if args.V:
        report["shifting_benchmark"] = {
            str(v): float(shifting_benchmark(model, v, [t])[0]) for v in args.V
        }
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_bounds(args) -> int:
    kinds = [args.kind] if args.kind else list(BOUND_KINDS)
    status = EXIT_OK
    print("kind,value,in_regime")
    for kind in kinds:
        needs_v = kind in ("shifting", "shifting_unknownV", "exp3s")
        needs_d = kind in ("weak_highprob", "exp3p")
        if not args.kind and ((needs_v and args.V is None) or (needs_d and args.delta is None)):
            continue
        try:
            b = theoretical_bound(kind, args.T, args.K, V=args.V, delta=args.delta)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        print(f"{kind},{fmt(b.value)},{str(b.in_regime).lower()}")
        if not b.in_regime:
            print(f"{kind}: out of regime ({b.note})", file=sys.stderr)
            status = EXIT_REGIME
    return status


def cmd_spectrum(args) -> int:
    from .spectrum import SpectrumConfig, run_spectrum, spectrum_csv

    d = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    for flag, key in (("T", "T"), ("K", "channels"), ("M", "memory"), ("runs", "replications"),
                      ("seed", "seed"), ("out", "out"), ("agents", "agents")):
        v = getattr(args, flag)
        if v is not None:
            d[key] = v
    cfg = SpectrumConfig.from_dict(d)
    _emit(spectrum_csv(run_spectrum(cfg)), cfg.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="membandit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a regret experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=1)
    _overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle", help="benchmarks for a stored reward matrix (.npy or .csv, T x K)")
    p.add_argument("--matrix", required=True)
    p.add_argument("--V", type=int, nargs="*", default=[])
    p.add_argument("--t", type=int)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bounds", help="print theoretical regret bounds")
    p.add_argument("--kind", choices=BOUND_KINDS)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--V", type=float)
    p.add_argument("--delta", type=float)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("spectrum", help="multi-agent spectrum access under jamming")
    p.add_argument("--config")
    p.add_argument("--agents", type=int)
    _overrides(p)
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:  # ConfigError included
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetViolation, AuditError) as exc:
        print(f"ledger budget violation: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    raise SystemExit(main())
