"""Command-line entry point.

Config files are flat ``key = value`` text with ``#`` comments; keys are the
field names of :class:`SweepConfig` (``sweep``) or :class:`OracleCheckConfig`
(``oracle-check``). Integer lists accept ``16,32,48`` or ``start:stop:step``
(stop inclusive).
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import typing

import numpy as np

from . import __version__
from .allocation import SCHEMES, AllocationProblem, brute_force_alloc
from .channel import db_to_linear
from .quantizer import ConvergenceError, bussgang_check, design_lloyd_max
from .simulation import (
    ALL_SCHEMES,
    OracleCheckConfig,
    SweepConfig,
    run_oracle_check,
    run_sweep,
    summarize,
)

SCHEME_ALIASES = {
    "jbp": "JBP",
    "ub": "UB",
    "greedy": "Greedy",
    "unaware": "UnawareWF",
    "unawarewf": "UnawareWF",
    "oracle": "Oracle",
    "ideal": "Ideal",
}


class CliError(Exception):
    pass


def _canonical_scheme(name: str) -> str:
    key = name.strip().lower()
    if key not in SCHEME_ALIASES:
        raise ValueError(f"unknown scheme {name.strip()!r}")
    return SCHEME_ALIASES[key]


def _int_list(text: str) -> tuple:
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError("range must be start:stop:step with a positive step")
        start, stop, step = parts
        return tuple(range(start, stop + 1, step))
    return tuple(int(p) for p in text.split(",") if p.strip())


def _parse_value(name: str, default, text: str):
    if name == "schemes":
        return tuple(_canonical_scheme(p) for p in text.split(",") if p.strip())
    if name == "bit_budgets":
        return _int_list(text)
    if isinstance(default, bool):
        low = text.strip().lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text.strip()!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        value = float(text)
        if not math.isfinite(value):
            raise ValueError("value must be finite")
        return value
    if isinstance(default, tuple):
        return tuple(float(p) for p in text.split(",") if p.strip())
    return text.strip()


def load_config(path, cls):
    """Read a ``key = value`` file into the dataclass ``cls``.

    Every problem is reported as a :class:`CliError` naming the offending key.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except FileNotFoundError:
        raise CliError(f"config not found: {path}") from None
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from None

    defaults = {f.name: f.default for f in dataclasses.fields(cls)}
    values = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, text = line.partition("=")
        key = key.strip()
        if not sep:
            raise CliError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        if key not in defaults:
            raise CliError(f"{path}:{lineno}: unknown key '{key}'")
        if key in values:
            raise CliError(f"{path}:{lineno}: duplicate key '{key}'")
        try:
            values[key] = _parse_value(key, defaults[key], text)
        except ValueError as exc:
            raise CliError(f"{path}:{lineno}: invalid value for key '{key}': {exc}") from None
    try:
        return cls(**values)
    except ValueError as exc:
        # validation messages start with the offending key
        raise CliError(f"{path}: invalid config: {exc}") from None


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fhquant",
        description="Bit and power allocation for fronthaul-quantized MIMO streams.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("design-quantizer", help="design a Lloyd-Max quantizer for a unit Gaussian")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--max-iterations", type=int, default=10_000)

    p = sub.add_parser("validate-bussgang", help="Monte-Carlo check of the Bussgang identities")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--snr-db", type=float, default=0.0, help="P|h|^2/sigma^2 with P = h = 1")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("allocate", help="allocate bits and power for one set of singular values")
    p.add_argument("--singulars", type=_floats, required=True, help="descending, comma separated")
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--noise", type=float, required=True)
    p.add_argument("--bits", type=int, required=True, help="total bit budget")
    p.add_argument("--scheme", default="jbp", choices=["jbp", "ub", "greedy", "unaware", "oracle"])
    p.add_argument("--grid-resolution", type=int, default=20, help="oracle power grid")

    p = sub.add_parser("sweep", help="Monte-Carlo sweep over bit budgets, CSV output")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.add_argument("--workers", type=int, help="override the config's worker count")
    p.add_argument("--quiet", action="store_true", help="do not print the summary table")

    p = sub.add_parser("oracle-check", help="compare heuristics to the exhaustive oracle")
    p.add_argument("--config", required=True)
    return parser


def _cmd_design(args) -> int:
    try:
        cb = design_lloyd_max(args.bits, args.tolerance, args.max_iterations)
    except ConvergenceError as exc:
        raise CliError(str(exc)) from None
    print(cb.to_record())
    return 0


def _cmd_bussgang(args) -> int:
    cb = design_lloyd_max(args.bits)
    noise_var = 1.0 / db_to_linear(args.snr_db)
    rep = bussgang_check(cb, 1.0, 1.0, noise_var, args.samples, args.seed)
    beta = cb.distortion
    print(f"bits={cb.bits}")
    print(f"beta={beta:.12g}")
    print(f"expected_gain={1 - beta:.12g}")
    print(f"estimated_gain={rep.estimated_gain.real:.12g}{rep.estimated_gain.imag:+.12g}j")
    print(f"gain_error={abs(rep.estimated_gain - (1 - beta)):.6g}")
    print(f"cross_correlation_x_eta={abs(rep.cross_correlation_x_eta):.6g}")
    print(f"output_power_ratio={rep.output_power_ratio:.12g}")
    print(f"samples={rep.sample_count}")
    return 0


def _cmd_allocate(args) -> int:
    problem = AllocationProblem(np.array(args.singulars), args.power, args.noise, args.bits)
    scheme = SCHEME_ALIASES[args.scheme]
    if scheme == "Oracle":
        alloc = brute_force_alloc(problem, args.grid_resolution)
    else:
        alloc = SCHEMES[scheme](problem)
    print(alloc.describe())
    total_p = float(np.sum(alloc.powers))
    if abs(total_p - args.power) > 1e-8 * args.power or int(np.sum(alloc.bits)) != args.bits:
        raise CliError(
            f"budget violated: sum(p)={total_p:.12g} (want {args.power:.12g}), "
            f"sum(b)={int(np.sum(alloc.bits))} (want {args.bits})"
        )
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config, SweepConfig)
    if args.workers is not None:
        try:
            config = dataclasses.replace(config, workers=args.workers)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    result = run_sweep(config)
    if args.output:
        try:
            result.write_csv(args.output)
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc.strerror}") from None
        if not args.quiet:
            print(summarize(result))
    else:
        sys.stdout.write(result.to_csv())
    return 0


def _cmd_oracle(args) -> int:
    config = load_config(args.config, OracleCheckConfig)
    result = run_oracle_check(config)
    print(result.summary())
    violations = result.dominance_violations()
    print("dominance_violations=" + ",".join(f"{k}:{v}" for k, v in violations.items()))
    if any(violations.values()):
        raise CliError("a heuristic exceeded the oracle")
    return 0


COMMANDS = {
    "design-quantizer": _cmd_design,
    "validate-bussgang": _cmd_bussgang,
    "allocate": _cmd_allocate,
    "sweep": _cmd_sweep,
    "oracle-check": _cmd_oracle,
}


def main(argv: typing.Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"fhquant {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ConvergenceError) as exc:
        print(f"fhquant {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
