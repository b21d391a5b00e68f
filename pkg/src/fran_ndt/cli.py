"""Command-line front end.

Exit codes: 0 ok, 1 usage or invalid input, 2 infeasible, 3 statistical
failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import os
import sys
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

from .errors import Infeasible, InvalidConfig, InvalidParameter
from .model import DemandVector, Mode, NetworkConfig, Scheme, Technique, parse_rational, validate_config
from .montecarlo import run_trials, summary_lines
from .ndt import AXES, INF, NdtBreakdown, delta, sweep
from .placement import classify_bits, place_en_caches, place_user_caches
from .scheduler import build_schedule, export_schedule

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_STATS = 0, 1, 2, 3
OUTPUT_DIR_ENV = "FRAN_NDT_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def decimal(x) -> str:
    """12 significant digits, locale independent."""
    if x == INF:
        return "inf"
    x = Fraction(x)
    with localcontext() as ctx:
        ctx.prec = 40
        d = Decimal(x.numerator) / Decimal(x.denominator)
    return format(d, ".12g")


def exact(x) -> str:
    return "inf" if x == INF else str(Fraction(x))


@dataclass(frozen=True)
class ExperimentSpec:
    cfg: NetworkConfig
    axis: str | None = None
    grid: tuple[Fraction, ...] = ()
    mode: Mode = Mode.SERIAL
    file_size: int | None = None
    trials: int | None = None
    seed: int | None = None
    out: str | None = None
    fmt: str = "csv"

    def check(self) -> "ExperimentSpec":
        validate_config(self.cfg)
        if self.axis is not None:
            if self.axis not in AXES:
                raise UsageError(f"--axis must be one of {', '.join(AXES)}")
            if not self.grid:
                raise UsageError("--grid must not be empty")
            if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
                raise UsageError("--grid must be strictly increasing")
            for x in self.grid:
                validate_config(self.cfg.replace(**{self.axis: x}))
        return self


def parse_grid(text: str) -> tuple[Fraction, ...]:
    try:
        return tuple(parse_rational(t) for t in text.split(",") if t.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--grid: cannot parse {text!r}") from None


def read_spec_file(path: str) -> dict[str, str]:
    """Flatten an INI-style experiment file into option names."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"--spec: {exc}") from None
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            flat[key.replace("-", "_")] = value
    return flat


_INT_KEYS = ("kt", "kr", "n", "file_size", "trials", "seed")
_RAT_KEYS = ("mt", "mr", "r")


def build_spec(args) -> ExperimentSpec:
    values = {}
    if getattr(args, "spec", None):
        values.update(read_spec_file(args.spec))
    for key in _INT_KEYS + _RAT_KEYS + ("axis", "grid", "mode", "out", "format"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    for key in ("kt", "kr", "n"):
        if key not in values:
            raise UsageError(f"--{key} is required")
    try:
        ints = {k: int(values[k]) for k in _INT_KEYS if k in values}
        rats = {k: parse_rational(values.get(k, "0")) for k in _RAT_KEYS}
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad numeric value: {exc}") from None
    cfg = NetworkConfig(ints["kt"], ints["kr"], ints["n"], rats["mt"], rats["mr"], rats["r"])
    grid = values.get("grid", "")
    if not isinstance(grid, tuple):
        grid = parse_grid(grid)
    try:
        mode = Mode(values.get("mode", "serial").lower())
    except ValueError:
        raise UsageError("--mode must be serial or pipelined") from None
    spec = ExperimentSpec(
        cfg,
        axis=values.get("axis"),
        grid=grid,
        mode=mode,
        file_size=ints.get("file_size"),
        trials=ints.get("trials"),
        seed=ints.get("seed"),
        out=values.get("out"),
        fmt=values.get("format", getattr(args, "format_default", "csv")),
    )
    return spec.check()


def _emit(text: str, out: str | None, default_name: str) -> None:
    target = out
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        target = str(Path(os.environ[OUTPUT_DIR_ENV]) / default_name)
    if target is None or target == "-":
        sys.stdout.write(text)
        return
    path = Path(target)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# -- ndt / sweep ------------------------------------------------------------------

SWEEP_FIELDS = ("delta_f", "delta_e", "delta_total")


def sweep_rows(axis: str, points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([axis, *SWEEP_FIELDS, "scheme", "mode", f"{axis}_exact", *(f + "_exact" for f in SWEEP_FIELDS)])
    for x, b, mode in points:
        if b is None:
            w.writerow([decimal(x), "", "", "", "INFEASIBLE", mode.value, exact(x), "", "", ""])
            continue
        vals = (b.delta_f, b.delta_e, b.delta_total)
        w.writerow([decimal(x), *map(decimal, vals), b.scheme.value, b.mode.value, exact(x), *map(exact, vals)])
    return buf.getvalue()


def breakdown_text(cfg: NetworkConfig, b: NdtBreakdown) -> str:
    lines = [
        f"config: kt={cfg.kt} kr={cfg.kr} n={cfg.n} mt={cfg.mt} mr={cfg.mr} r={cfg.r} "
        f"t_T={cfg.t_t} t_R={cfg.t_r}",
        f"mode: {b.mode.value}",
        f"scheme: {b.scheme.value}",
    ]
    for name, value in zip(SWEEP_FIELDS, (b.delta_f, b.delta_e, b.delta_total)):
        lines.append(f"{name}: {decimal(value)} ({exact(value)})")
    lines.append("candidates: " + " ".join(f"{s.value}={exact(v)}" for s, v in b.candidates.items()))
    lines.append("class " + " ".join(t.value for t in Technique))
    for c in b.per_class:
        lines.append(f"{c.j} " + " ".join(exact(v) for v in c.by_technique().values()))
    lines += [f"note: {n}" for n in b.notes]
    return "\n".join(lines) + "\n"


def cmd_ndt(args) -> int:
    spec = build_spec(args)
    try:
        b = delta(spec.cfg, spec.mode)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if spec.fmt == "csv":
        text = sweep_rows("mt", [(spec.cfg.mt, b, spec.mode)])
    else:
        text = breakdown_text(spec.cfg, b)
    _emit(text, spec.out, f"ndt.{spec.fmt}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = build_spec(args)
    if spec.axis is None:
        raise UsageError("--axis is required")
    points = sweep(spec.cfg, spec.axis, spec.grid, spec.mode)
    rows = [(p.x, p.breakdown, spec.mode) for p in points]
    if spec.fmt == "csv":
        text = sweep_rows(spec.axis, rows)
    else:
        text = "".join(
            f"{spec.axis}={exact(x)}: "
            + (f"{b.scheme.value} total={exact(b.delta_total)}" if b else "INFEASIBLE")
            + "\n"
            for x, b, _ in rows
        )
    _emit(text, spec.out, f"sweep.{spec.fmt}")
    return EXIT_OK if any(p.feasible for p in points) else EXIT_INFEASIBLE


# -- simulate -------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    spec = build_spec(args)
    if spec.file_size is None or spec.trials is None or spec.seed is None:
        raise UsageError("--file-size, --trials and --seed are required")
    expected = None
    if args.expected:
        expected = parse_grid(args.expected)
    try:
        report = run_trials(spec.cfg, spec.file_size, spec.trials, spec.seed, expected=expected)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if spec.fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "expected", "expected_exact", "mean", "std", "max_abs_z", "status"])
        for j, f in enumerate(report.analytic):
            status = "skipped" if j in report.skipped else ("pass" if report.max_abs_z[j] <= 5 else "fail")
            w.writerow([j, decimal(f), exact(f), f"{report.mean[j]:.12g}", f"{report.std[j]:.6g}",
                        f"{report.max_abs_z[j]:.6g}", status])
        text = buf.getvalue()
    else:
        head = f"file_size={report.file_size} trials={report.trials} seed={report.seed}"
        text = "\n".join([head, *summary_lines(report), f"result: {'pass' if report.passed else 'FAIL'}"]) + "\n"
    _emit(text, spec.out, f"simulate.{spec.fmt}")
    return EXIT_OK if report.passed else EXIT_STATS


# -- schedule --------------------------------------------------------------------

def cmd_schedule(args) -> int:
    spec = build_spec(args)
    demand = DemandVector.worst_case(spec.cfg)
    try:
        scheme = Scheme(args.scheme) if args.scheme else delta(spec.cfg, spec.mode).scheme
        profile = None
        if spec.file_size:
            files = set(demand.demands)
            en = place_en_caches(spec.cfg, spec.file_size)
            users = place_user_caches(spec.cfg, spec.file_size, spec.seed or 0, files=files)
            profile = classify_bits(en, users)
        sched = build_schedule(spec.cfg, demand, scheme, spec.mode, placement=profile)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _emit(export_schedule(sched), spec.out, "schedule.txt")
    return EXIT_OK


# -- validate ---------------------------------------------------------------------

def cmd_validate(args) -> int:
    from .invariants import run_checks

    results = run_checks(max_k=args.max_k)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name} ({r.detail})")
    return EXIT_OK if all(r.ok for r in results) else EXIT_STATS


def _network_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="experiment file (INI sections, key = value)")
    p.add_argument("--kt", type=int, help="number of edge nodes K_T")
    p.add_argument("--kr", type=int, help="number of users K_R")
    p.add_argument("--n", type=int, help="library size N")
    p.add_argument("--mt", help="EN cache size M_T (rational, e.g. 3/2)")
    p.add_argument("--mr", help="user cache size M_R (rational)")
    p.add_argument("--r", help="fronthaul multiplexing gain r (rational)")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--out", help="output file ('-' for stdout)")
    p.add_argument("--format", choices=["csv", "text"])


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fran-ndt", description="Cache-aided F-RAN delivery-time calculator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ndt", help="NDT of one configuration")
    _network_flags(p)
    p.set_defaults(func=cmd_ndt, format_default="text")

    p = sub.add_parser("sweep", help="NDT over a grid of one parameter")
    _network_flags(p)
    p.add_argument("--axis", choices=AXES)
    p.add_argument("--grid", help="comma separated rationals, strictly increasing")
    p.set_defaults(func=cmd_sweep, format_default="csv")

    p = sub.add_parser("simulate", help="Monte Carlo check of the class sizes")
    _network_flags(p)
    p.add_argument("--file-size", dest="file_size", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--expected", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_simulate, format_default="text")

    p = sub.add_parser("schedule", help="export a delivery schedule")
    _network_flags(p)
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--file-size", dest="file_size", type=int, help="build from a bit-level placement")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_schedule, format_default="text")

    p = sub.add_parser("validate", help="run the invariant suite")
    p.add_argument("--max-k", dest="max_k", type=int, default=6)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidParameter, InvalidConfig) as exc:
        print(f"fran-ndt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
