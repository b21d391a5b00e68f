"""Self-check suite run by ``fran-ndt validate``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

from .errors import Infeasible
from .model import (
    DemandVector,
    Mode,
    NetworkConfig,
    Scheme,
    class_profile,
    enumerate_subfiles,
    validate_config,
)
from .ndt import (
    delta_cloud_only,
    delta_hybrid,
    delta_ia,
    delta_pipelined,
    delta_serial,
    delta_zf,
    delta_zf_ia,
    evaluate,
)
from .scheduler import build_schedule, reconcile


def config_grid(max_k: int = 6) -> Iterator[NetworkConfig]:
    """Configurations with K_T, K_R in [1, max_k] and rational cache sizes."""
    for kt, kr in itertools.product(range(1, max_k + 1), repeat=2):
        n = kr + (kt + kr) % 3
        for mt_frac, mr_frac, r in itertools.product(
            (Fraction(0), Fraction(1, 2 * kt), Fraction(1, kt), Fraction(2, 3), Fraction(1)),
            (Fraction(0), Fraction(1, 3), Fraction(1)),
            (Fraction(0), Fraction(3, 2)),
        ):
            yield NetworkConfig(kt, kr, n, mt_frac * n, mr_frac * n, r)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def _partition(cfg):
    prof = class_profile(cfg)
    return prof.total() == 1 and prof.residual == 1 - cfg.mr / cfg.n


def _dominance(cfg):
    return all(delta_zf(cfg, j) <= delta_ia(cfg, j) for j in range(cfg.kr))


def _serial_vs_pipelined(cfg):
    try:
        return delta_pipelined(cfg).delta_total <= delta_serial(cfg).delta_total
    except Infeasible:
        return True


def _cloud_edge(cfg):
    return delta_cloud_only(cfg.replace(r=1)).edge == sum(delta_zf(cfg, j) for j in range(cfg.kr))


def _boundary(cfg):
    if cfg.kt * cfg.mt != cfg.n:
        return True
    return delta_hybrid(cfg).edge == delta_zf_ia(cfg)


def _scale(cfg):
    big = cfg.replace(n=2 * cfg.n, mt=2 * cfg.mt, mr=2 * cfg.mr)
    try:
        a, b = delta_serial(cfg), delta_serial(big)
    except Infeasible:
        return True
    return (a.delta_f, a.delta_e, a.scheme) == (b.delta_f, b.delta_e, b.scheme)


def _determinism(cfg):
    return enumerate_subfiles(cfg) == enumerate_subfiles(cfg)


def _monotone_edge(cfg):
    if cfg.kt < 2:
        return True
    steps = [Fraction(cfg.n) * (1 + Fraction(k, 4) * (cfg.kt - 1)) / cfg.kt for k in range(5)]
    values = [delta_zf_ia(cfg.replace(mt=m)) for m in steps]
    return all(a >= b for a, b in zip(values, values[1:]))


def _schedule_matches(cfg):
    demand = DemandVector.worst_case(cfg)
    for scheme in Scheme:
        try:
            analytic = evaluate(cfg, scheme, Mode.SERIAL)
        except Infeasible:
            continue
        reconcile(build_schedule(cfg, demand, scheme, Mode.SERIAL), analytic)
    return True


CHECKS: list[tuple[str, Callable[[NetworkConfig], bool], bool]] = [
    ("class sizes partition each file", _partition, False),
    ("ZF-IC delay never exceeds IA-IC delay", _dominance, False),
    ("pipelined NDT <= serial NDT", _serial_vs_pipelined, False),
    ("cloud edge delay equals sum of ZF delays", _cloud_edge, False),
    ("hybrid and edge-only agree at t_T = 1", _boundary, False),
    ("scale invariance in (N, M_T, M_R)", _scale, False),
    ("subfile enumeration is deterministic", _determinism, False),
    ("edge-only NDT non-increasing in t_T", _monotone_edge, False),
    ("analytic schedules reconcile exactly", _schedule_matches, True),
]


def run_checks(max_k: int = 6, schedule_max_k: int = 4) -> list[CheckResult]:
    configs = [validate_config(c) for c in config_grid(max_k)]
    results = []
    for name, fn, heavy in CHECKS:
        pool = [c for c in configs if c.kt <= schedule_max_k and c.kr <= schedule_max_k] if heavy else configs
        bad = None
        for cfg in pool:
            try:
                ok = fn(cfg)
            except Exception as exc:  # a crash is a failed check, report it
                ok, bad = False, f"{cfg}: {type(exc).__name__}: {exc}"
            if not ok:
                bad = bad or str(cfg)
                break
        results.append(CheckResult(name, bad is None, bad or f"{len(pool)} configs"))
    return results

