"""Seeded finite-F validation of the class-size law and of the NDT formulas."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import Infeasible
from .model import DemandVector, Mode, NetworkConfig, Scheme, class_profile, validate_config
from .ndt import NdtBreakdown, evaluate
from .placement import classify_bits, place_en_caches, place_user_caches
from .scheduler import ReconcileReport, Schedule, build_schedule, reconcile

MIN_FILE_SIZE = 1024
MIN_EXPECTED_COUNT = 32
Z_LIMIT = 5.0


def trial_seed(master_seed: int, trial: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _popcounts(kr: int) -> np.ndarray:
    return np.array([bin(s).count("1") for s in range(1 << kr)])


@dataclass(frozen=True)
class TrialReport:
    seed: int
    file_size: int
    trials: int
    analytic: tuple[Fraction, ...]
    mean: tuple[float, ...]  # per class, mean over trials of the per-cell average
    std: tuple[float, ...]   # per class, stddev over trials of the same quantity
    max_abs_z: tuple[float, ...]
    z: np.ndarray = field(repr=False)  # [trial, file, user_set]
    skipped: tuple[int, ...] = ()      # classes whose expected count is < 32 bits
    ndt: dict[Scheme, dict[str, float]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(z <= Z_LIMIT for j, z in enumerate(self.max_abs_z) if j not in self.skipped)


def _cell_fractions(cfg: NetworkConfig, file_size: int, seed: int) -> np.ndarray:
    """[file, user_set] fraction of each file cached by exactly that subset."""
    users = place_user_caches(cfg, file_size, seed)
    en = place_en_caches(cfg.replace(mt=0), file_size)
    profile = classify_bits(en, users)
    return np.stack([profile.class_fractions(i) for i in range(1, cfg.n + 1)])


def sample_fractions(
    cfg: NetworkConfig,
    file_size: int,
    trials: int,
    master_seed: int,
    workers: int = 1,
) -> np.ndarray:
    """[trial, file, user_set] empirical fractions; independent of ``workers``."""
    seeds = [trial_seed(master_seed, t) for t in range(trials)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda s: _cell_fractions(cfg, file_size, s), seeds))
    else:
        rows = [_cell_fractions(cfg, file_size, s) for s in seeds]
    return np.stack(rows)


def z_scores(frac: np.ndarray, expected: Sequence, kr: int, file_size: int) -> np.ndarray:
    pc = _popcounts(kr)
    f = np.array([float(expected[j]) for j in pc])
    sigma = np.sqrt(f * (1 - f) / file_size)
    dev = frac - f
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, dev / np.where(sigma > 0, sigma, 1), np.where(dev == 0, 0.0, np.inf))
    return np.abs(z)


def run_trials(
    cfg: NetworkConfig,
    file_size: int,
    trials: int,
    master_seed: int,
    *,
    expected: Sequence | None = None,
    with_ndt: bool = False,
    workers: int = 1,
) -> TrialReport:
    """Compare empirical subset fractions with the law-of-large-numbers sizes.

    ``expected`` overrides the analytic f(j) table (test hook).
    """
    validate_config(cfg)
    if file_size < MIN_FILE_SIZE:
        raise ValueError(f"file size must be >= {MIN_FILE_SIZE}, got {file_size}")
    if trials < 1:
        raise ValueError("need at least one trial")
    kr = cfg.kr
    analytic = class_profile(cfg).fractions
    table = analytic if expected is None else tuple(Fraction(x) for x in expected)
    if len(table) != kr + 1:
        raise ValueError(f"expected table needs {kr + 1} entries")

    frac = sample_fractions(cfg, file_size, trials, master_seed, workers)
    z = z_scores(frac, table, kr, file_size)
    pc = _popcounts(kr)
    mean, std, max_z, skipped = [], [], [], []
    for j in range(kr + 1):
        cols = pc == j
        per_trial = frac[:, :, cols].mean(axis=(1, 2))
        mean.append(float(per_trial.mean()))
        std.append(float(per_trial.std(ddof=1)) if trials > 1 else 0.0)
        f = float(table[j])
        if 0 < f < 1 and file_size * f < MIN_EXPECTED_COUNT:
            skipped.append(j)
        max_z.append(float(z[:, :, cols].max()))

    ndt = {}
    if with_ndt:
        demand = DemandVector.worst_case(cfg)
        for scheme in Scheme:
            try:
                res = empirical_ndt(cfg, file_size, trial_seed(master_seed, 0), demand, scheme, Mode.SERIAL)
            except Infeasible:
                continue
            ndt[scheme] = res.gaps
    return TrialReport(
        master_seed, file_size, trials, tuple(table), tuple(mean), tuple(std), tuple(max_z), z,
        tuple(skipped), ndt,
    )


def rms_error(cfg: NetworkConfig, file_size: int, trials: int, master_seed: int) -> float:
    """Root-mean-square deviation of cell fractions from f(j)."""
    frac = sample_fractions(cfg, file_size, trials, master_seed)
    f = np.array([float(class_profile(cfg)[j]) for j in _popcounts(cfg.kr)])
    return float(np.sqrt(np.mean((frac - f) ** 2)))


def convergence_slope(
    cfg: NetworkConfig,
    sizes: Sequence[int] = tuple(2**e for e in range(12, 23, 2)),
    trials: int = 4,
    master_seed: int = 0,
) -> tuple[float, list[float]]:
    """Slope of log(rms error) against log(F); about -1/2 when errors are O(F^-1/2)."""
    errors = [rms_error(cfg, F, trials, master_seed + k) for k, F in enumerate(sizes)]
    slope = np.polyfit(np.log(sizes), np.log(errors), 1)[0]
    return float(slope), errors


@dataclass(frozen=True)
class EmpiricalNdt:
    schedule: Schedule
    analytic: NdtBreakdown
    report: ReconcileReport

    @property
    def gaps(self) -> dict[str, float]:
        return {name: self.report.relative_gap(name) for name in self.report.components}

    @property
    def achieved(self) -> tuple[Fraction, Fraction, Fraction]:
        s = self.schedule
        return s.achieved_delta_f, s.achieved_delta_e, s.achieved_total


def empirical_ndt(
    cfg: NetworkConfig,
    file_size: int,
    seed: int,
    demand: DemandVector,
    scheme: Scheme,
    mode: Mode,
    c: float = 10.0,
) -> EmpiricalNdt:
    """Bit-level schedule for one placement, reconciled against the formulas."""
    validate_config(cfg)
    analytic = evaluate(cfg, Scheme(scheme), Mode(mode))
    files = set(demand.check(cfg).demands)
    en = place_en_caches(cfg, file_size)
    users = place_user_caches(cfg, file_size, seed, files=files)
    profile = classify_bits(en, users)
    schedule = build_schedule(cfg, demand, scheme, mode, placement=profile)
    return EmpiricalNdt(schedule, analytic, reconcile(schedule, analytic, c))


def summary_lines(report: TrialReport) -> list[str]:
    lines = []
    for j, f in enumerate(report.analytic):
        flag = "skipped" if j in report.skipped else ("ok" if report.max_abs_z[j] <= Z_LIMIT else "FAIL")
        lines.append(
            f"class {j}: f={float(f):.9g} mean={report.mean[j]:.9g} "
            f"std={report.std[j]:.3g} max|z|={report.max_abs_z[j]:.3f} {flag}"
        )
    return lines

