from fractions import Fraction

import numpy as np
import pytest

from fran_ndt.model import DemandVector, Mode, NetworkConfig, Scheme
from fran_ndt.montecarlo import (
    convergence_slope,
    empirical_ndt,
    run_trials,
    sample_fractions,
    trial_seed,
)

CFG = NetworkConfig(1, 3, 3, mr=1)


def test_trial_seeds_are_distinct_and_stable():
    seeds = [trial_seed(7, t) for t in range(16)]
    assert len(set(seeds)) == 16
    assert seeds == [trial_seed(7, t) for t in range(16)]


def test_fractions_do_not_depend_on_worker_count():
    a = sample_fractions(CFG, 4096, 4, 1, workers=1)
    b = sample_fractions(CFG, 4096, 4, 1, workers=3)
    assert np.array_equal(a, b)
    assert np.allclose(a.sum(axis=2), 1)


def test_small_run_passes():
    report = run_trials(CFG, 1 << 14, 8, 7)
    assert report.passed
    assert report.z.shape == (8, 3, 8)
    assert abs(report.mean[1] - 4 / 27) < 0.01


def test_tampered_table_fails():
    bad = (Fraction(8, 27), Fraction(5, 27), Fraction(2, 27), Fraction(1, 27))
    assert not run_trials(CFG, 1 << 14, 4, 7, expected=bad).passed


def test_degenerate_caches_need_exact_counts():
    full = run_trials(CFG.replace(mr=3), 2048, 2, 0)
    empty = run_trials(CFG.replace(mr=0), 2048, 2, 0)
    assert full.passed and empty.passed
    assert full.max_abs_z == (0.0, 0.0, 0.0, 0.0)


def test_small_classes_are_skipped():
    report = run_trials(NetworkConfig(1, 4, 4, mr=Fraction(1, 8)), 1024, 2, 0)
    assert 4 in report.skipped and 0 not in report.skipped


def test_file_size_floor():
    with pytest.raises(ValueError):
        run_trials(CFG, 64, 2, 0)


def test_convergence_slope_on_short_range():
    slope, errors = convergence_slope(CFG, sizes=(1 << 10, 1 << 12, 1 << 14, 1 << 16), trials=4)
    assert len(errors) == 4
    assert -0.8 < slope < -0.2


def test_empirical_ndt_reconciles():
    cfg = NetworkConfig(3, 3, 3, mt=2, mr=1, r=1)
    res = empirical_ndt(cfg, 1 << 14, 3, DemandVector.worst_case(cfg), Scheme.EDGE_ONLY, Mode.SERIAL)
    assert max(res.gaps.values()) <= 10 / (1 << 7)
    assert res.achieved[2] > 0
