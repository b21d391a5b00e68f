import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from fran_ndt.errors import InfeasibleCloudOnly, InfeasibleEdgeOnly, InfeasibleHybrid, NoFeasibleScheme
from fran_ndt.model import Mode, NetworkConfig, Scheme
from fran_ndt.ndt import (
    INF,
    crossover,
    delta,
    delta_cloud_only,
    delta_edge_only,
    delta_hybrid,
    delta_ia,
    delta_pipelined,
    delta_serial,
    delta_zf,
    delta_zf_ia,
    evaluate,
    sweep,
)

K3 = NetworkConfig(3, 3, 3, mr=1)


def grid():
    for kt, kr in itertools.product(range(1, 5), repeat=2):
        n = kr + 1
        for mt, mr, r in itertools.product(
            (0, Fraction(n, 2 * kt), Fraction(n, kt), Fraction(3 * n, 4), n),
            (0, Fraction(1, 2), n),
            (0, Fraction(1, 3), 4),
        ):
            yield NetworkConfig(kt, kr, n, mt, mr, r)


def test_hand_values():
    assert tuple(delta_ia(K3, j) for j in range(3)) == oracle.K3_DELTA_IA
    assert tuple(delta_zf(K3, j) for j in range(3)) == oracle.K3_DELTA_ZF
    for t, value in oracle.K3_EDGE.items():
        assert delta_zf_ia(K3.replace(mt=t)) == value
        assert delta_edge_only(K3.replace(mt=t)).edge == value
    assert tuple(delta_cloud_only(K3.replace(r=1))) == oracle.K3_CLOUD_R1
    assert tuple(delta_hybrid(K3.replace(mt=Fraction(1, 2), r=1))) == oracle.K3_HYBRID_MT_HALF_R1
    assert delta_serial(K3.replace(mt=1, r=1)).delta_total == oracle.K3_SERIAL_MT1_R1
    assert delta_pipelined(K3.replace(mt=3, r=1)).delta_total == oracle.K3_PIPELINED_MT3_R1


def test_selected_schemes_in_k3_example():
    b = delta_serial(K3.replace(mt=1, r=1))
    assert b.scheme is Scheme.EDGE_ONLY and b.candidates[Scheme.CLOUD_ONLY] == Fraction(4, 3)
    b = delta_serial(K3.replace(mt=1, r=100))
    assert b.scheme is Scheme.CLOUD_ONLY and b.delta_total == Fraction(2, 3) + Fraction(2, 300)
    # equal totals: the scheme with less fronthaul wins
    assert delta_pipelined(K3.replace(mt=3, r=1)).scheme is Scheme.EDGE_ONLY
    b = delta_pipelined(K3.replace(mt=0, r=Fraction(1, 10)))
    assert b.scheme is Scheme.CLOUD_ONLY and b.delta_total == Fraction(20, 3)


@pytest.mark.parametrize("cfg", list(grid()), ids=str)
def test_against_oracle(cfg):
    args = (cfg.kt, cfg.kr, cfg.n)
    for j in range(cfg.kr):
        assert delta_ia(cfg, j) == oracle.ia(*args, cfg.mr, j)
        assert delta_zf(cfg, j) == oracle.zf(*args, cfg.mr, j)
    for mode, pipelined in ((Mode.SERIAL, False), (Mode.PIPELINED, True)):
        want = oracle.best_total(*args, cfg.mt, cfg.mr, cfg.r, pipelined)
        if want == INF:
            with pytest.raises(NoFeasibleScheme):
                delta(cfg, mode)
        else:
            assert delta(cfg, mode).delta_total == want


def test_scheme_domains():
    with pytest.raises(InfeasibleEdgeOnly):
        delta_edge_only(K3.replace(mt=Fraction(1, 2)))
    with pytest.raises(InfeasibleCloudOnly):
        delta_cloud_only(K3)
    with pytest.raises(InfeasibleHybrid):
        delta_hybrid(K3.replace(mt=2))
    with pytest.raises(InfeasibleHybrid):
        delta_hybrid(K3.replace(mt=Fraction(1, 2)))


def test_infeasible_without_fronthaul():
    with pytest.raises(NoFeasibleScheme, match="not feasible"):
        delta_serial(K3.replace(mt=Fraction(1, 2), r=0))


def test_single_en_uses_zero_forcing_only():
    cfg = NetworkConfig(1, 3, 3, mt=3, mr=1)
    assert delta_zf_ia(cfg) == sum(delta_zf(cfg, j) for j in range(3))


def test_per_class_adds_up():
    for cfg in (K3.replace(mt=2), K3.replace(mt=Fraction(1, 2), r=2), K3.replace(r=1)):
        for scheme in Scheme:
            try:
                b = evaluate(cfg, scheme, Mode.SERIAL)
            except Exception:
                continue
            total = sum(sum(c.by_technique().values()) for c in b.per_class)
            assert total == b.delta_e


def test_sweep_reports_gaps_and_crossover():
    points = sweep(K3.replace(r=10), "mt", [Fraction(k, 10) for k in range(0, 31)], Mode.SERIAL)
    schemes = [p.breakdown.scheme for p in points]
    assert schemes[0] is Scheme.CLOUD_ONLY and schemes[-1] is not Scheme.CLOUD_ONLY
    x = crossover(points)
    assert x is not None and 2 < x < 3
    gaps = sweep(K3, "mt", [0, 1], Mode.SERIAL)
    assert not gaps[0].feasible and gaps[0].error and gaps[1].feasible


def test_pipelined_note_on_edge_branch():
    assert delta_pipelined(K3.replace(mt=2)).notes
    assert not delta_serial(K3.replace(mt=2)).notes


configs = st.builds(
    lambda kt, kr, extra, a, b, r: NetworkConfig(kt, kr, kr + extra, a * (kr + extra), b * (kr + extra), r),
    st.integers(1, 6),
    st.integers(1, 6),
    st.integers(0, 3),
    st.fractions(0, 1, max_denominator=12),
    st.fractions(0, 1, max_denominator=12),
    st.fractions(0, 20, max_denominator=12),
)


@settings(max_examples=300, deadline=None)
@given(configs)
def test_properties(cfg):
    for j in range(cfg.kr):
        assert delta_zf(cfg, j) <= delta_ia(cfg, j)
    try:
        s, p = delta_serial(cfg), delta_pipelined(cfg)
    except NoFeasibleScheme:
        assert cfg.t_t < 1 and cfg.r == 0
        return
    assert p.delta_total <= s.delta_total
    assert s.delta_total == s.delta_f + s.delta_e
    assert s.delta_total == min(v for v in s.candidates.values())


@settings(max_examples=100, deadline=None)
@given(configs, st.fractions(1, 10, max_denominator=8))
def test_cloud_fronthaul_strictly_decreasing_in_r(cfg, factor):
    cfg = cfg.replace(r=cfg.r + 1)
    bigger = cfg.replace(r=cfg.r * (1 + factor))
    if cfg.mr == cfg.n:
        assert delta_cloud_only(bigger).fronthaul == delta_cloud_only(cfg).fronthaul == 0
    else:
        assert delta_cloud_only(bigger).fronthaul < delta_cloud_only(cfg).fronthaul
