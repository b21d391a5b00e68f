"""Achievable normalized delivery time (NDT) in exact arithmetic.

Per-class delays, the three delivery schemes (edge-only, cloud-only,
hybrid) and the scheme selection for serial and pipelined transmission.
An infeasible scheme is carried as ``math.inf`` inside the minima; an
error is only raised when every candidate is infeasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import NamedTuple, Sequence, Union

from .errors import (
    Infeasible,
    InfeasibleCloudOnly,
    InfeasibleEdgeOnly,
    InfeasibleHybrid,
    NoFeasibleScheme,
)
from .model import Mode, NetworkConfig, Scheme, Technique, class_profile, validate_config

Value = Union[Fraction, float]  # float only ever holds math.inf
INF = math.inf

PIPELINED_EDGE_NOTE = (
    "pipelined t_T>=1: cloud-only candidate taken as max(delta^c_F, delta^c_E), "
    "compared against the edge-only delta^e_E"
)
INFEASIBLE_REASON = "delivery with t_T < 1 is not feasible when the fronthaul capacity is zero (r = 0)"


class Delays(NamedTuple):
    fronthaul: Value
    edge: Value

    def total(self, mode: Mode) -> Value:
        if mode is Mode.SERIAL:
            return self.fronthaul + self.edge
        return max(self.fronthaul, self.edge)


def ia_dof(cfg: NetworkConfig, j: int) -> Fraction:
    """Sum DoF of IA combined with cache-aided cancellation for class j."""
    x_channel = Fraction(cfg.kt * cfg.kr, cfg.kt + cfg.kr - j)
    return max(x_channel, Fraction(j + 1))


def zf_dof(cfg: NetworkConfig, j: int) -> Fraction:
    return Fraction(min(cfg.kt + j, cfg.kr))


@lru_cache(maxsize=4096)
def _loads(kr: int, ratio: Fraction) -> tuple[Fraction, ...]:
    # normalized bits of each class summed over all K_R requests
    f = class_profile(NetworkConfig(1, kr, 1, mr=ratio))
    return tuple(comb(kr - 1, j) * kr * f[j] for j in range(kr))


def _class_load(cfg: NetworkConfig, j: int) -> Fraction:
    if not 0 <= j <= cfg.kr - 1:
        raise ValueError(f"class index {j} outside [0, {cfg.kr - 1}]")
    return _loads(cfg.kr, cfg.user_ratio)[j]


@lru_cache(maxsize=4096)
def _sums(kt: int, kr: int, ratio: Fraction) -> tuple[Fraction, Fraction]:
    """(sum_j delta_ia(j), sum_j delta_zf(j))."""
    cfg = NetworkConfig(kt, kr, 1, mr=ratio)
    ia = sum((delta_ia(cfg, j) for j in range(kr)), Fraction(0))
    zf = sum((delta_zf(cfg, j) for j in range(kr)), Fraction(0))
    return ia, zf


def sum_ia(cfg: NetworkConfig) -> Fraction:
    return _sums(cfg.kt, cfg.kr, cfg.user_ratio)[0]


def sum_zf(cfg: NetworkConfig) -> Fraction:
    return _sums(cfg.kt, cfg.kr, cfg.user_ratio)[1]


def delta_ia(cfg: NetworkConfig, j: int) -> Fraction:
    return _class_load(cfg, j) / ia_dof(cfg, j)


def delta_zf(cfg: NetworkConfig, j: int) -> Fraction:
    return _class_load(cfg, j) / zf_dof(cfg, j)


def _edge_weights(cfg: NetworkConfig) -> tuple[Fraction, Fraction]:
    """Weights of the IA-IC and ZF-IC parts when t_T >= 1."""
    t = cfg.t_t
    if cfg.kt == 1:
        # the whole library is shared at the single EN
        return Fraction(0), Fraction(1)
    return (cfg.kt - t) / (cfg.kt - 1), (t - 1) / (cfg.kt - 1)


def delta_zf_ia(cfg: NetworkConfig) -> Fraction:
    if cfg.t_t < 1:
        raise ValueError("delta_zf_ia requires t_T >= 1")
    w_ia, w_zf = _edge_weights(cfg)
    return w_ia * sum_ia(cfg) + w_zf * sum_zf(cfg)


def delta_edge_only(cfg: NetworkConfig) -> Delays:
    if cfg.t_t < 1:
        raise InfeasibleEdgeOnly(f"edge-only delivery needs t_T >= 1, got t_T = {cfg.t_t}")
    return Delays(Fraction(0), delta_zf_ia(cfg))


def delta_cloud_only(cfg: NetworkConfig) -> Delays:
    residual = 1 - cfg.user_ratio
    edge = sum_zf(cfg)
    if cfg.r == 0:
        if residual > 0:
            raise InfeasibleCloudOnly("cloud-only delivery needs r > 0")
        return Delays(Fraction(0), edge)
    return Delays(cfg.kr * residual / (cfg.kt * cfg.r), edge)


def delta_hybrid(cfg: NetworkConfig) -> Delays:
    t = cfg.t_t
    if t > 1:
        raise InfeasibleHybrid(f"hybrid delivery is defined for t_T <= 1, got t_T = {t}")
    ia = sum_ia(cfg)
    if t == 1:
        if cfg.kt == 1:
            # single EN holding everything: IA and ZF credit the same DoF j+1
            ia = sum_zf(cfg)
        return Delays(Fraction(0), ia)
    try:
        cloud = delta_cloud_only(cfg)
    except InfeasibleCloudOnly:
        raise InfeasibleHybrid(INFEASIBLE_REASON) from None
    return Delays((1 - t) * cloud.fronthaul, t * ia + (1 - t) * cloud.edge)


@dataclass(frozen=True)
class ClassContribution:
    j: int
    ia_ic: Fraction = Fraction(0)
    zf_ic: Fraction = Fraction(0)
    soft: Fraction = Fraction(0)

    def by_technique(self) -> dict[Technique, Fraction]:
        return {Technique.IA_IC: self.ia_ic, Technique.ZF_IC: self.zf_ic, Technique.SOFT: self.soft}


def per_class(cfg: NetworkConfig, scheme: Scheme) -> tuple[ClassContribution, ...]:
    """Edge-delay contribution of each class, split by technique."""
    out = []
    t = cfg.t_t
    for j in range(cfg.kr):
        ia, zf = delta_ia(cfg, j), delta_zf(cfg, j)
        if scheme is Scheme.EDGE_ONLY:
            w_ia, w_zf = _edge_weights(cfg)
            out.append(ClassContribution(j, ia_ic=w_ia * ia, zf_ic=w_zf * zf))
        elif scheme is Scheme.CLOUD_ONLY:
            out.append(ClassContribution(j, soft=zf))
        elif cfg.kt == 1 and t == 1:
            out.append(ClassContribution(j, zf_ic=zf))
        else:
            out.append(ClassContribution(j, ia_ic=t * ia, soft=(1 - t) * zf))
    return tuple(out)


@dataclass(frozen=True)
class NdtBreakdown:
    delta_f: Value
    delta_e: Value
    delta_total: Value
    scheme: Scheme
    mode: Mode
    per_class: tuple[ClassContribution, ...] = ()
    candidates: dict[Scheme, Value] = field(default_factory=dict)
    notes: tuple[str, ...] = ()


_SCHEME_FN = {
    Scheme.EDGE_ONLY: delta_edge_only,
    Scheme.CLOUD_ONLY: delta_cloud_only,
    Scheme.HYBRID: delta_hybrid,
}


def scheme_delays(cfg: NetworkConfig, scheme: Scheme) -> Delays:
    return _SCHEME_FN[scheme](cfg)


def evaluate(cfg: NetworkConfig, scheme: Scheme, mode: Mode) -> NdtBreakdown:
    """Breakdown of one given scheme; raises if it is infeasible."""
    d = scheme_delays(cfg, scheme)
    return NdtBreakdown(d.fronthaul, d.edge, d.total(mode), scheme, mode, per_class(cfg, scheme))


def _candidates(cfg: NetworkConfig, schemes: Sequence[Scheme]) -> dict[Scheme, Delays]:
    out = {}
    for s in schemes:
        try:
            out[s] = scheme_delays(cfg, s)
        except Infeasible:
            out[s] = Delays(INF, INF)
    return out


def _pick(cands: dict[Scheme, Delays], mode: Mode) -> Scheme:
    # ties go to the scheme using less fronthaul, then to declaration order
    order = list(Scheme)
    return min(cands, key=lambda s: (cands[s].total(mode), cands[s].fronthaul, order.index(s)))


def _select(cfg: NetworkConfig, mode: Mode) -> NdtBreakdown:
    validate_config(cfg)
    t = cfg.t_t
    if t < 1 and cfg.r == 0:
        # also when the users already hold everything: no fronthaul, no delivery
        raise NoFeasibleScheme(INFEASIBLE_REASON)
    notes: list[str] = []
    low = (Scheme.HYBRID, Scheme.CLOUD_ONLY)
    high = (Scheme.EDGE_ONLY, Scheme.CLOUD_ONLY)
    if t < 1:
        cands = _candidates(cfg, low)
    elif t > 1:
        cands = _candidates(cfg, high)
    else:
        cands = _candidates(cfg, high)
        other = _candidates(cfg, low)
        a = min(d.total(mode) for d in cands.values())
        b = min(d.total(mode) for d in other.values())
        if a != b:
            raise AssertionError(f"selection branches disagree at t_T = 1: {a} != {b}")
    if mode is Mode.PIPELINED and t >= 1:
        notes.append(PIPELINED_EDGE_NOTE)
    best = _pick(cands, mode)
    d = cands[best]
    if d.total(mode) == INF:
        raise NoFeasibleScheme("no delivery scheme is feasible")
    return NdtBreakdown(
        d.fronthaul,
        d.edge,
        d.total(mode),
        best,
        mode,
        per_class(cfg, best),
        {s: c.total(mode) for s, c in cands.items()},
        tuple(notes),
    )


def delta_serial(cfg: NetworkConfig) -> NdtBreakdown:
    return _select(cfg, Mode.SERIAL)


def delta_pipelined(cfg: NetworkConfig) -> NdtBreakdown:
    return _select(cfg, Mode.PIPELINED)


def delta(cfg: NetworkConfig, mode: Mode) -> NdtBreakdown:
    return _select(cfg, Mode(mode))


# -- sweeps -------------------------------------------------------------------

AXES = ("mt", "mr", "r")


@dataclass(frozen=True)
class SweepPoint:
    x: Fraction
    breakdown: NdtBreakdown | None
    error: str | None = None

    @property
    def feasible(self) -> bool:
        return self.breakdown is not None


def sweep(cfg: NetworkConfig, axis: str, grid: Sequence, mode: Mode) -> list[SweepPoint]:
    axis = axis.lower()
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    points = []
    for x in sorted(Fraction(g) for g in grid):
        try:
            b = delta(validate_config(cfg.replace(**{axis: x})), mode)
        except (Infeasible, ValueError) as exc:
            points.append(SweepPoint(x, None, str(exc)))
        else:
            points.append(SweepPoint(x, b))
    return points


def crossover(points: Sequence[SweepPoint], away_from: Scheme = Scheme.CLOUD_ONLY) -> Fraction | None:
    """First grid value where the selected scheme stops being ``away_from``."""
    seen = False
    for p in points:
        if not p.feasible:
            continue
        if p.breakdown.scheme is away_from:
            seen = True
        elif seen:
            return p.x
    return None
