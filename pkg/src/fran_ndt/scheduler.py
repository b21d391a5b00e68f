"""DoF-level delivery schedules.

A schedule is a sequence of transmission blocks. Each block serves a set of
streams simultaneously and is credited a sum-DoF; its normalized duration is
``(normalized bits in the block) / dof``.

Block constructions:

* pure-IC blocks (IA-IC when ``j + 1`` dominates the X-channel DoF): the
  ``j + 1`` users of a set ``R`` each receive the subfile cached at the
  other ``j`` members, so every interferer is in the receiver's cache.
* aligned blocks (IA-IC otherwise): one stream per (EN, user) pair, i.e. a
  full X-channel message set. The alignment itself is credited, not built.
* ZF blocks (ZF-IC and soft-transfer): ``m = min(K_T + j, K_R)`` receivers
  in cyclic order, receiver ``u_i`` getting the subfile cached at
  ``u_{i+1} .. u_{i+j}``. Every cyclic sequence is used once and every
  subfile is split into equal pieces, one per sequence it fits. Subfiles
  with the same receiver and user set but different EN tags share a slot.

Sizes come either from the analytic profile (exact fractions of a file) or
from a bit-level placement (integer bit counts, ``unit = F``).
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import comb, perm
from typing import Iterable, Sequence, Union

from .errors import Infeasible, NoFeasibleScheme, ReconcileFailure, RegimeMismatch, ValidationFailure
from .model import (
    DemandVector,
    EnTag,
    Mode,
    NetworkConfig,
    Scheme,
    SubfileId,
    TagKind,
    Technique,
    class_profile,
    en_tags,
    members,
    subfile_size,
    user_mask,
    user_sets,
)
from .ndt import NdtBreakdown, ia_dof, scheme_delays, zf_dof
from .placement import EmpiricalProfile

Size = Union[int, Fraction]


# -- inventories: sizes and cache contents -------------------------------------

class AnalyticInventory:
    """Subfile sizes as exact fractions of a file; caches as labelled."""

    exact = True
    unit = 1

    def __init__(self, cfg: NetworkConfig):
        self.cfg = cfg
        self._profile = class_profile(cfg)

    def size(self, sub: SubfileId) -> Fraction:
        return subfile_size(self.cfg, sub, self._profile)

    def holds(self, user: int, sub: SubfileId) -> bool:
        return sub.cached_by(user)


class BitInventory:
    """Sizes and cache contents read off a finite-F placement."""

    exact = False

    def __init__(self, profile: EmpiricalProfile):
        self.profile = profile
        self.unit = profile.file_size

    def size(self, sub: SubfileId) -> int:
        return self.profile.cell(sub.file, sub.tag, sub.user_set)

    def holds(self, user: int, sub: SubfileId) -> bool:
        return self.profile.holds(user, sub.file, sub.tag, sub.user_set)


# -- schedule types -------------------------------------------------------------

@dataclass(frozen=True)
class Stream:
    subfile: SubfileId
    rx: int
    tx: tuple[int, ...]
    via_cloud: bool = False
    lo: Size = 0
    hi: Size = 0

    def __post_init__(self):
        if self.subfile.cached_by(self.rx):
            raise ValueError(f"U{self.rx} already caches {self.subfile}")

    @property
    def size(self) -> Size:
        return self.hi - self.lo

    def label(self) -> str:
        if self.via_cloud:
            src = "cloud"
        elif len(self.tx) == 1:
            src = f"EN{self.tx[0]}"
        else:
            src = "EN*"
        return f"{self.subfile}->U{self.rx}@{src}"


@dataclass(frozen=True)
class TransmissionBlock:
    technique: Technique
    class_j: int
    streams: tuple[Stream, ...]
    dof: Fraction
    unit: int = 1

    @property
    def bits(self) -> Size:
        return sum(s.size for s in self.streams)

    @property
    def duration(self) -> Fraction:
        return Fraction(self.bits) / self.unit / self.dof

    @property
    def aligned(self) -> bool:
        """IA block whose DoF exceeds what cancellation alone yields."""
        return self.technique is Technique.IA_IC and self.dof > self.class_j + 1

    def receivers(self) -> tuple[int, ...]:
        seen = []
        for s in self.streams:
            if s.rx not in seen:
                seen.append(s.rx)
        return tuple(seen)


@dataclass(frozen=True)
class Schedule:
    cfg: NetworkConfig
    scheme: Scheme
    mode: Mode
    blocks: tuple[TransmissionBlock, ...]
    fronthaul: tuple[Fraction, ...]  # normalized load per EN
    exact: bool = True
    file_size: int = 1

    @property
    def achieved_delta_e(self) -> Fraction:
        return sum((b.duration for b in self.blocks), Fraction(0))

    @property
    def achieved_delta_f(self) -> Fraction:
        load = max(self.fronthaul, default=Fraction(0))
        if load == 0:
            return Fraction(0)
        return load / self.cfg.r

    @property
    def achieved_total(self) -> Fraction:
        f, e = self.achieved_delta_f, self.achieved_delta_e
        return f + e if self.mode is Mode.SERIAL else max(f, e)

    def per_class(self) -> dict[tuple[int, Technique], Fraction]:
        out: dict[tuple[int, Technique], Fraction] = defaultdict(Fraction)
        for b in self.blocks:
            out[(b.class_j, b.technique)] += b.duration
        return dict(out)


# -- needed subfiles ------------------------------------------------------------

def needed_subfiles(cfg: NetworkConfig, demand: DemandVector, inventory=None) -> list[tuple[SubfileId, int]]:
    """(subfile, receiver) pairs that must be delivered.

    With the analytic inventory, subfiles of size zero are left out. With a
    bit-level inventory every label is kept (empty cells act as fillers).
    """
    demand.check(cfg)
    inv = inventory or AnalyticInventory(cfg)
    out = []
    for k in cfg.users():
        file = demand.file_of(k)
        for tag in en_tags(cfg):
            for s in user_sets(cfg):
                if s >> (k - 1) & 1:
                    continue
                sub = SubfileId(file, tag, s)
                if inv.exact and inv.size(sub) == 0:
                    continue
                out.append((sub, k))
    return out


def _tx(cfg: NetworkConfig, sub: SubfileId, technique: Technique) -> tuple[tuple[int, ...], bool]:
    everyone = tuple(range(1, cfg.kt + 1))
    if technique is Technique.SOFT:
        return everyone, True
    if sub.tag.kind is TagKind.EXCLUSIVE:
        return (sub.tag.en,), False
    return everyone, False


def _stream(cfg, sub, rx, technique, lo, hi) -> Stream:
    tx, cloud = _tx(cfg, sub, technique)
    return Stream(sub, rx, tx, cloud, lo, hi)


def _piece(size: Size, count: int, p: int) -> tuple[Size, Size]:
    """Bounds of the p-th of ``count`` near-equal pieces of ``size``."""
    if isinstance(size, int):
        return size * p // count, size * (p + 1) // count
    return Fraction(size) * p / count, Fraction(size) * (p + 1) / count


def _of_class(needed, j):
    return [(sub, rx) for sub, rx in needed if sub.class_j == j]


def pure_ic(cfg: NetworkConfig, j: int) -> bool:
    return ia_dof(cfg, j) == j + 1


# -- block builders ---------------------------------------------------------------

def build_ic_blocks(cfg: NetworkConfig, needed, j: int, inventory=None) -> list[TransmissionBlock]:
    """Pure interference-cancellation blocks for class ``j``.

    Streams are grouped by ``R = user_set + {rx}``. Inside a group, round
    ``m`` gives the ``i``-th receiver of ``R`` its subfile from tag
    ``(m + i) mod T``, so a block mixes ENs whenever it can; every block
    has one stream per member of ``R`` and runs at DoF ``j + 1``. Groups
    that cannot be completed go out stream by stream at DoF 1.
    """
    if not pure_ic(cfg, j):
        raise RegimeMismatch(
            f"class {j}: X-channel DoF {Fraction(cfg.kt * cfg.kr, cfg.kt + cfg.kr - j)} exceeds {j + 1}"
        )
    inv = inventory or AnalyticInventory(cfg)
    groups: dict[int, dict[int, list[SubfileId]]] = defaultdict(lambda: defaultdict(list))
    for sub, rx in _of_class(needed, j):
        groups[sub.user_set | 1 << (rx - 1)][rx].append(sub)
    blocks = []
    for R, queues in sorted(groups.items()):
        rxs = sorted(queues)
        for q in queues.values():
            q.sort()
        lengths = {len(q) for q in queues.values()}
        if tuple(rxs) == members(R) and len(lengths) == 1:
            rounds = lengths.pop()
            for m in range(rounds):
                streams = tuple(
                    _stream(cfg, sub, rx, Technique.IA_IC, 0, inv.size(sub))
                    for i, rx in enumerate(rxs)
                    for sub in (queues[rx][(m + i) % rounds],)
                )
                blocks.append(TransmissionBlock(Technique.IA_IC, j, streams, Fraction(j + 1), inv.unit))
        else:
            for rx in rxs:
                for sub in queues[rx]:
                    s1 = _stream(cfg, sub, rx, Technique.IA_IC, 0, inv.size(sub))
                    blocks.append(TransmissionBlock(Technique.IA_IC, j, (s1,), Fraction(1), inv.unit))
    return blocks


def build_ia_blocks(cfg: NetworkConfig, needed, j: int, inventory=None) -> list[TransmissionBlock]:
    """Aligned X-channel blocks: round ``m`` carries, for every (EN, user)
    pair, the ``m``-th class-``j`` subfile that EN holds for that user."""
    inv = inventory or AnalyticInventory(cfg)
    queues: dict[tuple[EnTag, int], list[SubfileId]] = defaultdict(list)
    for sub, rx in _of_class(needed, j):
        queues[(sub.tag, rx)].append(sub)
    for q in queues.values():
        q.sort()
    rounds = max((len(q) for q in queues.values()), default=0)
    dof = ia_dof(cfg, j)
    blocks = []
    for m in range(rounds):
        streams = tuple(
            _stream(cfg, q[m], rx, Technique.IA_IC, 0, inv.size(q[m]))
            for (tag, rx), q in sorted(queues.items())
            if m < len(q)
        )
        blocks.append(TransmissionBlock(Technique.IA_IC, j, streams, dof, inv.unit))
    return blocks


def cyclic_sequences(users: Sequence[int], m: int) -> Iterable[tuple[int, ...]]:
    """Ordered m-tuples of distinct users, one per rotation class."""
    for seq in itertools.permutations(users, m):
        if seq[0] == min(seq):
            yield seq


def zf_multiplicity(kr: int, j: int, m: int) -> int:
    """Number of cyclic sequences in which a given (receiver, user_set) fits."""
    return math.factorial(j) * perm(kr - 1 - j, m - 1 - j)


def build_zf_blocks(
    cfg: NetworkConfig,
    needed,
    j: int,
    inventory=None,
    technique: Technique = Technique.ZF_IC,
) -> list[TransmissionBlock]:
    inv = inventory or AnalyticInventory(cfg)
    m = min(cfg.kt + j, cfg.kr)
    lam = zf_multiplicity(cfg.kr, j, m)
    # (rx, cover) -> subfiles of every EN tag; they share a slot in the block
    items: dict[tuple[int, int], list[SubfileId]] = defaultdict(list)
    for sub, rx in _of_class(needed, j):
        items[(rx, sub.user_set)].append(sub)
    used: dict[tuple[int, int], int] = defaultdict(int)
    dof = Fraction(m)
    blocks = []
    for seq in cyclic_sequences(tuple(cfg.users()), m):
        streams = []
        for i, rx in enumerate(seq):
            cover = user_mask(seq[(i + k) % m] for k in range(1, j + 1))
            subs = items.get((rx, cover))
            if not subs:
                continue
            p = used[(rx, cover)]
            used[(rx, cover)] += 1
            for sub in sorted(subs):
                lo, hi = _piece(inv.size(sub), lam, p)
                streams.append(_stream(cfg, sub, rx, technique, lo, hi))
        if streams:
            blocks.append(TransmissionBlock(technique, j, tuple(streams), dof, inv.unit))
    return blocks


# -- validation -------------------------------------------------------------------

@dataclass(frozen=True)
class BlockCheck:
    ok: bool
    witness: tuple[int, int] | None = None  # (stream index, receiver)
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_block(block: TransmissionBlock, caches=None) -> BlockCheck:
    """Check that every receiver can get rid of every interfering stream.

    A stream's interference at receiver ``u`` is removed either from u's
    cache or by zero-forcing at the transmitters; a stream sent by ``n``
    cooperating ENs can be nulled at up to ``min(n, block receivers) - 1``
    receivers, a single-EN stream at none. Aligned blocks are only checked
    structurally (alignment is credited by DoF, not constructed).
    """
    if caches is None:
        caches = _LabelCaches()
    for k, s in enumerate(block.streams):
        if caches.holds(s.rx, s.subfile) and s.size:
            return BlockCheck(False, (k, s.rx), f"U{s.rx} already holds {s.subfile}")
    if block.aligned:
        seen = set()
        for k, s in enumerate(block.streams):
            if len(s.tx) != 1 or s.via_cloud:
                return BlockCheck(False, (k, s.rx), "aligned block stream not from a single EN")
            if (s.tx[0], s.rx) in seen:
                return BlockCheck(False, (k, s.rx), "duplicate (EN, user) message in aligned block")
            seen.add((s.tx[0], s.rx))
        return BlockCheck(True)
    rxs = block.receivers()
    for k, s in enumerate(block.streams):
        budget = min(len(s.tx), len(rxs)) - 1 if len(s.tx) > 1 else 0
        exposed = [u for u in rxs if u != s.rx and not caches.holds(u, s.subfile)]
        if len(exposed) > budget:
            u = exposed[budget]
            return BlockCheck(False, (k, u), f"U{u} can neither cancel nor have nulled {s.subfile}")
    return BlockCheck(True)


class _LabelCaches:
    def holds(self, user: int, sub: SubfileId) -> bool:
        return sub.cached_by(user)


def check_coverage(blocks: Sequence[TransmissionBlock], needed, inventory) -> None:
    """Every needed (subfile, rx) is tiled exactly once by stream pieces."""
    pieces: dict[tuple[SubfileId, int], list] = defaultdict(list)
    for b in blocks:
        for s in b.streams:
            pieces[(s.subfile, s.rx)].append((s.lo, s.hi))
    wanted = {(sub, rx) for sub, rx in needed}
    for key, spans in pieces.items():
        if key not in wanted:
            raise ValidationFailure(f"{key[0]} sent to U{key[1]} but not needed")
    for sub, rx in wanted:
        size = inventory.size(sub)
        cursor = 0
        for lo, hi in sorted(pieces.get((sub, rx), [])):
            if lo != cursor:
                raise ValidationFailure(f"{sub} for U{rx}: pieces do not tile at {cursor}")
            cursor = hi
        if cursor != size:
            raise ValidationFailure(f"{sub} for U{rx}: covered {cursor} of {size}")


# -- full schedules ---------------------------------------------------------------

def _technique_for(scheme: Scheme, tag: EnTag) -> Technique:
    if scheme is Scheme.CLOUD_ONLY or tag.kind is TagKind.CLOUD_ONLY:
        return Technique.SOFT
    if tag.kind is TagKind.SHARED:
        return Technique.ZF_IC
    return Technique.IA_IC


def build_schedule(
    cfg: NetworkConfig,
    demand: DemandVector,
    scheme: Scheme,
    mode: Mode = Mode.SERIAL,
    placement: EmpiricalProfile | None = None,
) -> Schedule:
    scheme, mode = Scheme(scheme), Mode(mode)
    try:
        scheme_delays(cfg, scheme)
    except Infeasible as exc:
        raise NoFeasibleScheme(f"{scheme.value}: {exc}") from None
    inv = AnalyticInventory(cfg) if placement is None else BitInventory(placement)
    needed = needed_subfiles(cfg, demand, inv)
    by_tech: dict[Technique, list] = defaultdict(list)
    for sub, rx in needed:
        by_tech[_technique_for(scheme, sub.tag)].append((sub, rx))

    blocks: list[TransmissionBlock] = []
    for j in range(cfg.kr):
        blocks += build_zf_blocks(cfg, by_tech[Technique.SOFT], j, inv, Technique.SOFT)
    for j in range(cfg.kr):
        exclusive = by_tech[Technique.IA_IC]
        if pure_ic(cfg, j):
            blocks += build_ic_blocks(cfg, exclusive, j, inv)
        else:
            blocks += build_ia_blocks(cfg, exclusive, j, inv)
    for j in range(cfg.kr):
        blocks += build_zf_blocks(cfg, by_tech[Technique.ZF_IC], j, inv, Technique.ZF_IC)
    blocks = [b for b in blocks if b.bits]

    check_coverage(blocks, [(s, rx) for s, rx in needed if inv.size(s)], inv)
    for b in blocks:
        result = validate_block(b, inv)
        if not result:
            raise ValidationFailure(f"constructed block failed validation: {result.reason}")

    soft = sum((Fraction(b.bits) / inv.unit for b in blocks if b.technique is Technique.SOFT), Fraction(0))
    fronthaul = tuple(soft / cfg.kt for _ in range(cfg.kt))
    return Schedule(cfg, scheme, mode, tuple(blocks), fronthaul, inv.exact, inv.unit)


# -- reconciliation ---------------------------------------------------------------

@dataclass(frozen=True)
class ReconcileReport:
    exact: bool
    tolerance: float
    components: dict[str, tuple[Fraction, Fraction]]
    per_class: dict[tuple[int, Technique], tuple[Fraction, Fraction]] = field(default_factory=dict)

    def relative_gap(self, name: str) -> float:
        achieved, analytic = self.components[name]
        if analytic == 0:
            return 0.0 if achieved == 0 else math.inf
        return float(abs(achieved - analytic) / analytic)


def reconcile(schedule: Schedule, breakdown: NdtBreakdown, c: float = 10.0) -> ReconcileReport:
    if schedule.scheme is not breakdown.scheme or schedule.mode is not breakdown.mode:
        raise ValueError("schedule and breakdown describe different scheme/mode")
    tol = 0.0 if schedule.exact else c / math.sqrt(schedule.file_size)
    components = {
        "delta_f": (schedule.achieved_delta_f, breakdown.delta_f),
        "delta_e": (schedule.achieved_delta_e, breakdown.delta_e),
        "delta_total": (schedule.achieved_total, breakdown.delta_total),
    }
    achieved_pc = schedule.per_class()
    per_class = {}
    for contrib in breakdown.per_class:
        for tech, value in contrib.by_technique().items():
            got = achieved_pc.get((contrib.j, tech), Fraction(0))
            if got or value:
                per_class[(contrib.j, tech)] = (got, value)
    for name, (got, want) in components.items():
        if schedule.exact:
            if got != want:
                raise ReconcileFailure(name, got, want)
        elif abs(got - want) > tol * want:
            raise ReconcileFailure(name, got, want)
    if schedule.exact:
        for key, (got, want) in per_class.items():
            if got != want:
                raise ReconcileFailure(f"class {key[0]} {key[1].value}", got, want)
    return ReconcileReport(schedule.exact, tol, components, per_class)


# -- export -----------------------------------------------------------------------

def export_schedule(schedule: Schedule, caches=None) -> str:
    """One line per block: key=value fields, streams separated by ';'."""
    cfg = schedule.cfg
    lines = [
        f"# kt={cfg.kt} kr={cfg.kr} n={cfg.n} mt={cfg.mt} mr={cfg.mr} r={cfg.r} "
        f"scheme={schedule.scheme.value} mode={schedule.mode.value}",
        f"# delta_f={schedule.achieved_delta_f} delta_e={schedule.achieved_delta_e} "
        f"delta_total={schedule.achieved_total} blocks={len(schedule.blocks)}",
    ]
    for i, b in enumerate(schedule.blocks, 1):
        check = validate_block(b, caches)
        status = "pass" if check else f"fail({check.reason})"
        streams = ";".join(s.label() for s in b.streams)
        lines.append(
            f"block={i} technique={b.technique.value} class={b.class_j} dof={b.dof} "
            f"duration={b.duration} valid={status} streams={streams}"
        )
    return "\n".join(lines) + "\n"


def mutate_empty_user_set(block: TransmissionBlock, index: int) -> TransmissionBlock:
    """Copy of ``block`` with one stream's subfile relabelled as cached nowhere."""
    streams = list(block.streams)
    s = streams[index]
    streams[index] = replace(s, subfile=replace(s.subfile, user_set=0))
    return replace(block, streams=tuple(streams))
