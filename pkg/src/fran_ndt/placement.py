"""Finite-F placement: deterministic EN ranges and random user caches.

Bits of a file are addressed as positions ``0 .. F-1``. EN caches hold
contiguous ranges (identical layout for every file); user caches hold a
uniformly random subset of ``floor(M_R F / N)`` positions per file, drawn
from a substream keyed by ``(seed, user, file)`` so the result does not
depend on the order in which caches are materialized.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import CapacityViolation, PartitionError
from .model import (
    CLOUD_ONLY,
    SHARED,
    EnTag,
    NetworkConfig,
    TagKind,
    en_tags,
    is_split,
)


class Regime(str, Enum):
    FRACTIONAL = "Fractional"
    SPLIT = "Split"


@dataclass(frozen=True)
class EnPlacement:
    regime: Regime
    kt: int
    n: int
    file_size: int
    # tag -> [start, stop) bit range, same for every file
    ranges: dict[EnTag, tuple[int, int]]

    @property
    def shared_range(self) -> tuple[int, int]:
        return self.ranges.get(SHARED, (0, 0))

    @property
    def cloud_range(self) -> tuple[int, int]:
        return self.ranges.get(CLOUD_ONLY, (self.file_size, self.file_size))

    def exclusive_range(self, en: int) -> tuple[int, int]:
        return self.ranges.get(EnTag.exclusive(en), (0, 0))

    def tags(self) -> tuple[EnTag, ...]:
        return tuple(sorted(self.ranges))

    def cached_bits_per_file(self, en: int) -> int:
        lo, hi = self.shared_range
        elo, ehi = self.exclusive_range(en)
        return (hi - lo) + (ehi - elo)

    def tag_index(self) -> np.ndarray:
        """Per-bit index into :meth:`tags` (one file's worth)."""
        out = np.full(self.file_size, -1, dtype=np.int16)
        for k, tag in enumerate(self.tags()):
            lo, hi = self.ranges[tag]
            out[lo:hi] = k
        return out


def place_en_caches(cfg: NetworkConfig, file_size: int) -> EnPlacement:
    if file_size < 1:
        raise ValueError("file size must be >= 1")
    F = file_size
    t = cfg.t_t
    ranges: dict[EnTag, tuple[int, int]] = {}
    if is_split(cfg):
        if cfg.kt == 1:
            ranges[SHARED] = (0, F)
        else:
            shared = math.floor((t - 1) * F / (cfg.kt - 1))
            ranges[SHARED] = (0, shared)
            rest = F - shared
            bounds = [shared + i * rest // cfg.kt for i in range(cfg.kt + 1)]
            for i in range(cfg.kt):
                ranges[EnTag.exclusive(i + 1)] = (bounds[i], bounds[i + 1])
        regime = Regime.SPLIT
    else:
        per_en = cfg.mt / cfg.n
        bounds = [math.floor(i * per_en * F) for i in range(cfg.kt + 1)]
        for i in range(cfg.kt):
            ranges[EnTag.exclusive(i + 1)] = (bounds[i], bounds[i + 1])
        if bounds[-1] < F or t < 1:
            ranges[CLOUD_ONLY] = (bounds[-1], F)
        regime = Regime.FRACTIONAL
    return EnPlacement(regime, cfg.kt, cfg.n, F, ranges)


@dataclass(frozen=True)
class UserPlacement:
    kr: int
    n: int
    file_size: int
    per_file: int
    seed: int
    bits: dict[tuple[int, int], np.ndarray] = field(repr=False)

    def cache(self, user: int, file: int) -> np.ndarray:
        return self.bits[(user, file)]

    def files(self) -> list[int]:
        return sorted({f for _, f in self.bits})

    def used_bits(self, user: int) -> int:
        return sum(int(b.sum()) for (u, _), b in self.bits.items() if u == user)


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def cached_per_file(cfg: NetworkConfig, file_size: int) -> int:
    return math.floor(cfg.mr * file_size / cfg.n)


def place_user_caches(
    cfg: NetworkConfig,
    file_size: int,
    seed: int,
    files: Iterable[int] | None = None,
) -> UserPlacement:
    """Random user caches.

    ``files`` restricts which files are materialized; the bits drawn for a
    given ``(user, file)`` are the same whether or not other files are drawn.
    """
    if file_size < 1:
        raise ValueError("file size must be >= 1")
    F = file_size
    k = cached_per_file(cfg, F)
    wanted = range(1, cfg.n + 1) if files is None else sorted(set(files))
    bits = {}
    for user in cfg.users():
        for file in wanted:
            mask = np.zeros(F, dtype=bool)
            if k == F:
                mask[:] = True
            elif k:
                idx = substream(seed, user, file).choice(F, size=k, replace=False, shuffle=False)
                mask[idx] = True
            bits[(user, file)] = mask
    return UserPlacement(cfg.kr, cfg.n, F, k, seed, bits)


@dataclass(frozen=True)
class EmpiricalProfile:
    kr: int
    file_size: int
    tags: tuple[EnTag, ...]
    # file -> counts[tag_index, user_set]
    counts: dict[int, np.ndarray] = field(repr=False)
    # file -> counts of bits of each (tag, user_set) cell also held by user u,
    # keyed (file, u); used to check cache claims against the raw bit sets
    held: dict[tuple[int, int], np.ndarray] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: k for k, t in enumerate(self.tags)})

    def cell(self, file: int, tag: EnTag, user_set: int) -> int:
        return int(self.counts[file][self._index[tag], user_set])

    def user_set_counts(self, file: int) -> np.ndarray:
        """Bits per user subset, summed over EN tags."""
        return self.counts[file].sum(axis=0)

    def class_fractions(self, file: int) -> np.ndarray:
        """Observed fraction of the file cached by each specific user subset."""
        return self.user_set_counts(file) / self.file_size

    def holds(self, user: int, file: int, tag: EnTag, user_set: int) -> bool:
        """True iff every bit of the cell is in ``user``'s cache."""
        k = self._index[tag]
        return bool(self.held[(file, user)][k, user_set] == self.counts[file][k, user_set])


def classify_bits(
    en: EnPlacement,
    users: UserPlacement,
    files: Iterable[int] | None = None,
) -> EmpiricalProfile:
    if en.file_size != users.file_size:
        raise ValueError("placements were built for different file sizes")
    kr = users.kr
    tags = en.tags()
    cells = len(tags) << kr
    tag_idx = en.tag_index().astype(np.int64) << kr
    wanted = users.files() if files is None else sorted(set(files))
    counts, held = {}, {}
    for file in wanted:
        code = tag_idx.copy()
        for u in range(1, kr + 1):
            code |= users.cache(u, file).astype(np.int64) << (u - 1)
        counts[file] = np.bincount(code, minlength=cells).reshape(len(tags), 1 << kr)
        for u in range(1, kr + 1):
            mine = code[users.cache(u, file)]
            held[(file, u)] = np.bincount(mine, minlength=cells).reshape(len(tags), 1 << kr)
    return EmpiricalProfile(kr, en.file_size, tags, counts, held)


@dataclass(frozen=True)
class CapacityReport:
    en_used: dict[int, int]
    en_limit: int
    user_used: dict[int, int]
    user_limit: int

    @property
    def en_utilization(self) -> dict[int, float]:
        return {i: used / self.en_limit if self.en_limit else 0.0 for i, used in self.en_used.items()}

    @property
    def user_utilization(self) -> dict[int, float]:
        return {u: used / self.user_limit if self.user_limit else 0.0 for u, used in self.user_used.items()}


def check_partition(en: EnPlacement) -> None:
    spans = sorted(en.ranges.values())
    cursor = 0
    for lo, hi in spans:
        if lo > hi:
            raise PartitionError(f"range [{lo}, {hi}) is reversed")
        if lo != cursor:
            kind = "overlap" if lo < cursor else "gap"
            raise PartitionError(f"{kind} at bit {min(lo, cursor)}")
        cursor = hi
    if cursor != en.file_size:
        raise PartitionError(f"ranges cover [0, {cursor}) of a {en.file_size}-bit file")


def verify_capacity(
    en: EnPlacement,
    users: UserPlacement,
    cfg: NetworkConfig,
    file_size: int,
) -> CapacityReport:
    check_partition(en)
    F = file_size
    # per-file rounding slack: one bit on the shared part, one on the exclusive
    en_limit = cfg.n * math.ceil(cfg.mt * F / cfg.n)
    en_used = {}
    for i in range(1, cfg.kt + 1):
        used = cfg.n * en.cached_bits_per_file(i)
        if used > en_limit:
            raise CapacityViolation(f"EN{i}", used, en_limit)
        en_used[i] = used
    user_limit = math.floor(cfg.mr * F)
    user_used = {}
    for u in cfg.users():
        used = users.used_bits(u)
        if used > user_limit:
            raise CapacityViolation(f"U{u}", used, user_limit)
        user_used[u] = used
    return CapacityReport(en_used, en_limit, user_used, user_limit)


# -- binary dump -------------------------------------------------------------

MAGIC = b"FRNP"
VERSION = 1
_HEADER = struct.Struct("<4sHHHI6qQQ")
_RANGE = struct.Struct("<BHQQ")
_COUNT = struct.Struct("<IIQ")


def _rat(x: Fraction) -> tuple[int, int]:
    return x.numerator, x.denominator


def dump_placement(path, cfg: NetworkConfig, en: EnPlacement, users: UserPlacement) -> None:
    """Write a placement pair to ``path`` (format documented in README)."""
    out = bytearray()
    out += _HEADER.pack(
        MAGIC, VERSION, cfg.kt, cfg.kr, cfg.n,
        *_rat(cfg.mt), *_rat(cfg.mr), *_rat(cfg.r),
        en.file_size, users.seed,
    )
    tags = en.tags()
    out += struct.pack("<H", len(tags))
    for tag in tags:
        lo, hi = en.ranges[tag]
        out += _RANGE.pack(int(tag.kind), tag.en, lo, hi - lo)
    keys = sorted(users.bits)
    out += struct.pack("<I", len(keys))
    for user, file in keys:
        mask = users.bits[(user, file)]
        out += _COUNT.pack(user, file, int(mask.sum()))
        out += np.packbits(mask, bitorder="little").tobytes()
    Path(path).write_bytes(bytes(out))


def load_placement(path) -> tuple[NetworkConfig, EnPlacement, UserPlacement]:
    data = Path(path).read_bytes()
    magic, version, kt, kr, n, mtn, mtd, mrn, mrd, rn, rd, F, seed = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError("not a placement dump")
    if version != VERSION:
        raise ValueError(f"unsupported placement dump version {version}")
    cfg = NetworkConfig(kt, kr, n, Fraction(mtn, mtd), Fraction(mrn, mrd), Fraction(rn, rd))
    pos = _HEADER.size
    (ntags,) = struct.unpack_from("<H", data, pos)
    pos += 2
    ranges = {}
    for _ in range(ntags):
        kind, idx, start, length = _RANGE.unpack_from(data, pos)
        pos += _RANGE.size
        ranges[EnTag(TagKind(kind), idx)] = (start, start + length)
    regime = Regime.SPLIT if is_split(cfg) else Regime.FRACTIONAL
    en = EnPlacement(regime, kt, n, F, ranges)
    (nsets,) = struct.unpack_from("<I", data, pos)
    pos += 4
    nbytes = (F + 7) // 8
    bits = {}
    per_file = cached_per_file(cfg, F)
    for _ in range(nsets):
        user, file, count = _COUNT.unpack_from(data, pos)
        pos += _COUNT.size
        raw = np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=pos)
        pos += nbytes
        mask = np.unpackbits(raw, count=F, bitorder="little").astype(bool)
        if int(mask.sum()) != count:
            raise ValueError(f"corrupt bit set for user {user}, file {file}")
        bits[(user, file)] = mask
    return cfg, en, UserPlacement(kr, n, F, per_file, seed, bits)


__all__ = [
    "CapacityReport",
    "EmpiricalProfile",
    "EnPlacement",
    "Regime",
    "UserPlacement",
    "check_partition",
    "classify_bits",
    "dump_placement",
    "en_tags",
    "load_placement",
    "place_en_caches",
    "place_user_caches",
    "verify_capacity",
]
