"""Network parameters, subfile labels and the per-class size profile.

All analytic quantities are kept as :class:`fractions.Fraction` so that
identities such as ``sum_j C(K_R, j) f(j) == 1`` can be checked exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from fractions import Fraction
from math import comb
from typing import Iterator, Sequence, Union

from .errors import InvalidConfig, InvalidParameter, LibraryTooSmall

Rational = Union[int, Fraction, str]


class Scheme(str, Enum):
    EDGE_ONLY = "EdgeOnly"
    CLOUD_ONLY = "CloudOnly"
    HYBRID = "Hybrid"


class Mode(str, Enum):
    SERIAL = "serial"
    PIPELINED = "pipelined"


class Technique(str, Enum):
    IA_IC = "IA-IC"
    ZF_IC = "ZF-IC"
    SOFT = "SoftTransfer"


@dataclass(frozen=True)
class NetworkConfig:
    kt: int
    kr: int
    n: int
    mt: Fraction = Fraction(0)
    mr: Fraction = Fraction(0)
    r: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("mt", "mr", "r"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))

    @property
    def t_t(self) -> Fraction:
        return self.kt * self.mt / self.n

    @property
    def t_r(self) -> Fraction:
        return self.kr * self.mr / self.n

    @property
    def user_ratio(self) -> Fraction:
        """Fraction M_R/N of every file each user caches."""
        return self.mr / self.n

    def users(self) -> range:
        return range(1, self.kr + 1)

    def replace(self, **changes) -> "NetworkConfig":
        values = dict(kt=self.kt, kr=self.kr, n=self.n, mt=self.mt, mr=self.mr, r=self.r)
        values.update(changes)
        return NetworkConfig(**values)


def validate_config(cfg: NetworkConfig) -> NetworkConfig:
    problems: list[InvalidParameter] = []
    for name in ("kt", "kr", "n"):
        value = getattr(cfg, name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            problems.append(InvalidParameter(name, f"must be an integer >= 1, got {value!r}"))
    if problems:
        _raise(problems)
    if cfg.n < cfg.kr:
        problems.append(LibraryTooSmall(cfg.n, cfg.kr))
    if not 0 <= cfg.mt <= cfg.n:
        problems.append(InvalidParameter("mt", f"must lie in [0, N={cfg.n}], got {cfg.mt}"))
    if not 0 <= cfg.mr <= cfg.n:
        problems.append(InvalidParameter("mr", f"must lie in [0, N={cfg.n}], got {cfg.mr}"))
    if cfg.r < 0:
        problems.append(InvalidParameter("r", f"must be >= 0, got {cfg.r}"))
    if problems:
        _raise(problems)
    return cfg


def _raise(problems):
    if len(problems) == 1:
        raise problems[0]
    raise InvalidConfig(problems)


@dataclass(frozen=True)
class DemandVector:
    demands: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(int(d) for d in self.demands))

    def check(self, cfg: NetworkConfig) -> "DemandVector":
        if len(self.demands) != cfg.kr:
            raise InvalidParameter("demand", f"expected {cfg.kr} entries, got {len(self.demands)}")
        for d in self.demands:
            if not 1 <= d <= cfg.n:
                raise InvalidParameter("demand", f"file index {d} outside [1, {cfg.n}]")
        return self

    def file_of(self, user: int) -> int:
        return self.demands[user - 1]

    @classmethod
    def worst_case(cls, cfg: NetworkConfig) -> "DemandVector":
        """Every user asks for a different file."""
        return cls(tuple(range(1, cfg.kr + 1)))


# -- subfile labels ---------------------------------------------------------

class TagKind(int, Enum):
    # numeric values fix the canonical ordering of tags inside a file
    SHARED = 0
    EXCLUSIVE = 1
    CLOUD_ONLY = 2


@dataclass(frozen=True, order=True)
class EnTag:
    kind: TagKind
    en: int = 0

    def __str__(self):
        if self.kind is TagKind.EXCLUSIVE:
            return str(self.en)
        return "*" if self.kind is TagKind.SHARED else "c"

    @classmethod
    def exclusive(cls, en: int) -> "EnTag":
        return cls(TagKind.EXCLUSIVE, en)


SHARED = EnTag(TagKind.SHARED)
CLOUD_ONLY = EnTag(TagKind.CLOUD_ONLY)


def members(user_set: int) -> tuple[int, ...]:
    """Users (1-based) contained in a bit-encoded user set."""
    out = []
    u = 1
    while user_set:
        if user_set & 1:
            out.append(u)
        user_set >>= 1
        u += 1
    return tuple(out)


def user_mask(users: Sequence[int]) -> int:
    mask = 0
    for u in users:
        mask |= 1 << (u - 1)
    return mask


@dataclass(frozen=True, order=True)
class SubfileId:
    file: int
    tag: EnTag
    user_set: int = 0

    @property
    def class_j(self) -> int:
        return bin(self.user_set).count("1")

    def cached_by(self, user: int) -> bool:
        return bool(self.user_set >> (user - 1) & 1)

    def users(self) -> tuple[int, ...]:
        return members(self.user_set)

    def __str__(self):
        users = "".join(str(u) for u in self.users()) or "{}"
        return f"W[{self.file},{self.tag},{users}]"


def is_split(cfg: NetworkConfig) -> bool:
    """Whether EN placement uses the shared + exclusive layout.

    t_T = 1 is resolved to the fractional layout (empty cloud part), except
    for a single EN, where the only capacity-respecting layout is a fully
    shared library.
    """
    t = cfg.t_t
    return t > 1 or (cfg.kt == 1 and t == 1)


def en_tags(cfg: NetworkConfig) -> tuple[EnTag, ...]:
    if cfg.kt == 1 and cfg.t_t == 1:
        return (SHARED,)
    exclusive = tuple(EnTag.exclusive(i) for i in range(1, cfg.kt + 1))
    if is_split(cfg):
        return (SHARED,) + exclusive
    if cfg.t_t < 1:
        return exclusive + (CLOUD_ONLY,)
    return exclusive


def tag_fraction(cfg: NetworkConfig, tag: EnTag) -> Fraction:
    """Normalized portion of every file that carries ``tag``."""
    t, kt = cfg.t_t, cfg.kt
    if cfg.kt == 1 and t == 1:
        return Fraction(1) if tag == SHARED else Fraction(0)
    if is_split(cfg):
        if tag == SHARED:
            return (t - 1) / (kt - 1)
        if tag.kind is TagKind.EXCLUSIVE:
            return (1 - cfg.mt / cfg.n) / (kt - 1)
        return Fraction(0)
    if tag.kind is TagKind.EXCLUSIVE:
        return cfg.mt / cfg.n
    if tag == CLOUD_ONLY:
        return 1 - t
    return Fraction(0)


def user_sets(cfg: NetworkConfig) -> range:
    if cfg.mr == 0:
        return range(1)
    return range(1 << cfg.kr)


def enumerate_subfiles(cfg: NetworkConfig) -> list[SubfileId]:
    tags = en_tags(cfg)
    return [
        SubfileId(i, tag, s)
        for i in range(1, cfg.n + 1)
        for tag in tags
        for s in user_sets(cfg)
    ]


@dataclass(frozen=True)
class ClassSizeProfile:
    fractions: tuple[Fraction, ...]
    residual: Fraction
    kr: int = field(default=0)

    def __getitem__(self, j: int) -> Fraction:
        return self.fractions[j]

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.fractions)

    def total(self) -> Fraction:
        return sum((comb(self.kr, j) * f for j, f in enumerate(self.fractions)), Fraction(0))


@lru_cache(maxsize=4096)
def class_profile(cfg: NetworkConfig) -> ClassSizeProfile:
    p = cfg.user_ratio
    q = 1 - p
    kr = cfg.kr
    f = tuple(p**j * q ** (kr - j) for j in range(kr + 1))
    residual = sum((comb(kr - 1, j) * f[j] for j in range(kr)), Fraction(0))
    return ClassSizeProfile(f, residual, kr)


def subfile_size(cfg: NetworkConfig, sub: SubfileId, profile: ClassSizeProfile | None = None) -> Fraction:
    """Normalized (per-F) size of a subfile."""
    profile = profile or class_profile(cfg)
    if cfg.mr == 0 and sub.user_set:
        return Fraction(0)
    return tag_fraction(cfg, sub.tag) * profile[sub.class_j]


def parse_rational(text: Rational) -> Fraction:
    if isinstance(text, str):
        text = text.strip()
    return Fraction(text)
