from fractions import Fraction
from math import comb

import pytest

import oracle
from fran_ndt.errors import InvalidConfig, InvalidParameter, LibraryTooSmall
from fran_ndt.model import (
    CLOUD_ONLY,
    SHARED,
    DemandVector,
    EnTag,
    NetworkConfig,
    SubfileId,
    class_profile,
    en_tags,
    enumerate_subfiles,
    members,
    parse_rational,
    subfile_size,
    tag_fraction,
    user_mask,
    validate_config,
)


def test_fields_become_fractions():
    cfg = NetworkConfig(3, 3, 3, "1/2", 1, 0.5)
    assert cfg.mt == Fraction(1, 2) and cfg.mr == 1 and cfg.r == Fraction(1, 2)
    assert cfg.t_t == Fraction(1, 2) and cfg.t_r == 1


@pytest.mark.parametrize(
    "cfg, name",
    [
        (NetworkConfig(0, 3, 3), "kt"),
        (NetworkConfig(3, 3, 3, mt=4), "mt"),
        (NetworkConfig(3, 3, 3, mr=-1), "mr"),
        (NetworkConfig(3, 3, 3, r=-1), "r"),
    ],
)
def test_invalid_parameter_names_field(cfg, name):
    with pytest.raises(InvalidParameter) as exc:
        validate_config(cfg)
    assert exc.value.name == name


def test_library_smaller_than_user_count():
    with pytest.raises(LibraryTooSmall):
        validate_config(NetworkConfig(2, 4, 3))


def test_multiple_problems_are_collected():
    with pytest.raises(InvalidConfig) as exc:
        validate_config(NetworkConfig(2, 3, 3, mt=9, r=-1))
    assert {p.name for p in exc.value.problems} == {"mt", "r"}


def test_user_set_encoding_round_trips():
    assert members(user_mask([1, 3])) == (1, 3)
    sub = SubfileId(1, EnTag.exclusive(1), user_mask([1, 3]))
    assert sub.class_j == 2 and sub.cached_by(3) and not sub.cached_by(2)
    assert str(sub) == "W[1,1,13]"
    assert str(SubfileId(2, SHARED, 0)) == "W[2,*,{}]"


def test_twenty_four_labels_per_file():
    cfg = NetworkConfig(3, 3, 3, mt=1, mr=1)
    labels = [s for s in enumerate_subfiles(cfg) if s.file == 1]
    assert len(labels) == 24
    got = {(s.tag.en, frozenset(s.users())) for s in labels}
    assert got == set(oracle.subfile_labels(3, 3))


def test_tags_by_regime():
    assert en_tags(NetworkConfig(3, 3, 3, mt=Fraction(1, 2))) == tuple(EnTag.exclusive(i) for i in (1, 2, 3)) + (
        CLOUD_ONLY,
    )
    assert en_tags(NetworkConfig(3, 3, 3, mt=1)) == tuple(EnTag.exclusive(i) for i in (1, 2, 3))
    assert en_tags(NetworkConfig(3, 3, 3, mt=2))[0] == SHARED
    assert en_tags(NetworkConfig(1, 3, 3, mt=3)) == (SHARED,)


@pytest.mark.parametrize("mt", [0, Fraction(1, 2), 1, 2, 3])
def test_tag_fractions_cover_file(mt):
    cfg = NetworkConfig(3, 3, 3, mt=mt, mr=1)
    assert sum(tag_fraction(cfg, t) for t in en_tags(cfg)) == 1


@pytest.mark.parametrize("kr, n, mr", [(1, 1, 0), (3, 3, 1), (4, 5, Fraction(2, 3)), (6, 7, 7)])
def test_profile_matches_subset_enumeration(kr, n, mr):
    cfg = NetworkConfig(2, kr, n, mr=mr)
    prof = class_profile(cfg)
    mass = oracle.class_mass(kr, n, mr)
    assert [comb(kr, j) * prof[j] for j in range(kr + 1)] == mass
    assert prof.total() == 1
    assert prof.residual == oracle.residual(kr, n, mr) == 1 - Fraction(mr, n)


def test_subfile_sizes_sum_to_library():
    cfg = NetworkConfig(3, 3, 3, mt=2, mr=1)
    assert sum(subfile_size(cfg, s) for s in enumerate_subfiles(cfg)) == cfg.n


def test_no_user_cache_means_one_set():
    cfg = NetworkConfig(2, 3, 3, mt=1)
    assert {s.user_set for s in enumerate_subfiles(cfg)} == {0}


def test_demand_vector():
    cfg = NetworkConfig(2, 3, 4)
    d = DemandVector.worst_case(cfg).check(cfg)
    assert d.demands == (1, 2, 3) and d.file_of(2) == 2
    with pytest.raises(InvalidParameter):
        DemandVector((1, 5, 2)).check(cfg)
    with pytest.raises(InvalidParameter):
        DemandVector((1, 2)).check(cfg)


def test_parse_rational():
    assert parse_rational(" 3/2 ") == Fraction(3, 2)
    assert parse_rational("0.25") == Fraction(1, 4)
    with pytest.raises(ValueError):
        parse_rational("abc")
