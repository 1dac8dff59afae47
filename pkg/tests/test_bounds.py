from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from app.exceptions import ConfigError
from app.schemas.subgroup import SubgroupSpec
from app.services.bounds import (
    Commuting,
    MemoryK,
    SeparableKQubit,
    SeparableSingleQubit,
    achieved_rate,
    gamma_bounds,
    make_setting,
    protocol_comparison,
    state_manifold_dimension,
)


def bounds_pair(setting, N):
    b = gamma_bounds(setting, N)
    return b.lower, b.upper


def test_separable_single_qubit():
    assert bounds_pair(SeparableSingleQubit(), 8) == (8, 16)


def test_separable_k_qubit():
    assert bounds_pair(SeparableKQubit(4), 4) == (15, 30)
    assert bounds_pair(SeparableKQubit(2), 6) == (9, 18)
    with pytest.raises(ConfigError, match="divisible"):
        gamma_bounds(SeparableKQubit(3), 8)


def test_memory_setting():
    b = gamma_bounds(MemoryK(k=2, n=4), 8)
    assert (b.lower, b.upper, b.coarse_upper) == (14, 87, 105)
    with pytest.raises(ConfigError) as info:
        gamma_bounds(MemoryK(k=3, n=2), 8)
    assert info.value.key == "n"
    with pytest.raises(ConfigError) as info:
        gamma_bounds(MemoryK(k=3, n=4), 2)
    assert info.value.key == "N"


def test_memory_lower_bound_can_be_fractional():
    b = gamma_bounds(MemoryK(k=1, n=3), 4)
    assert b.lower == 4
    b = gamma_bounds(MemoryK(k=2, n=3), 4)
    assert b.lower == Fraction(4, 3) * 5


def test_commuting_setting():
    assert bounds_pair(Commuting(f=64, n=6, m=2), 12) == (64, 64)
    assert bounds_pair(Commuting(), 5) == (31, 31)


@pytest.mark.parametrize(
    "setting, key",
    [
        (Commuting(f=64, n=5, m=2), "n"),
        (Commuting(f=64, n=6, m=4), "m"),
        (Commuting(f=64, n=6, m=1), "m"),
        (Commuting(f=64, n=None, m=2), "n"),
    ],
)
def test_commuting_budget_conditions(setting, key):
    with pytest.raises(ConfigError) as info:
        gamma_bounds(setting, 12)
    assert info.value.key == key


def test_nonpositive_N():
    with pytest.raises(ConfigError) as info:
        gamma_bounds(SeparableSingleQubit(), 0)
    assert info.value.key == "N"


def test_make_setting():
    assert make_setting("separable1q") == SeparableSingleQubit()
    assert make_setting("memory", k=2, n=4) == MemoryK(2, 4)
    assert make_setting("commuting", f=8, n=3, m=3) == Commuting(8, 3, 3)
    with pytest.raises(ConfigError) as info:
        make_setting("memory", k=2)
    assert info.value.key == "n"
    with pytest.raises(ConfigError):
        make_setting("entangled")


def test_manifold_dimension():
    assert state_manifold_dimension(SeparableSingleQubit(), 8) == 16
    assert state_manifold_dimension(SeparableKQubit(2), 4) == 12
    with pytest.raises(ConfigError):
        state_manifold_dimension(Commuting(), 4)
    assert gamma_bounds(SeparableKQubit(2), 4).manifold_dimension == 12
    assert gamma_bounds(SeparableSingleQubit(), 8).upper == state_manifold_dimension(SeparableSingleQubit(), 8)
    assert gamma_bounds(MemoryK(k=2, n=4), 8).manifold_dimension is None


@given(N=st.integers(1, 64))
def test_one_qubit_blocks_reduce_to_single_qubit_setting(N):
    assert bounds_pair(SeparableKQubit(1), N) == bounds_pair(SeparableSingleQubit(), N)


@given(k=st.integers(1, 8))
def test_full_memory_matches_k_qubit_lower_bound(k):
    assert gamma_bounds(MemoryK(k=k, n=k), k).lower == gamma_bounds(SeparableKQubit(k), k).lower


@given(k=st.integers(1, 4), extra_n=st.integers(0, 4), extra_N=st.integers(0, 60))
def test_memory_bounds_are_ordered(k, extra_n, extra_N):
    b = gamma_bounds(MemoryK(k=k, n=k + extra_n), k + extra_N)
    assert b.lower <= b.upper <= b.coarse_upper


@given(k=st.integers(1, 6), blocks=st.integers(1, 10))
def test_separable_bounds_are_ordered(k, blocks):
    b = gamma_bounds(SeparableKQubit(k), k * blocks)
    assert 0 < b.lower <= b.upper == 2 * b.lower


@pytest.mark.parametrize("n, m", [(1, 1), (3, 2), (5, 4)])
def test_single_qubit_blocks_rate_one(n, m):
    assert achieved_rate(SubgroupSpec(kind="continuous", block_size=1), n, m).rate == 1


def test_rate_examples():
    two = achieved_rate(SubgroupSpec(kind="continuous", block_size=2), 2, 1)
    assert two.rate == Fraction(3, 2)
    four = achieved_rate(SubgroupSpec(kind="continuous", block_size=4), 4, 3)
    assert (four.hidden_gates, four.N, four.rate) == (45, 12, Fraction(15, 4))


def test_rate_with_return_register():
    rate = achieved_rate(SubgroupSpec(kind="continuous", block_size=4), 4, 3, count_return_register=True)
    assert (rate.hidden_gates, rate.N) == (45, 16)


def test_rate_needs_continuous_group(q8):
    with pytest.raises(ConfigError):
        achieved_rate(q8, 2, 2)


def test_comparison_rows():
    rows = {row.protocol: row for row in protocol_comparison(8, 8)}
    explicit = rows["UBQC (explicit)"]
    assert (explicit.gates, explicit.gap) == (6, Fraction(8, 3))
    general = rows["UBQC (general)"]
    assert (general.gates, general.gap) == (8, 2)
    assert rows["upper bound (separable)"].gates == 16
    gmmr = rows["GMMR"]
    assert gmmr.gates is None
    assert gmmr.note == "proportionality constant unspecified"


@pytest.mark.parametrize("N, k", [(8, 1), (8, 2), (12, 3), (16, 4)])
def test_comparison_row_is_the_achieved_rate(N, k):
    row = [r for r in protocol_comparison(N, N, k=k) if r.protocol.startswith("GUBQC")][0]
    rate = achieved_rate(SubgroupSpec(kind="continuous", block_size=k), k, N // k)
    assert row.gates == rate.hidden_gates
    assert rate.N == N


def test_comparison_with_blocks():
    row = [r for r in protocol_comparison(8, 8, k=2) if r.protocol.startswith("GUBQC")][0]
    assert (row.gates, row.gap) == (12, 2)
    with pytest.raises(ConfigError, match="divisible"):
        protocol_comparison(9, 9, k=2)


def test_comparison_preconditions():
    with pytest.raises(ConfigError):
        protocol_comparison(1, 4)
    with pytest.raises(ConfigError):
        protocol_comparison(8, 1)
