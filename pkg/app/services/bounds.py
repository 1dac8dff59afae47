"""Closed-form bounds on Γ(N), the number of single-parameter gates a client can
hide while sending N qubits, under four restrictions on the client's device.

Everything is exact: integers and Fractions throughout, floats only for display.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from app.exceptions import ConfigError
from app.schemas.subgroup import SubgroupSpec
from app.services.diaggroup import free_parameter_count


@dataclass(frozen=True)
class SeparableSingleQubit:
    name = "separable1q"


@dataclass(frozen=True)
class SeparableKQubit:
    k: int
    name = "separablekq"


@dataclass(frozen=True)
class Commuting:
    """Commuting gates only, optionally with a gate budget f(N) spread over m layers of n qubits."""

    f: int | None = None
    n: int | None = None
    m: int | None = None
    name = "commuting"


@dataclass(frozen=True)
class MemoryK:
    k: int
    n: int
    name = "memory"


Setting = Union[SeparableSingleQubit, SeparableKQubit, Commuting, MemoryK]
SETTING_NAMES = ("separable1q", "separablekq", "commuting", "memory")


@dataclass(frozen=True)
class GammaBounds:
    setting: Setting
    N: int
    lower: Fraction
    upper: Fraction
    # Memory setting only: the bound before removing redundant parameters.
    coarse_upper: Fraction | None = None
    # Separable settings only: real dimension of the preparable states.
    manifold_dimension: int | None = None


def make_setting(
    name: str, k: int | None = None, n: int | None = None, f: int | None = None, m: int | None = None
) -> Setting:
    if name == "separable1q":
        return SeparableSingleQubit()
    if name == "separablekq":
        if k is None:
            raise ConfigError("the k-qubit separable setting needs k", key="k")
        return SeparableKQubit(k)
    if name == "commuting":
        return Commuting(f, n, m)
    if name == "memory":
        if k is None or n is None:
            raise ConfigError("the bounded-memory setting needs k and n", key="k" if k is None else "n")
        return MemoryK(k, n)
    raise ConfigError(f"unknown setting {name!r}, expected one of {', '.join(SETTING_NAMES)}", key="setting")


def _check_positive(value: int | None, key: str) -> None:
    if value is None or value < 1:
        raise ConfigError(f"must be a positive integer, got {value}", key=key)


def gamma_bounds(setting: Setting, N: int) -> GammaBounds:
    _check_positive(N, "N")

    if isinstance(setting, SeparableSingleQubit):
        manifold = state_manifold_dimension(setting, N)
        return GammaBounds(setting, N, Fraction(N), Fraction(manifold), manifold_dimension=manifold)

    if isinstance(setting, SeparableKQubit):
        k = setting.k
        _check_positive(k, "k")
        if N % k:
            raise ConfigError(f"N={N} must be divisible by k={k}", key="N")
        lower = Fraction(N, k) * (2**k - 1)
        manifold = state_manifold_dimension(setting, N)
        return GammaBounds(setting, N, lower, Fraction(manifold), manifold_dimension=manifold)

    if isinstance(setting, Commuting):
        if setting.f is None:
            gamma = Fraction(2**N - 1)
            return GammaBounds(setting, N, gamma, gamma)
        f, n, m = setting.f, setting.n, setting.m
        _check_positive(f, "f")
        _check_positive(n, "n")
        _check_positive(m, "m")
        if n < math.log2(f):
            raise ConfigError(f"a budget of f={f} gates needs n >= log2 f, got n={n}", key="n")
        if m < 2 or f % (m - 1):
            raise ConfigError(f"m-1 = {m - 1} must divide the gate budget f={f}", key="m")
        return GammaBounds(setting, N, Fraction(f), Fraction(f))

    if isinstance(setting, MemoryK):
        k, n = setting.k, setting.n
        _check_positive(k, "k")
        _check_positive(n, "n")
        if n < k:
            raise ConfigError(f"register width n={n} must be at least the memory k={k}", key="n")
        if N < k:
            raise ConfigError(f"N={N} must be at least k={k}", key="N")
        lower = Fraction(N, n) * (2 ** (k - 1) * (n - k + 2) - 1)
        upper = Fraction((N - k) * (2 ** (2 * k) - 2 ** (2 * (k - 1))) + 2 ** (2 * k) - 1)
        coarse = Fraction((N - k + 1) * (2 ** (2 * k) - 1))
        return GammaBounds(setting, N, lower, upper, coarse)

    raise ConfigError(f"unknown setting {setting!r}", key="setting")


def state_manifold_dimension(setting: Setting, N: int) -> int:
    """Real dimension of the states the client can prepare, for the separable settings."""
    if isinstance(setting, SeparableSingleQubit):
        return 2 * N
    if isinstance(setting, SeparableKQubit):
        if N % setting.k:
            raise ConfigError(f"N={N} must be divisible by k={setting.k}", key="N")
        return (N // setting.k) * (2 ** (setting.k + 1) - 2)
    raise ConfigError("manifold dimension is only tabulated for the separable settings", key="setting")


@dataclass(frozen=True)
class AchievedRate:
    hidden_gates: int
    N: int
    rate: Fraction


def achieved_rate(spec: SubgroupSpec, n: int, m: int, count_return_register: bool = False) -> AchievedRate:
    """Free phases hidden by a session against the qubits it transmits."""
    _check_positive(m, "m")
    hidden = m * free_parameter_count(spec, n)
    N = n * m + (n if count_return_register else 0)
    return AchievedRate(hidden, N, Fraction(hidden, N))


@dataclass(frozen=True)
class ComparisonRow:
    protocol: str
    expression: str
    gates: Fraction | None
    gap: Fraction | None
    note: str = ""


def protocol_comparison(N: int, n: int, k: int = 1) -> list[ComparisonRow]:
    """Gate counts for N transmitted qubits against the separable upper bound 2N."""
    if N < 2:
        raise ConfigError(f"N must be at least 2, got {N}", key="N")
    if n < 2:
        raise ConfigError(f"n must be at least 2, got {n}", key="n")
    upper = Fraction(2 * N)
    rows = [
        ComparisonRow("UBQC (explicit)", "3N/4", Fraction(3 * N, 4), upper / Fraction(3 * N, 4)),
        ComparisonRow("UBQC (general)", "N", Fraction(N), upper / N),
    ]
    if N % k:
        raise ConfigError(f"N={N} must be divisible by k={k}", key="N")
    # one k-qubit register per layer transmits exactly N qubits
    gubqc = achieved_rate(SubgroupSpec(kind="continuous", block_size=k), k, N // k)
    separable_k = gamma_bounds(SeparableKQubit(k), N)
    rows.append(
        ComparisonRow(
            f"GUBQC (k={k})",
            "(N/k)(2^k - 1)",
            Fraction(gubqc.hidden_gates),
            separable_k.upper / gubqc.hidden_gates,
            "gap against the k-qubit separable bound" if k > 1 else "",
        )
    )
    rows.append(
        ComparisonRow(
            "GMMR",
            f"~ N/log2(n) = {N / math.log2(n):.4g}·c",
            None,
            None,
            "proportionality constant unspecified",
        )
    )
    rows.append(ComparisonRow("upper bound (separable)", "2N", upper, Fraction(1)))
    return rows
