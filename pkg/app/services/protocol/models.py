from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from app.exceptions import ConfigError, SizeError
from app.schemas.subgroup import SubgroupSpec
from app.services.diaggroup import DiagonalUnitary, identity, is_member, sample_uniform
from app.services.qsim import Bits, zero_bits


class OutputMode(str, enum.Enum):
    CLASSICAL = "classical"
    QUANTUM = "quantum"

    @property
    def wire_code(self) -> int:
        return 0 if self is OutputMode.CLASSICAL else 1

    @classmethod
    def from_wire(cls, code: int) -> "OutputMode":
        return {0: cls.CLASSICAL, 1: cls.QUANTUM}[code]


@dataclass(frozen=True)
class Computation:
    """Public shape (n, m) plus Alice's secret layers U_1..U_m."""

    n: int
    m: int
    layers: tuple[DiagonalUnitary, ...]
    output_mode: OutputMode = OutputMode.CLASSICAL

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "output_mode", OutputMode(self.output_mode))
        if self.n < 1 or self.m < 1:
            raise SizeError(f"computation needs n, m >= 1 (n={self.n}, m={self.m})")
        if len(self.layers) != self.m:
            raise ConfigError(f"{len(self.layers)} layers given for m={self.m}", key="layers")
        for i, layer in enumerate(self.layers, start=1):
            if layer.num_qubits != self.n:
                raise ConfigError(
                    f"layer {i} acts on {layer.num_qubits} qubits, n={self.n}", key=f"layers[{i - 1}]"
                )

    def check_subgroup(self, spec: SubgroupSpec) -> None:
        for i, layer in enumerate(self.layers, start=1):
            if not is_member(spec, layer):
                raise ConfigError(f"layer {i} is not in the configured subgroup", key=f"layers[{i - 1}]")

    @classmethod
    def random(
        cls,
        n: int,
        m: int,
        spec: SubgroupSpec,
        rng: np.random.Generator,
        output_mode: OutputMode = OutputMode.CLASSICAL,
    ) -> "Computation":
        return cls(n, m, tuple(sample_uniform(spec, n, rng) for _ in range(m)), output_mode)

    @classmethod
    def identity(
        cls, n: int, m: int, k: int = 1, output_mode: OutputMode = OutputMode.CLASSICAL
    ) -> "Computation":
        return cls(n, m, tuple(identity(n, k) for _ in range(m)), output_mode)


@dataclass(frozen=True)
class SecretKey:
    """Alice's per-layer secrets (D_i, r_i), indexed from layer 1."""

    rotations: tuple[DiagonalUnitary, ...]
    flips: tuple[Bits, ...]

    def __post_init__(self):
        if len(self.rotations) != len(self.flips):
            raise SizeError("secret key needs one (D_i, r_i) pair per layer")

    @property
    def m(self) -> int:
        return len(self.rotations)

    def layer(self, i: int) -> tuple[DiagonalUnitary, Bits]:
        if not 1 <= i <= self.m:
            raise SizeError(f"layer {i} outside 1..{self.m}")
        return self.rotations[i - 1], self.flips[i - 1]

    @classmethod
    def sample(cls, spec: SubgroupSpec, n: int, m: int, rng: np.random.Generator) -> "SecretKey":
        rotations, flips = [], []
        for _ in range(m):
            rotations.append(sample_uniform(spec, n, rng))
            flips.append(tuple(int(b) for b in rng.integers(0, 2, size=n)))
        return cls(tuple(rotations), tuple(flips))

    @classmethod
    def trivial(cls, n: int, m: int, k: int = 1) -> "SecretKey":
        return cls(tuple(identity(n, k) for _ in range(m)), tuple(zero_bits(n) for _ in range(m)))


def dependency_set(i: int) -> tuple[int, ...]:
    """S_i = {i, i-2, ...} restricted to positive layers."""
    return tuple(range(i, 0, -2))


@dataclass(frozen=True)
class DependencySets:
    m: int

    def __getitem__(self, i: int) -> tuple[int, ...]:
        if not 1 <= i <= self.m:
            raise SizeError(f"dependency set S_{i} outside 1..{self.m}")
        return dependency_set(i)

    def as_dict(self) -> dict[int, tuple[int, ...]]:
        return {i: dependency_set(i) for i in range(1, self.m + 1)}
