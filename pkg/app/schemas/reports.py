from typing import Literal

from pydantic import BaseModel, computed_field


class ClosureReport(BaseModel):
    closed: bool
    element_count: int
    checks_run: int
    counterexample: str | None = None

    @computed_field
    @property
    def passed(self) -> bool:
        return self.closed


class CorrectnessReport(BaseModel):
    mode: Literal["exhaustive", "sampled"]
    output_mode: Literal["classical", "quantum"]
    n: int
    m: int
    key_samples: int
    branches_checked: int
    worst_fidelity_deficit: float | None = None
    worst_total_variation: float | None = None
    tolerance: float
    passed: bool


class BlindnessReport(BaseModel):
    mode: Literal["exhaustive", "sampled"]
    n: int
    state_trace_distance: float
    instruction_distribution_deviation: float
    sample_count: int | None = None
    enumeration_size: int | None = None
    state_threshold: float
    instruction_threshold: float
    ks_min_p_value: float | None = None
    cross_layer_resultant: float | None = None
    cross_layer_flagged: bool | None = None
    translation_invariant: bool | None = None
    passed: bool


class TeleportationReport(BaseModel):
    trials: int
    branches_checked: int
    worst_fidelity: float
    tolerance: float
    passed: bool


class ControlCheck(BaseModel):
    name: str
    failed_as_expected: bool
    detail: str


class NegativeControlReport(BaseModel):
    """Deliberately broken inputs; passes only if every suite catches its breakage."""

    checks: list[ControlCheck]
    passed: bool
