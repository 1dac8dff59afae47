from typing import Literal

from pydantic import BaseModel, Field, model_validator


class SubgroupSpec(BaseModel):
    """Which diagonal group the secrets and hidden layers are drawn from.

    ``continuous`` is the full torus of block phases; ``discrete`` restricts
    every free phase to multiples of 2π/order (order=8, block_size=1 is the
    familiar {0, π/4, …, 7π/4} angle set).
    """

    kind: Literal["continuous", "discrete"] = Field(..., description="continuous | discrete")
    block_size: int = Field(1, ge=1, description="k, qubits per diagonal block; must divide n")
    order: int | None = Field(None, ge=2, description="q, lattice order of a discrete subgroup")

    model_config = {"frozen": True, "extra": "forbid"}

    @model_validator(mode="after")
    def _order_matches_kind(self):
        if self.kind == "discrete" and self.order is None:
            raise ValueError("a discrete subgroup needs an order q >= 2")
        if self.kind == "continuous" and self.order is not None:
            raise ValueError("a continuous subgroup takes no order")
        return self

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    def free_phases(self, n: int) -> int:
        return (n // self.block_size) * (2**self.block_size - 1)

    def member(self, d) -> bool:
        from app.services.diaggroup import is_member

        return is_member(self, d)
