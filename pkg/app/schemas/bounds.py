from fractions import Fraction

from pydantic import BaseModel


def exact(value: Fraction | None) -> str | None:
    return None if value is None else str(value)


class GammaBoundsResponse(BaseModel):
    setting: str
    N: int
    lower: str
    upper: str
    lower_value: float
    upper_value: float
    coarse_upper: str | None = None
    manifold_dimension: int | None = None

    @classmethod
    def from_bounds(cls, bounds) -> "GammaBoundsResponse":
        return cls(
            setting=bounds.setting.name,
            N=bounds.N,
            lower=exact(bounds.lower),
            upper=exact(bounds.upper),
            lower_value=float(bounds.lower),
            upper_value=float(bounds.upper),
            coarse_upper=exact(bounds.coarse_upper),
            manifold_dimension=bounds.manifold_dimension,
        )


class AchievedRateResponse(BaseModel):
    hidden_gates: int
    N: int
    rate: str
    rate_value: float

    @classmethod
    def from_rate(cls, rate) -> "AchievedRateResponse":
        return cls(
            hidden_gates=rate.hidden_gates,
            N=rate.N,
            rate=exact(rate.rate),
            rate_value=float(rate.rate),
        )


class ComparisonRowResponse(BaseModel):
    protocol: str
    expression: str
    gates: str | None = None
    gap: str | None = None
    note: str = ""

    @classmethod
    def from_row(cls, row) -> "ComparisonRowResponse":
        return cls(
            protocol=row.protocol,
            expression=row.expression,
            gates=exact(row.gates),
            gap=exact(row.gap),
            note=row.note,
        )
