"""Angle parsing for run configurations.

Rational multiples of pi stay exact as a Fraction of a full turn, which keeps
discrete-subgroup layers on their lattice. Plain numbers are radians.
"""

import math
import re
from fractions import Fraction

from app.exceptions import ConfigError

# "pi", "-pi", "3pi", "3/4pi", "3/4 pi", "pi/4", "3pi/4", "-1/2pi"
_PI_FORM = re.compile(
    r"^(?P<sign>[+-]?)\s*(?:(?P<num>\d+)\s*(?:/\s*(?P<den>\d+))?\s*\*?\s*)?pi\s*(?:/\s*(?P<post>\d+))?$"
)


def parse_angle(value: str | int | float, key: str = "angle") -> Fraction | float:
    """Return the angle in turns: a Fraction for multiples of pi, a float otherwise."""
    if isinstance(value, bool):
        raise ConfigError(f"not an angle: {value!r}", key=key)
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise ConfigError(f"angle must be finite, got {value!r}", key=key)
        return Fraction(0) if value == 0 else float(value) / (2 * math.pi)

    text = value.strip().lower()
    match = _PI_FORM.match(text)
    if match:
        num = int(match["num"]) if match["num"] else 1
        den = int(match["den"]) if match["den"] else 1
        post = int(match["post"]) if match["post"] else 1
        if den == 0 or post == 0:
            raise ConfigError(f"division by zero in angle {value!r}", key=key)
        multiple = Fraction(num, den * post)
        if match["sign"] == "-":
            multiple = -multiple
        return multiple / 2
    try:
        number = float(text)
    except ValueError:
        raise ConfigError(f"cannot parse angle {value!r}", key=key) from None
    return parse_angle(number, key)


def turns_to_float(turns: Fraction | float) -> float:
    return float(turns) % 1.0
