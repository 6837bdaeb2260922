# native imports
import dataclasses
import logging
import math
import typing
from fractions import Fraction

logger = logging.getLogger()

# forient imports
from forient.errors import InstanceFormatError

# third party imports
import numpy as np


def recursive_update(full_dict: dict, update_dict: dict):
    """recursively update a dict with a second dict. The dict is updated inplace.

    Parameters
    ----------
    full_dict : dict
        dict to be updated, is updated inplace.

    update_dict : dict
        dict with new values

    """
    for key, value in update_dict.items():
        if key in full_dict and isinstance(value, dict) and isinstance(
            full_dict[key], dict
        ):
            recursive_update(full_dict[key], value)
        else:
            full_dict[key] = value


def parse_rational(value: typing.Any, field: str = "value") -> Fraction:
    """Parse an exact rational from an instance file value.

    Accepted are integers, `[numerator, denominator]` pairs and `"p/q"` strings.
    Floats and decimal strings are rejected instead of being rounded.

    Parameters
    ----------

    value : typing.Any
        Raw value as read from JSON or YAML.

    field : str, default "value"
        Field path used in the error message.

    Returns
    -------

    Fraction
        The parsed rational.
    """
    if isinstance(value, bool):
        raise InstanceFormatError(field, f"expected a rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 2:
        num, den = value
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise InstanceFormatError(
                field, f"numerator and denominator must be integers, got {value!r}"
            )
        if den == 0:
            raise InstanceFormatError(field, "denominator must not be zero")
        return Fraction(num, den)
    if isinstance(value, str) and "." not in value and "e" not in value.lower():
        try:
            return Fraction(value.strip())
        except ValueError:
            pass
    raise InstanceFormatError(
        field, f"expected an exact rational (int, [p, q] or 'p/q'), got {value!r}"
    )


def rational_to_json(value: Fraction) -> typing.List[int]:
    value = Fraction(value)
    return [value.numerator, value.denominator]


def format_rational(value: Fraction, decimal: bool = False, digits: int = 6) -> str:
    """Render a rational as `p/q`, or as a rounded decimal for display only."""
    value = Fraction(value)
    if decimal:
        return f"{float(value):.{digits}f}"
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def common_denominator(values: typing.Iterable[Fraction]) -> int:
    """Least common multiple of the denominators, 1 for an empty input."""
    lcm = 1
    for v in values:
        lcm = math.lcm(lcm, Fraction(v).denominator)
    return lcm


def scale_to_int64(
    values: typing.Sequence[Fraction],
) -> typing.Tuple[typing.Optional[np.ndarray], int]:
    """Scale rationals to integers by their common denominator.

    Returns
    -------

    np.ndarray or None
        int64 array of scaled values, None if the scaled values do not fit.

    int
        The common denominator.
    """
    den = common_denominator(values)
    scaled = [int(Fraction(v) * den) for v in values]
    bound = 2**62 // max(len(scaled), 1)
    if den > bound or any(abs(s) > bound for s in scaled):
        return None, den
    return np.array(scaled, dtype=np.int64), den


@dataclasses.dataclass(frozen=True)
class Verdict:
    """Outcome of a check; truthy when it passed, with an optional witness otherwise."""

    ok: bool
    witness: typing.Any = None

    def __bool__(self):
        return bool(self.ok)
