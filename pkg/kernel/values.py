"""Scalar kinds and values of the relational machine."""

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Optional

from errors import KindMismatch

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1
DATETIME_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class BaseKind(Enum):
    """Scalar kinds implemented by the machine."""
    STRING = "STRING"
    INTEGER = "INTEGER"
    FLOAT = "FLOAT"
    DATETIME = "DATETIME"
    BOOLEAN = "BOOLEAN"
    REF = "REF"


@dataclass(frozen=True)
class Kind:
    """A scalar kind; REF kinds carry the referenced class name."""
    base: BaseKind
    target: Optional[str] = None

    def __str__(self) -> str:
        if self.base is BaseKind.REF:
            return f"REF({self.target})"
        return self.base.value

    @property
    def is_numeric(self) -> bool:
        return self.base in (BaseKind.INTEGER, BaseKind.FLOAT)

    @property
    def is_ref(self) -> bool:
        return self.base is BaseKind.REF

    def comparable(self, other: "Kind") -> bool:
        """Whether values of the two kinds may be compared in a predicate.

        OIDs are unique across the database, so REF kinds compare regardless
        of target class; INTEGER and FLOAT compare numerically.
        """
        if self.base is other.base:
            return True
        return self.is_numeric and other.is_numeric

    def joinable(self, other: "Kind") -> bool:
        """Whether the two kinds may be paired in an equijoin: equal base kinds only."""
        return self.base is other.base


STRING = Kind(BaseKind.STRING)
INTEGER = Kind(BaseKind.INTEGER)
FLOAT = Kind(BaseKind.FLOAT)
DATETIME = Kind(BaseKind.DATETIME)
BOOLEAN = Kind(BaseKind.BOOLEAN)

SCALAR_KINDS = {
    "STRING": STRING,
    "INTEGER": INTEGER,
    "FLOAT": FLOAT,
    "DATETIME": DATETIME,
    "BOOLEAN": BOOLEAN,
}


def ref(target: str) -> Kind:
    return Kind(BaseKind.REF, target)


def parse_kind(text: str) -> Kind:
    """Inverse of ``str(kind)``."""
    if text.startswith("REF(") and text.endswith(")"):
        return ref(text[4:-1])
    try:
        return SCALAR_KINDS[text]
    except KeyError:
        raise KindMismatch(f"unknown scalar kind {text!r}") from None


def parse_datetime(text: str) -> datetime:
    try:
        return datetime.strptime(text, DATETIME_FORMAT).replace(tzinfo=timezone.utc)
    except ValueError:
        raise KindMismatch(f"not an ISO-8601 UTC timestamp: {text!r}") from None


def format_datetime(value: datetime) -> str:
    return value.strftime(DATETIME_FORMAT)


def conforms(kind: Kind, value: Any) -> bool:
    """Whether ``value`` is a valid non-coerced value of ``kind`` (None is NULL)."""
    if value is None:
        return True
    base = kind.base
    if base is BaseKind.STRING:
        return isinstance(value, str)
    if base is BaseKind.INTEGER:
        return isinstance(value, int) and not isinstance(value, bool) and INT64_MIN <= value <= INT64_MAX
    if base is BaseKind.FLOAT:
        return isinstance(value, float) and math.isfinite(value)
    if base is BaseKind.DATETIME:
        return (
            isinstance(value, datetime)
            and value.tzinfo is not None
            and value.utcoffset().total_seconds() == 0
            and value.microsecond == 0
        )
    if base is BaseKind.BOOLEAN:
        return isinstance(value, bool)
    return isinstance(value, int) and not isinstance(value, bool) and 0 < value <= INT64_MAX


def check_value(kind: Kind, value: Any) -> Any:
    if not conforms(kind, value):
        raise KindMismatch(f"value {value!r} is not of kind {kind}")
    return value


def coerce(kind: Kind, value: Any) -> Any:
    """Convert ``value`` to ``kind`` where the conversion is lossless.

    Accepted conversions: INTEGER to FLOAT, ISO-8601 text to DATETIME,
    naive or offset datetimes to UTC at second precision. ``-0.0`` becomes
    ``0.0`` so that equality of admitted floats is bitwise.
    """
    if value is None:
        return None
    base = kind.base
    if base is BaseKind.FLOAT:
        if isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if isinstance(value, float):
            if not math.isfinite(value):
                raise KindMismatch(f"{value!r} is not an admissible FLOAT value")
            if value == 0.0:
                value = 0.0
    elif base is BaseKind.DATETIME:
        if isinstance(value, str):
            value = parse_datetime(value)
        elif isinstance(value, datetime):
            if value.tzinfo is None:
                value = value.replace(tzinfo=timezone.utc)
            value = value.astimezone(timezone.utc).replace(microsecond=0)
    return check_value(kind, value)


def sort_key(value: Any) -> tuple:
    """Total order for canonical output: NULL sorts first."""
    if value is None:
        return (0,)
    return (1, value)


def render(value: Any) -> str:
    """Human rendering used by the shell; NULL is ``NULL``."""
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, datetime):
        return format_datetime(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
