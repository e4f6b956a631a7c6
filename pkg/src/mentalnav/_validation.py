"""Small input-validation helpers shared by the estimators and parsers."""

from __future__ import annotations

import math
import numbers
from typing import Any

import numpy as np

from .errors import SchemaError


def check_number(value: Any, path: str, *, exc: type = SchemaError) -> float:
    """Return ``value`` as a finite float or raise ``exc`` naming ``path``."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise exc(f"expected a number, got {type(value).__name__}", path)
    value = float(value)
    if not math.isfinite(value):
        raise exc("expected a finite number", path)
    return value


def check_positive(value: Any, path: str, *, exc: type = SchemaError) -> float:
    value = check_number(value, path, exc=exc)
    if value <= 0:
        raise exc(f"expected a positive number, got {value}", path)
    return value


def check_int(value: Any, path: str, *, minimum: int | None = None, exc: type = SchemaError) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise exc(f"expected an integer, got {type(value).__name__}", path)
    value = int(value)
    if minimum is not None and value < minimum:
        raise exc(f"expected an integer >= {minimum}, got {value}", path)
    return value


def check_str(value: Any, path: str, *, nonempty: bool = True, exc: type = SchemaError) -> str:
    if not isinstance(value, str):
        raise exc(f"expected a string, got {type(value).__name__}", path)
    if nonempty and not value.strip():
        raise exc("expected a non-empty string", path)
    return value


def check_list(value: Any, path: str, *, length: int | None = None, exc: type = SchemaError) -> list:
    if not isinstance(value, list):
        raise exc(f"expected an array, got {type(value).__name__}", path)
    if length is not None and len(value) != length:
        raise exc(f"expected {length} elements, got {len(value)}", path)
    return value


def check_keys(
    obj: Any,
    path: str,
    required: tuple[str, ...],
    optional: tuple[str, ...] = (),
    *,
    exc: type = SchemaError,
) -> dict:
    """Check that ``obj`` is a dict with exactly the allowed keys."""
    if not isinstance(obj, dict):
        raise exc(f"expected an object, got {type(obj).__name__}", path)
    for key in required:
        if key not in obj:
            raise exc("missing required field", _join(path, key))
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            raise exc("unknown field", _join(path, str(key)))
    return obj


def check_random_state(seed: Any) -> np.random.Generator:
    """Turn ``seed`` into a numpy Generator; ``None`` is refused (no hidden entropy)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise ValueError(f"an explicit integer seed is required, got {seed!r}")
    return np.random.default_rng(int(seed))


def normalize_label(text: str) -> str:
    """Lowercase and collapse internal whitespace."""
    return " ".join(text.lower().split())


def round_sig(value: float, digits: int = 6) -> float:
    """Round to ``digits`` significant digits (canonical float form)."""
    return float(f"{value:.{digits}g}")


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key
