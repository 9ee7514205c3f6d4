"""Decorators guarding the numeric contracts of public operations."""

from dataclasses import fields, is_dataclass
from functools import wraps
from typing import Any, Iterator

import numpy as np

from .errors import NumericError


def _arrays(result: Any) -> Iterator[np.ndarray]:
    if isinstance(result, np.ndarray):
        yield result
    elif isinstance(result, (tuple, list)):
        for item in result:
            yield from _arrays(item)
    elif is_dataclass(result):
        for field in fields(result):
            yield from _arrays(getattr(result, field.name))


def finite_output(func):
    """Raise `NumericError` if any array returned by `func` holds NaN or Inf."""

    @wraps(func)
    def wrapped(*args, **kwargs):
        result = func(*args, **kwargs)
        for array in _arrays(result):
            if array.dtype.kind in "fc" and not np.isfinite(array).all():
                raise NumericError(f"{func.__name__} produced non-finite values")
        return result

    return wrapped
