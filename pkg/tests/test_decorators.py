from dataclasses import dataclass

import numpy as np
import pytest

from fusion_tools.decorators import finite_output
from fusion_tools.errors import NumericError


@dataclass
class _Pair:
    left: np.ndarray
    right: np.ndarray


class TestFiniteOutput:
    def test_passes_finite_arrays_through(self):
        values = np.ones(3)
        assert finite_output(lambda: values)() is values

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_rejects_non_finite(self, bad: float):
        with pytest.raises(NumericError, match="<lambda>"):
            finite_output(lambda: np.array([0.0, bad]))()

    def test_inspects_tuples_and_dataclasses(self):
        with pytest.raises(NumericError):
            finite_output(lambda: (np.zeros(2), [np.array([np.nan])]))()
        with pytest.raises(NumericError):
            finite_output(lambda: _Pair(np.zeros(1), np.array([np.inf])))()

    def test_ignores_integer_arrays_and_scalars(self):
        result = finite_output(lambda: (np.arange(3), float("nan")))()
        assert result[0].tolist() == [0, 1, 2]
