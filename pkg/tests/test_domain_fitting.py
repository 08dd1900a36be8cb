# tests/test_domain_fitting.py
import math

import numpy as np
import pytest

from fracbec.domain.errors import FitError
from fracbec.domain.fitting import fit_power_law


def test_exact_power_law():
    xs = np.geomspace(1e-4, 1e-1, 8)
    fit = fit_power_law(xs, 3.0 * xs ** (1 / 3))
    assert fit.slope == pytest.approx(1 / 3, rel=1e-10)
    assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.window == (0, 8)


def test_window_uses_the_last_points():
    xs = np.geomspace(1.0, 100.0, 8)
    ys = np.concatenate([np.full(3, 7.0), 2.0 * xs[3:] ** -2])
    fit = fit_power_law(xs, ys, window=5)
    assert fit.window == (3, 8)
    assert fit.slope == pytest.approx(-2.0, rel=1e-10)


def test_relative_error_and_dict():
    xs = np.geomspace(1.0, 10.0, 5)
    fit = fit_power_law(xs, xs**-0.63)
    assert fit.relative_error(-2 / 3) == pytest.approx(abs(-0.63 + 2 / 3) / (2 / 3), rel=1e-8)
    data = fit.to_dict()
    assert data["window"] == [0, 5]
    assert set(data) == {"slope", "intercept", "r_squared", "window", "slope_stderr"}


def test_noisy_data_has_r_squared_below_one():
    rng = np.random.default_rng(1)
    xs = np.geomspace(1.0, 1e3, 20)
    ys = xs**0.5 * np.exp(rng.normal(0, 0.1, xs.size))
    fit = fit_power_law(xs, ys)
    assert 0.9 < fit.r_squared < 1.0
    assert fit.slope == pytest.approx(0.5, abs=0.05)
    assert fit.slope_stderr > 0


def test_too_few_points():
    with pytest.raises(FitError, match="at least 3"):
        fit_power_law([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0], window=2)


@pytest.mark.parametrize("ys", [[1.0, -2.0, 3.0], [1.0, float("nan"), 3.0], [0.0, 1.0, 2.0]])
def test_rejects_non_positive_or_non_finite(ys):
    with pytest.raises(FitError):
        fit_power_law([1.0, 2.0, 3.0], ys)


def test_mismatched_lengths():
    with pytest.raises(FitError):
        fit_power_law([1.0, 2.0, 3.0], [1.0, 2.0])
