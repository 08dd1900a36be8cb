# fracbec/domain/fitting.py
import math
from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .errors import FitError

MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class FitReport:
    """Least-squares line through (log x, log y)."""
    slope: float
    intercept: float
    r_squared: float
    window: tuple[int, int]
    slope_stderr: float = math.nan

    def relative_error(self, expected: float) -> float:
        return abs(self.slope - expected) / abs(expected)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["window"] = list(self.window)
        return data


def _line(t: np.ndarray, slope: float, intercept: float) -> np.ndarray:
    return slope * t + intercept


def fit_power_law(xs: Sequence[float], ys: Sequence[float], window: int | None = None) -> FitReport:
    """Fit y = C * x^slope over the last ``window`` points (all points when None)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError(f"xs and ys must be matching 1-D sequences, got {x.shape} and {y.shape}")
    stop = x.size
    start = 0 if window is None else max(0, stop - window)
    x, y = x[start:stop], y[start:stop]
    if x.size < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} points in the fit window, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))) or np.any(x <= 0) or np.any(y <= 0):
        raise FitError("power-law fit requires finite, positive data in the window")

    t, s = np.log(x), np.log(y)
    guess = np.polyfit(t, s, 1)
    params, cov = curve_fit(_line, t, s, p0=guess)
    slope, intercept = float(params[0]), float(params[1])

    ss_res = float(np.sum((s - _line(t, slope, intercept)) ** 2))
    ss_tot = float(np.sum((s - s.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    stderr = float(np.sqrt(cov[0, 0])) if np.all(np.isfinite(cov)) else math.nan
    return FitReport(slope, intercept, min(1.0, max(0.0, r_squared)), (start, stop), stderr)
