# fracbec/domain/potentials.py
"""Trapping potentials V(x) = h(x) * prod_j |x - x_j|^p_j and their flatness data."""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
import sympy

from .errors import NoCommonZeroError, PotentialError
from .spectral import SpectralGrid

logger = logging.getLogger(__name__)

ZERO_TOLERANCE = 1e-12
MAX_EXPONENT = 3.0
CONCENTRATION_EXPONENT_BOUND = 1.0
BOUND_MARGIN = 1e-9

_X = sympy.Symbol("x", real=True)


@dataclass(frozen=True)
class Zero:
    location: float
    exponent: float


@dataclass(frozen=True)
class ConstantModulator:
    value: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.value) and self.value > 0):
            raise PotentialError(f"constant modulator must be positive and finite, got {self.value}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.full(np.shape(x), self.value, dtype=float)

    def scaled(self, factor: float) -> "ConstantModulator":
        return ConstantModulator(self.value * factor)

    def certify(self, x: np.ndarray) -> None:
        pass


@dataclass(frozen=True)
class ExpressionModulator:
    """A closed-form h(x) with declared bounds ``bound <= h <= 1/bound``."""
    expression: str
    bound: float

    def __post_init__(self) -> None:
        if not (0 < self.bound <= 1):
            raise PotentialError(f"modulator bound must lie in (0, 1], got {self.bound}")
        try:
            parsed = sympy.sympify(self.expression, locals={"x": _X})
        except (sympy.SympifyError, TypeError, SyntaxError) as e:
            raise PotentialError(f"cannot parse modulator expression '{self.expression}': {e}") from e
        extra = parsed.free_symbols - {_X}
        if extra:
            names = ", ".join(sorted(str(s) for s in extra))
            raise PotentialError(f"modulator expression '{self.expression}' has unknown symbols: {names}")

    @cached_property
    def _func(self) -> Callable[[np.ndarray], np.ndarray]:
        return sympy.lambdify(_X, sympy.sympify(self.expression, locals={"x": _X}), "numpy")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self._func(x), dtype=float), x.shape).copy()

    def scaled(self, factor: float) -> "ExpressionModulator":
        return ExpressionModulator(f"({factor!r})*({self.expression})", min(self.bound * factor, self.bound / factor))

    def certify(self, x: np.ndarray) -> None:
        """Check the declared bounds at every sample point."""
        values = self(x)
        lower, upper = self.bound * (1 - BOUND_MARGIN), (1 + BOUND_MARGIN) / self.bound
        if not np.all(np.isfinite(values)) or values.min() < lower or values.max() > upper:
            raise PotentialError(
                f"modulator '{self.expression}' leaves [{self.bound:g}, {1 / self.bound:g}] "
                f"on the grid (observed [{np.nanmin(values):.4g}, {np.nanmax(values):.4g}])"
            )


Modulator = Union[ConstantModulator, ExpressionModulator]


@dataclass(frozen=True)
class PotentialSpec:
    zeros: tuple[Zero, ...] = ()
    modulator: Modulator = field(default_factory=ConstantModulator)

    def __post_init__(self) -> None:
        object.__setattr__(self, "zeros", tuple(self.zeros))
        for z in self.zeros:
            if not math.isfinite(z.location):
                raise PotentialError(f"zero location must be finite, got {z.location}")
            if not (0 < z.exponent < MAX_EXPONENT):
                raise PotentialError(
                    f"exponent {z.exponent} at x={z.location} outside (0, 3): "
                    "|x|^p Q^2 is integrable only for p < 3"
                )
        locations = sorted(z.location for z in self.zeros)
        for a, b in zip(locations, locations[1:]):
            if b - a <= ZERO_TOLERANCE:
                raise PotentialError(f"duplicate zero location {a}")

    @property
    def concentration_regime(self) -> bool:
        """True when every exponent lies in (0, 1), where the concentration results hold."""
        return all(z.exponent < CONCENTRATION_EXPONENT_BOUND for z in self.zeros)

    @property
    def max_exponent(self) -> float:
        return max((z.exponent for z in self.zeros), default=0.0)

    def scaled(self, factor: float) -> "PotentialSpec":
        if not (math.isfinite(factor) and factor > 0):
            raise PotentialError(f"scale factor must be positive, got {factor}")
        return PotentialSpec(self.zeros, self.modulator.scaled(factor))

    def sample(self, grid: SpectralGrid) -> np.ndarray:
        self.modulator.certify(grid.nodes)
        values = evaluate(self, grid.nodes)
        values.setflags(write=False)
        return values

    def coefficient_at(self, zero: Zero) -> float:
        """h(x_j) * prod over the other zeros of |x_j - x_k|^p_k."""
        product = 1.0
        for other in self.zeros:
            if other.location != zero.location:
                product *= abs(zero.location - other.location) ** other.exponent
        return float(self.modulator(np.array([zero.location]))[0]) * product


def evaluate(spec: PotentialSpec, x: Union[float, np.ndarray]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    values = spec.modulator(x)
    for z in spec.zeros:
        values = values * np.abs(x - z.location) ** z.exponent
    return values


@dataclass(frozen=True)
class FlatnessReport:
    common_zeros: tuple[float, ...]
    pbar: tuple[float, ...]
    p0: float
    gammas: tuple[float, ...]
    gamma: float
    flattest: tuple[float, ...]

    @property
    def concentration_regime(self) -> bool:
        return self.p0 < CONCENTRATION_EXPONENT_BOUND


@dataclass(frozen=True)
class SingleFlatness:
    """Flatness of one potential: p = max exponent and the per-zero limits."""
    p: float
    zeros: tuple[float, ...]
    kappas: tuple[float, ...]
    flattest: tuple[float, ...]
    lambdas: tuple[float, ...] = ()


def _same(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=0.0, abs_tol=ZERO_TOLERANCE)


def _argmin_set(locations: list[float], values: list[float]) -> tuple[float, ...]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return ()
    best = min(finite)
    return tuple(x for x, v in zip(locations, values) if math.isfinite(v) and math.isclose(v, best, rel_tol=1e-12))


def flatness_analysis(v1: PotentialSpec, v2: PotentialSpec) -> FlatnessReport:
    shared = [
        (min(z1.location, z2.location), z1, z2)
        for z1 in v1.zeros
        for z2 in v2.zeros
        if _same(z1.location, z2.location)
    ]
    if not shared:
        raise NoCommonZeroError("the two potentials share no zero location")
    shared.sort(key=lambda item: item[0])

    pbar = [min(z1.exponent, z2.exponent) for _, z1, z2 in shared]
    p0 = max(pbar)
    gammas = []
    for (_, z1, z2), p in zip(shared, pbar):
        if not _same(p, p0):
            gammas.append(math.inf)
            continue
        # a component whose exponent exceeds p0 vanishes in the limit
        gammas.append(sum(spec.coefficient_at(z) for spec, z in ((v1, z1), (v2, z2)) if _same(z.exponent, p0)))

    locations = [x for x, _, _ in shared]
    flattest = _argmin_set(locations, gammas)
    gamma = min(g for g in gammas if math.isfinite(g))
    report = FlatnessReport(tuple(locations), tuple(pbar), p0, tuple(gammas), gamma, flattest)
    logger.debug("Flatness: %s", report)
    return report


def single_flatness(v: PotentialSpec, moment: float | None = None) -> SingleFlatness:
    """Per-zero limits of V / |x - x_j|^p with p the largest exponent of V.

    With ``moment`` = integral of |x|^p Q^2, also returns the single-component
    concentration scales (p * m * kappa)^(1/(1+p)).
    """
    if not v.zeros:
        raise PotentialError("a potential without zeros has no flatness data")
    p = v.max_exponent
    locations = [z.location for z in v.zeros]
    kappas = [v.coefficient_at(z) if _same(z.exponent, p) else math.inf for z in v.zeros]
    lambdas: tuple[float, ...] = ()
    if moment is not None:
        lambdas = tuple((p * moment * k) ** (1 / (1 + p)) for k in kappas)
    return SingleFlatness(p, tuple(locations), tuple(kappas), _argmin_set(locations, kappas), lambdas)


def predicted_lambda(report: FlatnessReport, q_moment: float) -> float:
    """(p0 * gamma * m / 2)^(1/(p0+1)), the concentration scale of the limiting profile."""
    if not (math.isfinite(report.gamma) and report.gamma > 0):
        raise PotentialError(f"gamma must be finite and positive, got {report.gamma}")
    if not (math.isfinite(q_moment) and q_moment > 0):
        raise PotentialError(f"q_moment must be finite and positive, got {q_moment}")
    return float((report.p0 * report.gamma * q_moment / 2) ** (1 / (report.p0 + 1)))


def gamma_quotient(
    v1: PotentialSpec, v2: PotentialSpec, location: float, p0: float, deltas: np.ndarray
) -> np.ndarray:
    """(V1 + V2)(x_j + delta) / delta^p0 for the numerical cross-check of gamma_j."""
    deltas = np.asarray(deltas, dtype=float)
    x = location + deltas
    return (evaluate(v1, x) + evaluate(v2, x)) / np.abs(deltas) ** p0
