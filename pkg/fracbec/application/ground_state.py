# fracbec/application/ground_state.py
"""Ground state Q of sqrt(-Laplacian) u + u = u^3 and the quantities derived from it."""
import logging
import math
from collections.abc import Iterable

import numpy as np
from scipy import special

from ..domain.errors import (
    DegenerateIterationError,
    DivergentMomentError,
    FitError,
    InvalidFieldError,
    NonConvergenceError,
)
from ..domain.fitting import MIN_FIT_POINTS, fit_power_law
from ..domain.models import GroundStateMethod, GroundStateResult, MomentEstimate, TailFit
from ..domain.spectral import (
    Field,
    SpectralGrid,
    integrate_power,
    l2_norm,
    seminorm_h_half,
    translate,
)

logger = logging.getLogger(__name__)

PETVIASHVILI_EXPONENT = 1.5
MOMENT_LIMIT = 3.0
TAIL_CURVATURE = 0.5


def _initial_guess(grid: SpectralGrid, initial: Field | None) -> np.ndarray:
    if initial is None:
        return 2.0 * np.exp(-grid.nodes**2)
    return np.array(initial.values, dtype=float)


def _residual(grid: SpectralGrid, u: np.ndarray, symbol: np.ndarray) -> float:
    return float(np.max(np.abs(grid.apply_multiplier(u, symbol) - u**3)))


def q_residual(q: Field) -> float:
    """sup |sqrt(-Laplacian) q + q - q^3|."""
    return _residual(q.grid, q.values, q.grid.abs_frequencies + 1.0)


def _result(
    grid: SpectralGrid, u: np.ndarray, method: GroundStateMethod, residual: float, iterations: int, trace: list[float]
) -> GroundStateResult:
    q = Field(grid, u)
    result = GroundStateResult(
        q=q,
        a_star=integrate_power(q, 2),
        q4=integrate_power(q, 4),
        seminorm=seminorm_h_half(q),
        method=method,
        residual=residual,
        iterations=iterations,
        trace=tuple(trace),
    )
    s_gap, q4_gap = result.pohozaev_defects()
    logger.info(
        "%s converged in %d iterations: a* = %.12g, residual = %.2e, Pohozaev gaps (%.2e, %.2e)",
        method.value, iterations, result.a_star, residual, s_gap, q4_gap,
    )
    return result


def solve_q_petviashvili(
    grid: SpectralGrid, tol: float = 1e-10, max_iter: int = 2000, initial: Field | None = None
) -> GroundStateResult:
    """Stabilized fixed point u <- M^(3/2) (|xi| + 1)^-1 [u^3], M = <(|xi|+1)u, u> / <u^3, u>."""
    u = _initial_guess(grid, initial)
    symbol = grid.abs_frequencies + 1.0
    inverse = 1.0 / symbol
    factors: list[float] = []
    residual = float("inf")

    for iteration in range(1, max_iter + 1):
        quadratic = grid.spacing * float(np.sum(symbol * np.abs(grid.transform(u)) ** 2))
        quartic = grid.integrate(u**4)
        if not (quartic > 0 and np.isfinite(quadratic)):
            raise DegenerateIterationError(
                "Petviashvili iterate collapsed to the zero field", residual=residual, iterations=iteration
            )
        factor = quadratic / quartic
        factors.append(factor)
        u = factor**PETVIASHVILI_EXPONENT * grid.apply_multiplier(u**3, inverse)
        residual = _residual(grid, u, symbol)
        if iteration % 100 == 0:
            logger.debug("Petviashvili iteration %d: M - 1 = %.3e, residual = %.3e", iteration, factor - 1, residual)
        if residual < tol:
            return _result(grid, u, GroundStateMethod.PETVIASHVILI, residual, iteration, factors)

    raise NonConvergenceError(
        f"Petviashvili did not reach residual {tol:g} in {max_iter} iterations (last {residual:.3e})",
        residual=residual,
        iterations=max_iter,
    )


def solve_q_gnf(
    grid: SpectralGrid, tol: float = 1e-10, step: float = 2.0, max_iter: int = 20000, initial: Field | None = None
) -> GroundStateResult:
    """Semi-implicit gradient flow on J(u) = <(|xi|+1)u, u>/2 - int u^4 / 4,
    rescaled onto the Nehari set <(|xi|+1)u, u> = int u^4 after every step.
    """
    u = _initial_guess(grid, initial)
    if not np.any(u):
        raise DegenerateIterationError("gradient-flow initial guess is the zero field")
    symbol = grid.abs_frequencies + 1.0
    resolvent = 1.0 / (1.0 + step * symbol)
    ratios: list[float] = []
    residual = float("inf")

    for iteration in range(1, max_iter + 1):
        u = grid.apply_multiplier(u + step * u**3, resolvent)
        quadratic = grid.spacing * float(np.sum(symbol * np.abs(grid.transform(u)) ** 2))
        quartic = grid.integrate(u**4)
        if not (quartic > 0 and quadratic > 0):
            raise DegenerateIterationError(
                "gradient-flow iterate collapsed to the zero field", residual=residual, iterations=iteration
            )
        ratio = quadratic / quartic
        ratios.append(ratio)
        u = u * np.sqrt(ratio)
        residual = _residual(grid, u, symbol)
        if iteration % 500 == 0:
            logger.debug("Gradient flow iteration %d: residual = %.3e", iteration, residual)
        if residual < tol:
            return _result(grid, u, GroundStateMethod.GRADIENT_FLOW, residual, iteration, ratios)

    raise NonConvergenceError(
        f"gradient flow did not reach residual {tol:g} in {max_iter} iterations (last {residual:.3e})",
        residual=residual,
        iterations=max_iter,
    )


def maximum_location(u: Field) -> float:
    """Sub-grid maximum from a parabola through the discrete maximum and its neighbours."""
    values = u.values
    n = values.size
    j = int(np.argmax(values))
    left, mid, right = values[(j - 1) % n], values[j], values[(j + 1) % n]
    curvature = left - 2 * mid + right
    offset = 0.0 if curvature == 0 else 0.5 * (left - right) / curvature
    return float(u.grid.nodes[j] + offset * u.grid.spacing)


def center_at_maximum(q: Field) -> Field:
    return translate(q, -maximum_location(q))


def compare_ground_states(a: Field, b: Field) -> float:
    """Relative L2 distance ||a - b|| / ||b|| after centering both at their maxima."""
    if a.grid != b.grid:
        raise InvalidFieldError("ground states live on different grids")
    ca, cb = center_at_maximum(a), center_at_maximum(b)
    return l2_norm(ca.with_values(ca.values - cb.values)) / l2_norm(cb)


def gn_quotient(u: Field, a_star: float) -> float:
    """int u^4 / ((2/a*) * seminorm(u) * int u^2); at most 1, with equality at Q."""
    denominator = (2.0 / a_star) * seminorm_h_half(u) * integrate_power(u, 2)
    if not denominator > 0:
        raise InvalidFieldError("GN quotient undefined for fields with zero seminorm")
    return integrate_power(u, 4) / denominator


def tail_exponent(q: Field) -> TailFit:
    """Slope of log q against log |x| over L/8 <= |x| <= L/4.

    Samples at or below the double-precision floor relative to max |q| are dropped.
    The tail counts as polynomial when nothing was dropped and the slopes fitted on the
    inner and outer halves of the window agree to within TAIL_CURVATURE.
    """
    grid = q.grid
    distance = np.abs(grid.nodes)
    window = (distance >= grid.length / 8) & (distance <= grid.length / 4)
    floor = np.finfo(float).eps * float(np.max(np.abs(q.values)))
    values = q.values[window]
    if np.any(values < -floor):
        raise FitError("tail window contains negative values")
    keep = values > floor
    xs, ys = distance[window][keep], values[keep]
    if xs.size < MIN_FIT_POINTS:
        logger.debug("Only %d of %d tail samples lie above the floor %.3e", xs.size, values.size, floor)
        return TailFit(-math.inf, False, int(xs.size))

    slope = fit_power_law(xs, ys).slope
    middle = float(np.median(xs))
    inner, outer = xs <= middle, xs > middle
    polynomial = bool(np.all(keep)) and min(inner.sum(), outer.sum()) >= MIN_FIT_POINTS
    if polynomial:
        bend = abs(fit_power_law(xs[inner], ys[inner]).slope - fit_power_law(xs[outer], ys[outer]).slope)
        polynomial = bend <= TAIL_CURVATURE * abs(slope)
    return TailFit(slope, polynomial, int(xs.size))


def _cusp_moment(grid: SpectralGrid, q: np.ndarray, p: float, inside: np.ndarray) -> float:
    # trapezoid on |x|^p q^2 with the x = 0 node corrected by -2 zeta(-p) h^(1+p) q(0)^2
    distance = np.abs(grid.nodes)
    origin = grid.n_points // 2
    weights = np.where(inside, distance**p, 0.0)
    weights[origin] = 0.0
    zeta = 1.0 + special.zetac(-p)
    return grid.spacing * float(np.sum(weights * q**2)) - 2.0 * zeta * grid.spacing ** (1 + p) * q[origin] ** 2


def q_moment(q: Field, p: float) -> MomentEstimate:
    """int |x|^p Q^2 with Q centered at its maximum; truncation compares the full window with |x| < L/4."""
    if p >= MOMENT_LIMIT:
        raise DivergentMomentError(f"moment of order {p} diverges: |x|^p Q^2 is integrable only for p < 3")
    if p < 0:
        raise DivergentMomentError(f"moment order must lie in [0, 3), got {p}")
    grid = q.grid
    centered = center_at_maximum(q).values
    full = _cusp_moment(grid, centered, p, np.ones(grid.n_points, dtype=bool))
    inner = _cusp_moment(grid, centered, p, np.abs(grid.nodes) < grid.length / 4)
    return MomentEstimate(value=full, truncation=abs(full - inner))


def with_moments(result: GroundStateResult, powers: Iterable[float]) -> GroundStateResult:
    moments = dict(result.moments)
    for p in powers:
        moments[float(p)] = q_moment(result.q, float(p)).value
    return GroundStateResult(
        q=result.q,
        a_star=result.a_star,
        q4=result.q4,
        seminorm=result.seminorm,
        method=result.method,
        residual=result.residual,
        iterations=result.iterations,
        moments=moments,
        trace=result.trace,
    )
