# fracbec/application/asymptotics.py
"""Near-critical sweeps: scaling laws, concentration and the limiting profile."""
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..domain.errors import ConvergenceError, PotentialError, ResolutionError, SweepError
from ..domain.fitting import FitReport, fit_power_law
from ..domain.models import (
    Check,
    ClaimTolerances,
    ConcentrationReport,
    CoupledParams,
    CoupledState,
    GroundStateResult,
    MinimizerResult,
    SolverOptions,
    SweepConfig,
    SweepRecord,
    SweepResult,
    SymmetryProbeResult,
    UniquenessProbeResult,
)
from ..domain.potentials import FlatnessReport, PotentialSpec, flatness_analysis, predicted_lambda
from ..domain.spectral import (
    Field,
    SpectralGrid,
    h_half_distance,
    l2_norm,
    mass_normalize,
    next_power_of_two,
    spectral_rescale,
)
from .ground_state import center_at_maximum, q_moment
from .minimizer import (
    cutoff_radius,
    gaussian_bump,
    minimize,
    minimize_single,
    trial_energy,
)

logger = logging.getLogger(__name__)


# --- Ladder ---

def build_ladder(a_star: float, p0: float, n: int = 8, ratio: float = 0.5, start_fraction: float = 0.2) -> list[float]:
    """Geometric eps ladder starting where a* - (d1+d2)/2 = start_fraction * a*."""
    if not (0 < ratio < 1 and 0 < start_fraction < 1 and n >= 1):
        raise SweepError(f"invalid ladder: n={n}, ratio={ratio}, start_fraction={start_fraction}")
    first = (start_fraction * a_star) ** (1 / (p0 + 1))
    return [first * ratio**k for k in range(n)]


def check_resolution(grid: SpectralGrid, ladder: Sequence[float], nodes: float = 40.0) -> None:
    """Refuse ladder points narrower than ``nodes`` grid spacings."""
    for eps in ladder:
        if eps < nodes * grid.spacing:
            suggested = next_power_of_two(nodes * grid.length / eps)
            raise ResolutionError(
                f"eps = {eps:.4g} needs spacing <= {eps / nodes:.3g} but the grid has {grid.spacing:.3g}; "
                f"use n_points >= {suggested} for length {grid.length:g}",
                eps=eps,
                suggested_n_points=suggested,
            )


def sweep_params(a_star: float, beta: float, eps: float, p0: float) -> CoupledParams:
    a = a_star - beta - eps ** (p0 + 1)
    return CoupledParams(a1=a, a2=a, beta=beta)


# --- Profiles ---

def predicted_profile(q: Field, lam: float, target: SpectralGrid) -> Field:
    """lam^(1/2) Q(lam x) / ||Q|| on the target grid, Q centered at its maximum."""
    centered = center_at_maximum(q)
    profile = spectral_rescale(centered, lam, 0.0, target)
    return profile.with_values(profile.values / l2_norm(centered))


def profile_distance(
    u: Field, eps: float, max_point: float, q: Field, lam: float, target: SpectralGrid
) -> tuple[float, float]:
    """L2 and H^1/2 distances between eps^(1/2) u(eps x + x_max) and the predicted profile."""
    rescaled = spectral_rescale(u, eps, max_point, target)
    return h_half_distance(rescaled, predicted_profile(q, lam, target))


def warm_start(previous: MinimizerResult, eps_old: float, eps_new: float) -> CoupledState:
    """Compress the previous state by eps_old/eps_new about each component's maximum."""
    scale = eps_old / eps_new
    fields = []
    for u, x0 in zip(previous.fields, previous.max_points):
        fields.append(mass_normalize(spectral_rescale(u, scale, x0 * (1 - scale), u.grid)))
    return CoupledState(fields[0], fields[1])


def _nearest(sites: Sequence[float], x: float) -> float:
    return min(sites, key=lambda s: abs(s - x)) if sites else x


# --- Sweep ---

@dataclass
class _LadderPoint:
    eps: float
    params: CoupledParams
    result: MinimizerResult | None = None
    error: str | None = None
    trial_upper: float = math.nan
    lower_bound: float = math.nan
    profile: tuple[tuple[float, float], tuple[float, float]] | None = None


def _lower_bound(config: SweepConfig, params: CoupledParams, result: MinimizerResult) -> float:
    try:
        e1 = minimize_single(params.d1, config.v1, config.grid, result.fields[0], config.solver).energy
        e2 = minimize_single(params.d2, config.v2, config.grid, result.fields[1], config.solver).energy
    except ConvergenceError as e:
        logger.warning("Single-component lower bound failed at d = (%.6g, %.6g): %s", params.d1, params.d2, e)
        return math.nan
    u1, u2 = result.fields
    coupling = config.grid.integrate((u1.values**2 - u2.values**2) ** 2)
    return e1 + e2 + 0.5 * params.beta * coupling


def run_sweep(config: SweepConfig, ground: GroundStateResult, flatness: FlatnessReport | None = None) -> SweepResult:
    flatness = flatness or flatness_analysis(config.v1, config.v2)
    a_star, p0 = ground.a_star, flatness.p0
    if not (0 < config.beta < a_star):
        raise SweepError(f"beta must lie in (0, a*) = (0, {a_star:.6g}), got {config.beta}")
    ladder = list(config.ladder)
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise SweepError("the eps ladder must be strictly decreasing")
    check_resolution(config.grid, ladder, config.resolution_nodes)
    if not (flatness.concentration_regime and config.v1.concentration_regime and config.v2.concentration_regime):
        logger.warning("Exponents outside (0, 1): the concentration results are not guaranteed in this regime")

    moment = q_moment(ground.q, p0)
    lam = predicted_lambda(flatness, moment.value)
    logger.info("Sweep over %d points: p0 = %g, gamma = %.6g, predicted lambda = %.6g", len(ladder), p0, flatness.gamma, lam)

    points: list[_LadderPoint] = []
    previous: _LadderPoint | None = None
    for eps in ladder:
        point = _LadderPoint(eps, sweep_params(a_star, config.beta, eps, p0))
        if config.warm_start and previous is not None and previous.result is not None:
            init = warm_start(previous.result, previous.eps, eps)
        else:
            site = flatness.flattest[0] if config.solver.init_center is None else config.solver.init_center
            bump = gaussian_bump(config.grid, site, eps)
            init = CoupledState(bump, bump)
        try:
            point.result = minimize(point.params, config.v1, config.v2, config.grid, init, config.solver, a_star)
        except ConvergenceError as e:
            point.error = str(e)
            logger.warning("Ladder point eps = %.4g failed: %s", eps, e)
            points.append(point)
            previous = point
            continue

        result = point.result
        site = _nearest(flatness.flattest, result.max_points[0])
        radius = cutoff_radius(site, [config.v1, config.v2], config.grid)
        point.trial_upper = trial_energy(site, 1 / eps, radius, point.params, config.v1, config.v2, config.grid, ground.q)
        point.lower_bound = _lower_bound(config, point.params, result)
        point.profile = (
            profile_distance(result.fields[0], eps, result.max_points[0], ground.q, lam, config.profile_grid),
            profile_distance(result.fields[1], eps, result.max_points[1], ground.q, lam, config.profile_grid),
        )
        logger.info(
            "eps = %.4g: energy %.10g, iterations %d, profile L2 distances (%.3e, %.3e)",
            eps, result.energy, result.iterations, point.profile[0][0], point.profile[1][0],
        )
        points.append(point)
        previous = point

    if not any(p.result is not None for p in points):
        raise SweepError("every ladder point failed to converge")

    final = [p.result for p in points if p.result is not None][-1]
    site = _nearest(flatness.flattest, float(np.mean(final.max_points)))
    records = tuple(_record(p, p0, site) for p in points)
    fits = sweep_fits(records, config.fit_window)
    return SweepResult(config, a_star, flatness, lam, records, fits, concentration_report(records, flatness))


def _record(point: _LadderPoint, p0: float, site: float) -> SweepRecord:
    base = dict(eps=point.eps, delta=point.eps ** (p0 + 1), a1=point.params.a1, a2=point.params.a2)
    result = point.result
    if result is None:
        return SweepRecord(**base, error=point.error)
    u1, u2 = result.fields
    profile = point.profile or ((math.nan, math.nan), (math.nan, math.nan))
    return SweepRecord(
        **base,
        energy=result.energy,
        l4=(result.l4_norms[0], result.l4_norms[1]),
        mu=(result.mu1, result.mu2),
        seminorms=(result.seminorms[0], result.seminorms[1]),
        max_points=(result.max_points[0], result.max_points[1]),
        max_offset_ratio=(abs(result.max_points[0] - site) / point.eps, abs(result.max_points[1] - site) / point.eps),
        profile_distance=(profile[0][0], profile[1][0]),
        profile_distance_h_half=(profile[0][1], profile[1][1]),
        trial_upper=point.trial_upper,
        lower_bound=point.lower_bound,
        coupling_defect=math.sqrt(point.eps) * l2_norm(u1.with_values(u1.values**2 - u2.values**2)),
        iterations=result.iterations,
        converged=result.converged,
    )


def expected_slopes(p0: float) -> dict[str, float]:
    return {
        "energy": p0 / (p0 + 1),
        "l4_1": -1 / (p0 + 1),
        "l4_2": -1 / (p0 + 1),
        "seminorm_1": -1 / (p0 + 1),
        "seminorm_2": -1 / (p0 + 1),
    }


def sweep_fits(records: Sequence[SweepRecord], window: int = 5) -> dict[str, FitReport]:
    """Power-law fits of energy, L4 norms and seminorms against delta = a* - (d1+d2)/2."""
    ok = [r for r in records if r.ok]
    if len(ok) < 3:
        logger.warning("Only %d converged ladder points; no scaling fits", len(ok))
        return {}
    deltas = [r.delta for r in ok]
    series = {
        "energy": [r.energy for r in ok],
        "l4_1": [r.l4[0] for r in ok],
        "l4_2": [r.l4[1] for r in ok],
        "seminorm_1": [r.seminorms[0] for r in ok],
        "seminorm_2": [r.seminorms[1] for r in ok],
    }
    return {name: fit_power_law(deltas, ys, window) for name, ys in series.items()}


def concentration_report(records: Sequence[SweepRecord], flatness: FlatnessReport) -> ConcentrationReport | None:
    ok = [r for r in records if r.ok]
    if len(ok) < 3:
        return None
    final = ok[-1]
    site = _nearest(flatness.flattest, sum(final.max_points) / 2)
    ratios = tuple(
        (abs(r.max_points[0] - site) / r.eps, abs(r.max_points[1] - site) / r.eps) for r in ok
    )
    tail = ratios[-3:]
    decreasing = all(
        all(later[i] <= earlier[i] + 1e-12 for i in (0, 1)) for earlier, later in zip(tail, tail[1:])
    )
    return ConcentrationReport(
        site=site,
        ratios=ratios,
        final_ratio_small=max(ratios[-1]) < 0.1,
        ratio_decreasing=decreasing,
        components_coincide=abs(final.max_points[0] - final.max_points[1]) <= final.eps,
    )


# --- Single-component scaling ---

def single_energy_scaling(
    v: PotentialSpec,
    grid: SpectralGrid,
    a_star: float,
    fractions: Sequence[float] = (0.5, 0.7, 0.9, 0.95, 0.99),
    opts: SolverOptions | None = None,
    window: int | None = None,
) -> tuple[FitReport, bool, list[float]]:
    """e(d) over d = fraction * a*, fitted against a* - d; also reports monotone decrease in d."""
    energies: list[float] = []
    init = None
    for fraction in sorted(fractions):
        result = minimize_single(fraction * a_star, v, grid, init, opts)
        energies.append(result.energy)
        init = result.fields[0]
    monotone = all(b <= a + 1e-10 * abs(a) for a, b in zip(energies, energies[1:]))
    gaps = [a_star * (1 - f) for f in sorted(fractions)]
    return fit_power_law(gaps, energies, window), monotone, energies


# --- Probes ---

def random_positive_field(grid: SpectralGrid, rng: np.random.Generator, spread: float, width: float = 1.0) -> Field:
    n = int(rng.integers(1, 4))
    centers = rng.uniform(-spread, spread, n)
    widths = rng.uniform(0.5, 2.0, n) * width
    amplitudes = rng.uniform(0.2, 1.0, n)
    x = grid.nodes
    values = sum(a * np.exp(-(((x - c) / w) ** 2)) for a, c, w in zip(amplitudes, centers, widths))
    return mass_normalize(Field(grid, values))


def uniqueness_probe(
    params: CoupledParams,
    v1: PotentialSpec,
    v2: PotentialSpec,
    grid: SpectralGrid,
    n_starts: int = 8,
    seed: int = 0,
    opts: SolverOptions | None = None,
    a_star: float | None = None,
    small_ball_fraction: float = 0.05,
) -> UniquenessProbeResult:
    """Max pairwise component-wise L2 distance between minimizers from random positive starts."""
    ball = small_ball_fraction * a_star if a_star is not None else math.inf
    if params.radius > ball:
        logger.warning("Parameters %s lie outside the small ball of radius %.4g", params, ball)
    rng = np.random.default_rng(seed)
    spread = min(2.0, grid.half_length / 4)
    states: list[MinimizerResult] = []
    failed = 0
    for start in range(n_starts):
        init = CoupledState(random_positive_field(grid, rng, spread), random_positive_field(grid, rng, spread))
        try:
            states.append(minimize(params, v1, v2, grid, init, opts))
        except ConvergenceError as e:
            failed += 1
            logger.warning("Uniqueness probe start %d failed: %s", start, e)
    if failed:
        logger.warning("Uniqueness probe is partial: %d of %d starts failed", failed, n_starts)

    distance = math.nan if len(states) < 2 else 0.0
    for i, a in enumerate(states):
        for b in states[i + 1:]:
            for ua, ub in zip(a.fields, b.fields):
                distance = max(distance, l2_norm(ua.with_values(ua.values - ub.values)))
    return UniquenessProbeResult(
        distance=distance,
        converged=len(states),
        failed=failed,
        radius=params.radius,
        ball_radius=ball,
        sites=tuple(s.max_points[0] for s in states),
    )


def asymmetry(u: Field) -> float:
    """|int_{x>0} u^2 - int_{x<0} u^2|."""
    x = u.grid.nodes
    squares = u.values**2
    return abs(u.grid.integrate(squares[x > 0]) - u.grid.integrate(squares[x < 0]))


def _check_symmetric(v: PotentialSpec, grid: SpectralGrid) -> float:
    if len(v.zeros) != 2:
        raise PotentialError("symmetry probe needs a potential with exactly two zeros")
    left, right = sorted(v.zeros, key=lambda z: z.location)
    if not (math.isclose(left.location, -right.location, abs_tol=1e-12) and left.exponent == right.exponent):
        raise PotentialError("symmetry probe needs zeros at +-z with equal exponents")
    h = v.modulator(grid.nodes[1:])
    if not np.allclose(h, h[::-1], rtol=1e-12, atol=0):
        raise PotentialError("symmetry probe needs an even modulator")
    return right.exponent


def symmetry_breaking_probe(
    beta: float,
    v_sym: PotentialSpec,
    grid: SpectralGrid,
    eps: float,
    a_star: float,
    n_starts: int = 8,
    seed: int = 0,
    opts: SolverOptions | None = None,
    symmetric_init: bool = False,
) -> SymmetryProbeResult:
    """Asymmetry of u1's mass between x > 0 and x < 0 for a potential even in x."""
    p0 = _check_symmetric(v_sym, grid)
    params = sweep_params(a_star, beta, eps, p0)
    rng = np.random.default_rng(seed)
    spread = 1.5 * max(z.location for z in v_sym.zeros)
    values: list[float] = []
    sites: list[float] = []
    for _ in range(1 if symmetric_init else n_starts):
        if symmetric_init:
            bump = gaussian_bump(grid, 0.0, spread)
            init = CoupledState(bump, bump)
        else:
            width = min(1.0, 4 * eps)
            init = CoupledState(
                random_positive_field(grid, rng, spread, width), random_positive_field(grid, rng, spread, width)
            )
        result = minimize(params, v_sym, v_sym, grid, init, opts, a_star)
        values.append(asymmetry(result.fields[0]))
        sites.append(result.max_points[0])
    return SymmetryProbeResult(tuple(values), tuple(sites))


# --- Claims ---

def _fit_check(name: str, fit: FitReport | None, expected: float, tol: ClaimTolerances) -> Check:
    if fit is None:
        return Check(name, False, math.nan, tol.slope_rel, "no fit available")
    error = fit.relative_error(expected)
    passed = error <= tol.slope_rel and fit.r_squared > tol.r_squared
    return Check(name, passed, error, tol.slope_rel, f"slope {fit.slope:.5f} vs {expected:.5f}, r^2 {fit.r_squared:.5f}")


def sweep_claims(sweep: SweepResult, tol: ClaimTolerances | None = None) -> list[Check]:
    """Pass/fail view of a sweep: scaling exponents, sandwich, profiles and concentration."""
    tol = tol or ClaimTolerances()
    ok = sweep.converged_records
    slopes = expected_slopes(sweep.flatness.p0)
    checks = [Check("ladder converged", len(ok) == len(sweep.records), len(ok), len(sweep.records))]
    for name in ("energy", "l4_1", "l4_2"):
        checks.append(_fit_check(f"{name} scaling exponent", sweep.fits.get(name), slopes[name], tol))
    if not ok:
        return checks
    final = ok[-1]

    ratio = final.l4[0] / final.l4[1]
    checks.append(Check("final L4 ratio", abs(ratio - 1) <= tol.l4_ratio_rel, ratio, tol.l4_ratio_rel))
    for i in (0, 1):
        scaled = final.eps * final.mu[i] / -sweep.lambda_predicted
        checks.append(
            Check(f"multiplier scaling u{i + 1}", abs(scaled - 1) <= tol.multiplier_rel, scaled, tol.multiplier_rel,
                  f"eps*mu = {final.eps * final.mu[i]:.6g}, -lambda = {-sweep.lambda_predicted:.6g}")
        )

    violation = max(
        max(r.lower_bound - r.energy if math.isfinite(r.lower_bound) else 0.0, r.energy - r.trial_upper) for r in ok
    )
    checks.append(Check("energy sandwich", violation <= tol.sandwich, violation, tol.sandwich))

    first = ok[0]
    tail = ok[-3:]
    for i in (0, 1):
        distances = [r.profile_distance[i] for r in tail]
        decreasing = len(tail) == 3 and all(b < a for a, b in zip(distances, distances[1:]))
        checks.append(Check(f"profile distance decreasing u{i + 1}", decreasing, distances[-1], distances[0]))
        value = final.profile_distance[i]
        passed = value < tol.profile_final and value < first.profile_distance[i]
        checks.append(Check(f"final profile distance u{i + 1}", passed, value, tol.profile_final,
                            f"first-ladder distance {first.profile_distance[i]:.4g}"))

    report = sweep.concentration
    if report is not None:
        final_ratio = max(report.ratios[-1])
        checks.append(Check("concentration at flattest site", report.final_ratio_small and report.ratio_decreasing,
                            final_ratio, tol.concentration_ratio, f"site {report.site:g}"))
        checks.append(Check("component maxima coincide", report.components_coincide,
                            abs(final.max_points[0] - final.max_points[1]), final.eps))
    return checks
