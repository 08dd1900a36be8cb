# fracbec/application/verification.py
"""The invariant suite behind `fracbec verify`."""
import logging
import math
from collections.abc import Callable
from dataclasses import replace

import numpy as np

from ..domain.models import (
    Check,
    CoupledParams,
    GroundStateResult,
    SolverOptions,
    SweepConfig,
    SweepResult,
    VerifySettings,
)
from ..domain.potentials import PotentialSpec, Zero
from ..domain.spectral import (
    Field,
    SpectralGrid,
    dense_multiplier_matrix,
    fractional_apply,
)
from .asymptotics import (
    build_ladder,
    expected_slopes,
    run_sweep,
    single_energy_scaling,
    sweep_claims,
    symmetry_breaking_probe,
    uniqueness_probe,
)
from .ground_state import (
    compare_ground_states,
    gn_quotient,
    solve_q_gnf,
    solve_q_petviashvili,
    tail_exponent,
)
from .minimizer import (
    dense_eigen_oracle,
    dense_single_energy_oracle,
    first_eigenpair,
    minimize,
    minimize_single,
)

logger = logging.getLogger(__name__)

SQRT_POTENTIAL = PotentialSpec((Zero(0.0, 0.5),))
FLATTEST_POTENTIAL = PotentialSpec((Zero(-1.0, 0.5), Zero(1.0, 0.75)))
SYMMETRIC_POTENTIAL = PotentialSpec((Zero(-1.0, 0.5), Zero(1.0, 0.5)))


def _relative(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def _section(name: str, run: Callable[[], list[Check]]) -> list[Check]:
    logger.info("Verifying: %s", name)
    checks = run()
    for check in checks:
        logger.log(logging.INFO if check.passed else logging.WARNING, "%s: %s (%.3e vs %.3e)",
                   check.name, "pass" if check.passed else "FAIL", check.value, check.threshold)
    return checks


class InvariantSuite:
    """Runs the fast invariant checks and, on request, the near-critical sweeps."""

    def __init__(self, settings: VerifySettings):
        self.settings = settings
        self.ground: GroundStateResult | None = None
        self.sweeps: dict[str, SweepResult] = {}

    def run(self, full: bool = False) -> list[Check]:
        checks = _section("ground state identities", self.ground_state_checks)
        checks += _section("oracle equivalence", self.oracle_checks)
        checks += _section("eigen limit and decoupling", self.minimizer_checks)
        checks += _section("uniqueness probe", self.uniqueness_checks)
        if full:
            checks += _section("energy and profile scaling", self.sweep_checks)
            checks += _section("flattest-site selection", self.flattest_checks)
            checks += _section("symmetry breaking", self.symmetry_checks)
        return checks

    def _ground(self) -> GroundStateResult:
        if self.ground is None:
            s = self.settings
            self.ground = solve_q_petviashvili(s.ground_grid, s.ground_tol, s.ground_max_iter)
        return self.ground

    def ground_state_checks(self) -> list[Check]:
        s = self.settings
        ground = self._ground()
        s_gap, q4_gap = ground.pohozaev_defects()
        checks = [
            Check("Pohozaev: seminorm = mass", abs(s_gap) <= s.pohozaev, abs(s_gap), s.pohozaev),
            Check("Pohozaev: quartic = 2 mass", abs(q4_gap) <= s.pohozaev, abs(q4_gap), s.pohozaev),
        ]

        at_q = gn_quotient(ground.q, ground.a_star)
        checks.append(Check("GN quotient at Q", abs(at_q - 1) <= s.gn_at_q, abs(at_q - 1), s.gn_at_q))
        rng = np.random.default_rng(s.seed)
        worst = max(gn_quotient(self._random_field(ground.q.grid, rng), ground.a_star) for _ in range(s.n_random_fields))
        checks.append(Check("GN inequality on random fields", worst <= 1 + s.gn_random, worst, 1 + s.gn_random,
                            f"{s.n_random_fields} fields"))

        gnf = solve_q_gnf(s.ground_grid, s.ground_tol, s.gnf_step, s.gnf_max_iter)
        gap = _relative(gnf.a_star, ground.a_star)
        checks.append(Check("a* agrees across methods", gap <= s.a_star_methods, gap, s.a_star_methods,
                            f"a* = {ground.a_star:.12g}"))
        distance = compare_ground_states(gnf.q, ground.q)
        checks.append(Check("Q agrees across methods", distance <= s.a_star_methods, distance, s.a_star_methods))

        checks.append(self.grid_doubling_check())

        low, high = s.tail_range
        tail = tail_exponent(ground.q)
        passed = tail.polynomial and low <= tail.slope <= high
        checks.append(Check("tail decay exponent", passed, tail.slope, low,
                            f"range [{low}, {high}], polynomial tail: {tail.polynomial}"))
        return checks

    def grid_doubling_check(self) -> Check:
        s = self.settings
        base = solve_q_petviashvili(s.doubling_grid, s.ground_tol, s.ground_max_iter)
        doubled = solve_q_petviashvili(s.doubling_grid.doubled(), s.ground_tol, s.ground_max_iter)
        drift = _relative(doubled.a_star, base.a_star)
        return Check("a* stable under grid doubling", drift <= s.grid_doubling, drift, s.grid_doubling,
                     f"N = {s.doubling_grid.n_points} -> {2 * s.doubling_grid.n_points}")

    @staticmethod
    def _random_field(grid: SpectralGrid, rng: np.random.Generator) -> Field:
        x = grid.nodes
        n = int(rng.integers(1, 5))
        values = sum(
            rng.uniform(0.1, 2.0) * np.exp(-(((x - rng.uniform(-4, 4)) / rng.uniform(0.3, 3.0)) ** 2)) for _ in range(n)
        )
        return Field(grid, values)

    def oracle_checks(self) -> list[Check]:
        s = self.settings
        grid = s.oracle_grid
        rng = np.random.default_rng(s.seed)
        u = Field(grid, rng.standard_normal(grid.n_points))
        matrix = dense_multiplier_matrix(grid, 1.0)
        spectral = fractional_apply(u, 1.0).values
        gap = float(np.max(np.abs(spectral - matrix @ u.values)) / np.max(np.abs(spectral)))
        checks = [Check("multiplier matches dense matrix", gap <= s.oracle_matrix, gap, s.oracle_matrix)]

        d = 0.5 * self._ground().a_star
        flow = minimize_single(d, SQRT_POTENTIAL, grid, opts=s.solver).energy
        dense = dense_single_energy_oracle(d, SQRT_POTENTIAL, grid)
        gap = abs(flow - dense)
        checks.append(Check("flow energy matches generic descent", gap <= s.oracle_energy, gap, s.oracle_energy,
                            f"d = {d:.6g}"))
        return checks

    def minimizer_checks(self) -> list[Check]:
        s = self.settings
        grid = s.grid
        lam, _ = first_eigenpair(SQRT_POTENTIAL, grid, s.solver.defect_tol, s.solver)
        linear = minimize(CoupledParams(0.0, 0.0, 0.0), SQRT_POTENTIAL, SQRT_POTENTIAL, grid, opts=s.solver)
        gap = abs(linear.energy - 2 * lam)
        checks = [Check("linear minimum equals eigenvalue sum", gap <= s.eigen_sum, gap, s.eigen_sum,
                        f"lambda_1 = {lam:.10g}")]

        dense_lam, _ = dense_eigen_oracle(SQRT_POTENTIAL, s.dense_grid)
        gap = abs(dense_lam - lam)
        checks.append(Check("eigenvalue matches dense matrix", gap <= s.dense_eigen, gap, s.dense_eigen))

        d = 0.9 * self._ground().a_star
        coupled = minimize(CoupledParams(d, d, 0.0), SQRT_POTENTIAL, SQRT_POTENTIAL, grid, opts=s.solver)
        single = minimize_single(d, SQRT_POTENTIAL, grid, opts=s.solver)
        gap = abs(coupled.energy - 2 * single.energy)
        checks.append(Check("decoupling at beta = 0", gap <= s.decoupling, gap, s.decoupling, f"d = {d:.6g}"))
        return checks

    def _probe_solver(self) -> SolverOptions:
        return replace(self.settings.solver, defect_tol=min(self.settings.solver.defect_tol, 1e-9))

    def uniqueness_checks(self) -> list[Check]:
        s = self.settings
        a_star = self._ground().a_star
        a = 0.5 * s.small_ball_fraction * a_star
        probe = uniqueness_probe(
            CoupledParams(a, a, a), SQRT_POTENTIAL, SQRT_POTENTIAL, s.grid, s.n_starts, s.seed,
            self._probe_solver(), a_star, s.small_ball_fraction,
        )
        passed = probe.failed == 0 and probe.distance <= s.uniqueness
        return [Check("unique minimizer in the small ball", passed, probe.distance, s.uniqueness,
                      f"{probe.converged} converged, ball radius {probe.ball_radius:.4g}")]

    def _sweep(self, name: str, potential: PotentialSpec, p0: float) -> SweepResult:
        s = self.settings
        ground = self._ground()
        ladder = build_ladder(ground.a_star, p0, s.ladder_points, s.ladder_ratio, s.ladder_start)
        config = SweepConfig(
            beta=s.beta_fraction * ground.a_star,
            ladder=tuple(ladder),
            v1=potential,
            v2=potential,
            grid=s.sweep_grid,
            profile_grid=s.profile_grid,
            solver=s.solver,
            fit_window=s.fit_window,
            resolution_nodes=s.resolution_nodes,
        )
        self.sweeps[name] = run_sweep(config, ground)
        return self.sweeps[name]

    def sweep_checks(self) -> list[Check]:
        sweep = self._sweep("sqrt", SQRT_POTENTIAL, 0.5)
        checks = [replace(c, name=f"|x|^1/2: {c.name}") for c in sweep_claims(sweep, self.settings.claims)]
        return checks + self.single_scaling_checks()

    def single_scaling_checks(self) -> list[Check]:
        """e(d) of the single-component problem against a* - d on the fixed fraction ladder."""
        s = self.settings
        a_star = self._ground().a_star
        fit, monotone, energies = single_energy_scaling(SQRT_POTENTIAL, s.sweep_grid, a_star, s.single_fractions, s.solver)
        expected = expected_slopes(0.5)["energy"]
        error = fit.relative_error(expected)
        return [
            Check("|x|^1/2: single-component energy exponent", error <= s.claims.slope_rel, error, s.claims.slope_rel,
                  f"slope {fit.slope:.5f} vs {expected:.5f}"),
            Check("|x|^1/2: single-component energy decreasing in d", monotone, len(energies), len(s.single_fractions)),
        ]

    def flattest_checks(self) -> list[Check]:
        sweep = self._sweep("flattest", FLATTEST_POTENTIAL, 0.75)
        report = sweep.concentration
        if report is None:
            return [Check("flattest site selected", False, math.nan, 1.0, "too few converged ladder points")]
        final = sweep.converged_records[-1]
        near = all(abs(x - 1.0) <= final.eps for x in final.max_points)
        return [
            Check("flattest site selected", near and report.site == 1.0, max(abs(x - 1.0) for x in final.max_points),
                  final.eps, "maxima must approach x = +1"),
            Check("concentration ratio small and decreasing", report.final_ratio_small and report.ratio_decreasing,
                  max(report.ratios[-1]), self.settings.claims.concentration_ratio),
        ]

    def symmetry_checks(self) -> list[Check]:
        s = self.settings
        a_star = self._ground().a_star
        beta = s.beta_fraction * 0.1 * a_star
        far_eps = (0.9 * a_star) ** (1 / 1.5)
        far = symmetry_breaking_probe(beta, SYMMETRIC_POTENTIAL, s.symmetry_grid, far_eps, a_star,
                                      opts=s.solver, symmetric_init=True)
        near = symmetry_breaking_probe(s.beta_fraction * a_star, SYMMETRIC_POTENTIAL, s.symmetry_grid,
                                       s.symmetry_eps, a_star, s.n_starts, s.seed, s.solver)
        logger.debug("Near-critical concentration sites: %s", near.sites)
        return [
            Check("symmetric far from critical", far.max_asymmetry < s.symmetric_far, far.max_asymmetry, s.symmetric_far),
            Check("symmetry broken near critical", near.min_asymmetry > s.symmetric_near, near.min_asymmetry,
                  s.symmetric_near),
        ]

