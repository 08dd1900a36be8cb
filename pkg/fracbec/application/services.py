# fracbec/application/services.py
import logging
import math
from collections.abc import Callable
from dataclasses import replace
from typing import Any

from ..domain.errors import ConfigError, NoCommonZeroError, VerificationError
from ..domain.models import (
    Check,
    GroundStateMethod,
    GroundStateResult,
    MinimizerResult,
    RunConfig,
    SweepConfig,
    SweepRecord,
    SweepResult,
    SymmetryProbeResult,
    UniquenessProbeResult,
)
from ..domain.potentials import FlatnessReport, PotentialSpec, flatness_analysis, single_flatness
from ..domain.repositories import IResultRepository
from .asymptotics import build_ladder, expected_slopes, run_sweep, sweep_claims, symmetry_breaking_probe, uniqueness_probe
from .ground_state import q_moment, solve_q_gnf, solve_q_petviashvili, tail_exponent, with_moments
from .minimizer import el_defect, energy_rewritten, first_eigenpair, minimize
from .verification import InvariantSuite

logger = logging.getLogger(__name__)

# sweep fit name -> plot file stem
FIT_LAWS = {
    "energy": "energy_vs_delta",
    "l4_1": "l4_1_vs_delta",
    "l4_2": "l4_2_vs_delta",
    "seminorm_1": "seminorm_1_vs_delta",
    "seminorm_2": "seminorm_2_vs_delta",
}


def _law_values(record: SweepRecord, name: str) -> float:
    if name == "energy":
        return record.energy
    quantity, index = name.rsplit("_", 1)
    pair = record.l4 if quantity == "l4" else record.seminorms
    return pair[int(index) - 1]


def flatness_to_dict(report: FlatnessReport) -> dict[str, Any]:
    return {
        "common_zeros": list(report.common_zeros),
        "pbar": list(report.pbar),
        "p0": report.p0,
        "gammas": list(report.gammas),
        "gamma": report.gamma,
        "flattest": list(report.flattest),
        "concentration_regime": report.concentration_regime,
    }


def solve_ground_state(config: RunConfig) -> GroundStateResult:
    """Q on the ground-state grid (falls back to the run grid) with the configured method."""
    settings = config.ground_state
    grid = settings.grid or config.grid
    if settings.method is GroundStateMethod.GRADIENT_FLOW:
        return solve_q_gnf(grid, settings.tol, settings.step, settings.max_iter)
    return solve_q_petviashvili(grid, settings.tol, settings.max_iter)


class GroundStateService:
    """Computes Q, a* and the requested moments; writes the ledger and the Q samples."""

    def __init__(self, repo: IResultRepository, config: RunConfig):
        self.repo = repo
        self.config = config

    def run(self) -> GroundStateResult:
        result = with_moments(solve_ground_state(self.config), self.config.ground_state.moments)
        ledger = result.to_dict()
        ledger["moment_truncation"] = {
            repr(p): q_moment(result.q, p).truncation for p in sorted(result.moments)
        }
        ledger["tail"] = tail_exponent(result.q).to_dict()
        if "json" in self.config.formats:
            self.repo.write_json("ground_state.json", ledger)
        if "csv" in self.config.formats:
            rows = zip(result.q.grid.nodes, result.q.values)
            self.repo.write_csv("ground_state.csv", ("x", "Q"), list(rows))
        return result


class EigenService:
    """First eigenpair of sqrt(-Laplacian) + V_i for both components."""

    def __init__(self, repo: IResultRepository, config: RunConfig):
        self.repo = repo
        self.config = config

    def run(self) -> tuple[float, float]:
        grid, opts = self.config.grid, self.config.solver
        lam1, psi1 = first_eigenpair(self.config.v1, grid, opts.defect_tol, opts)
        lam2, psi2 = first_eigenpair(self.config.v2, grid, opts.defect_tol, opts)
        logger.info("lambda_11 = %.12g, lambda_21 = %.12g", lam1, lam2)
        if "json" in self.config.formats:
            self.repo.write_json("eig.json", {
                "lambda_1": lam1,
                "lambda_2": lam2,
                "sum": lam1 + lam2,
                "flatness_1": _single_flatness_dict(self.config.v1),
                "flatness_2": _single_flatness_dict(self.config.v2),
            })
        if "csv" in self.config.formats:
            rows = zip(grid.nodes, psi1.values, psi2.values)
            self.repo.write_csv("eig.csv", ("x", "psi_1", "psi_2"), list(rows))
        return lam1, lam2


def _single_flatness_dict(v: PotentialSpec) -> dict[str, Any] | None:
    if not v.zeros:
        return None
    report = single_flatness(v)
    return {"p": report.p, "zeros": list(report.zeros), "kappas": list(report.kappas), "flattest": list(report.flattest)}


class MinimizeService:
    """Minimizes the coupled energy at the configured (a1, a2, beta), optionally probing uniqueness."""

    def __init__(self, repo: IResultRepository, config: RunConfig):
        if config.params is None:
            raise ConfigError("params: the minimize command needs a 'params' block with a1, a2 and beta")
        self.repo = repo
        self.config = config
        self.params = config.params

    def run(self, probe: bool = False) -> tuple[MinimizerResult, UniquenessProbeResult | None]:
        cfg = self.config
        a_star = solve_ground_state(cfg).a_star
        result = minimize(self.params, cfg.v1, cfg.v2, cfg.grid, opts=cfg.solver, a_star=a_star)
        state = result.state
        ledger = result.to_dict()
        ledger.update(
            params={"a1": self.params.a1, "a2": self.params.a2, "beta": self.params.beta},
            a_star=a_star,
            regime=self.params.regime(a_star).value,
            energy_rewritten=energy_rewritten(state, self.params, cfg.v1, cfg.v2),
            el_defects=list(el_defect(state, self.params, cfg.v1, cfg.v2, (result.mu1, result.mu2))),
        )
        if "json" in cfg.formats:
            self.repo.write_json("minimize.json", ledger)
        if "csv" in cfg.formats:
            u1, u2 = result.fields
            self.repo.write_csv("minimize.csv", ("x", "u_1", "u_2"), list(zip(cfg.grid.nodes, u1.values, u2.values)))

        if not probe:
            return result, None
        probes = cfg.probes
        report = uniqueness_probe(
            self.params, cfg.v1, cfg.v2, cfg.grid, probes.n_starts, probes.seed, cfg.solver, a_star,
            probes.small_ball_fraction,
        )
        if "json" in cfg.formats:
            self.repo.write_json("uniqueness_probe.json", {
                "distance": report.distance,
                "converged": report.converged,
                "failed": report.failed,
                "radius": report.radius,
                "ball_radius": report.ball_radius,
                "small_ball_fraction": probes.small_ball_fraction,
                "sites": list(report.sites),
            })
        return result, report


class SweepService:
    """Runs the near-critical ladder and writes records, fits, claims and plot files."""

    def __init__(self, repo: IResultRepository, config: RunConfig):
        self.repo = repo
        self.config = config

    def _flatness(self) -> FlatnessReport:
        try:
            return flatness_analysis(self.config.v1, self.config.v2)
        except NoCommonZeroError as e:
            raise ConfigError(f"potentials: {e}") from e

    def _beta(self, a_star: float) -> float:
        settings = self.config.sweep
        if settings.beta is not None:
            return settings.beta
        if self.config.params is not None and self.config.params.beta > 0:
            return self.config.params.beta
        return settings.beta_fraction * a_star

    def build(self, ground: GroundStateResult, flatness: FlatnessReport) -> SweepConfig:
        settings = self.config.sweep
        ladder = settings.eps or tuple(
            build_ladder(ground.a_star, flatness.p0, settings.n_points, settings.ratio, settings.start_fraction)
        )
        return SweepConfig(
            beta=self._beta(ground.a_star),
            ladder=tuple(ladder),
            v1=self.config.v1,
            v2=self.config.v2,
            grid=settings.grid or self.config.grid,
            profile_grid=settings.profile_grid,
            solver=self.config.solver,
            warm_start=settings.warm_start,
            fit_window=settings.fit_window,
            resolution_nodes=settings.resolution_nodes,
        )

    def run(self, symmetry_probe: bool = False) -> tuple[SweepResult, list[Check]]:
        flatness = self._flatness()
        ground = solve_ground_state(self.config)
        sweep = run_sweep(self.build(ground, flatness), ground, flatness)
        claims = sweep_claims(sweep, self.config.sweep.claims)
        self._write(sweep, claims)
        if symmetry_probe:
            self._write_symmetry(self.symmetry_probe(sweep))
        return sweep, claims

    def symmetry_probe(self, sweep: SweepResult) -> SymmetryProbeResult:
        eps = self.config.probes.symmetry_eps or sweep.config.ladder[-1]
        return symmetry_breaking_probe(
            sweep.config.beta, self.config.v1, sweep.config.grid, eps, sweep.a_star,
            self.config.probes.n_starts, self.config.probes.seed, self.config.solver,
        )

    def _write(self, sweep: SweepResult, claims: list[Check]) -> None:
        formats = self.config.formats
        if "csv" in formats:
            self.repo.write_csv("sweep.csv", SweepRecord.CSV_COLUMNS, [r.to_row() for r in sweep.records])
        if "json" in formats:
            concentration = sweep.concentration
            self.repo.write_json("fits.json", {
                "a_star": sweep.a_star,
                "beta": sweep.config.beta,
                "ladder": list(sweep.config.ladder),
                "flatness": flatness_to_dict(sweep.flatness),
                "lambda_predicted": sweep.lambda_predicted,
                "expected_slopes": expected_slopes(sweep.flatness.p0),
                "fits": {name: fit.to_dict() for name, fit in sweep.fits.items()},
                "claims": [c.to_dict() for c in claims],
                "failed_points": [{"eps": r.eps, "error": r.error} for r in sweep.records if not r.ok],
                "concentration": None if concentration is None else {
                    "site": concentration.site,
                    "ratios": [list(r) for r in concentration.ratios],
                    "final_ratio_small": concentration.final_ratio_small,
                    "ratio_decreasing": concentration.ratio_decreasing,
                    "components_coincide": concentration.components_coincide,
                },
            })
        if "dat" in formats:
            ok = sweep.converged_records
            deltas = [r.delta for r in ok]
            for name, law in FIT_LAWS.items():
                self.repo.write_columns(f"{law}.dat", deltas, [_law_values(r, name) for r in ok])
            lam = sweep.lambda_predicted
            for i in (0, 1):
                scaled = [r.eps * r.mu[i] / -lam for r in ok]
                self.repo.write_columns(f"eps_mu_{i + 1}_vs_eps.dat", [r.eps for r in ok], scaled)

    def _write_symmetry(self, probe: SymmetryProbeResult) -> None:
        if "json" in self.config.formats:
            self.repo.write_json("symmetry_probe.json", {
                "asymmetries": list(probe.asymmetries),
                "sites": list(probe.sites),
                "max_asymmetry": probe.max_asymmetry,
                "min_asymmetry": probe.min_asymmetry,
            })


class VerificationService:
    """Runs the invariant suite; writes verify.json and the rendered report, then fails on any failed check."""

    def __init__(
        self,
        repo: IResultRepository,
        config: RunConfig,
        render: Callable[[dict[str, Any]], str] | None = None,
    ):
        self.repo = repo
        self.config = config
        self.render = render
        self.checks: list[Check] = []

    def run(self, full: bool = False) -> list[Check]:
        suite = InvariantSuite(replace(self.config.verify, seed=self.config.seed))
        checks = self.checks = suite.run(full)
        failed = [c.name for c in checks if not c.passed]
        ground = suite.ground
        summary = {
            "full": full,
            "passed": not failed,
            "n_checks": len(checks),
            "n_failed": len(failed),
            "a_star": ground.a_star if ground is not None else math.nan,
            "checks": [c.to_dict() for c in checks],
        }
        self.repo.write_json("verify.json", summary)
        if self.render is not None:
            self.repo.write_text("verify_report.md", self.render(summary))
        if failed:
            raise VerificationError(f"{len(failed)} of {len(checks)} checks failed: {', '.join(failed)}", failed)
        logger.info("All %d checks passed", len(checks))
        return checks

