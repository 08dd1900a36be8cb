# tests/test_application_services.py
import math
from unittest.mock import Mock

import pytest

from fracbec.application import services
from fracbec.application.asymptotics import concentration_report, sweep_fits
from fracbec.application.services import (
    EigenService,
    GroundStateService,
    MinimizeService,
    SweepService,
    VerificationService,
    flatness_to_dict,
    solve_ground_state,
)
from fracbec.domain.errors import ConfigError, VerificationError
from fracbec.domain.models import (
    Check,
    CoupledParams,
    GroundStateMethod,
    GroundStateSettings,
    ProbeSettings,
    RunConfig,
    SweepRecord,
    SweepResult,
    SweepSettings,
    SymmetryProbeResult,
)
from fracbec.domain.potentials import ConstantModulator, PotentialSpec, Zero, flatness_analysis
from fracbec.domain.repositories import IResultRepository
from fracbec.domain.spectral import SpectralGrid


@pytest.fixture
def mock_repo():
    return Mock(spec=IResultRepository)


@pytest.fixture
def run_config(sqrt_potential):
    return RunConfig(
        grid=SpectralGrid(256, 16.0),
        v1=sqrt_potential,
        v2=sqrt_potential,
        ground_state=GroundStateSettings(grid=SpectralGrid(2048, 64.0)),
        config_hash="abc123",
    )


def written(mock_repo, method="write_json"):
    """name -> payload for every call of one repository method."""
    return {c.args[0]: c.args[1] for c in getattr(mock_repo, method).call_args_list}


def record(eps, **overrides):
    delta = eps**1.5
    values = dict(
        eps=eps, delta=delta, a1=1.0, a2=1.0, energy=delta ** (1 / 3), l4=(delta ** (-2 / 3),) * 2,
        mu=(-1.0 / eps,) * 2, seminorms=(delta ** (-2 / 3),) * 2, max_points=(0.0, 0.0),
        profile_distance=(0.1 * eps,) * 2, trial_upper=1.0, lower_bound=0.0, converged=True,
    )
    values.update(overrides)
    return SweepRecord(**values)


class TestSolveGroundState:

    def test_uses_the_ground_state_grid(self, run_config, mocker):
        solve = mocker.patch("fracbec.application.services.solve_q_petviashvili")
        solve_ground_state(run_config)
        solve.assert_called_once_with(SpectralGrid(2048, 64.0), 1e-10, 2000)

    def test_falls_back_to_the_run_grid(self, run_config, mocker):
        solve = mocker.patch("fracbec.application.services.solve_q_gnf")
        settings = GroundStateSettings(method=GroundStateMethod.GRADIENT_FLOW, step=1.5, max_iter=500)
        solve_ground_state(RunConfig(run_config.grid, run_config.v1, run_config.v2, ground_state=settings))
        solve.assert_called_once_with(run_config.grid, 1e-10, 1.5, 500)


class TestGroundStateService:

    def test_writes_ledger_and_samples(self, mock_repo, run_config):
        config = RunConfig(
            run_config.grid, run_config.v1, run_config.v2,
            ground_state=GroundStateSettings(grid=SpectralGrid(2048, 64.0), moments=(0.5,)),
        )
        result = GroundStateService(mock_repo, config).run()
        ledger = written(mock_repo)["ground_state.json"]
        assert ledger["a_star"] == result.a_star
        assert set(ledger["moments"]) == {"0.5"}
        assert ledger["moment_truncation"]["0.5"] >= 0
        assert ledger["tail"]["polynomial"]
        assert -3.0 < ledger["tail"]["slope"] < -1.0
        name, header, rows = mock_repo.write_csv.call_args.args
        assert (name, tuple(header)) == ("ground_state.csv", ("x", "Q"))
        assert len(rows) == 2048

    def test_respects_formats(self, mock_repo, run_config):
        config = RunConfig(run_config.grid, run_config.v1, run_config.v2,
                           ground_state=run_config.ground_state, formats=("json",))
        GroundStateService(mock_repo, config).run()
        mock_repo.write_json.assert_called_once()
        mock_repo.write_csv.assert_not_called()


class TestEigenService:

    def test_equal_potentials_give_equal_eigenvalues(self, mock_repo, run_config):
        lam1, lam2 = EigenService(mock_repo, run_config).run()
        assert lam1 == pytest.approx(lam2, rel=1e-12)
        ledger = written(mock_repo)["eig.json"]
        assert ledger["sum"] == pytest.approx(lam1 + lam2)
        assert ledger["flatness_1"]["p"] == 0.5
        assert ledger["flatness_1"]["flattest"] == [0.0]
        assert mock_repo.write_csv.call_args.args[1] == ("x", "psi_1", "psi_2")

    def test_potential_without_zeros_has_no_flatness(self, mock_repo, run_config):
        flat = PotentialSpec((), ConstantModulator(1.5))
        config = RunConfig(run_config.grid, run_config.v1, flat)
        _, lam2 = EigenService(mock_repo, config).run()
        assert lam2 == pytest.approx(1.5, abs=1e-6)
        assert written(mock_repo)["eig.json"]["flatness_2"] is None


class TestMinimizeService:

    def test_needs_params(self, mock_repo, run_config):
        with pytest.raises(ConfigError, match="params"):
            MinimizeService(mock_repo, run_config)

    def test_writes_ledger(self, mock_repo, run_config):
        params = CoupledParams(0.3, 0.4, 0.2)
        config = RunConfig(run_config.grid, run_config.v1, run_config.v2, params=params,
                           ground_state=run_config.ground_state)
        result, probe = MinimizeService(mock_repo, config).run()
        assert probe is None
        ledger = written(mock_repo)["minimize.json"]
        assert ledger["params"] == {"a1": 0.3, "a2": 0.4, "beta": 0.2}
        assert ledger["regime"] == params.regime(ledger["a_star"]).value
        assert ledger["energy_rewritten"] == pytest.approx(result.energy, rel=1e-8)
        assert max(ledger["el_defects"]) < 1e-5
        assert "uniqueness_probe.json" not in written(mock_repo)

    def test_probe(self, mock_repo, run_config):
        config = RunConfig(run_config.grid, run_config.v1, run_config.v2, params=CoupledParams(0.05, 0.05, 0.05),
                           ground_state=run_config.ground_state, probes=ProbeSettings(n_starts=2, seed=3))
        _, probe = MinimizeService(mock_repo, config).run(probe=True)
        assert probe.converged == 2
        ledger = written(mock_repo)["uniqueness_probe.json"]
        assert ledger["distance"] == probe.distance
        assert ledger["small_ball_fraction"] == 0.05


class TestSweepService:

    def test_beta_precedence(self, mock_repo, run_config):
        service = SweepService(mock_repo, run_config)
        assert service._beta(2.0) == pytest.approx(1.0)
        service.config = RunConfig(run_config.grid, run_config.v1, run_config.v2, params=CoupledParams(0, 0, 0.3))
        assert service._beta(2.0) == 0.3
        service.config = RunConfig(run_config.grid, run_config.v1, run_config.v2, params=CoupledParams(0, 0, 0.3),
                                   sweep=SweepSettings(beta=0.7))
        assert service._beta(2.0) == 0.7

    def test_missing_common_zero_is_a_config_error(self, mock_repo, run_config):
        config = RunConfig(run_config.grid, run_config.v1, PotentialSpec((Zero(1.0, 0.5),)))
        with pytest.raises(ConfigError, match="potentials"):
            SweepService(mock_repo, config).run()

    def test_build_uses_ladder_settings(self, mock_repo, run_config):
        flatness = flatness_analysis(run_config.v1, run_config.v2)
        ground = Mock(a_star=2.0)
        service = SweepService(mock_repo, run_config)
        built = service.build(ground, flatness)
        assert len(built.ladder) == 8
        assert built.ladder[0] ** 1.5 == pytest.approx(0.4)
        assert built.grid == run_config.grid

        service.config = RunConfig(run_config.grid, run_config.v1, run_config.v2,
                                   sweep=SweepSettings(eps=(0.5, 0.25), grid=SpectralGrid(512, 16.0)))
        built = service.build(ground, flatness)
        assert built.ladder == (0.5, 0.25)
        assert built.grid == SpectralGrid(512, 16.0)

    def test_run_writes_every_output(self, mock_repo, run_config, mocker):
        flatness = flatness_analysis(run_config.v1, run_config.v2)
        records = (record(0.8), record(0.4), record(0.2), SweepRecord(eps=0.1, delta=0.1**1.5, a1=1.0, a2=1.0,
                                                                       error="stalled"))

        def fake_sweep(config, ground, flatness):
            return SweepResult(config, ground.a_star, flatness, 1.0, records, sweep_fits(records),
                               concentration_report(records, flatness))

        mocker.patch("fracbec.application.services.solve_ground_state", return_value=Mock(a_star=2.0))
        mocker.patch("fracbec.application.services.run_sweep", side_effect=fake_sweep)
        config = RunConfig(run_config.grid, run_config.v1, run_config.v2,
                           sweep=SweepSettings(eps=(0.8, 0.4, 0.2, 0.1)))
        sweep, claims = SweepService(mock_repo, config).run()

        fits = written(mock_repo)["fits.json"]
        assert fits["failed_points"] == [{"eps": 0.1, "error": "stalled"}]
        assert fits["flatness"] == flatness_to_dict(flatness)
        assert fits["expected_slopes"]["energy"] == pytest.approx(1 / 3)
        assert fits["claims"] == [c.to_dict() for c in claims]
        assert fits["concentration"]["site"] == 0.0

        name, header, rows = mock_repo.write_csv.call_args.args
        assert name == "sweep.csv"
        assert header == SweepRecord.CSV_COLUMNS
        assert len(rows) == 4

        columns = {c.args[0]: c.args[1:] for c in mock_repo.write_columns.call_args_list}
        assert set(columns) == {
            "energy_vs_delta.dat", "l4_1_vs_delta.dat", "l4_2_vs_delta.dat", "seminorm_1_vs_delta.dat",
            "seminorm_2_vs_delta.dat", "eps_mu_1_vs_eps.dat", "eps_mu_2_vs_eps.dat",
        }
        xs, ys = columns["eps_mu_1_vs_eps.dat"]
        assert xs == [0.8, 0.4, 0.2]
        assert ys == pytest.approx([1.0, 1.0, 1.0])

    def test_symmetry_probe_defaults_to_the_last_ladder_point(self, mock_repo, run_config, mocker):
        probe = mocker.patch(
            "fracbec.application.services.symmetry_breaking_probe",
            return_value=SymmetryProbeResult((0.9, 0.95), (1.0, -1.0)),
        )
        sweep = Mock(a_star=2.0)
        sweep.config.ladder = (0.5, 0.25)
        sweep.config.beta = 1.0
        service = SweepService(mock_repo, run_config)
        result = service.symmetry_probe(sweep)
        assert probe.call_args.args[3] == 0.25
        service._write_symmetry(result)
        ledger = written(mock_repo)["symmetry_probe.json"]
        assert ledger["min_asymmetry"] == 0.9
        assert ledger["sites"] == [1.0, -1.0]


class TestVerificationService:

    @pytest.fixture
    def suite(self, mocker):
        suite_class = mocker.patch("fracbec.application.services.InvariantSuite")
        suite = suite_class.return_value
        suite.ground = Mock(a_star=1.5)
        return suite

    def test_all_checks_pass(self, mock_repo, run_config, suite):
        suite.run.return_value = [Check("a", True, 0.0, 1.0), Check("b", True, 0.5, 1.0)]
        render = Mock(return_value="# report")
        checks = VerificationService(mock_repo, run_config, render).run()
        assert len(checks) == 2
        summary = written(mock_repo)["verify.json"]
        assert summary["passed"] is True
        assert summary["a_star"] == 1.5
        assert summary["n_checks"] == 2
        render.assert_called_once_with(summary)
        mock_repo.write_text.assert_called_once_with("verify_report.md", "# report")

    def test_failed_check_raises_after_writing(self, mock_repo, run_config, suite):
        suite.run.return_value = [Check("a", True, 0.0, 1.0), Check("b", False, 2.0, 1.0)]
        service = VerificationService(mock_repo, run_config)
        with pytest.raises(VerificationError) as e:
            service.run(full=True)
        assert e.value.failed == ["b"]
        assert e.value.exit_code == 4
        assert written(mock_repo)["verify.json"]["n_failed"] == 1
        assert len(service.checks) == 2
        suite.run.assert_called_once_with(True)
        mock_repo.write_text.assert_not_called()

    def test_run_seed_reaches_the_suite(self, mock_repo, run_config, suite):
        suite.run.return_value = []
        config = RunConfig(run_config.grid, run_config.v1, run_config.v2, seed=42)
        VerificationService(mock_repo, config).run()
        assert services.InvariantSuite.call_args.args[0].seed == 42

    def test_missing_ground_state_reports_nan(self, mock_repo, run_config, suite):
        suite.run.return_value = []
        suite.ground = None
        VerificationService(mock_repo, run_config).run()
        assert math.isnan(written(mock_repo)["verify.json"]["a_star"])
