# tests/test_application_verification.py
from unittest.mock import Mock

import pytest

from fracbec.application.verification import SQRT_POTENTIAL, InvariantSuite
from fracbec.domain.fitting import fit_power_law
from fracbec.domain.models import Check, VerifySettings
from fracbec.domain.spectral import SpectralGrid


@pytest.fixture
def small_settings():
    """The fast part of the suite on grids small enough for a unit test, with matching tolerances."""
    return VerifySettings(
        ground_grid=SpectralGrid(2048, 64.0),
        grid=SpectralGrid(256, 16.0),
        dense_grid=SpectralGrid(256, 16.0),
        oracle_grid=SpectralGrid(64, 8.0),
        doubling_grid=SpectralGrid(512, 32.0),
        n_random_fields=10,
        n_starts=2,
        pohozaev=5e-2,
        gn_at_q=5e-2,
        grid_doubling=5e-2,
        tail_range=(-3.0, -1.0),
        decoupling=1e-5,
        oracle_energy=1e-5,
    )


def one_check(name):
    return Mock(return_value=[Check(name, True, 0.0, 1.0)])


class TestInvariantSuite:

    def test_fast_sections_pass_on_small_grids(self, small_settings):
        suite = InvariantSuite(small_settings)
        checks = suite.run()
        names = [c.name for c in checks]
        assert "Pohozaev: seminorm = mass" in names
        assert "multiplier matches dense matrix" in names
        assert "linear minimum equals eigenvalue sum" in names
        assert names[-1] == "unique minimizer in the small ball"
        failed = [(c.name, c.value) for c in checks if not c.passed]
        assert failed == []
        assert suite.ground is not None
        assert suite.sweeps == {}

    def test_full_run_adds_the_near_critical_sections(self, small_settings, mocker):
        suite = InvariantSuite(small_settings)
        sections = ["ground_state_checks", "oracle_checks", "minimizer_checks", "uniqueness_checks",
                    "sweep_checks", "flattest_checks", "symmetry_checks"]
        for section in sections:
            mocker.patch.object(suite, section, one_check(section))

        assert [c.name for c in suite.run()] == sections[:4]
        assert [c.name for c in suite.run(full=True)] == sections
        suite.sweep_checks.assert_called_once()

    def test_ground_state_is_solved_once(self, small_settings, mocker):
        solve = mocker.patch("fracbec.application.verification.solve_q_petviashvili")
        suite = InvariantSuite(small_settings)
        assert suite._ground() is suite._ground()
        solve.assert_called_once_with(small_settings.ground_grid, small_settings.ground_tol, small_settings.ground_max_iter)

    def test_failed_checks_are_logged_as_warnings(self, small_settings, mocker, caplog):
        suite = InvariantSuite(small_settings)
        mocker.patch.object(suite, "ground_state_checks", Mock(return_value=[Check("broken", False, 2.0, 1.0)]))
        for section in ("oracle_checks", "minimizer_checks", "uniqueness_checks"):
            mocker.patch.object(suite, section, Mock(return_value=[]))
        with caplog.at_level("WARNING", logger="fracbec"):
            checks = suite.run()
        assert not checks[0].passed
        assert "broken: FAIL" in caplog.text

    def test_grid_doubling_uses_its_own_grid_pair(self, small_settings, mocker):
        solve = mocker.patch(
            "fracbec.application.verification.solve_q_petviashvili",
            side_effect=lambda grid, tol, max_iter: Mock(a_star=2.0 if grid.n_points == 512 else 2.0001),
        )
        check = InvariantSuite(small_settings).grid_doubling_check()
        assert [call.args[0] for call in solve.call_args_list] == [SpectralGrid(512, 32.0), SpectralGrid(1024, 64.0)]
        assert check.passed
        assert check.value == pytest.approx(5e-5)

    def test_default_grid_doubling_pair(self):
        settings = VerifySettings()
        assert settings.doubling_grid == SpectralGrid(8192, 256.0)
        assert settings.doubling_grid.doubled() == SpectralGrid(16384, 512.0)


class TestSingleComponentScaling:

    @pytest.fixture
    def suite(self, small_settings):
        suite = InvariantSuite(small_settings)
        suite.ground = Mock(a_star=2.0)
        return suite

    @staticmethod
    def scaling(exponent):
        gaps = [2.0 * (1 - f) for f in (0.5, 0.7, 0.9, 0.95, 0.99)]
        energies = [g**exponent for g in gaps]
        return fit_power_law(gaps, energies), True, energies

    def test_one_third_exponent_passes(self, suite, small_settings, mocker):
        run = mocker.patch("fracbec.application.verification.single_energy_scaling", return_value=self.scaling(1 / 3))
        checks = suite.single_scaling_checks()
        assert [c.passed for c in checks] == [True, True]
        assert checks[0].value == pytest.approx(0.0, abs=1e-10)
        run.assert_called_once_with(
            SQRT_POTENTIAL, small_settings.sweep_grid, 2.0, (0.5, 0.7, 0.9, 0.95, 0.99), small_settings.solver
        )

    def test_wrong_exponent_fails(self, suite, mocker):
        mocker.patch("fracbec.application.verification.single_energy_scaling", return_value=self.scaling(0.5))
        exponent, _ = suite.single_scaling_checks()
        assert not exponent.passed
        assert exponent.value == pytest.approx(0.5)

    def test_sweep_section_includes_single_scaling(self, suite, mocker):
        mocker.patch.object(suite, "_sweep")
        mocker.patch("fracbec.application.verification.sweep_claims", return_value=[Check("energy scaling exponent", True, 0.0, 0.05)])
        mocker.patch.object(suite, "single_scaling_checks", return_value=[Check("single", True, 0.0, 0.05)])
        assert [c.name for c in suite.sweep_checks()] == ["|x|^1/2: energy scaling exponent", "single"]
