# tests/test_infra_config_utils.py
import json
import logging
from pathlib import Path

import pytest
from jsonschema import Draft7Validator

from fracbec.domain.errors import ConfigError
from fracbec.domain.models import GroundStateMethod
from fracbec.domain.potentials import ExpressionModulator
from fracbec.domain.spectral import SpectralGrid
from fracbec.infrastructure.config import default_document, load_schema, parse_config
from fracbec.infrastructure.utils import (
    OUTPUT_DIR_ENV,
    canonical_json,
    config_hash,
    resolve_output_dir,
    setup_logging,
)

MINIMAL = {
    "potentials": {
        "v1": {"zeros": [{"location": 0.0, "exponent": 0.5}]},
        "v2": {"zeros": [{"location": 0.0, "exponent": 0.5}]},
    }
}


@pytest.fixture(autouse=True)
def no_output_env(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


class TestDefaults:

    def test_minimal_config_is_filled(self, write_config):
        config = parse_config(write_config(MINIMAL))
        assert config.grid == SpectralGrid(8192, 256.0)
        assert config.params is None
        assert config.ground_state.method is GroundStateMethod.PETVIASHVILI
        assert config.ground_state.grid is None
        assert config.formats == ("json", "csv", "dat")
        assert config.output_dir == "results"
        assert config.seed == 0
        assert config.verify.tail_range == (-2.3, -1.7)
        assert config.verify.doubling_grid == SpectralGrid(8192, 256.0)
        assert config.verify.single_fractions == (0.5, 0.7, 0.9, 0.95, 0.99)
        assert config.v1.zeros[0].exponent == 0.5
        assert "grid" in config.defaults_applied
        assert "potentials/v1/modulator" in config.defaults_applied

    def test_every_default_is_logged(self, write_config, caplog):
        with caplog.at_level(logging.INFO, logger="fracbec"):
            parse_config(write_config(MINIMAL))
        assert "default applied: seed = 0" in caplog.text

    def test_default_document_satisfies_the_schema(self):
        document = {**default_document(), **MINIMAL}
        assert list(Draft7Validator(load_schema()).iter_errors(document)) == []

    def test_explicit_sections_are_merged(self, config_data, write_config):
        config_data["params"] = {"a1": 0.5, "beta": 0.25}
        config_data["solver"] = {"defect_tol": 1e-8}
        config_data["ground_state"]["method"] = "normalized-gradient-flow"
        config_data["sweep"] = {"eps": [0.4, 0.2], "tolerances": {"slope_rel": 0.1}}
        config_data["potentials"]["v2"]["modulator"] = {"type": "expression", "expression": "1 + 0.5*cos(x)", "bound": 0.5}
        config = parse_config(write_config(config_data))
        assert (config.params.a1, config.params.a2, config.params.beta) == (0.5, 0.0, 0.25)
        assert config.solver.defect_tol == 1e-8
        assert config.solver.max_iter == 100_000
        assert config.ground_state.method is GroundStateMethod.GRADIENT_FLOW
        assert config.ground_state.grid == SpectralGrid(2048, 64.0)
        assert config.sweep.eps == (0.4, 0.2)
        assert config.sweep.claims.slope_rel == 0.1
        assert config.sweep.claims.r_squared == 0.99
        assert isinstance(config.v2.modulator, ExpressionModulator)
        assert "params/a2" in config.defaults_applied


class TestValidation:

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="config file not found"):
            parse_config(tmp_path / "absent.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"grid": {"length": 10,,}}')
        with pytest.raises(ConfigError, match="malformed JSON .* line 1"):
            parse_config(path)

    def test_non_finite_numbers(self, tmp_path):
        path = tmp_path / "nan.json"
        path.write_text('{"grid": {"length": NaN, "n_points": 64}}')
        with pytest.raises(ConfigError, match="non-finite number NaN"):
            parse_config(path)

    def test_error_names_the_field(self, write_config):
        with pytest.raises(ConfigError, match="^grid/length: "):
            parse_config(write_config({**MINIMAL, "grid": {"length": -1.0, "n_points": 64}}))

    def test_unknown_key(self, write_config):
        with pytest.raises(ConfigError, match="Additional properties"):
            parse_config(write_config({**MINIMAL, "colour": "blue"}))

    def test_potentials_are_required(self, write_config):
        with pytest.raises(ConfigError, match="'potentials' is a required property"):
            parse_config(write_config({"seed": 1}))

    def test_grid_needs_both_fields(self, write_config):
        with pytest.raises(ConfigError, match="^grid: 'n_points' is a required property"):
            parse_config(write_config({**MINIMAL, "grid": {"length": 10.0}}))

    @pytest.mark.parametrize("section", ["grid", "ground_state/grid", "sweep/grid", "verify/symmetry_grid"])
    def test_n_points_must_be_a_power_of_two(self, write_config, section):
        document = json.loads(json.dumps(MINIMAL))
        target = document
        *parents, key = section.split("/")
        for parent in parents:
            target = target.setdefault(parent, {})
        target[key] = {"length": 32.0, "n_points": 1000}
        with pytest.raises(ConfigError, match=f"^{section}/n_points: must be a power of two, got 1000"):
            parse_config(write_config(document))

    def test_exponent_outside_integrable_range(self, write_config):
        document = json.loads(json.dumps(MINIMAL))
        document["potentials"]["v1"]["zeros"][0]["exponent"] = 3.5
        with pytest.raises(ConfigError, match=r"^potentials/v1/zeros/0/exponent: .*integrable only for p < 3"):
            parse_config(write_config(document))

    def test_duplicate_zero(self, write_config):
        document = json.loads(json.dumps(MINIMAL))
        document["potentials"]["v2"]["zeros"].append({"location": 0.0, "exponent": 0.75})
        with pytest.raises(ConfigError, match="potentials/v2/zeros/1/location: duplicate zero"):
            parse_config(write_config(document))

    def test_modulator_bound(self, write_config):
        document = json.loads(json.dumps(MINIMAL))
        document["potentials"]["v1"]["modulator"] = {"type": "expression", "expression": "1", "bound": 2.0}
        with pytest.raises(ConfigError, match="potentials/v1/modulator/bound"):
            parse_config(write_config(document))

    def test_unparsable_modulator(self, write_config):
        document = json.loads(json.dumps(MINIMAL))
        document["potentials"]["v1"]["modulator"] = {"type": "expression", "expression": "1 +* (", "bound": 0.5}
        with pytest.raises(ConfigError, match="^potentials/v1: cannot parse"):
            parse_config(write_config(document))

    def test_eps_ladder_must_decrease(self, write_config):
        with pytest.raises(ConfigError, match="sweep/eps"):
            parse_config(write_config({**MINIMAL, "sweep": {"eps": [0.2, 0.4]}}))

    def test_tail_range_order(self, write_config):
        with pytest.raises(ConfigError, match="verify/tail_range"):
            parse_config(write_config({**MINIMAL, "verify": {"tail_range": [-1.0, -2.0]}}))

    def test_config_errors_exit_with_two(self):
        assert ConfigError("x").exit_code == 2


class TestHashAndOutput:

    def test_hash_ignores_layout_and_key_order(self, tmp_path):
        compact = tmp_path / "a.json"
        compact.write_text(json.dumps(MINIMAL, separators=(",", ":")))
        reordered = tmp_path / "b.json"
        reordered.write_text(json.dumps({"potentials": {"v2": MINIMAL["potentials"]["v2"], "v1": MINIMAL["potentials"]["v1"]}}, indent=4))
        assert parse_config(compact).config_hash == parse_config(reordered).config_hash

    def test_explicit_defaults_hash_like_implicit_ones(self, write_config):
        implicit = parse_config(write_config(MINIMAL, "implicit.json"))
        explicit = parse_config(write_config({**MINIMAL, "seed": 0, "output": {"formats": ["json", "csv", "dat"]}}, "explicit.json"))
        assert implicit.config_hash == explicit.config_hash

    def test_changed_value_changes_hash(self, write_config):
        first = parse_config(write_config(MINIMAL, "one.json"))
        second = parse_config(write_config({**MINIMAL, "seed": 1}, "two.json"))
        assert first.config_hash != second.config_hash
        assert len(first.config_hash) == 64

    def test_output_dir_precedence(self, write_config, monkeypatch, tmp_path):
        path = write_config({**MINIMAL, "output": {"directory": "from-config"}})
        assert parse_config(path).output_dir == "from-config"
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "from-env"))
        assert parse_config(path).output_dir == str(tmp_path / "from-env")
        assert parse_config(path, "from-flag").output_dir == "from-flag"

    def test_output_dir_does_not_change_hash(self, write_config, monkeypatch):
        path = write_config(MINIMAL)
        before = parse_config(path).config_hash
        monkeypatch.setenv(OUTPUT_DIR_ENV, "elsewhere")
        assert parse_config(path).config_hash == before


class TestUtils:

    def test_canonical_json_sorts_keys(self):
        assert canonical_json({"b": 1, "a": [1.5, None]}) == '{"a":[1.5,null],"b":1}'

    def test_canonical_json_rejects_nan(self):
        with pytest.raises(ValueError):
            canonical_json({"a": float("nan")})

    def test_config_hash_is_sha256(self):
        assert config_hash({}) == "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a"

    def test_resolve_output_dir(self, monkeypatch):
        assert resolve_output_dir("cfg") == Path("cfg")
        monkeypatch.setenv(OUTPUT_DIR_ENV, "env")
        assert resolve_output_dir("cfg") == Path("env")
        assert resolve_output_dir("cfg", "flag") == Path("flag")

    @pytest.mark.parametrize("verbosity, level", [(-1, logging.WARNING), (0, logging.INFO), (1, logging.DEBUG), (5, logging.DEBUG)])
    def test_setup_logging_levels(self, verbosity, level):
        setup_logging(verbosity)
        logger = logging.getLogger("fracbec")
        assert logger.level == level
        assert len(logger.handlers) == 1
        assert logger.propagate is False
