# fracbec/infrastructure/config.py
import copy
import json
import logging
from dataclasses import asdict, fields
from importlib.resources import files
from pathlib import Path
from typing import Any

from jsonschema import Draft7Validator

from ..domain.errors import ConfigError, PotentialError
from ..domain.models import (
    ClaimTolerances,
    CoupledParams,
    GroundStateMethod,
    GroundStateSettings,
    ProbeSettings,
    RunConfig,
    SolverOptions,
    SweepSettings,
    VerifySettings,
)
from ..domain.potentials import MAX_EXPONENT, ConstantModulator, ExpressionModulator, PotentialSpec, Zero
from ..domain.spectral import SpectralGrid, is_power_of_two
from .utils import config_hash, resolve_output_dir

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv", "dat")


def load_schema() -> dict[str, Any]:
    schema_path = files("fracbec") / "assets" / "config_schema.json"
    return json.loads(schema_path.read_text(encoding="utf-8"))


def _grid_doc(grid: SpectralGrid) -> dict[str, Any]:
    return {"length": grid.length, "n_points": grid.n_points}


def _settings_doc(settings: Any, renames: dict[str, str]) -> dict[str, Any]:
    doc: dict[str, Any] = {}
    for f in fields(settings):
        value = getattr(settings, f.name)
        key = renames.get(f.name, f.name)
        if value is None:
            continue
        if isinstance(value, SpectralGrid):
            value = _grid_doc(value)
        elif isinstance(value, (SolverOptions, ClaimTolerances)):
            value = {k: v for k, v in asdict(value).items() if v is not None}
        elif isinstance(value, GroundStateMethod):
            value = value.value
        elif isinstance(value, tuple):
            value = list(value)
        doc[key] = value
    return doc


def default_document() -> dict[str, Any]:
    """Every optional field with its default, in config-file layout."""
    verify = _settings_doc(VerifySettings(), {"claims": "tolerances"})
    verify.pop("seed")
    return {
        "grid": {"length": 256.0, "n_points": 8192},
        "ground_state": _settings_doc(GroundStateSettings(), {}),
        "solver": _settings_doc(SolverOptions(), {}),
        "sweep": _settings_doc(SweepSettings(), {"claims": "tolerances"}),
        "probes": _settings_doc(ProbeSettings(), {}),
        "verify": verify,
        "output": {"directory": "results", "formats": list(FORMATS)},
        "seed": 0,
    }


POTENTIAL_DEFAULTS = {"zeros": [], "modulator": {"type": "constant", "value": 1.0}}
PARAMS_DEFAULTS = {"a1": 0.0, "a2": 0.0, "beta": 0.0}


def _merge(target: dict[str, Any], defaults: dict[str, Any], path: str, applied: list[str]) -> None:
    for key, value in defaults.items():
        field_path = f"{path}/{key}" if path else key
        if key not in target:
            target[key] = copy.deepcopy(value)
            applied.append(field_path)
            logger.info("default applied: %s = %s", field_path, json.dumps(value))
        elif isinstance(value, dict) and isinstance(target[key], dict) and key not in ("modulator",):
            _merge(target[key], value, field_path, applied)


def _reject_constant(name: str) -> float:
    raise ConfigError(f"non-finite number {name} is not allowed in the configuration")


def _read_document(path: Path) -> dict[str, Any]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON in {path}: {e.msg} at line {e.lineno}, column {e.colno}") from e


def _validate_schema(document: Any) -> None:
    validator = Draft7Validator(load_schema())
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        field_path = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise ConfigError(f"{field_path}: {first.message}")


def _grids(document: dict[str, Any]) -> list[tuple[str, dict[str, Any]]]:
    found = []
    if "grid" in document:
        found.append(("grid", document["grid"]))
    for section in ("ground_state", "sweep", "verify"):
        for key, value in document.get(section, {}).items():
            if key.endswith("grid"):
                found.append((f"{section}/{key}", value))
    return found


def _check_potential(name: str, potential: dict[str, Any]) -> None:
    seen: dict[float, int] = {}
    for i, zero in enumerate(potential.get("zeros", [])):
        p = zero["exponent"]
        if not 0 < p < MAX_EXPONENT:
            raise ConfigError(
                f"potentials/{name}/zeros/{i}/exponent: {p} outside (0, {MAX_EXPONENT}); "
                f"|x|^p Q^2 is integrable only for p < {MAX_EXPONENT}"
            )
        if zero["location"] in seen:
            raise ConfigError(
                f"potentials/{name}/zeros/{i}/location: duplicate zero at {zero['location']} "
                f"(already listed as zeros/{seen[zero['location']]})"
            )
        seen[zero["location"]] = i
    modulator = potential.get("modulator", {})
    if modulator.get("type") == "expression" and not 0 < modulator["bound"] <= 1:
        raise ConfigError(f"potentials/{name}/modulator/bound: must lie in (0, 1], got {modulator['bound']}")


def _semantic_checks(document: dict[str, Any]) -> None:
    for field_path, grid in _grids(document):
        n = grid.get("n_points")
        if n is not None and not is_power_of_two(n):
            raise ConfigError(f"{field_path}/n_points: must be a power of two, got {n}")
    for name in ("v1", "v2"):
        _check_potential(name, document["potentials"][name])
    eps = document.get("sweep", {}).get("eps")
    if eps and any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("sweep/eps: the ladder must be strictly decreasing")
    tail = document.get("verify", {}).get("tail_range")
    if tail and not tail[0] < tail[1]:
        raise ConfigError("verify/tail_range: lower bound must be below upper bound")


def _grid(doc: dict[str, Any]) -> SpectralGrid:
    return SpectralGrid(int(doc["n_points"]), float(doc["length"]))


def _potential(name: str, doc: dict[str, Any]) -> PotentialSpec:
    modulator_doc = doc["modulator"]
    try:
        if modulator_doc["type"] == "expression":
            modulator: ConstantModulator | ExpressionModulator = ExpressionModulator(
                modulator_doc["expression"], float(modulator_doc["bound"])
            )
        else:
            modulator = ConstantModulator(float(modulator_doc["value"]))
        zeros = tuple(Zero(float(z["location"]), float(z["exponent"])) for z in doc["zeros"])
        return PotentialSpec(zeros, modulator)
    except PotentialError as e:
        raise ConfigError(f"potentials/{name}: {e}") from e


def _build_settings(cls: type, doc: dict[str, Any]) -> Any:
    kwargs: dict[str, Any] = {}
    for key, value in doc.items():
        if key.endswith("grid"):
            kwargs[key] = _grid(value)
        elif key == "solver":
            kwargs[key] = SolverOptions.from_dict(value)
        elif key == "tolerances":
            kwargs["claims"] = ClaimTolerances(**value)
        elif key == "method":
            kwargs[key] = GroundStateMethod(value)
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def parse_config(path: str | Path, output_dir: str | None = None) -> RunConfig:
    """Reads, validates and default-fills a run configuration.

    Errors name the failing field path. Every filled default is logged.
    """
    document = _read_document(Path(path))
    _validate_schema(document)
    _semantic_checks(document)

    applied: list[str] = []
    _merge(document, default_document(), "", applied)
    for name in ("v1", "v2"):
        _merge(document["potentials"][name], POTENTIAL_DEFAULTS, f"potentials/{name}", applied)
    if "params" in document:
        _merge(document["params"], PARAMS_DEFAULTS, "params", applied)
    digest = config_hash(document)

    v1 = _potential("v1", document["potentials"]["v1"])
    v2 = _potential("v2", document["potentials"]["v2"])
    params = CoupledParams.from_dict(document["params"]) if "params" in document else None
    output = document["output"]
    return RunConfig(
        grid=_grid(document["grid"]),
        v1=v1,
        v2=v2,
        params=params,
        ground_state=_build_settings(GroundStateSettings, document["ground_state"]),
        solver=SolverOptions.from_dict(document["solver"]),
        sweep=_build_settings(SweepSettings, document["sweep"]),
        probes=_build_settings(ProbeSettings, document["probes"]),
        verify=_build_settings(VerifySettings, document["verify"]),
        output_dir=str(resolve_output_dir(output["directory"], output_dir)),
        formats=tuple(output["formats"]),
        seed=int(document["seed"]),
        config_hash=digest,
        defaults_applied=tuple(applied),
    )
