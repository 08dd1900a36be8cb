# fracbec/domain/models.py
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .errors import InvalidFieldError
from .fitting import FitReport
from .potentials import FlatnessReport, PotentialSpec
from .spectral import Field, SpectralGrid, integrate_power


class Regime(Enum):
    EXISTENCE = "existence"
    NONEXISTENCE = "nonexistence"
    UNDETERMINED = "undetermined"


class GroundStateMethod(Enum):
    PETVIASHVILI = "petviashvili"
    GRADIENT_FLOW = "normalized-gradient-flow"


@dataclass(frozen=True)
class CoupledParams:
    """Intraspecies strengths a1, a2 and the interspecies strength beta."""
    a1: float
    a2: float
    beta: float

    @property
    def d1(self) -> float:
        return self.a1 + self.beta

    @property
    def d2(self) -> float:
        return self.a2 + self.beta

    @property
    def radius(self) -> float:
        return max(abs(self.a1), abs(self.a2), abs(self.beta))

    def regime(self, a_star: float) -> Regime:
        a1, a2, b = self.a1, self.a2, self.beta
        if 0 < a1 < a_star and 0 < a2 < a_star and 0 < b < math.sqrt((a_star - a1) * (a_star - a2)):
            return Regime.EXISTENCE
        if a1 > a_star or a2 > a_star or b > (a_star - a1) / 2 + (a_star - a2) / 2:
            return Regime.NONEXISTENCE
        return Regime.UNDETERMINED

    @classmethod
    def from_dict(cls, data: dict) -> "CoupledParams":
        return cls(a1=float(data["a1"]), a2=float(data["a2"]), beta=float(data["beta"]))


@dataclass(frozen=True, eq=False)
class CoupledState:
    u1: Field
    u2: Field

    def __post_init__(self) -> None:
        if self.u1.grid != self.u2.grid:
            raise InvalidFieldError("both components must live on the same grid")

    @property
    def grid(self) -> SpectralGrid:
        return self.u1.grid

    @property
    def components(self) -> tuple[Field, Field]:
        return (self.u1, self.u2)

    def masses(self) -> tuple[float, float]:
        return (integrate_power(self.u1, 2), integrate_power(self.u2, 2))

    def reflected(self) -> "CoupledState":
        return CoupledState(self.u1.reflected(), self.u2.reflected())


@dataclass(frozen=True)
class SolverOptions:
    energy_tol: float = 1e-10
    defect_tol: float = 1e-6
    max_iter: int = 100_000
    step: float = 1.0
    min_step: float = 1e-12
    max_step: float = 1e3
    step_growth: float = 1.1
    shift_factor: float = 1.0
    stall_window: int = 20
    init_center: float | None = None
    init_width: float = 1.0

    @classmethod
    def from_dict(cls, data: dict) -> "SolverOptions":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass(frozen=True, eq=False)
class MinimizerResult:
    """Converged state of the normalized gradient flow, one or two components."""
    fields: tuple[Field, ...]
    energy: float
    multipliers: tuple[float, ...]
    l4_norms: tuple[float, ...]
    seminorms: tuple[float, ...]
    max_points: tuple[float, ...]
    max_ties: tuple[tuple[float, ...], ...]
    residual: float
    iterations: int
    converged: bool
    shift: float
    step: float
    energy_trace: tuple[float, ...] = ()

    @property
    def state(self) -> CoupledState:
        if len(self.fields) != 2:
            raise InvalidFieldError("single-component result has no coupled state")
        return CoupledState(self.fields[0], self.fields[1])

    @property
    def mu1(self) -> float:
        return self.multipliers[0]

    @property
    def mu2(self) -> float:
        return self.multipliers[1]

    def to_dict(self) -> dict[str, Any]:
        return {
            "energy": self.energy,
            "multipliers": list(self.multipliers),
            "l4_norms": list(self.l4_norms),
            "seminorms": list(self.seminorms),
            "max_points": list(self.max_points),
            "max_ties": [list(t) for t in self.max_ties],
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "shift": self.shift,
            "final_step": self.step,
            "trace": {
                "accepted_steps": len(self.energy_trace),
                "initial_energy": self.energy_trace[0] if self.energy_trace else None,
                "final_energy": self.energy_trace[-1] if self.energy_trace else None,
            },
        }


@dataclass(frozen=True)
class TailFit:
    """Log-log slope of a tail; ``polynomial`` is False when it decays faster than any power."""
    slope: float
    polynomial: bool
    samples: int

    def to_dict(self) -> dict[str, Any]:
        slope = self.slope if math.isfinite(self.slope) else None
        return {"slope": slope, "polynomial": self.polynomial, "samples": self.samples}


@dataclass(frozen=True)
class MomentEstimate:
    """Moment of |x|^p Q^2 with the change observed when the window is halved."""
    value: float
    truncation: float


@dataclass(frozen=True, eq=False)
class GroundStateResult:
    q: Field
    a_star: float
    q4: float
    seminorm: float
    method: GroundStateMethod
    residual: float
    iterations: int
    moments: dict[float, float] = field(default_factory=dict)
    trace: tuple[float, ...] = ()

    def pohozaev_defects(self) -> tuple[float, float]:
        """Relative gaps seminorm/a* - 1 and q4/(2 a*) - 1."""
        return (self.seminorm / self.a_star - 1.0, self.q4 / (2 * self.a_star) - 1.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method.value,
            "a_star": self.a_star,
            "q4": self.q4,
            "seminorm": self.seminorm,
            "residual": self.residual,
            "iterations": self.iterations,
            "moments": {repr(p): m for p, m in sorted(self.moments.items())},
            "pohozaev_defects": list(self.pohozaev_defects()),
            "grid": {"length": self.q.grid.length, "n_points": self.q.grid.n_points},
        }


@dataclass(frozen=True, eq=False)
class SweepConfig:
    """A near-critical ladder: a1 = a2 = a* - beta - eps^(p0+1) at each eps."""
    beta: float
    ladder: tuple[float, ...]
    v1: PotentialSpec
    v2: PotentialSpec
    grid: SpectralGrid
    profile_grid: SpectralGrid
    solver: SolverOptions = field(default_factory=SolverOptions)
    warm_start: bool = True
    fit_window: int = 5
    resolution_nodes: float = 40.0


@dataclass(frozen=True)
class SweepRecord:
    eps: float
    delta: float
    a1: float
    a2: float
    energy: float = math.nan
    l4: tuple[float, float] = (math.nan, math.nan)
    mu: tuple[float, float] = (math.nan, math.nan)
    seminorms: tuple[float, float] = (math.nan, math.nan)
    max_points: tuple[float, float] = (math.nan, math.nan)
    max_offset_ratio: tuple[float, float] = (math.nan, math.nan)
    profile_distance: tuple[float, float] = (math.nan, math.nan)
    profile_distance_h_half: tuple[float, float] = (math.nan, math.nan)
    trial_upper: float = math.nan
    lower_bound: float = math.nan
    coupling_defect: float = math.nan
    iterations: int = 0
    converged: bool = False
    error: str | None = None

    CSV_COLUMNS = (
        "eps", "energy", "l4_1", "l4_2", "mu_1", "mu_2", "max_1", "max_2", "ratio_1", "ratio_2",
        "dist_l2_1", "dist_l2_2", "trial_upper", "delta", "dist_h_half_1", "dist_h_half_2",
        "seminorm_1", "seminorm_2", "lower_bound", "coupling_defect", "iterations", "converged",
    )

    def to_row(self) -> list[Any]:
        return [
            self.eps, self.energy, *self.l4, *self.mu, *self.max_points, *self.max_offset_ratio,
            *self.profile_distance, self.trial_upper, self.delta, *self.profile_distance_h_half,
            *self.seminorms, self.lower_bound, self.coupling_defect, self.iterations, int(self.converged),
        ]

    @property
    def ok(self) -> bool:
        return self.converged and self.error is None


@dataclass(frozen=True)
class ConcentrationReport:
    site: float
    ratios: tuple[tuple[float, float], ...]
    final_ratio_small: bool
    ratio_decreasing: bool
    components_coincide: bool


@dataclass(frozen=True, eq=False)
class SweepResult:
    config: SweepConfig
    a_star: float
    flatness: FlatnessReport
    lambda_predicted: float
    records: tuple[SweepRecord, ...]
    fits: dict[str, FitReport]
    concentration: ConcentrationReport | None = None

    @property
    def converged_records(self) -> list[SweepRecord]:
        return [r for r in self.records if r.ok]


@dataclass(frozen=True)
class UniquenessProbeResult:
    distance: float
    converged: int
    failed: int
    radius: float
    ball_radius: float
    sites: tuple[float, ...] = ()


@dataclass(frozen=True)
class SymmetryProbeResult:
    asymmetries: tuple[float, ...]
    sites: tuple[float, ...]

    @property
    def max_asymmetry(self) -> float:
        return max(self.asymmetries) if self.asymmetries else math.nan

    @property
    def min_asymmetry(self) -> float:
        return min(self.asymmetries) if self.asymmetries else math.nan


@dataclass(frozen=True)
class Check:
    """One pass/fail line of the verification suite."""
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        value = self.value if np.isfinite(self.value) else None
        return {"name": self.name, "passed": self.passed, "value": value, "threshold": self.threshold, "detail": self.detail}


@dataclass(frozen=True)
class ClaimTolerances:
    slope_rel: float = 0.05
    r_squared: float = 0.99
    l4_ratio_rel: float = 0.10
    multiplier_rel: float = 0.10
    sandwich: float = 1e-6
    profile_final: float = 5e-2
    concentration_ratio: float = 0.1


@dataclass(frozen=True)
class VerifySettings:
    ground_grid: SpectralGrid = SpectralGrid(32768, 1024.0)
    grid: SpectralGrid = SpectralGrid(8192, 256.0)
    dense_grid: SpectralGrid = SpectralGrid(1024, 32.0)
    oracle_grid: SpectralGrid = SpectralGrid(128, 16.0)
    doubling_grid: SpectralGrid = SpectralGrid(8192, 256.0)
    ground_tol: float = 1e-10
    ground_max_iter: int = 2000
    gnf_step: float = 2.0
    gnf_max_iter: int = 20000
    solver: SolverOptions = field(default_factory=SolverOptions)
    seed: int = 0
    n_random_fields: int = 100
    n_starts: int = 8
    small_ball_fraction: float = 0.05
    pohozaev: float = 1e-5
    gn_random: float = 1e-6
    gn_at_q: float = 1e-5
    a_star_methods: float = 1e-4
    grid_doubling: float = 1e-4
    tail_range: tuple[float, float] = (-2.3, -1.7)
    eigen_sum: float = 1e-6
    dense_eigen: float = 1e-3
    decoupling: float = 2e-6
    uniqueness: float = 1e-6
    oracle_matrix: float = 1e-8
    oracle_energy: float = 1e-6
    # near-critical part, run with --full
    sweep_grid: SpectralGrid = SpectralGrid(131072, 16.0)
    profile_grid: SpectralGrid = SpectralGrid(2048, 32.0)
    ladder_points: int = 8
    ladder_ratio: float = 0.5
    ladder_start: float = 0.2
    beta_fraction: float = 0.5
    fit_window: int = 5
    resolution_nodes: float = 40.0
    symmetry_grid: SpectralGrid = SpectralGrid(16384, 16.0)
    symmetry_eps: float = 0.05
    symmetric_far: float = 0.1
    symmetric_near: float = 0.8
    single_fractions: tuple[float, ...] = (0.5, 0.7, 0.9, 0.95, 0.99)
    claims: ClaimTolerances = field(default_factory=ClaimTolerances)


@dataclass(frozen=True)
class GroundStateSettings:
    method: GroundStateMethod = GroundStateMethod.PETVIASHVILI
    tol: float = 1e-10
    max_iter: int = 2000
    step: float = 2.0
    grid: SpectralGrid | None = None
    moments: tuple[float, ...] = ()


@dataclass(frozen=True)
class SweepSettings:
    beta: float | None = None
    beta_fraction: float = 0.5
    n_points: int = 8
    ratio: float = 0.5
    start_fraction: float = 0.2
    eps: tuple[float, ...] | None = None
    warm_start: bool = True
    resolution_nodes: float = 40.0
    fit_window: int = 5
    grid: SpectralGrid | None = None
    profile_grid: SpectralGrid = SpectralGrid(2048, 32.0)
    claims: ClaimTolerances = field(default_factory=ClaimTolerances)


@dataclass(frozen=True)
class ProbeSettings:
    n_starts: int = 8
    seed: int = 0
    small_ball_fraction: float = 0.05
    symmetry_eps: float | None = None


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration with every default filled in."""
    grid: SpectralGrid
    v1: PotentialSpec
    v2: PotentialSpec
    params: CoupledParams | None = None
    ground_state: GroundStateSettings = field(default_factory=GroundStateSettings)
    solver: SolverOptions = field(default_factory=SolverOptions)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    probes: ProbeSettings = field(default_factory=ProbeSettings)
    verify: VerifySettings = field(default_factory=VerifySettings)
    output_dir: str = "results"
    formats: tuple[str, ...] = ("json", "csv", "dat")
    seed: int = 0
    config_hash: str = ""
    defaults_applied: tuple[str, ...] = ()
