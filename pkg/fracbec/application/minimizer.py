# fracbec/application/minimizer.py
"""Mass-constrained minimization of the coupled and single-component energies."""
import logging
from collections import deque
from collections.abc import Sequence
from dataclasses import replace

import numpy as np
from scipy import linalg, optimize

from ..domain.errors import (
    ConstraintError,
    DomainCoverageError,
    NoCommonZeroError,
    NonConvergenceError,
    StagnationError,
)
from ..domain.models import CoupledParams, CoupledState, MinimizerResult, Regime, SolverOptions
from ..domain.potentials import PotentialSpec, flatness_analysis
from ..domain.spectral import (
    Field,
    SpectralGrid,
    dense_multiplier_matrix,
    integrate_power,
    l2_norm,
    mass_normalize,
    seminorm_h_half,
    spectral_rescale,
)

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-8
ROUNDOFF_ALLOWANCE = 1e-14
STALL_RATIO = 1 - 1e-3
STABLE_STEP = 1.9
TIE_FRACTION = 1 - 1e-9
MAX_REPORTED_TIES = 32
DENSE_LIMIT = 2048


# --- Energies ---

def _check_mass(u: Field, label: str) -> None:
    mass = integrate_power(u, 2)
    if abs(mass - 1.0) > MASS_TOLERANCE:
        raise ConstraintError(f"{label} has mass {mass:.12g}, expected 1")


def _linear_part(u: Field, potential: np.ndarray) -> float:
    return seminorm_h_half(u) + u.grid.integrate(potential * u.values**2)


def single_energy(u: Field, d: float, v: PotentialSpec) -> float:
    """E_d(u) = seminorm + int V u^2 - (d/2) int u^4 on the unit sphere."""
    _check_mass(u, "u")
    return _linear_part(u, v.sample(u.grid)) - 0.5 * d * integrate_power(u, 4)


def energy(state: CoupledState, params: CoupledParams, v1: PotentialSpec, v2: PotentialSpec) -> float:
    u1, u2 = state.components
    _check_mass(u1, "u1")
    _check_mass(u2, "u2")
    grid = state.grid
    return (
        _linear_part(u1, v1.sample(grid)) - 0.5 * params.a1 * integrate_power(u1, 4)
        + _linear_part(u2, v2.sample(grid)) - 0.5 * params.a2 * integrate_power(u2, 4)
        - params.beta * grid.integrate(u1.values**2 * u2.values**2)
    )


def energy_rewritten(state: CoupledState, params: CoupledParams, v1: PotentialSpec, v2: PotentialSpec) -> float:
    """sum_i E_{d_i}(u_i) + (beta/2) int (u1^2 - u2^2)^2 with d_i = a_i + beta."""
    u1, u2 = state.components
    coupling = state.grid.integrate((u1.values**2 - u2.values**2) ** 2)
    return single_energy(u1, params.d1, v1) + single_energy(u2, params.d2, v2) + 0.5 * params.beta * coupling


def lagrange_multipliers(
    state: CoupledState, params: CoupledParams, v1: PotentialSpec, v2: PotentialSpec
) -> tuple[float, float]:
    u1, u2 = state.components
    grid = state.grid
    overlap = grid.integrate(u1.values**2 * u2.values**2)
    mu1 = _linear_part(u1, v1.sample(grid)) - params.a1 * integrate_power(u1, 4) - params.beta * overlap
    mu2 = _linear_part(u2, v2.sample(grid)) - params.a2 * integrate_power(u2, 4) - params.beta * overlap
    return mu1, mu2


def el_defect(
    state: CoupledState,
    params: CoupledParams,
    v1: PotentialSpec,
    v2: PotentialSpec,
    mu: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Sup-norm defects of sqrt(-Laplacian) u_i + V_i u_i = mu_i u_i + a_i u_i^3 + beta u_j^2 u_i."""
    mu = mu if mu is not None else lagrange_multipliers(state, params, v1, v2)
    grid = state.grid
    u1, u2 = state.u1.values, state.u2.values
    r1 = grid.apply_multiplier(u1, grid.abs_frequencies) + (v1.sample(grid) - mu[0]) * u1 - params.a1 * u1**3 - params.beta * u2**2 * u1
    r2 = grid.apply_multiplier(u2, grid.abs_frequencies) + (v2.sample(grid) - mu[1]) * u2 - params.a2 * u2**3 - params.beta * u1**2 * u2
    return float(np.max(np.abs(r1))), float(np.max(np.abs(r2)))


# --- Normalized gradient flow ---

def _max_points(grid: SpectralGrid, values: np.ndarray) -> tuple[float, tuple[float, ...]]:
    # argmax returns the leftmost node attaining the maximum
    peak = int(np.argmax(values))
    ties = np.flatnonzero(values >= TIE_FRACTION * values[peak])
    if ties.size > MAX_REPORTED_TIES:
        logger.debug("%d nodes tie for the maximum; reporting the first %d", ties.size, MAX_REPORTED_TIES)
    return float(grid.nodes[peak]), tuple(float(grid.nodes[j]) for j in ties[:MAX_REPORTED_TIES])


class NormalizedGradientFlow:
    """Preconditioned normalized gradient flow for K components on unit-mass spheres.

    The energy is sum_i [seminorm(u_i) + int V_i u_i^2] - 1/2 sum_ij G_ij int u_i^2 u_j^2
    and H_i = |xi| + V_i - sum_j G_ij u_j^2 is its frozen-density Hamiltonian.
    Each step moves u_i against P_i^{-1} (H_i u_i - l_i u_i), where
    P_i^{-1} = W_i (|xi| + s_i)^{-1} W_i with W_i = (s_i / (s_i + V_i))^{1/2} and
    s_i = shift_factor * max(1, |mu_i|); l_i keeps the direction tangent to the sphere.
    The new iterate is |u_i - tau d_i| renormalized, so a fixed point solves
    H_i u_i = mu_i u_i with no step-size bias. Near a minimizer the linearized step
    operator has spectrum in [0, 1 / min(1, shift_factor)], so tau stays at or below
    1.9 min(1, shift_factor); within that cap it halves on energy increase and grows
    after success.
    """

    def __init__(self, grid: SpectralGrid, potentials: Sequence[np.ndarray], coupling: np.ndarray, opts: SolverOptions):
        self.grid = grid
        self.potentials = [np.asarray(v, dtype=float) for v in potentials]
        self.coupling = np.atleast_2d(np.asarray(coupling, dtype=float))
        if self.coupling.shape != (len(self.potentials), len(self.potentials)):
            raise ValueError(f"coupling matrix shape {self.coupling.shape} does not match {len(self.potentials)} components")
        self.opts = opts

    def _densities(self, fields: list[np.ndarray]) -> list[np.ndarray]:
        squares = [u**2 for u in fields]
        return [sum(self.coupling[i, j] * squares[j] for j in range(len(fields))) for i in range(len(fields))]

    def energy(self, fields: list[np.ndarray]) -> float:
        grid = self.grid
        total = 0.0
        for u, v, density in zip(fields, self.potentials, self._densities(fields)):
            coeffs = grid.transform(u)
            total += grid.spacing * float(np.sum(grid.abs_frequencies * np.abs(coeffs) ** 2))
            total += grid.integrate((v - 0.5 * density) * u**2)
        return total

    def hamiltonians(self, fields: list[np.ndarray]) -> list[np.ndarray]:
        grid = self.grid
        return [
            grid.apply_multiplier(u, grid.abs_frequencies) + (v - density) * u
            for u, v, density in zip(fields, self.potentials, self._densities(fields))
        ]

    def multipliers(self, fields: list[np.ndarray], hamiltonians: list[np.ndarray] | None = None) -> list[float]:
        hamiltonians = hamiltonians if hamiltonians is not None else self.hamiltonians(fields)
        return [self.grid.integrate(u * hu) for u, hu in zip(fields, hamiltonians)]

    def defects(
        self, fields: list[np.ndarray], mus: list[float], hamiltonians: list[np.ndarray] | None = None
    ) -> list[float]:
        hamiltonians = hamiltonians if hamiltonians is not None else self.hamiltonians(fields)
        return [float(np.max(np.abs(hu - mu * u))) for u, hu, mu in zip(fields, hamiltonians, mus)]

    def directions(self, fields: list[np.ndarray], hamiltonians: list[np.ndarray], mus: list[float]) -> list[np.ndarray]:
        grid = self.grid
        directions = []
        for u, hu, v, mu in zip(fields, hamiltonians, self.potentials, mus):
            s = self.opts.shift_factor * max(1.0, abs(mu))
            weight = np.sqrt(s / (s + v))
            resolvent = 1.0 / (grid.abs_frequencies + s)
            pg = weight * grid.apply_multiplier(weight * hu, resolvent)
            pu = weight * grid.apply_multiplier(weight * u, resolvent)
            tangent = grid.integrate(u * pg) / grid.integrate(u * pu)
            directions.append(pg - tangent * pu)
        return directions

    def step(self, fields: list[np.ndarray], directions: list[np.ndarray], tau: float) -> list[np.ndarray]:
        updated = []
        for u, d in zip(fields, directions):
            w = np.abs(u - tau * d)
            updated.append(w / np.sqrt(self.grid.integrate(w**2)))
        return updated

    def _result(
        self, fields: list[np.ndarray], energy: float, iterations: int, tau: float, trace: list[float], converged: bool
    ) -> MinimizerResult:
        mus = self.multipliers(fields)
        residual = max(self.defects(fields, mus))
        wrapped = [Field(self.grid, u) for u in fields]
        maxima = [_max_points(self.grid, u) for u in fields]
        return MinimizerResult(
            fields=tuple(wrapped),
            energy=energy,
            multipliers=tuple(mus),
            l4_norms=tuple(integrate_power(u, 4) for u in wrapped),
            seminorms=tuple(seminorm_h_half(u) for u in wrapped),
            max_points=tuple(m for m, _ in maxima),
            max_ties=tuple(t for _, t in maxima),
            residual=residual,
            iterations=iterations,
            converged=converged,
            shift=self.opts.shift_factor * max(1.0, *(abs(mu) for mu in mus)),
            step=tau,
            energy_trace=tuple(trace),
        )

    def run(self, initial: Sequence[Field]) -> MinimizerResult:
        opts = self.opts
        fields = [np.abs(mass_normalize(u).values) for u in initial]
        cap = min(opts.max_step, STABLE_STEP * min(1.0, opts.shift_factor))
        tau = min(opts.step, cap)
        energy = self.energy(fields)
        hamiltonians = self.hamiltonians(fields)
        mus = self.multipliers(fields, hamiltonians)
        residual = max(self.defects(fields, mus, hamiltonians))
        directions = self.directions(fields, hamiltonians, mus)
        trace = [energy]
        recent = deque([residual], maxlen=opts.stall_window + 1)
        streak = 0

        for iteration in range(1, opts.max_iter + 1):
            candidate = self.step(fields, directions, tau)
            candidate_energy = self.energy(candidate)
            if candidate_energy > energy + ROUNDOFF_ALLOWANCE * abs(energy):
                tau *= 0.5
                logger.debug("Step rejected at iteration %d (dE = %.3e); tau -> %.3e", iteration, candidate_energy - energy, tau)
                if tau < opts.min_step:
                    if residual < opts.defect_tol:
                        return self._result(fields, energy, iteration, tau, trace, converged=True)
                    raise StagnationError(
                        f"step size fell below {opts.min_step:g} without decreasing the energy "
                        f"(energy {energy:.12g}, defect {residual:.3e})",
                        residual=residual,
                        iterations=iteration,
                    )
                continue

            change = abs(candidate_energy - energy) / max(abs(candidate_energy), np.finfo(float).tiny)
            fields, energy = candidate, candidate_energy
            hamiltonians = self.hamiltonians(fields)
            mus = self.multipliers(fields, hamiltonians)
            residual = max(self.defects(fields, mus, hamiltonians))
            directions = self.directions(fields, hamiltonians, mus)
            trace.append(energy)
            recent.append(residual)
            tau = min(tau * opts.step_growth, cap)
            streak = streak + 1 if change < opts.energy_tol else 0
            if streak >= opts.stall_window:
                if residual < opts.defect_tol:
                    logger.info("Gradient flow converged in %d iterations: energy %.12g, defect %.2e", iteration, energy, residual)
                    return self._result(fields, energy, iteration, tau, trace, converged=True)
                if len(recent) == recent.maxlen and residual > STALL_RATIO * recent[0]:
                    raise StagnationError(
                        f"energy stalled for {streak} steps while the defect stayed at {residual:.3e} "
                        f"(energy {energy:.12g})",
                        residual=residual,
                        iterations=iteration,
                    )
            if iteration % 1000 == 0:
                logger.debug("Iteration %d: energy %.12g, defect %.2e, tau %.3e, streak %d", iteration, energy, residual, tau, streak)

        raise NonConvergenceError(
            f"gradient flow did not converge in {opts.max_iter} iterations (energy {energy:.12g}, defect {residual:.3e})",
            residual=residual,
            iterations=opts.max_iter,
        )


# --- Initial data ---

def gaussian_bump(grid: SpectralGrid, center: float, width: float = 1.0) -> Field:
    return mass_normalize(grid.sample(lambda x: np.exp(-(((x - center) / width) ** 2))))


def default_center(v1: PotentialSpec, v2: PotentialSpec | None = None) -> float:
    """First flattest common zero, else the first zero of v1, else the origin."""
    if v2 is not None:
        try:
            flattest = flatness_analysis(v1, v2).flattest
            if flattest:
                return flattest[0]
        except NoCommonZeroError:
            pass
    return v1.zeros[0].location if v1.zeros else 0.0


def default_initial_state(grid: SpectralGrid, v1: PotentialSpec, v2: PotentialSpec, opts: SolverOptions) -> CoupledState:
    center = opts.init_center if opts.init_center is not None else default_center(v1, v2)
    bump = gaussian_bump(grid, center, opts.init_width)
    return CoupledState(bump, bump)


# --- Solvers ---

def minimize(
    params: CoupledParams,
    v1: PotentialSpec,
    v2: PotentialSpec,
    grid: SpectralGrid,
    init: CoupledState | None = None,
    opts: SolverOptions | None = None,
    a_star: float | None = None,
) -> MinimizerResult:
    opts = opts or SolverOptions()
    if a_star is not None:
        regime = params.regime(a_star)
        if regime is not Regime.EXISTENCE:
            logger.warning("Parameters %s lie in the %s regime (a* = %.10g); solving anyway", params, regime.value, a_star)
    init = init or default_initial_state(grid, v1, v2, opts)
    coupling = np.array([[params.a1, params.beta], [params.beta, params.a2]])
    flow = NormalizedGradientFlow(grid, [v1.sample(grid), v2.sample(grid)], coupling, opts)
    return flow.run(init.components)


def minimize_single(
    d: float, v: PotentialSpec, grid: SpectralGrid, init: Field | None = None, opts: SolverOptions | None = None
) -> MinimizerResult:
    opts = opts or SolverOptions()
    if init is None:
        center = opts.init_center if opts.init_center is not None else default_center(v)
        init = gaussian_bump(grid, center, opts.init_width)
    flow = NormalizedGradientFlow(grid, [v.sample(grid)], np.array([[d]]), opts)
    return flow.run([init])


def first_eigenpair(
    v: PotentialSpec, grid: SpectralGrid, tol: float = 1e-8, opts: SolverOptions | None = None
) -> tuple[float, Field]:
    """Smallest eigenvalue of sqrt(-Laplacian) + V with its positive unit-mass eigenfunction."""
    opts = opts or SolverOptions()
    opts = replace(opts, defect_tol=tol)
    result = minimize_single(0.0, v, grid, opts=opts)
    return result.multipliers[0], result.fields[0]


# --- Trial functions ---

def _smooth_step(y: np.ndarray) -> np.ndarray:
    def f(t: np.ndarray) -> np.ndarray:
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    y = np.clip(y, 0.0, 1.0)
    return f(y) / (f(y) + f(1.0 - y))


def cutoff(t: np.ndarray) -> np.ndarray:
    """Smooth eta with eta = 1 on |t| <= 1 and eta = 0 on |t| >= 2."""
    return _smooth_step(2.0 - np.abs(t))


def trial_function(x0: float, tau: float, r: float, grid: SpectralGrid, q: Field) -> Field:
    """A (tau^1/2 / ||Q||) eta((x - x0)/r) Q(tau (x - x0)), normalized to unit mass."""
    if x0 - 2 * r < -grid.half_length or x0 + 2 * r >= grid.half_length:
        raise DomainCoverageError(f"trial support [{x0 - 2 * r:.4g}, {x0 + 2 * r:.4g}] leaves the grid")
    profile = spectral_rescale(q, tau, -tau * x0, grid)
    shaped = profile.values * cutoff((grid.nodes - x0) / r) / l2_norm(q)
    return mass_normalize(Field(grid, shaped))


def trial_energy(
    x0: float,
    tau: float,
    r: float,
    params: CoupledParams,
    v1: PotentialSpec,
    v2: PotentialSpec,
    grid: SpectralGrid,
    q: Field,
) -> float:
    phi = trial_function(x0, tau, r, grid, q)
    return energy(CoupledState(phi, phi), params, v1, v2)


def single_trial_energy(
    x0: float, tau: float, r: float, d: float, v: PotentialSpec, grid: SpectralGrid, q: Field
) -> float:
    return single_energy(trial_function(x0, tau, r, grid, q), d, v)


def cutoff_radius(x0: float, potentials: Sequence[PotentialSpec], grid: SpectralGrid, cap: float = 1.0) -> float:
    """Largest r <= cap keeping the support of eta((x - x0)/r) clear of other zeros and the domain edge."""
    gaps = [abs(z.location - x0) for v in potentials for z in v.zeros if abs(z.location - x0) > 1e-12]
    gaps.append(grid.half_length - abs(x0))
    return min([cap] + [0.45 * g for g in gaps])


# --- Dense oracles ---

def _require_dense(grid: SpectralGrid) -> None:
    if grid.n_points > DENSE_LIMIT:
        raise ValueError(f"dense oracles are limited to n_points <= {DENSE_LIMIT}, got {grid.n_points}")


def dense_eigen_oracle(v: PotentialSpec, grid: SpectralGrid) -> tuple[float, Field]:
    """Smallest eigenpair of the assembled matrix of sqrt(-Laplacian) + V."""
    _require_dense(grid)
    matrix = dense_multiplier_matrix(grid, 1.0) + np.diag(v.sample(grid))
    values, vectors = linalg.eigh(matrix, subset_by_index=[0, 0])
    psi = vectors[:, 0]
    psi = psi if psi.sum() >= 0 else -psi
    return float(values[0]), mass_normalize(Field(grid, psi))


def dense_single_energy_oracle(d: float, v: PotentialSpec, grid: SpectralGrid, init: Field | None = None) -> float:
    """L-BFGS minimum of the explicitly assembled discrete single-component energy."""
    _require_dense(grid)
    h = grid.spacing
    matrix = dense_multiplier_matrix(grid, 1.0)
    potential = v.sample(grid)

    def objective(w: np.ndarray) -> tuple[float, np.ndarray]:
        norm = np.sqrt(h * w @ w)
        u = w / norm
        mu = matrix @ u
        value = h * (u @ mu + potential @ u**2 - 0.5 * d * np.sum(u**4))
        grad_u = 2 * h * (mu + potential * u - d * u**3)
        return float(value), (grad_u - h * u * (u @ grad_u)) / norm

    start = init if init is not None else gaussian_bump(grid, default_center(v))
    solution = optimize.minimize(
        objective, start.values, jac=True, method="L-BFGS-B",
        options={"maxiter": 50000, "ftol": 1e-15, "gtol": 1e-11},
    )
    if not solution.success:
        logger.warning("Dense energy oracle stopped early: %s", solution.message)
    return float(solution.fun)
