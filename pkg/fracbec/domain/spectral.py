# fracbec/domain/spectral.py
"""Uniform periodic grids, Fourier multipliers and quadrature.

Transforms use the unitary convention (``norm="ortho"``), so Parseval reads
``h * sum(|u_hat|^2) = h * sum(u^2)`` with ``h`` the grid spacing.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import fft, linalg, signal
from scipy.interpolate import CubicSpline

from .errors import (
    DegenerateNormalizationError,
    DomainCoverageError,
    GridError,
    InvalidFieldError,
    SpectralResidueError,
)

logger = logging.getLogger(__name__)

FRACTIONAL_POWERS = (0.5, 1.0)
IMAG_RESIDUE_BOUND = 1e-12
REFINEMENT = 16


def is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


def next_power_of_two(n: float) -> int:
    k = 2
    while k < n:
        k *= 2
    return k


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class SpectralGrid:
    """The periodic interval [-length/2, length/2) sampled at n_points nodes."""
    n_points: int
    length: float

    def __post_init__(self) -> None:
        if not is_power_of_two(int(self.n_points)) or int(self.n_points) != self.n_points:
            raise GridError(f"n_points must be a power of two, got {self.n_points}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise GridError(f"length must be positive and finite, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def half_length(self) -> float:
        return self.length / 2

    @cached_property
    def nodes(self) -> np.ndarray:
        return _frozen(-self.half_length + np.arange(self.n_points) * self.spacing)

    @cached_property
    def frequencies(self) -> np.ndarray:
        return _frozen(2 * np.pi * fft.fftfreq(self.n_points, d=self.spacing))

    @cached_property
    def abs_frequencies(self) -> np.ndarray:
        return _frozen(np.abs(self.frequencies))

    @cached_property
    def quarter_symbol(self) -> np.ndarray:
        return _frozen(np.sqrt(self.abs_frequencies))

    def symbol(self, power: float) -> np.ndarray:
        """|xi|^power for one of the supported fractional powers."""
        if power == 1.0:
            return self.abs_frequencies
        if power == 0.5:
            return self.quarter_symbol
        raise ValueError(f"unsupported fractional power {power}; expected one of {FRACTIONAL_POWERS}")

    def integrate(self, values: np.ndarray) -> float:
        return float(self.spacing * np.sum(values))

    def transform(self, values: np.ndarray) -> np.ndarray:
        return fft.fft(values, norm="ortho")

    def to_physical(self, coeffs: np.ndarray, reference: float = 0.0) -> np.ndarray:
        """Inverse transform, asserting the imaginary residue is roundoff.

        The bound is relative to the larger of the output norm and ``reference``
        (normally the norm of the input field), so near-null outputs of a
        constant input do not trip the check.
        """
        out = fft.ifft(coeffs, norm="ortho")
        scale = max(float(np.linalg.norm(out)), reference)
        if scale > 0:
            residue = float(np.linalg.norm(out.imag))
            if residue > IMAG_RESIDUE_BOUND * scale:
                raise SpectralResidueError(
                    f"imaginary residue {residue:.3e} exceeds {IMAG_RESIDUE_BOUND:g} of norm {scale:.3e}"
                )
        return np.ascontiguousarray(out.real)

    def apply_multiplier(self, values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
        """Real-valued application of an even Fourier multiplier."""
        coeffs = self.transform(values) * multiplier
        return self.to_physical(coeffs, reference=float(np.linalg.norm(values)))

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return Field(self, func(self.nodes))

    def doubled(self) -> "SpectralGrid":
        return SpectralGrid(self.n_points * 2, self.length * 2)


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a function on a SpectralGrid; values are read-only."""
    grid: SpectralGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise InvalidFieldError(f"expected {self.grid.n_points} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidFieldError("field contains non-finite values")
        object.__setattr__(self, "values", _frozen(values))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def reflected(self) -> "Field":
        """x -> -x on the periodic grid (node j maps to node N - j)."""
        return Field(self.grid, np.roll(self.values[::-1], 1))

    def argmax_node(self) -> float:
        return float(self.grid.nodes[int(np.argmax(self.values))])


def _require_finite(u: Field) -> None:
    # Field already validates; guards against arrays mutated through a base view
    if not np.all(np.isfinite(u.values)):
        raise InvalidFieldError("field contains non-finite values")


def fractional_apply(u: Field, power: float) -> Field:
    """|xi|^power applied to u: power 1 is sqrt(-Laplacian), power 1/2 its square root."""
    _require_finite(u)
    return u.with_values(u.grid.apply_multiplier(u.values, u.grid.symbol(power)))


def seminorm_h_half(u: Field) -> float:
    _require_finite(u)
    coeffs = u.grid.transform(u.values)
    return float(u.grid.spacing * np.sum(u.grid.abs_frequencies * np.abs(coeffs) ** 2))


def integrate_power(u: Field, p: int) -> float:
    if p not in (1, 2, 3, 4):
        raise ValueError(f"integrate_power supports p in 1..4, got {p}")
    return u.grid.integrate(u.values**p)


def l2_norm(u: Field) -> float:
    return float(np.sqrt(integrate_power(u, 2)))


def mass_normalize(u: Field) -> Field:
    mass = integrate_power(u, 2)
    if not mass > 0:
        raise DegenerateNormalizationError("cannot normalize a field with zero mass")
    return u.with_values(u.values / np.sqrt(mass))


def h_half_distance(u: Field, v: Field) -> tuple[float, float]:
    """L2 distance and full H^1/2 distance (mass plus seminorm) between two fields."""
    diff = u.with_values(u.values - v.values)
    l2 = integrate_power(diff, 2)
    return float(np.sqrt(l2)), float(np.sqrt(l2 + seminorm_h_half(diff)))


def translate(u: Field, offset: float) -> Field:
    """Fourier translation: returns x -> u(x - offset)."""
    grid = u.grid
    multiplier = np.exp(-1j * grid.frequencies * offset)
    nyquist = grid.n_points // 2
    multiplier[nyquist] = np.cos(grid.frequencies[nyquist] * offset)
    return u.with_values(grid.apply_multiplier(u.values, multiplier))


def spectral_rescale(u: Field, scale: float, center: float, target: SpectralGrid) -> Field:
    """w(x) = scale^(1/2) * u(scale * x + center) sampled on ``target``.

    u is refined by zero-padding its spectrum and the refined samples are
    interpolated with a periodic cubic spline. Target points whose source
    coordinate leaves the source domain read as zero.
    """
    if not (np.isfinite(scale) and scale > 0 and np.isfinite(center)):
        raise ValueError(f"invalid rescale parameters scale={scale}, center={center}")
    source = u.grid
    coords = scale * target.nodes + center
    inside = (coords >= -source.half_length) & (coords < source.half_length)
    if not inside.any():
        raise DomainCoverageError(
            f"target window [{coords[0]:.4g}, {coords[-1]:.4g}] lies outside the source domain "
            f"[{-source.half_length:.4g}, {source.half_length:.4g})"
        )

    fine = signal.resample(u.values, source.n_points * REFINEMENT)
    fine_nodes = -source.half_length + np.arange(fine.size) * (source.spacing / REFINEMENT)
    spline = CubicSpline(
        np.append(fine_nodes, source.half_length), np.append(fine, fine[0]), bc_type="periodic"
    )

    values = np.zeros(target.n_points)
    values[inside] = np.sqrt(scale) * spline(coords[inside])

    truncated = int(np.count_nonzero(~inside))
    if truncated:
        edge = max(abs(u.values[0]), abs(u.values[-1]))
        peak = float(np.max(np.abs(u.values)))
        if peak > 0 and edge > 1e-6 * peak:
            logger.warning(
                "Rescale truncated %d target points outside the source domain (edge/peak = %.2e)",
                truncated, edge / peak,
            )
        else:
            logger.debug("Rescale read %d target points outside the source domain as zero", truncated)
    return Field(target, values)


def dense_multiplier_matrix(grid: SpectralGrid, power: float) -> np.ndarray:
    """Explicit F^H diag(|xi|^power) F with F the unitary DFT matrix."""
    dft = linalg.dft(grid.n_points, scale="sqrtn")
    matrix = dft.conj().T @ (grid.symbol(power)[:, None] * dft)
    return np.ascontiguousarray(matrix.real)
