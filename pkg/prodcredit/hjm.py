"""Jump-diffusion forward-rate surfaces on the triangle 0 <= t <= T <= T*.

The forward rate follows::

    df(t, T) = alpha(t, T) dt + sigma(t, T) . dW_t + int delta(t, x, T) (mu - nu)(dt, dx)

with a finite-activity jump measure F(t, dx) = lambda(t) * law(dx). With
A = -int_t^T alpha, S = -int_t^T sigma and D = -int_t^T delta, the drift
condition is::

    A(t, T) + 1/2 |S(t, T)|^2 + int (e^D - 1 - D) F(t, dx) = 0

and is checked pointwise on the grid. Every field is an (n+1, n+1) array
indexed [t, T]; entries below the diagonal lie off the triangle and are
NaN in reported surfaces and zero in coefficient fields.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import RegularGridInterpolator

from prodcredit.errors import EXIT_DRIFT_VIOLATED, EXIT_INFEASIBLE_GROWTH, EXIT_NUMERICAL, ProdCreditError
from prodcredit.sovereign import GrowthSurface
from prodcredit.stochastics import (
    PATH_BLOCK,
    JumpSpec,
    McEstimate,
    SampleLaw,
    TimeGrid,
    block_generators,
    map_blocks,
    summarize,
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
QUADRATURE_NODES = 64
# multiple of the gap between the h and h/2 residuals that bounds the O(h^2) trapezoid error
GRID_ERROR_FACTOR = 2.0
KERNEL_SERIES_CUTOFF = 1e-5
FEASIBILITY_TOLERANCE = 1e-12

FieldFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
JumpFieldFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
GrowthFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


class CoefficientError(ProdCreditError):
    """Raised when a coefficient field is not finite at some grid point."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, t: float | None = None, maturity: float | None = None):
        self.t = t
        self.maturity = maturity
        super().__init__(message)


class JumpTermError(ProdCreditError):
    """Raised when e^D - 1 - D evaluates negative, which only bad arithmetic can cause."""

    exit_code = EXIT_NUMERICAL


class IntegrabilityError(ProdCreditError):
    """Raised when the accumulated jump integral diverges."""

    exit_code = EXIT_DRIFT_VIOLATED

    def __init__(self, message: str, maturity: float | None = None):
        self.maturity = maturity
        super().__init__(message)


class DriftConditionError(ProdCreditError):
    exit_code = EXIT_DRIFT_VIOLATED

    def __init__(self, report: "DriftResidualReport"):
        self.report = report
        t, maturity = report.argmax
        super().__init__(
            f"drift condition violated for {report.name!r}: max |R| = {report.max_abs:.6g} at "
            f"(t={t:g}, T={maturity:g}) exceeds {report.tolerance:g} + quadrature bound {report.quadrature_bound:.3g}"
        )


class InfeasibleDriftError(ProdCreditError):
    """Raised when a growth-model drift would need a negative squared volatility."""

    exit_code = EXIT_INFEASIBLE_GROWTH

    def __init__(self, region: List[Tuple[float, float]], worst: float):
        self.region = region
        self.worst = worst
        t_values = [p[0] for p in region]
        T_values = [p[1] for p in region]
        super().__init__(
            f"growth drift is incompatible with the drift condition at {len(region)} grid points "
            f"(t in [{min(t_values):g}, {max(t_values):g}], T in [{min(T_values):g}, {max(T_values):g}], "
            f"worst 1/2|S|^2 = {worst:.6g})"
        )


def triangle_mask(grid: TimeGrid) -> np.ndarray:
    n = grid.n_steps + 1
    return np.triu(np.ones((n, n), dtype=bool))


def _mesh(grid: TimeGrid) -> Tuple[np.ndarray, np.ndarray]:
    points = grid.points
    return points[:, None], points[None, :]


@dataclass(frozen=True, eq=False)
class ForwardSurface:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        n = self.grid.n_steps + 1
        if values.shape != (n, n):
            raise ValueError(f"surface has shape {values.shape}, grid needs {(n, n)}")
        mask = triangle_mask(self.grid)
        bad = np.argwhere(mask & ~np.isfinite(values))
        if bad.size:
            i, j = bad[0]
            raise CoefficientError(
                f"forward rate is not finite at t={self.grid.points[i]:g}, T={self.grid.points[j]:g}",
                t=float(self.grid.points[i]),
                maturity=float(self.grid.points[j]),
            )
        values[~mask] = np.nan
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_growth(cls, growth: GrowthSurface, grid: TimeGrid) -> "ForwardSurface":
        """Populate a surface from a sovereign growth-rate grid."""
        points = grid.points
        rows = [np.interp(points, growth.s_axis, growth.row(t)) for t in points]
        return cls(grid, np.array(rows))

    @classmethod
    def flat(cls, grid: TimeGrid, rate: float) -> "ForwardSurface":
        n = grid.n_steps + 1
        return cls(grid, np.full((n, n), float(rate)))

    @property
    def initial_curve(self) -> np.ndarray:
        return self.values[0]

    @property
    def short_rate(self) -> np.ndarray:
        return np.diagonal(self.values).copy()


@dataclass(frozen=True, eq=False)
class HJMCoefficients:
    """alpha(t, T), sigma(t, T) with leading factor axis, and optional jumps delta(t, x, T)."""

    name: str
    alpha: FieldFn
    sigma: FieldFn
    n_factors: int = 1
    delta: Optional[JumpFieldFn] = None
    jumps: Optional[JumpSpec] = None
    alpha_shift: float = 0.0

    @property
    def has_jumps(self) -> bool:
        return self.delta is not None and self.jumps is not None

    def shifted(self, epsilon: float) -> "HJMCoefficients":
        return replace(self, alpha_shift=self.alpha_shift + epsilon)

    def drift_field(self, grid: TimeGrid) -> np.ndarray:
        t, T = _mesh(grid)
        mask = triangle_mask(grid)
        field = np.broadcast_to(np.asarray(self.alpha(t, T), dtype=float), mask.shape) + self.alpha_shift
        return _on_triangle(field, mask, grid, f"alpha of {self.name!r}")

    def volatility_field(self, grid: TimeGrid) -> np.ndarray:
        t, T = _mesh(grid)
        mask = triangle_mask(grid)
        shape = (self.n_factors,) + mask.shape
        field = np.broadcast_to(np.asarray(self.sigma(t, T), dtype=float), shape)
        return _on_triangle(field, mask, grid, f"sigma of {self.name!r}")

    def jump_field(self, grid: TimeGrid, marks: np.ndarray) -> np.ndarray:
        """delta(t, x, T) for every mark x; shape (K, n+1, n+1)."""
        t, T = _mesh(grid)
        mask = triangle_mask(grid)
        x = np.asarray(marks, dtype=float)[:, None, None]
        shape = (x.shape[0],) + mask.shape
        field = np.broadcast_to(np.asarray(self.delta(t[None], x, T[None]), dtype=float), shape)
        return _on_triangle(field, mask, grid, f"delta of {self.name!r}")

    def intensity_field(self, grid: TimeGrid) -> np.ndarray:
        if not self.has_jumps:
            return np.zeros(grid.n_steps + 1)
        return np.array([self.jumps.intensity_at(float(t)) for t in grid.points])


def _on_triangle(field: np.ndarray, mask: np.ndarray, grid: TimeGrid, what: str) -> np.ndarray:
    field = np.where(mask, field, 0.0)
    bad = np.argwhere(~np.isfinite(field))
    if bad.size:
        i, j = bad[0][-2:]
        t, T = float(grid.points[i]), float(grid.points[j])
        raise CoefficientError(f"{what} is not finite at t={t:g}, T={T:g}", t=t, maturity=T)
    return field


def zero_coefficients(name: str = "zero") -> HJMCoefficients:
    return HJMCoefficients(name=name, alpha=lambda t, T: 0.0, sigma=lambda t, T: 0.0)


def ho_lee(sigma0: float, name: str = "ho_lee") -> HJMCoefficients:
    """Constant volatility with the drift alpha = sigma0^2 (T - t) that satisfies the condition."""
    return HJMCoefficients(
        name=name,
        alpha=lambda t, T: sigma0**2 * (T - t),
        sigma=lambda t, T: sigma0,
    )


def ho_lee_jump(sigma0: float, intensity: float, jump_mean: float, jump_std: float, name: str = "ho_lee_jump") -> HJMCoefficients:
    """Ho-Lee plus normal jumps of size x loading every maturity equally.

    With delta(t, x, T) = x, D = -x(T - t) and the normal moment generating
    function gives the drift that zeroes the condition in closed form.
    """
    m, s = jump_mean, jump_std

    def alpha(t, T):
        tau = T - t
        return sigma0**2 * tau + intensity * (m - (m - s**2 * tau) * np.exp(-m * tau + 0.5 * s**2 * tau**2))

    return HJMCoefficients(
        name=name,
        alpha=alpha,
        sigma=lambda t, T: sigma0,
        delta=lambda t, x, T: x,
        jumps=JumpSpec(intensity=intensity, law=SampleLaw.normal(m, s), compensated=True),
    )


def custom_coefficients(frame: pd.DataFrame, name: str = "custom") -> HJMCoefficients:
    """Single-factor coefficients from a (t, T, alpha, sigma) table, bilinearly interpolated."""
    missing = {"t", "T", "alpha", "sigma"} - set(frame.columns)
    if missing:
        raise CoefficientError(f"{name}: missing coefficient columns {sorted(missing)}")
    interpolators = {}
    for column in ("alpha", "sigma"):
        table = frame.pivot(index="t", columns="T", values=column).sort_index().sort_index(axis=1)
        axes = (table.index.to_numpy(dtype=float), table.columns.to_numpy(dtype=float))
        values = np.nan_to_num(table.to_numpy(dtype=float), nan=0.0)
        interpolators[column] = RegularGridInterpolator(axes, values, bounds_error=False, fill_value=None)

    def lookup(column):
        def field(t, T):
            t, T = np.broadcast_arrays(t, T)
            return interpolators[column](np.stack([t, T], axis=-1))

        return field

    sigma = lookup("sigma")
    return HJMCoefficients(name=name, alpha=lookup("alpha"), sigma=lambda t, T: sigma(t, T)[None])


def custom_coefficients_from_csv(path: str, name: str = "custom") -> HJMCoefficients:
    return custom_coefficients(pd.read_csv(path, comment="#"), name=name)


def jump_kernel(d) -> np.ndarray:
    """e^D - 1 - D, with a series near zero; never negative."""
    d = np.asarray(d, dtype=float)
    small = np.abs(d) < KERNEL_SERIES_CUTOFF
    with np.errstate(over="ignore", invalid="ignore"):
        direct = np.expm1(d) - d
    series = d * d * (0.5 + d * (1.0 / 6.0 + d / 24.0))
    out = np.where(small, series, direct)
    if np.any(out < 0):
        raise JumpTermError(f"jump kernel went negative (min {float(np.nanmin(out)):.3g})")
    return out


def maturity_integral(field: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """-int_t^T field(t, u) du for every (t, T) on the triangle; NaN below the diagonal."""
    cum = cumulative_trapezoid(field, dx=grid.step, axis=-1, initial=0.0)
    diag = np.diagonal(cum, axis1=-2, axis2=-1)[..., :, None]
    out = -(cum - diag)
    return np.where(triangle_mask(grid), out, np.nan)


@dataclass(frozen=True, eq=False)
class IntegralTransforms:
    grid: TimeGrid
    A: np.ndarray
    S: np.ndarray
    marks: np.ndarray
    D: np.ndarray

    @property
    def half_s_squared(self) -> np.ndarray:
        return 0.5 * np.sum(self.S**2, axis=0)


def transforms(coeffs: HJMCoefficients, grid: TimeGrid, marks: Optional[Sequence[float]] = None) -> IntegralTransforms:
    """A, S and D (at ``marks``, default the jump law's quadrature nodes) by trapezoid in T."""
    A = maturity_integral(coeffs.drift_field(grid), grid)
    S = maturity_integral(coeffs.volatility_field(grid), grid)
    if coeffs.has_jumps:
        if marks is None:
            marks, _ = coeffs.jumps.law.nodes(QUADRATURE_NODES)
        marks = np.asarray(marks, dtype=float)
        D = maturity_integral(coeffs.jump_field(grid, marks), grid)
    else:
        marks = np.zeros(0)
        n = grid.n_steps + 1
        D = np.zeros((0, n, n))
    return IntegralTransforms(grid=grid, A=A, S=S, marks=marks, D=D)


@dataclass(frozen=True, eq=False)
class DriftResidualReport:
    name: str
    grid: TimeGrid
    residual: np.ndarray
    max_abs: float
    argmax: Tuple[float, float]
    quadrature_bound: float
    tolerance: float
    jump_integral: np.ndarray
    integrability: Dict[str, float]
    grid_error: float = 0.0

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.tolerance + self.quadrature_bound

    @property
    def h(self) -> float:
        return self.grid.step

    def rows(self) -> pd.DataFrame:
        t, T = np.meshgrid(self.grid.points, self.grid.points, indexing="ij")
        mask = triangle_mask(self.grid)
        return pd.DataFrame({"t": t[mask], "T": T[mask], "residual": self.residual[mask]})

    def summary(self) -> Dict[str, float]:
        return {
            "max_abs": self.max_abs,
            "h": self.h,
            "quadrature_bound": self.quadrature_bound,
            "grid_error": self.grid_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            **self.integrability,
        }


def jump_term(coeffs: HJMCoefficients, grid: TimeGrid) -> Tuple[np.ndarray, float]:
    """lambda(t) * E[e^D - 1 - D] on the grid, with its quadrature bound."""
    n = grid.n_steps + 1
    if not coeffs.has_jumps:
        return np.zeros((n, n)), 0.0

    def kernel_at(marks):
        D = maturity_integral(coeffs.jump_field(grid, marks), grid)
        return jump_kernel(np.where(np.isnan(D), 0.0, D))

    with np.errstate(over="ignore", invalid="ignore"):
        expected, bound = coeffs.jumps.law.expect(kernel_at, n_nodes=QUADRATURE_NODES)
    intensity = coeffs.intensity_field(grid)
    return intensity[:, None] * expected, float(np.max(intensity)) * bound


def _residual_field(coeffs: HJMCoefficients, grid: TimeGrid) -> Tuple[np.ndarray, np.ndarray, float]:
    tr = transforms(coeffs, grid, marks=np.zeros(0))
    jump, bound = jump_term(coeffs, grid)
    with np.errstate(over="ignore", invalid="ignore"):
        residual = tr.A + tr.half_s_squared + jump
    return residual, jump, bound


def _grid_error(coeffs: HJMCoefficients, grid: TimeGrid, residual: np.ndarray) -> float:
    """Richardson estimate of the trapezoid error in ``residual`` from a grid with half the step."""
    fine = TimeGrid(grid.t_start, grid.t_end, 2 * grid.n_steps)
    refined, _, _ = _residual_field(coeffs, fine)
    shared = refined[::2, ::2]
    usable = triangle_mask(grid) & np.isfinite(shared) & np.isfinite(residual)
    if not usable.any():
        return 0.0
    return GRID_ERROR_FACTOR * float(np.max(np.abs(residual - shared)[usable]))


def drift_residual(
    coeffs: HJMCoefficients,
    grid: TimeGrid,
    tolerance: float = DEFAULT_TOLERANCE,
) -> DriftResidualReport:
    """Pointwise drift condition.

    ``quadrature_bound`` is the jump-law quadrature error plus a Richardson
    estimate of the trapezoid error in A and D.
    """
    full, jump, mark_bound = _residual_field(coeffs, grid)
    mask = triangle_mask(grid)
    points = grid.points

    with np.errstate(over="ignore", invalid="ignore"):
        first_condition = np.array([trapezoid(jump[: j + 1, j], dx=grid.step) for j in range(points.size)])
    diverged = np.flatnonzero(~np.isfinite(first_condition))
    if diverged.size:
        T = float(points[diverged[0]])
        raise IntegrabilityError(f"jump integral of {coeffs.name!r} diverges up to T={T:g}", maturity=T)

    residual = np.where(mask, full, np.nan)
    bad = np.argwhere(mask & ~np.isfinite(residual))
    if bad.size:
        i, j = bad[0]
        raise IntegrabilityError(
            f"drift residual of {coeffs.name!r} is not finite at t={points[i]:g}, T={points[j]:g}",
            maturity=float(points[j]),
        )
    magnitude = np.where(mask, np.abs(residual), -1.0)
    i, j = np.unravel_index(int(np.argmax(magnitude)), magnitude.shape)
    grid_error = _grid_error(coeffs, grid, residual)
    report = DriftResidualReport(
        name=coeffs.name,
        grid=grid,
        residual=residual,
        max_abs=float(magnitude[i, j]),
        argmax=(float(points[i]), float(points[j])),
        quadrature_bound=mark_bound + grid_error,
        tolerance=tolerance,
        jump_integral=first_condition,
        integrability=_integrability(coeffs, grid, mask),
        grid_error=grid_error,
    )
    logger.debug("Drift residual for %s: max |R| = %.3g at %s", coeffs.name, report.max_abs, report.argmax)
    return report


def _integrability(coeffs: HJMCoefficients, grid: TimeGrid, mask: np.ndarray) -> Dict[str, float]:
    h = grid.step

    def area(field):
        return float(trapezoid(trapezoid(np.where(mask, field, 0.0), dx=h, axis=1), dx=h))

    out = {
        "int_abs_alpha": area(np.abs(coeffs.drift_field(grid))),
        "int_sigma_sq": area(np.sum(coeffs.volatility_field(grid) ** 2, axis=0)),
        "int_jump_sq": 0.0,
    }
    if coeffs.has_jumps:
        second_moment, _ = coeffs.jumps.law.expect(lambda x: coeffs.jump_field(grid, x) ** 2, n_nodes=QUADRATURE_NODES)
        out["int_jump_sq"] = area(coeffs.intensity_field(grid)[:, None] * second_moment)
    for key, value in out.items():
        if not math.isfinite(value):
            raise IntegrabilityError(f"{key} of {coeffs.name!r} is not finite")
    return out


def check_drift_condition(report: DriftResidualReport) -> DriftResidualReport:
    if not report.passed:
        raise DriftConditionError(report)
    return report


@dataclass(frozen=True, eq=False)
class SurfaceEnsemble:
    """Simulated surfaces at observation steps plus the full short-rate paths."""

    grid: TimeGrid
    observe_steps: Tuple[int, ...]
    surfaces: np.ndarray
    short_rate: np.ndarray
    seed: int

    @property
    def n_paths(self) -> int:
        return self.surfaces.shape[0]

    @property
    def observe_times(self) -> np.ndarray:
        return self.grid.points[list(self.observe_steps)]

    def mean_surface(self) -> pd.DataFrame:
        rows = []
        points = self.grid.points
        for k, step in enumerate(self.observe_steps):
            for j in range(step, points.size):
                column = self.surfaces[:, k, j]
                est = summarize(column)
                rows.append({"t": points[step], "T": points[j], "mean": est.mean, "std_error": est.std_error})
        return pd.DataFrame(rows, columns=["t", "T", "mean", "std_error"])


def _evolve_block(
    coeffs: HJMCoefficients,
    grid: TimeGrid,
    initial: np.ndarray,
    alpha: np.ndarray,
    sigma: np.ndarray,
    compensator: np.ndarray,
    observe: Tuple[int, ...],
    seed: int,
    block: int,
) -> np.ndarray:
    brownian_rng, jump_rng = block_generators(seed, block)
    n = grid.n_steps + 1
    h = grid.step
    times = grid.points
    f = np.tile(initial, (PATH_BLOCK, 1))
    surfaces = np.full((PATH_BLOCK, len(observe), n), np.nan)
    short_rate = np.empty((PATH_BLOCK, n))
    dw = brownian_rng.standard_normal((grid.n_steps, coeffs.n_factors, PATH_BLOCK)) * math.sqrt(h)
    slot = {step: k for k, step in enumerate(observe)}

    for k in range(n):
        short_rate[:, k] = f[:, k]
        if k in slot:
            surfaces[:, slot[k], k:] = f[:, k:]
        if k == grid.n_steps:
            break
        live = slice(k + 1, n)
        f[:, live] += alpha[k, live] * h + np.einsum("dj,dp->pj", sigma[:, k, live], dw[k])
        if coeffs.has_jumps:
            counts = jump_rng.poisson(coeffs.jumps.intensity_at(float(times[k])) * h, size=PATH_BLOCK)
            total = int(counts.sum())
            if total:
                marks = coeffs.jumps.law.sample(jump_rng, total)
                owner = np.repeat(np.arange(PATH_BLOCK), counts)
                loads = np.broadcast_to(
                    np.asarray(coeffs.delta(float(times[k]), marks[:, None], times[None, live]), dtype=float),
                    (total, n - k - 1),
                )
                np.add.at(f[:, live], owner, loads)
            f[:, live] -= compensator[k, live]
        if not np.all(np.isfinite(f[:, live])):
            raise CoefficientError(f"forward surface of {coeffs.name!r} diverged at t={times[k + 1]:g}", t=float(times[k + 1]))
    return np.concatenate([surfaces.reshape(PATH_BLOCK, -1), short_rate], axis=1)


def evolve_surface(
    coeffs: HJMCoefficients,
    grid: TimeGrid,
    initial: Union[ForwardSurface, Sequence[float]],
    n_paths: int,
    seed: int,
    observe_times: Optional[Sequence[float]] = None,
    threads: int = 1,
) -> SurfaceEnsemble:
    """Euler paths of the whole surface; all maturities share each step's noise.

    ``initial`` is a time-0 forward curve on the grid or a ``ForwardSurface``
    on the same grid, whose first row is used.
    """
    n = grid.n_steps + 1
    if isinstance(initial, ForwardSurface):
        if not np.array_equal(initial.grid.points, grid.points):
            raise CoefficientError("initial surface lies on a different grid")
        initial = initial.initial_curve
    initial = np.asarray(initial, dtype=float)
    if initial.shape != (n,) or not np.all(np.isfinite(initial)):
        raise CoefficientError(f"initial curve must hold {n} finite values")
    if int(n_paths) != n_paths or n_paths < 1:
        raise ValueError(f"n_paths must be a positive integer, got {n_paths}")
    if observe_times is None:
        observe = tuple(range(n))
    else:
        observe = tuple(sorted({grid.index_of(float(t)) for t in observe_times}))

    alpha = coeffs.drift_field(grid)
    sigma = coeffs.volatility_field(grid)
    compensator = np.zeros((n, n))
    if coeffs.has_jumps:
        mean_load, _ = coeffs.jumps.law.expect(lambda x: coeffs.jump_field(grid, x), n_nodes=QUADRATURE_NODES)
        compensator = coeffs.intensity_field(grid)[:, None] * mean_load * grid.step

    work = partial(_evolve_block, coeffs, grid, initial, alpha, sigma, compensator, observe, int(seed))
    packed = map_blocks(work, int(n_paths), threads)
    surfaces = packed[:, : len(observe) * n].reshape(-1, len(observe), n)
    short_rate = packed[:, len(observe) * n:]
    logger.debug("Evolved %d surfaces of %s over %d steps", n_paths, coeffs.name, grid.n_steps)
    return SurfaceEnsemble(grid=grid, observe_steps=observe, surfaces=surfaces, short_rate=short_rate, seed=int(seed))


def discounted_bond_prices(ensemble: SurfaceEnsemble, maturity: float) -> List[Tuple[float, McEstimate]]:
    """exp(-int_0^t r) * exp(-int_t^T f(t, u) du) at each observation t <= T."""
    grid = ensemble.grid
    h = grid.step
    m = grid.index_of(maturity)
    discount = np.exp(-np.concatenate([np.zeros((ensemble.n_paths, 1)), np.cumsum(ensemble.short_rate[:, :-1], axis=1) * h], axis=1))
    out = []
    for k, step in enumerate(ensemble.observe_steps):
        if step > m:
            continue
        curve = ensemble.surfaces[:, k, step: m + 1]
        bond = np.exp(-trapezoid(curve, dx=h, axis=1)) if m > step else np.ones(ensemble.n_paths)
        out.append((float(grid.points[step]), summarize(discount[:, step] * bond)))
    return out


def implied_diffusion_from_growth(
    alpha_p: np.ndarray,
    grid: TimeGrid,
    jump_part: Optional[np.ndarray] = None,
) -> np.ndarray:
    """1/2 |S(t, T)|^2 = -int_t^T alpha_p(t, s) ds - jump term, NaN below the diagonal."""
    alpha_p = np.asarray(alpha_p, dtype=float)
    mask = triangle_mask(grid)
    bad = np.argwhere(mask & ~np.isfinite(alpha_p))
    if bad.size:
        i, j = bad[0]
        raise CoefficientError(
            f"growth drift is not finite at t={grid.points[i]:g}, T={grid.points[j]:g}",
            t=float(grid.points[i]),
            maturity=float(grid.points[j]),
        )
    half_sq = maturity_integral(np.where(mask, alpha_p, 0.0), grid)
    if jump_part is not None:
        half_sq = half_sq - np.asarray(jump_part, dtype=float)
    negative = mask & (half_sq < -FEASIBILITY_TOLERANCE)
    if np.any(negative):
        idx = np.argwhere(negative)
        region = [(float(grid.points[i]), float(grid.points[j])) for i, j in idx]
        raise InfeasibleDriftError(region, float(np.nanmin(half_sq)))
    return np.where(mask, np.maximum(half_sq, 0.0), np.nan)


def growth_model_step(g: GrowthFn, alpha_p: np.ndarray, t: float, maturities: np.ndarray, h: float) -> np.ndarray:
    """One explicit Euler step alpha_p <- alpha_p + g(t, T, alpha_p) * h."""
    alpha_p = np.asarray(alpha_p, dtype=float)
    maturities = np.asarray(maturities, dtype=float)
    increment = np.broadcast_to(np.asarray(g(t, maturities, alpha_p), dtype=float), alpha_p.shape)
    bad = np.flatnonzero(~np.isfinite(increment))
    if bad.size:
        T = float(maturities[bad[0]])
        raise CoefficientError(f"growth increment is not finite at t={t:g}, T={T:g}", t=t, maturity=T)
    return alpha_p + increment * h


def run_growth_model(g: GrowthFn, alpha0: Sequence[float], grid: TimeGrid) -> np.ndarray:
    """alpha_p(t, T) on the grid from an initial curve alpha_p(0, .); zero below the diagonal."""
    points = grid.points
    row = np.asarray(alpha0, dtype=float)
    if row.shape != points.shape:
        raise ValueError(f"initial growth drift must hold {points.size} values")
    field = np.zeros((points.size, points.size))
    field[0] = row
    for k in range(grid.n_steps):
        row = growth_model_step(g, row, float(points[k]), points, grid.step)
        field[k + 1] = row
    return np.where(triangle_mask(grid), field, 0.0)


def growth_family(name: str, **params) -> GrowthFn:
    if name == "zero":
        return lambda t, T, a: np.zeros_like(a)
    if name == "constant":
        c = float(params["rate"])
        return lambda t, T, a: np.full_like(a, c)
    if name == "mean_reversion":
        k = float(params["speed"])
        level = float(params.get("level", 0.0))
        return lambda t, T, a: -k * (a - level)
    raise ValueError(f"unknown growth family {name!r}")


def coefficient_family(name: str, **params) -> HJMCoefficients:
    """Build coefficients from a family name as used in scenario files."""
    label = params.pop("label", name)
    shift = float(params.pop("alpha_shift", 0.0))
    if name == "zero":
        coeffs = zero_coefficients(label)
    elif name == "ho_lee":
        coeffs = ho_lee(float(params["sigma0"]), label)
    elif name == "ho_lee_jump":
        coeffs = ho_lee_jump(
            float(params["sigma0"]),
            float(params["intensity"]),
            float(params["jump_mean"]),
            float(params["jump_std"]),
            label,
        )
    elif name == "custom":
        coeffs = custom_coefficients_from_csv(params["path"], label)
    else:
        raise ValueError(f"unknown coefficient family {name!r}")
    return coeffs.shifted(shift) if shift else coeffs
