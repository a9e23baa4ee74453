"""Seeded path simulation and Monte Carlo estimation.

Paths are generated in fixed-size blocks. Block ``b`` draws its Brownian
increments and its jumps from two Philox streams keyed by
``SeedSequence(seed, spawn_key=(b,))``, so path ``i`` depends only on
``(seed, i)``: growing ``n_paths`` never perturbs earlier paths, and blocks can
be generated on any number of threads with identical results.
"""
from __future__ import annotations

import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from prodcredit.errors import EXIT_NUMERICAL, ProdCreditError

logger = logging.getLogger(__name__)

PATH_BLOCK = 1024
GRID_TOLERANCE = 1e-9
TAIL_PROBABILITY = 1e-12
MAX_SEED = 2**64

Coefficient = Callable[[float, np.ndarray], np.ndarray]
Intensity = Union[float, Callable[[float], float]]


class SimulationError(ProdCreditError):
    """Raised when a process coefficient or path value is not finite."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, t: float | None = None, x: float | None = None):
        self.t = t
        self.x = x
        super().__init__(message)


class EstimationError(ProdCreditError):
    """Raised when a Monte Carlo estimate cannot be formed."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, path_index: int | None = None):
        self.path_index = path_index
        super().__init__(message)


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise ValueError("time grid bounds must be finite")
        if self.t_end <= self.t_start:
            raise ValueError(f"time grid end {self.t_end} must exceed start {self.t_start}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"time grid needs a positive integer step count, got {self.n_steps}")

    @classmethod
    def covering(cls, t_end: float, steps_per_year: int, t_start: float = 0.0) -> "TimeGrid":
        """Smallest grid from ``t_start`` to ``t_end`` with at least ``steps_per_year`` resolution."""
        n_steps = max(1, math.ceil((t_end - t_start) * steps_per_year - GRID_TOLERANCE))
        return cls(t_start, t_end, n_steps)

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_steps + 1)

    def index_of(self, t: float) -> int:
        k = int(round((t - self.t_start) / self.step))
        if k < 0 or k > self.n_steps or abs(self.points[k] - t) > GRID_TOLERANCE * max(1.0, abs(t)):
            raise ValueError(f"t={t!r} is not a point of the grid [{self.t_start}, {self.t_end}] / {self.n_steps}")
        return k


@dataclass(frozen=True, eq=False)
class SampleLaw:
    """A one-dimensional law that can be sampled and integrated against.

    Exactly one of ``value`` (point mass), ``dist`` (frozen ``scipy.stats``
    distribution) or ``samples`` (empirical law) is set.
    """

    name: str
    value: Optional[float] = None
    dist: Optional[object] = None
    samples: Optional[np.ndarray] = None

    @classmethod
    def point(cls, value: float) -> "SampleLaw":
        return cls(name="point", value=float(value))

    @classmethod
    def normal(cls, mean: float, std: float) -> "SampleLaw":
        if std <= 0:
            raise ValueError("normal law needs a positive standard deviation")
        return cls(name="normal", dist=stats.norm(loc=mean, scale=std))

    @classmethod
    def uniform(cls, low: float, high: float) -> "SampleLaw":
        if high <= low:
            raise ValueError(f"uniform law needs low < high, got [{low}, {high}]")
        return cls(name="uniform", dist=stats.uniform(loc=low, scale=high - low))

    @classmethod
    def exponential(cls, mean: float) -> "SampleLaw":
        if mean <= 0:
            raise ValueError("exponential law needs a positive mean")
        return cls(name="exponential", dist=stats.expon(scale=mean))

    @classmethod
    def empirical(cls, samples: Sequence[float]) -> "SampleLaw":
        arr = np.asarray(samples, dtype=float).ravel()
        if arr.size == 0 or not np.all(np.isfinite(arr)):
            raise ValueError("empirical law needs a non-empty set of finite samples")
        arr.setflags(write=False)
        return cls(name="empirical", samples=arr)

    @property
    def closed_form(self) -> bool:
        return self.samples is None

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.value is not None:
            return np.full(size, self.value)
        if self.dist is not None:
            return np.asarray(self.dist.rvs(size=size, random_state=rng), dtype=float).reshape(size)
        return rng.choice(self.samples, size=size)

    def mean(self) -> float:
        if self.value is not None:
            return self.value
        if self.dist is not None:
            return float(self.dist.mean())
        return float(self.samples.mean())

    def support(self) -> Tuple[float, float]:
        """Integration interval; unbounded supports are cut at the 1e-12 quantiles."""
        if self.value is not None:
            return self.value, self.value
        if self.dist is None:
            return float(self.samples.min()), float(self.samples.max())
        low, high = (float(v) for v in self.dist.support())
        if not math.isfinite(low):
            low = float(self.dist.ppf(TAIL_PROBABILITY))
        if not math.isfinite(high):
            high = float(self.dist.ppf(1.0 - TAIL_PROBABILITY))
        return low, high

    def nodes(self, n_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes and probability weights for this law."""
        if self.value is not None:
            return np.array([self.value]), np.array([1.0])
        if self.dist is None:
            return self.samples, np.full(self.samples.size, 1.0 / self.samples.size)
        low, high = self.support()
        x, w = leggauss(n_nodes)
        half = 0.5 * (high - low)
        nodes = half * x + 0.5 * (high + low)
        return nodes, half * w * self.dist.pdf(nodes)

    def expect(self, fn: Callable[[np.ndarray], np.ndarray], n_nodes: int = 64) -> Tuple[np.ndarray, float]:
        """E[fn(X)] and an absolute error bound.

        ``fn`` maps a 1-d array of K marks to an array with leading axis K.
        Closed forms use Gauss-Legendre: the bound is the change from n to 2n
        nodes plus the truncated tail mass times the integrand scale.
        Empirical laws report three standard errors.
        """
        if self.value is not None:
            return np.asarray(fn(np.array([self.value])), dtype=float)[0], 0.0
        if self.dist is None:
            values = np.asarray(fn(self.samples), dtype=float)
            mean = values.mean(axis=0)
            if values.shape[0] < 2:
                return mean, 0.0
            se = values.std(axis=0, ddof=1) / math.sqrt(values.shape[0])
            return mean, float(3.0 * np.max(se))
        coarse_x, coarse_w = self.nodes(n_nodes)
        fine_x, fine_w = self.nodes(2 * n_nodes)
        coarse_vals = np.asarray(fn(coarse_x), dtype=float)
        fine_vals = np.asarray(fn(fine_x), dtype=float)
        coarse = np.tensordot(coarse_w, coarse_vals, axes=1)
        fine = np.tensordot(fine_w, fine_vals, axes=1)
        low, high = self.support()
        tail = max(0.0, 1.0 - float(self.dist.cdf(high) - self.dist.cdf(low)))
        bound = float(np.max(np.abs(fine - coarse))) + tail * float(np.max(np.abs(fine_vals)))
        return fine, bound


@dataclass(frozen=True, eq=False)
class DiffusionSpec:
    """dX = drift(t, X) dt + volatility(t, X) . dW with ``n_factors`` Brownian factors.

    ``volatility`` returns an array of shape ``(n_factors, n)`` or anything
    broadcastable to it.
    """

    x0: float
    drift: Coefficient
    volatility: Coefficient
    n_factors: int = 1
    name: str = "process"

    def __post_init__(self):
        if not math.isfinite(self.x0):
            raise ValueError(f"process {self.name!r} needs a finite initial value")
        if int(self.n_factors) != self.n_factors or self.n_factors < 1:
            raise ValueError(f"process {self.name!r} needs a positive factor count")

    @classmethod
    def constant(cls, x0: float, name: str = "constant") -> "DiffusionSpec":
        return cls(x0=x0, drift=lambda t, x: 0.0, volatility=lambda t, x: 0.0, name=name)

    @classmethod
    def linear(cls, x0: float, rate: float, name: str = "linear") -> "DiffusionSpec":
        return cls(x0=x0, drift=lambda t, x: rate, volatility=lambda t, x: 0.0, name=name)

    @classmethod
    def gbm(cls, x0: float, mu: float, sigma: float, name: str = "gbm") -> "DiffusionSpec":
        return cls(x0=x0, drift=lambda t, x: mu * x, volatility=lambda t, x: sigma * x, name=name)


@dataclass(frozen=True, eq=False)
class JumpSpec:
    """Compound Poisson jumps with intensity λ(t) and marks drawn from ``law``."""

    intensity: Intensity
    law: SampleLaw
    compensated: bool = False

    def __post_init__(self):
        if not callable(self.intensity) and not (math.isfinite(self.intensity) and self.intensity >= 0):
            raise ValueError(f"jump intensity must be finite and non-negative, got {self.intensity}")
        if not math.isfinite(self.law.mean()):
            raise ValueError(f"jump law {self.law.name!r} has no finite mean")

    def intensity_at(self, t: float) -> float:
        lam = float(self.intensity(t)) if callable(self.intensity) else float(self.intensity)
        if not math.isfinite(lam) or lam < 0:
            raise SimulationError(f"jump intensity {lam!r} at t={t!r} is not a finite non-negative rate", t=t)
        return lam


@dataclass(frozen=True, eq=False)
class PathBundle:
    grid: TimeGrid
    n_paths: int
    values: np.ndarray
    seed: int

    def __post_init__(self):
        if self.values.shape != (self.n_paths, self.grid.n_steps + 1):
            raise ValueError(
                f"bundle values have shape {self.values.shape}, expected {(self.n_paths, self.grid.n_steps + 1)}"
            )
        if not np.all(np.isfinite(self.values)):
            path, step = (int(v) for v in np.argwhere(~np.isfinite(self.values))[0])
            raise SimulationError(
                f"path {path} is not finite at t={self.grid.points[step]!r}", t=float(self.grid.points[step])
            )
        self.values.setflags(write=False)

    @property
    def times(self) -> np.ndarray:
        return self.grid.points

    @property
    def terminal(self) -> np.ndarray:
        return self.values[:, -1]

    def at(self, times: Sequence[float]) -> np.ndarray:
        """Values at arbitrary instants, linearly interpolated; shape (n_paths, len(times))."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        tol = GRID_TOLERANCE * max(1.0, abs(self.grid.t_end))
        if np.any(times < self.grid.t_start - tol) or np.any(times > self.grid.t_end + tol):
            raise ValueError(f"instants {times.tolist()} leave the simulated range [{self.grid.t_start}, {self.grid.t_end}]")
        pos = np.clip((times - self.grid.t_start) / self.grid.step, 0.0, float(self.grid.n_steps))
        nearest = np.rint(pos)
        pos = np.where(np.abs(pos - nearest) < GRID_TOLERANCE, nearest, pos)
        lower = np.minimum(np.floor(pos).astype(int), self.grid.n_steps - 1)
        weight = pos - lower
        return self.values[:, lower] * (1.0 - weight) + self.values[:, lower + 1] * weight

    def integrated(self) -> "PathBundle":
        """Running time integral of every path (trapezoid rule), starting at 0."""
        cumulative = cumulative_trapezoid(self.values, dx=self.grid.step, axis=1, initial=0.0)
        return PathBundle(self.grid, self.n_paths, cumulative, self.seed)

    def union(self, other: "PathBundle") -> "PathBundle":
        if other.grid != self.grid:
            raise ValueError("only bundles on the same grid can be joined")
        return PathBundle(self.grid, self.n_paths + other.n_paths, np.vstack([self.values, other.values]), self.seed)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int


@dataclass(frozen=True, eq=False)
class ProcessModel:
    """A diffusion, optional jumps, and whether the simulated path is integrated in time."""

    diffusion: DiffusionSpec
    jumps: Optional[JumpSpec] = None
    cumulative: bool = False

    @property
    def name(self) -> str:
        return self.diffusion.name

    def simulate(self, grid: TimeGrid, n_paths: int, seed: int, threads: int = 1) -> PathBundle:
        if self.jumps is None:
            bundle = simulate_diffusion(self.diffusion, grid, n_paths, seed, threads=threads)
        else:
            bundle = simulate_jump_diffusion(self.diffusion, self.jumps, grid, n_paths, seed, threads=threads)
        return bundle.integrated() if self.cumulative else bundle


def derive_seed(seed: int, label: str) -> int:
    """Stable 64-bit sub-seed for a named purpose."""
    state = np.random.SeedSequence([int(seed) % MAX_SEED, zlib.crc32(label.encode())]).generate_state(2)
    return (int(state[0]) << 32) | int(state[1])


def summarize(samples: Sequence[float]) -> McEstimate:
    arr = np.asarray(samples, dtype=float).ravel()
    if arr.size == 0:
        raise EstimationError("cannot estimate from an empty sample")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise EstimationError(f"functional is not finite on path {int(bad[0])}", path_index=int(bad[0]))
    if arr.size == 1 or np.all(arr == arr[0]):
        return McEstimate(mean=float(arr[0]), std_error=0.0, n_samples=int(arr.size))
    return McEstimate(
        mean=float(arr.mean()),
        std_error=float(arr.std(ddof=1) / math.sqrt(arr.size)),
        n_samples=int(arr.size),
    )


def estimate(bundle: PathBundle, functional: Callable[[np.ndarray], float]) -> McEstimate:
    """Sample mean and standard error of ``functional`` over the bundle's paths."""
    if bundle.values.shape[0] == 0:
        raise EstimationError("cannot estimate from an empty bundle")
    samples = np.fromiter((functional(row) for row in bundle.values), dtype=float, count=bundle.values.shape[0])
    return summarize(samples)


def simulate_diffusion(spec: DiffusionSpec, grid: TimeGrid, n_paths: int, seed: int, threads: int = 1) -> PathBundle:
    """Euler-Maruyama paths of ``spec`` on ``grid``."""
    return _simulate(spec, None, grid, n_paths, seed, threads)


def simulate_jump_diffusion(
    spec: DiffusionSpec,
    jumps: JumpSpec,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    threads: int = 1,
) -> PathBundle:
    """Euler-Maruyama paths with compound Poisson jumps applied once per step."""
    return _simulate(spec, jumps, grid, n_paths, seed, threads)


def block_generators(seed: int, block: int, n_streams: int = 2) -> list[np.random.Generator]:
    """Independent Philox generators for one path block."""
    root = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return [np.random.Generator(np.random.Philox(child)) for child in root.spawn(n_streams)]


def map_blocks(work: Callable[[int], np.ndarray], n_paths: int, threads: int) -> np.ndarray:
    """Run ``work`` for every path block (in parallel if asked) and stack in block order."""
    n_blocks = -(-n_paths // PATH_BLOCK)
    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(work, range(n_blocks)))
    else:
        blocks = [work(b) for b in range(n_blocks)]
    return np.concatenate(blocks, axis=0)[:n_paths]


def _validate_run(n_paths: int, seed: int, threads: int) -> None:
    if int(n_paths) != n_paths or n_paths < 1:
        raise ValueError(f"n_paths must be a positive integer, got {n_paths}")
    if not 0 <= int(seed) < MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if threads < 1:
        raise ValueError(f"threads must be positive, got {threads}")


def _simulate(spec, jumps, grid, n_paths, seed, threads) -> PathBundle:
    _validate_run(n_paths, seed, threads)
    work = partial(_simulate_block, spec, jumps, grid, int(seed))
    values = map_blocks(work, n_paths, threads)
    logger.debug(
        "Simulated %d paths of %s over %d steps (jumps=%s, seed=%d)",
        n_paths, spec.name, grid.n_steps, jumps is not None, seed,
    )
    return PathBundle(grid=grid, n_paths=int(n_paths), values=values, seed=int(seed))


def _checked(spec: DiffusionSpec, what: str, t: float, x: np.ndarray, value, shape) -> np.ndarray:
    value = np.broadcast_to(np.asarray(value, dtype=float), shape)
    finite = np.isfinite(value)
    if not finite.all():
        path = int(np.argwhere(~finite.reshape(-1, x.size))[0][1])
        raise SimulationError(
            f"{what} of {spec.name!r} is not finite at t={t!r}, x={float(x[path])!r}",
            t=float(t),
            x=float(x[path]),
        )
    return value


def _jump_increments(jumps: JumpSpec, times: np.ndarray, h: float, rng: np.random.Generator) -> np.ndarray:
    n_steps = times.size - 1
    lam = np.array([jumps.intensity_at(t) for t in times[:-1]])
    counts = rng.poisson(lam[:, None] * h, size=(n_steps, PATH_BLOCK))
    total = int(counts.sum())
    increments = np.zeros(n_steps * PATH_BLOCK)
    if total:
        marks = jumps.law.sample(rng, total)
        owner = np.repeat(np.arange(n_steps * PATH_BLOCK), counts.ravel())
        increments = np.bincount(owner, weights=marks, minlength=n_steps * PATH_BLOCK)
    increments = increments.reshape(n_steps, PATH_BLOCK)
    if jumps.compensated:
        increments = increments - (lam * h * jumps.law.mean())[:, None]
    return increments


def _simulate_block(spec: DiffusionSpec, jumps: Optional[JumpSpec], grid: TimeGrid, seed: int, block: int) -> np.ndarray:
    brownian_rng, jump_rng = block_generators(seed, block)
    times = grid.points
    h = grid.step
    n_steps = grid.n_steps
    d = spec.n_factors
    dw = brownian_rng.standard_normal((n_steps, d, PATH_BLOCK)) * math.sqrt(h)
    jump_part = _jump_increments(jumps, times, h, jump_rng) if jumps is not None else None

    out = np.empty((PATH_BLOCK, n_steps + 1))
    x = np.full(PATH_BLOCK, float(spec.x0))
    out[:, 0] = x
    for k in range(n_steps):
        t = float(times[k])
        mu = _checked(spec, "drift", t, x, spec.drift(t, x), (PATH_BLOCK,))
        vol = _checked(spec, "volatility", t, x, spec.volatility(t, x), (d, PATH_BLOCK))
        x = x + mu * h + (vol * dw[k]).sum(axis=0)
        if jump_part is not None:
            x = x + jump_part[k]
        out[:, k + 1] = x
    return out
