"""Productivity-share government bonds and the lenders-demand measure.

A bond promising ``share`` of the state's tax revenue is priced as::

    B_p(t, T) = share * tau(t) * exp(integral_t^T f_p(t, s) ds)

and the growth rate is recovered from a strip of prices as the maturity
derivative of ``log B_p``. Passing ``discount_convention=True`` flips the sign
of the exponent and of the recovered rate together.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from prodcredit.errors import EXIT_PRICING, ProdCreditError
from prodcredit.stochastics import GRID_TOLERANCE, SampleLaw, block_generators, derive_seed, summarize

logger = logging.getLogger(__name__)

DEFAULT_SHARE = 0.01


class PricingError(ProdCreditError):
    exit_code = EXIT_PRICING


class GridRangeError(PricingError):
    """Raised when a (t, T) pair falls outside the grid a surface is defined on."""

    def __init__(self, message: str, t: float | None = None, maturity: float | None = None):
        self.t = t
        self.maturity = maturity
        super().__init__(message)


class DomainError(PricingError):
    """Raised on a non-positive price, Gamma, or belief sample."""


def _check_finite_nonnegative(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise DomainError(f"{what} must be finite")
    if np.any(values < 0):
        raise DomainError(f"{what} must be non-negative")


@dataclass(frozen=True, eq=False)
class TaxProcess:
    """Tax income tau(t): piecewise linear on ``times``, or a constant level."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1 or times.size == 0:
            raise ValueError("tax times and values must be equal-length, non-empty 1-d arrays")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("tax times must be strictly increasing")
        _check_finite_nonnegative(values, "tax income")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, level: float) -> "TaxProcess":
        return cls(np.array([0.0]), np.array([float(level)]))

    @classmethod
    def from_csv(cls, path: str) -> "TaxProcess":
        frame = pd.read_csv(path, comment="#")
        missing = {"t", "tau"} - set(frame.columns)
        if missing:
            raise DomainError(f"{path}: missing tax columns {sorted(missing)}")
        frame = frame.sort_values("t")
        return cls(frame["t"].to_numpy(), frame["tau"].to_numpy())

    def at(self, t: float) -> float:
        if self.times.size == 1:
            return float(self.values[0])
        tol = GRID_TOLERANCE * max(1.0, abs(self.times[-1]))
        if t < self.times[0] - tol or t > self.times[-1] + tol:
            raise GridRangeError(f"t={t:g} is outside the tax path [{self.times[0]:g}, {self.times[-1]:g}]", t=t)
        return float(np.interp(t, self.times, self.values))


@dataclass(frozen=True, eq=False)
class GrowthSurface:
    """f_p(t, s) on a rectangular (t_axis x s_axis) grid; only s >= t is read."""

    t_axis: np.ndarray
    s_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t_axis = np.asarray(self.t_axis, dtype=float)
        s_axis = np.asarray(self.s_axis, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (t_axis.size, s_axis.size):
            raise ValueError(f"growth values have shape {values.shape}, axes give {(t_axis.size, s_axis.size)}")
        if s_axis.size < 2 or np.any(np.diff(s_axis) <= 0) or np.any(np.diff(t_axis) <= 0):
            raise ValueError("growth axes must be strictly increasing, with at least two maturities")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            i, j = bad[0]
            raise DomainError(f"growth rate is not finite at t={t_axis[i]:g}, s={s_axis[j]:g}")
        object.__setattr__(self, "t_axis", t_axis)
        object.__setattr__(self, "s_axis", s_axis)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, fn: Callable[[float, float], float], t_axis, s_axis) -> "GrowthSurface":
        t_axis = np.asarray(t_axis, dtype=float)
        s_axis = np.asarray(s_axis, dtype=float)
        values = np.array([[fn(t, s) if s >= t else 0.0 for s in s_axis] for t in t_axis], dtype=float)
        return cls(t_axis, s_axis, values)

    @classmethod
    def constant(cls, rate: float, t_axis, s_axis) -> "GrowthSurface":
        return cls.from_function(lambda t, s: rate, t_axis, s_axis)

    @classmethod
    def linear(cls, level: float, slope: float, t_axis, s_axis) -> "GrowthSurface":
        """f_p(t, s) = level + slope * (s - t)."""
        return cls.from_function(lambda t, s: level + slope * (s - t), t_axis, s_axis)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "GrowthSurface":
        missing = {"t", "s", "f_p"} - set(frame.columns)
        if missing:
            raise DomainError(f"missing growth columns {sorted(missing)}")
        table = frame.pivot(index="t", columns="s", values="f_p").sort_index().sort_index(axis=1)
        t_axis = table.index.to_numpy(dtype=float)
        s_axis = table.columns.to_numpy(dtype=float)
        values = table.to_numpy(dtype=float)
        upper = s_axis[None, :] >= t_axis[:, None]
        holes = np.argwhere(np.isnan(values) & upper)
        if holes.size:
            i, j = holes[0]
            raise DomainError(f"growth table has no value at t={t_axis[i]:g}, s={s_axis[j]:g}")
        return cls(t_axis, s_axis, np.where(upper, values, 0.0))

    @classmethod
    def from_csv(cls, path: str) -> "GrowthSurface":
        return cls.from_frame(pd.read_csv(path, comment="#"))

    def to_frame(self) -> pd.DataFrame:
        t, s = np.meshgrid(self.t_axis, self.s_axis, indexing="ij")
        upper = s >= t
        return pd.DataFrame({"t": t[upper], "s": s[upper], "f_p": self.values[upper]})

    def row(self, t: float) -> np.ndarray:
        """f_p(t, .) on ``s_axis``, linear in t between grid rows."""
        if self.t_axis.size == 1:
            return self.values[0]
        i = int(np.clip(np.searchsorted(self.t_axis, t, side="right") - 1, 0, self.t_axis.size - 2))
        w = (t - self.t_axis[i]) / (self.t_axis[i + 1] - self.t_axis[i])
        return self.values[i] * (1.0 - w) + self.values[i + 1] * w

    def integral(self, t: float, maturity: float) -> float:
        """Trapezoid integral of f_p(t, s) for s in [t, maturity] on the s grid."""
        tol = GRID_TOLERANCE * max(1.0, abs(self.s_axis[-1]))
        if maturity < t - tol:
            raise GridRangeError(f"maturity {maturity:g} precedes t={t:g}", t=t, maturity=maturity)
        if (
            t < self.t_axis[0] - tol
            or t > self.t_axis[-1] + tol
            or t < self.s_axis[0] - tol
            or maturity > self.s_axis[-1] + tol
        ):
            raise GridRangeError(f"(t={t:g}, T={maturity:g}) is outside the growth grid", t=t, maturity=maturity)
        if maturity <= t:
            return 0.0
        inner = self.s_axis[(self.s_axis > t + tol) & (self.s_axis < maturity - tol)]
        nodes = np.concatenate([[t], inner, [maturity]])
        rates = np.interp(nodes, self.s_axis, self.row(t))
        return float(trapezoid(rates, nodes))


@dataclass(frozen=True)
class BondQuote:
    t: float
    maturity: float
    share: float
    price: float

    def __post_init__(self):
        if self.maturity < self.t:
            raise ValueError(f"maturity {self.maturity} precedes t={self.t}")
        if not self.share > 0:
            raise ValueError("bond share must be positive")


@dataclass(frozen=True)
class LenderBeliefs:
    """Demanded income share theta(t, T) = X * exp(trend * t), X drawn from ``law``."""

    law: SampleLaw
    trend: float = 0.0

    def sample(self, rng: np.random.Generator, t: float, size: int) -> np.ndarray:
        return self.law.sample(rng, size) * np.exp(self.trend * t)


@dataclass(frozen=True)
class GammaEstimate:
    t: float
    maturity: float
    value: float
    std_error: float
    n_samples: int


def price_bond(
    tax: TaxProcess,
    growth: GrowthSurface,
    t: float,
    maturity: float,
    share: float = DEFAULT_SHARE,
    discount_convention: bool = False,
) -> BondQuote:
    exponent = growth.integral(t, maturity)
    if discount_convention:
        exponent = -exponent
    price = share * tax.at(t) * float(np.exp(exponent))
    return BondQuote(t=t, maturity=maturity, share=share, price=price)


def quote_curve(
    tax: TaxProcess,
    growth: GrowthSurface,
    t: float,
    maturities: Sequence[float],
    share: float = DEFAULT_SHARE,
    discount_convention: bool = False,
) -> List[BondQuote]:
    quotes = [price_bond(tax, growth, t, float(m), share, discount_convention) for m in maturities]
    logger.debug("Priced %d maturities at t=%g", len(quotes), t)
    return quotes


def implied_forward(quotes: Sequence[BondQuote], discount_convention: bool = False) -> GrowthSurface:
    """Recover f_p(t, .) from a price strip at one t as a single-row surface."""
    if len(quotes) < 3:
        raise DomainError("at least three maturities are needed to recover a forward rate")
    t = quotes[0].t
    if any(q.t != t for q in quotes):
        raise DomainError("all quotes in a strip must share the same t")
    maturities = np.array([q.maturity for q in quotes])
    prices = np.array([q.price for q in quotes])
    if np.any(np.diff(maturities) <= 0):
        raise DomainError("quote maturities must be strictly increasing")
    bad = np.flatnonzero(prices <= 0)
    if bad.size:
        raise DomainError(f"non-positive bond price {prices[bad[0]]:g} at maturity {maturities[bad[0]]:g}")
    rates = np.gradient(np.log(prices), maturities, edge_order=1)
    if discount_convention:
        rates = -rates
    return GrowthSurface(np.array([t]), maturities, rates[None, :])


def gamma(
    beliefs: LenderBeliefs,
    t: float,
    maturity: float,
    n_samples: int = 10_000,
    seed: int = 0,
) -> GammaEstimate:
    """Gamma(t, T) = 1 / E[theta(t, T)] with a delta-method standard error.

    Draws depend on ``maturity`` and ``seed`` only, so estimates along t share
    their samples.
    """
    rng = block_generators(derive_seed(seed, f"gamma/{maturity!r}"), 0, n_streams=1)[0]
    samples = beliefs.sample(rng, t, n_samples)
    if np.any(samples <= 0):
        raise DomainError(f"lender beliefs produced a non-positive share at t={t:g}")
    mean = summarize(samples)
    if mean.mean <= 0:
        raise DomainError(f"mean demanded share {mean.mean:g} is not positive")
    return GammaEstimate(
        t=t,
        maturity=maturity,
        value=1.0 / mean.mean,
        std_error=mean.std_error / mean.mean**2,
        n_samples=mean.n_samples,
    )


def gamma_curve(
    beliefs: LenderBeliefs,
    times: Sequence[float],
    maturity: float,
    n_samples: int = 10_000,
    seed: int = 0,
) -> List[GammaEstimate]:
    return [gamma(beliefs, float(t), maturity, n_samples, seed) for t in times]


def gamma_rate(times: Sequence[float], values: Sequence[float]) -> np.ndarray:
    """f_Gamma = d/dt log Gamma(t, T) at fixed T."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 3 or times.shape != values.shape:
        raise DomainError("gamma rate needs at least three (t, Gamma) points")
    bad = np.flatnonzero(values <= 0)
    if bad.size:
        raise DomainError(f"non-positive Gamma {values[bad[0]]:g} at t={times[bad[0]]:g}")
    return np.gradient(np.log(values), times, edge_order=1)
