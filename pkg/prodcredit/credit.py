"""Productivity-share loans: time-0 repayment plans, settlement, and defaults.

A plan fixes, at agreement time, the share ``rpr_m`` of each repayment
period's production that goes to the bank::

    rpr_m = E[(C/n) * N/S at m/n*T] / E[Pi(m/n*T) - Pi((m-1)/n*T)]

(the ratio of two expectations, as the formula is printed). Interest shares
are ``rI = kappa * rpr`` paid over windows after the repayment horizon.
Settlement values the realized production at the realized price ratio.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from prodcredit.errors import EXIT_CREDIT, ProdCreditError
from prodcredit.stochastics import (
    GRID_TOLERANCE,
    DiffusionSpec,
    ProcessModel,
    TimeGrid,
    derive_seed,
    summarize,
)

logger = logging.getLogger(__name__)

DEFAULT_INTEREST_RATIO = 0.1
MOTIVATION_STEPS_PER_YEAR = 64


class CreditError(ProdCreditError):
    exit_code = EXIT_CREDIT


class PlanError(CreditError):
    """Raised when a repayment plan cannot be fixed at agreement time."""

    def __init__(self, message: str, instant: float | None = None):
        self.instant = instant
        super().__init__(message)


class ContractViolation(CreditError):
    """Raised when realized paths break the loan contract (e.g. production decreases)."""

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        super().__init__(message)


class StateMachineError(CreditError):
    """Raised on an illegal default-case transition."""

    def __init__(self, state: "CaseState", action: str):
        self.state = state
        self.action = action
        super().__init__(f"cannot apply {action!r} to a case in state {state.value!r}")


class ApprovalError(CreditError):
    """Raised when a private investor takeover lacks local approval."""


class LoanKind(str, Enum):
    MATERIAL = "material"
    SERVICE = "service"
    PRIVATE_INCOME = "private_income"


class CaseState(str, Enum):
    PERFORMING = "performing"
    PRODUCTION_STOPPED = "production_stopped"
    MISCONDUCT = "misconduct"
    RESOLVED_LOCAL_CONTINUATION = "resolved_local_continuation"
    RESOLVED_PRIVATE_INVESTOR = "resolved_private_investor"
    RESOLVED_DISMANTLED = "resolved_dismantled"


class FailureKind(str, Enum):
    PRODUCTION_STOPPED = "production_stopped"
    MISCONDUCT = "misconduct"


class IncomeEvent(str, Enum):
    JOB_LOSS = "job_loss"
    WILLFUL_BREACH = "willful_breach"


FAILURE_STATES = frozenset({CaseState.PRODUCTION_STOPPED, CaseState.MISCONDUCT})
RESOLVED_STATES = frozenset({
    CaseState.RESOLVED_LOCAL_CONTINUATION,
    CaseState.RESOLVED_PRIVATE_INVESTOR,
    CaseState.RESOLVED_DISMANTLED,
})


@dataclass(frozen=True)
class LoanTerms:
    principal: float
    horizon: float
    n_repayments: int
    interest_period: float = 0.0
    n_interest_payments: int = 1
    interest_ratio: float = DEFAULT_INTEREST_RATIO
    kind: LoanKind = LoanKind.MATERIAL
    start_offset: float = 0.0
    loan_id: str = "loan"

    def __post_init__(self):
        if not self.principal > 0:
            raise ValueError(f"{self.loan_id}: principal must be positive")
        if not self.horizon > 0:
            raise ValueError(f"{self.loan_id}: horizon must be positive")
        if int(self.n_repayments) != self.n_repayments or self.n_repayments < 1:
            raise ValueError(f"{self.loan_id}: n_repayments must be a positive integer")
        if not self.interest_period >= 0:
            raise ValueError(f"{self.loan_id}: interest_period must be non-negative")
        if int(self.n_interest_payments) != self.n_interest_payments or self.n_interest_payments < 1:
            raise ValueError(f"{self.loan_id}: n_interest_payments must be a positive integer")
        if not 0 < self.interest_ratio < 1:
            raise ValueError(f"{self.loan_id}: interest_ratio must lie in (0, 1)")
        if not self.start_offset >= 0:
            raise ValueError(f"{self.loan_id}: start_offset must be non-negative")

    @property
    def repayment_end(self) -> float:
        return self.start_offset + self.horizon

    @property
    def end(self) -> float:
        return self.repayment_end + self.interest_period

    def repayment_edges(self) -> np.ndarray:
        """Window boundaries start + m/n*T for m = 0..n."""
        return self.start_offset + self.horizon * np.arange(self.n_repayments + 1) / self.n_repayments

    def interest_edges(self) -> np.ndarray:
        """Interest window boundaries over [T, T + I]; a single point when I = 0."""
        if self.interest_period == 0:
            return np.array([self.repayment_end])
        k = self.n_interest_payments
        return self.repayment_end + self.interest_period * np.arange(k + 1) / k


@dataclass(frozen=True, eq=False)
class EnterpriseModel:
    """Productivity Pi_t (cumulative output) and the price ratio S_t/N_t."""

    productivity: ProcessModel
    price_ratio: ProcessModel


@dataclass(frozen=True)
class SamplingConfig:
    n_paths: int = 10_000
    seed: int = 0
    steps_per_year: int = 100
    threads: int = 1


@dataclass(frozen=True)
class RepaymentPlan:
    """Schedules fixed at time 0. Edges are window boundaries; instants are window ends."""

    loan_id: str
    rpr: Tuple[float, ...]
    interest_rates: Tuple[float, ...]
    repayment_edges: Tuple[float, ...]
    interest_edges: Tuple[float, ...]
    interest_ratio: float
    expected_payments: Tuple[float, ...] = ()
    rpr_std_error: Tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.repayment_edges) != len(self.rpr) + 1:
            raise ValueError("repayment schedule and window edges disagree")
        if len(self.interest_edges) != len(self.interest_rates) + 1:
            raise ValueError("interest schedule and window edges disagree")
        if any(r < 0 for r in self.rpr) or any(r < 0 for r in self.interest_rates):
            raise ValueError(f"{self.loan_id}: repayment and interest shares must be non-negative")

    @property
    def instants(self) -> Tuple[float, ...]:
        return self.repayment_edges[1:]

    @property
    def interest_instants(self) -> Tuple[float, ...]:
        return self.interest_edges[1:]


@dataclass(frozen=True)
class LoanOutcome:
    loan_id: str
    pi_total: float
    market_value: float
    interest: float
    total_repaid: float
    bank_loss: float
    bank_gain: float
    payments: Tuple[float, ...] = ()
    coverage_error: float = 0.0


@dataclass(frozen=True, eq=False)
class RealizedPaths:
    """One realized (Pi, S/N) path pair on a common time axis."""

    times: np.ndarray
    productivity: np.ndarray
    price_ratio: np.ndarray

    def at(self, instants) -> Tuple[np.ndarray, np.ndarray]:
        return (
            np.interp(instants, self.times, self.productivity),
            np.interp(instants, self.times, self.price_ratio),
        )


@dataclass(frozen=True)
class DefaultCase:
    loan_id: str
    loan_kind: LoanKind = LoanKind.MATERIAL
    state: CaseState = CaseState.PERFORMING
    salvage_value: float = 0.0
    dismantle_cost: float = 0.0
    failure_time: Optional[float] = None

    def __post_init__(self):
        if self.salvage_value < 0 or self.dismantle_cost < 0:
            raise ValueError(f"{self.loan_id}: salvage value and dismantle cost must be non-negative")


@dataclass(frozen=True)
class LocalContinuation:
    extension: float = 0.0


@dataclass(frozen=True)
class PrivateInvestor:
    approved: bool


@dataclass(frozen=True)
class Dismantle:
    pass


Decision = Union[LocalContinuation, PrivateInvestor, Dismantle]


@dataclass(frozen=True)
class Resolution:
    case: DefaultCase
    ledger_effect: float = 0.0
    extension: float = 0.0


def interest_share_index(j: int, n_repayments: int, n_interest: int) -> int:
    """Repayment period (0-based) whose share backs interest window ``j`` (0-based)."""
    return min(n_repayments, math.ceil((j + 1) * n_repayments / n_interest)) - 1


def _interest_rates(terms: LoanTerms, rpr) -> Tuple[float, ...]:
    if terms.interest_period == 0:
        return ()
    k = terms.n_interest_payments
    return tuple(
        terms.interest_ratio * rpr[interest_share_index(j, terms.n_repayments, k)] for j in range(k)
    )


def compute_repayment_plan(terms: LoanTerms, model: EnterpriseModel, sampling: SamplingConfig) -> RepaymentPlan:
    """Fix the repayment and interest shares at time 0 by Monte Carlo on ``model``."""
    edges = terms.repayment_edges()
    grid = TimeGrid.covering(terms.end, sampling.steps_per_year)
    production = model.productivity.simulate(
        grid, sampling.n_paths, derive_seed(sampling.seed, f"{terms.loan_id}/productivity"), sampling.threads
    )
    prices = model.price_ratio.simulate(
        grid, sampling.n_paths, derive_seed(sampling.seed, f"{terms.loan_id}/price_ratio"), sampling.threads
    )
    if np.any(prices.values <= 0):
        raise PlanError(f"{terms.loan_id}: price ratio {model.price_ratio.name!r} must stay strictly positive")
    if np.any(np.diff(production.values, axis=1) < 0):
        raise PlanError(f"{terms.loan_id}: productivity {model.productivity.name!r} must be non-decreasing")

    increments = np.diff(production.at(edges), axis=1)
    claims = (terms.principal / terms.n_repayments) / prices.at(edges[1:])
    rpr, std_errors, expected = [], [], []
    for m in range(terms.n_repayments):
        dpi = summarize(increments[:, m])
        if dpi.mean <= 0:
            raise PlanError(
                f"{terms.loan_id}: expected production over the window ending at t={edges[m + 1]:g} is not positive",
                instant=float(edges[m + 1]),
            )
        claim = summarize(claims[:, m])
        rate = claim.mean / dpi.mean
        rpr.append(rate)
        std_errors.append(math.hypot(claim.std_error / dpi.mean, claim.mean * dpi.std_error / dpi.mean**2))
        expected.append(terms.principal / terms.n_repayments)
    logger.debug("Plan %s: rpr=%s", terms.loan_id, rpr)
    return RepaymentPlan(
        loan_id=terms.loan_id,
        rpr=tuple(rpr),
        interest_rates=_interest_rates(terms, rpr),
        repayment_edges=tuple(float(e) for e in edges),
        interest_edges=tuple(float(e) for e in terms.interest_edges()),
        interest_ratio=terms.interest_ratio,
        expected_payments=tuple(expected),
        rpr_std_error=tuple(std_errors),
    )


def realize_paths(terms: LoanTerms, model: EnterpriseModel, seed: int, steps_per_year: int) -> RealizedPaths:
    """Draw the single realized world a loan is settled against."""
    grid = TimeGrid.covering(terms.end, steps_per_year)
    production = model.productivity.simulate(grid, 1, derive_seed(seed, f"{terms.loan_id}/realized/productivity"))
    prices = model.price_ratio.simulate(grid, 1, derive_seed(seed, f"{terms.loan_id}/realized/price_ratio"))
    return RealizedPaths(times=grid.points, productivity=production.values[0], price_ratio=prices.values[0])


def settle_loan(terms: LoanTerms, plan: RepaymentPlan, realized: RealizedPaths) -> LoanOutcome:
    """Value the realized production shares and split the result into loss or gain."""
    edges = np.asarray(plan.repayment_edges)
    interest_edges = np.asarray(plan.interest_edges)
    tol = GRID_TOLERANCE * max(1.0, terms.end)
    if realized.times[0] > edges[0] + tol or realized.times[-1] < max(edges[-1], interest_edges[-1]) - tol:
        raise ContractViolation(
            f"{terms.loan_id}: realized paths cover [{realized.times[0]}, {realized.times[-1]}], "
            f"settlement needs [{edges[0]}, {max(edges[-1], interest_edges[-1])}]"
        )
    drops = np.flatnonzero(np.diff(realized.productivity) < 0)
    if drops.size:
        t = float(realized.times[drops[0] + 1])
        raise ContractViolation(f"{terms.loan_id}: realized production decreases at t={t:g}", t=t)

    production, price = realized.at(edges)
    repaid_units = np.asarray(plan.rpr) * np.diff(production)
    repayments = repaid_units * price[1:]
    interest_payments = np.zeros(0)
    if plan.interest_rates:
        production_i, price_i = realized.at(interest_edges)
        interest_payments = np.asarray(plan.interest_rates) * np.diff(production_i) * price_i[1:]

    market_value = float(repayments.sum())
    interest = float(interest_payments.sum())
    total = market_value + interest
    outcome = LoanOutcome(
        loan_id=terms.loan_id,
        pi_total=float(repaid_units.sum()),
        market_value=market_value,
        interest=interest,
        total_repaid=total,
        bank_loss=max(terms.principal - total, 0.0),
        bank_gain=max(total - terms.principal, 0.0),
        payments=tuple(float(p) for p in np.concatenate([repayments, interest_payments])),
        coverage_error=market_value - terms.principal,
    )
    logger.debug("Settled %s: A=%g J=%g E=%g", terms.loan_id, market_value, interest, total)
    return outcome


def report_failure(case: DefaultCase, failure: FailureKind, time: float | None = None) -> DefaultCase:
    if case.state is not CaseState.PERFORMING:
        raise StateMachineError(case.state, failure.value)
    logger.info("Loan %s entered %s", case.loan_id, failure.value)
    return replace(case, state=CaseState(failure.value), failure_time=time)


def resolve_default(case: DefaultCase, decision: Decision) -> Resolution:
    """Resolve a failed loan; the resolution carries the net effect on bank wealth."""
    action = type(decision).__name__
    if case.state not in FAILURE_STATES:
        raise StateMachineError(case.state, action)
    if isinstance(decision, LocalContinuation):
        if decision.extension < 0:
            raise ValueError("a negotiated extension cannot be negative")
        return Resolution(replace(case, state=CaseState.RESOLVED_LOCAL_CONTINUATION), 0.0, decision.extension)
    if isinstance(decision, PrivateInvestor):
        if not decision.approved:
            raise ApprovalError(f"{case.loan_id}: the local authorities did not approve the private investor")
        return Resolution(replace(case, state=CaseState.RESOLVED_PRIVATE_INVESTOR), 0.0)
    if isinstance(decision, Dismantle):
        # failed service enterprises leave nothing to sell
        salvage = 0.0 if case.loan_kind is LoanKind.SERVICE else case.salvage_value
        return Resolution(replace(case, state=CaseState.RESOLVED_DISMANTLED), salvage - case.dismantle_cost)
    raise StateMachineError(case.state, action)


def extend_plan(
    terms: LoanTerms,
    plan: RepaymentPlan,
    failure_time: float,
    extension: float,
) -> Tuple[LoanTerms, RepaymentPlan]:
    """Stretch the instants after ``failure_time`` by ``extension``; shares stay as agreed.

    A failure during the interest period lengthens that period and leaves the
    repayment windows alone.
    """
    if extension < 0:
        raise ValueError("a negotiated extension cannot be negative")
    if not terms.start_offset <= failure_time < terms.end:
        raise ValueError(f"{terms.loan_id}: failure time {failure_time} lies outside the loan's life")
    old_end = terms.repayment_end
    edges = np.asarray(plan.repayment_edges)
    if failure_time >= old_end:
        # only the interest period is still running
        new_terms = replace(terms, interest_period=terms.interest_period + extension)
    else:
        new_terms = replace(terms, horizon=terms.horizon + extension)
        scale = (new_terms.repayment_end - failure_time) / (old_end - failure_time)
        edges = np.where(edges > failure_time, failure_time + (edges - failure_time) * scale, edges)
    interest_edges = np.asarray(plan.interest_edges)
    interest_edges = np.where(interest_edges > failure_time, interest_edges + extension, interest_edges)
    if failure_time < old_end and plan.interest_edges:
        interest_edges[0] = new_terms.repayment_end
    new_plan = replace(
        plan,
        repayment_edges=tuple(float(e) for e in edges),
        interest_edges=tuple(float(e) for e in interest_edges),
    )
    return new_terms, new_plan


def build_income_loan(
    terms: LoanTerms,
    income: ProcessModel,
    fraction: float,
    sampling: SamplingConfig | None = None,
) -> RepaymentPlan:
    """Plan for a loan repaid by a fixed fraction of the borrower's income.

    The bank's claim is the fraction of realized income and nothing else; the
    plan has no field through which more could be demanded.
    """
    if terms.kind is not LoanKind.PRIVATE_INCOME:
        raise PlanError(f"{terms.loan_id}: income plans need loan kind {LoanKind.PRIVATE_INCOME.value!r}")
    if not 0 < fraction < 1:
        raise PlanError(f"{terms.loan_id}: income fraction {fraction} must lie in (0, 1)")
    rpr = (float(fraction),) * terms.n_repayments
    expected: Tuple[float, ...] = ()
    if sampling is not None:
        rate_model = replace(income, cumulative=False)
        grid = TimeGrid.covering(terms.end, sampling.steps_per_year)
        rates = rate_model.simulate(
            grid, sampling.n_paths, derive_seed(sampling.seed, f"{terms.loan_id}/income"), sampling.threads
        )
        if np.any(rates.values < 0):
            raise PlanError(f"{terms.loan_id}: income process {income.name!r} goes negative")
        accrued = np.diff(rates.integrated().at(terms.repayment_edges()), axis=1)
        expected = tuple(fraction * float(v) for v in accrued.mean(axis=0))
    return RepaymentPlan(
        loan_id=terms.loan_id,
        rpr=rpr,
        interest_rates=_interest_rates(terms, rpr),
        repayment_edges=tuple(float(e) for e in terms.repayment_edges()),
        interest_edges=tuple(float(e) for e in terms.interest_edges()),
        interest_ratio=terms.interest_ratio,
        expected_payments=expected,
    )


def income_realization(times, income) -> RealizedPaths:
    """Turn a realized income-rate path into accrued income at a unit price ratio."""
    times = np.asarray(times, dtype=float)
    income = np.asarray(income, dtype=float)
    if np.any(income < 0):
        raise ContractViolation("realized income cannot be negative")
    accrued = cumulative_trapezoid(income, times, initial=0.0)
    return RealizedPaths(times=times, productivity=accrued, price_ratio=np.ones_like(times))


def realize_income(terms: LoanTerms, income: ProcessModel, seed: int, steps_per_year: int) -> RealizedPaths:
    grid = TimeGrid.covering(terms.end, steps_per_year)
    rates = replace(income, cumulative=False).simulate(grid, 1, derive_seed(seed, f"{terms.loan_id}/realized/income"))
    return income_realization(grid.points, rates.values[0])


def record_income_event(case: DefaultCase, event: IncomeEvent) -> DefaultCase:
    if event is IncomeEvent.WILLFUL_BREACH:
        return report_failure(case, FailureKind.MISCONDUCT)
    logger.info("Loan %s: job loss recorded; payments pause, the loan keeps performing", case.loan_id)
    return case


def motivation_example() -> Tuple[LoanTerms, RepaymentPlan, LoanOutcome]:
    """Lend 10, get goods worth 10 back plus goods worth 1 as interest."""
    terms = LoanTerms(
        principal=10.0,
        horizon=1.0,
        n_repayments=1,
        interest_period=1.0,
        n_interest_payments=1,
        interest_ratio=DEFAULT_INTEREST_RATIO,
        loan_id="motivation",
    )
    model = EnterpriseModel(
        productivity=ProcessModel(DiffusionSpec.linear(0.0, 10.0, name="goods_produced")),
        price_ratio=ProcessModel(DiffusionSpec.constant(1.0, name="unit_price")),
    )
    sampling = SamplingConfig(n_paths=1, seed=0, steps_per_year=MOTIVATION_STEPS_PER_YEAR)
    plan = compute_repayment_plan(terms, model, sampling)
    realized = realize_paths(terms, model, seed=0, steps_per_year=MOTIVATION_STEPS_PER_YEAR)
    return terms, plan, settle_loan(terms, plan, realized)


def halt_after(realized: RealizedPaths, t: float) -> RealizedPaths:
    """Freeze cumulative output from ``t`` on; prices keep moving."""
    level = float(np.interp(t, realized.times, realized.productivity))
    productivity = np.where(realized.times > t, level, realized.productivity)
    return replace(realized, productivity=productivity)
