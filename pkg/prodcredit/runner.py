from __future__ import annotations

import logging
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from prodcredit import banksim, credit, hjm, sovereign
from prodcredit.config import HJMBlock, LoanConfig, Scenario
from prodcredit.errors import EXIT_CONFIG, EXIT_OK, EXIT_UNEXPECTED, ConfigError, ProdCreditError
from prodcredit.metrics import (
    BANK_LOSSES_ABSORBED,
    COMMAND_DURATION,
    COMMAND_ERRORS,
    COMPLIANCE_VIOLATIONS,
    DRIFT_RESIDUAL_MAX,
    LOAN_TOTAL_REPAID,
    LOANS_SETTLED,
    SIMULATED_PATHS,
)
from prodcredit.output import rows_frame, write_json, write_table
from prodcredit.stochastics import TimeGrid

logger = logging.getLogger(__name__)

COMMANDS = (
    "loan-plan",
    "loan-settle",
    "bond-price",
    "bond-forward",
    "gamma",
    "hjm-evolve",
    "hjm-check",
    "hjm-implied-vol",
    "bank-sim",
    "golden-motivation",
)


class ScenarioRunner:
    """Runs one command against a scenario and maps failures to exit codes."""

    def __init__(self, scenario: Optional[Scenario], block: Optional[str] = None, out_dir: Optional[Path] = None):
        self.scenario = scenario
        self.block = block
        self._out_dir = out_dir
        self.written: List[Path] = []
        self._handlers: Dict[str, Callable[[], None]] = {
            "loan-plan": self.loan_plan,
            "loan-settle": self.loan_settle,
            "bond-price": self.bond_price,
            "bond-forward": self.bond_forward,
            "gamma": self.gamma,
            "hjm-evolve": self.hjm_evolve,
            "hjm-check": self.hjm_check,
            "hjm-implied-vol": self.hjm_implied_vol,
            "bank-sim": self.bank_sim,
            "golden-motivation": self.golden_motivation,
        }

    @property
    def out_dir(self) -> Path:
        if self._out_dir is not None:
            return self._out_dir
        return self.scenario.output_dir if self.scenario is not None else Path("out")

    def run(self, command: str) -> int:
        start = time.perf_counter()
        try:
            handler = self._handlers[command]
        except KeyError:
            logger.error("Unknown command %s", command)
            return EXIT_UNEXPECTED
        try:
            if self.scenario is None and command != "golden-motivation":
                raise ConfigError(f"{command} needs --scenario")
            handler()
        except ProdCreditError as exc:
            logger.error("%s failed: %s", command, exc)
            self._inc_error(command, type(exc).__name__)
            return exc.exit_code
        except ValueError as exc:
            logger.error("%s rejected its input: %s", command, exc)
            self._inc_error(command, "invalid_input")
            return EXIT_CONFIG
        except Exception:
            logger.exception("%s failed unexpectedly", command)
            self._inc_error(command, "unexpected")
            return EXIT_UNEXPECTED
        finally:
            COMMAND_DURATION.labels(command=command).set(time.perf_counter() - start)
        logger.info("%s finished, wrote %d file(s) to %s", command, len(self.written), self.out_dir)
        return EXIT_OK

    @staticmethod
    def _inc_error(command: str, stage: str) -> None:
        COMMAND_ERRORS.labels(command=command, stage=stage).inc()

    def _write(self, name: str, frame: pd.DataFrame, footer=None) -> None:
        self.written.append(write_table(self.out_dir / name, frame, footer))

    def _selected(self, items, key: Callable, what: str):
        if self.block is None:
            return list(items)
        chosen = [item for item in items if key(item) == self.block]
        if not chosen:
            raise ConfigError(f"no {what} named {self.block!r} in {self.scenario.path}")
        return chosen

    # credit

    def _loans(self) -> List[LoanConfig]:
        return self._selected(self.scenario.loans, lambda l: l.terms.loan_id, "loan")

    def _model(self, loan: LoanConfig) -> credit.EnterpriseModel:
        processes = self.scenario.processes
        return credit.EnterpriseModel(productivity=processes[loan.productivity], price_ratio=processes[loan.price_ratio])

    def _plan(self, loan: LoanConfig) -> credit.RepaymentPlan:
        sampling = self.scenario.sampling()
        if loan.terms.kind is credit.LoanKind.PRIVATE_INCOME:
            plan = credit.build_income_loan(loan.terms, self.scenario.processes[loan.income], loan.fraction, sampling)
            SIMULATED_PATHS.labels(process=loan.income).inc(sampling.n_paths)
            return plan
        plan = credit.compute_repayment_plan(loan.terms, self._model(loan), sampling)
        SIMULATED_PATHS.labels(process=loan.productivity).inc(sampling.n_paths)
        SIMULATED_PATHS.labels(process=loan.price_ratio).inc(sampling.n_paths)
        return plan

    def loan_plan(self) -> None:
        rows = []
        for loan in self._loans():
            plan = self._plan(loan)
            edges = plan.repayment_edges
            for m, rate in enumerate(plan.rpr):
                rows.append({
                    "loan_id": plan.loan_id,
                    "window": "repayment",
                    "index": m + 1,
                    "start": edges[m],
                    "end": edges[m + 1],
                    "share": rate,
                    "std_error": plan.rpr_std_error[m] if plan.rpr_std_error else 0.0,
                    "expected_payment": plan.expected_payments[m] if plan.expected_payments else float("nan"),
                })
            iedges = plan.interest_edges
            for j, rate in enumerate(plan.interest_rates):
                rows.append({
                    "loan_id": plan.loan_id,
                    "window": "interest",
                    "index": j + 1,
                    "start": iedges[j],
                    "end": iedges[j + 1],
                    "share": rate,
                    "std_error": float("nan"),
                    "expected_payment": float("nan"),
                })
            logger.debug("Planned %s with %d repayment windows", plan.loan_id, len(plan.rpr))
        self._write(
            "loan_plans.csv",
            rows_frame(rows, ["loan_id", "window", "index", "start", "end", "share", "std_error", "expected_payment"]),
        )

    def _realize(self, loan: LoanConfig, terms: credit.LoanTerms) -> credit.RealizedPaths:
        steps = self.scenario.steps_per_year
        if terms.kind is credit.LoanKind.PRIVATE_INCOME:
            return credit.realize_income(terms, self.scenario.processes[loan.income], self.scenario.seed, steps)
        return credit.realize_paths(terms, self._model(loan), self.scenario.seed, steps)

    def _settle_one(self, loan: LoanConfig) -> dict:
        terms = loan.terms
        plan = self._plan(loan)
        case = credit.DefaultCase(loan_id=terms.loan_id, loan_kind=terms.kind)
        ledger_effect = 0.0
        halt_at = None
        spec = loan.default
        if spec is not None:
            case = replace(case, salvage_value=spec["salvage_value"], dismantle_cost=spec["dismantle_cost"])
            failure = spec["failure"]
            if failure in {e.value for e in credit.IncomeEvent}:
                case = credit.record_income_event(case, credit.IncomeEvent(failure))
                halt_at = spec["time"]
            else:
                case = credit.report_failure(case, credit.FailureKind(failure), spec["time"])
                halt_at = spec["time"]
            if spec["decision"] is not None and case.state in credit.FAILURE_STATES:
                decision = {
                    "local_continuation": credit.LocalContinuation(spec["extension"]),
                    "private_investor": credit.PrivateInvestor(spec["approved"]),
                    "dismantle": credit.Dismantle(),
                }[spec["decision"]]
                resolution = credit.resolve_default(case, decision)
                case, ledger_effect = resolution.case, resolution.ledger_effect
                if case.state is not credit.CaseState.RESOLVED_DISMANTLED:
                    halt_at = None
                if resolution.extension > 0:
                    terms, plan = credit.extend_plan(terms, plan, spec["time"], resolution.extension)
        realized = self._realize(loan, terms)
        if halt_at is not None:
            realized = credit.halt_after(realized, halt_at)
        outcome = credit.settle_loan(terms, plan, realized)
        LOANS_SETTLED.labels(kind=terms.kind.value).inc()
        LOAN_TOTAL_REPAID.labels(loan_id=terms.loan_id).set(outcome.total_repaid)
        return {
            "loan_id": outcome.loan_id,
            "A": outcome.market_value,
            "J": outcome.interest,
            "E": outcome.total_repaid,
            "loss": outcome.bank_loss,
            "gain": outcome.bank_gain,
            "state": case.state.value,
            "kind": terms.kind.value,
            "principal": terms.principal,
            "pi_total": outcome.pi_total,
            "coverage_error": outcome.coverage_error,
            "ledger_effect": ledger_effect,
            "payments": outcome.payments,
            "instants": plan.instants + plan.interest_instants,
        }

    def loan_settle(self) -> None:
        rows, payments = [], []
        for loan in self._loans():
            row = self._settle_one(loan)
            for k, (instant, amount) in enumerate(zip(row.pop("instants"), row.pop("payments"))):
                payments.append({"loan_id": row["loan_id"], "index": k + 1, "instant": instant, "payment": amount})
            rows.append(row)
        columns = ["loan_id", "A", "J", "E", "loss", "gain", "state", "kind", "principal", "pi_total", "coverage_error", "ledger_effect"]
        self._write("loan_settlements.csv", rows_frame(rows, columns))
        self._write("loan_payments.csv", rows_frame(payments, ["loan_id", "index", "instant", "payment"]))

    # sovereign

    def _bond_inputs(self, bond):
        tax = (
            sovereign.TaxProcess.constant(bond.tax_level)
            if bond.tax_csv is None
            else sovereign.TaxProcess.from_csv(str(bond.tax_csv))
        )
        if bond.growth_kind == "csv":
            return tax, sovereign.GrowthSurface.from_csv(str(bond.growth_csv))
        end = max(bond.maturities)
        n = max(2, int(np.ceil((end - bond.t) / bond.grid_step - 1e-9)) + 1)
        s_axis = np.linspace(bond.t, end, n)
        t_axis = np.array([bond.t, end])
        if bond.growth_kind == "linear":
            return tax, sovereign.GrowthSurface.linear(bond.growth_rate, bond.growth_slope, t_axis, s_axis)
        return tax, sovereign.GrowthSurface.constant(bond.growth_rate, t_axis, s_axis)

    def _bonds(self):
        return self._selected(self.scenario.bonds, lambda b: b.bond_id, "bond")

    def bond_price(self) -> None:
        rows = []
        for bond in self._bonds():
            tax, growth = self._bond_inputs(bond)
            for q in sovereign.quote_curve(tax, growth, bond.t, bond.maturities, bond.share, bond.discount_convention):
                rows.append({"bond_id": bond.bond_id, "t": q.t, "T": q.maturity, "share": q.share, "price": q.price})
        self._write("bond_quotes.csv", rows_frame(rows, ["bond_id", "t", "T", "share", "price"]))

    def bond_forward(self) -> None:
        rows = []
        for bond in self._bonds():
            tax, growth = self._bond_inputs(bond)
            quotes = sovereign.quote_curve(tax, growth, bond.t, bond.maturities, bond.share, bond.discount_convention)
            implied = sovereign.implied_forward(quotes, bond.discount_convention)
            source = growth.row(bond.t)
            for T, rate in zip(implied.s_axis, implied.values[0]):
                given = float(np.interp(T, growth.s_axis, source))
                rows.append({"bond_id": bond.bond_id, "t": bond.t, "T": T, "f_p": rate, "input_f_p": given, "error": rate - given})
        self._write("bond_forward.csv", rows_frame(rows, ["bond_id", "t", "T", "f_p", "input_f_p", "error"]))

    def gamma(self) -> None:
        cfg = self.scenario.gamma
        if cfg is None:
            raise ConfigError(f"{self.scenario.path} has no [gamma] table")
        beliefs = sovereign.LenderBeliefs(cfg.law, cfg.trend)
        n_samples = self.scenario.paths_for(cfg.samples_per_point)
        curve = sovereign.gamma_curve(beliefs, cfg.times, cfg.maturity, n_samples, self.scenario.seed)
        rates = sovereign.gamma_rate([g.t for g in curve], [g.value for g in curve])
        rows = [
            {"t": g.t, "T": g.maturity, "gamma": g.value, "std_error": g.std_error, "n_samples": g.n_samples, "f_gamma": r}
            for g, r in zip(curve, rates)
        ]
        self._write("gamma.csv", rows_frame(rows, ["t", "T", "gamma", "std_error", "n_samples", "f_gamma"]))

    # hjm

    def _blocks(self) -> List[HJMBlock]:
        return self._selected(self.scenario.hjm.values(), lambda b: b.name, "hjm block")

    @staticmethod
    def _grid(block: HJMBlock) -> TimeGrid:
        return TimeGrid(0.0, block.horizon, block.steps)

    @staticmethod
    def _coefficients(block: HJMBlock) -> hjm.HJMCoefficients:
        return hjm.coefficient_family(block.family, **dict(block.params))

    def _initial_surface(self, block: HJMBlock, grid: TimeGrid) -> hjm.ForwardSurface:
        if block.initial_growth is None:
            return hjm.ForwardSurface.flat(grid, block.initial_rate)
        bond = next(b for b in self.scenario.bonds if b.bond_id == block.initial_growth)
        _, growth = self._bond_inputs(bond)
        return hjm.ForwardSurface.from_growth(growth, grid)

    def hjm_evolve(self) -> None:
        for block in self._blocks():
            grid = self._grid(block)
            coeffs = self._coefficients(block)
            n_paths = self.scenario.paths_for(block.paths)
            initial = self._initial_surface(block, grid)
            ensemble = hjm.evolve_surface(
                coeffs, grid, initial, n_paths,
                seed=self.scenario.seed, observe_times=block.observe or None, threads=self.scenario.threads,
            )
            SIMULATED_PATHS.labels(process=f"hjm.{block.name}").inc(n_paths)
            self._write(f"hjm_{block.name}_mean.csv", ensemble.mean_surface())
            if block.bond_maturity is not None:
                rows = [
                    {"t": t, "T": block.bond_maturity, "mean": est.mean, "std_error": est.std_error}
                    for t, est in hjm.discounted_bond_prices(ensemble, block.bond_maturity)
                ]
                self._write(f"hjm_{block.name}_martingale.csv", rows_frame(rows, ["t", "T", "mean", "std_error"]))

    def hjm_check(self) -> None:
        failed = []
        for block in self._blocks():
            report = hjm.drift_residual(self._coefficients(block), self._grid(block), tolerance=block.tolerance)
            DRIFT_RESIDUAL_MAX.labels(block=block.name).set(report.max_abs)
            self._write(f"hjm_{block.name}_residual.csv", report.rows(), footer=report.summary())
            if report.passed:
                logger.info("Drift condition holds for %s (max |R| = %.3g)", block.name, report.max_abs)
            else:
                failed.append(report)
        if failed:
            raise hjm.DriftConditionError(failed[0])

    def hjm_implied_vol(self) -> None:
        blocks = self._blocks()
        with_growth = [b for b in blocks if b.growth is not None]
        if not with_growth:
            names = ", ".join(f"hjm.{b.name}" for b in blocks) or "no hjm blocks"
            raise ConfigError(f"hjm-implied-vol needs a block with growth_family ({names})")
        for block in with_growth:
            grid = self._grid(block)
            growth = block.growth
            g = hjm.growth_family(growth["family"], rate=growth["rate"], speed=growth["speed"], level=growth["level"])
            alpha_p = hjm.run_growth_model(g, np.full(grid.n_steps + 1, growth["alpha0"]), grid)
            coeffs = self._coefficients(block)
            jump_part = hjm.jump_term(coeffs, grid)[0] if coeffs.has_jumps else None
            half_sq = hjm.implied_diffusion_from_growth(alpha_p, grid, jump_part)
            t, T = np.meshgrid(grid.points, grid.points, indexing="ij")
            mask = hjm.triangle_mask(grid)
            frame = pd.DataFrame({"t": t[mask], "T": T[mask], "alpha_p": alpha_p[mask], "half_s_squared": half_sq[mask]})
            self._write(f"hjm_{block.name}_implied_vol.csv", frame)

    # banks

    def bank_sim(self) -> None:
        cfg = self.scenario.banksim
        if cfg is None:
            raise ConfigError(f"{self.scenario.path} has no [banksim] table")
        system = banksim.BankingSystem(max_ratio=cfg.max_ratio)
        for bank in cfg.banks:
            system.open_bank(bank["id"], bank["deposits"], bank["wealth"], bank["max_ratio"])
        snapshots = system.snapshot(0.0)
        for event in cfg.events:
            before = {b: l.wealth for b, l in system.ledgers.items()}
            banksim.apply_event(system, event)
            if event["kind"] in {"settle_loan", "loss"}:
                lost = before[event["bank"]] - system.ledgers[event["bank"]].wealth
                if lost > 0:
                    BANK_LOSSES_ABSORBED.labels(bank_id=event["bank"]).inc(lost)
            snapshots.extend(system.snapshot(event["time"]))
        if cfg.random_events:
            start = cfg.events[-1]["time"] + 1.0 if cfg.events else 1.0
            banksim.random_events(system, cfg.random_events, self.scenario.seed, start_time=start)
            snapshots.extend(system.snapshot(system.history[-1].time if system.history else start))

        drift = system.total_balance() - system.external_flow
        logger.info("Bank balances drift %.3g from tracked external flows", drift)
        report = banksim.check_compliance(system.history, system.ledgers)
        for rule, count in report.counts().items():
            COMPLIANCE_VIOLATIONS.labels(rule=rule).set(count)

        columns = list(snapshots[0].keys()) if snapshots else ["time", "bank_id"]
        self._write("bank_ledgers.csv", rows_frame(snapshots, columns))
        transfers = [
            {
                "seq": r.seq, "time": r.time, "kind": r.kind.value, "from_id": r.from_id, "to_id": r.to_id,
                "amount": r.amount, "consented": r.consented, "source": r.source, "deposit_base": r.deposit_base,
                "disclosure_seq": r.disclosure_seq, "loan_id": r.loan_id,
            }
            for r in system.history
        ]
        self._write(
            "bank_transfers.csv",
            rows_frame(transfers, ["seq", "time", "kind", "from_id", "to_id", "amount", "consented", "source",
                                   "deposit_base", "disclosure_seq", "loan_id"]),
        )
        self._write("bank_compliance.csv", report.to_frame())
        if not report.clean:
            raise banksim.ComplianceViolationsFound(report)

    def golden_motivation(self) -> None:
        terms, plan, outcome = credit.motivation_example()
        self.written.append(write_json(self.out_dir / "golden_motivation.json", {
            "principal": terms.principal,
            "rpr": list(plan.rpr),
            "interest_rates": list(plan.interest_rates),
            "market_value": outcome.market_value,
            "interest": outcome.interest,
            "total_repaid": outcome.total_repaid,
            "bank_loss": outcome.bank_loss,
            "bank_gain": outcome.bank_gain,
        }))
