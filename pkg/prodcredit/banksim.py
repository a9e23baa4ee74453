"""Bank ledgers with provenance-tagged interbank funds.

Funds a bank receives from another bank are tagged credit_only: they may fund
loans directly but never enter the deposit base. Every loan issuance appends
a public disclosure of outstanding credit over deposits. A bank whose wealth
goes negative collapses, and each interbank lender absorbs the full amount
the collapsed bank still owes it.
"""
from __future__ import annotations

import logging
import threading
from contextlib import ExitStack
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from prodcredit.errors import EXIT_BANK, EXIT_COMPLIANCE, ProdCreditError
from prodcredit.stochastics import block_generators

logger = logging.getLogger(__name__)

DEFAULT_MAX_RATIO = 1.0
CREDIT_ONLY = "credit_only"
EXTERNAL = "external"
BALANCE_TOLERANCE = 1e-9


class BankError(ProdCreditError):
    exit_code = EXIT_BANK


class RefusalError(BankError):
    """Raised when a loan would push the disclosed ratio past the allowed maximum."""

    def __init__(self, bank_id: str, ratio: float, max_ratio: float, reason: str = "ratio"):
        self.bank_id = bank_id
        self.ratio = ratio
        self.max_ratio = max_ratio
        if reason == "ratio":
            message = f"{bank_id}: credit ratio would reach {ratio:.6g}, above the allowed {max_ratio:g}"
        else:
            message = f"{bank_id}: {reason}"
        super().__init__(message)


class ProvenanceError(BankError):
    """Raised when a transfer needs more funds of a given origin than the bank holds."""

    def __init__(self, bank_id: str, requested: float, available: float, what: str):
        self.bank_id = bank_id
        self.requested = requested
        self.available = available
        super().__init__(f"{bank_id}: {what} of {requested:g} requested, only {available:g} available")


class ValidationError(BankError):
    """Raised when a transfer history is not in chronological order."""

    def __init__(self, message: str, index: int):
        self.index = index
        super().__init__(message)


class ComplianceViolationsFound(ProdCreditError):
    exit_code = EXIT_COMPLIANCE

    def __init__(self, report: "ComplianceReport"):
        self.report = report
        super().__init__(f"{len(report.violations)} compliance violation(s): {report.counts()}")


class FundSource(str, Enum):
    DEPOSITS = "deposits"
    INTERBANK = "interbank"


class TransferKind(str, Enum):
    DEPOSIT = "deposit"
    DEPOSIT_MOVE = "deposit_move"
    INTERBANK_LOAN = "interbank_loan"
    INTERBANK_REPAYMENT = "interbank_repayment"
    LOAN_FUNDING = "loan_funding"
    LOAN_SETTLEMENT = "loan_settlement"
    LOSS_ABSORPTION = "loss_absorption"


@dataclass
class InterbankEntry:
    lender_id: str
    amount: float
    used: float = 0.0
    repaid: float = 0.0
    reclassified: float = 0.0
    covered: float = 0.0
    tag: str = CREDIT_ONLY

    @property
    def held(self) -> float:
        return self.amount - self.repaid - self.reclassified

    @property
    def available(self) -> float:
        return self.held - self.used

    @property
    def debt(self) -> float:
        return max(self.amount - self.repaid - self.covered, 0.0)


@dataclass(frozen=True)
class Disclosure:
    seq: int
    time: float
    ratio: float


@dataclass
class OpenLoan:
    loan_id: str
    amount: float
    source: FundSource
    draws: List[tuple] = field(default_factory=list)


@dataclass
class BankLedger:
    bank_id: str
    deposits: float = 0.0
    outstanding_credit: float = 0.0
    wealth: float = 0.0
    max_ratio: float = DEFAULT_MAX_RATIO
    interbank_received: List[InterbankEntry] = field(default_factory=list)
    loans: Dict[str, OpenLoan] = field(default_factory=dict)
    ratio_disclosures: List[Disclosure] = field(default_factory=list)
    collapsed: bool = False
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False, compare=False)

    @property
    def tagged_available(self) -> float:
        return sum(e.available for e in self.interbank_received)

    @property
    def tagged_held(self) -> float:
        return sum(e.held for e in self.interbank_received)

    @property
    def interbank_debt(self) -> float:
        return sum(e.debt for e in self.interbank_received)

    def ratio(self, credit: Optional[float] = None, base: Optional[float] = None) -> float:
        credit = self.outstanding_credit if credit is None else credit
        base = self.deposits if base is None else base
        if base <= 0:
            return 0.0 if credit <= 0 else float("inf")
        return credit / base

    def disclose(self, time: float, ratio: float) -> Disclosure:
        disclosure = Disclosure(seq=len(self.ratio_disclosures), time=time, ratio=ratio)
        self.ratio_disclosures.append(disclosure)
        return disclosure


@dataclass(frozen=True)
class TransferRecord:
    seq: int
    time: float
    kind: TransferKind
    from_id: str
    to_id: str
    amount: float
    consented: bool = True
    source: Optional[str] = None
    deposit_base: Optional[float] = None
    disclosure_seq: Optional[int] = None
    loan_id: Optional[str] = None

    def __post_init__(self):
        if not self.amount > 0:
            raise ValueError(f"transfer amounts must be positive, got {self.amount}")


@dataclass(frozen=True)
class Violation:
    rule: str
    index: int
    seq: int
    bank_id: str
    detail: str


RULES = {
    "a": "interbank funds in a deposit base",
    "b": "deposit moved without consent",
    "c": "loan issued without a matching ratio disclosure",
    "d": "deposits used for a loan at another institute",
}


@dataclass(frozen=True)
class ComplianceReport:
    violations: tuple = ()

    @property
    def clean(self) -> bool:
        return not self.violations

    def counts(self) -> Dict[str, int]:
        out = {rule: 0 for rule in RULES}
        for v in self.violations:
            out[v.rule] += 1
        return out

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(v.index, v.seq, v.rule, v.bank_id, v.detail) for v in self.violations],
            columns=["index", "seq", "rule", "bank_id", "detail"],
        )


class BankingSystem:
    """All ledgers plus the chronological transfer history."""

    def __init__(self, max_ratio: float = DEFAULT_MAX_RATIO):
        self.max_ratio = max_ratio
        self.ledgers: Dict[str, BankLedger] = {}
        self.history: List[TransferRecord] = []
        self.external_flow = 0.0
        self._history_lock = threading.Lock()

    def _record(self, **kwargs) -> TransferRecord:
        with self._history_lock:
            record = TransferRecord(seq=len(self.history), **kwargs)
            self.history.append(record)
        return record

    def _locked(self, *bank_ids: str) -> ExitStack:
        stack = ExitStack()
        for bank_id in sorted(set(bank_ids)):
            stack.enter_context(self.ledger(bank_id).lock)
        return stack

    def ledger(self, bank_id: str) -> BankLedger:
        try:
            return self.ledgers[bank_id]
        except KeyError:
            raise BankError(f"unknown bank {bank_id!r}") from None

    def total_balance(self) -> float:
        return sum(l.deposits + l.wealth + l.tagged_held for l in self.ledgers.values())

    def open_bank(self, bank_id: str, deposits: float = 0.0, wealth: float = 0.0, max_ratio: Optional[float] = None, time: float = 0.0) -> BankLedger:
        if bank_id in self.ledgers:
            raise BankError(f"bank {bank_id!r} already exists")
        if deposits < 0 or wealth < 0:
            raise ValueError(f"{bank_id}: opening balances must be non-negative")
        ledger = BankLedger(bank_id=bank_id, wealth=wealth, max_ratio=self.max_ratio if max_ratio is None else max_ratio)
        self.ledgers[bank_id] = ledger
        self.external_flow += wealth
        if deposits > 0:
            self.deposit(bank_id, deposits, time=time)
        logger.debug("Opened bank %s with deposits %g and wealth %g", bank_id, deposits, wealth)
        return ledger

    def deposit(self, bank_id: str, amount: float, time: float = 0.0, from_interbank: bool = False) -> TransferRecord:
        """Customer deposit; ``from_interbank`` reclassifies tagged funds instead."""
        ledger = self.ledger(bank_id)
        with self._locked(bank_id):
            if from_interbank:
                _draw(ledger, amount, "reclassified")
                ledger.deposits += amount
                return self._record(
                    time=time, kind=TransferKind.DEPOSIT, from_id=bank_id, to_id=bank_id,
                    amount=amount, source=FundSource.INTERBANK.value,
                )
            ledger.deposits += amount
            self.external_flow += amount
            return self._record(time=time, kind=TransferKind.DEPOSIT, from_id=EXTERNAL, to_id=bank_id, amount=amount, source=EXTERNAL)

    def move_deposit(self, from_id: str, to_id: str, amount: float, consented: bool = True, time: float = 0.0) -> TransferRecord:
        source, target = self.ledger(from_id), self.ledger(to_id)
        with self._locked(from_id, to_id):
            if amount > source.deposits + BALANCE_TOLERANCE:
                raise ProvenanceError(from_id, amount, source.deposits, "deposit move")
            source.deposits -= amount
            target.deposits += amount
            if not consented:
                logger.warning("Deposit of %g moved from %s to %s without consent", amount, from_id, to_id)
            return self._record(
                time=time, kind=TransferKind.DEPOSIT_MOVE, from_id=from_id, to_id=to_id,
                amount=amount, consented=consented,
            )

    def issue_loan(
        self,
        bank_id: str,
        amount: float,
        source: FundSource = FundSource.DEPOSITS,
        loan_id: Optional[str] = None,
        time: float = 0.0,
        max_ratio: Optional[float] = None,
        funds_from: Optional[str] = None,
        count_interbank_in_base: bool = False,
        skip_disclosure: bool = False,
    ) -> TransferRecord:
        if not amount > 0:
            raise ValueError(f"{bank_id}: loan amount must be positive")
        source = FundSource(source)
        ledger = self.ledger(bank_id)
        limit = ledger.max_ratio if max_ratio is None else max_ratio
        loan_id = loan_id or f"{bank_id}-loan-{len(self.history)}"
        with self._locked(bank_id):
            if loan_id in ledger.loans:
                raise BankError(f"{bank_id}: loan {loan_id!r} is already open")
            if source is FundSource.INTERBANK and amount > ledger.tagged_available + BALANCE_TOLERANCE:
                raise ProvenanceError(bank_id, amount, ledger.tagged_available, "tagged interbank funding")
            base = ledger.deposits + (ledger.tagged_available if count_interbank_in_base else 0.0)
            ratio = ledger.ratio(ledger.outstanding_credit + amount, base)
            if ratio > limit + BALANCE_TOLERANCE:
                raise RefusalError(bank_id, ratio, limit)
            disclosure = None if skip_disclosure else ledger.disclose(time, ratio)
            loan = OpenLoan(loan_id=loan_id, amount=amount, source=source)
            if source is FundSource.INTERBANK:
                loan.draws = _draw(ledger, amount, "used")
            ledger.outstanding_credit += amount
            ledger.loans[loan_id] = loan
            return self._record(
                time=time,
                kind=TransferKind.LOAN_FUNDING,
                from_id=funds_from or bank_id,
                to_id=bank_id,
                amount=amount,
                source=source.value,
                deposit_base=base,
                disclosure_seq=None if disclosure is None else disclosure.seq,
                loan_id=loan_id,
            )

    def interbank_loan(self, lender_id: str, borrower_id: str, amount: float, time: float = 0.0) -> TransferRecord:
        """Lend from the lender's own wealth; the borrower receives credit_only funds."""
        if not amount > 0:
            raise ValueError("interbank loan amount must be positive")
        if lender_id == borrower_id:
            raise BankError(f"{lender_id}: a bank cannot lend to itself")
        lender, borrower = self.ledger(lender_id), self.ledger(borrower_id)
        with self._locked(lender_id, borrower_id):
            if amount > lender.wealth + BALANCE_TOLERANCE:
                raise RefusalError(lender_id, 0.0, lender.max_ratio, reason=f"wealth {lender.wealth:g} cannot fund {amount:g}")
            ratio = lender.ratio(lender.outstanding_credit + amount)
            if ratio > lender.max_ratio + BALANCE_TOLERANCE:
                raise RefusalError(lender_id, ratio, lender.max_ratio)
            disclosure = lender.disclose(time, ratio)
            lender.wealth -= amount
            lender.outstanding_credit += amount
            borrower.interbank_received.append(InterbankEntry(lender_id=lender_id, amount=amount))
            return self._record(
                time=time, kind=TransferKind.INTERBANK_LOAN, from_id=lender_id, to_id=borrower_id,
                amount=amount, source="wealth", deposit_base=lender.deposits,
                disclosure_seq=disclosure.seq,
            )

    def repay_interbank(self, borrower_id: str, lender_id: str, amount: float, time: float = 0.0) -> TransferRecord:
        """Return unused tagged funds; the lender books them as ordinary wealth."""
        borrower, lender = self.ledger(borrower_id), self.ledger(lender_id)
        with self._locked(borrower_id, lender_id):
            entries = [e for e in borrower.interbank_received if e.lender_id == lender_id]
            available = sum(min(e.available, e.debt) for e in entries)
            if amount > available + BALANCE_TOLERANCE:
                raise ProvenanceError(borrower_id, amount, available, f"repayment to {lender_id}")
            remaining = amount
            for entry in entries:
                part = min(remaining, entry.available, entry.debt)
                entry.repaid += part
                remaining -= part
                if remaining <= 0:
                    break
            lender.wealth += amount
            lender.outstanding_credit = max(lender.outstanding_credit - amount, 0.0)
            return self._record(
                time=time, kind=TransferKind.INTERBANK_REPAYMENT, from_id=borrower_id, to_id=lender_id, amount=amount,
            )

    def settle_loan(self, bank_id: str, loan_id: str, total_repaid: float, time: float = 0.0) -> TransferRecord:
        """Close a loan: principal returns to its funding source, E - C hits wealth."""
        ledger = self.ledger(bank_id)
        with self._locked(bank_id):
            try:
                loan = ledger.loans.pop(loan_id)
            except KeyError:
                raise BankError(f"{bank_id}: no open loan {loan_id!r}") from None
            for index, drawn in loan.draws:
                ledger.interbank_received[index].used -= drawn
            ledger.outstanding_credit = max(ledger.outstanding_credit - loan.amount, 0.0)
            record = self._record(
                time=time, kind=TransferKind.LOAN_SETTLEMENT, from_id=EXTERNAL, to_id=bank_id,
                amount=loan.amount, source=loan.source.value, loan_id=loan_id,
            )
            gain = total_repaid - loan.amount
            if gain > 0:
                ledger.wealth += gain
                self.external_flow += gain
        if gain < 0:
            self.absorb_loss(bank_id, -gain, time=time)
        return record

    def absorb_loss(self, bank_id: str, loss: float, time: float = 0.0) -> BankLedger:
        if loss < 0:
            raise ValueError(f"{bank_id}: a loss cannot be negative")
        ledger = self.ledger(bank_id)
        if loss == 0:
            return ledger
        with self._locked(bank_id):
            ledger.wealth -= loss
            self.external_flow -= loss
            self._record(time=time, kind=TransferKind.LOSS_ABSORPTION, from_id=bank_id, to_id=EXTERNAL, amount=loss)
        self._propagate(bank_id, time)
        return ledger

    def _propagate(self, bank_id: str, time: float) -> None:
        pending = [bank_id]
        while pending:
            current = self.ledger(pending.pop(0))
            if current.wealth >= 0:
                continue
            if not current.collapsed:
                logger.warning("Bank %s collapsed with wealth %g", current.bank_id, current.wealth)
            current.collapsed = True
            if current.interbank_debt <= BALANCE_TOLERANCE:
                continue
            # lenders absorb every unrepaid claim in full
            for entry in list(current.interbank_received):
                share = entry.debt
                if share <= 0:
                    continue
                lender = self.ledger(entry.lender_id)
                with self._locked(current.bank_id, lender.bank_id):
                    entry.covered += share
                    lender.wealth -= share
                    current.wealth += share
                    self._record(
                        time=time, kind=TransferKind.LOSS_ABSORPTION, from_id=lender.bank_id,
                        to_id=current.bank_id, amount=share, source="liability",
                    )
                if lender.wealth < 0:
                    pending.append(lender.bank_id)

    def snapshot(self, time: float) -> List[dict]:
        rows = []
        for bank_id in sorted(self.ledgers):
            l = self.ledgers[bank_id]
            rows.append({
                "time": time,
                "bank_id": bank_id,
                "deposits": l.deposits,
                "outstanding_credit": l.outstanding_credit,
                "wealth": l.wealth,
                "tagged_available": l.tagged_available,
                "tagged_held": l.tagged_held,
                "interbank_debt": l.interbank_debt,
                "ratio": l.ratio(),
                "collapsed": l.collapsed,
            })
        return rows


def _draw(ledger: BankLedger, amount: float, how: str) -> List[tuple]:
    """Take ``amount`` from tagged funds first in, first out."""
    available = ledger.tagged_available
    if amount > available + BALANCE_TOLERANCE:
        raise ProvenanceError(ledger.bank_id, amount, available, "tagged interbank funds")
    draws = []
    remaining = amount
    for index, entry in enumerate(ledger.interbank_received):
        part = min(remaining, entry.available)
        if part <= 0:
            continue
        setattr(entry, how, getattr(entry, how) + part)
        draws.append((index, part))
        remaining -= part
        if remaining <= BALANCE_TOLERANCE:
            break
    return draws


def check_compliance(history: Sequence[TransferRecord], ledgers: Dict[str, BankLedger]) -> ComplianceReport:
    """Replay ``history`` and flag every rule breach it contains."""
    violations: List[Violation] = []
    deposits: Dict[str, float] = {}
    credit: Dict[str, float] = {}
    previous = None
    for index, record in enumerate(history):
        if previous is not None and (record.seq <= previous.seq or record.time < previous.time):
            raise ValidationError(f"transfer history is out of order at record {index} (seq {record.seq})", index)
        previous = record

        def flag(rule: str, bank_id: str, detail: str) -> None:
            violations.append(Violation(rule=rule, index=index, seq=record.seq, bank_id=bank_id, detail=detail))

        if record.kind is TransferKind.DEPOSIT:
            if record.source == FundSource.INTERBANK.value:
                flag("a", record.to_id, f"{record.amount:g} of interbank funds booked as deposits")
            deposits[record.to_id] = deposits.get(record.to_id, 0.0) + record.amount
        elif record.kind is TransferKind.DEPOSIT_MOVE:
            if not record.consented:
                flag("b", record.from_id, f"{record.amount:g} moved to {record.to_id} without consent")
            deposits[record.from_id] = deposits.get(record.from_id, 0.0) - record.amount
            deposits[record.to_id] = deposits.get(record.to_id, 0.0) + record.amount
        elif record.kind is TransferKind.LOAN_FUNDING:
            bank_id = record.to_id
            held = deposits.get(bank_id, 0.0)
            if record.deposit_base is not None and record.deposit_base > held + BALANCE_TOLERANCE:
                flag("a", bank_id, f"deposit base {record.deposit_base:g} exceeds deposits {held:g}")
            if record.source == FundSource.DEPOSITS.value and record.from_id != bank_id:
                flag("d", bank_id, f"loan {record.loan_id} funded from deposits held at {record.from_id}")
            credit[bank_id] = credit.get(bank_id, 0.0) + record.amount
            _check_disclosure(record, ledgers, credit[bank_id], flag)
        elif record.kind is TransferKind.INTERBANK_LOAN:
            credit[record.from_id] = credit.get(record.from_id, 0.0) + record.amount
        elif record.kind is TransferKind.INTERBANK_REPAYMENT:
            credit[record.to_id] = max(credit.get(record.to_id, 0.0) - record.amount, 0.0)
        elif record.kind is TransferKind.LOAN_SETTLEMENT:
            credit[record.to_id] = max(credit.get(record.to_id, 0.0) - record.amount, 0.0)
    report = ComplianceReport(tuple(violations))
    if not report.clean:
        logger.warning("Compliance check found %s", report.counts())
    return report


def _check_disclosure(record: TransferRecord, ledgers: Dict[str, BankLedger], credit: float, flag) -> None:
    bank_id = record.to_id
    if record.disclosure_seq is None:
        flag("c", bank_id, f"loan {record.loan_id} issued without a ratio disclosure")
        return
    ledger = ledgers.get(bank_id)
    disclosures = ledger.ratio_disclosures if ledger is not None else []
    if record.disclosure_seq >= len(disclosures):
        flag("c", bank_id, f"loan {record.loan_id} cites missing disclosure {record.disclosure_seq}")
        return
    base = record.deposit_base or 0.0
    expected = credit / base if base > 0 else (0.0 if credit <= 0 else float("inf"))
    disclosed = disclosures[record.disclosure_seq].ratio
    if not np.isclose(disclosed, expected, rtol=1e-12, atol=BALANCE_TOLERANCE):
        flag("c", bank_id, f"loan {record.loan_id} disclosed ratio {disclosed:g}, books give {expected:g}")


EVENT_KINDS = ("deposit", "move_deposit", "loan", "interbank_loan", "repay_interbank", "settle_loan", "loss")


def apply_event(system: BankingSystem, event: dict) -> Optional[TransferRecord]:
    """Apply one scenario event (a dict with a ``kind`` key)."""
    kind = event["kind"]
    time = float(event.get("time", 0.0))
    if kind == "deposit":
        return system.deposit(event["bank"], float(event["amount"]), time, event.get("from_interbank", False))
    if kind == "move_deposit":
        return system.move_deposit(event["bank"], event["to"], float(event["amount"]), event.get("consented", True), time)
    if kind == "loan":
        return system.issue_loan(
            event["bank"],
            float(event["amount"]),
            FundSource(event.get("source", FundSource.DEPOSITS.value)),
            loan_id=event.get("loan_id"),
            time=time,
            max_ratio=event.get("max_ratio"),
            funds_from=event.get("funds_from"),
            count_interbank_in_base=event.get("count_interbank_in_base", False),
            skip_disclosure=event.get("skip_disclosure", False),
        )
    if kind == "interbank_loan":
        return system.interbank_loan(event["bank"], event["to"], float(event["amount"]), time)
    if kind == "repay_interbank":
        return system.repay_interbank(event["bank"], event["to"], float(event["amount"]), time)
    if kind == "settle_loan":
        return system.settle_loan(event["bank"], event["loan_id"], float(event["total_repaid"]), time)
    if kind == "loss":
        system.absorb_loss(event["bank"], float(event["amount"]), time)
        return None
    raise BankError(f"unknown bank event kind {kind!r}")


def random_events(system: BankingSystem, n_events: int, seed: int, start_time: float = 0.0) -> List[dict]:
    """Drive ``system`` with ``n_events`` clean random events; refused ones are skipped."""
    rng = block_generators(seed, 0, n_streams=1)[0]
    bank_ids = sorted(system.ledgers)
    if len(bank_ids) < 2:
        raise BankError("random events need at least two banks")
    applied = []
    for k in range(n_events):
        event = _random_event(system, bank_ids, rng, start_time + k)
        if event is None:
            continue
        try:
            apply_event(system, event)
        except (RefusalError, ProvenanceError) as exc:
            logger.debug("Skipped random event %s: %s", event, exc)
            continue
        applied.append(event)
    logger.info("Applied %d of %d random bank events", len(applied), n_events)
    return applied


def _random_event(system: BankingSystem, bank_ids: List[str], rng: np.random.Generator, time: float) -> Optional[dict]:
    kind = EVENT_KINDS[int(rng.integers(len(EVENT_KINDS)))]
    bank = bank_ids[int(rng.integers(len(bank_ids)))]
    other = bank_ids[int(rng.integers(len(bank_ids)))]
    ledger = system.ledgers[bank]
    scale = float(rng.uniform(0.05, 0.5))
    if kind == "deposit":
        return {"kind": kind, "bank": bank, "amount": round(100 * scale, 6), "time": time}
    if kind == "move_deposit" and other != bank and ledger.deposits > 0:
        return {"kind": kind, "bank": bank, "to": other, "amount": ledger.deposits * scale, "time": time}
    if kind == "loan":
        if ledger.tagged_available > 0 and rng.random() < 0.5:
            return {"kind": kind, "bank": bank, "amount": ledger.tagged_available * scale, "source": "interbank", "time": time}
        headroom = ledger.max_ratio * ledger.deposits - ledger.outstanding_credit
        if headroom > 0:
            return {"kind": kind, "bank": bank, "amount": headroom * scale, "time": time}
        return None
    if kind == "interbank_loan" and other != bank and ledger.wealth > 0:
        return {"kind": kind, "bank": bank, "to": other, "amount": ledger.wealth * scale, "time": time}
    if kind == "repay_interbank":
        for entry in ledger.interbank_received:
            owed = min(entry.available, entry.debt)
            if owed > 0:
                return {"kind": kind, "bank": bank, "to": entry.lender_id, "amount": owed * scale, "time": time}
        return None
    if kind == "settle_loan" and ledger.loans:
        loan_id = sorted(ledger.loans)[int(rng.integers(len(ledger.loans)))]
        factor = float(rng.uniform(0.8, 1.2))
        return {"kind": kind, "bank": bank, "loan_id": loan_id, "total_repaid": ledger.loans[loan_id].amount * factor, "time": time}
    if kind == "loss" and ledger.wealth > 0:
        return {"kind": kind, "bank": bank, "amount": ledger.wealth * scale * 0.2, "time": time}
    return None


def seeded_violation_events(bank_ids: Sequence[str], time: float = 0.0) -> Dict[str, List[dict]]:
    """One short event list per rule, each committing exactly that breach."""
    a, b = bank_ids[0], bank_ids[1]
    return {
        "a": [
            {"kind": "interbank_loan", "bank": b, "to": a, "amount": 5.0, "time": time},
            {"kind": "loan", "bank": a, "amount": 1.0, "count_interbank_in_base": True, "time": time},
        ],
        "b": [{"kind": "move_deposit", "bank": a, "to": b, "amount": 1.0, "consented": False, "time": time}],
        "c": [{"kind": "loan", "bank": a, "amount": 1.0, "skip_disclosure": True, "time": time}],
        "d": [{"kind": "loan", "bank": a, "amount": 1.0, "funds_from": b, "time": time}],
    }
