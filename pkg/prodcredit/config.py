import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import toml

from prodcredit.credit import DEFAULT_INTEREST_RATIO, LoanKind, LoanTerms, SamplingConfig
from prodcredit.errors import ConfigError
from prodcredit.stochastics import DiffusionSpec, JumpSpec, ProcessModel, SampleLaw

DEFAULT_PATHS = 10_000
DEFAULT_STEPS_PER_YEAR = 100
DEFAULT_OUTPUT_DIR = "out"

SCENARIO_KEYS = {"seed", "paths", "steps_per_year", "threads", "log_level"}
PROCESS_KEYS = {"kind", "x0", "rate", "mu", "sigma", "cumulative", "jumps"}
JUMP_KEYS = {"intensity", "compensated", "law", "value", "mean", "std", "low", "high", "samples"}
LAW_KEYS = {"law", "value", "mean", "std", "low", "high", "samples"}
LOAN_KEYS = {
    "id", "kind", "principal", "horizon", "n_repayments", "interest_period", "n_interest_payments",
    "interest_ratio", "start_offset", "productivity", "price_ratio", "income", "fraction", "default",
}
DEFAULT_KEYS = {"failure", "time", "decision", "extension", "approved", "salvage_value", "dismantle_cost"}
BOND_KEYS = {
    "id", "t", "maturities", "share", "discount_convention", "tax_level", "tax_csv",
    "growth_kind", "growth_rate", "growth_slope", "growth_csv", "grid_step",
}
GAMMA_KEYS = LAW_KEYS | {"trend", "maturity", "times", "samples_per_point"}
HJM_KEYS = {
    "family", "sigma0", "intensity", "jump_mean", "jump_std", "path", "alpha_shift", "horizon", "steps",
    "initial_rate", "initial_growth", "paths", "observe", "bond_maturity", "tolerance",
    "growth_family", "growth_rate", "growth_speed", "growth_level", "growth_alpha0",
}
BANKSIM_KEYS = {"max_ratio", "random_events", "banks", "events"}
BANK_KEYS = {"id", "deposits", "wealth", "max_ratio"}
EVENT_KEYS = {
    "kind", "bank", "to", "amount", "source", "loan_id", "total_repaid", "time", "consented",
    "funds_from", "count_interbank_in_base", "skip_disclosure", "from_interbank", "max_ratio",
}
EVENT_REQUIRED = {
    "move_deposit": ("to", "amount"),
    "interbank_loan": ("to", "amount"),
    "repay_interbank": ("to", "amount"),
    "settle_loan": ("loan_id", "total_repaid"),
}
OUTPUT_KEYS = {"dir"}
TOP_KEYS = {"scenario", "processes", "loans", "bonds", "gamma", "hjm", "banksim", "output"}

PROCESS_KINDS = {"constant", "linear", "gbm"}
LAW_KINDS = {"point", "normal", "uniform", "exponential", "empirical"}
FAILURES = {"production_stopped", "misconduct", "job_loss", "willful_breach"}
DECISIONS = {"local_continuation", "private_investor", "dismantle"}
GROWTH_KINDS = {"constant", "linear", "csv"}
HJM_FAMILIES = {"zero", "ho_lee", "ho_lee_jump", "custom"}
GROWTH_FAMILIES = {"zero", "constant", "mean_reversion"}
EVENT_KINDS = {"deposit", "move_deposit", "loan", "interbank_loan", "repay_interbank", "settle_loan", "loss"}


@dataclass
class LoanConfig:
    terms: LoanTerms
    productivity: Optional[str] = None
    price_ratio: Optional[str] = None
    income: Optional[str] = None
    fraction: Optional[float] = None
    default: Optional[Dict[str, Any]] = None


@dataclass
class BondConfig:
    bond_id: str
    t: float
    maturities: List[float]
    share: float
    discount_convention: bool
    tax_level: Optional[float]
    tax_csv: Optional[Path]
    growth_kind: str
    growth_rate: float
    growth_slope: float
    growth_csv: Optional[Path]
    grid_step: float


@dataclass
class GammaConfig:
    law: SampleLaw
    trend: float
    maturity: float
    times: List[float]
    samples_per_point: Optional[int] = None


@dataclass
class HJMBlock:
    name: str
    family: str
    params: Dict[str, Any]
    horizon: float
    steps: int
    initial_rate: float
    paths: Optional[int]
    observe: List[float]
    bond_maturity: Optional[float]
    tolerance: float
    growth: Optional[Dict[str, Any]] = None
    initial_growth: Optional[str] = None


@dataclass
class BankSimConfig:
    max_ratio: float
    random_events: int
    banks: List[Dict[str, Any]] = field(default_factory=list)
    events: List[Dict[str, Any]] = field(default_factory=list)


class Scenario:
    """A validated scenario file. Every table has a fixed key set."""

    def __init__(self, path: Path):
        self.path = Path(path)
        data = self._load(self.path)
        self._check_keys(data, TOP_KEYS, "")

        scenario = self._table(data.get("scenario", {}), "scenario")
        self._check_keys(scenario, SCENARIO_KEYS, "scenario")
        self.seed = self._seed(scenario.get("seed", 0), "scenario.seed")
        self.paths = self._positive_int(scenario.get("paths", DEFAULT_PATHS), "scenario.paths")
        self.paths_overridden = False
        self.steps_per_year = self._positive_int(
            scenario.get("steps_per_year", DEFAULT_STEPS_PER_YEAR), "scenario.steps_per_year"
        )
        self.threads = self._positive_int(scenario.get("threads", os.cpu_count() or 1), "scenario.threads")
        self.log_level = self._optional_str(scenario.get("log_level", "INFO"), "scenario.log_level")

        self.processes: Dict[str, ProcessModel] = {}
        for name, raw in self._table(data.get("processes", {}), "processes").items():
            self.processes[name] = self._process(name, self._table(raw, f"processes.{name}"))

        self.loans: List[LoanConfig] = []
        seen_loans: set = set()
        for i, raw in enumerate(self._table_list(data.get("loans", []), "loans")):
            loan = self._loan(raw, f"loans[{i}]")
            if loan.terms.loan_id in seen_loans:
                raise ConfigError(f"loans[{i}].id: duplicate loan id {loan.terms.loan_id!r}")
            seen_loans.add(loan.terms.loan_id)
            self.loans.append(loan)

        self.bonds: List[BondConfig] = [
            self._bond(raw, f"bonds[{i}]") for i, raw in enumerate(self._table_list(data.get("bonds", []), "bonds"))
        ]
        self.gamma: Optional[GammaConfig] = None
        if "gamma" in data:
            self.gamma = self._gamma(self._table(data["gamma"], "gamma"))
        self.hjm: Dict[str, HJMBlock] = {
            name: self._hjm(name, self._table(raw, f"hjm.{name}"))
            for name, raw in self._table(data.get("hjm", {}), "hjm").items()
        }
        self.banksim: Optional[BankSimConfig] = None
        if "banksim" in data:
            self.banksim = self._banksim(self._table(data["banksim"], "banksim"))

        output = self._table(data.get("output", {}), "output")
        self._check_keys(output, OUTPUT_KEYS, "output")
        out_dir = Path(self._optional_str(output.get("dir", DEFAULT_OUTPUT_DIR), "output.dir"))
        self.output_dir = out_dir if out_dir.is_absolute() else self.path.parent / out_dir

    def sampling(self) -> SamplingConfig:
        return SamplingConfig(
            n_paths=self.paths, seed=self.seed, steps_per_year=self.steps_per_year, threads=self.threads
        )

    def override(self, seed=None, paths=None, threads=None, out=None) -> "Scenario":
        """Apply command-line overrides in place."""
        if seed is not None:
            self.seed = self._seed(seed, "--seed")
        if paths is not None:
            self.paths = self._positive_int(paths, "--paths")
            self.paths_overridden = True
        if threads is not None:
            self.threads = self._positive_int(threads, "--threads")
        if out is not None:
            self.output_dir = Path(out)
        return self

    def paths_for(self, explicit: Optional[int]) -> int:
        """Path count for a table with its own setting; --paths wins over both."""
        if explicit is None or self.paths_overridden:
            return self.paths
        return explicit

    @staticmethod
    def _load(path: Path) -> Dict[str, Any]:
        if not path.is_file():
            raise ConfigError(f"scenario file {path} does not exist")
        try:
            import tomli
        except ImportError:
            try:
                return toml.load(path)
            except toml.TomlDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        with open(path, "rb") as f:
            try:
                return tomli.load(f)
            except tomli.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc

    def _process(self, name: str, raw: Dict[str, Any]) -> ProcessModel:
        where = f"processes.{name}"
        self._check_keys(raw, PROCESS_KEYS, where)
        kind = self._choice(raw.get("kind"), PROCESS_KINDS, f"{where}.kind")
        x0 = self._float(raw.get("x0", 0.0), f"{where}.x0")
        if kind == "constant":
            spec = DiffusionSpec.constant(x0, name=name)
        elif kind == "linear":
            spec = DiffusionSpec.linear(x0, self._float(raw.get("rate"), f"{where}.rate"), name=name)
        else:
            spec = DiffusionSpec.gbm(
                x0,
                self._float(raw.get("mu"), f"{where}.mu"),
                self._non_negative_float(raw.get("sigma"), f"{where}.sigma"),
                name=name,
            )
        jumps = None
        if "jumps" in raw:
            table = self._table(raw["jumps"], f"{where}.jumps")
            self._check_keys(table, JUMP_KEYS, f"{where}.jumps")
            jumps = JumpSpec(
                intensity=self._non_negative_float(table.get("intensity"), f"{where}.jumps.intensity"),
                law=self._law(table, f"{where}.jumps"),
                compensated=self._bool(table.get("compensated", False), f"{where}.jumps.compensated"),
            )
        return ProcessModel(spec, jumps, cumulative=self._bool(raw.get("cumulative", False), f"{where}.cumulative"))

    def _law(self, table: Dict[str, Any], where: str) -> SampleLaw:
        kind = self._choice(table.get("law"), LAW_KINDS, f"{where}.law")
        try:
            if kind == "point":
                return SampleLaw.point(self._float(table.get("value"), f"{where}.value"))
            if kind == "normal":
                return SampleLaw.normal(self._float(table.get("mean"), f"{where}.mean"), self._float(table.get("std"), f"{where}.std"))
            if kind == "uniform":
                return SampleLaw.uniform(self._float(table.get("low"), f"{where}.low"), self._float(table.get("high"), f"{where}.high"))
            if kind == "exponential":
                return SampleLaw.exponential(self._float(table.get("mean"), f"{where}.mean"))
            samples = table.get("samples")
            if not isinstance(samples, list):
                raise ConfigError(f"{where}.samples must be a list of numbers")
            return SampleLaw.empirical([self._float(s, f"{where}.samples") for s in samples])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc

    def _process_ref(self, value: Any, where: str) -> str:
        name = self._optional_str(value, where)
        if name not in self.processes:
            raise ConfigError(f"{where}: unknown process {name!r}")
        return name

    def _loan(self, raw: Any, where: str) -> LoanConfig:
        raw = self._table(raw, where)
        self._check_keys(raw, LOAN_KEYS, where)
        loan_id = self._required_str(raw, "id", where)
        kind = LoanKind(self._choice(raw.get("kind", LoanKind.MATERIAL.value), {k.value for k in LoanKind}, f"{where}.kind"))
        try:
            terms = LoanTerms(
                principal=self._float(raw.get("principal"), f"{where}.principal"),
                horizon=self._float(raw.get("horizon"), f"{where}.horizon"),
                n_repayments=self._positive_int(raw.get("n_repayments", 1), f"{where}.n_repayments"),
                interest_period=self._non_negative_float(raw.get("interest_period", 0.0), f"{where}.interest_period"),
                n_interest_payments=self._positive_int(raw.get("n_interest_payments", 1), f"{where}.n_interest_payments"),
                interest_ratio=self._float(raw.get("interest_ratio", DEFAULT_INTEREST_RATIO), f"{where}.interest_ratio"),
                kind=kind,
                start_offset=self._non_negative_float(raw.get("start_offset", 0.0), f"{where}.start_offset"),
                loan_id=loan_id,
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        loan = LoanConfig(terms=terms)
        if kind is LoanKind.PRIVATE_INCOME:
            loan.income = self._process_ref(raw.get("income"), f"{where}.income")
            loan.fraction = self._float(raw.get("fraction"), f"{where}.fraction")
            if not 0 < loan.fraction < 1:
                raise ConfigError(f"{where}.fraction must lie in (0, 1)")
        else:
            loan.productivity = self._process_ref(raw.get("productivity"), f"{where}.productivity")
            loan.price_ratio = self._process_ref(raw.get("price_ratio"), f"{where}.price_ratio")
        if "default" in raw:
            loan.default = self._default(self._table(raw["default"], f"{where}.default"), f"{where}.default", terms)
        return loan

    def _default(self, raw: Dict[str, Any], where: str, terms: LoanTerms) -> Dict[str, Any]:
        self._check_keys(raw, DEFAULT_KEYS, where)
        kind = terms.kind
        failure = self._choice(raw.get("failure"), FAILURES, f"{where}.failure")
        income_events = {"job_loss", "willful_breach"}
        if (failure in income_events) != (kind is LoanKind.PRIVATE_INCOME):
            raise ConfigError(f"{where}.failure {failure!r} does not apply to {kind.value} loans")
        out = {
            "failure": failure,
            "time": self._non_negative_float(raw.get("time", 0.0), f"{where}.time"),
            "decision": None,
            "extension": self._non_negative_float(raw.get("extension", 0.0), f"{where}.extension"),
            "approved": self._bool(raw.get("approved", False), f"{where}.approved"),
            "salvage_value": self._non_negative_float(raw.get("salvage_value", 0.0), f"{where}.salvage_value"),
            "dismantle_cost": self._non_negative_float(raw.get("dismantle_cost", 0.0), f"{where}.dismantle_cost"),
        }
        if not terms.start_offset <= out["time"] < terms.end:
            raise ConfigError(f"{where}.time must lie within the loan's life [{terms.start_offset:g}, {terms.end:g})")
        if "decision" in raw:
            out["decision"] = self._choice(raw["decision"], DECISIONS, f"{where}.decision")
        return out

    def _bond(self, raw: Any, where: str) -> BondConfig:
        raw = self._table(raw, where)
        self._check_keys(raw, BOND_KEYS, where)
        maturities = raw.get("maturities")
        if not isinstance(maturities, list) or not maturities:
            raise ConfigError(f"{where}.maturities must be a non-empty list of numbers")
        t = self._non_negative_float(raw.get("t", 0.0), f"{where}.t")
        parsed = [self._float(m, f"{where}.maturities") for m in maturities]
        if any(m < t for m in parsed) or any(b <= a for a, b in zip(parsed, parsed[1:])):
            raise ConfigError(f"{where}.maturities must be strictly increasing and not before t")
        if ("tax_level" in raw) == ("tax_csv" in raw):
            raise ConfigError(f"{where}: set exactly one of tax_level and tax_csv")
        growth_kind = self._choice(raw.get("growth_kind", "constant"), GROWTH_KINDS, f"{where}.growth_kind")
        if growth_kind == "csv" and "growth_csv" not in raw:
            raise ConfigError(f"{where}.growth_csv is required when growth_kind is 'csv'")
        return BondConfig(
            bond_id=self._required_str(raw, "id", where),
            t=t,
            maturities=parsed,
            share=self._positive_float(raw.get("share", 0.01), f"{where}.share"),
            discount_convention=self._bool(raw.get("discount_convention", False), f"{where}.discount_convention"),
            tax_level=self._non_negative_float(raw["tax_level"], f"{where}.tax_level") if "tax_level" in raw else None,
            tax_csv=self._path(raw["tax_csv"], f"{where}.tax_csv") if "tax_csv" in raw else None,
            growth_kind=growth_kind,
            growth_rate=self._float(raw.get("growth_rate", 0.0), f"{where}.growth_rate"),
            growth_slope=self._float(raw.get("growth_slope", 0.0), f"{where}.growth_slope"),
            growth_csv=self._path(raw["growth_csv"], f"{where}.growth_csv") if "growth_csv" in raw else None,
            grid_step=self._positive_float(raw.get("grid_step", 0.01), f"{where}.grid_step"),
        )

    def _gamma(self, raw: Dict[str, Any]) -> GammaConfig:
        self._check_keys(raw, GAMMA_KEYS, "gamma")
        times = raw.get("times")
        if not isinstance(times, list) or len(times) < 3:
            raise ConfigError("gamma.times must list at least three times")
        parsed = [self._non_negative_float(t, "gamma.times") for t in times]
        if any(b <= a for a, b in zip(parsed, parsed[1:])):
            raise ConfigError("gamma.times must be strictly increasing")
        return GammaConfig(
            law=self._law(raw, "gamma"),
            trend=self._float(raw.get("trend", 0.0), "gamma.trend"),
            maturity=self._positive_float(raw.get("maturity"), "gamma.maturity"),
            times=parsed,
            samples_per_point=(
                self._positive_int(raw["samples_per_point"], "gamma.samples_per_point")
                if "samples_per_point" in raw
                else None
            ),
        )

    def _hjm(self, name: str, raw: Dict[str, Any]) -> HJMBlock:
        where = f"hjm.{name}"
        self._check_keys(raw, HJM_KEYS, where)
        family = self._choice(raw.get("family"), HJM_FAMILIES, f"{where}.family")
        params: Dict[str, Any] = {"label": name}
        if family in {"ho_lee", "ho_lee_jump"}:
            params["sigma0"] = self._non_negative_float(raw.get("sigma0"), f"{where}.sigma0")
        if family == "ho_lee_jump":
            params["intensity"] = self._non_negative_float(raw.get("intensity"), f"{where}.intensity")
            params["jump_mean"] = self._float(raw.get("jump_mean"), f"{where}.jump_mean")
            params["jump_std"] = self._positive_float(raw.get("jump_std"), f"{where}.jump_std")
        if family == "custom":
            params["path"] = str(self._path(raw.get("path"), f"{where}.path"))
        if "alpha_shift" in raw:
            params["alpha_shift"] = self._float(raw["alpha_shift"], f"{where}.alpha_shift")
        horizon = self._positive_float(raw.get("horizon", 1.0), f"{where}.horizon")
        observe = [self._non_negative_float(t, f"{where}.observe") for t in raw.get("observe", [])]
        if any(t > horizon for t in observe):
            raise ConfigError(f"{where}.observe times must not exceed the horizon {horizon}")
        growth = None
        if "growth_family" in raw:
            growth = {
                "family": self._choice(raw["growth_family"], GROWTH_FAMILIES, f"{where}.growth_family"),
                "rate": self._float(raw.get("growth_rate", 0.0), f"{where}.growth_rate"),
                "speed": self._non_negative_float(raw.get("growth_speed", 0.0), f"{where}.growth_speed"),
                "level": self._float(raw.get("growth_level", 0.0), f"{where}.growth_level"),
                "alpha0": self._float(raw.get("growth_alpha0", 0.0), f"{where}.growth_alpha0"),
            }
        initial_growth = None
        if "initial_growth" in raw:
            if "initial_rate" in raw:
                raise ConfigError(f"{where}: set at most one of initial_rate and initial_growth")
            initial_growth = self._optional_str(raw["initial_growth"], f"{where}.initial_growth")
            if initial_growth not in {b.bond_id for b in self.bonds}:
                raise ConfigError(f"{where}.initial_growth: unknown bond {initial_growth!r}")
        return HJMBlock(
            name=name,
            family=family,
            params=params,
            horizon=horizon,
            steps=self._positive_int(raw.get("steps", 20), f"{where}.steps"),
            initial_rate=self._float(raw.get("initial_rate", 0.0), f"{where}.initial_rate"),
            paths=self._positive_int(raw["paths"], f"{where}.paths") if "paths" in raw else None,
            observe=observe,
            bond_maturity=self._positive_float(raw["bond_maturity"], f"{where}.bond_maturity") if "bond_maturity" in raw else None,
            tolerance=self._positive_float(raw.get("tolerance", 1e-10), f"{where}.tolerance"),
            growth=growth,
            initial_growth=initial_growth,
        )

    def _banksim(self, raw: Dict[str, Any]) -> BankSimConfig:
        self._check_keys(raw, BANKSIM_KEYS, "banksim")
        config = BankSimConfig(
            max_ratio=self._positive_float(raw.get("max_ratio", 1.0), "banksim.max_ratio"),
            random_events=self._non_negative_int(raw.get("random_events", 0), "banksim.random_events"),
        )
        bank_ids = set()
        for i, bank in enumerate(self._table_list(raw.get("banks", []), "banksim.banks")):
            where = f"banksim.banks[{i}]"
            self._check_keys(bank, BANK_KEYS, where)
            bank_id = self._required_str(bank, "id", where)
            if bank_id in bank_ids:
                raise ConfigError(f"{where}.id: duplicate bank id {bank_id!r}")
            bank_ids.add(bank_id)
            config.banks.append({
                "id": bank_id,
                "deposits": self._non_negative_float(bank.get("deposits", 0.0), f"{where}.deposits"),
                "wealth": self._non_negative_float(bank.get("wealth", 0.0), f"{where}.wealth"),
                "max_ratio": self._positive_float(bank.get("max_ratio", config.max_ratio), f"{where}.max_ratio"),
            })
        if config.random_events and len(bank_ids) < 2:
            raise ConfigError("banksim.random_events needs at least two banks")
        last_time = 0.0
        for i, event in enumerate(self._table_list(raw.get("events", []), "banksim.events")):
            where = f"banksim.events[{i}]"
            self._check_keys(event, EVENT_KEYS, where)
            kind = self._choice(event.get("kind"), EVENT_KINDS, f"{where}.kind")
            for key in EVENT_REQUIRED.get(kind, ("amount",)):
                if key not in event:
                    raise ConfigError(f"{where}.{key} is required for {kind} events")
            for ref in ("bank", "to", "funds_from"):
                if ref in event and event[ref] not in bank_ids:
                    raise ConfigError(f"{where}.{ref}: unknown bank {event[ref]!r}")
            if "bank" not in event:
                raise ConfigError(f"{where}.bank is required")
            time = self._non_negative_float(event.get("time", last_time), f"{where}.time")
            if time < last_time:
                raise ConfigError(f"{where}.time: events must be listed in time order")
            last_time = time
            config.events.append(dict(event, time=time))
        return config

    def _path(self, value: Any, name: str) -> Path:
        path = Path(self._optional_str(value, name))
        return path if path.is_absolute() else self.path.parent / path

    @staticmethod
    def _check_keys(table: Dict[str, Any], allowed: set, where: str) -> None:
        unknown = sorted(set(table) - allowed)
        if unknown:
            prefix = f"{where}." if where else ""
            raise ConfigError(f"unknown key {prefix}{unknown[0]}")

    @staticmethod
    def _table(value: Any, name: str) -> Dict[str, Any]:
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be a table")
        return value

    @staticmethod
    def _table_list(value: Any, name: str) -> List[Dict[str, Any]]:
        if not isinstance(value, list) or not all(isinstance(v, dict) for v in value):
            raise ConfigError(f"{name} must be an array of tables")
        return value

    @staticmethod
    def _required_str(data: Dict[str, Any], key: str, where: str) -> str:
        value = data.get(key)
        if not isinstance(value, str) or not value.strip():
            raise ConfigError(f"Missing or invalid required string field: {where}.{key}")
        return value.strip()

    @staticmethod
    def _optional_str(value: Any, name: str) -> str:
        if not isinstance(value, str) or not value.strip():
            raise ConfigError(f"{name} must be a non-empty string")
        return value.strip()

    @staticmethod
    def _choice(value: Any, allowed: set, name: str) -> str:
        if value not in allowed:
            raise ConfigError(f"{name} must be one of {sorted(allowed)}, got {value!r}")
        return value

    @staticmethod
    def _float(value: Any, name: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        return float(value)

    @classmethod
    def _positive_float(cls, value: Any, name: str) -> float:
        parsed = cls._float(value, name)
        if parsed <= 0:
            raise ConfigError(f"{name} must be positive")
        return parsed

    @classmethod
    def _non_negative_float(cls, value: Any, name: str) -> float:
        parsed = cls._float(value, name)
        if parsed < 0:
            raise ConfigError(f"{name} must be non-negative")
        return parsed

    @staticmethod
    def _positive_int(value: Any, name: str) -> int:
        if isinstance(value, bool):
            raise ConfigError(f"{name} must be a positive integer")
        try:
            parsed = int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a positive integer")
        if parsed <= 0 or parsed != value:
            raise ConfigError(f"{name} must be a positive integer")
        return parsed

    @staticmethod
    def _non_negative_int(value: Any, name: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ConfigError(f"{name} must be a non-negative integer")
        return value

    @staticmethod
    def _seed(value: Any, name: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**64:
            raise ConfigError(f"{name} must be an unsigned 64-bit integer")
        return value

    @staticmethod
    def _bool(value: Any, name: str) -> bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be a boolean")
        return value
