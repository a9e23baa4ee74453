from prometheus_client import CollectorRegistry, Counter, Gauge

# Run metrics live in their own registry; nothing is exported unless --metrics is given
REGISTRY = CollectorRegistry()

# Simulation metrics
SIMULATED_PATHS = Counter(
    'prodcredit_simulated_paths_total',
    'Monte Carlo paths simulated per process',
    ['process'],
    registry=REGISTRY,
)

# Credit metrics
LOANS_SETTLED = Counter(
    'prodcredit_loans_settled_total',
    'Loans settled against a realized path',
    ['kind'],
    registry=REGISTRY,
)
LOAN_TOTAL_REPAID = Gauge(
    'prodcredit_loan_total_repaid',
    'Currency value repaid on the most recent settlement of a loan',
    ['loan_id'],
    registry=REGISTRY,
)

# Bank metrics
BANK_LOSSES_ABSORBED = Counter(
    'prodcredit_bank_losses_absorbed_total',
    'Currency amount of loan losses absorbed by bank wealth',
    ['bank_id'],
    registry=REGISTRY,
)
COMPLIANCE_VIOLATIONS = Gauge(
    'prodcredit_compliance_violations',
    'Compliance violations found in the last bank simulation, per rule',
    ['rule'],
    registry=REGISTRY,
)

# HJM metrics
DRIFT_RESIDUAL_MAX = Gauge(
    'prodcredit_drift_residual_max_abs',
    'Largest absolute drift-condition residual on the grid',
    ['block'],
    registry=REGISTRY,
)

# Command metrics
COMMAND_DURATION = Gauge(
    'prodcredit_command_duration_seconds',
    'Duration of the most recent command run',
    ['command'],
    registry=REGISTRY,
)
COMMAND_ERRORS = Counter(
    'prodcredit_command_errors_total',
    'Total command errors',
    ['command', 'stage'],
    registry=REGISTRY,
)
