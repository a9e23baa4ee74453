"""Root of the prodcredit exception hierarchy.

Each error class carries the process exit code the CLI maps it to. Concrete
errors live next to the code that raises them.
"""

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CREDIT = 4
EXIT_DRIFT_VIOLATED = 5
EXIT_INFEASIBLE_GROWTH = 6
EXIT_PRICING = 7
EXIT_BANK = 8
EXIT_COMPLIANCE = 9


class ProdCreditError(Exception):
    """Base error for all prodcredit failures."""

    exit_code = EXIT_UNEXPECTED


class ConfigError(ProdCreditError, ValueError):
    """Raised when a scenario file cannot be parsed or validated."""

    exit_code = EXIT_CONFIG
