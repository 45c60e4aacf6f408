from typing import Any, Dict, Optional


class ScoreFillError(Exception):
    """Base error for every failure the library reports to its callers.

    Carries a short machine-readable ``code`` plus a ``details`` dict so the
    CLI, the API and the experiment report can all emit the same record.
    """

    code = "error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = dict(details or {})

    def to_record(self) -> Dict[str, Any]:
        return {"error": self.code, "message": self.message, "details": self.details}


class ParseError(ScoreFillError):
    code = "parse_error"

    def __init__(self, message: str, line: Optional[int] = None, details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        if line is not None:
            details["line"] = line
            message = f"line {line}: {message}"
        super().__init__(message, details)
        self.line = line


class RejectedRowError(ScoreFillError):
    code = "rejected_row"


class ConfigError(ScoreFillError):
    code = "config_error"


class SplitError(ScoreFillError):
    code = "split_error"


class BalanceError(ScoreFillError):
    code = "balance_error"


class SimulationError(ScoreFillError):
    code = "simulation_error"


class PreconditionError(ScoreFillError):
    code = "precondition_error"


class FitError(ScoreFillError):
    code = "fit_error"


class TransformError(ScoreFillError):
    code = "transform_error"


class FusionError(ScoreFillError):
    code = "fusion_error"


class MetricError(ScoreFillError):
    code = "metric_error"


class ComparisonError(ScoreFillError):
    code = "comparison_error"
