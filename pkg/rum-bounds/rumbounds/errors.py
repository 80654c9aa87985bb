"""Exception hierarchy shared by the library and the command line."""

EXIT_OK = 0
EXIT_NOT_RATIONALIZABLE = 1
EXIT_INPUT_ERROR = 2
EXIT_INFEASIBLE_OBSERVABLES = 3


class RumBoundsError(Exception):
    """Base error. Carries a machine-readable code and the CLI exit code."""

    code = "error"
    exit_code = EXIT_INPUT_ERROR

    def __init__(self, message: str, detail: str | None = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def to_payload(self) -> dict[str, str | None]:
        """Error body in the shape printed by the CLI."""
        return {"error": self.message, "detail": self.detail, "code": self.code}


class InputError(RumBoundsError, ValueError):
    """Malformed or inconsistent user input."""

    code = "input_error"


class ProbabilityError(InputError):
    """A probability vector failed alignment, range or normalization checks."""

    code = "probability_error"

    def __init__(self, message: str, block: int | None = None, budget_id: str | None = None):
        super().__init__(message)
        self.block = block
        self.budget_id = budget_id


class NotOnAnyBudget(InputError):
    """A bundle lies on none of the budget planes."""

    code = "not_on_any_budget"


class IncompleteAssignment(InputError):
    """A patch assignment leaves at least one budget unassigned."""

    code = "incomplete_assignment"


class ColumnLimitExceeded(RumBoundsError):
    """Type enumeration would exceed the configured column cap."""

    code = "column_limit_exceeded"

    def __init__(self, cap: int):
        super().__init__(f"Rational type enumeration exceeded the cap of {cap} columns", detail=f"max_types={cap}")
        self.cap = cap


class SizeCapExceeded(RumBoundsError):
    """A brute-force reference computation is too large to run."""

    code = "size_cap_exceeded"


class SolverError(RumBoundsError):
    """The simplex engine failed (iteration cap, verification failure)."""

    code = "solver_error"


class InfeasibleObservables(RumBoundsError):
    """Observed demand admits no mixture of rational types."""

    code = "infeasible_observables"
    exit_code = EXIT_INFEASIBLE_OBSERVABLES

    def __init__(self, l1_residual: float | None = None):
        detail = None if l1_residual is None else f"l1 residual {l1_residual:.12g}"
        super().__init__("Observed demand is not rationalizable", detail=detail)
        self.l1_residual = l1_residual
