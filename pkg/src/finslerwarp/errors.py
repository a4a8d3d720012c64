"""Exception hierarchy.

Every error carries a machine-readable ``code`` so the CLI can render it
as structured JSON.
"""


class FinslerError(Exception):
    code = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        out = {"code": self.code, "message": self.message}
        out.update({k: v for k, v in self.details.items() if v is not None})
        return out


class InvalidInputError(FinslerError):
    code = "invalid_input"


class ContractError(FinslerError):
    code = "contract_violation"


class SingularDivisionError(FinslerError):
    code = "singular_division"


class DomainError(FinslerError):
    code = "domain_error"


class ParseError(FinslerError):
    """Syntax problem in an expression; ``offset`` is a byte offset."""

    code = "syntax_error"

    def __init__(self, message, offset, **details):
        super().__init__(f"{message} at offset {offset}", offset=offset, **details)
        self.offset = offset


class UnknownIdentifierError(ParseError):
    code = "unknown_identifier"


class NonConstantExponentError(ParseError):
    code = "non_constant_exponent"


class ValidityError(FinslerError):
    code = "validity_failure"


class DegenerateMetricError(FinslerError):
    code = "degenerate_metric"


class QuadratureError(FinslerError):
    code = "quadrature_nonconvergence"


class OracleError(FinslerError):
    code = "oracle_failure"


class FitError(FinslerError):
    code = "fit_failure"


class ForwardImplicationViolation(FinslerError):
    code = "forward_implication_violation"
