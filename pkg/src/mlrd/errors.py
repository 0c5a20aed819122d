"""Exception hierarchy.

Every error raised deliberately by the toolkit derives from :class:`MLRDError`
and carries a short machine-readable ``code`` used by the command line front
end when it emits an error document.
"""


class MLRDError(Exception):
    code = "error"

    def to_dict(self):
        return {"error": self.code, "type": type(self).__name__, "message": str(self)}


class DomainError(MLRDError, ValueError):
    """An argument lies outside the domain of the operation."""

    code = "domain"


class ConfigurationError(MLRDError, ValueError):
    """Invalid configuration or process specification."""

    code = "configuration"


class FactorizationError(MLRDError, ArithmeticError):
    """A matrix factorization (eigen/Cholesky) failed its preconditions."""

    code = "factorization"


class HypothesisError(MLRDError, ValueError):
    """A hypothesis of the limit result does not hold for the requested experiment."""

    code = "hypothesis"


class ContractError(MLRDError, TypeError):
    code = "contract"


class RankUndeterminedError(MLRDError, ValueError):
    code = "rank_undetermined"


class UnsupportedOrderError(MLRDError, ValueError):
    code = "unsupported_order"


class SingularityError(DomainError):
    code = "singularity"


class EvaluationError(MLRDError, ArithmeticError):
    code = "evaluation"
