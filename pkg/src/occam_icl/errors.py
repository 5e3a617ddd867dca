"""Exception types shared across the library."""


class DomainError(ValueError):
    """Argument lies outside an operation's mathematical domain."""


class SingularMatrixError(ArithmeticError):
    """Gram matrix is numerically rank-deficient where positive definiteness is required."""


class UnseenContextError(LookupError):
    """Raw n-gram prediction requested for a context with no observed continuation."""


class DegenerateEvidenceError(ArithmeticError):
    """Every hypothesis carries zero likelihood, so the posterior is undefined."""


class DegenerateSupportError(ArithmeticError):
    """Conditioning event has probability zero under the grammar."""


class SequenceParseError(ValueError):
    """Token stream does not segment into well-formed grammar blocks."""


class InconsistentContextError(ValueError):
    """No hypothesis in the family reproduces the labelled examples."""


class InfeasibleSamplingError(RuntimeError):
    """Rejection sampling exceeded its attempt budget."""


class TemplateError(ValueError):
    """Prompt template is missing a required slot."""


class TransportError(RuntimeError):
    """Network-level failure that survived every retry."""


class EndpointError(RuntimeError):
    """HTTP endpoint answered with a terminal non-success status."""

    def __init__(self, status_code: int, detail: str = ""):
        self.status_code = status_code
        super().__init__(f"endpoint returned HTTP {status_code}" + (f": {detail}" if detail else ""))


class ProtocolError(RuntimeError):
    """Endpoint response did not carry a completion in the expected schema."""


class AlignmentError(ValueError):
    """Prompt and result identifiers do not line up."""


class ConfigError(ValueError):
    """Experiment configuration rejected; the message names the offending field."""
