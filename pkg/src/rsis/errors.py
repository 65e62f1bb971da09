"""Exception types raised by the runtime, models and harness."""


class RsisError(Exception):
    """Base class for all library errors."""


class DuplicateAddress(RsisError):
    """Two random choices resolved to the same trace address."""


class ObserveInsideScope(RsisError):
    """An observe statement was executed inside an open rejection scope."""


class ProposalSupportViolation(RsisError):
    """A registered proposal does not cover the support of the prior at a site."""


class ScopeIterationCapExceeded(RsisError):
    """A rejection scope reached its iteration cap without accepting.

    Signals an (almost) never-satisfiable condition or a vanishing
    acceptance probability under the active proposal.
    """


class OracleUnavailable(RsisError):
    """The model does not provide closed-form collapsed conditionals."""


class QuadratureNonconvergent(RsisError):
    """Adaptive quadrature could not reach the requested tolerance."""


class AllWeightsZero(RsisError):
    """Every particle weight is zero; no estimate can be formed."""


class EnvelopeInfinite(RsisError):
    """The Gaussian density ratio has no finite maximum (envelope unbounded)."""
