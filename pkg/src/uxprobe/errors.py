"""Exception hierarchy shared across the package."""


class UXProbeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(UXProbeError):
    """Invalid experiment configuration (bad dimensions, goals, bounds)."""


class GatewayError(UXProbeError):
    """Chat gateway failure."""


class TransportError(GatewayError):
    """Retryable network/transport failure talking to a provider."""


class ProviderPayloadError(GatewayError):
    """Provider returned a payload we cannot interpret. Not retryable."""


class TranscriptError(GatewayError):
    """Scripted mock could not serve a request (no matching entry left)."""


class EnvironmentError_(UXProbeError):
    """Browser/snapshot environment failure (page load, protocol error)."""


class ActionError(EnvironmentError_):
    """An agent action could not be executed (stale index, bad payload).

    Recorded in the step event's error field; the run continues.
    """


class DecisionParseError(UXProbeError):
    """Agent completion did not contain a valid decision block."""


class AnnotationError(UXProbeError):
    """Annotation output stayed invalid after the corrective re-prompt."""


class SchemaViolation(UXProbeError):
    """A structured payload violated its schema (recoverable by re-prompt)."""


class SelectorError(UXProbeError):
    """CSS selector is syntactically invalid or uses unsupported features."""


class PatchError(UXProbeError):
    """A DOM patch could not be applied (target missing, bad fragment)."""


class EditError(UXProbeError):
    """Editing session failure after the corrective re-prompt."""


class PreviewError(UXProbeError):
    """Replay preview failure (missing prompt state, parse failure)."""


class IntegrityError(UXProbeError):
    """Stored content failed its content-hash check."""


class StorageError(UXProbeError):
    """Persistence failure. Aborts the run; partial logs are retained."""


class QueryError(UXProbeError):
    """Invalid filter or query parameter in an analysis request."""
