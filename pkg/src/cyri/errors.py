"""Exception types shared across the package.

Every error raised by the pipeline derives from CyriError and carries a
``stage`` tag so callers (CLI, HTTP API) can report which part of the
pipeline failed.
"""


class CyriError(Exception):
    """Base class for all package errors."""

    stage = "cyri"


# --- ingest ---------------------------------------------------------------

class MalformedMessage(CyriError):
    """Raw bytes could not be parsed as an RFC-822/MIME message."""

    stage = "ingest"


class EmptyBody(CyriError):
    """Message has neither a text nor an HTML body part."""

    stage = "ingest"


# --- enrichment -----------------------------------------------------------

class ConfigMissing(CyriError):
    """Live threat-intel lookups requested but no credentials configured."""

    stage = "enrichment"


# --- prompt building ------------------------------------------------------

class ContextInvalid(CyriError):
    """A prompt template slot is missing or the context is unusable."""

    stage = "prompt"


class NoAnalysis(CyriError):
    """Conversation requested for an email that has not been analyzed."""

    stage = "conversation"


# --- LLM gateway ----------------------------------------------------------

class GatewayError(CyriError):
    stage = "gateway"


class BackendUnreachable(GatewayError):
    """The completion backend could not be reached."""


class Timeout(GatewayError):
    """The completion backend did not answer within the configured window."""


class FixtureMissing(GatewayError):
    """Replay backend has no recorded completion for this prompt hash."""


class TruncatedOutput(GatewayError):
    """The model stopped on length; the caller may retry with more tokens."""

    def __init__(self, message, partial_text=""):
        super().__init__(message)
        self.partial_text = partial_text


# --- analysis parsing -----------------------------------------------------

class ParseError(CyriError):
    stage = "parse"


class NoVerdictLine(ParseError):
    """No verdict pattern found in the first lines of the model output."""


class PercentOutOfRange(ParseError):
    """Verdict percentage falls outside 0-100."""


# --- scoring --------------------------------------------------------------

class OutOfRange(CyriError):
    """Percentage outside 0-100 passed to the categorizer."""

    stage = "scoring"


class UnknownFeature(CyriError):
    """A feature name that is not in the catalog reached the scorer."""

    stage = "scoring"


# --- store ----------------------------------------------------------------

class StoreError(CyriError):
    stage = "store"


class CorruptRecord(StoreError):
    """A bundle file on disk is unreadable; it has been quarantined."""


class SchemaVersionError(StoreError):
    """A bundle carries a schema version this build does not understand."""


# --- evaluation -----------------------------------------------------------

class LengthMismatch(CyriError):
    """Prediction and gold lists differ in length."""

    stage = "eval"


class EmptyDataset(CyriError):
    """No records to evaluate."""

    stage = "eval"


# --- config / service -----------------------------------------------------

class BadConfig(CyriError):
    stage = "config"


class PortInUse(CyriError):
    stage = "serve"
