"""Exception hierarchy shared across the package.

The CLI maps ConfigurationError to exit status 2 and every other
MbcError to exit status 1.
"""

from __future__ import annotations


class MbcError(Exception):
    """Base class for all domain errors raised by this package."""


class MalformedInputError(MbcError):
    """Raw input text could not be parsed into a background check."""


class ConfigurationError(MbcError):
    """Missing or inconsistent configuration: manifests, providers, templates."""


class IntegrityError(MbcError):
    """Dataset-level consistency violation, e.g. duplicate source names."""


class ValidationError(MbcError):
    """Caller-supplied value violates a documented constraint."""


class ProviderError(MbcError):
    """Transient failure reported by an external provider. Retried internally;
    surfaces as a stage-specific error once retries are exhausted."""


class ProviderRateLimited(ProviderError):
    """Provider signalled quota exhaustion or throttling."""


class RetrievalError(MbcError):
    """Search round failed after retries. Carries the query label."""

    def __init__(self, message: str, query_label: str | None = None):
        super().__init__(message)
        self.query_label = query_label


class RateLimitError(RetrievalError):
    """Search round failed because the provider quota ran out."""


class ExtractionError(MbcError):
    """Answer extraction failed after retries."""


class TemplateError(MbcError):
    """A prompt template binding is missing or malformed."""


class GenerationError(MbcError):
    """Chat completion for a draft failed after retries."""


class ExpansionError(GenerationError):
    """Chat completion for an expansion round failed after retries."""


class ResponseParseError(GenerationError):
    """Strict-mode response parsing found no recognisable draft marker."""


class PipelineError(MbcError):
    """A pipeline stage aborted. Names the stage and, when applicable,
    the query label of the round that failed; `partial` holds the last
    good draft so callers can persist it for inspection."""

    def __init__(
        self,
        message: str,
        stage: str,
        query_label: str | None = None,
        partial=None,
    ):
        super().__init__(message)
        self.stage = stage
        self.query_label = query_label
        self.partial = partial
