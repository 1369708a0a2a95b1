"""Exception hierarchy shared across the package.

The HTTP layer maps these onto status codes; everything below it raises
plain Python exceptions.
"""


class LabelingError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LabelingError):
    """Invalid value or argument combination (HTTP 400)."""


class ConfigurationError(LabelingError):
    """Invalid configuration, e.g. wrong panel size (HTTP 400)."""


class AuthError(LabelingError):
    """Missing, invalid or expired credentials (HTTP 401)."""


class ForbiddenError(LabelingError):
    """Authenticated but not allowed to touch the resource (HTTP 403)."""


class NotFoundError(LabelingError):
    """Unknown id or out-of-range index (HTTP 404)."""


class StateError(LabelingError):
    """Operation not legal in the current lifecycle state (HTTP 409)."""


class ConflictError(LabelingError):
    """Sequence-number gap or replay; client must resync (HTTP 409)."""


class IntegrityError(LabelingError):
    """Dangling reference between stored records (HTTP 409)."""


class IngestionError(LabelingError):
    """Frame corpus failed validation during ingest."""
