"""Shared exception types."""


class DiaforgeError(Exception):
    """Base class for all package errors."""


class ConfigError(DiaforgeError):
    """Bad or inconsistent configuration input (banks, profiles, recipes, templates)."""


class CapacityError(DiaforgeError):
    """A draw asked for more phrases than a discipline holds."""


class FamilyDetectionError(DiaforgeError):
    """Source has no recognizable diagram header directive."""


class InversionError(DiaforgeError):
    """Description text does not follow the template grammar."""


class DerivationError(DiaforgeError):
    """Document does not satisfy the preconditions for triplet removal."""


class TaskBuildError(DiaforgeError):
    """A task instance could not be assembled from the given samples."""


class ParameterError(DiaforgeError):
    """Transform parameters outside their documented ranges."""
