"""Exception types shared across the tracking pipeline."""


class TrackerError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(TrackerError):
    """Invalid configuration value or mismatched model/feature dimensions."""


class DegenerateStateError(TrackerError):
    """Target state too small or empty to sample around or featurize."""


class InitializationError(TrackerError):
    """Bootstrap could not assemble the required training samples."""


class NoPositiveError(TrackerError):
    """No positively labeled candidate was available for state estimation."""


class DataError(TrackerError):
    """Non-finite or otherwise unusable numeric data."""


class FormatError(TrackerError):
    """Malformed sequence directory, ground-truth file, or config file."""


class EvaluationError(TrackerError):
    """Evaluation requested on empty or inconsistent inputs."""
