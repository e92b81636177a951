"""Exception types shared across the simulator."""


class DegeneratePoseError(ValueError):
    """Camera forward axis is (numerically) parallel to the world up axis."""


class DegenerateConfigurationError(ValueError):
    """Too few or collinear/coincident correspondences for alignment."""


class MapParseError(ValueError):
    """Malformed map file; message carries the offending line number."""


class InvalidEndpointError(ValueError):
    """Path query endpoint lies outside navigable space."""


class EmptyMapError(ValueError):
    """Grid has no navigable cell."""


class InfeasibleMapError(RuntimeError):
    """Episode rejection sampling exceeded its rejection budget."""


class EmptyDatabaseError(ValueError):
    """Observation database contains no records."""


class SfmParseError(ValueError):
    """Malformed SfM images file; message carries the offending line number."""


class ProtocolError(RuntimeError):
    """Policy wire protocol violation (bad frame, wrong kind, timeout)."""


class AbortedEpisodeError(RuntimeError):
    """Episode could not complete because the policy failed."""


class NoEpisodesError(ValueError):
    """Evaluation input contains no completed episodes."""
