"""Exception types shared across the package."""


class QuadError(Exception):
    """Base class for simulator and agent errors."""


class GimbalLock(QuadError):
    """Pitch is within numerical reach of +/-90 degrees; Euler kinematics undefined."""


class NonFiniteInput(QuadError):
    pass


class Unachievable(QuadError):
    """Hover thrust is not reachable below the rotor speed limit."""


class InvalidCustomState(QuadError):
    pass


class EpisodeFinished(QuadError):
    pass


class AllActionsCrash(QuadError):
    """Every candidate action leads straight to a terminal state."""


class ShapeMismatch(QuadError, ValueError):
    pass


class ArchitectureMismatch(QuadError, ValueError):
    pass


class InsufficientData(QuadError):
    pass


class ConfigError(QuadError, ValueError):
    pass
