"""Exception types raised across the package."""


class AlphaPIError(Exception):
    """Base class for all package errors."""


class IntegrationBlowup(AlphaPIError):
    """A trajectory produced a non-finite state."""

    def __init__(self, t, message=None):
        self.t = float(t)
        super().__init__(message or f"non-finite state encountered at t = {self.t:.6g} s")


class InsufficientResolution(AlphaPIError):
    """A window has too few sub-steps for the quadrature rule."""


class ExcitationInsufficient(AlphaPIError):
    """The regression matrix is rank deficient beyond what ridge can repair."""

    def __init__(self, message, smallest_singular_value=0.0):
        self.smallest_singular_value = float(smallest_singular_value)
        super().__init__(message)


class StaleData(AlphaPIError):
    """A data set was collected for a different problem than the one being solved."""


class StepFailure(AlphaPIError):
    """A Lyapunov-type linear solve was singular."""


class GammaTooSmall(AlphaPIError):
    """The Riccati iteration diverged, typically because gamma is below the optimum."""


class EngagementTerminal(AlphaPIError):
    """The engagement reached the range guard; raised to stop integration, not a failure."""

    def __init__(self, state):
        self.state = state
        super().__init__(f"range {state.r:.4g} m reached the terminal guard")
