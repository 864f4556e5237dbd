"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """Argument lies outside the domain of the requested function."""


class InadmissibleAngleError(DomainError):
    """The discriminant is negative at the requested angle.

    The offending value is kept on ``discriminant`` so callers can report it.
    """

    def __init__(self, theta, discriminant):
        self.theta = theta
        self.discriminant = discriminant
        super().__init__(
            f"angle theta={theta!r} is inadmissible: discriminant={discriminant!r} < 0"
        )


class BranchTrackingError(RuntimeError):
    """Homotopy continuation could not follow the physical root."""


class ContourConfigError(ValueError):
    """Contour truncation or refinement settings cannot reach the tolerance."""


class PrecisionLossError(ArithmeticError):
    """Cancellation in the residue sum exceeded the working precision."""


class EdgeProximityWarning(UserWarning):
    """Evaluation point is within 1e-9 of a spectral edge."""
