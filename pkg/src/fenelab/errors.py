"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A model or run parameter is outside its documented range."""


class ContractViolationError(ValueError):
    """An argument does not conform to the object it is used with."""


class IllConditionedBasisError(RuntimeError):
    """Orthonormalization failed to reach the Gram tolerance."""


class MassInjectionError(ValueError):
    """A velocity gradient with nonzero trace would inject configuration mass."""


class DiscretizationFailureError(RuntimeError):
    """A structural property of the discretization failed (e.g. spectral gap lost)."""


class CflViolationError(RuntimeError):
    """Requested time step exceeds the advective stability bound."""

    def __init__(self, dt: float, dt_max: float):
        self.dt = dt
        self.dt_max = dt_max
        super().__init__(
            f"dt={dt:g} exceeds the advective CFL bound; use dt <= {dt_max:g}"
        )


class InstabilityError(RuntimeError):
    """Energy grew in a small-data run; the integration is unstable."""
