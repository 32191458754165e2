"""Model parameters for the FENE dumbbell system near equilibrium."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError


@dataclass(frozen=True)
class FeneParams:
    """Physical parameters of the dumbbell model.

    The elastic potential is U(R) = -k log(1 - |R|^2) on the unit ball,
    with equilibrium density psi_inf = (1 - |R|^2)^k normalized to unit
    mass.  The normalization beta = 1, R0 = 1, viscosity = 1 and the drag
    sigma(u) = grad u are fixed; they are stored only so configs are
    self-describing.
    """

    k: float
    d: int = 2
    box_length: float = 64.0 * math.pi
    viscosity: float = 1.0
    beta: float = 1.0
    r0: float = 1.0

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise InvalidParameterError(f"potential strength k must be > 0, got {self.k}")
        if self.d not in (2, 3):
            raise InvalidParameterError(f"dimension d must be 2 or 3, got {self.d}")
        if not self.box_length > 0:
            raise InvalidParameterError(f"box length must be > 0, got {self.box_length}")
        if (self.viscosity, self.beta, self.r0) != (1.0, 1.0, 1.0):
            raise InvalidParameterError("viscosity, beta and R0 are fixed to 1")
