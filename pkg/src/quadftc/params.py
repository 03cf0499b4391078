"""Physical constants of the airframe and propellers."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np


class InvalidParams(ValueError):
    pass


@dataclass(frozen=True)
class QuadParams:
    """Mass, inertia, geometry and blade constants.

    Defaults describe a 1.5 kg, 250-size airframe. ``omega_max`` is set so
    that hover needs roughly 55 % of full rotor speed.
    """

    mass: float = 1.5
    g: float = 9.81
    Jx: float = 0.025
    Jy: float = 0.025
    Jz: float = 0.045
    Jxz: float = 0.0
    Ld: float = 0.25
    Lx: float = 0.25 / math.sqrt(2.0)
    Ly: float = 0.25 / math.sqrt(2.0)
    c_torque: float = 0.05
    rho: float = 1.225
    a_lift: float = 5.7
    n_blades: float = 2.0
    chord: float = 0.02
    R_rotor: float = 0.12
    theta0: float = 0.20
    theta1: float = -0.05
    omega_max: float = 965.0
    # Literal reading of the yaw column: N = c * (F1 + F2 + F3 + F4).
    yaw_moment_literal: bool = False
    # Use (U^2 + V^2) instead of (U + V)^2 in the translational thrust term.
    thrust_translation_sum_of_squares: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                continue
            if not math.isfinite(v):
                raise InvalidParams(f"{f.name} must be finite, got {v}")
        if self.mass <= 0:
            raise InvalidParams(f"mass must be > 0, got {self.mass}")
        for name in ("Jx", "Jy", "Jz"):
            if getattr(self, name) <= 0:
                raise InvalidParams(f"{name} must be > 0")
        if self.Jxz ** 2 >= self.Jx * self.Jz:
            raise InvalidParams("inertia tensor is not positive definite (Jxz^2 >= Jx*Jz)")
        for name in ("Lx", "Ly", "Ld", "c_torque", "rho", "a_lift", "chord", "R_rotor", "omega_max"):
            if getattr(self, name) <= 0:
                raise InvalidParams(f"{name} must be > 0")
        if self.n_blades <= 0:
            raise InvalidParams("n_blades must be > 0")

    @property
    def thrust_coeff(self) -> float:
        """Leading factor rho*a*b*c*R/4 of the blade-element thrust."""
        return self.rho * self.a_lift * self.n_blades * self.chord * self.R_rotor / 4.0

    def as_vector(self) -> np.ndarray:
        """Pack into the flat float64 layout the integration kernels read."""
        return np.array([float(getattr(self, name)) for name in PARAM_VECTOR_FIELDS], dtype=np.float64)


# Order matters: the compiled kernel indexes this vector by position.
PARAM_VECTOR_FIELDS = (
    "mass", "g", "Jx", "Jy", "Jz", "Jxz", "Lx", "Ly", "Ld", "c_torque",
    "rho", "a_lift", "n_blades", "chord", "R_rotor", "theta0", "theta1",
    "omega_max", "yaw_moment_literal", "thrust_translation_sum_of_squares",
)
