"""6-DOF VTOL rigid body: position, velocity, attitude quaternion, body rate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .attitude import cross, quat_kinematics, quat_to_rotation

# Offsets into the 13-element vehicle state [p, v, Q, omega].
P, V, Q, W = 0, 3, 6, 10
VEHICLE_SIZE = 13


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 0.85
    inertia: tuple = (4.856e-2, 4.856e-2, 8.801e-2)
    g: float = 9.81

    def __post_init__(self):
        J = tuple(float(x) for x in np.asarray(self.inertia, dtype=float).reshape(-1))
        if len(J) != 3:
            raise ValueError("inertia must be the three diagonal entries [Jx, Jy, Jz]")
        if not self.mass > 0:
            raise ValueError(f"mass must be > 0, got {self.mass!r}")
        if not all(np.isfinite(J)) or min(J) <= 0:
            raise ValueError(f"inertia entries must be > 0, got {J!r}")
        object.__setattr__(self, "inertia", J)


@dataclass
class VehicleState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    Q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.Q, self.omega]).astype(float)

    @classmethod
    def from_array(cls, x) -> "VehicleState":
        x = np.asarray(x, dtype=float)
        return cls(x[P:P + 3].copy(), x[V:V + 3].copy(), x[Q:Q + 4].copy(), x[W:W + 3].copy())


@dataclass(frozen=True)
class ControlInput:
    thrust: float = 0.0
    tau: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.thrust >= 0:
            raise ValueError(f"thrust must be non-negative, got {self.thrust!r}")


@njit
def translational_accel(Qv, thrust, mass, g):
    """-g e3 + (T/m) R(Q) e3."""
    R = quat_to_rotation(Qv)
    a = (thrust / mass) * R[:, 2]
    a[2] -= g
    return a


@njit
def angular_accel(omega, tau, J):
    """J^{-1}(-omega x J omega + tau) for diagonal J given as a 3-vector."""
    Jw = J * omega
    return (tau - cross(omega, Jw)) / J


@njit
def vehicle_derivative(x, thrust, tau, mass, J, g):
    """Rate of the 13-element state ``[p, v, Q, omega]``."""
    dx = np.empty(13)
    dx[0:3] = x[3:6]
    dx[3:6] = translational_accel(x[6:10], thrust, mass, g)
    dx[6:10] = quat_kinematics(x[6:10], x[10:13])
    dx[10:13] = angular_accel(x[10:13], tau, J)
    return dx


def derivative(state: VehicleState, control: ControlInput, params: VehicleParams) -> VehicleState:
    """Rate of ``state`` packed as a VehicleState (fields hold derivatives)."""
    dx = vehicle_derivative(state.as_array(), float(control.thrust), np.asarray(control.tau, dtype=float),
                            params.mass, np.asarray(params.inertia), params.g)
    return VehicleState.from_array(dx)
