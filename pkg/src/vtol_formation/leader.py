"""Leader trajectories with analytic derivatives through fourth order."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit

HELIX, POLYNOMIAL = 0, 1
SAMPLES = 10_000
INFLATION = 1.05


@njit
def leader_eval(kind, params, t):
    """(5, 3) array ``[p_r, p_r', p_r'', p_r''', p_r'''']`` at time t."""
    out = np.zeros((5, 3))
    if kind == HELIX:
        c0, c1, c2 = params[0], params[1], params[2]
        rad, w, ph, climb = params[3], params[4], params[5], params[6]
        th = w * t + ph
        cs, sn = np.cos(th), np.sin(th)
        out[0, 0] = c0 + rad * cs
        out[0, 1] = c1 + rad * sn
        out[0, 2] = c2 + climb * t
        out[1, 0] = -rad * w * sn
        out[1, 1] = rad * w * cs
        out[1, 2] = climb
        out[2, 0] = -rad * w ** 2 * cs
        out[2, 1] = -rad * w ** 2 * sn
        out[3, 0] = rad * w ** 3 * sn
        out[3, 1] = -rad * w ** 3 * cs
        out[4, 0] = rad * w ** 4 * cs
        out[4, 1] = rad * w ** 4 * sn
    else:
        K = int(params[0])
        for axis in range(3):
            for m in range(K):
                c = params[1 + axis * K + m]
                # d^k/dt^k of c t^m
                for k in range(5):
                    if m < k:
                        break
                    f = 1.0
                    for r in range(k):
                        f *= m - r
                    out[k, axis] += c * f * t ** (m - k)
    return out


@dataclass(frozen=True)
class LeaderBounds:
    accel_inf: float
    accel_2: float
    N_p_bar: float
    analytic: bool


@dataclass(frozen=True)
class LeaderTrajectory:
    kind: int
    params: tuple

    @classmethod
    def helix(cls, radius=5.0, omega=0.2, climb=1.0, center=(0.0, 0.0, 0.0), phase=0.0):
        return cls(HELIX, (*map(float, center), float(radius), float(omega), float(phase), float(climb)))

    @classmethod
    def polynomial(cls, coeffs):
        """``coeffs[axis][m]`` multiplies ``t**m``."""
        c = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if c.shape[0] != 3:
            raise ValueError("polynomial leader needs one coefficient list per axis (3 lists)")
        return cls(POLYNOMIAL, (float(c.shape[1]), *c.reshape(-1).tolist()))

    @classmethod
    def constant_point(cls, point):
        return cls.polynomial(np.asarray(point, dtype=float).reshape(3, 1))

    @classmethod
    def constant_velocity(cls, start, velocity):
        return cls.polynomial(np.column_stack([np.asarray(start, float), np.asarray(velocity, float)]))

    def param_array(self) -> np.ndarray:
        return np.asarray(self.params, dtype=float)

    def __call__(self, t: float) -> np.ndarray:
        return leader_eval(self.kind, self.param_array(), float(t))

    @property
    def degree(self) -> int | None:
        return int(self.params[0]) - 1 if self.kind == POLYNOMIAL else None

    def bounds(self, l_a: float, horizon: float) -> LeaderBounds:
        """sup |p_r''| (inf- and 2-norm) and sup |l_a p_r''' - p_r''''|.

        Analytic for helices and polynomials of degree <= 2; otherwise dense
        sampling over ``[0, horizon]`` inflated by 5%.
        """
        if self.kind == HELIX:
            rad, w = abs(self.params[3]), abs(self.params[4])
            acc = rad * w ** 2
            return LeaderBounds(acc, acc, rad * w ** 3 * np.hypot(l_a, w), True)
        if self.degree <= 2:
            acc = self(0.0)[2]
            return LeaderBounds(float(np.abs(acc).max()), float(np.linalg.norm(acc)), 0.0, True)
        ts = np.linspace(0.0, max(horizon, 0.0), SAMPLES)
        d = np.array([self(t) for t in ts])
        Np = l_a * d[:, 3] - d[:, 4]
        return LeaderBounds(
            INFLATION * float(np.abs(d[:, 2]).max()),
            INFLATION * float(np.linalg.norm(d[:, 2], axis=1).max()),
            INFLATION * float(np.linalg.norm(Np, axis=1).max()),
            False,
        )
