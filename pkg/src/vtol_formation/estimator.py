"""
Per-follower distributed estimator of the leader's position, velocity and
acceleration.

Each node i keeps ``(p_hat, v_hat, gamma, gamma_dot)`` and estimates the
leader acceleration as ``a_hat = k_gamma * tanh(gamma)``, which keeps the
estimate inside the box ``|a_hat|_inf < k_gamma``.  Nodes exchange messages
``(p_hat, v_hat, a_hat, a_hat_dot)``; the leader's message is
``(p_r, p_r', p_r'', p_r''')``.

Message arrays are shaped ``(n + 1, 4, 3)`` with row 0 the leader, and the
weight row of node i is ``[d_i0, d_i1, ..., d_in]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .attitude import sech2_vec

EXACT, SMOOTHED = 0, 1

# gains.as_array() layout
K_P, K_V, K_A, L_A, K_GAMMA = 0, 1, 2, 3, 4


@dataclass
class EstimatorState:
    p_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gamma: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gamma_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def as_array(self) -> np.ndarray:
        return np.vstack([self.p_hat, self.v_hat, self.gamma, self.gamma_dot]).astype(float)


@njit
def a_hat(gamma, k_gamma):
    return k_gamma * np.tanh(gamma)


@njit
def a_hat_dot(gamma, gamma_dot, k_gamma):
    return k_gamma * sech2_vec(gamma) * gamma_dot


@njit
def message(own, k_gamma):
    """Outgoing ``(p_hat, v_hat, a_hat, a_hat_dot)`` for an estimator state ``own``."""
    msg = np.empty((4, 3))
    msg[0] = own[0]
    msg[1] = own[1]
    msg[2] = a_hat(own[2], k_gamma)
    msg[3] = a_hat_dot(own[2], own[3], k_gamma)
    return msg


@njit
def switching(x, mode, eps):
    """Componentwise sgn (sgn(0) = 0), or tanh(x/eps) in the boundary-layer mode."""
    if mode == SMOOTHED:
        return np.tanh(x / eps)
    return np.sign(x)


@njit
def estimator_rates(own, msgs, weights, gains, mode, eps):
    """Rates ``(p_hat_dot, v_hat_dot, gamma_ddot)`` stacked as a (3, 3) array.

    ``own`` is the (4, 3) state ``[p_hat, v_hat, gamma, gamma_dot]``.
    """
    k_p, k_v, k_a, l_a, k_g = gains[K_P], gains[K_V], gains[K_A], gains[L_A], gains[K_GAMMA]
    me = message(own, k_g)
    dp = np.zeros(3)
    dv = np.zeros(3)
    e = np.zeros(3)
    for j in range(weights.shape[0]):
        w = weights[j]
        if w == 0.0:
            continue
        dp += w * (me[0] - msgs[j, 0])
        dv += w * (me[1] - msgs[j, 1])
        e += w * ((me[2] - msgs[j, 2]) + (me[3] - msgs[j, 3]))
    gamma = own[2]
    gamma_dot = own[3]
    bar = sech2_vec(gamma)
    # d/dt of tanh(gamma) * gamma_dot terms: Gamma = diag(tanh(gamma) * gamma_dot)
    Gam = np.tanh(gamma) * gamma_dot
    out = np.empty((3, 3))
    out[0] = own[1] - k_p * dp
    out[1] = me[2] - k_v * dv
    out[2] = -l_a * gamma_dot + 2.0 * Gam * gamma_dot - (k_a / k_g) * (e + switching(e, mode, eps)) / bar
    return out


def estimator_derivative(state: EstimatorState, msgs, weights, gains, mode=EXACT, eps=1e-3):
    """Checked Python entry point around :func:`estimator_rates`."""
    own = state.as_array()
    msgs = np.asarray(msgs, dtype=float)
    weights = np.asarray(weights, dtype=float)
    gains = np.asarray(gains, dtype=float)
    if not (np.all(np.isfinite(own)) and np.all(np.isfinite(msgs))):
        raise FloatingPointError("non-finite estimator input (upstream divergence)")
    if np.any(sech2_vec(own[2]) == 0.0):
        raise FloatingPointError("gamma saturated: 1 - tanh^2(gamma) underflowed to 0")
    return estimator_rates(own, msgs, weights, gains, mode, eps)


def estimation_errors(states, leader_derivs, k_gamma):
    """``(p_bar, v_bar, a_bar)`` each shaped (n, 3) for estimator states ``states``.

    ``leader_derivs`` is the (5, 3) array ``[p_r, p_r', p_r'', ...]``.
    """
    own = np.array([s.as_array() if isinstance(s, EstimatorState) else s for s in states], dtype=float)
    lead = np.asarray(leader_derivs, dtype=float)
    p_bar = own[:, 0] - lead[0]
    v_bar = own[:, 1] - lead[1]
    a_bar = k_gamma * np.tanh(own[:, 2]) - lead[2]
    return p_bar, v_bar, a_bar


@njit
def sliding_surface(a_bar, a_bar_dot, M, l_a):
    """Stacked ``s = (M kron I3)(l_a a_bar + a_bar_dot)`` as an (n, 3) array."""
    n = M.shape[0]
    z = l_a * a_bar + a_bar_dot
    s = np.zeros((n, 3))
    for i in range(n):
        for j in range(n):
            s[i] += M[i, j] * z[j]
    return s
