"""
Hierarchical per-follower controller.

Outer loop: virtual errors, the auxiliary system ``eta`` and a saturated
command force ``u`` whose vertical component stays above
``g - k_gamma - 2 k_eta``.  Inner loop: the minimal-rotation command
attitude extracted from ``u``, its rate and acceleration, and a torque that
makes the attitude sliding variable ``r = l_q q_e + omega_e`` obey
``J r' = -k_q r``.

Gains are passed packed as ``GainSet.as_array()``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .attitude import (
    cross,
    dot,
    matTvec,
    quat_G,
    quat_inverse,
    quat_product,
    quat_to_rotation,
    sech2_vec,
)

K_GAMMA, K_ETA, L_P, L_V, L_Q, K_Q, G = 4, 5, 6, 7, 8, 9, 10


class SingularCommand(ArithmeticError):
    """The command force lies in {(0, 0, u_z) : u_z <= 0}."""


@dataclass
class AuxiliaryState:
    eta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eta_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class AttitudeCommand:
    Q_c: np.ndarray
    omega_c: np.ndarray
    omega_c_dot: np.ndarray


@njit
def virtual_errors(p, v, p_hat, v_hat, eta, eta_dot, delta):
    return p - p_hat - delta - eta, v - v_hat - eta_dot


@njit
def _saturation(eta, eta_dot):
    return np.tanh(eta + eta_dot) + np.tanh(eta_dot)


@njit
def command_force(gamma, eta, eta_dot, gains):
    """u = g e3 + a_hat - k_eta (tanh(eta + eta') + tanh(eta'))."""
    u = gains[K_GAMMA] * np.tanh(gamma) - gains[K_ETA] * _saturation(eta, eta_dot)
    u[2] += gains[G]
    return u


@njit
def auxiliary_acceleration(eta, eta_dot, p_tilde, v_tilde, gains):
    return -gains[K_ETA] * _saturation(eta, eta_dot) + gains[L_P] * p_tilde + gains[L_V] * v_tilde


@njit
def thrust(u, mass):
    return mass * np.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])


@njit
def is_singular(u):
    return u[0] == 0.0 and u[1] == 0.0 and u[2] <= 0.0


@njit
def _extract(u):
    rho = np.hypot(u[0], u[1])
    n = np.hypot(rho, u[2])
    if u[2] >= 0.0:
        sigma = np.sqrt(0.5 + 0.5 * u[2] / n)
    else:
        # same value as above; avoids cancellation in n + u_z near the antipode
        sigma = rho / np.sqrt(2.0 * n * (n - u[2]))
    k = 1.0 / (2.0 * n * sigma)
    Qc = np.empty(4)
    Qc[0] = sigma
    Qc[1] = k * u[1]
    Qc[2] = -k * u[0]
    Qc[3] = 0.0
    return Qc


def extract_attitude(u, g: float = 9.81) -> np.ndarray:
    """Minimal-rotation unit quaternion with ``R(Q_c) e3 = u / |u|``.

    ``g`` is accepted for signature symmetry; the corrected scalar part
    ``sqrt(1/2 + u_z / (2|u|))`` does not depend on it.
    """
    u = np.asarray(u, dtype=float)
    if is_singular(u):
        raise SingularCommand(f"command force {u.tolist()} is in the singular set")
    return _extract(u)


@njit
def command_force_derivatives(gamma, gamma_dot, gamma_ddot, eta, eta_dot, eta_ddot,
                              p_tilde_dot, v_tilde_dot, gains):
    """First and second time derivatives of the command force, plus eta'''.

    Returns a (3, 3) array ``[u_dot, u_ddot, eta_dddot]``.
    """
    k_g, k_eta = gains[K_GAMMA], gains[K_ETA]
    x = eta + eta_dot
    xd = eta_dot + eta_ddot
    D = sech2_vec(x)
    S = sech2_vec(eta_dot)
    D_bar = -2.0 * np.tanh(x) * D * xd
    S_bar = -2.0 * np.tanh(eta_dot) * S * eta_ddot
    Gbar = sech2_vec(gamma)
    Gam = np.tanh(gamma) * gamma_dot

    eta_3 = -k_eta * (D * eta_dot + (D + S) * eta_ddot) + gains[L_P] * p_tilde_dot + gains[L_V] * v_tilde_dot
    out = np.empty((3, 3))
    out[0] = k_g * Gbar * gamma_dot - k_eta * (D * eta_dot + (D + S) * eta_ddot)
    out[1] = (-2.0 * k_g * Gbar * Gam * gamma_dot + k_g * Gbar * gamma_ddot
              - k_eta * (D_bar * eta_dot + (D_bar + D + S_bar) * eta_ddot + (D + S) * eta_3))
    out[2] = eta_3
    return out


@njit
def quat_command_derivatives(u, u_dot, u_ddot):
    """Q_c and its first two time derivatives along (u', u''); rows of a (3, 4) array."""
    n = np.sqrt(dot(u, u))
    nd = dot(u, u_dot) / n
    ndd = (dot(u_dot, u_dot) + dot(u, u_ddot) - nd * nd) / n
    c = u[2] / n
    cd = (u_dot[2] * n - u[2] * nd) / (n * n)
    cdd = (u_ddot[2] * n - u[2] * ndd) / (n * n) - 2.0 * cd * nd / n
    s = np.sqrt(0.5 + 0.5 * c)
    sd = cd / (4.0 * s)
    sdd = cdd / (4.0 * s) - cd * sd / (4.0 * s * s)
    w = 2.0 * n * s
    wd = 2.0 * (nd * s + n * sd)
    wdd = 2.0 * (ndd * s + 2.0 * nd * sd + n * sdd)
    a = np.array([u[1], -u[0]])
    ad = np.array([u_dot[1], -u_dot[0]])
    add = np.array([u_ddot[1], -u_ddot[0]])
    out = np.zeros((3, 4))
    out[0, 0] = s
    out[1, 0] = sd
    out[2, 0] = sdd
    out[0, 1:3] = a / w
    out[1, 1:3] = ad / w - a * wd / (w * w)
    out[2, 1:3] = add / w - 2.0 * ad * wd / (w * w) - a * wdd / (w * w) + 2.0 * a * wd * wd / (w * w * w)
    return out


@njit
def command_rates_kernel(u, u_dot, u_ddot):
    """Rows ``[Q_c, (omega_c, 0), (omega_c_dot, 0)]`` of a (3, 4) array."""
    Qs = quat_command_derivatives(u, u_dot, u_ddot)
    Qc = Qs[0]
    G = quat_G(Qc)
    out = np.zeros((3, 4))
    out[0] = Qc
    out[1, 0:3] = 2.0 * matTvec(G, Qs[1])
    out[2, 0:3] = 2.0 * (matTvec(quat_G(Qs[1]), Qs[1]) + matTvec(G, Qs[2]))
    return out


def command_rates(u, u_dot, u_ddot, g: float = 9.81) -> AttitudeCommand:
    u = np.asarray(u, dtype=float)
    if is_singular(u):
        raise SingularCommand(f"command force {u.tolist()} is in the singular set")
    out = command_rates_kernel(u, np.asarray(u_dot, dtype=float), np.asarray(u_ddot, dtype=float))
    return AttitudeCommand(out[0].copy(), out[1, :3].copy(), out[2, :3].copy())


@njit
def attitude_error(Q, Q_c, omega, omega_c):
    """Q_e with ``R(Q_e) = R(Q_c)^T R(Q)`` and ``omega_e = omega - R(Q_e)^T omega_c``.

    Returns a (2, 4) array: row 0 is Q_e, row 1 holds omega_e in its first three slots.
    """
    Qe = quat_product(Q, quat_inverse(Q_c))
    out = np.zeros((2, 4))
    out[0] = Qe
    out[1, 0:3] = omega - matTvec(quat_to_rotation(Qe), omega_c)
    return out


@njit
def applied_torque(Q_e, omega_e, omega, omega_c, omega_c_dot, J, gains):
    """Torque giving ``J r' = -k_q r`` for ``r = l_q q_e + omega_e``.

    ``J`` is the diagonal inertia as a 3-vector.
    """
    l_q, k_q = gains[L_Q], gains[K_Q]
    sigma_e = Q_e[0]
    q_e = Q_e[1:4]
    Re = quat_to_rotation(Q_e)
    r = l_q * q_e + omega_e
    qdot_e_half = sigma_e * omega_e - cross(q_e, omega_e)  # (sigma_e I - q_e^x) omega_e
    w_c_body = matTvec(Re, omega_c)
    feedforward = cross(omega_e, w_c_body) + matTvec(Re, omega_c_dot)
    return -k_q * r - 0.5 * l_q * J * qdot_e_half + cross(omega, J * omega) + J * feedforward


@njit
def sliding_variable(Q_e, omega_e, l_q):
    return l_q * Q_e[1:4] + omega_e


@njit
def attitude_error_dynamics(Q_e, omega_e, omega, omega_c, omega_c_dot, tau, J, l_q):
    """``J r'`` for the plant's attitude error kinematics, given an applied torque."""
    sigma_e = Q_e[0]
    q_e = Q_e[1:4]
    Re = quat_to_rotation(Q_e)
    qdot_e_half = sigma_e * omega_e - cross(q_e, omega_e)
    return (0.5 * l_q * J * qdot_e_half - cross(omega, J * omega) + tau
            - J * (cross(omega_e, matTvec(Re, omega_c)) + matTvec(Re, omega_c_dot)))
