"""Reference computations written independently of the package kernels."""

import numpy as np

from vtol_formation.engine import N_DIAG, Kernel, empty_stats, rk4_step_stacked, stacked_derivative


def hamilton(a, b):
    s, v = a[0], a[1:]
    t, w = b[0], b[1:]
    return np.concatenate([[s * t - v @ w], s * w + t * v + np.cross(v, w)])


def conj(q):
    return np.concatenate([[q[0]], -q[1:]])


def rot(Q):
    s, q = Q[0], Q[1:]
    qx = np.array([[0, -q[2], q[1]], [q[2], 0, -q[0]], [-q[1], q[0], 0]])
    return (s * s - q @ q) * np.eye(3) + 2 * np.outer(q, q) - 2 * s * qx


def Gmat(Q):
    s, q = Q[0], Q[1:]
    qx = np.array([[0, -q[2], q[1]], [q[2], 0, -q[0]], [-q[1], q[0], 0]])
    return np.vstack([-q, s * np.eye(3) - qx])


def skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])


def rot_rate(Q, Qd):
    """d/dt R(Q) by differentiating each term of R."""
    s, q, sd, qd = Q[0], Q[1:], Qd[0], Qd[1:]
    return 2 * (s * sd - q @ qd) * np.eye(3) + 2 * (np.outer(qd, q) + np.outer(q, qd)) - 2 * (sd * skew(q) + s * skew(qd))


def r_dot(Q, w, Qc, wc, wcd, tau, J, l_q):
    """J r' for r = l_q q_e + omega_e along the plant, by the product rule.

    Uses Q' = G(Q) w / 2, Qc' = G(Qc) wc / 2 and Euler's equation; nothing
    from the controller module.
    """
    Qd = 0.5 * Gmat(Q) @ w
    Qcd = 0.5 * Gmat(Qc) @ wc
    Qe = hamilton(Q, conj(Qc))
    Qed = hamilton(Qd, conj(Qc)) + hamilton(Q, conj(Qcd))
    Re = rot(Qe)
    Red = rot_rate(Qe, Qed)
    wd = (tau - np.cross(w, J * w)) / J
    wed = wd - Red.T @ wc - Re.T @ wcd
    r = l_q * Qe[1:] + (w - Re.T @ wc)
    return J * (l_q * Qed[1:] + wed), r


def trajectory_states(config, times):
    """Stacked states of ``config`` at ``times`` (multiples of config.dt)."""
    k = Kernel.from_config(config)
    from vtol_formation.engine import pack_state

    x = pack_state(config.vehicles)
    n = len(config.vehicles)
    diag = np.zeros((n, N_DIAG))
    stats = empty_stats()
    out, t, step = [], 0.0, 0
    for target in times:
        while step * config.dt < target - 1e-12:
            x = rk4_step_stacked(step * config.dt, x, config.dt, *k.args(), diag, stats)
            step += 1
        out.append((step * config.dt, x.copy()))
    return k, out


def diagnostics(kernel, t, x):
    n = kernel.mass.shape[0]
    diag = np.zeros((n, N_DIAG))
    stats = empty_stats()
    dx = stacked_derivative(t, x, *kernel.args(), diag, stats)
    return dx, diag


def shifted(kernel, t, x, h):
    n = kernel.mass.shape[0]
    diag = np.zeros((n, N_DIAG))
    return rk4_step_stacked(t, x, h, *kernel.args(), diag, empty_stats())
