"""
Small dense kernels for SO(3) and unit quaternions.

Quaternions are float64 arrays ``[sigma, qx, qy, qz]`` (scalar first).
The rotation matrix convention is

    R(Q) = (sigma^2 - q.q) I + 2 q q^T - 2 sigma q^x

and the kinematics are ``Qdot = 1/2 G(Q) omega`` with
``G(Q) = [-q, sigma I - q^x]^T``.  Under this pair ``R(Qa (x) Qb) = R(Qb) R(Qa)``
for the Hamilton product ``(x)`` implemented by :func:`quat_product`, and a
body rate ``omega`` rotates ``R`` as ``Rdot = -R omega^x``.

All functions are numba-compiled and expect float64 numpy arrays.
"""

import numpy as np

from ._jit import njit

E3 = np.array([0.0, 0.0, 1.0])


@njit
def skew(v):
    """Cross-product matrix: ``skew(v) @ w == np.cross(v, w)``."""
    m = np.zeros((3, 3))
    m[0, 1] = -v[2]
    m[0, 2] = v[1]
    m[1, 0] = v[2]
    m[1, 2] = -v[0]
    m[2, 0] = -v[1]
    m[2, 1] = v[0]
    return m


@njit
def cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit
def matvec(A, x):
    out = np.zeros(A.shape[0])
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            out[i] += A[i, j] * x[j]
    return out


@njit
def matTvec(A, x):
    """``A.T @ x`` without forming the transpose."""
    out = np.zeros(A.shape[1])
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            out[j] += A[i, j] * x[i]
    return out


@njit
def dot(a, b):
    acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


@njit
def quat_to_rotation(Q):
    s = Q[0]
    q = Q[1:4]
    qq = q[0] * q[0] + q[1] * q[1] + q[2] * q[2]
    R = np.zeros((3, 3))
    for i in range(3):
        R[i, i] = s * s - qq
        for j in range(3):
            R[i, j] += 2.0 * q[i] * q[j]
    R -= 2.0 * s * skew(q)
    return R


@njit
def rotation_rate(Q, Qdot):
    """Time derivative of ``quat_to_rotation(Q)`` along ``Qdot``."""
    s = Q[0]
    q = Q[1:4]
    sd = Qdot[0]
    qd = Qdot[1:4]
    c = 2.0 * (s * sd - (q[0] * qd[0] + q[1] * qd[1] + q[2] * qd[2]))
    Rd = np.zeros((3, 3))
    for i in range(3):
        Rd[i, i] = c
        for j in range(3):
            Rd[i, j] += 2.0 * (qd[i] * q[j] + q[i] * qd[j])
    Rd -= 2.0 * sd * skew(q) + 2.0 * s * skew(qd)
    return Rd


@njit
def quat_product(Qa, Qb):
    """Hamilton product ``Qa (x) Qb``."""
    a0, a1, a2, a3 = Qa[0], Qa[1], Qa[2], Qa[3]
    b0, b1, b2, b3 = Qb[0], Qb[1], Qb[2], Qb[3]
    out = np.empty(4)
    out[0] = a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3
    out[1] = a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2
    out[2] = a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1
    out[3] = a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0
    return out


@njit
def quat_inverse(Q):
    out = np.empty(4)
    out[0] = Q[0]
    out[1] = -Q[1]
    out[2] = -Q[2]
    out[3] = -Q[3]
    return out


@njit
def quat_normalize(Q):
    return Q / np.sqrt(Q[0] * Q[0] + Q[1] * Q[1] + Q[2] * Q[2] + Q[3] * Q[3])


@njit
def quat_G(Q):
    """The 4x3 kinematic matrix ``G(Q) = [-q, sigma I - q^x]^T``."""
    G = np.zeros((4, 3))
    G[0, :] = -Q[1:4]
    G[1:4, :] = -skew(Q[1:4])
    for i in range(3):
        G[1 + i, i] += Q[0]
    return G


@njit
def quat_kinematics(Q, omega):
    return 0.5 * matvec(quat_G(Q), omega)


@njit
def tanh_vec(v):
    return np.tanh(v)


@njit
def sech2_vec(v):
    # 1/cosh^2 stays positive where 1 - tanh^2 would round to 0
    out = np.empty(3)
    for k in range(3):
        c = np.cosh(v[k])
        out[k] = 1.0 / (c * c)
    return out


@njit
def sech2_diag(v):
    return np.diag(sech2_vec(v))
