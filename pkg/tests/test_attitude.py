import math

import numpy as np
from hypothesis import given, settings

from vtol_formation.attitude import (
    cross,
    quat_G,
    quat_inverse,
    quat_kinematics,
    quat_normalize,
    quat_product,
    quat_to_rotation,
    rotation_rate,
    sech2_diag,
    skew,
    tanh_vec,
)

from conftest import random_quat, unit_quat, vec3

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def rotation_oracle(Q):
    # independent transcription: R = (s^2 - q.q) I + 2 q q^T - 2 s [q]x
    s, q = Q[0], Q[1:]
    qx = np.array([[0, -q[2], q[1]], [q[2], 0, -q[0]], [-q[1], q[0], 0]])
    return (s * s - q @ q) * np.eye(3) + 2 * np.outer(q, q) - 2 * s * qx


def test_skew_examples():
    assert np.array_equal(skew(np.zeros(3)), np.zeros((3, 3)))
    assert np.array_equal(skew(np.array([1.0, 2.0, 3.0])), [[0, -3, 2], [3, 0, -1], [-2, 1, 0]])
    v = np.array([0.3, -1.2, 2.5])
    assert np.allclose(skew(v) @ v, 0.0, atol=1e-15)


@given(vec3, vec3)
def test_skew_is_cross_product(v, w):
    S = skew(v)
    assert np.array_equal(S, -S.T)
    assert np.trace(S) == 0.0
    assert np.allclose(S @ w, np.cross(v, w), atol=1e-12)
    assert np.allclose(cross(v, w), np.cross(v, w), atol=1e-12)


def test_rotation_examples():
    assert np.array_equal(quat_to_rotation(IDENTITY), np.eye(3))
    assert np.allclose(quat_to_rotation(np.array([0.0, 1.0, 0.0, 0.0])), np.diag([1.0, -1.0, -1.0]))
    h = math.sqrt(2) / 2
    R = quat_to_rotation(np.array([h, h, 0.0, 0.0]))
    assert np.allclose(R, [[1, 0, 0], [0, 0, 1], [0, -1, 0]], atol=1e-15)
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-15)
    assert abs(np.linalg.det(R) - 1) < 1e-15


def test_rotation_is_so3_for_random_quaternions():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        Q = random_quat(rng)
        R = quat_to_rotation(Q)
        assert np.linalg.norm(R.T @ R - np.eye(3)) <= 1e-12
        assert abs(np.linalg.det(R) - 1.0) <= 1e-12
        assert np.allclose(R, rotation_oracle(Q), atol=1e-14)
        assert np.allclose(quat_to_rotation(-Q), R, atol=1e-15)


def test_rotation_rate_matches_finite_difference():
    rng = np.random.default_rng(2)
    for _ in range(50):
        Q, Qd = random_quat(rng), rng.normal(size=4)
        h = 1e-6
        fd = (quat_to_rotation(Q + h * Qd) - quat_to_rotation(Q - h * Qd)) / (2 * h)
        assert np.allclose(rotation_rate(Q, Qd), fd, atol=1e-8)


def test_product_examples():
    Qb = quat_normalize(np.array([0.3, -0.4, 0.5, 0.1]))
    assert np.allclose(quat_product(IDENTITY, Qb), Qb)
    x = np.array([0.0, 1.0, 0.0, 0.0])
    assert np.array_equal(quat_product(x, x), [-1.0, 0.0, 0.0, 0.0])


@settings(max_examples=200)
@given(unit_quat(), unit_quat())
def test_product_order_matches_rotation_composition(Qa, Qb):
    Qab = quat_product(Qa, Qb)
    assert abs(np.linalg.norm(Qab) - 1.0) <= 1e-9
    assert np.allclose(quat_to_rotation(Qab), quat_to_rotation(Qb) @ quat_to_rotation(Qa), atol=1e-12)


def test_inverse_examples():
    assert np.array_equal(quat_inverse(IDENTITY), IDENTITY)
    assert np.array_equal(quat_inverse(np.array([0.0, 0.0, 1.0, 0.0])), [0.0, 0.0, -1.0, 0.0])


@given(unit_quat())
def test_inverse_is_group_inverse(Q):
    P = quat_product(Q, quat_inverse(Q))
    assert np.allclose(np.abs(P), IDENTITY, atol=1e-12)
    assert np.allclose(quat_to_rotation(quat_inverse(Q)), quat_to_rotation(Q).T, atol=1e-12)


def test_kinematics_examples():
    Q = quat_normalize(np.array([0.2, 0.3, -0.1, 0.9]))
    assert np.array_equal(quat_kinematics(Q, np.zeros(3)), np.zeros(4))
    assert np.array_equal(quat_kinematics(IDENTITY, np.array([1.0, 0.0, 0.0])), [0.0, 0.5, 0.0, 0.0])
    G = quat_G(IDENTITY)
    assert np.array_equal(G, np.vstack([np.zeros(3), np.eye(3)]))


@given(unit_quat(), vec3)
def test_kinematics_preserves_norm(Q, w):
    Qd = quat_kinematics(Q, w)
    assert abs(Q @ Qd) <= 1e-14 * max(1.0, np.linalg.norm(w))
    assert math.isclose(Qd[0], -0.5 * Q[1:] @ w, rel_tol=1e-12, abs_tol=1e-15)


@given(unit_quat(), vec3)
def test_kinematics_rotates_as_body_rate(Q, w):
    # dR/dt = -R [w]x for this convention
    Rd = rotation_rate(Q, quat_kinematics(Q, w))
    assert np.allclose(Rd, -quat_to_rotation(Q) @ skew(w), atol=1e-11)


def test_tanh_and_sech2():
    assert np.array_equal(tanh_vec(np.zeros(3)), np.zeros(3))
    assert np.array_equal(sech2_diag(np.zeros(3)), np.eye(3))
    d = np.diag(sech2_diag(np.full(3, 20.0)))
    assert np.all(d > 0) and np.all(d < 1e-16)
    t = tanh_vec(np.array([0.5, 0.0, -0.5]))
    assert np.allclose(t, [math.tanh(0.5), 0.0, -math.tanh(0.5)], atol=0, rtol=1e-15)
    assert abs(t[0] - 0.462117) < 5e-7


@given(vec3)
def test_sech2_entries_in_unit_interval(v):
    d = np.diag(sech2_diag(v))
    assert np.all(d > 0) and np.all(d <= 1.0)
    assert np.allclose(d, 1 - np.tanh(v) ** 2, atol=1e-15)
