import math

import numpy as np
import pytest

from vtol_formation.config import ScenarioConfig, VehicleSpec
from vtol_formation.controller import AuxiliaryState
from vtol_formation.dynamics import VehicleParams, VehicleState
from vtol_formation.engine import (
    GM,
    NODE_SIZE,
    PER_NODE,
    Q,
    Kernel,
    SimulationAbort,
    column_names,
    integrate,
    pack_state,
    rk4_step,
    run,
)
from vtol_formation.estimator import EstimatorState
from vtol_formation.graph import CommGraph, GainSet
from vtol_formation.leader import LeaderTrajectory

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def vehicle(p, offset, v=(0, 0, 0), Q=IDENTITY, est=None):
    state = VehicleState(p=np.array(p, float), v=np.array(v, float), Q=np.array(Q, float), omega=np.zeros(3))
    return VehicleSpec(VehicleParams(), state, np.array(offset, float), est or EstimatorState())


def single_follower(t_end=40.0, p0=(3.0, -2.0, 1.0), offset=(1, 0, 0), **kw):
    return ScenarioConfig(CommGraph.from_edges(1, [[0, 1, 1.0]]), GainSet(), [vehicle(p0, offset)],
                          LeaderTrajectory.constant_point([0.0, 0.0, 0.0]), t_end=t_end, **kw)


def test_rk4_scalar():
    x = rk4_step(lambda t, x: -x, 0.0, np.array([1.0]), 0.1)
    assert abs(x[0] - 0.9048375) < 5e-8
    assert abs(x[0] - math.exp(-0.1)) < 1e-7


def test_rk4_harmonic_energy():
    x = np.array([1.0, 0.0])
    f = lambda t, x: np.array([x[1], -x[0]])
    for k in range(10_000):
        x = rk4_step(f, k * 0.01, x, 0.01)
    assert abs(0.5 * (x @ x) - 0.5) / 0.5 <= 1e-8


def test_column_layout():
    names = column_names(2)
    assert names[:4] == ["t", "pr_x", "pr_y", "pr_z"]
    assert len(names) == 4 + 2 * PER_NODE and len(set(names)) == len(names)
    for col in ("u_x", "T", "tau_z", "Qc_w", "Qe_z", "omega_e_y", "eta_x", "margin", "track_p_x", "track_v_z"):
        assert f"n2_{col}" in names


def test_equilibrium_has_zero_error_rates():
    lead = LeaderTrajectory.constant_velocity([1.0, -1.0, 2.0], [0.5, 0.2, -0.1])
    offsets = [(2, 2, 0), (2, -2, 0), (-2, -2, 0)]
    d = lead(0.0)
    vehicles = [vehicle(d[0] + np.array(o), o, v=d[1], est=EstimatorState(d[0].copy(), d[1].copy(), np.zeros(3),
                                                                            np.zeros(3))) for o in offsets]
    graph = CommGraph.from_edges(3, [[0, 1, 1.0], [1, 2, 1.0], [2, 3, 1.0], [0, 3, 0.5]])
    cfg = ScenarioConfig(graph, GainSet(), vehicles, lead)
    k = Kernel.from_config(cfg)
    x = pack_state(cfg.vehicles)
    dx, _ = k.derivative(0.0, x)
    for i in range(3):
        b = i * NODE_SIZE
        assert np.allclose(dx[b:b + 3], d[1], atol=1e-14)  # p' = p_r'
        assert np.allclose(dx[b + 3:b + NODE_SIZE], np.r_[np.zeros(10), d[1], np.zeros(15)], atol=1e-13)


def test_single_follower_setpoint():
    sim = run(single_follower())
    e = np.linalg.norm(sim.vec(1, "track_p"), axis=1)
    assert e[-1] <= 1e-3
    assert np.all(np.diff(e[sim.t >= 5.0]) <= 0.0)


def test_zero_duration_header_only(tmp_path):
    sim = run(single_follower(t_end=0.0))
    assert len(sim) == 0
    path = tmp_path / "log.csv"
    sim.write_csv(path)
    text = path.read_bytes()
    assert text.count(b"\n") == 1 and text.startswith(b"t,pr_x")


def test_log_structure():
    sim = run(single_follower(t_end=1.0))
    assert len(sim) == 101
    assert np.all(np.diff(sim.t) > 0)
    assert sim.data.shape[1] == len(sim.columns)


def test_singular_abort():
    # small g lets the auxiliary term push u straight down through the singular set
    gains = GainSet(g=1.0, k_eta=4.0, k_gamma=0.5)
    cfg = single_follower(t_end=5.0, p0=(0.0, 0.0, 40.0), offset=(0, 0, 0)).replace(gains=gains)
    with pytest.raises(SimulationAbort) as info:
        run(cfg)
    assert info.value.node == 1 and "singular" in str(info.value)


def test_nonfinite_abort():
    cfg = single_follower(t_end=1.0)
    cfg.vehicles[0].estimator.gamma[:] = 30.0  # 1 - tanh^2 underflows
    with pytest.raises(SimulationAbort):
        run(cfg)


def test_quaternion_norms_and_a_hat_bound(scenario):
    cfg = scenario.replace(t_end=10.0)
    k = Kernel.from_config(cfg)
    data, stats, x = integrate(pack_state(cfg.vehicles), 10_000, 1e-3, 10, *k.args())
    for i in range(4):
        assert abs(np.linalg.norm(x[i * NODE_SIZE + Q:i * NODE_SIZE + Q + 4]) - 1.0) <= 1e-9
    sim_cols = column_names(4)
    for i in range(1, 5):
        Qe = data[:, [sim_cols.index(f"n{i}_Qe_{a}") for a in "wxyz"]]
        assert np.all(np.abs(np.linalg.norm(Qe, axis=1) - 1.0) <= 1e-9)
        a_hat = data[:, [sim_cols.index(f"n{i}_a_hat_{a}") for a in "xyz"]]
        assert np.abs(a_hat).max() <= 0.5
        assert np.all(np.abs(x[(i - 1) * NODE_SIZE + GM:(i - 1) * NODE_SIZE + GM + 3]) < 20)


def test_determinism_small():
    a = run(single_follower(t_end=2.0)).to_csv()
    b = run(single_follower(t_end=2.0)).to_csv()
    assert a == b


def _final(sim):
    return np.array([np.linalg.norm(sim.vec(i, "track_p")[-1]) for i in range(1, sim.n + 1)])


def test_dt_convergence_wide_boundary_layer(cached_run):
    base = _final(cached_run(1e-3, 1, 1e-2))
    for dt in (2e-3, 5e-4):
        assert np.all(np.abs(_final(cached_run(dt, 1, 1e-2)) - base) < 1e-3)


@pytest.mark.xfail(strict=True, reason="with eps = 1e-3 the boundary layer is stiffer than RK4's "
                                       "stability interval at dt = 2 ms, so the coarse run chatters")
def test_dt_convergence_default_eps(cached_run):
    base = _final(cached_run(1e-3, 1, 1e-3))
    for dt in (2e-3, 5e-4):
        assert np.all(np.abs(_final(cached_run(dt, 1, 1e-3)) - base) < 1e-3)
