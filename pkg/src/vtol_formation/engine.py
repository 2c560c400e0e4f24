"""
Fixed-step coupled simulation of the leader, n estimators, n controllers and
n vehicles.

The stacked state holds, per follower, 31 entries:
``[p, v, Q, omega | p_hat, v_hat, gamma, gamma_dot | eta, eta_dot]``.
Every right-hand-side evaluation reads one snapshot of all nodes, so
estimator coupling is synchronous within each RK4 stage.
"""

from __future__ import annotations

import io
import re
import logging
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .attitude import quat_kinematics, quat_normalize
from .controller import (
    applied_torque,
    attitude_error,
    auxiliary_acceleration,
    command_force,
    command_force_derivatives,
    command_rates_kernel,
    is_singular,
    thrust,
    virtual_errors,
)
from .dynamics import angular_accel, translational_accel
from .estimator import estimator_rates, message
from .leader import leader_eval

log = logging.getLogger(__name__)

NODE_SIZE = 31
P, V, Q, W, PH, VH, GM, GD, ETA, ETAD = 0, 3, 6, 10, 13, 16, 19, 22, 25, 28

# per-node diagnostics captured by the right-hand side
D_U, D_T, D_TAU, D_QC, D_QE, D_WE, D_MARGIN, D_WC, D_WCD, D_GDD, D_UD, D_UDD, D_DPH = (
    0, 3, 4, 7, 11, 15, 18, 19, 22, 25, 28, 31, 34)
N_DIAG = 37

# stats slots
S_MIN_MARGIN, S_MAX_T, S_MIN_GBAR, S_STATUS, S_NODE, S_TIME = range(6)
OK, SINGULAR, NONFINITE, GAMMA_UNDERFLOW = 0, 1, 2, 3
STATUS_TEXT = {
    SINGULAR: "command force entered the singular set",
    NONFINITE: "non-finite state",
    GAMMA_UNDERFLOW: "1 - tanh^2(gamma) underflowed to 0",
}

NODE_COLUMNS = (
    [f"p_{a}" for a in "xyz"]
    + [f"v_{a}" for a in "xyz"]
    + [f"p_hat_{a}" for a in "xyz"]
    + [f"v_hat_{a}" for a in "xyz"]
    + [f"a_hat_{a}" for a in "xyz"]
    + [f"err_p_{a}" for a in "xyz"]
    + [f"err_v_{a}" for a in "xyz"]
    + [f"err_a_{a}" for a in "xyz"]
    + [f"s_{a}" for a in "xyz"]
    + [f"u_{a}" for a in "xyz"]
    + ["T"]
    + [f"tau_{a}" for a in "xyz"]
    + [f"Qc_{a}" for a in "wxyz"]
    + [f"Qe_{a}" for a in "wxyz"]
    + [f"omega_e_{a}" for a in "xyz"]
    + [f"eta_{a}" for a in "xyz"]
    + ["margin"]
    + [f"track_p_{a}" for a in "xyz"]
    + [f"track_v_{a}" for a in "xyz"]
)
PER_NODE = len(NODE_COLUMNS)


def column_names(n: int) -> list[str]:
    cols = ["t", "pr_x", "pr_y", "pr_z"]
    for i in range(1, n + 1):
        cols += [f"n{i}_{c}" for c in NODE_COLUMNS]
    return cols


class SimulationAbort(RuntimeError):
    def __init__(self, status: int, node: int, t: float):
        self.status, self.node, self.t = status, node, t
        super().__init__(f"{STATUS_TEXT.get(status, 'abort')} at node {node} (t = {t:.6f} s)")


@njit
def _abort(stats, status, node, t):
    if stats[S_STATUS] == OK:
        stats[S_STATUS] = status
        stats[S_NODE] = node
        stats[S_TIME] = t


@njit
def stacked_derivative(t, x, lead_kind, lead_params, weights, gains, mass, J, delta, mode, eps, diag, stats):
    """Rate of the stacked state; writes per-node diagnostics into ``diag``.

    ``weights`` is n x (n+1) with row i ``[d_i0, d_i1, ..., d_in]``.  Problems are
    flagged in ``stats[S_STATUS]`` (first one wins) rather than raised.
    """
    n = mass.shape[0]
    g = gains[10]
    k_g = gains[4]
    k_eta = gains[5]
    lead = leader_eval(lead_kind, lead_params, t)
    msgs = np.empty((n + 1, 4, 3))
    msgs[0] = lead[0:4]
    for j in range(n):
        b = j * NODE_SIZE
        msgs[j + 1] = message(x[b + PH:b + ETA].reshape(4, 3), k_g)

    dx = np.zeros(x.shape[0])
    for i in range(n):
        b = i * NODE_SIZE
        xi = x[b:b + NODE_SIZE]
        for k in range(NODE_SIZE):
            if not np.isfinite(xi[k]):
                _abort(stats, NONFINITE, i + 1, t)
                return dx
        p, v, Qv, w = xi[P:P + 3], xi[V:V + 3], xi[Q:Q + 4], xi[W:W + 3]
        gam, gamd = xi[GM:GM + 3], xi[GD:GD + 3]
        eta, etad = xi[ETA:ETA + 3], xi[ETAD:ETAD + 3]

        gbar_min = 1.0
        for k in range(3):
            c = np.cosh(gam[k])
            gb = 1.0 / (c * c)
            if gb < gbar_min:
                gbar_min = gb
        if gbar_min < stats[S_MIN_GBAR]:
            stats[S_MIN_GBAR] = gbar_min
        if gbar_min == 0.0:
            _abort(stats, GAMMA_UNDERFLOW, i + 1, t)
            return dx

        est = estimator_rates(xi[PH:ETA].reshape(4, 3), msgs, weights[i], gains, mode, eps)
        dph, dvh, gdd = est[0], est[1], est[2]

        pt, vt = virtual_errors(p, v, xi[PH:PH + 3], xi[VH:VH + 3], eta, etad, delta[i])
        etadd = auxiliary_acceleration(eta, etad, pt, vt, gains)
        u = command_force(gam, eta, etad, gains)
        if is_singular(u):
            _abort(stats, SINGULAR, i + 1, t)
            return dx
        T = thrust(u, mass[i])
        margin = u[2] - (g - k_g - 2.0 * k_eta)
        if margin < stats[S_MIN_MARGIN]:
            stats[S_MIN_MARGIN] = margin
        if T > stats[S_MAX_T]:
            stats[S_MAX_T] = T

        acc = translational_accel(Qv, T, mass[i], g)
        pt_dot = v - dph - etad
        vt_dot = acc - dvh - etadd
        ud = command_force_derivatives(gam, gamd, gdd, eta, etad, etadd, pt_dot, vt_dot, gains)
        cmd = command_rates_kernel(u, ud[0], ud[1])
        Qc, wc, wcd = cmd[0], cmd[1, 0:3], cmd[2, 0:3]
        err = attitude_error(Qv, Qc, w, wc)
        Qe, we = err[0], err[1, 0:3]
        tau = applied_torque(Qe, we, w, wc, wcd, J[i], gains)

        dx[b + P:b + P + 3] = v
        dx[b + V:b + V + 3] = acc
        dx[b + Q:b + Q + 4] = quat_kinematics(Qv, w)
        dx[b + W:b + W + 3] = angular_accel(w, tau, J[i])
        dx[b + PH:b + PH + 3] = dph
        dx[b + VH:b + VH + 3] = dvh
        dx[b + GM:b + GM + 3] = gamd
        dx[b + GD:b + GD + 3] = gdd
        dx[b + ETA:b + ETA + 3] = etad
        dx[b + ETAD:b + ETAD + 3] = etadd

        d = diag[i]
        d[D_U:D_U + 3] = u
        d[D_T] = T
        d[D_TAU:D_TAU + 3] = tau
        d[D_QC:D_QC + 4] = Qc
        d[D_QE:D_QE + 4] = Qe
        d[D_WE:D_WE + 3] = we
        d[D_MARGIN] = margin
        d[D_WC:D_WC + 3] = wc
        d[D_WCD:D_WCD + 3] = wcd
        d[D_GDD:D_GDD + 3] = gdd
        d[D_UD:D_UD + 3] = ud[0]
        d[D_UDD:D_UDD + 3] = ud[1]
        d[D_DPH:D_DPH + 3] = dph
    return dx


@njit
def rk4_step_stacked(t, x, dt, lead_kind, lead_params, weights, gains, mass, J, delta, mode, eps, diag, stats):
    """Classic RK4 update of the stacked state, quaternions renormalized afterwards."""
    k1 = stacked_derivative(t, x, lead_kind, lead_params, weights, gains, mass, J, delta, mode, eps, diag, stats)
    k2 = stacked_derivative(t + 0.5 * dt, x + 0.5 * dt * k1, lead_kind, lead_params, weights, gains, mass, J,
                            delta, mode, eps, diag, stats)
    k3 = stacked_derivative(t + 0.5 * dt, x + 0.5 * dt * k2, lead_kind, lead_params, weights, gains, mass, J,
                            delta, mode, eps, diag, stats)
    k4 = stacked_derivative(t + dt, x + dt * k3, lead_kind, lead_params, weights, gains, mass, J,
                            delta, mode, eps, diag, stats)
    xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    n = mass.shape[0]
    for i in range(n):
        b = i * NODE_SIZE + Q
        xn[b:b + 4] = quat_normalize(xn[b:b + 4])
    return xn


@njit
def _fill_row(row, t, x, diag, lead, weights, gains, delta):
    n = diag.shape[0]
    k_g, l_a = gains[4], gains[3]
    row[0] = t
    row[1:4] = lead[0]
    # M = diag(row sums of weights) - follower block of weights
    a_bar = np.empty((n, 3))
    a_bar_dot = np.empty((n, 3))
    for i in range(n):
        b = i * NODE_SIZE
        gam, gamd = x[b + GM:b + GM + 3], x[b + GD:b + GD + 3]
        for k in range(3):
            c = np.cosh(gam[k])
            a_bar[i, k] = k_g * np.tanh(gam[k]) - lead[2, k]
            a_bar_dot[i, k] = k_g * gamd[k] / (c * c) - lead[3, k]
    for i in range(n):
        b = i * NODE_SIZE
        c = 4 + i * PER_NODE
        d = diag[i]
        p, v = x[b + P:b + P + 3], x[b + V:b + V + 3]
        ph, vh = x[b + PH:b + PH + 3], x[b + VH:b + VH + 3]
        row[c:c + 3] = p
        row[c + 3:c + 6] = v
        row[c + 6:c + 9] = ph
        row[c + 9:c + 12] = vh
        row[c + 12:c + 15] = a_bar[i] + lead[2]
        row[c + 15:c + 18] = ph - lead[0]
        row[c + 18:c + 21] = vh - lead[1]
        row[c + 21:c + 24] = a_bar[i]
        s = np.zeros(3)
        for j in range(n):
            m_ij = -weights[i, j + 1]
            if j == i:
                m_ij = 0.0
                for k in range(weights.shape[1]):
                    m_ij += weights[i, k]
            s += m_ij * (l_a * a_bar[j] + a_bar_dot[j])
        row[c + 24:c + 27] = s
        row[c + 27:c + 30] = d[D_U:D_U + 3]
        row[c + 30] = d[D_T]
        row[c + 31:c + 34] = d[D_TAU:D_TAU + 3]
        row[c + 34:c + 38] = d[D_QC:D_QC + 4]
        row[c + 38:c + 42] = d[D_QE:D_QE + 4]
        row[c + 42:c + 45] = d[D_WE:D_WE + 3]
        row[c + 45:c + 48] = x[b + ETA:b + ETA + 3]
        row[c + 48] = d[D_MARGIN]
        row[c + 49:c + 52] = p - lead[0] - delta[i]
        row[c + 52:c + 55] = v - lead[1]


@njit
def integrate(x0, n_steps, dt, decim, lead_kind, lead_params, weights, gains, mass, J, delta, mode, eps):
    """Run ``n_steps`` RK4 steps; log every ``decim`` steps.

    Returns ``(log, stats, x_final)``; ``stats[S_STATUS] != OK`` marks an abort.
    """
    n = mass.shape[0]
    n_rows = n_steps // decim + 1 if n_steps > 0 else 0
    out = np.empty((n_rows, 4 + n * PER_NODE))
    stats = np.zeros(6)
    stats[S_MIN_MARGIN] = np.inf
    stats[S_MAX_T] = -np.inf
    stats[S_MIN_GBAR] = np.inf
    diag = np.zeros((n, N_DIAG))
    scratch = np.zeros((n, N_DIAG))
    x = x0.copy()
    row = 0
    for k in range(n_steps + 1):
        t = k * dt
        if k % decim == 0 and row < n_rows:
            stacked_derivative(t, x, lead_kind, lead_params, weights, gains, mass, J, delta, mode, eps, diag, stats)
            if stats[S_STATUS] != OK:
                break
            _fill_row(out[row], t, x, diag, leader_eval(lead_kind, lead_params, t), weights, gains, delta)
            row += 1
        if k == n_steps:
            break
        xn = rk4_step_stacked(t, x, dt, lead_kind, lead_params, weights, gains, mass, J, delta, mode, eps,
                              scratch, stats)
        if stats[S_STATUS] != OK:
            break
        for m in range(xn.shape[0]):
            if not np.isfinite(xn[m]):
                _abort(stats, NONFINITE, m // NODE_SIZE + 1, t + dt)
                break
        if stats[S_STATUS] != OK:
            break
        x = xn
    return out[:row], stats, x


def rk4_step(f, t, x, dt):
    """Generic classic RK4 step for ``x' = f(t, x)``."""
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class SimLog:
    columns: list[str]
    data: np.ndarray
    n: int
    stats: dict = field(default_factory=dict)
    report: list[str] = field(default_factory=list)

    def __len__(self):
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def node(self, i: int, name: str) -> np.ndarray:
        return self.column(f"n{i}_{name}")

    def vec(self, i: int, name: str) -> np.ndarray:
        return np.column_stack([self.node(i, f"{name}_{a}") for a in "xyz"])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for r in self.data:
            buf.write(",".join("%.17g" % v for v in r))
            buf.write("\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(self.to_csv())


def read_csv(path) -> SimLog:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"{path}: empty file (missing header)")
        columns = header.split(",")
        rows = [line for line in fh if line.strip()]
    data = np.array([[float(v) for v in line.split(",")] for line in rows]) if rows else np.empty((0, len(columns)))
    n = sum(1 for c in columns if re.fullmatch(r"n\d+_p_x", c))
    return SimLog(columns, data, n)


def pack_state(vehicles) -> np.ndarray:
    """Stack per-vehicle initial conditions (see ``config.VehicleSpec``)."""
    x = np.zeros(NODE_SIZE * len(vehicles))
    for i, spec in enumerate(vehicles):
        b = i * NODE_SIZE
        st = spec.state
        x[b + P:b + P + 3] = st.p
        x[b + V:b + V + 3] = st.v
        x[b + Q:b + Q + 4] = np.asarray(st.Q, dtype=float) / np.linalg.norm(st.Q)
        x[b + W:b + W + 3] = st.omega
        x[b + PH:b + PH + 3] = spec.estimator.p_hat
        x[b + VH:b + VH + 3] = spec.estimator.v_hat
        x[b + GM:b + GM + 3] = spec.estimator.gamma
        x[b + GD:b + GD + 3] = spec.estimator.gamma_dot
        x[b + ETA:b + ETA + 3] = spec.aux.eta
        x[b + ETAD:b + ETAD + 3] = spec.aux.eta_dot
    return x


@dataclass
class Kernel:
    """Packed numeric arguments shared by the compiled routines."""
    lead_kind: int
    lead_params: np.ndarray
    W: np.ndarray
    gains: np.ndarray
    mass: np.ndarray
    J: np.ndarray
    delta: np.ndarray
    mode: int
    eps: float

    @classmethod
    def from_config(cls, config) -> "Kernel":
        return cls(
            lead_kind=config.leader.kind,
            lead_params=config.leader.param_array(),
            W=np.ascontiguousarray(config.graph.weights_with_leader()),
            gains=config.gains.as_array(),
            mass=np.array([v.params.mass for v in config.vehicles], dtype=float),
            J=np.array([v.params.inertia for v in config.vehicles], dtype=float),
            delta=np.array([v.offset for v in config.vehicles], dtype=float).reshape(-1, 3),
            mode=config.sgn_mode,
            eps=float(config.eps),
        )

    def args(self):
        return (self.lead_kind, self.lead_params, self.W, self.gains, self.mass, self.J, self.delta,
                self.mode, self.eps)

    def derivative(self, t, x):
        """Stacked rate plus diagnostics (Python convenience)."""
        n = self.mass.shape[0]
        diag = np.zeros((n, N_DIAG))
        stats = empty_stats()
        dx = stacked_derivative(float(t), np.asarray(x, dtype=float), *self.args(), diag, stats)
        if stats[S_STATUS] != OK:
            raise SimulationAbort(int(stats[S_STATUS]), int(stats[S_NODE]), float(stats[S_TIME]))
        return dx, diag


def empty_stats() -> np.ndarray:
    stats = np.zeros(6)
    stats[S_MIN_MARGIN] = np.inf
    stats[S_MAX_T] = -np.inf
    stats[S_MIN_GBAR] = np.inf
    return stats


def run(config) -> SimLog:
    """Deterministic simulation of ``config``; raises SimulationAbort on runtime failure."""
    from .config import validation_report

    kernel = Kernel.from_config(config)
    n = len(config.vehicles)
    n_steps = int(round(config.t_end / config.dt))
    decim = max(1, int(round(config.output_period / config.dt)))
    x0 = pack_state(config.vehicles)
    report = validation_report(config)
    for line in report.lines():
        log.info("gain check: %s", line)
    data, stats, _ = integrate(x0, n_steps, float(config.dt), decim, *kernel.args())
    if stats[S_STATUS] != OK:
        raise SimulationAbort(int(stats[S_STATUS]), int(stats[S_NODE]), float(stats[S_TIME]))
    summary = {
        "steps": n_steps,
        "min_margin": float(stats[S_MIN_MARGIN]),
        "max_thrust": float(stats[S_MAX_T]),
        "min_gamma_bar": float(stats[S_MIN_GBAR]),
    }
    sim = SimLog(column_names(n), data, n, stats=summary)
    sim.report = run_report(config, report, sim)
    return sim


def final_errors(sim: SimLog) -> dict:
    out = {}
    if len(sim) == 0:
        return out
    for i in range(1, sim.n + 1):
        out[i] = (float(np.linalg.norm(sim.vec(i, "track_p")[-1])), float(np.linalg.norm(sim.vec(i, "track_v")[-1])))
    return out


def run_report(config, report, sim: SimLog) -> list[str]:
    from .graph import has_directed_spanning_tree

    g = config.gains
    lines = [
        f"scenario: {config.name}",
        f"followers: {len(config.vehicles)}",
        f"dt: {config.dt:g} s  t_end: {config.t_end:g} s  output period: {config.output_period:g} s",
        f"sgn mode: {'smoothed (boundary layer, eps=%g)' % config.eps if config.sgn_mode else 'exact'}",
        f"spanning tree rooted at leader: {has_directed_spanning_tree(config.graph)}",
        "gain conditions:",
    ]
    lines += ["  " + s for s in report.lines()]
    st = sim.stats
    bound = max(v.params.mass for v in config.vehicles) * (g.g + 2 * np.sqrt(3) * g.k_eta + np.sqrt(3) * g.k_gamma)
    lines += [
        f"min singularity margin u_z - (g - k_gamma - 2 k_eta): {st['min_margin']:.6g}",
        f"max thrust: {st['max_thrust']:.6g} N (bound {bound:.6g} N)",
        f"min 1 - tanh^2(gamma): {st['min_gamma_bar']:.6g}",
    ]
    for i, (ep, ev) in final_errors(sim).items():
        lines.append(f"final |p_{i} - p_r - delta_{i}| = {ep:.6g} m, |v_{i} - p_r'| = {ev:.6g} m/s")
    return lines
