"""
Scenario files.

A scenario is a TOML document with sections ``[graph]``, ``[gains]``,
``[leader]``, ``[sim]`` and one ``[[vehicle]]`` table per follower, all in
SI units.  See ``scenarios/paper_sec4.toml`` for the canonical example.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controller import AuxiliaryState
from .dynamics import VehicleParams, VehicleState
from .estimator import EXACT, SMOOTHED, EstimatorState
from .graph import (
    CommGraph,
    Condition,
    GainSet,
    GraphError,
    ValidationReport,
    certify,
    has_directed_spanning_tree,
    validate_gains,
)
from .leader import LeaderTrajectory

SCENARIO_DIR = Path(__file__).parent / "scenarios"
DEFAULT_SCENARIO = SCENARIO_DIR / "paper_sec4.toml"

SECTIONS = {"graph", "gains", "leader", "sim", "vehicle", "name"}
SIM_KEYS = {"dt", "t_end", "output_period", "sgn", "eps", "strict_gains", "log_file", "report_file"}
VEHICLE_KEYS = {"mass", "inertia", "position", "velocity", "attitude", "omega", "offset",
                "p_hat", "v_hat", "gamma", "gamma_dot", "eta", "eta_dot"}
LEADER_KEYS = {
    "helix": {"type", "radius", "omega", "climb", "center", "phase"},
    "point": {"type", "position"},
    "constant_velocity": {"type", "position", "velocity"},
    "polynomial": {"type", "coefficients"},
}


class ConfigError(ValueError):
    """Scenario parse or validation problem; ``where`` names the field or line."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")


@dataclass
class VehicleSpec:
    params: VehicleParams
    state: VehicleState
    offset: np.ndarray
    estimator: EstimatorState = field(default_factory=EstimatorState)
    aux: AuxiliaryState = field(default_factory=AuxiliaryState)


@dataclass
class ScenarioConfig:
    graph: CommGraph
    gains: GainSet
    vehicles: list
    leader: LeaderTrajectory
    dt: float = 1e-3
    t_end: float = 100.0
    output_period: float = 1e-2
    sgn_mode: int = EXACT
    eps: float = 1e-3
    strict_gains: bool = False
    log_file: str = "log.csv"
    report_file: str = "report.txt"
    name: str = "scenario"

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("sim.dt", f"must be > 0, got {self.dt!r}")
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            raise ConfigError("sim.t_end", f"must be >= 0, got {self.t_end!r}")
        if not (np.isfinite(self.output_period) and self.output_period >= self.dt):
            raise ConfigError("sim.output_period", "must be >= dt")
        if self.sgn_mode == SMOOTHED and not self.eps > 0:
            raise ConfigError("sim.eps", f"must be > 0, got {self.eps!r}")
        if len(self.vehicles) != self.graph.n:
            raise ConfigError("vehicle", f"{len(self.vehicles)} vehicles but the graph has {self.graph.n} followers")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _vec(table, key, where, size=3, default=None):
    if key not in table:
        if default is None:
            raise ConfigError(f"{where}.{key}", "missing")
        return np.array(default, dtype=float)
    value = table[key]
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}", f"expected {size} numbers, got {value!r}") from None
    if arr.shape != (size,) or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{where}.{key}", f"expected {size} finite numbers, got {value!r}")
    return arr


def _num(table, key, where, default=None):
    if key not in table:
        if default is None:
            raise ConfigError(f"{where}.{key}", "missing")
        return float(default)
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key}", f"expected a number, got {value!r}")
    return float(value)


def _check_keys(table, allowed, where):
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(where, f"unknown key(s) {', '.join(extra)}")


def _inertia(table, where):
    if "inertia" not in table:
        return VehicleParams().inertia
    J = np.array(table["inertia"], dtype=float) if _is_numeric(table["inertia"]) else None
    if J is None:
        raise ConfigError(f"{where}.inertia", f"expected [Jx, Jy, Jz], got {table['inertia']!r}")
    if J.shape == (3, 3):
        if np.any(J - np.diag(np.diag(J))):
            raise ConfigError(f"{where}.inertia", "only diagonal inertia is supported")
        J = np.diag(J)
    if J.shape != (3,):
        raise ConfigError(f"{where}.inertia", f"expected [Jx, Jy, Jz], got {table['inertia']!r}")
    return tuple(J.tolist())


def _is_numeric(value):
    try:
        np.array(value, dtype=float)
    except (TypeError, ValueError):
        return False
    return True


def _parse_vehicle(table, where) -> VehicleSpec:
    if not isinstance(table, dict):
        raise ConfigError(where, "must be a table")
    _check_keys(table, VEHICLE_KEYS, where)
    try:
        params = VehicleParams(mass=_num(table, "mass", where, 0.85), inertia=_inertia(table, where))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from None
    Q = _vec(table, "attitude", where, size=4, default=(1.0, 0.0, 0.0, 0.0))
    if np.linalg.norm(Q) == 0:
        raise ConfigError(f"{where}.attitude", "quaternion must be non-zero")
    state = VehicleState(
        p=_vec(table, "position", where),
        v=_vec(table, "velocity", where, default=(0, 0, 0)),
        Q=Q / np.linalg.norm(Q),
        omega=_vec(table, "omega", where, default=(0, 0, 0)),
    )
    est = EstimatorState(*(_vec(table, k, where, default=(0, 0, 0)) for k in ("p_hat", "v_hat", "gamma", "gamma_dot")))
    aux = AuxiliaryState(_vec(table, "eta", where, default=(0, 0, 0)), _vec(table, "eta_dot", where, default=(0, 0, 0)))
    return VehicleSpec(params, state, _vec(table, "offset", where), est, aux)


def _parse_leader(table) -> LeaderTrajectory:
    kind = table.get("type", "helix")
    if kind not in LEADER_KEYS:
        raise ConfigError("leader.type", f"unknown leader {kind!r}; choose from {', '.join(LEADER_KEYS)}")
    _check_keys(table, LEADER_KEYS[kind], "leader")
    if kind == "helix":
        return LeaderTrajectory.helix(
            radius=_num(table, "radius", "leader", 5.0),
            omega=_num(table, "omega", "leader", 0.2),
            climb=_num(table, "climb", "leader", 1.0),
            center=_vec(table, "center", "leader", default=(0, 0, 0)),
            phase=_num(table, "phase", "leader", 0.0),
        )
    if kind == "point":
        return LeaderTrajectory.constant_point(_vec(table, "position", "leader"))
    if kind == "constant_velocity":
        return LeaderTrajectory.constant_velocity(_vec(table, "position", "leader"), _vec(table, "velocity", "leader"))
    coeffs = table.get("coefficients")
    if coeffs is None:
        raise ConfigError("leader.coefficients", "missing")
    try:
        return LeaderTrajectory.polynomial(coeffs)
    except ValueError as exc:
        raise ConfigError("leader.coefficients", str(exc)) from None


def _parse_gains(table) -> GainSet:
    names = {f.name for f in dataclasses.fields(GainSet)}
    _check_keys(table, names, "gains")
    values = {k: _num(table, k, "gains") for k in table}
    try:
        return GainSet(**values)
    except ValueError as exc:
        raise ConfigError("gains", str(exc)) from None


def _parse_graph(table, n) -> CommGraph:
    _check_keys(table, {"edges"}, "graph")
    edges = table.get("edges")
    if edges is None:
        raise ConfigError("graph.edges", "missing")
    try:
        return CommGraph.from_edges(n, edges)
    except (GraphError, TypeError, ValueError) as exc:
        raise ConfigError("graph.edges", str(exc)) from None


def parse_config(doc: dict, name: str = "scenario") -> ScenarioConfig:
    """Build a ScenarioConfig from a decoded TOML document."""
    _check_keys(doc, SECTIONS, "scenario")
    vehicles = doc.get("vehicle")
    if not isinstance(vehicles, list) or not vehicles:
        raise ConfigError("vehicle", "at least one [[vehicle]] block is required")
    specs = [_parse_vehicle(v, f"vehicle[{i + 1}]") for i, v in enumerate(vehicles)]
    graph = _parse_graph(doc.get("graph", {}), len(specs))
    gains = _parse_gains(doc.get("gains", {}))
    leader = _parse_leader(doc.get("leader", {}))
    sim = doc.get("sim", {})
    _check_keys(sim, SIM_KEYS, "sim")
    sgn = sim.get("sgn", "exact")
    if sgn not in ("exact", "smoothed"):
        raise ConfigError("sim.sgn", f"must be 'exact' or 'smoothed', got {sgn!r}")
    return ScenarioConfig(
        graph=graph,
        gains=gains,
        vehicles=specs,
        leader=leader,
        dt=_num(sim, "dt", "sim", 1e-3),
        t_end=_num(sim, "t_end", "sim", 100.0),
        output_period=_num(sim, "output_period", "sim", 1e-2),
        sgn_mode=SMOOTHED if sgn == "smoothed" else EXACT,
        eps=_num(sim, "eps", "sim", 1e-3),
        strict_gains=bool(sim.get("strict_gains", False)),
        log_file=str(sim.get("log_file", "log.csv")),
        report_file=str(sim.get("report_file", "report.txt")),
        name=str(doc.get("name", name)),
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read file ({exc.strerror})") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), str(exc)) from None
    return parse_config(doc, name=path.stem)


def validation_report(config: ScenarioConfig) -> ValidationReport:
    """Structural check plus the gain conditions for ``config``.

    Without a spanning tree rooted at the leader the gain bounds are
    undefined and only the structural failure is reported.
    """
    if not has_directed_spanning_tree(config.graph):
        return ValidationReport([Condition("spanning_tree", False, float("-inf"),
                                           "spanning-tree condition violated: some follower has no "
                                           "directed path from the leader (node 0)")])
    cert = certify(config.graph)
    b = config.leader.bounds(config.gains.l_a, config.t_end)
    report = validate_gains(config.gains, cert, b.N_p_bar, b.accel_inf, b.accel_2)
    report.conditions.insert(0, Condition("spanning_tree", True, float(min(cert.theta)),
                                          "every follower reachable from the leader; margin = min theta"))
    return report
