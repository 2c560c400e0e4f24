import numpy as np
import pytest

from vtol_formation.config import DEFAULT_SCENARIO, ConfigError, load_config, parse_config, validation_report
from vtol_formation.estimator import EXACT

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

BASE = tomllib.loads(DEFAULT_SCENARIO.read_text())


def doc(**changes):
    d = {k: (dict(v) if isinstance(v, dict) else [dict(x) for x in v] if isinstance(v, list) else v)
         for k, v in BASE.items()}
    for path, value in changes.items():
        section, _, key = path.partition("__")
        if key:
            d[section][key] = value
        else:
            d[section] = value
    return d


def test_shipped_scenario(scenario):
    assert scenario.graph.n == 4 and len(scenario.vehicles) == 4
    assert scenario.dt == 1e-3 and scenario.t_end == 100.0 and scenario.sgn_mode == EXACT
    assert np.allclose(scenario.vehicles[0].state.p, [5, 3, -1])
    assert np.allclose(scenario.vehicles[3].offset, [-2, 2, 0])
    assert scenario.vehicles[0].params.mass == 0.85
    assert np.allclose(scenario.vehicles[0].params.inertia, [4.856e-2, 4.856e-2, 8.801e-2])


def test_shipped_copies_identical():
    from pathlib import Path

    top = Path(__file__).parents[1] / "scenarios" / "paper_sec4.toml"
    assert top.read_bytes() == DEFAULT_SCENARIO.read_bytes()


def test_shipped_report(scenario):
    report = validation_report(scenario)
    names = {c.name: c.passed for c in report.conditions}
    assert names["spanning_tree"] and names["kp_kv"] and names["k_eta"] and names["k_gamma"]
    assert not names["l_a"] and not names["k_a"]


def test_no_spanning_tree():
    cfg = parse_config(doc(graph__edges=[[1, 2, 1.0], [2, 3, 1.0], [3, 4, 1.0]]))
    report = validation_report(cfg)
    assert not report.all_passed and len(report.conditions) == 1
    assert "spanning-tree condition violated" in report.lines()[0]


@pytest.mark.parametrize("changes, where", [
    ({"sim__dt": 0.0}, "sim.dt"),
    ({"sim__dt": "fast"}, "sim.dt"),
    ({"sim__t_end": -1.0}, "sim.t_end"),
    ({"sim__sgn": "soft"}, "sim.sgn"),
    ({"sim__bogus": 1}, "sim"),
    ({"gains__k_q": -1.0}, "gains"),
    ({"gains__zeta": 1.0}, "gains"),
    ({"leader__type": "spiral"}, "leader.type"),
    ({"graph__edges": [[0, 9, 1.0]]}, "graph.edges"),
    ({"graph__edges": [[0, 1]]}, "graph.edges"),
    ({"vehicle": []}, "vehicle"),
])
def test_parse_errors(changes, where):
    with pytest.raises(ConfigError) as info:
        parse_config(doc(**changes))
    assert info.value.where == where


def test_vehicle_errors():
    d = doc()
    d["vehicle"][1]["inertia"] = [[1, 0.1, 0], [0.1, 1, 0], [0, 0, 1]]
    with pytest.raises(ConfigError, match="diagonal"):
        parse_config(d)
    d = doc()
    d["vehicle"][0]["position"] = [1, 2]
    with pytest.raises(ConfigError) as info:
        parse_config(d)
    assert info.value.where == "vehicle[1].position"
    d = doc()
    d["vehicle"][2]["mass"] = -1.0
    with pytest.raises(ConfigError):
        parse_config(d)
    d = doc()
    d["vehicle"] = d["vehicle"][:3]
    with pytest.raises(ConfigError):
        parse_config(d)


def test_diagonal_matrix_inertia_accepted():
    d = doc()
    d["vehicle"][0]["inertia"] = [[1, 0, 0], [0, 2, 0], [0, 0, 3]]
    assert parse_config(d).vehicles[0].params.inertia == (1.0, 2.0, 3.0)


def test_malformed_file(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[graph]\nedges = = 1\n")
    with pytest.raises(ConfigError, match="line"):
        load_config(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.toml")
