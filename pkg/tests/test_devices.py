import json
import math

import pytest

from chiralwg import devices
from chiralwg import scattering as sc


def test_circulator_routes_cyclically():
    rep = devices.circulator_report(math.pi, 0.0)
    routes = [(r["input"], r["output"]) for r in rep["results"]["routing"]]
    assert sorted(routes) == [(1, 2), (2, 3), (3, 4), (4, 1)]
    assert rep["diagnostics"]["flags"] == ["cyclic"]
    assert rep["diagnostics"]["unitarity_deficit"] < 1e-15


def test_reciprocal_interferometer_is_not_cyclic():
    rep = devices.circulator_report(0.0, 0.0)
    assert "cyclic" not in rep["diagnostics"]["flags"]


def test_circulator_from_chiral_emitter():
    rep = devices.device_report({"device_type": "circulator", "beta_plus": 1.0})
    assert rep["diagnostics"]["flags"] == ["cyclic"]
    assert rep["inputs"]["beta_plus"] == 1.0
    with pytest.raises(ValueError):
        devices.circulator_report(math.pi, 0.0, beta_plus=1.0)


def test_symmetric_chain_flagged_reciprocal():
    rep = devices.isolator_report(sc.ChainSpec(((0.3, 0.3), (0.2, 0.2)), (0.8,)))
    assert "reciprocal" in rep["diagnostics"]["flags"]
    assert rep["results"]["isolation_db"] == pytest.approx(0, abs=1e-9)
    assert rep["diagnostics"]["route_discrepancy"] < 1e-12


def test_perfect_isolator_serializes_infinity():
    rep = devices.device_report({"device_type": "isolator", "emitters": [[0.5, 0.0]]})
    res = rep["results"]
    assert res["isolation_db"] == "inf"
    assert res["insertion_loss_db"] == 0
    assert res["pass_direction"] == "backward"
    assert rep["diagnostics"]["flags"] == ["perfect_isolation"]
    # the absorbing element shows up as a unitarity deficit
    assert rep["diagnostics"]["unitarity_deficit"] > 0.1


def test_report_schema_and_json_text():
    for rep in (devices.circulator_report(math.pi, 0.0),
                devices.device_report({"device_type": "isolator", "emitters": [[0.6, 0.1, 0.2]], "phases": []})):
        assert set(rep) == {"schema_version", "device_type", "inputs", "results", "diagnostics"}
        assert rep["schema_version"] == devices.SCHEMA_VERSION
        text = devices.dumps_report(rep)
        assert json.loads(text) == json.loads(json.dumps(rep))
        assert text == devices.dumps_report(json.loads(text))


def test_complex_entries_are_pairs():
    rep = devices.circulator_report(math.pi, 0.0)
    S = rep["results"]["s_matrix"]
    assert len(S) == 4 and all(len(row) == 4 for row in S)
    assert all(len(v) == 2 and all(isinstance(c, float) for c in v) for row in S for v in row)


@pytest.mark.parametrize("spec", [
    {"device_type": "diode"},
    {},
    {"device_type": "isolator", "emitters": [[0.5, 0.0]], "gain": 2.0},
])
def test_bad_specs_rejected(spec):
    with pytest.raises(ValueError):
        devices.device_report(spec)
