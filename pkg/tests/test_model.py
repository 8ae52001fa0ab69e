import json

import numpy as np
import pytest

from sdsem import model
from sdsem.errors import CycleError, ParseError, SchemaError, ValidationError

from conftest import make_spec


def test_valid_minimal_spec():
    assert model.validate(make_spec(n=2)) == []


def test_n_zero_rejected():
    report = model.validate(make_spec(n=1))
    assert report == []
    bad = make_spec(n=1)
    bad.dims.n = 0
    bad.statics.b3 = np.zeros((0, 0))
    bad.statics.gamma3 = np.zeros((0, 0))
    bad.statics.b2 = np.zeros((0, 0))
    bad.statics.gamma2 = np.zeros((0, 0))
    bad.dynamic.b1 = np.zeros((0, 0))
    bad.dynamic.gamma1 = np.zeros((0, 0))
    bad.measurement.lambda_y = np.zeros((0, 0))
    bad.measurement.theta_y = np.zeros((0, 0))
    assert any(v.rule == "min-one-static" for v in model.validate(bad))


def test_indicators_require_observations():
    bad = make_spec(n=1, p=1, q=0, lambda_y=[[1.0]], error_sd=[0.1])
    assert any(v.rule == "indicators-need-observations" for v in model.validate(bad))


def test_horizon_ordering_and_dt():
    bad = make_spec(n=1, t_start=5.0, t_end=1.0)
    rules = {v.rule for v in model.validate(bad)}
    assert "t-ordering" in rules
    bad2 = make_spec(n=1, t_end=1.0, dt=2.0)
    assert any(v.rule == "dt-within-span" for v in model.validate(bad2))


def test_observation_times_strictly_increasing():
    bad = make_spec(n=1, p=1, q=3, obs_times=[0.0, 2.0, 2.0],
                    lambda_y=[[1.0]], error_sd=[0.0])
    assert any(v.rule == "strictly-increasing" for v in model.validate(bad))


def test_interaction_pair_order_enforced():
    bad = make_spec(n=3, b4=[(0, 2, 1, 0.5)])
    assert any(v.rule == "interaction-pair-order" for v in model.validate(bad))


def test_negative_delay_and_sd_rejected():
    bad = make_spec(n=1, p=1, q=2, obs_times=[0.0, 1.0],
                    lambda_y=[[1.0]], theta_y=[[-0.5]], error_sd=[-0.1])
    rules = {v.rule for v in model.validate(bad)}
    assert "nonnegative-delay" in rules
    assert "nonnegative-sd" in rules


def test_two_cycle_rejected_in_restricted_mode_allowed_in_nonrecursive():
    b3 = [[0.0, 0.5], [0.5, 0.0]]
    g3 = [[0.0, 1.0], [1.0, 0.0]]
    cyc = make_spec(n=2, b3=b3, gamma3=g3, mode=model.SD_RESTRICTED)
    assert any(v.rule == "acyclic-statics" for v in model.validate(cyc))
    ok = make_spec(n=2, b3=b3, gamma3=g3, mode=model.NONRECURSIVE)
    assert model.validate(ok) == []


def test_zero_exponent_diagonal_is_constant_not_self_loop():
    spec = make_spec(n=1, b3=[[3.0]], gamma3=[[0.0]])
    assert model.validate(spec) == []
    assert model.dependence_edges(spec) == set()
    assert model.constant_statics(spec) == [0]


def test_self_loop_with_nonzero_exponent_is_a_cycle():
    spec = make_spec(n=1, b3=[[0.5]], gamma3=[[1.0]])
    with pytest.raises(CycleError):
        model.topological_order(spec)


def test_topological_order_deterministic_ties_ascending():
    # y3 depends on y1; ready nodes always pop smallest-index-first
    spec = make_spec(n=4,
                     b3=[[0.0] * 4,
                         [0.0] * 4,
                         [1.0, 0.0, 0.0, 0.0],
                         [0.0] * 4],
                     gamma3=[[0.0] * 4,
                             [0.0] * 4,
                             [1.0, 0.0, 0.0, 0.0],
                             [0.0] * 4])
    assert model.topological_order(spec) == [0, 1, 2, 3]
    # with the dependency reversed (y1 depends on y3) the order changes
    spec2 = make_spec(n=4,
                      b3=[[0.0, 0.0, 1.0, 0.0],
                          [0.0] * 4,
                          [0.0] * 4,
                          [0.0] * 4],
                      gamma3=[[0.0, 0.0, 1.0, 0.0],
                              [0.0] * 4,
                              [0.0] * 4,
                              [0.0] * 4])
    assert model.topological_order(spec2) == [1, 2, 0, 3]


def test_limits_to_growth_topology():
    spec = model.bundled_spec("limits_to_growth")
    order = model.topological_order(spec)
    pos = {v: i for i, v in enumerate(order)}
    assert pos[2] < pos[3]              # capacity before density
    assert pos[3] < pos[4]              # density before its effect
    assert pos[0] < pos[5] and pos[8] < pos[5]
    assert pos[4] < pos[6] and pos[5] < pos[6]
    assert pos[1] < pos[7] and pos[8] < pos[7]
    assert order == [0, 1, 2, 8, 3, 4, 5, 6, 7]


def test_bundled_spec_dimensions():
    ltg = model.bundled_spec("limits_to_growth")
    assert (ltg.dims.m, ltg.dims.n, ltg.dims.p, ltg.dims.q) == (1, 9, 1, 9)
    pd = model.bundled_spec("political_democracy")
    assert (pd.dims.m, pd.dims.n, pd.dims.p, pd.dims.q) == (0, 3, 11, 75)
    lp = model.bundled_spec("linear_population")
    assert (lp.dims.m, lp.dims.n, lp.dims.p, lp.dims.q) == (1, 1, 1, 11)


def test_round_trip_bit_exact(tmp_path):
    spec = model.bundled_spec("limits_to_growth")
    # perturb with values that stress float formatting
    spec.statics.b3[0][0] = 0.1 + 0.2  # 0.30000000000000004
    out = tmp_path / "spec.json"
    model.save_spec(spec, out)
    again = model.load_spec(out)
    assert again.to_dict() == spec.to_dict()
    out2 = tmp_path / "spec2.json"
    model.save_spec(again, out2)
    assert out.read_text() == out2.read_text()


def test_schema_errors():
    with pytest.raises(SchemaError, match="missing top-level"):
        model.spec_from_dict({"dims": {"m": 0, "n": 1, "p": 0, "q": 0}})
    doc = model.bundled_spec("linear_population").to_dict()
    doc["extra_field"] = 1
    with pytest.raises(SchemaError, match="unknown top-level"):
        model.spec_from_dict(doc)


def test_negative_dt_is_schema_error():
    doc = model.bundled_spec("linear_population").to_dict()
    doc["horizon"]["dt"] = -0.5
    with pytest.raises(SchemaError, match="horizon.dt"):
        model.spec_from_dict(doc)


def test_invalid_spec_raises_validation_error_with_report():
    doc = model.bundled_spec("linear_population").to_dict()
    doc["horizon"]["t_end"] = -1.0
    with pytest.raises(ValidationError) as exc:
        model.spec_from_dict(doc)
    assert any(v.rule == "t-ordering" for v in exc.value.report)


def test_malformed_json_is_parse_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        model.load_spec(bad)


def test_resolve_spec_path_env_override(tmp_path, monkeypatch):
    alt = tmp_path / "specs"
    alt.mkdir()
    model.save_spec(make_spec(n=1), alt / "custom.json")
    monkeypatch.setenv(model.SPEC_DIR_ENV, str(alt))
    assert model.resolve_spec_path("custom") == alt / "custom.json"
    # bundled names still resolve
    assert model.resolve_spec_path("linear_population").name == "linear_population.json"


def test_disturbance_round_trip():
    spec = model.bundled_spec("political_democracy")
    doc = spec.to_dict()
    kinds = [d["kind"] for d in doc["disturbances"]]
    assert kinds == ["noise", "noise", "noise"]
    assert all(set(d) == {"target", "kind", "sd", "seed"} for d in doc["disturbances"])
    assert model.spec_from_dict(json.loads(json.dumps(doc))).to_dict() == doc
