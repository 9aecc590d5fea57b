"""Scenario model: propagation pins, file round-trips, validation."""

import math

import pytest
from hypothesis import given, strategies as st

from slicenet.scenario import (
    Link,
    Node,
    ScenarioValidationError,
    load_scenario,
    path_loss_db,
    rate_per_hz,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from slicenet.topology import generate_topology


def test_path_loss_pins():
    # 43.3 log10(d) + 11.5 + 20 log10(f)
    assert math.isclose(path_loss_db(10.0, 1.0), 54.8)
    assert math.isclose(path_loss_db(100.0, 5.5), 112.90725378988487)


def test_path_loss_domain():
    with pytest.raises(ValueError):
        path_loss_db(0.0, 5.5)
    with pytest.raises(ValueError):
        path_loss_db(10.0, -1.0)


def test_rate_pins():
    assert math.isclose(rate_per_hz(0.0), 1.0)
    assert math.isclose(rate_per_hz(10.0), math.log2(11.0))


@given(
    st.floats(1.0, 1e4, allow_nan=False),
    st.floats(1.0, 1e4, allow_nan=False),
    st.floats(0.5, 10.0, allow_nan=False),
)
def test_path_loss_monotone_in_distance(d1, d2, f):
    lo, hi = sorted((d1, d2))
    assert path_loss_db(lo, f) <= path_loss_db(hi, f) + 1e-12


@given(st.floats(-30.0, 60.0, allow_nan=False), st.floats(0.0, 30.0, allow_nan=False))
def test_rate_monotone_in_snr(snr, gain):
    assert rate_per_hz(snr + gain) >= rate_per_hz(snr)


def test_yaml_round_trip(tmp_path):
    sc = generate_topology("two-mno-urban", seed=3)
    path = tmp_path / "sc.yaml"
    save_scenario(sc, path)
    back = load_scenario(path)
    assert back == sc


def test_dict_round_trip(two_mno_scenario):
    doc = scenario_to_dict(two_mno_scenario)
    assert scenario_from_dict(doc) == two_mno_scenario


def test_wifi_node_must_not_have_owner():
    with pytest.raises(ScenarioValidationError, match="wifi-node-unowned"):
        Node(id="w1", kind="wifi", position_m=(0.0, 0.0), owner=1).validate()


def test_laa_node_needs_owner():
    with pytest.raises(ScenarioValidationError, match="laa-node-owned"):
        Node(id="b1", kind="laa", position_m=(0.0, 0.0)).validate()


def test_contention_window_ordering():
    with pytest.raises(ScenarioValidationError, match="contention-window"):
        Node(
            id="b1", kind="laa", position_m=(0.0, 0.0), owner=1, cw_min=9, cw_max=3
        ).validate()


def test_link_rate_decreases_with_distance(two_mno_scenario):
    sc = two_mno_scenario
    base = sc.links[0]
    node = sc.node(base.node)

    def rate_at(offset_m):
        probe = Link(
            id="probe",
            owner=base.owner,
            node=base.node,
            ue_position_m=(node.position_m[0] + offset_m, node.position_m[1]),
        )
        return sc.link_rate_per_hz(probe)

    assert rate_at(5.0) > rate_at(50.0) > rate_at(900.0)


def test_explicit_snr_override(two_mno_scenario):
    sc = two_mno_scenario
    base = sc.links[0]
    pinned = Link(
        id="p", owner=base.owner, node=base.node,
        ue_position_m=base.ue_position_m, snr_db=7.0,
    )
    assert math.isclose(sc.link_snr_db(pinned), 7.0)
    assert math.isclose(sc.link_rate_per_hz(pinned), rate_per_hz(7.0))
