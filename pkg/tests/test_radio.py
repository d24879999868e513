import pytest
from hypothesis import given
from hypothesis import strategies as st

from fanetsim.radio import (
    MissingAnchor,
    PropagationModel,
    RadioConfig,
    RangeAnchor,
    calibrate,
    calibrate_class,
    effective_range,
    load_default_anchors,
    reception_prob,
)

VERT = RadioConfig(antenna_orientation="vertical", mount_height=2.0, radio_class="lr_node")
FLAT = RadioConfig(antenna_orientation="horizontal", mount_height=0.1, radio_class="lr_node")


def lr_model():
    return calibrate_class(load_default_anchors(), "lr_node")


def test_vertical_pair_reaches_full_range():
    assert effective_range(VERT, VERT, lr_model()) == pytest.approx(180.0, rel=1e-9)


def test_horizontal_ground_pair_collapses():
    assert effective_range(FLAT, FLAT, lr_model()) == pytest.approx(0.4, rel=1e-9)


def test_modified_wifi_reaches_200m():
    model = calibrate_class(load_default_anchors(), "wifi_modified")
    cfg = RadioConfig(radio_class="wifi_modified")
    assert effective_range(cfg, cfg, model) == pytest.approx(200.0, rel=1e-9)


def test_reception_colocated():
    assert reception_prob(0.0, VERT, VERT, lr_model()) == 1.0


def test_reception_zero_at_max_range():
    assert reception_prob(180.0, VERT, VERT, lr_model()) == 0.0


def test_reception_linear_midpoint():
    model = PropagationModel(r_max=180.0, r_reliable=144.0)
    assert reception_prob(162.0, VERT, VERT, model) == pytest.approx(0.5)


def test_calibrate_single_anchor():
    models = calibrate([RangeAnchor("wifi_printed", "vertical", 2.0, 10.0)])
    assert models["wifi_printed"].r_max == 10.0
    assert models["wifi_printed"].r_reliable == pytest.approx(8.0)


def test_calibrate_orientation_penalty():
    models = calibrate(
        [
            RangeAnchor("lr_node", "vertical", 2.0, 180.0),
            RangeAnchor("lr_node", "horizontal", 0.1, 0.4),
        ]
    )
    assert models["lr_node"].orientation_penalty == pytest.approx(0.4 / 180.0)
    assert models["lr_node"].orientation_penalty == pytest.approx(0.00222, abs=1e-5)


def test_calibrate_missing_anchor():
    with pytest.raises(MissingAnchor):
        calibrate_class([], "lr_node")


def test_calibration_round_trip_all_anchors():
    anchors = load_default_anchors()
    models = calibrate(anchors)
    for a in anchors:
        cfg = RadioConfig(
            antenna_orientation=a.orientation,
            mount_height=a.height_m,
            radio_class=a.radio_class,
        )
        got = effective_range(cfg, cfg, models[a.radio_class])
        assert got == pytest.approx(a.range_m, rel=1e-9)


@given(
    r_max=st.floats(1.0, 500.0),
    ratio=st.floats(0.1, 1.0),
    penalty=st.floats(0.001, 1.0),
    degraded=st.booleans(),
    data=st.data(),
)
def test_reception_monotone_in_distance(r_max, ratio, penalty, degraded, data):
    model = PropagationModel(r_max=r_max, r_reliable=ratio * r_max, orientation_penalty=penalty)
    cfg_b = FLAT if degraded else VERT
    distances = sorted(
        data.draw(st.lists(st.floats(0.0, 2 * r_max), min_size=2, max_size=20))
    )
    probs = [reception_prob(d, VERT, cfg_b, model) for d in distances]
    assert all(p1 >= p2 for p1, p2 in zip(probs, probs[1:]))
    assert all(0.0 <= p <= 1.0 for p in probs)


def test_tx_power_bounds():
    with pytest.raises(ValueError):
        RadioConfig(tx_power_dbm=31.0)
