import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fanetsim.linkmodels import (
    DEFAULT_THROUGHPUT,
    DataMessage,
    DegenerateFit,
    MeshLinkState,
    MeshParams,
    MeshPhase,
    PayloadTooLarge,
    ThroughputModel,
    broadcast_delivery,
    fit_quadratic,
    is_stable,
    mesh_step,
    tcp_rate,
    udp_delivered,
)
from fanetsim.radio import PropagationModel, RadioConfig
from fanetsim.simcore import RngStream, seconds
from fanetsim.world import Position

PARAMS = MeshParams(t_scan=2.0, t_assoc=6.0)
CFG = RadioConfig()
MODEL = PropagationModel(r_max=100.0, r_reliable=80.0)


def drive(in_range_by_second, params=PARAMS):
    """Step the machine once per second; return (final state, all emissions)."""
    state = MeshLinkState()
    emissions = []
    for sec, in_range in enumerate(in_range_by_second):
        state, emitted = mesh_step(state, in_range, seconds(float(sec)), params, peer="d1")
        emissions.extend((sec, e) for e in emitted)
    return state, emissions


def test_short_window_never_connects():
    # 5 s of contact < 8 s association budget: no data ever.
    state, emissions = drive([True] * 5 + [False] * 5)
    assert all(e != "data" for _, e in emissions)
    assert state.phase is MeshPhase.DISCONNECTED


def test_sustained_range_connects():
    state, emissions = drive([True] * 12)
    assert state.phase is MeshPhase.CONNECTED
    assert any(e == "data" for _, e in emissions)
    first_data = min(sec for sec, e in emissions if e == "data")
    assert first_data >= PARAMS.association_time


def test_range_loss_disconnects_and_clears_peer():
    state, _ = drive([True] * 12 + [False])
    assert state.phase is MeshPhase.DISCONNECTED
    assert state.peer is None


def test_peer_set_only_while_associating_or_connected():
    state = MeshLinkState()
    for sec in range(12):
        state, _ = mesh_step(state, True, seconds(float(sec)), PARAMS, peer="d1")
        if state.phase in (MeshPhase.ASSOCIATING, MeshPhase.CONNECTED):
            assert state.peer == "d1"
        else:
            assert state.peer is None


@settings(max_examples=200, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=60))
def test_data_only_in_connected(trace):
    state = MeshLinkState()
    for sec, in_range in enumerate(trace):
        prev_phase = state.phase
        state, emitted = mesh_step(state, in_range, seconds(float(sec)), PARAMS, peer="d1")
        if "data" in emitted:
            assert prev_phase is MeshPhase.CONNECTED and in_range


def test_broadcast_delivery_at_zero_distance():
    msg = DataMessage("m1", "S1", 0, payload_len=100)
    rng = RngStream(1, 0)
    got = broadcast_delivery(
        msg, Position(0, 0, 0), CFG, [("d1", Position(0, 0, 0), CFG)], MODEL, rng
    )
    assert got == ["d1"]


def test_broadcast_delivery_beyond_range():
    msg = DataMessage("m1", "S1", 0)
    rng = RngStream(1, 0)
    got = broadcast_delivery(
        msg, Position(0, 0, 0), CFG, [("d1", Position(500, 0, 0), CFG)], MODEL, rng
    )
    assert got == []


def test_broadcast_payload_too_large():
    msg = DataMessage("m1", "S1", 0, payload_len=251)
    with pytest.raises(PayloadTooLarge):
        broadcast_delivery(msg, Position(0, 0, 0), CFG, [], MODEL, RngStream(1, 0))


def test_broadcast_binomial_at_half_probability():
    # d=90 with r_reliable=80, r_max=100 gives p=0.5 exactly.
    rng = RngStream(7, 0)
    receiver = [("d1", Position(90, 0, 0), CFG)]
    count = 0
    for i in range(10_000):
        msg = DataMessage(f"m{i}", "S1", 0)
        count += bool(broadcast_delivery(msg, Position(0, 0, 0), CFG, receiver, MODEL, rng))
    assert 5000 - 150 <= count <= 5000 + 150


def test_tcp_rate_intercept():
    model = ThroughputModel(a=5e6, b=-1e4, c=10.0)
    assert tcp_rate(0.0, model) == 5e6


def test_tcp_rate_zero_boundary():
    # Coefficients chosen so rate(200) = 0 exactly.
    model = ThroughputModel(a=4e6, b=-2e4, c=0.0)
    assert tcp_rate(200.0, model) == 0.0
    assert tcp_rate(300.0, model) == 0.0  # clamped, never negative


def test_default_model_monotone():
    assert tcp_rate(60.0, DEFAULT_THROUGHPUT) >= tcp_rate(120.0, DEFAULT_THROUGHPUT)
    rates = [tcp_rate(d, DEFAULT_THROUGHPUT) for d in range(0, 201, 10)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_udp_min_rule():
    model = ThroughputModel(a=5e6, b=0.0, c=0.0)
    delivered, loss = udp_delivered(1e6, 50.0, model)
    assert delivered == 1e6 and loss == 0.0
    assert is_stable(loss, model)


def test_udp_capacity_limited():
    model = ThroughputModel(a=0.5e6, b=0.0, c=0.0)
    delivered, loss = udp_delivered(1e6, 50.0, model)
    assert delivered == 0.5e6
    assert loss == pytest.approx(0.5)


def test_udp_out_of_range():
    model = ThroughputModel(a=1e6, b=-1e4, c=0.0)
    delivered, loss = udp_delivered(1e6, 150.0, model)
    assert delivered == 0.0 and loss == 1.0


def test_fit_quadratic_exact_recovery():
    pts = [(d, 1 + 2 * d + 3 * d * d) for d in (0.0, 1.0, 2.0, 5.0, 10.0)]
    a, b, c = fit_quadratic(pts)
    assert a == pytest.approx(1.0, rel=1e-9, abs=1e-9)
    assert b == pytest.approx(2.0, rel=1e-9)
    assert c == pytest.approx(3.0, rel=1e-9)


def test_fit_quadratic_constant_data():
    a, b, c = fit_quadratic([(d, 5.0) for d in (0.0, 1.0, 2.0, 3.0)])
    assert a == pytest.approx(5.0)
    assert b == pytest.approx(0.0, abs=1e-9)
    assert c == pytest.approx(0.0, abs=1e-9)


def test_fit_quadratic_underdetermined():
    with pytest.raises(DegenerateFit):
        fit_quadratic([(0.0, 1.0), (1.0, 2.0)])
    with pytest.raises(DegenerateFit):
        fit_quadratic([(0.0, 1.0), (0.0, 2.0), (1.0, 3.0)])


def test_fit_optimality_against_perturbations():
    rng = RngStream(11, 0)
    pts = [(float(d), 1e6 - 3e3 * d + 4.0 * d * d + 1e4 * (rng.next_uniform() - 0.5))
           for d in range(0, 201, 20)]
    a, b, c = fit_quadratic(pts)

    def residual(aa, bb, cc):
        return sum((y - (aa + bb * x + cc * x * x)) ** 2 for x, y in pts)

    best = residual(a, b, c)
    for _ in range(100):
        da = (rng.next_uniform() - 0.5) * 1e3
        db = (rng.next_uniform() - 0.5) * 10
        dc = (rng.next_uniform() - 0.5) * 0.1
        assert residual(a + da, b + db, c + dc) >= best - 1e-6
