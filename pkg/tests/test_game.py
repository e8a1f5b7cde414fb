import math

import numpy as np
import pytest

from helpers import hand_network, snr_gain
from ocfsim.game import (
    CoalitionStructure, PartialCoalition, SbsUnit, StructureError, coalition_power_cost, coalition_utility,
    coalition_value, evaluate, fairness_shares, resource_pool, sbs_payoff, structure_value, total_sbs_payoff,
)
from ocfsim.network import NetworkConfig, dbm_to_mw, make_network
from ocfsim.scheduler import CoalitionSchedule


def pc(cid, *units):
    return PartialCoalition.of(cid, units)


def test_resource_pool():
    assert resource_pool(pc(0, (1, 0, 1), (1, 1, 2), (2, 0, 3))) == {1, 2, 3}
    assert resource_pool(pc(0, (1, 0, 1), (2, 0, 1))) == {1}
    assert resource_pool(pc(0, *[(0, m, k) for m, k in enumerate((5, 6, 7, 8))])) == {5, 6, 7, 8}


def test_fairness_shares():
    assert fairness_shares(pc(0, (0, 0, 1), (0, 1, 2), (1, 0, 3), (1, 1, 4))) == {0: 0.5, 1: 0.5}
    assert fairness_shares(pc(0, (0, 0, 1), (0, 1, 2), (0, 2, 5), (1, 0, 3))) == {0: 0.75, 1: 0.25}
    assert fairness_shares(pc(0, (3, 0, 1))) == {3: 1.0}


def _bcast_dbm(d):
    return -70 + 37 + 30 * math.log10(d)


def test_power_cost():
    net = hand_network([(0,), (1,), (2,)], 4, np.ones((3, 3, 1)),
                       sbs_xy=[(1000, 1000), (1050, 1000), (1100, 1000)])
    assert coalition_power_cost(pc(0, (0, 0, 0)), net) == 0.0
    pair = coalition_power_cost(pc(0, (0, 0, 0), (2, 0, 2)), net)
    assert pair == pytest.approx(2 * dbm_to_mw(_bcast_dbm(100)), rel=1e-12)
    trio = coalition_power_cost(pc(0, (0, 0, 0), (1, 0, 1), (2, 0, 2)), net)
    expected = 2 * 10 ** (_bcast_dbm(100) / 10) + 10 ** (_bcast_dbm(50) / 10)
    assert trio == pytest.approx(expected, rel=1e-12)


@pytest.fixture
def shared():
    """Two SBSs, one unit each, both on subchannel 0, own SNR 3 and cross SNR 7."""
    base = hand_network([(0,), (0,)], 2, np.ones((2, 2, 1)))
    g = np.array([[[snr_gain(3, base)], [snr_gain(7, base)]], [[snr_gain(7, base)], [snr_gain(3, base)]]])
    return hand_network([(0,), (0,)], 2, g)


def test_noncooperative_hand_value(shared):
    s = CoalitionStructure.noncooperative(shared)
    out = evaluate(s, shared)
    each = math.log2(1 + 3 / (1 + 7))
    assert out.sbs_totals == pytest.approx([each, each], abs=1e-9)
    assert out.system_value == pytest.approx(2 * each, abs=1e-9)


def test_merged_hand_value(shared):
    s = CoalitionStructure((pc(0, (0, 0, 0), (1, 0, 0)),))
    out = evaluate(s, shared)
    # pool {0}: 4 cells split 2/2, no other coalition, SINR 3 -> log2 4 = 2 for half the time each
    assert out.coalition_values[0] == pytest.approx(2.0, abs=1e-9)
    assert out.imputation[0] == pytest.approx({0: 1.0, 1: 1.0}, abs=1e-9)


def test_own_transmission_in_other_coalition_interferes():
    # SBS 0 holds subchannel 0 twice over two coalitions; it may not count double rate
    base = hand_network([(0, 1), (0, 2)], 3, np.ones((2, 2, 1)))
    g = np.array([[[snr_gain(3, base)], [1e-30]], [[1e-30], [snr_gain(3, base)]]])
    net = hand_network([(0, 1), (0, 2)], 3, g)
    s = CoalitionStructure((pc(0, (0, 0, 0), (1, 1, 2)), pc(1, (1, 0, 0), (0, 1, 1))))
    v = evaluate(s, net).coalition_values
    # both pools start with subchannel 0 and SBS 0 is first in each, so SBS 0 sits on
    # subchannel 0 in two coalitions and hears itself; SBS 1 is clean on 2 and on 1
    expected = math.log2(1 + 3 / (1 + 3)) + math.log2(1 + 3)
    assert v[0] == pytest.approx(expected, abs=1e-9)
    assert v[1] == pytest.approx(expected, abs=1e-9)


def test_zero_airtime_utility_is_zero(shared):
    c = pc(0, (0, 0, 0), (1, 0, 0))
    s = CoalitionStructure((c,))
    empty = {0: CoalitionSchedule(0, (0,), 4, {})}
    assert coalition_utility(c, s, shared, empty) == 0.0


def test_interference_free_unit_sinr():
    base = hand_network([(0, 1)], 3, np.ones((1, 1, 1)))
    net = hand_network([(0, 1)], 3, [[[snr_gain(1, base)]]])
    s = CoalitionStructure.noncooperative(net)
    # full airtime on two subchannels at SINR 1
    assert coalition_utility(s.coalition(0), s, net) == pytest.approx(2.0, abs=1e-12)


def test_value_gating(shared):
    c = pc(0, (0, 0, 0), (1, 0, 0))
    s = CoalitionStructure((c,))
    cost = coalition_power_cost(c, shared)
    assert cost > 0
    assert coalition_value(c, s, shared, p_lim_mw=cost) == pytest.approx(2.0, abs=1e-9)
    assert coalition_value(c, s, shared, p_lim_mw=np.nextafter(cost, 0)) == 0.0
    assert coalition_value(PartialCoalition.of(9, ()), s, shared) == 0.0


def test_payoff_outside_support_is_zero(shared):
    s = CoalitionStructure.noncooperative(shared)
    assert sbs_payoff(1, s.coalition(0), s, shared) == 0.0
    assert sbs_payoff(0, s.coalition(0), s, shared) == pytest.approx(math.log2(1 + 3 / 8), abs=1e-12)


def test_singleton_payoffs_are_standalone_values():
    net = make_network(NetworkConfig(n_sbs=5, seed=3))
    s = CoalitionStructure.noncooperative(net)
    out = evaluate(s, net)
    for i in range(5):
        assert out.sbs_totals[i] == out.coalition_values[i]
        assert total_sbs_payoff(i, s, net) == out.sbs_totals[i]


def test_payoff_accounting_random_structure():
    net = make_network(NetworkConfig(n_sbs=6, seed=8))
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 4, size=(6, 4))
    s = CoalitionStructure.from_labels(labels, net)
    out = evaluate(s, net)
    assert math.isclose(out.sbs_totals.sum(), out.system_value, rel_tol=1e-9)
    assert structure_value(s, net) == out.system_value
    for cid, row in out.imputation.items():
        assert sum(fairness_shares(s.coalition(cid)).values()) == pytest.approx(1.0, abs=1e-12)
        assert sum(row.values()) == pytest.approx(out.coalition_values[cid], rel=1e-12)


def test_labels_round_trip():
    net = make_network(NetworkConfig(n_sbs=4, seed=1))
    labels = np.array([[0, 0, 5, 5], [1, 0, 1, 1], [2, 2, 2, 7], [3, 3, 3, 3]])
    s = CoalitionStructure.from_labels(labels, net)
    assert np.array_equal(s.to_labels(4, 4), labels)
    s.validate(net)


def _units(net, i):
    return [SbsUnit(i, m, k) for m, k in enumerate(net.topology.initial_subchannels[i])]


def test_validate_duplicate_unit():
    net = make_network(NetworkConfig(n_sbs=2, seed=1))
    u0, u1 = _units(net, 0), _units(net, 1)
    s = CoalitionStructure((PartialCoalition.of(0, u0), PartialCoalition.of(1, u1 + [u0[0]])))
    with pytest.raises(StructureError) as e:
        s.validate(net)
    assert e.value.check == "unit conservation"


def test_validate_missing_unit():
    net = make_network(NetworkConfig(n_sbs=2, seed=1))
    s = CoalitionStructure((PartialCoalition.of(0, _units(net, 0)), PartialCoalition.of(1, _units(net, 1)[1:])))
    with pytest.raises(StructureError, match="unit conservation"):
        s.validate(net)


def test_validate_wrong_subchannel():
    net = make_network(NetworkConfig(n_sbs=1, seed=1))
    u = _units(net, 0)
    bad = [u[0]._replace(subchannel=(u[0].subchannel + 1) % 20 if (u[0].subchannel + 1) % 20 not in
                         net.topology.initial_subchannels[0] else 19)] + u[1:]
    with pytest.raises(StructureError, match="unit ownership"):
        CoalitionStructure((PartialCoalition.of(0, bad),)).validate(net)


def test_validate_duplicate_ids():
    net = make_network(NetworkConfig(n_sbs=2, seed=1))
    s = CoalitionStructure((PartialCoalition.of(0, _units(net, 0)), PartialCoalition.of(0, _units(net, 1))))
    with pytest.raises(StructureError, match="coalition identity"):
        s.validate(net)
