import itertools
from fractions import Fraction

import numpy as np
import pytest

from helpers import hand_network
from ocfsim.game import PartialCoalition, fairness_shares, resource_pool
from ocfsim.network import NetworkConfig, make_network
from ocfsim.scheduler import build_schedule, largest_remainder


def _net(initial, T=20, L=4):
    return hand_network(initial, T, np.ones((len(initial), len(initial), L)), sues_per_sbs=L,
                        mbs_sue=np.ones((len(initial), L)))


def test_singleton_gets_everything_sues_cycle():
    net = _net([(2, 5, 9, 11)])
    c = PartialCoalition.of(0, [(0, m, k) for m, k in enumerate((2, 5, 9, 11))])
    s = build_schedule(c, net)
    rows = list(s.rows())
    assert len(rows) == 16
    assert all(i == 0 for _, _, i, _ in rows)
    assert [u for _, _, _, u in rows] == [0] * 4 + [1] * 4 + [2] * 4 + [3] * 4
    assert s.gamma() == {(0, u, k): 1.0 for u, k in enumerate((2, 5, 9, 11))}


def test_equal_units_split_evenly():
    net = _net([(1, 3), (1, 3)], L=2)
    c = PartialCoalition.of(0, [(0, 0, 1), (1, 1, 3)])
    s = build_schedule(c, net)
    assert s.cells_of(0) == s.cells_of(1) == 4


def test_three_to_one_split():
    net = _net([(0, 1, 2, 3), (4, 5, 6, 7)])
    c = PartialCoalition.of(0, [(0, 0, 0), (0, 1, 1), (0, 2, 2), (1, 0, 4)])
    s = build_schedule(c, net)
    assert (s.cells_of(0), s.cells_of(1)) == (12, 4)


def _closest_split(weights, total):
    """Reference apportionment: minimise the largest deviation from the exact quota."""
    best = None
    for split in itertools.product(range(total + 1), repeat=len(weights)):
        if sum(split) != total:
            continue
        dev = max(abs(Fraction(q) - Fraction(w * total, sum(weights))) for q, w in zip(split, weights))
        if best is None or dev < best[0]:
            best = (dev, split)
    return best


@pytest.mark.parametrize("weights, total", [([3, 1], 16), ([1, 1, 1], 8), ([2, 1, 1], 12), ([1, 1, 1], 4),
                                            ([3, 2], 12), ([1, 2, 1], 7)])
def test_largest_remainder_is_closest(weights, total):
    out = largest_remainder(weights, total)
    dev, _ = _closest_split(weights, total)
    assert sum(out) == total
    assert max(abs(Fraction(q) - Fraction(w * total, sum(weights))) for q, w in zip(out, weights)) == dev


def test_remainder_ties_go_to_earlier_position():
    assert largest_remainder([1, 1, 1], 4) == [2, 1, 1]
    assert largest_remainder([1, 1, 1], 5) == [2, 2, 1]


def test_member_order_descending_units_then_id():
    net = _net([(0, 1), (2, 3), (4, 5)], L=2)
    c = PartialCoalition.of(0, [(0, 0, 0), (1, 0, 2), (1, 1, 3), (2, 0, 4)])
    s = build_schedule(c, net)
    first = [i for _, _, i, _ in s.rows()]
    # SBS 1 holds two units so it goes first, then SBS 0 and SBS 2 by id
    assert first[:s.cells_of(1)] == [1] * s.cells_of(1)
    assert first[s.cells_of(1):s.cells_of(1) + s.cells_of(0)] == [0] * s.cells_of(0)


def test_schedule_invariants_on_random_coalitions():
    net = make_network(NetworkConfig(n_sbs=5, seed=3))
    rng = np.random.default_rng(1)
    sub = net.topology.initial_subchannels
    for _ in range(50):
        units = [(i, m, sub[i][m]) for i in range(5) for m in range(4) if rng.random() < 0.4] or [(0, 0, sub[0][0])]
        c = PartialCoalition.of(0, units)
        s = build_schedule(c, net)
        cells = len(resource_pool(c)) * 4
        assert len(s.assignment) == cells            # every cell used once, no double booking
        per_k = {}
        for (i, u, k), gam in s.gamma().items():
            assert 0 < gam <= 1
            per_k[k] = per_k.get(k, 0) + gam
            assert u in {m % 4 for (j, m, _) in units if j == i}
        assert all(v <= 1 + 1e-12 for v in per_k.values())
        for i, f in fairness_shares(c).items():
            assert abs(s.cells_of(i) / cells - f) < 1 / cells
        again = build_schedule(c, net)
        assert again == s
        assert sum(n for n in s.airtime_cells().values()) == cells
