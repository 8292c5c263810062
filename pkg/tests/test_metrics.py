import math

import numpy as np
import pytest

from consensim.algorithms import build_signal, da_signal
from consensim.core import KnowledgeSet, NormalEstimate, init_knowledge, make_instance
from consensim.generators import derive_stream
from consensim.metrics import (
    CostLedger,
    measure_costs,
    measure_phi,
    measure_rho,
    network_consensus_error,
    network_normal_error_sq,
    normal_error,
    phi_breakdown,
    support_set_cost,
    table_bounds,
)


def make_bm_state(inst, i, support):
    stored = {idx: inst.initial(idx) for idx in support}
    est = sum(inst.initial(idx) for idx in sorted(support)) / inst.n
    return KnowledgeSet(node_id=i, n=inst.n, alg="bm",
                        normal=NormalEstimate.lattice(inst.n, frozenset(support)),
                        estimate=est, own_initial=inst.initial(i), stored_initials=stored)


def make_lattice_state(inst, i, support, alg):
    est = sum(inst.initial(idx) for idx in sorted(support)) / inst.n
    return KnowledgeSet(node_id=i, n=inst.n, alg=alg,
                        normal=NormalEstimate.lattice(inst.n, frozenset(support)),
                        estimate=est, own_initial=inst.initial(i))


def test_normal_error_examples():
    assert normal_error(NormalEstimate.lattice(4, {1, 2, 3, 4})) == 0.0
    assert normal_error(NormalEstimate.lattice(2, {1})) == 0.5
    for n in (2, 5, 9):
        inst = make_instance(n, 1, [[float(i)] for i in range(1, n + 1)])
        states = {i: init_knowledge(inst, i, "dda") for i in range(1, n + 1)}
        assert math.isclose(network_normal_error_sq(states), (n - 1) / n, rel_tol=1e-12)


def test_network_consensus_error_examples():
    inst = make_instance(2, 1, [[0.0], [1.0]])
    states = {1: init_knowledge(inst, 1, "gossip"), 2: init_knowledge(inst, 2, "gossip")}
    assert network_consensus_error(states, inst) == 1.0

    inst80 = make_instance(80, 1, [[float(i)] for i in range(1, 81)])
    states80 = {i: init_knowledge(inst80, i, "da") for i in range(1, 81)}
    expected = sum(abs(i / 80.0 - 40.5) for i in range(1, 81))
    assert math.isclose(network_consensus_error(states80, inst80), expected, rel_tol=1e-12)
    assert math.isclose(expected, 3199.5, rel_tol=1e-12)

    single = make_instance(1, 1, [[7.0]])
    assert network_consensus_error({1: init_knowledge(single, 1, "bm")}, single) == 0.0


def test_support_set_cost_is_two_sided():
    assert support_set_cost(1, 8) == 1
    assert support_set_cost(7, 8) == 1
    assert support_set_cost(4, 8) == 4
    assert support_set_cost(8, 8) == 0
    assert max(support_set_cost(k, 9) for k in range(1, 9)) == 4


def test_gossip_costs_flat():
    inst = make_instance(4, 1, [[1.0], [2.0], [3.0], [4.0]])
    k = init_knowledge(inst, 1, "gossip")
    ledger = measure_costs(k, build_signal(k))
    assert (ledger.phi, ledger.rho, ledger.omega) == (2, 2, 4)


def test_da_init_cost_matches_table_minimum():
    inst = make_instance(8, 1, [[float(i)] for i in range(1, 9)])
    k = init_knowledge(inst, 1, "da")
    ledger = measure_costs(k, da_signal(k))
    assert ledger.phi == 4 * 1 + 6 == 10
    assert ledger.rho == 2 * 1 + 2
    assert ledger.omega == 6 * 1 + 8


def test_bm_componentwise_maximum_matches_table():
    # the published maximum bounds each item separately: n-1 stored
    # vectors from one extreme state, the floor(n/2) support encoding
    # from another
    n, d = 8, 1
    inst = make_instance(n, d, [[float(i)] * d for i in range(1, n + 1)])
    near_full = phi_breakdown(make_bm_state(inst, 1, set(range(1, n))))
    mid = phi_breakdown(make_bm_state(inst, 1, set(range(1, n // 2 + 1))))
    keys = set(near_full) | set(mid)
    combined = sum(max(near_full.get(key, 0), mid.get(key, 0)) for key in keys)
    assert combined == 2 * n * d + 4 + n // 2 == 24
    bounds = table_bounds("bm", n, d)
    assert bounds.phi_max == combined


def test_table_bounds_formulas():
    for n, d in ((8, 1), (8, 3), (16, 2)):
        half = n // 2
        r = n
        bm = table_bounds("bm", n, d)
        assert (bm.phi_min, bm.phi_max) == (4 * d + 5, 2 * n * d + 4 + half)
        assert (bm.rho_min, bm.rho_max) == (2 * d + 1, 2 * (n - 1) * d + half)
        assert (bm.omega_min, bm.omega_max) == (6 * d + 6, 2 * (2 * n - 1) * d + 4 + 2 * half)
        da = table_bounds("da", n, d)
        assert (da.phi_min, da.phi_max) == (4 * d + 6, 4 * d + 2 * n + 4)
        assert da.omega_min == 6 * d + 8 and da.omega_max == 6 * d + 4 * n + 4
        oh = table_bounds("oh", n, d)
        assert (oh.phi_min, oh.phi_max) == (4 * d + 5, 4 * d + 4 + half)
        assert (oh.rho_min, oh.rho_max) == (2 * d + 2, 2 * d + 2)
        assert (oh.omega_min, oh.omega_max) == (6 * d + 7, 6 * d + 6 + half)
        dda = table_bounds("dda", n, d)
        assert (dda.rho_min, dda.rho_max) == (2 * d + 1, 2 * d + half)
        assert (dda.omega_min, dda.omega_max) == (6 * d + 6, 6 * d + 4 + 2 * half)
        gossip = table_bounds("gossip", n, d)
        assert (gossip.omega_min, gossip.omega_max) == (4 * d, 4 * d)
        aris = table_bounds("aris", n, d, r)
        assert aris.phi_min == 7 + 2 * (r + 2) * d
        assert aris.phi_max == half + 6 + 2 * (r + 2) * d
        assert aris.rho_min == 3 + 2 * (r + 1) * d
        assert aris.rho_max == half + 2 + 2 * (r + 1) * d
        assert aris.omega_min == 10 + (4 * r + 6) * d
        assert aris.omega_max == 2 * half + 8 + (4 * r + 6) * d


def test_growth_rates():
    # doubling n: gossip/oh signal maxima stay put, bm roughly doubles,
    # da storage maximum gains 2n
    d = 2
    for n in (8, 16):
        assert table_bounds("gossip", 2 * n, d).rho_max == table_bounds("gossip", n, d).rho_max
        assert table_bounds("oh", 2 * n, d).rho_max == table_bounds("oh", n, d).rho_max
        bm_ratio = table_bounds("bm", 2 * n, d).rho_max / table_bounds("bm", n, d).rho_max
        assert 1.8 < bm_ratio < 2.2
        assert table_bounds("da", 2 * n, d).phi_max - table_bounds("da", n, d).phi_max == 2 * n


def test_forced_extremes_hit_bounds():
    n, d = 8, 3
    inst = make_instance(n, d, [[float(i)] * d for i in range(1, n + 1)])
    bounds = {alg: table_bounds(alg, n, d, n) for alg in ("bm", "da", "oh", "dda", "gossip", "aris")}

    for alg in ("bm", "da", "oh", "dda", "gossip"):
        k = init_knowledge(inst, 2, alg)
        assert measure_phi(k) == bounds[alg].phi_min
        assert measure_rho(build_signal(k), n) == bounds[alg].rho_min
    rng = derive_stream(0, 2)
    k = init_knowledge(inst, 2, "aris", r=n, rng=rng)
    assert measure_phi(k) == bounds["aris"].phi_min
    assert measure_rho(build_signal(k), n) == bounds["aris"].rho_min

    dense = KnowledgeSet(node_id=1, n=n, alg="da",
                         normal=NormalEstimate.dense_vec(n, np.full(n, 1.0 / n)),
                         estimate=inst.average, own_initial=inst.initial(1))
    assert measure_phi(dense) == bounds["da"].phi_max
    assert measure_rho(da_signal(dense), n) == bounds["da"].rho_max

    half_state = make_lattice_state(inst, 1, set(range(1, n // 2 + 1)), "dda")
    assert measure_phi(half_state) == bounds["dda"].phi_max
    assert measure_rho(build_signal(half_state), n) == bounds["dda"].rho_max
    oh_half = make_lattice_state(inst, 1, set(range(1, n // 2 + 1)), "oh")
    assert measure_phi(oh_half) == bounds["oh"].phi_max
    assert measure_rho(build_signal(oh_half), n) == bounds["oh"].rho_max


def test_cost_ledger_omega():
    assert CostLedger(phi=10, rho=4).omega == 14
