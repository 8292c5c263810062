import math

import numpy as np
import pytest

from consensim.core import (
    CommSequence,
    InvalidInstanceError,
    NormalEstimate,
    PositivityError,
    Signal,
    TraceError,
    init_knowledge,
    make_instance,
)
from consensim.generators import derive_stream

from helpers import seq_of


def test_single_node_instance():
    inst = make_instance(1, 1, [[7]])
    assert inst.average.tolist() == [7.0]


def test_index_initials_average():
    inst = make_instance(80, 1, [[i] for i in range(1, 81)])
    assert inst.average.tolist() == [40.5]


def test_componentwise_mean():
    inst = make_instance(3, 2, [[1, 0], [0, 1], [2, 2]])
    assert inst.average.tolist() == [1.0, 1.0]


def test_dimension_mismatch_rejected():
    with pytest.raises(InvalidInstanceError):
        make_instance(2, 2, [[1, 2], [3]])
    with pytest.raises(InvalidInstanceError):
        make_instance(2, 1, [[1]])
    with pytest.raises(InvalidInstanceError):
        make_instance(0, 1, [])


def test_initials_are_immutable():
    inst = make_instance(2, 1, [[1], [2]])
    with pytest.raises(ValueError):
        inst.initials[0][0] = 5.0


def test_da_initialization():
    inst = make_instance(2, 1, [[3], [5]])
    k = init_knowledge(inst, 1, "da")
    assert k.normal.dense.tolist() == [0.5, 0.0]
    assert k.estimate.tolist() == [1.5]
    assert k.own_initial.tolist() == [3.0]


def test_gossip_initialization_keeps_raw_initial():
    inst = make_instance(2, 1, [[3], [5]])
    k = init_knowledge(inst, 1, "gossip")
    assert k.estimate.tolist() == [3.0]


def test_lattice_initialization_and_single_node_consensus():
    inst = make_instance(1, 1, [[7]])
    for alg in ("bm", "oh", "dda"):
        k = init_knowledge(inst, 1, alg)
        assert k.at_consensus()
        assert k.estimate.tolist() == [7.0]
    inst3 = make_instance(3, 1, [[1], [2], [3]])
    k = init_knowledge(inst3, 2, "dda")
    assert k.normal.support == frozenset({2})
    assert k.estimate.tolist() == [2.0 / 3.0]


def test_aris_initialization_reproduces_seeded_stream():
    inst = make_instance(3, 2, [[1, 2], [3, 4], [5, 6]])
    k = init_knowledge(inst, 2, "aris", r=5, rng=derive_stream(42, 2))
    regen = derive_stream(42, 2)
    expected = np.empty((2, 5))
    for row, rate in enumerate((3.0, 4.0)):
        for col in range(5):
            expected[row, col] = -math.log(regen.next_float()) / rate
    assert np.array_equal(k.aris.sketch, expected)
    assert k.aris.counter == 0
    assert k.aris.indicator == frozenset({2})
    assert k.estimate.tolist() == [1.0, 4.0 / 3.0]


def test_aris_rejects_nonpositive_initials():
    inst = make_instance(2, 1, [[1], [0]])
    with pytest.raises(PositivityError):
        init_knowledge(inst, 2, "aris", r=4, rng=derive_stream(0, 2))


def test_normal_estimate_representations():
    lat = NormalEstimate.lattice(4, {1, 3})
    assert lat.vector().tolist() == [0.25, 0.0, 0.25, 0.0]
    assert lat.component(3) == 0.25 and lat.component(2) == 0.0
    assert lat.norm_sq() == 2 / 16
    assert not lat.is_consensus()
    assert NormalEstimate.lattice(4, {1, 2, 3, 4}).is_consensus()
    dense = NormalEstimate.dense_vec(4, np.full(4, 0.25))
    assert dense.is_consensus()
    off = NormalEstimate.dense_vec(4, np.array([0.25, 0.25, 0.25, 0.25 + 1e-6]))
    assert not off.is_consensus()


def test_signal_causality_and_self_loop():
    with pytest.raises(TraceError):
        Signal(t_recv=1.0, event_id=0, t_send=2.0, sender=1, receiver=2)
    with pytest.raises(TraceError):
        Signal(t_recv=2.0, event_id=0, t_send=1.0, sender=1, receiver=1)


def test_sequence_rejects_simultaneous_receptions():
    sigs = [Signal(t_recv=5.0, event_id=0, t_send=1.0, sender=1, receiver=3),
            Signal(t_recv=5.0, event_id=1, t_send=2.0, sender=2, receiver=3)]
    with pytest.raises(TraceError):
        CommSequence(events=tuple(sigs))


def test_sequence_ordering_window():
    seq = seq_of((1, 2, 0, 4), (2, 3, 1, 2))
    assert [s.t_recv for s in seq] == [2.0, 4.0]
    assert seq.window() == (0.0, 4.0)
    assert seq.max_node() == 3
