"""Deterministic discrete-event loop.

The event timeline merges sender snapshots (taken at each signal's send
time) with receiver applications (at each receive time); snapshots
order before applications at equal timestamps, so a signal sent at t
carries exactly the receptions that happened strictly before t.  With
that rule the loop is a pure fold over the sequence and a rerun with
the same inputs reproduces every sample bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .algorithms import Goal, apply_update, build_signal, goal_value, gossip_update
from .core import (
    EPS_NORM,
    CommSequence,
    ConfigurationError,
    KnowledgeSet,
    ProblemInstance,
    TraceError,
    init_knowledge,
)
from .generators import derive_stream

_SNAP, _APPLY = 0, 1


@dataclass(frozen=True)
class RunOptions:
    """Algorithm selection plus the options that change its updates."""

    alg: str
    goal: Optional[Goal] = None
    dda_variant: str = "primary"
    dda_p_switch: float = 0.5
    aris_r: Optional[int] = None
    seed: int = 0
    check_invariants: bool = False


@dataclass
class CostStats:
    """Observed pre-consensus cost extremes and cumulative totals."""

    phi_min: Optional[int] = None
    phi_max: Optional[int] = None
    rho_min: Optional[int] = None
    rho_max: Optional[int] = None
    omega_min: Optional[int] = None
    omega_max: Optional[int] = None
    cum_rho: int = 0
    cum_omega: int = 0

    def record(self, phi: Optional[int], rho: Optional[int]) -> None:
        if phi is not None:
            self.phi_min = phi if self.phi_min is None else min(self.phi_min, phi)
            self.phi_max = phi if self.phi_max is None else max(self.phi_max, phi)
        if rho is not None:
            self.rho_min = rho if self.rho_min is None else min(self.rho_min, rho)
            self.rho_max = rho if self.rho_max is None else max(self.rho_max, rho)
        if phi is not None and rho is not None:
            omega = phi + rho
            self.omega_min = omega if self.omega_min is None else min(self.omega_min, omega)
            self.omega_max = omega if self.omega_max is None else max(self.omega_max, omega)


@dataclass
class RunRecord:
    """Time series and final state of one simulated run.

    `samples` rows are (time, max node error, network error, cumulative
    signal count, instantaneous omega of the sampled event).
    """

    alg: str
    samples: list[tuple[float, float, float, int, int]] = field(default_factory=list)
    consensus_times: dict[int, Optional[float]] = field(default_factory=dict)
    consensus_events: dict[int, Optional[int]] = field(default_factory=dict)
    final_states: dict[int, KnowledgeSet] = field(default_factory=dict)
    total_error_drop: float = 0.0
    events_applied: int = 0
    invariant_violations: int = 0
    costs: CostStats = field(default_factory=CostStats)
    normal_probes: list[float] = field(default_factory=list)

    def network_consensus_time(self) -> Optional[float]:
        times = list(self.consensus_times.values())
        if any(t is None for t in times):
            return None
        return max(times)


def _lattice_full(k: KnowledgeSet) -> bool:
    return k.normal.support is not None and len(k.normal.support) == k.n


def _payload_pre_consensus(payload, alg: str, n: int) -> bool:
    """Whether a payload counts toward the pre-consensus cost envelope."""
    if alg == "bm":
        return not payload.terminal
    if alg == "oh":
        return payload.source != 0
    if alg == "dda":
        return len(payload.support) < n
    return True


def _check_invariants(alg: str, pre: KnowledgeSet, outcome, target) -> int:
    """Count violations of the per-update structural properties."""
    bad = 0
    post = outcome.knowledge
    if outcome.error_drop < -EPS_NORM:
        bad += 1
    if post.normal.norm_sq() < pre.normal.norm_sq() - EPS_NORM:
        bad += 1
    if abs(post.normal.component(post.node_id) - 1.0 / post.n) > EPS_NORM:
        bad += 1
    if alg == "da":
        v = post.normal.dense
        if abs(float(v @ v) - float(v.sum()) / post.n) > EPS_NORM:
            bad += 1
    if alg == "oh":
        # element-wise error must never increase on the {0,1/n} lattice
        if not (pre.normal.support <= post.normal.support):
            bad += 1
    return bad


def run(inst: ProblemInstance, opts: RunOptions, seq: CommSequence,
        sample_every: int = 1, probe_times: Optional[list[float]] = None) -> RunRecord:
    """Apply a communication sequence to freshly initialized nodes.

    `probe_times` (ascending) records the network squared normal error
    right after the last event at or before each probe instant.
    """
    if sample_every < 1:
        raise ConfigurationError("sample_every must be >= 1")
    alg = opts.alg
    for sig in seq:
        if not (1 <= sig.sender <= inst.n and 1 <= sig.receiver <= inst.n):
            raise TraceError(f"signal {sig.sender}->{sig.receiver} names a node outside 1..{inst.n}")

    aris_rngs = None
    if alg == "aris":
        aris_rngs = {i: derive_stream(opts.seed, i) for i in range(1, inst.n + 1)}
    dda_rng = derive_stream(opts.seed, 0) if (alg == "dda" and opts.dda_variant == "randomized") else None

    states: dict[int, KnowledgeSet] = {
        i: init_knowledge(inst, i, alg,
                          r=opts.aris_r if alg == "aris" else None,
                          rng=aris_rngs[i] if aris_rngs else None)
        for i in range(1, inst.n + 1)
    }
    target = opts.goal.target if opts.goal is not None else None
    value = goal_value(inst, opts.goal)
    record = RunRecord(alg=alg)
    record.consensus_times = {i: None for i in states}
    record.consensus_events = {i: None for i in states}
    for i, k in states.items():
        if k.at_consensus(target):
            record.consensus_times[i] = 0.0
            record.consensus_events[i] = 0

    gossip_pairs: dict[int, list] = {}
    timeline: list[tuple[float, int, int, object]] = []
    for sig in seq.events:
        if alg == "gossip" and sig.pair_id is not None:
            gossip_pairs.setdefault(sig.pair_id, []).append(sig)
        else:
            timeline.append((sig.t_send, _SNAP, sig.event_id, sig))
            timeline.append((sig.t_recv, _APPLY, sig.event_id, sig))
    for pair_id, pair in gossip_pairs.items():
        # atomic exchange at the shared send instant
        first = min(pair, key=lambda s: s.event_id)
        timeline.append((first.t_send, _APPLY, first.event_id, tuple(pair)))
    timeline.sort(key=lambda e: (e[0], e[1], e[2]))

    payloads: dict[int, object] = {}

    def sample(time: float, signals: int, omega: int) -> None:
        errs = [metrics.node_consensus_error(k, value) for k in states.values()]
        if record.samples and record.samples[-1][0] == time:
            record.samples.pop()
        record.samples.append((time, max(errs), math.fsum(errs), signals, omega))

    probes = sorted(probe_times) if probe_times else []
    probe_at = 0

    applied = 0
    signal_count = 0
    last_time = 0.0
    omega = 0
    sample(0.0, 0, 0)
    for time, kind, _eid, item in timeline:
        if kind == _SNAP:
            payloads[item.event_id] = build_signal(states[item.sender], opts.goal)
            continue

        while probe_at < len(probes) and time > probes[probe_at]:
            record.normal_probes.append(metrics.network_normal_error_sq(states, target))
            probe_at += 1
        last_time = time
        newly_consensus = False
        if isinstance(item, tuple):  # atomic gossip exchange
            a, _b = item
            ki, kj = states[a.receiver], states[a.sender]
            rho_each = metrics.measure_rho(build_signal(ki, None), inst.n)
            new_i, new_j = gossip_update(ki, kj, bidirectional=True)
            states[a.receiver], states[a.sender] = new_i, new_j
            phi_i, phi_j = metrics.measure_phi(new_i), metrics.measure_phi(new_j)
            record.costs.record(phi_i, rho_each)
            record.costs.record(phi_j, rho_each)
            record.costs.cum_rho += 2 * rho_each
            record.costs.cum_omega += 2 * rho_each + phi_i + phi_j
            omega = phi_i + rho_each
            signal_count += 2
        else:
            sig = item
            payload = payloads.pop(sig.event_id)
            pre = states[sig.receiver]
            outcome = apply_update(pre, payload, opts.goal,
                                   dda_variant=opts.dda_variant, dda_rng=dda_rng,
                                   dda_p_switch=opts.dda_p_switch,
                                   aris_rng=aris_rngs[sig.receiver] if aris_rngs else None)
            states[sig.receiver] = outcome.knowledge
            record.total_error_drop += outcome.error_drop
            if opts.check_invariants and alg in ("bm", "da", "oh", "dda"):
                record.invariant_violations += _check_invariants(alg, pre, outcome, target)
            rho = metrics.measure_rho(payload, inst.n)
            phi = metrics.measure_phi(outcome.knowledge)
            record.costs.cum_rho += rho
            record.costs.cum_omega += rho + phi
            record.costs.record(
                phi if not outcome.knowledge.at_consensus(target) else None,
                rho if _payload_pre_consensus(payload, alg, inst.n) else None)
            omega = phi + rho
            signal_count += 1
            node = sig.receiver
            if record.consensus_times[node] is None and outcome.knowledge.at_consensus(target):
                record.consensus_times[node] = time
                record.consensus_events[node] = applied + 1
                newly_consensus = True

        applied += 1
        if newly_consensus or applied % sample_every == 0:
            sample(time, signal_count, omega)

    while probe_at < len(probes):
        record.normal_probes.append(metrics.network_normal_error_sq(states, target))
        probe_at += 1
    if record.samples[-1][3] != signal_count:
        sample(last_time, signal_count, omega)
    record.events_applied = applied
    record.final_states = states
    return record


def replay_check(record: RunRecord, inst: ProblemInstance, opts: RunOptions,
                 seq: CommSequence, sample_every: int = 1) -> bool:
    """Re-run and require the sampled series to match bit for bit."""
    again = run(inst, opts, seq, sample_every)
    if record.samples != again.samples:
        return False
    if record.consensus_times != again.consensus_times or \
       record.consensus_events != again.consensus_events:
        return False
    for i, k in record.final_states.items():
        if not np.array_equal(k.estimate, again.final_states[i].estimate):
            return False
    return True
