"""Shared builders and independent oracles for the test suite.

The oracles here deliberately avoid the production code paths: the DA
oracle goes through numpy's SVD pseudo-inverse, the DDA oracle brute
forces the discrete candidate set, and path existence is settled by
enumerating signal subsequences.
"""

from __future__ import annotations

import itertools

import numpy as np

from consensim.core import CommSequence, Signal, sequence_from_events
from consensim.generators import SplitMix64, gen_random_protocol, RandomProtocolConfig


def seq_of(*quads) -> CommSequence:
    """Build a sequence from (sender, receiver, t_send, t_recv) tuples."""
    return sequence_from_events([
        Signal(t_recv=float(t1), event_id=k, t_send=float(t0), sender=s, receiver=r)
        for k, (s, r, t0, t1) in enumerate(quads)
    ])


def oracle_project(cols_v, cols_s, target):
    """Least-squares oracle: pseudo-inverse of the stacked columns."""
    V = np.column_stack(cols_v)
    S = np.column_stack(cols_s)
    coeff = np.linalg.pinv(V, rcond=1e-10) @ target
    return V @ coeff, S @ coeff


def dda_bruteforce(n, i, support_i, support_j):
    """All optimal supports of the discrete update problem.

    Enumerates combination coefficients a, b in {-1, 0, 1} with the
    component-i coefficient forced so that component i lands in
    {0, 1/n}; keeps candidates whose every component lies in {0, 1/n};
    returns (max support size, set of optimal supports).
    """
    vi = np.zeros(n)
    for idx in support_i:
        vi[idx - 1] = 1.0
    vj = np.zeros(n)
    for idx in support_j:
        vj[idx - 1] = 1.0
    best = -1
    winners = set()
    for a, b in itertools.product((-1, 0, 1), repeat=2):
        base = a * vi + b * vj
        for target_i in (0.0, 1.0):
            c = target_i - base[i - 1]
            cand = base.copy()
            cand[i - 1] += c
            if not all(x in (0.0, 1.0) for x in cand):
                continue
            size = int(cand.sum())
            sup = frozenset(idx + 1 for idx in range(n) if cand[idx] == 1.0)
            if size > best:
                best = size
                winners = {sup}
            elif size == best:
                winners.add(sup)
    return best, winners


def brute_force_reachable(seq: CommSequence, j: int, i: int, window=None) -> bool:
    """Path existence by exhaustive subsequence enumeration (small inputs)."""
    events = [s for s in seq.events
              if window is None or (s.t_send >= window[0] and s.t_recv <= window[1])]
    for length in range(1, len(events) + 1):
        for combo in itertools.permutations(events, length):
            if combo[0].sender != j or combo[-1].receiver != i:
                continue
            ok = True
            for prev, nxt in zip(combo, combo[1:]):
                if nxt.sender != prev.receiver or not nxt.t_send > prev.t_recv:
                    ok = False
                    break
            if ok:
                return True
    return False


def random_instance(n, d, rng: SplitMix64):
    from consensim.core import make_instance
    vals = [[0.5 + 4.0 * rng.next_float() for _ in range(d)] for _ in range(n)]
    return make_instance(n, d, vals)


def random_sequence(n, horizon, seed, p=0.3, delay=("uniform", 0.1, 2.5)) -> CommSequence:
    kind, lo, hi = delay
    return gen_random_protocol(RandomProtocolConfig(
        n=n, p=p, horizon=horizon, seed=seed, delay=kind, delay_min=lo, delay_max=hi))


def star_block(n, hub, t0, rng: SplitMix64, noise=0, event_id0=0):
    """One hub block: everyone signals the hub, then the hub answers.

    Optionally interleaves `noise` extra random directed signals that
    do not disturb the hub structure.  Returns (signals, end time).
    """
    signals = []
    eid = event_id0
    t = t0
    others = [x for x in range(1, n + 1) if x != hub]
    order = list(others)
    for k in range(len(order) - 1, 0, -1):
        m = rng.next_below(k + 1)
        order[k], order[m] = order[m], order[k]
    for j in order:
        t += 1.0
        signals.append(Signal(t_recv=t, event_id=eid, t_send=t - 0.5, sender=j, receiver=hub))
        eid += 1
    t_half = t
    for j in order:
        t += 1.0
        signals.append(Signal(t_recv=t, event_id=eid, t_send=t - 0.5, sender=hub, receiver=j))
        eid += 1
    for _ in range(noise):
        a = 1 + rng.next_below(n)
        b = 1 + rng.next_below(n - 1)
        if b >= a:
            b += 1
        t += 0.25
        signals.append(Signal(t_recv=t, event_id=eid, t_send=t - 0.125, sender=a, receiver=b))
        eid += 1
    return signals, t, t_half
