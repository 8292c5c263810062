"""Connectivity analysis of finite communication sequences.

A communication path is a chain of signals where each signal leaves
strictly after the previous one arrived.  Everything here is post-hoc
analysis over an immutable sequence: earliest-arrival relaxation for
paths, the four sequence conditions (single / recurring, strong /
complete), and the weaker one-hop reachability condition used by the
OH algorithm.

All checks take the node count explicitly -- a silent node never shows
up in the event list but still breaks strong connectivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .core import CommSequence, ConfigurationError

INF = math.inf


@dataclass(frozen=True)
class PathWitness:
    """An earliest-arrival chain of signal indices from src to dst."""

    src: int
    dst: int
    signals: tuple[int, ...]

    def replay_ok(self, seq: CommSequence) -> bool:
        """Re-validate the chain ordering rule against the sequence."""
        prev_recv = None
        at = self.src
        for idx in self.signals:
            sig = seq.events[idx]
            if sig.sender != at:
                return False
            if prev_recv is not None and not sig.t_send > prev_recv:
                return False
            prev_recv = sig.t_recv
            at = sig.receiver
        return at == self.dst and len(self.signals) > 0


def _earliest_arrival(seq: CommSequence, src: int, window: tuple[float, float],
                      strict_start: bool = False) -> tuple[dict[int, float], dict[int, int]]:
    """Single forward pass over receive-ordered events.

    Returns (arrival time per node, parent signal index per node).  A
    signal u->v relaxes v when it lies inside the window and either u
    is the source (departure at or after the window start; strictly
    after when `strict_start`) or u was already reached strictly before
    the departure.
    """
    w0, w1 = window
    arrival: dict[int, float] = {}
    parent: dict[int, int] = {}
    for idx, sig in enumerate(seq.events):
        if sig.t_send < w0 or (strict_start and sig.t_send == w0) or sig.t_recv > w1:
            continue
        u = sig.sender
        usable = u == src or (u in arrival and sig.t_send > arrival[u])
        if usable and sig.receiver not in arrival and sig.receiver != src:
            arrival[sig.receiver] = sig.t_recv
            parent[sig.receiver] = idx
    return arrival, parent


def find_path(seq: CommSequence, j: int, i: int,
              window: Optional[tuple[float, float]] = None,
              strict_start: bool = False) -> Optional[PathWitness]:
    """Earliest-arrival communication path from j to i, if one exists."""
    if j == i:
        raise ConfigurationError("paths are defined between distinct nodes")
    if window is None:
        window = (-INF, INF)
    arrival, parent = _earliest_arrival(seq, j, window, strict_start)
    if i not in arrival:
        return None
    chain: list[int] = []
    at = i
    while at != j:
        idx = parent[at]
        chain.append(idx)
        at = seq.events[idx].sender
    chain.reverse()
    return PathWitness(src=j, dst=i, signals=tuple(chain))


def check_svsc(seq: CommSequence, n: int,
               window: Optional[tuple[float, float]] = None,
               strict_start: bool = False) -> tuple[bool, list[tuple[int, int]]]:
    """All n(n-1) ordered pairs connected by a path inside the window.

    Returns (verdict, missing (src, dst) pairs).  Vacuously true for a
    single node.  `strict_start` excludes signals sent exactly at the
    window start (the right-limit convention of a block boundary).
    """
    if window is None:
        window = (-INF, INF)
    missing: list[tuple[int, int]] = []
    for src in range(1, n + 1):
        arrival, _ = _earliest_arrival(seq, src, window, strict_start)
        for dst in range(1, n + 1):
            if dst != src and dst not in arrival:
                missing.append((src, dst))
    return not missing, missing


def check_svcc(seq: CommSequence, n: int,
               window: Optional[tuple[float, float]] = None,
               strict_start: bool = False) -> Optional[tuple[int, float]]:
    """Hub-and-spoke condition: everyone signals the hub, then the hub
    signals everyone.

    Returns (hub, split time) for the lexicographically smallest
    feasible hub, with the smallest feasible split (the latest of the
    earliest direct receptions at the hub); None when no hub works.
    """
    if window is None:
        window = (-INF, INF)
    w0, w1 = window
    if n == 1:
        return None
    for hub in range(1, n + 1):
        earliest_in: dict[int, float] = {}
        for sig in seq.events:
            if sig.t_send < w0 or (strict_start and sig.t_send == w0) or sig.t_recv > w1:
                continue
            if sig.receiver == hub and sig.sender not in earliest_in:
                earliest_in[sig.sender] = sig.t_recv
        if len(earliest_in) < n - 1:
            continue
        t_half = max(earliest_in.values())
        served = set()
        for sig in seq.events:
            if sig.sender == hub and sig.t_send > t_half and sig.t_recv <= w1:
                served.add(sig.receiver)
        if len(served - {hub}) == n - 1:
            return hub, t_half
    return None


def check_condition_c(seq: CommSequence, n: int,
                      window: Optional[tuple[float, float]] = None) -> tuple[bool, list[int]]:
    """One-hop reachability condition.

    A node is covered if it receives a direct signal from every other
    node, or if some node that already had full direct coverage has a
    communication path to it departing strictly after its coverage was
    complete.  Returns (verdict, uncovered node ids).
    """
    if window is None:
        window = (-INF, INF)
    w0, w1 = window
    completion: dict[int, float] = {}
    for node in range(1, n + 1):
        earliest_in: dict[int, float] = {}
        for sig in seq.events:
            if sig.t_send < w0 or sig.t_recv > w1:
                continue
            if sig.receiver == node and sig.sender not in earliest_in:
                earliest_in[sig.sender] = sig.t_recv
        if len(earliest_in) == n - 1:
            completion[node] = max(earliest_in.values(), default=w0 if w0 > -INF else 0.0)

    violations = []
    for node in range(1, n + 1):
        if node in completion:
            continue
        covered = False
        for src, done in completion.items():
            if src == node:
                continue
            if find_path(seq, src, node, (done, w1), strict_start=True) is not None:
                covered = True
                break
        if not covered:
            violations.append(node)
    return not violations, violations


@dataclass(frozen=True)
class Block:
    """One complete greedy block: [start, end] with event index range."""

    t_start: float
    t_end: float
    first_event: int
    last_event: int


@dataclass(frozen=True)
class BlockPartition:
    blocks: tuple[Block, ...]
    trailing_events: int

    @property
    def count(self) -> int:
        return len(self.blocks)

    def k_fold(self, k: int) -> bool:
        return len(self.blocks) >= k


def partition_blocks(seq: CommSequence, n: int, condition: str,
                     window: Optional[tuple[float, float]] = None) -> BlockPartition:
    """Greedy minimal-prefix partition into SVSC or SVCC blocks.

    Each block ends at the earliest receive time that satisfies the
    condition; the next block starts strictly after, so signals sent
    during an earlier block but received later belong to no block.
    The finite k-fold surrogate of the recurring conditions is simply
    the number of complete blocks.
    """
    if condition not in ("svsc", "svcc"):
        raise ConfigurationError(f"unknown condition {condition!r}")
    if n < 2:
        raise ConfigurationError("block partitions need n >= 2")
    if window is None:
        window = (-INF, INF)
    w0, w1 = window
    blocks: list[Block] = []
    if w0 == -INF:
        w0 = min((s.t_send for s in seq.events), default=0.0)
    start = w0
    strict = False  # first block may use signals sent exactly at w0
    idx = 0
    events = seq.events
    while idx < len(events):
        found = _scan_block(events, idx, n, condition, start, strict, w1)
        if found is None:
            break
        end_idx, first_idx = found
        blocks.append(Block(t_start=start, t_end=events[end_idx].t_recv,
                            first_event=first_idx, last_event=end_idx))
        start = events[end_idx].t_recv
        strict = True
        idx = end_idx + 1
    return BlockPartition(blocks=tuple(blocks), trailing_events=len(events) - idx)


def _scan_block(events, idx0: int, n: int, condition: str, start: float,
                strict: bool, w1: float) -> Optional[tuple[int, int]]:
    """Find the earliest block end from idx0; returns (end, first used)."""

    def in_block(sig) -> bool:
        if sig.t_recv > w1:
            return False
        return sig.t_send > start if strict else sig.t_send >= start

    first_used: Optional[int] = None
    if condition == "svsc":
        arrival: list[dict[int, float]] = [dict() for _ in range(n + 1)]
        satisfied = 0
        needed = n * (n - 1)
        for idx in range(idx0, len(events)):
            sig = events[idx]
            if not in_block(sig):
                continue
            if first_used is None:
                first_used = idx
            u, v = sig.sender, sig.receiver
            for src in range(1, n + 1):
                reach = arrival[src]
                usable = u == src or (u in reach and sig.t_send > reach[u])
                if usable and v != src and v not in reach:
                    reach[v] = sig.t_recv
                    satisfied += 1
                    if satisfied == needed:
                        return idx, first_used
        return None

    earliest_in: list[dict[int, float]] = [dict() for _ in range(n + 1)]
    t_in: list[Optional[float]] = [None] * (n + 1)
    served: list[set[int]] = [set() for _ in range(n + 1)]
    for idx in range(idx0, len(events)):
        sig = events[idx]
        if not in_block(sig):
            continue
        if first_used is None:
            first_used = idx
        hub = sig.receiver
        if sig.sender not in earliest_in[hub]:
            earliest_in[hub][sig.sender] = sig.t_recv
            if len(earliest_in[hub]) == n - 1:
                t_in[hub] = max(earliest_in[hub].values())
        src = sig.sender
        if t_in[src] is not None and sig.t_send > t_in[src]:
            served[src].add(sig.receiver)
            if len(served[src]) == n - 1:
                return idx, first_used
    return None


@dataclass(frozen=True)
class ConditionReport:
    """Verdict bundle for one communication sequence."""

    n: int
    svsc: bool
    missing_pairs: tuple[tuple[int, int], ...]
    svcc: Optional[tuple[int, float]]
    condition_c: bool
    condition_c_violations: tuple[int, ...]
    svsc_blocks: int = 0
    svsc_boundaries: tuple[float, ...] = field(default_factory=tuple)
    svcc_blocks: int = 0
    svcc_boundaries: tuple[float, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "svsc": self.svsc,
            "missing_pairs": [list(p) for p in self.missing_pairs],
            "svcc_hub": None if self.svcc is None else self.svcc[0],
            "svcc_split": None if self.svcc is None else self.svcc[1],
            "condition_c": self.condition_c,
            "condition_c_violations": list(self.condition_c_violations),
            "svsc_blocks": self.svsc_blocks,
            "svsc_boundaries": list(self.svsc_boundaries),
            "svcc_blocks": self.svcc_blocks,
            "svcc_boundaries": list(self.svcc_boundaries),
        }


def analyze(seq: CommSequence, n: int,
            window: Optional[tuple[float, float]] = None) -> ConditionReport:
    """Full connectivity classification of one sequence."""
    ok, missing = check_svsc(seq, n, window)
    svcc = check_svcc(seq, n, window)
    cond_c, violations = check_condition_c(seq, n, window)
    if n >= 2:
        ivsc = partition_blocks(seq, n, "svsc", window)
        ivcc = partition_blocks(seq, n, "svcc", window)
        svsc_blocks, svsc_bounds = ivsc.count, tuple(b.t_end for b in ivsc.blocks)
        svcc_blocks, svcc_bounds = ivcc.count, tuple(b.t_end for b in ivcc.blocks)
    else:
        svsc_blocks = svcc_blocks = 0
        svsc_bounds = svcc_bounds = ()
    return ConditionReport(n=n, svsc=ok, missing_pairs=tuple(missing), svcc=svcc,
                           condition_c=cond_c, condition_c_violations=tuple(violations),
                           svsc_blocks=svsc_blocks, svsc_boundaries=svsc_bounds,
                           svcc_blocks=svcc_blocks, svcc_boundaries=svcc_bounds)
