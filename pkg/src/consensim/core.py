"""Domain types shared by every consensus algorithm.

Node indices are 1-based everywhere they cross a public boundary.  All
value types are immutable after construction; state transitions happen
only through the pure update functions in :mod:`consensim.algorithms`,
sequenced by :mod:`consensim.sim`.

Two normal-estimate representations coexist on purpose:

* the lattice algorithms (BM, OH, DDA) keep the estimate as an exact
  support set over ``{0, 1/n}``, so consensus detection is exact and
  immune to float drift;
* DA keeps a dense float vector, since its projections produce general
  reals, and consensus detection falls back to a tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

EPS_CONS = 1e-9
EPS_NORM = 1e-9

ALGORITHMS = ("bm", "da", "oh", "dda", "gossip", "aris")
LATTICE_ALGS = frozenset({"bm", "oh", "dda"})


class InvalidInstanceError(ValueError):
    """Instance dimensions are inconsistent."""


class PositivityError(ValueError):
    """ARIS requires strictly positive initial components."""


class MalformedPayloadError(ValueError):
    """A payload does not fit the receiving node's algorithm or size."""


class ConfigurationError(ValueError):
    """An algorithm or generator parameter is out of range."""


class UnsupportedGoalError(ValueError):
    """The requested weighted goal cannot be represented by this algorithm."""


class TraceError(ValueError):
    """A communication trace violates causality or names unknown nodes."""


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    out.flags.writeable = False
    return out


def index_order_mean(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Mean of `vectors` accumulated in index order 1..n.

    The summation order is pinned so the value is bit-reproducible; the
    BM terminal update recomputes the average with this same helper and
    therefore matches ``ProblemInstance.average`` exactly.
    """
    total = np.zeros_like(np.asarray(vectors[0], dtype=float))
    for v in vectors:
        total = total + v
    return _freeze(total / len(vectors))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """The n initial vectors s_i(0) and their precomputed average."""

    n: int
    d: int
    initials: tuple[np.ndarray, ...]
    average: np.ndarray

    def initial(self, i: int) -> np.ndarray:
        """Initial vector of node `i` (1-based)."""
        return self.initials[i - 1]

    def all_positive(self) -> bool:
        return all(float(v.min()) > 0.0 for v in self.initials)


def make_instance(n: int, d: int, initials: Sequence[Sequence[float]]) -> ProblemInstance:
    """Build a ProblemInstance, validating shapes and fixing the average.

    Raises InvalidInstanceError on any dimension mismatch.  Positivity
    (needed by ARIS only) is checked at algorithm construction, not here.
    """
    if n < 1 or d < 1:
        raise InvalidInstanceError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if len(initials) != n:
        raise InvalidInstanceError(f"expected {n} initial vectors, got {len(initials)}")
    vecs = []
    for idx, raw in enumerate(initials, start=1):
        v = np.asarray(raw, dtype=float).reshape(-1)
        if v.shape != (d,):
            raise InvalidInstanceError(f"initial vector {idx} has dimension {v.shape[0]}, expected {d}")
        vecs.append(_freeze(v))
    return ProblemInstance(n=n, d=d, initials=tuple(vecs), average=index_order_mean(vecs))


@dataclass(frozen=True, eq=False)
class NormalEstimate:
    """A node's normal consensus estimate over R^n.

    Exactly one of `support` / `dense` is set.  `support` holds the
    1-based indices whose component equals 1/n (all others are exactly
    zero); `dense` is a general float vector.
    """

    n: int
    support: Optional[frozenset[int]] = None
    dense: Optional[np.ndarray] = None

    @staticmethod
    def lattice(n: int, support: frozenset[int] | set[int]) -> "NormalEstimate":
        return NormalEstimate(n=n, support=frozenset(support))

    @staticmethod
    def dense_vec(n: int, v: np.ndarray) -> "NormalEstimate":
        return NormalEstimate(n=n, dense=_freeze(v))

    @property
    def is_lattice(self) -> bool:
        return self.support is not None

    def vector(self) -> np.ndarray:
        if self.support is not None:
            v = np.zeros(self.n)
            for idx in self.support:
                v[idx - 1] = 1.0 / self.n
            return v
        assert self.dense is not None
        return np.array(self.dense)

    def component(self, idx: int) -> float:
        """Component `idx` (1-based)."""
        if self.support is not None:
            return 1.0 / self.n if idx in self.support else 0.0
        assert self.dense is not None
        return float(self.dense[idx - 1])

    def norm_sq(self) -> float:
        if self.support is not None:
            return len(self.support) / self.n**2
        assert self.dense is not None
        return float(self.dense @ self.dense)

    def error_sq(self, target: Optional[np.ndarray] = None) -> float:
        """Squared distance to the goal vector (default (1/n)*ones)."""
        if target is None:
            if self.support is not None:
                return (self.n - len(self.support)) / self.n**2
            assert self.dense is not None
            diff = self.dense - 1.0 / self.n
            return float(diff @ diff)
        diff = self.vector() - target
        return float(diff @ diff)

    def is_consensus(self, target: Optional[np.ndarray] = None, eps: float = EPS_CONS) -> bool:
        """Exact for lattice estimates, within `eps` (L2) for dense ones."""
        if target is None and self.support is not None:
            return len(self.support) == self.n
        return math.sqrt(self.error_sq(target)) <= eps


@dataclass(frozen=True, eq=False)
class ArisState:
    """Counter, round indicator and exponential min-sketch of one node."""

    counter: int
    indicator: frozenset[int]
    sketch: np.ndarray  # shape (d, r)

    @property
    def r(self) -> int:
        return self.sketch.shape[1]


@dataclass(frozen=True, eq=False)
class KnowledgeSet:
    """Everything one node stores.

    `own_initial` is dropped once BM/OH reach consensus (their terminal
    knowledge keeps only the two estimates).  `stored_initials` is used
    by BM only and maps node index to that node's initial vector; its
    key set always equals the normal-estimate support while consensus
    has not been reached, and is empty afterwards.
    """

    node_id: int
    n: int
    alg: str
    normal: NormalEstimate
    estimate: np.ndarray
    own_initial: Optional[np.ndarray] = None
    stored_initials: Optional[Mapping[int, np.ndarray]] = None
    aris: Optional[ArisState] = None

    def at_consensus(self, target: Optional[np.ndarray] = None) -> bool:
        return self.normal.is_consensus(target)


def init_knowledge(
    inst: ProblemInstance,
    i: int,
    alg: str,
    *,
    r: Optional[int] = None,
    rng=None,
) -> KnowledgeSet:
    """Initial knowledge set of node `i` for the given algorithm.

    BM/DA/OH/DDA start from v = (1/n)e_i and s = (1/n)s_i(0); Gossip
    starts from s = s_i(0); ARIS starts its counter at 0, the indicator
    at e_i and samples the d x r sketch from per-component exponentials
    (inverse CDF on `rng`, which must provide ``next_float()``).
    """
    if not 1 <= i <= inst.n:
        raise InvalidInstanceError(f"node index {i} outside 1..{inst.n}")
    if alg not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {alg!r}")
    own = inst.initial(i)

    if alg == "gossip":
        # the gossip knowledge set holds nothing but the running estimate
        return KnowledgeSet(node_id=i, n=inst.n, alg=alg,
                            normal=NormalEstimate.lattice(inst.n, {i}),
                            estimate=own)

    if alg == "aris":
        if r is None or r <= 0:
            raise ConfigurationError(f"aris needs r >= 1, got {r}")
        if rng is None:
            raise ConfigurationError("aris needs a seeded rng stream")
        if float(own.min()) <= 0.0:
            raise PositivityError(f"node {i} has a non-positive initial component; ARIS requires s > 0")
        sketch = sample_exponential_sketch(own, r, rng)
        return KnowledgeSet(node_id=i, n=inst.n, alg=alg,
                            normal=NormalEstimate.lattice(inst.n, {i}),
                            estimate=_freeze(own / inst.n), own_initial=own,
                            aris=ArisState(counter=0, indicator=frozenset({i}), sketch=sketch))

    if alg == "da":
        v = np.zeros(inst.n)
        v[i - 1] = 1.0 / inst.n
        normal = NormalEstimate.dense_vec(inst.n, v)
    else:
        normal = NormalEstimate.lattice(inst.n, {i})
    ks = KnowledgeSet(node_id=i, n=inst.n, alg=alg, normal=normal,
                      estimate=_freeze(own / inst.n), own_initial=own,
                      stored_initials={i: own} if alg == "bm" else None)
    if alg in ("bm", "oh") and ks.at_consensus():
        # n == 1: the initial estimate is already terminal knowledge.
        ks = replace(ks, estimate=inst.average, own_initial=None,
                     stored_initials={} if alg == "bm" else None)
    return ks


def sample_exponential_sketch(rates: np.ndarray, r: int, rng) -> np.ndarray:
    """d x r matrix of exponential draws, row l with rate rates[l].

    Inverse-CDF sampling -ln(u)/rate with u drawn from the open unit
    interval, row by row then column by column, so a stream with the
    same seed reproduces the matrix bit for bit.
    """
    d = rates.shape[0]
    u = rng.next_floats(d * r).reshape(d, r)
    return _freeze(-np.log(u) / rates[:, None])


@dataclass(frozen=True, order=True)
class Signal:
    """One directed transmission: sent at t_send, delivered at t_recv.

    `pair_id` links the two members of an instantaneous bidirectional
    pair (used by Gossip as one atomic exchange); it is None for plain
    directed signals.  `event_id` is the stable tie-break for equal
    receive times.
    """

    t_recv: float
    event_id: int
    t_send: float = field(compare=False)
    sender: int = field(compare=False)
    receiver: int = field(compare=False)
    pair_id: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if self.t_recv < self.t_send:
            raise TraceError(f"signal {self.sender}->{self.receiver} received before sent "
                             f"({self.t_recv} < {self.t_send})")
        if self.sender == self.receiver:
            raise TraceError(f"self-loop signal at node {self.sender}")


@dataclass(frozen=True)
class CommSequence:
    """A finite communication sequence, ordered by (t_recv, event_id).

    Per assumption A9 no two events may share (receiver, t_recv); the
    generators guarantee this via deterministic tie-break perturbation,
    and the constructor re-checks it for replayed traces.
    """

    events: tuple[Signal, ...]

    def __post_init__(self):
        seen: set[tuple[int, float]] = set()
        prev = None
        for sig in self.events:
            key = (sig.receiver, sig.t_recv)
            if key in seen:
                raise TraceError(f"two signals received by node {sig.receiver} at t={sig.t_recv}")
            seen.add(key)
            if prev is not None and (sig.t_recv, sig.event_id) < prev:
                raise TraceError("events not ordered by (t_recv, event_id)")
            prev = (sig.t_recv, sig.event_id)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def max_node(self) -> int:
        return max((max(s.sender, s.receiver) for s in self.events), default=0)

    def window(self) -> tuple[float, float]:
        if not self.events:
            return (0.0, 0.0)
        return (min(s.t_send for s in self.events), max(s.t_recv for s in self.events))


def sequence_from_events(signals: Sequence[Signal]) -> CommSequence:
    """Sort signals into the canonical (t_recv, event_id) order."""
    return CommSequence(events=tuple(sorted(signals, key=lambda s: (s.t_recv, s.event_id))))
