"""Per-node state machines for the six consensus protocols.

Each algorithm is a pair of pure functions: a signal builder (what a
sender emits, computed from its knowledge set at send time) and an
update (what the receiver's knowledge set becomes).  The simulator owns
all sequencing; nothing in here mutates shared state.

The DA update is the least-squares projection of the goal vector onto
span{v_i, v_j, e_i}, solved by explicit rank-based case analysis on the
3x3 Gram system rather than a generic solver, so the behaviour near
dependent columns is pinned by one documented pivot threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (
    EPS_CONS,
    ArisState,
    ConfigurationError,
    KnowledgeSet,
    MalformedPayloadError,
    NormalEstimate,
    UnsupportedGoalError,
    _freeze,
    index_order_mean,
    sample_exponential_sketch,
)

#: Columns of the DA Gram system count as dependent once their residual
#: pivot drops below this fraction of the largest (normalized) diagonal.
#: At 1e-6 the factored solve keeps roughly 1e-10 accuracy; anything
#: much smaller lets roundoff through amplified by 1/pivot.
PIVOT_RTOL = 1e-6

#: A sender whose normal estimate differs from the receiver's by less
#: than this (L2) is treated as carrying no new direction: differences
#: at that scale are accumulated roundoff, not information.
DIFF_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class Goal:
    """Projection target for the normal estimates.

    The default goal is (1/n)*ones (plain averaging).  A general weight
    vector is representable by DA only; the lattice algorithms raise
    UnsupportedGoalError for anything but the uniform goal.
    """

    target: np.ndarray

    def is_uniform(self, n: int) -> bool:
        return self.target.shape == (n,) and bool(np.all(self.target == 1.0 / n))


def uniform_goal(n: int) -> Goal:
    return Goal(target=_freeze(np.full(n, 1.0 / n)))


def weighted_goal(w) -> Goal:
    """Goal configuration targeting sum_i w_i * s_i(0)."""
    target = np.asarray(w, dtype=float).reshape(-1)
    if not np.all(np.isfinite(target)):
        raise ConfigurationError("goal weights must be finite")
    return Goal(target=_freeze(target))


def goal_value(inst, goal: Optional[Goal]) -> np.ndarray:
    """The consensus value the goal converges to (default: the average)."""
    if goal is None or goal.is_uniform(inst.n):
        return inst.average
    total = np.zeros(inst.d)
    for i in range(1, inst.n + 1):
        total = total + goal.target[i - 1] * inst.initial(i)
    return total


def _require_uniform(goal: Optional[Goal], n: int, alg: str) -> None:
    if goal is not None and not goal.is_uniform(n):
        raise UnsupportedGoalError(
            f"{alg} states live on the {{0, 1/n}} lattice and cannot track a general weight vector")


def _goal_target(goal: Optional[Goal], n: int) -> np.ndarray:
    return goal.target if goal is not None else np.full(n, 1.0 / n)


# ---------------------------------------------------------------------------
# Payload variants

@dataclass(frozen=True, eq=False)
class BMPayload:
    """Flooding payload: all stored initials, or the terminal pair."""

    n: int
    terminal: bool
    support: frozenset[int]
    initials: Optional[dict[int, np.ndarray]] = None  # non-terminal only
    estimate: Optional[np.ndarray] = None             # terminal only


@dataclass(frozen=True, eq=False)
class DAPayload:
    n: int
    normal: np.ndarray
    estimate: np.ndarray


@dataclass(frozen=True, eq=False)
class OHPayload:
    """{j, s_j(0)} before consensus; {0, average} after."""

    n: int
    source: int
    vector: np.ndarray


@dataclass(frozen=True, eq=False)
class DDAPayload:
    n: int
    support: frozenset[int]
    estimate: np.ndarray


@dataclass(frozen=True, eq=False)
class GossipPayload:
    estimate: np.ndarray


@dataclass(frozen=True, eq=False)
class ArisPayload:
    counter: int
    estimate: np.ndarray
    sketch: np.ndarray
    indicator: frozenset[int]


SignalPayload = (BMPayload, DAPayload, OHPayload, DDAPayload, GossipPayload, ArisPayload)


@dataclass(frozen=True, eq=False)
class UpdateOutcome:
    """New knowledge plus the per-signal drop in squared normal error."""

    knowledge: KnowledgeSet
    error_drop: float
    case_tag: str


def _unchanged(k: KnowledgeSet, tag: str) -> UpdateOutcome:
    return UpdateOutcome(knowledge=k, error_drop=0.0, case_tag=tag)


def _check_payload(payload, expected, k: KnowledgeSet):
    if not isinstance(payload, expected):
        raise MalformedPayloadError(f"{k.alg} node got a {type(payload).__name__}")
    if getattr(payload, "n", k.n) != k.n:
        raise MalformedPayloadError(f"payload sized for n={payload.n}, node has n={k.n}")


# ---------------------------------------------------------------------------
# Algorithm 1: flooding bench-mark

def bm_signal(k: KnowledgeSet, goal: Optional[Goal] = None) -> BMPayload:
    _require_uniform(goal, k.n, "bm")
    if k.at_consensus():
        return BMPayload(n=k.n, terminal=True, support=frozenset(range(1, k.n + 1)),
                         estimate=k.estimate)
    assert k.stored_initials is not None
    return BMPayload(n=k.n, terminal=False, support=k.normal.support,
                     initials=dict(k.stored_initials))


def bm_update(k: KnowledgeSet, payload: BMPayload, goal: Optional[Goal] = None) -> UpdateOutcome:
    _require_uniform(goal, k.n, "bm")
    _check_payload(payload, BMPayload, k)
    if any(not 1 <= idx <= k.n for idx in payload.support):
        raise MalformedPayloadError("payload references a node index outside 1..n")
    if k.at_consensus():
        return _unchanged(k, "already-consensus")

    before = k.normal.error_sq()
    full = frozenset(range(1, k.n + 1))
    if payload.terminal:
        new = replace(k, normal=NormalEstimate.lattice(k.n, full),
                      estimate=payload.estimate, own_initial=None, stored_initials={})
        return UpdateOutcome(new, before - 0.0, "adopt-average")

    assert payload.initials is not None and k.stored_initials is not None
    merged = dict(k.stored_initials)
    merged.update(payload.initials)
    support = frozenset(merged)
    if support == full:
        avg = index_order_mean([merged[idx] for idx in range(1, k.n + 1)])
        new = replace(k, normal=NormalEstimate.lattice(k.n, full),
                      estimate=avg, own_initial=None, stored_initials={})
        return UpdateOutcome(new, before - 0.0, "complete")
    est = np.zeros(k.estimate.shape[0])
    for idx in sorted(support):
        est = est + merged[idx]
    new = replace(k, normal=NormalEstimate.lattice(k.n, support),
                  estimate=_freeze(est / k.n), stored_initials=merged)
    return UpdateOutcome(new, before - new.normal.error_sq(), "union")


# ---------------------------------------------------------------------------
# Algorithm 2: distributed averaging (general-position projections)

def da_signal(k: KnowledgeSet, goal: Optional[Goal] = None) -> DAPayload:
    return DAPayload(n=k.n, normal=k.normal.vector(), estimate=k.estimate)


def _solve_sym(order: list[int], G: np.ndarray, rhs: np.ndarray) -> dict[int, float]:
    """Closed-form solve of the selected-column Gram system (size <= 3)."""
    if len(order) == 1:
        p = order[0]
        return {p: rhs[p] / G[p, p]}
    if len(order) == 2:
        p, q = order
        det = G[p, p] * G[q, q] - G[p, q] ** 2
        return {p: (rhs[p] * G[q, q] - G[p, q] * rhs[q]) / det,
                q: (G[p, p] * rhs[q] - G[p, q] * rhs[p]) / det}
    p, q, r = order
    a, b, c = G[p, p], G[p, q], G[p, r]
    d_, e = G[q, q], G[q, r]
    f = G[r, r]
    det = a * (d_ * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d_)
    # adjugate of the symmetric 3x3
    A00 = d_ * f - e * e
    A01 = c * e - b * f
    A02 = b * e - c * d_
    A11 = a * f - c * c
    A12 = b * c - a * e
    A22 = a * d_ - b * b
    gp, gq, gr = rhs[p], rhs[q], rhs[r]
    return {p: (A00 * gp + A01 * gq + A02 * gr) / det,
            q: (A01 * gp + A11 * gq + A12 * gr) / det,
            r: (A02 * gp + A12 * gq + A22 * gr) / det}


def project_span(cols_v: list[np.ndarray], cols_s: list[np.ndarray],
                 target: np.ndarray) -> tuple[np.ndarray, np.ndarray, str]:
    """Least-squares projection of `target` onto span(cols_v).

    Columns are normalized, then selected by greedy pivoting on the
    Gram residual diagonal (threshold PIVOT_RTOL relative to the
    largest diagonal); the same coefficients are applied to the paired
    value columns `cols_s`.  Returns (projection, value, case_tag).
    """
    m = len(cols_v)
    norms = [math.sqrt(float(c @ c)) for c in cols_v]
    live = [a for a in range(m) if norms[a] > 0.0]
    if not live:
        return np.zeros(cols_v[0].shape[0]), np.zeros(cols_s[0].shape[0]), "rank0"
    units = {a: cols_v[a] / norms[a] for a in live}
    G = np.zeros((m, m))
    for pos, a in enumerate(live):
        for b in live[pos:]:
            G[a, b] = G[b, a] = float(units[a] @ units[b])
    rhs = np.array([float(units[a] @ target) if a in units else 0.0 for a in range(m)])

    # greedy pivoted Cholesky on G to pick an independent column subset
    resid = [G[a, a] for a in range(m)]
    factors: list[list[float]] = [[] for _ in range(m)]
    order: list[int] = []
    active = list(live)
    threshold = PIVOT_RTOL * max(resid)
    while active:
        p = max(active, key=lambda a: (resid[a], -a))
        if resid[p] <= threshold:
            break
        piv = math.sqrt(resid[p])
        order.append(p)
        active.remove(p)
        for a in active:
            f = (G[a, p] - sum(fa * fp for fa, fp in zip(factors[a], factors[p]))) / piv
            factors[a].append(f)
            resid[a] -= f * f
        factors[p].append(piv)

    coeff = _solve_sym(order, G, rhs)
    v_new = np.zeros(cols_v[0].shape[0])
    s_new = np.zeros(cols_s[0].shape[0])
    for p, c in coeff.items():
        scaled = c / norms[p]
        v_new = v_new + scaled * cols_v[p]
        s_new = s_new + scaled * cols_s[p]
    tag = {1: "rank1", 2: "rank2", 3: "rank3"}[len(order)] + ":" + "".join(str(p) for p in sorted(order))
    return v_new, s_new, tag


def da_update(k: KnowledgeSet, payload: DAPayload, goal: Optional[Goal] = None) -> UpdateOutcome:
    """Project the goal onto span{v_i, v_j, e_i} and carry the same
    combination over to the value estimates.

    The span is parameterized as {v_i, v_j - v_i, e_i}: identical in
    exact arithmetic, but the late-run regime v_j ~ v_i then yields a
    well-conditioned system instead of a Gram matrix with off-diagonal
    entries at 1 - epsilon.
    """
    _check_payload(payload, DAPayload, k)
    if payload.normal.shape != (k.n,) or payload.estimate.shape != k.estimate.shape:
        raise MalformedPayloadError("DA payload vector of wrong dimension")
    target = _goal_target(goal, k.n)
    e_i = np.zeros(k.n)
    e_i[k.node_id - 1] = 1.0
    assert k.own_initial is not None
    v_i = k.normal.vector()
    d_v = payload.normal - v_i
    if math.sqrt(float(d_v @ d_v)) <= DIFF_FLOOR:
        cols_v = [v_i, e_i]
        cols_s = [k.estimate, k.own_initial]
    else:
        cols_v = [v_i, d_v, e_i]
        cols_s = [k.estimate, payload.estimate - k.estimate, k.own_initial]
    v_new, s_new, tag = project_span(cols_v, cols_s, target)
    before = k.normal.error_sq(None if goal is None else target)
    new = replace(k, normal=NormalEstimate.dense_vec(k.n, v_new), estimate=_freeze(s_new))
    after = new.normal.error_sq(None if goal is None else target)
    return UpdateOutcome(new, before - after, tag)


# ---------------------------------------------------------------------------
# Algorithm 3: one-hop

def oh_signal(k: KnowledgeSet, goal: Optional[Goal] = None) -> OHPayload:
    _require_uniform(goal, k.n, "oh")
    if k.at_consensus():
        return OHPayload(n=k.n, source=0, vector=k.estimate)
    assert k.own_initial is not None
    return OHPayload(n=k.n, source=k.node_id, vector=k.own_initial)


def oh_update(k: KnowledgeSet, payload: OHPayload, goal: Optional[Goal] = None) -> UpdateOutcome:
    _require_uniform(goal, k.n, "oh")
    _check_payload(payload, OHPayload, k)
    if not 0 <= payload.source <= k.n:
        raise MalformedPayloadError(f"OH source index {payload.source} outside 0..n")
    before = k.normal.error_sq()
    if payload.source == 0:
        if k.at_consensus():
            return _unchanged(k, "already-consensus")
        new = replace(k, normal=NormalEstimate.lattice(k.n, frozenset(range(1, k.n + 1))),
                      estimate=payload.vector, own_initial=None)
        return UpdateOutcome(new, before - 0.0, "adopt-average")
    j = payload.source
    support = k.normal.support
    assert support is not None
    if j in support:
        return _unchanged(k, "known")
    new_support = support | {j}
    est = _freeze(k.estimate + payload.vector / k.n)
    new = replace(k, normal=NormalEstimate.lattice(k.n, new_support), estimate=est)
    if new.at_consensus():
        new = replace(new, own_initial=None)
    return UpdateOutcome(new, before - new.normal.error_sq(),
                         "complete" if new.at_consensus() else "learn")


# ---------------------------------------------------------------------------
# Algorithm 4: discretized distributed averaging

def dda_signal(k: KnowledgeSet, goal: Optional[Goal] = None) -> DDAPayload:
    _require_uniform(goal, k.n, "dda")
    assert k.normal.support is not None
    return DDAPayload(n=k.n, support=k.normal.support, estimate=k.estimate)


def dda_update(k: KnowledgeSet, payload: DDAPayload, goal: Optional[Goal] = None,
               variant: str = "primary", rng=None, p_switch: float = 0.5) -> UpdateOutcome:
    """Lattice-constrained projection, resolved by the three-branch case split.

    variant "primary" keeps the receiver on an equal-magnitude tie;
    "alternative" adopts the sender's support instead; "randomized"
    picks primary with probability `p_switch` per event (needs `rng`).
    """
    _require_uniform(goal, k.n, "dda")
    _check_payload(payload, DDAPayload, k)
    if any(not 1 <= idx <= k.n for idx in payload.support):
        raise MalformedPayloadError("payload references a node index outside 1..n")
    if variant not in ("primary", "alternative", "randomized"):
        raise ConfigurationError(f"unknown DDA variant {variant!r}")
    if variant == "randomized":
        if rng is None:
            raise ConfigurationError("randomized DDA variant needs an rng")
        variant = "primary" if rng.next_float() < p_switch else "alternative"

    i = k.node_id
    support = k.normal.support
    assert support is not None
    a_mi = support - {i}
    b_mi = payload.support - {i}
    v_ji = 1.0 / k.n if i in payload.support else 0.0
    before = k.normal.error_sq()

    if not (a_mi & b_mi):
        # disjoint off-diagonal supports: union, c = -v_ji keeps component i at 1/n
        new_support = support | payload.support
        est = _freeze(k.estimate + payload.estimate - v_ji * k.own_initial)
        tag = "disjoint-union"
    elif len(a_mi) < len(b_mi) or (variant == "alternative" and len(a_mi) == len(b_mi)):
        # adopt the sender's support, patching component i back to 1/n
        new_support = payload.support | {i}
        est = _freeze(payload.estimate + (1.0 / k.n - v_ji) * k.own_initial)
        tag = "tie-adopt-sender" if len(a_mi) == len(b_mi) else "adopt-sender"
    else:
        return _unchanged(k, "keep")

    new = replace(k, normal=NormalEstimate.lattice(k.n, new_support), estimate=est)
    return UpdateOutcome(new, before - new.normal.error_sq(), tag)


# ---------------------------------------------------------------------------
# Comparison algorithm 1: gossip (pairwise averaging)

def gossip_signal(k: KnowledgeSet) -> GossipPayload:
    return GossipPayload(estimate=k.estimate)


def gossip_update(k_i: KnowledgeSet, k_j: KnowledgeSet,
                  bidirectional: bool) -> tuple[KnowledgeSet, KnowledgeSet]:
    """Midpoint update; a bidirectional event is one atomic exchange.

    Both outputs of a bidirectional event are computed from the
    pre-update values, so the pair sum is conserved exactly (halving
    and doubling are exact in binary floating point).
    """
    mid = _freeze(0.5 * (k_i.estimate + k_j.estimate))
    if bidirectional:
        return replace(k_i, estimate=mid), replace(k_j, estimate=mid)
    return replace(k_i, estimate=mid), k_j


# ---------------------------------------------------------------------------
# Comparison algorithm 2: adapted randomized information spreading

def aris_signal(k: KnowledgeSet) -> ArisPayload:
    assert k.aris is not None
    return ArisPayload(counter=k.aris.counter, estimate=k.estimate,
                       sketch=k.aris.sketch, indicator=k.aris.indicator)


def _aris_round_estimate(counter: int, estimate: np.ndarray, minima: np.ndarray,
                         n: int) -> np.ndarray:
    w_bar = minima.mean(axis=1)
    if np.any(w_bar <= 0.0):
        raise ConfigurationError("degenerate ARIS sketch mean; rates must be positive")
    return _freeze((counter * estimate + (1.0 / w_bar) / n) / (counter + 1))


def aris_update(k: KnowledgeSet, payload: ArisPayload, rng) -> UpdateOutcome:
    _check_payload(payload, ArisPayload, k)
    st = k.aris
    assert st is not None and k.own_initial is not None
    if payload.sketch.shape != st.sketch.shape:
        raise MalformedPayloadError("ARIS sketch of wrong shape")

    if payload.counter < st.counter:
        return _unchanged(k, "stale")

    full = frozenset(range(1, k.n + 1))
    if payload.counter == st.counter:
        union = st.indicator | payload.indicator
        if union != full:
            new_state = ArisState(counter=st.counter, indicator=union,
                                  sketch=_freeze(np.minimum(st.sketch, payload.sketch)))
            return _unchanged(replace(k, aris=new_state), "merge")
        minima = np.minimum(st.sketch, payload.sketch)
        est = _aris_round_estimate(st.counter, k.estimate, minima, k.n)
        new_state = ArisState(counter=st.counter + 1, indicator=frozenset({k.node_id}),
                              sketch=sample_exponential_sketch(k.own_initial, st.r, rng))
        return UpdateOutcome(replace(k, estimate=est, aris=new_state), 0.0, "round-complete")

    # payload.counter > counter: jump to the sender's round
    union = frozenset({k.node_id}) | payload.indicator
    fresh = sample_exponential_sketch(k.own_initial, st.r, rng)
    if union != full:
        new_state = ArisState(counter=payload.counter, indicator=union,
                              sketch=_freeze(np.minimum(payload.sketch, fresh)))
        return UpdateOutcome(replace(k, estimate=payload.estimate, aris=new_state), 0.0, "jump")
    minima = np.minimum(payload.sketch, fresh)
    est = _aris_round_estimate(payload.counter, payload.estimate, minima, k.n)
    new_state = ArisState(counter=payload.counter + 1, indicator=frozenset({k.node_id}),
                          sketch=sample_exponential_sketch(k.own_initial, st.r, rng))
    return UpdateOutcome(replace(k, estimate=est, aris=new_state), 0.0, "jump-complete")


# ---------------------------------------------------------------------------
# Dispatch helpers used by the simulator

def build_signal(k: KnowledgeSet, goal: Optional[Goal] = None):
    if k.alg == "bm":
        return bm_signal(k, goal)
    if k.alg == "da":
        return da_signal(k, goal)
    if k.alg == "oh":
        return oh_signal(k, goal)
    if k.alg == "dda":
        return dda_signal(k, goal)
    if k.alg == "gossip":
        return gossip_signal(k)
    if k.alg == "aris":
        return aris_signal(k)
    raise ConfigurationError(f"unknown algorithm {k.alg!r}")


def apply_update(k: KnowledgeSet, payload, goal: Optional[Goal] = None, *,
                 dda_variant: str = "primary", dda_rng=None, dda_p_switch: float = 0.5,
                 aris_rng=None) -> UpdateOutcome:
    if k.alg == "bm":
        return bm_update(k, payload, goal)
    if k.alg == "da":
        return da_update(k, payload, goal)
    if k.alg == "oh":
        return oh_update(k, payload, goal)
    if k.alg == "dda":
        return dda_update(k, payload, goal, variant=dda_variant, rng=dda_rng,
                          p_switch=dda_p_switch)
    if k.alg == "gossip":
        new = replace(k, estimate=_freeze(0.5 * (k.estimate + payload.estimate)))
        return UpdateOutcome(new, 0.0, "midpoint")
    if k.alg == "aris":
        return aris_update(k, payload, aris_rng)
    raise ConfigurationError(f"unknown algorithm {k.alg!r}")
