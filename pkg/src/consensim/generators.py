"""Communication-sequence generators.

The randomized protocol draws, at each discrete step k = 1..horizon, an
ordered pair of distinct nodes (i, j); i always signals j at time k,
and with probability p a back-signal j -> i is emitted at the same
step.  Under instantaneous delivery, simultaneous receptions inside a
step get a deterministic tie-break offset so assumption A9 (one
reception per node per instant) holds by construction.

PRNG contract (so any implementation language reproduces streams):
SplitMix64 with the usual constants -- the 64-bit counter state advances
by 0x9E3779B97F4A7C15 per draw and the output is

    z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31)

all modulo 2^64.  Floats are ((z >> 11) + 0.5) / 2^53, which lies in
the open interval (0, 1).  Bounded integers use z % m (the modulo bias
is below 2^-50 for every m used here).  Pair selection is pure integer
arithmetic on an index below n*(n-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CommSequence, ConfigurationError, Signal, sequence_from_events

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

#: Tie-break offset between same-step receptions (2^-20 step units).
TIE_EPSILON = 2.0**-20


class SplitMix64:
    """Counter-based 64-bit generator; see the module docstring."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform draw from the open interval (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) / 2.0**53

    def next_floats(self, count: int) -> np.ndarray:
        """Vectorized batch of `count` draws, identical to repeated
        next_float() calls (the counter state just advances in bulk)."""
        base = np.uint64(self.state) + np.uint64(_GAMMA) * np.arange(1, count + 1, dtype=np.uint64)
        self.state = (self.state + count * _GAMMA) & _MASK
        z = base
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        return ((z >> np.uint64(11)).astype(np.float64) + 0.5) / 2.0**53

    def next_below(self, m: int) -> int:
        return self.next_u64() % m


def derive_stream(seed: int, tag: int) -> SplitMix64:
    """Independent substream for (seed, tag); used for per-node streams."""
    root = SplitMix64(seed)
    root.state = (root.state + tag * _GAMMA) & _MASK
    mixed = root.next_u64()
    return SplitMix64(mixed)


@dataclass(frozen=True)
class RandomProtocolConfig:
    """Parameters of the randomized instantaneous/delayed protocol."""

    n: int
    p: float
    horizon: int
    seed: int
    delay: str = "instantaneous"   # instantaneous | fixed | uniform
    delay_min: float = 0.0
    delay_max: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError(f"p must lie in [0,1], got {self.p}")
        if self.horizon < 0:
            raise ConfigurationError("horizon must be non-negative")
        if self.delay not in ("instantaneous", "fixed", "uniform"):
            raise ConfigurationError(f"unknown delay model {self.delay!r}")
        if self.delay_min < 0 or self.delay_max < self.delay_min:
            raise ConfigurationError("need 0 <= delay_min <= delay_max")


def _decode_pair(idx: int, n: int) -> tuple[int, int]:
    i0, j0 = divmod(idx, n - 1)
    if j0 >= i0:
        j0 += 1
    return i0 + 1, j0 + 1


def gen_random_protocol(cfg: RandomProtocolConfig) -> CommSequence:
    """Generate the randomized protocol sequence; bit-stable per seed."""
    if cfg.n < 2:
        raise ConfigurationError("the random protocol needs n >= 2")
    rng = SplitMix64(cfg.seed)
    instantaneous = cfg.delay == "instantaneous"
    signals: list[Signal] = []
    event_id = 0
    pair_count = 0
    for k in range(1, cfg.horizon + 1):
        i, j = _decode_pair(rng.next_below(cfg.n * (cfg.n - 1)), cfg.n)
        back = rng.next_float() < cfg.p
        step: list[tuple[int, int]] = [(i, j)]
        if back:
            step.append((j, i))
        pair_id = None
        if back and instantaneous:
            pair_id = pair_count
            pair_count += 1
        for rank, (src, dst) in enumerate(step):
            t_send = float(k)
            if instantaneous:
                t_recv = k + TIE_EPSILON * rank
            elif cfg.delay == "fixed":
                t_recv = k + cfg.delay_min
            else:
                t_recv = k + cfg.delay_min + (cfg.delay_max - cfg.delay_min) * rng.next_float()
            signals.append(Signal(t_recv=t_recv, event_id=event_id, t_send=t_send,
                                  sender=src, receiver=dst, pair_id=pair_id))
            event_id += 1
    _bump_collisions(signals)
    return sequence_from_events(signals)


def _bump_collisions(signals: list[Signal]) -> None:
    """Perturb exact (receiver, t_recv) duplicates left by a delay model."""
    seen: dict[tuple[int, float], int] = {}
    for idx, sig in enumerate(signals):
        key = (sig.receiver, sig.t_recv)
        dup = seen.get(key, 0)
        if dup:
            bumped = sig.t_recv + TIE_EPSILON * dup
            signals[idx] = Signal(t_recv=bumped, event_id=sig.event_id, t_send=sig.t_send,
                                  sender=sig.sender, receiver=sig.receiver, pair_id=sig.pair_id)
            seen[key] = dup + 1
            seen[(sig.receiver, bumped)] = 1
        else:
            seen[key] = 1


def gen_double_cycle(n: int) -> CommSequence:
    """Unit-delay double cycle: 2(n-1) signals, strictly increasing times.

    Signal q (1-based) leaves at 2(q-1) and arrives at 2q-1.  The first
    n-1 signals walk 1 -> 2 -> ... -> n, signal n closes the loop
    n -> 1, and the remaining n-2 walk 1 -> 2 -> ... -> n-1 again.
    """
    if n < 2:
        raise ConfigurationError("the double cycle needs n >= 2")
    signals = []
    for q in range(1, 2 * (n - 1) + 1):
        if q <= n - 1:
            src, dst = q, q + 1
        elif q == n:
            src, dst = n, 1
        else:
            src, dst = q - n, q - n + 1
        signals.append(Signal(t_recv=float(2 * q - 1), event_id=q - 1,
                              t_send=float(2 * (q - 1)), sender=src, receiver=dst))
    return sequence_from_events(signals)
