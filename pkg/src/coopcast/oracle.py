"""Brute-force Monte Carlo estimators used to cross-check the closed forms.

Each estimator samples the defining random variables directly; nothing here
calls into the analytic module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from ._kernels import absorb_row
from .galois import FieldSpec
from .model import NcParams, NetworkConfig
from .simulate import derive_seed

# stream labels keep oracle draws disjoint from simulator streams
STREAM_GEOMETRIC = 101
STREAM_RELAY = 102
STREAM_RANK = 103
STREAM_NC_RELAY = 104


@dataclass(frozen=True)
class OracleEstimate:
    mean: float
    stderr: float
    trials: int

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "OracleEstimate":
        x = np.asarray(x, dtype=np.float64)
        if x.size < 1:
            raise ValueError("need at least one trial")
        sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
        return cls(float(x.mean()), sd / math.sqrt(x.size), int(x.size))

    def covers(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean - value) <= sigmas * self.stderr


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream,)))


def mc_expected_max_geometric(probs, trials: int = 1_000_000, seed: int = 0) -> OracleEstimate:
    p = np.asarray(probs, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p > 1.0):
        raise ValueError("probabilities must lie in (0, 1]")
    rng = _rng(seed, STREAM_GEOMETRIC)
    draws = rng.geometric(p, size=(trials, p.size))
    return OracleEstimate.from_samples(draws.max(axis=1))


def _relay_states(cfg: NetworkConfig, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Residual failure masks when the relay takes a packet over.

    Relay capture happens after a Geometric(a) number of source slots, with
    a = f_SR (1 - prod f_SDi); destination i has decoded by then iff its own
    first success (Geometric(f_SDi)) came no later.
    """
    a = cfg.relay_arrival_prob
    if a <= 0.0:
        raise ValueError("relay arrival probability is zero")
    capture = rng.geometric(a, size=trials)
    masks = np.zeros(trials, dtype=np.int64)
    for i, f in enumerate(cfg.f_sd):
        if f <= 0.0:
            decoded = np.zeros(trials, dtype=bool)
        else:
            decoded = rng.geometric(f, size=trials) <= capture
        masks |= np.where(decoded, 0, 1 << i)
    return masks


def _relay_slots(masks: np.ndarray, f_rd, rng: np.random.Generator) -> np.ndarray:
    """Slots for the relay to reach every member of each mask (0 for the empty set)."""
    out = np.zeros(masks.size, dtype=np.int64)
    for i, f in enumerate(f_rd):
        member = (masks >> i) & 1 == 1
        if not member.any():
            continue
        if f <= 0.0:
            raise ValueError(f"relay link to destination {i + 1} never succeeds")
        t = rng.geometric(f, size=masks.size)
        out = np.where(member, np.maximum(out, t), out)
    return out


def mc_relay_state_and_service(
    cfg: NetworkConfig, trials: int = 1_000_000, seed: int = 0
) -> tuple[np.ndarray, OracleEstimate]:
    """Empirical state-frequency table (indexed by F mask) and E[T_R] estimate."""
    rng = _rng(seed, STREAM_RELAY)
    masks = _relay_states(cfg, trials, rng)
    freq = np.bincount(masks, minlength=1 << cfg.n) / trials
    service = _relay_slots(masks, cfg.f_rd, rng)
    return freq, OracleEstimate.from_samples(service)


@njit(cache=True)
def _rank_completion_kernel(k, q, binary, exp, log, trials, rng, cap):
    counts = np.zeros(cap + 1, dtype=np.int64)
    rows = np.zeros((1, k, k), dtype=np.int64)
    piv = np.zeros((1, k), dtype=np.int64)
    rank = np.zeros(1, dtype=np.int64)
    vec = np.zeros(k, dtype=np.int64)
    for _ in range(trials):
        rank[0] = 0
        draws = 0
        while rank[0] < k:
            for c in range(k):
                vec[c] = int(rng.random() * q)
            absorb_row(rows, piv, rank, 0, vec, k, q, binary, exp, log)
            draws += 1
        counts[min(draws, cap)] += 1
    return counts


def mc_rank_completion(
    spec: FieldSpec | int, k: int, trials: int = 100_000, seed: int = 0
) -> dict[int, OracleEstimate]:
    """Empirical PMF of the number of uniform draws until rank k, as {l: estimate}."""
    spec = spec if isinstance(spec, FieldSpec) else FieldSpec(int(spec))
    cap = k + 200
    counts = _rank_completion_kernel(
        k, spec.q, spec.binary, spec.exp_table, spec.log_table, trials,
        _rng(seed, STREAM_RANK), cap,
    )
    out = {}
    for l in range(k, cap + 1):
        p = counts[l] / trials
        if counts[l] or l < k + 3:
            out[l] = OracleEstimate(p, math.sqrt(max(p * (1 - p), 1e-300) / trials), trials)
    return out


def rank_completion_samples(spec: FieldSpec, k: int, trials: int, seed: int) -> np.ndarray:
    """Raw completion counts, one per trial, expanded from the histogram kernel."""
    cap = k + 200
    counts = _rank_completion_kernel(
        k, spec.q, spec.binary, spec.exp_table, spec.log_table, trials, _rng(seed, STREAM_RANK), cap
    )
    samples = np.repeat(np.arange(cap + 1), counts)
    np.random.default_rng(seed).shuffle(samples)
    return samples


def mc_nc_relay_service(
    cfg: NetworkConfig, nc: NcParams, trials: int = 1_000_000, seed: int = 0
) -> OracleEstimate:
    """Relay slots to clear one coded generation of K captured packets.

    Samples K independent capture states, a rank-completion count per
    generation, and for each destination in the union a negative-binomial
    number of relay slots to collect that many combinations.
    """
    rng = _rng(seed, STREAM_NC_RELAY)
    union = np.zeros(trials, dtype=np.int64)
    for _ in range(nc.k):
        union |= _relay_states(cfg, trials, rng)
    spec = FieldSpec(nc.q)
    need = rank_completion_samples(spec, nc.k, trials, derive_seed(seed, STREAM_NC_RELAY))
    out = np.zeros(trials, dtype=np.int64)
    for i, f in enumerate(cfg.f_rd):
        member = (union >> i) & 1 == 1
        if not member.any():
            continue
        if f <= 0.0:
            raise ValueError(f"relay link to destination {i + 1} never succeeds")
        # slots to collect `need` successes = need + failures before the need-th success
        t = need + rng.negative_binomial(need, f)
        out = np.where(member, np.maximum(out, t), out)
    return OracleEstimate.from_samples(out)
