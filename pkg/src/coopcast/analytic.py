"""Closed-form maximum stable throughput of the four multicast protocols.

Every infinite sum is evaluated twice where practical: through an
inclusion-exclusion / geometric-series closed form and through direct
truncated summation governed by a :class:`SeriesPolicy`. The two routes are
kept separate so tests can play them against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import betainc

from .galois import decode_count_table
from .model import (
    MAX_STATE_BITS,
    DestinationSet,
    EnumerationOverflowError,
    NcParams,
    NetworkConfig,
)

INFINITE = math.inf
JOINT_STATE_CAP_BITS = 20
_CHUNK = 4096


@dataclass(frozen=True)
class SeriesPolicy:
    rel_tol: float = 1e-12
    max_terms: int = 1_000_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_POLICY = SeriesPolicy()


class Binding(str, Enum):
    SOURCE = "source-queue"
    RELAY = "relay-queue"


@dataclass(frozen=True)
class StabilityResult:
    lambda_max: float
    source_mu: float
    relay_etr: float
    binding_constraint: Binding

    @property
    def rho_max(self) -> float:
        return self.lambda_max / self.source_mu if self.source_mu > 0 else 0.0


class SeriesDivergenceError(ArithmeticError):
    pass


def _sum_positive_series(term_fn, start: int, policy: SeriesPolicy) -> float:
    """Sum of ``term_fn(t)`` for t >= start, terms positive and eventually decaying.

    ``term_fn`` is evaluated on numpy index chunks. Summation stops at the first
    term whose ratio to the running partial sum drops below ``policy.rel_tol``.
    """
    total = 0.0
    t0 = start
    used = 0
    chunk = 64
    while used < policy.max_terms:
        size = min(chunk, policy.max_terms - used)
        t = np.arange(t0, t0 + size)
        terms = term_fn(t)
        partial = total + np.cumsum(terms)
        small = np.flatnonzero(terms <= policy.rel_tol * partial)
        if small.size:
            return float(partial[small[0]])
        total = float(partial[-1])
        t0 += size
        used += size
        chunk = min(chunk * 4, _CHUNK * 16)
    raise SeriesDivergenceError(
        f"series did not reach rel_tol={policy.rel_tol} within {policy.max_terms} terms"
    )


def _subset_products(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Products over every nonempty subset and the inclusion-exclusion signs."""
    n = len(values)
    prods = np.ones(1, dtype=np.float64)
    sizes = np.zeros(1, dtype=np.int64)
    for v in values:
        prods = np.concatenate([prods, prods * v])
        sizes = np.concatenate([sizes, sizes + 1])
    signs = np.where(sizes % 2 == 1, 1.0, -1.0)
    return prods[1:], signs[1:]


# ---------------------------------------------------------------------------
# expected maximum of independent geometric / negative-binomial variables


def expected_max_geometric(
    probs: Sequence[float],
    policy: SeriesPolicy = DEFAULT_POLICY,
    method: str = "auto",
) -> float:
    """E[max_i N_i] for independent N_i ~ Geometric(p_i) on {1, 2, ...}.

    Returns ``math.inf`` when some p_i is zero and 0 for an empty list.
    ``method`` is ``"closed"`` (inclusion-exclusion), ``"series"``
    (sum of Pr[max > t]) or ``"auto"``.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.size == 0:
        return 0.0
    if np.any(p <= 0.0):
        return INFINITE
    if method == "auto":
        method = "closed" if p.size <= MAX_STATE_BITS else "series"
    fail = 1.0 - p
    if method == "closed":
        prods, signs = _subset_products(fail)
        return float(np.sum(signs / (1.0 - prods)))
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    log_fail = np.log(fail[fail > 0])
    if log_fail.size == 0:
        return 1.0

    def tail(t):
        # Pr[max > t] = 1 - prod_i (1 - (1-p_i)^t)
        logs = np.log1p(-np.exp(np.outer(t, log_fail)))
        return -np.expm1(logs.sum(axis=1))

    return 1.0 + _sum_positive_series(tail, 1, policy)


def _negbin_sf(l: int, f: float, t: np.ndarray) -> np.ndarray:
    """Pr[more than ``t`` slots are needed for ``l`` successes at rate ``f``].

    Equals Pr[Binomial(t, f) <= l - 1], evaluated through the regularized
    incomplete beta function so small tails keep full relative precision.
    """
    t = np.asarray(t)
    if f >= 1.0:
        return (t < l).astype(np.float64)
    if f <= 0.0:
        return np.ones(t.shape)
    out = np.ones(t.shape)
    ok = t >= l
    out[ok] = betainc(t[ok] - l + 1.0, float(l), 1.0 - f)
    return out


def expected_max_negbin(
    l: int, probs: Sequence[float], policy: SeriesPolicy = DEFAULT_POLICY
) -> float:
    """E[max_i T_i] where T_i counts slots until destination i collects ``l`` receptions."""
    p = np.asarray(probs, dtype=np.float64)
    if p.size == 0:
        return 0.0
    if np.any(p <= 0.0):
        return INFINITE
    if l == 1:
        return expected_max_geometric(p, policy)
    if np.all(p >= 1.0):
        return float(l)
    # Pr[max > t] = 1 for t < l, so start the series at t = l.
    def tail(t):
        # Pr[max > t] = 1 - prod_i (1 - sf_i(t)), kept accurate for tiny sf
        log_cdf = np.zeros(t.size)
        with np.errstate(divide="ignore"):
            for fi in p:
                log_cdf += np.log1p(-_negbin_sf(l, fi, t))
        return -np.expm1(log_cdf)

    return float(l) + _sum_positive_series(tail, l, policy)


# ---------------------------------------------------------------------------
# Protocol A: plain retransmission


def prp_max_stable(cfg: NetworkConfig, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Maximum stable throughput of plain multicast ARQ (reciprocal of E[max N_i])."""
    e = expected_max_geometric(cfg.f_sd, policy)
    return 0.0 if math.isinf(e) else 1.0 / e


# ---------------------------------------------------------------------------
# Protocol B: random linear network coding at the source


def rlnc_expected_generation_time(
    probs: Sequence[float], nc: NcParams, policy: SeriesPolicy = DEFAULT_POLICY
) -> float:
    """Expected slots to deliver one generation to every destination in ``probs``.

    Averages the negative-binomial maximum over the number of combinations a
    receiver needs before its rank reaches K.
    """
    if len(probs) == 0:
        return 0.0
    if min(probs) <= 0.0:
        return INFINITE
    ls, pmf = decode_count_table(nc.q, nc.k)
    total = 0.0
    for l, w in zip(ls, pmf):
        if w == 0.0:
            continue
        total += w * expected_max_negbin(int(l), probs, policy)
    return total


def rlnc_source_max_stable(
    cfg: NetworkConfig, nc: NcParams, policy: SeriesPolicy = DEFAULT_POLICY
) -> float:
    e = rlnc_expected_generation_time(cfg.f_sd, nc, policy)
    return 0.0 if math.isinf(e) else nc.k / e


# ---------------------------------------------------------------------------
# Protocol C: network-level cooperation


def coop_source_service_rate(
    cfg: NetworkConfig, policy: SeriesPolicy = DEFAULT_POLICY, method: str = "auto"
) -> float:
    """Source service rate when a packet leaves on relay capture or full delivery."""
    if cfg.f_sr >= 1.0:
        return 1.0
    if method == "auto":
        method = "closed" if cfg.n <= MAX_STATE_BITS else "series"
    y = 1.0 - cfg.f_sr
    fail = 1.0 - np.asarray(cfg.f_sd)
    if method == "closed":
        if cfg.f_sr == 0.0 and np.any(fail >= 1.0):
            return 0.0
        prods, signs = _subset_products(fail)
        c = y * prods
        e = 1.0 + float(np.sum(signs * c / ((1.0 - prods) + cfg.f_sr * prods)))
        return 1.0 / e
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    if cfg.f_sr == 0.0:
        e = expected_max_geometric(cfg.f_sd, policy, method="series")
        return 0.0 if math.isinf(e) else 1.0 / e
    log_y = math.log(y)

    def tail(t):
        not_all = 1.0 - np.prod(1.0 - fail[None, :] ** t[:, None], axis=1)
        return np.exp(t * log_y) * not_all

    return 1.0 / (1.0 + _sum_positive_series(tail, 1, policy))


def relay_arrival_rate(cfg: NetworkConfig, rho: float) -> float:
    """Upper bound on the relay's per-slot arrival rate at source load ``rho``."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    return rho * cfg.relay_arrival_prob


def _state_terms(cfg: NetworkConfig, f_mask: int) -> tuple[np.ndarray, np.ndarray]:
    """Expand prod_{F}(1-f)^m prod_{S}[1-(1-f)^m] into sum_B sign_B * c_B^m."""
    fail = 1.0 - np.asarray(cfg.f_sd)
    in_f = np.array([(f_mask >> i) & 1 for i in range(cfg.n)], dtype=bool)
    base = float(np.prod(fail[in_f]))
    s_fail = fail[~in_f]
    prods = np.ones(1)
    signs = np.ones(1)
    for v in s_fail:
        prods = np.concatenate([prods, prods * v])
        signs = np.concatenate([signs, -signs])
    return base * prods, signs


def state_probability(
    cfg: NetworkConfig,
    f_set: DestinationSet | int,
    policy: SeriesPolicy = DEFAULT_POLICY,
    method: str = "closed",
) -> float:
    """Pr[destinations in F still miss the packet when the relay takes over].

    The relay-capture epoch is geometric with parameter
    a = f_SR (1 - prod f_SDi); each destination decodes independently meanwhile.
    """
    a = cfg.relay_arrival_prob
    if a <= 0.0:
        raise ValueError("relay arrival probability is zero; relay states are undefined")
    mask = f_set.mask if isinstance(f_set, DestinationSet) else int(f_set)
    if mask < 0 or mask >> cfg.n:
        raise ValueError(f"mask {mask:#x} outside {cfg.n} destinations")
    if method == "closed":
        c, signs = _state_terms(cfg, mask)
        # 1 - (1-a)c written as (1-c) + ac to survive a -> 0
        return float(np.sum(signs * a * c / ((1.0 - c) + a * c)))
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    fail = 1.0 - np.asarray(cfg.f_sd)
    in_f = np.array([(mask >> i) & 1 for i in range(cfg.n)], dtype=bool)
    if a >= 1.0:
        return float(np.prod(fail[in_f]) * np.prod(1.0 - fail[~in_f]))

    def term(m):
        mf = m.astype(float)[:, None]
        pf = np.prod(fail[in_f][None, :] ** mf, axis=1)
        ps = np.prod(1.0 - fail[~in_f][None, :] ** mf, axis=1)
        return a * (1.0 - a) ** (mf[:, 0] - 1.0) * pf * ps

    return _sum_with_zeros(term, policy)


def _sum_with_zeros(term_fn, policy: SeriesPolicy) -> float:
    # summands rise from zero before decaying (S members must first decode),
    # so truncation only starts once a positive term has been seen
    total = 0.0
    m0 = 1
    chunk = 256
    used = 0
    seen_positive = False
    while used < policy.max_terms:
        m = np.arange(m0, m0 + chunk)
        terms = term_fn(m)
        for v in terms:
            if v > 0:
                seen_positive = True
            total += v
            if seen_positive and v <= policy.rel_tol * total:
                return total
        used += chunk
        m0 += chunk
        if not seen_positive and used > 4096:
            return 0.0
    raise SeriesDivergenceError("state probability series did not converge")


def state_distribution(cfg: NetworkConfig) -> np.ndarray:
    """state_probability for every mask 0 .. 2**n - 1 (ascending order)."""
    if cfg.n > MAX_STATE_BITS:
        raise EnumerationOverflowError(1 << cfg.n, 1 << MAX_STATE_BITS)
    return np.array([state_probability(cfg, m) for m in range(1 << cfg.n)])


def _relay_probs(cfg: NetworkConfig, mask: int) -> list[float]:
    return [cfg.f_rd[i] for i in range(cfg.n) if mask >> i & 1]


def relay_expected_service_saturated(
    cfg: NetworkConfig, policy: SeriesPolicy = DEFAULT_POLICY
) -> float:
    """E[T_R]: relay slots to clear one captured packet if it could send every slot."""
    if cfg.relay_arrival_prob <= 0.0:
        return 0.0
    dist = state_distribution(cfg)
    total = 0.0
    for mask in range(1, 1 << cfg.n):
        w = dist[mask]
        if w <= 0.0:
            continue
        e = expected_max_geometric(_relay_probs(cfg, mask), policy)
        if math.isinf(e):
            return INFINITE
        total += w * e
    return total


def _smallest_root(a: float, b: float, c: float) -> float:
    """Smaller root of a x^2 - b x + c = 0 with a, b, c > 0, cancellation-free.

    Returns ``math.inf`` when the discriminant is negative: the quadratic is
    then positive for every x and never constrains the load.
    """
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        if disc < -1e-12 * b * b:
            return INFINITE
        disc = 0.0
    return 2.0 * c / (b + math.sqrt(disc))


def _stability(mu: float, a: float, etr: float, k: int) -> StabilityResult:
    if mu <= 0.0:
        return StabilityResult(0.0, mu, etr, Binding.SOURCE)
    if a <= 0.0 or etr == 0.0:
        return StabilityResult(mu, mu, etr, Binding.SOURCE)
    if math.isinf(etr):
        return StabilityResult(0.0, mu, etr, Binding.RELAY)
    # relay condition: a rho^2 - (k + a E[T_R]) rho + k > 0
    root = _smallest_root(a, k + a * etr, float(k))
    if root < 1.0:
        return StabilityResult(mu * root, mu, float(etr), Binding.RELAY)
    return StabilityResult(mu, mu, float(etr), Binding.SOURCE)


def coop_max_stable(cfg: NetworkConfig, policy: SeriesPolicy = DEFAULT_POLICY) -> StabilityResult:
    """Maximum stable throughput of cooperation without coding."""
    mu = coop_source_service_rate(cfg, policy)
    a = cfg.relay_arrival_prob
    if a <= 0.0:
        return StabilityResult(mu, mu, 0.0, Binding.SOURCE)
    etr = relay_expected_service_saturated(cfg, policy)
    return _stability(mu, a, etr, 1)


def relay_handoff_probability(cfg: NetworkConfig, f_set: DestinationSet | int) -> float:
    """Pr[a source packet is captured by the relay with residual set F], F nonempty.

    This is the distribution the simulated protocol actually produces: the
    relay only takes a packet while some destination still misses it, so the
    capture slot is the first relay success, reached before full delivery.
    """
    mask = f_set.mask if isinstance(f_set, DestinationSet) else int(f_set)
    if mask == 0 or cfg.f_sr <= 0.0:
        return 0.0
    c, signs = _state_terms(cfg, mask)
    return float(np.sum(signs * cfg.f_sr * c / ((1.0 - c) + cfg.f_sr * c)))


def relay_workload_per_packet(cfg: NetworkConfig, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Expected relay slots spent per source packet in the simulated protocol."""
    total = 0.0
    for mask in range(1, 1 << cfg.n):
        w = relay_handoff_probability(cfg, mask)
        if w <= 0.0:
            continue
        e = expected_max_geometric(_relay_probs(cfg, mask), policy)
        if math.isinf(e):
            return INFINITE
        total += w * e
    return total


def coop_protocol_max_stable(
    cfg: NetworkConfig, policy: SeriesPolicy = DEFAULT_POLICY
) -> StabilityResult:
    """Stable throughput of the cooperation protocol under its exact hand-off law.

    A backlogged relay owns every idle source slot, a fraction 1 - lambda/mu, and
    needs lambda * W of them, W being the per-packet relay workload.
    """
    mu = coop_source_service_rate(cfg, policy)
    w = relay_workload_per_packet(cfg, policy)
    if mu <= 0.0:
        return StabilityResult(0.0, mu, w, Binding.SOURCE)
    if math.isinf(w):
        return StabilityResult(0.0, mu, w, Binding.RELAY)
    lam = 1.0 / (w + 1.0 / mu)
    if w > 0.0 and lam < mu:
        return StabilityResult(lam, mu, w, Binding.RELAY)
    return StabilityResult(mu, mu, w, Binding.SOURCE)


# ---------------------------------------------------------------------------
# Protocol D: cooperation with coding at the relay


def joint_state_probability(
    cfg: NetworkConfig, f_sets: Sequence[DestinationSet | int]
) -> float:
    if len(f_sets) < 1:
        raise ValueError("need at least one packet state")
    return math.prod(state_probability(cfg, f) for f in f_sets)


def _check_joint_cap(n: int, k: int, cap_bits: int) -> None:
    if n * k > cap_bits:
        raise EnumerationOverflowError(
            1 << (n * k), 1 << cap_bits, what="joint reception states"
        )


def union_distribution(cfg: NetworkConfig, k: int) -> np.ndarray:
    """Distribution of the union of K i.i.d. failure sets, indexed by mask.

    Equivalent to summing joint_state_probability over all joint states with a
    given union; computed by repeated OR-convolution instead of (2^n)^K terms.
    """
    single = state_distribution(cfg)
    size = 1 << cfg.n
    masks = np.arange(size)
    out = single.copy()
    for _ in range(k - 1):
        nxt = np.zeros(size)
        for m in range(size):
            if out[m] == 0.0:
                continue
            np.add.at(nxt, masks | m, out[m] * single)
        out = nxt
    return out


def coop_nc_relay_service(
    cfg: NetworkConfig,
    nc: NcParams,
    policy: SeriesPolicy = DEFAULT_POLICY,
    cap_bits: int = JOINT_STATE_CAP_BITS,
) -> float:
    """E[T_R] for one relay generation of K packets, relay sending every slot."""
    _check_joint_cap(cfg.n, nc.k, cap_bits)
    if cfg.relay_arrival_prob <= 0.0:
        return 0.0
    dist = union_distribution(cfg, nc.k)
    total = 0.0
    for mask in range(1, 1 << cfg.n):
        w = dist[mask]
        if w <= 0.0:
            continue
        e = rlnc_expected_generation_time(_relay_probs(cfg, mask), nc, policy)
        if math.isinf(e):
            return INFINITE
        total += w * e
    return total


def coop_nc_max_stable(
    cfg: NetworkConfig,
    nc: NcParams,
    policy: SeriesPolicy = DEFAULT_POLICY,
    cap_bits: int = JOINT_STATE_CAP_BITS,
) -> StabilityResult:
    mu = coop_source_service_rate(cfg, policy)
    a = cfg.relay_arrival_prob
    if a <= 0.0:
        return StabilityResult(mu, mu, 0.0, Binding.SOURCE)
    etr = coop_nc_relay_service(cfg, nc, policy, cap_bits)
    return _stability(mu, a, etr, nc.k)


# ---------------------------------------------------------------------------
# dispatch


def max_stable(
    cfg: NetworkConfig,
    protocol: str,
    nc: NcParams | None = None,
    policy: SeriesPolicy = DEFAULT_POLICY,
    cap_bits: int = JOINT_STATE_CAP_BITS,
) -> StabilityResult:
    """Protocol letter A/B/C/D -> StabilityResult."""
    protocol = protocol.upper()
    if protocol == "A":
        mu = prp_max_stable(cfg, policy)
        return StabilityResult(mu, mu, 0.0, Binding.SOURCE)
    if protocol == "B":
        if nc is None:
            raise ValueError("protocol B needs NcParams")
        mu = rlnc_source_max_stable(cfg, nc, policy)
        return StabilityResult(mu, mu, 0.0, Binding.SOURCE)
    if protocol == "C":
        return coop_max_stable(cfg, policy)
    if protocol == "D":
        if nc is None:
            raise ValueError("protocol D needs NcParams")
        return coop_nc_max_stable(cfg, nc, policy, cap_bits)
    raise ValueError(f"unknown protocol {protocol!r}")
