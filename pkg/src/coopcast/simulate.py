"""Slotted-time Monte Carlo execution of protocols A-D and the stability bisection.

One slot: the source transmits if it has something to send (for source
coding, a full generation); otherwise the relay may use the slot. Links are
sampled independently, ACKs are instantaneous and overheard by the relay,
and a Bernoulli(lambda) arrival lands at the end of the slot.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels as K
from .galois import FieldSpec, decode_count_table
from .model import NcParams, NetworkConfig

log = logging.getLogger(__name__)

MAX_TRACE_SAMPLES = 10_000


class Protocol(str, Enum):
    PRP = "A"
    SOURCE_RLNC = "B"
    COOPERATION = "C"
    COOPERATION_NC = "D"


class Fidelity(str, Enum):
    FAITHFUL = "faithful"
    MECHANISTIC = "mechanistic"


_KERNEL_CODES = {
    Protocol.PRP: K.PROTO_PRP,
    Protocol.SOURCE_RLNC: K.PROTO_SOURCE_RLNC,
    Protocol.COOPERATION: K.PROTO_COOP,
    Protocol.COOPERATION_NC: K.PROTO_COOP_NC,
}


@dataclass(frozen=True)
class ProtocolKind:
    """Protocol selector; coding protocols carry NcParams and a fidelity mode.

    ``faithful`` draws one rank-completion count per generation and makes every
    receiver collect that many combinations (the analytic model). ``mechanistic``
    runs real GF(q) combinations through per-receiver decoders, seeded with the
    packets a receiver already overheard when the relay codes.
    """

    protocol: Protocol
    nc: NcParams | None = None
    fidelity: Fidelity = Fidelity.FAITHFUL

    def __post_init__(self):
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        object.__setattr__(self, "fidelity", Fidelity(self.fidelity))
        coding = self.protocol in (Protocol.SOURCE_RLNC, Protocol.COOPERATION_NC)
        if coding != (self.nc is not None):
            raise ValueError(
                f"protocol {self.protocol.value} "
                + ("needs" if coding else "takes no") + " NcParams"
            )

    @classmethod
    def parse(cls, letter: str, nc: NcParams | None = None, mode: str = "faithful"):
        proto = Protocol(letter.upper())
        if proto in (Protocol.PRP, Protocol.COOPERATION):
            nc = None
        return cls(proto, nc, Fidelity(mode))

    @property
    def label(self) -> str:
        if self.nc is None:
            return self.protocol.value
        return f"{self.protocol.value}(q={self.nc.q},K={self.nc.k},{self.fidelity.value})"


@dataclass
class SimReport:
    protocol: str
    lam: float
    seed: int
    slots_run: int
    arrivals: int
    packets_delivered: int
    sample_every: int
    source_trace: np.ndarray = field(repr=False)
    relay_trace: np.ndarray = field(repr=False)
    arrivals_trace: np.ndarray = field(repr=False)
    delivered_trace: np.ndarray = field(repr=False)
    source_drift: float = 0.0
    relay_drift: float = 0.0
    counters: dict = field(default_factory=dict)

    @property
    def drift(self) -> float:
        return max(self.source_drift, self.relay_drift)

    def unstable(self, threshold: float) -> bool:
        return self.drift > threshold

    @property
    def throughput(self) -> float:
        return self.packets_delivered / self.slots_run

    def conservation_ok(self) -> bool:
        """arrivals == delivered + source backlog + relay backlog at every sample."""
        lhs = self.arrivals_trace
        rhs = self.delivered_trace + self.source_trace + self.relay_trace
        final = self.arrivals == (
            self.packets_delivered
            + self.counters["final_source_queue"]
            + self.counters["final_relay_queue"]
        )
        return bool(np.array_equal(lhs, rhs)) and final

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "lambda": self.lam,
            "seed": self.seed,
            "slots_run": self.slots_run,
            "arrivals": self.arrivals,
            "packets_delivered": self.packets_delivered,
            "sample_every": self.sample_every,
            "source_drift": self.source_drift,
            "relay_drift": self.relay_drift,
            "counters": dict(self.counters),
            "source_trace": self.source_trace.tolist(),
            "relay_trace": self.relay_trace.tolist(),
            "arrivals_trace": self.arrivals_trace.tolist(),
            "delivered_trace": self.delivered_trace.tolist(),
        }


def derive_seed(master: int, *labels: int) -> int:
    """32-bit kernel seed for the stream named by ``labels`` under ``master``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(x) for x in labels))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


# substream labels under a run seed; the oracle module uses 101 and up
STREAM_LINKS = 1
STREAM_ARRIVALS = 2
STREAM_CODING = 3


def _streams(seed: int) -> tuple[np.random.Generator, ...]:
    """Independent link, arrival and coding generators for one run."""
    return tuple(
        np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(label,)))
        for label in (STREAM_LINKS, STREAM_ARRIVALS, STREAM_CODING)
    )


def _slope(n, st, stt, sx, stx) -> float:
    den = n * stt - st * st
    if den <= 0:
        return 0.0
    return (n * stx - st * sx) / den


def run(
    cfg: NetworkConfig,
    proto: ProtocolKind,
    lam: float | None = None,
    slots: int = 100_000,
    seed: int = 0,
) -> SimReport:
    """Simulate ``slots`` slots; deterministic in (cfg, proto, lam, slots, seed)."""
    lam = cfg.lam if lam is None else float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if int(slots) != slots or slots < 1:
        raise ValueError(f"slots must be a positive integer, got {slots!r}")
    slots = int(slots)

    nc = proto.nc
    k = nc.k if nc is not None else 1
    q = nc.q if nc is not None else 2
    spec = FieldSpec(q)
    _, pmf = decode_count_table(q, k)
    cdf = np.cumsum(pmf)
    dec = max(1, math.ceil(slots / MAX_TRACE_SAMPLES))
    n_samples = slots // dec
    tr = [np.zeros(n_samples, dtype=np.int64) for _ in range(4)]
    regress = np.zeros(7)

    stats = K.run_kernel(
        _KERNEL_CODES[proto.protocol],
        proto.fidelity is Fidelity.MECHANISTIC,
        cfg.n,
        np.asarray(cfg.f_sd, dtype=np.float64),
        float(cfg.f_sr),
        np.asarray(cfg.f_rd, dtype=np.float64),
        lam,
        slots,
        *_streams(seed),
        k,
        cdf,
        q,
        spec.binary,
        spec.exp_table,
        spec.log_table,
        dec,
        *tr,
        regress,
    )
    n_, st, stt, sx, stx, sy, sty = regress
    counters = {
        "source_transmissions": int(stats[K.STAT_SOURCE_TX]),
        "relay_transmissions": int(stats[K.STAT_RELAY_TX]),
        "relay_handoffs": int(stats[K.STAT_HANDOFFS]),
        "source_releases": int(stats[K.STAT_SOURCE_RELEASES]),
        "generations": int(stats[K.STAT_GENERATIONS]),
        "relay_generations": int(stats[K.STAT_RELAY_GENERATIONS]),
        "combos_received": int(stats[K.STAT_COMBOS_RECEIVED]),
        "final_source_queue": int(stats[K.STAT_FINAL_SOURCE]),
        "final_relay_queue": int(stats[K.STAT_FINAL_RELAY]),
    }
    return SimReport(
        protocol=proto.label,
        lam=lam,
        seed=int(seed),
        slots_run=slots,
        arrivals=int(stats[K.STAT_ARRIVALS]),
        packets_delivered=int(stats[K.STAT_DELIVERED]),
        sample_every=dec,
        source_trace=tr[0],
        relay_trace=tr[1],
        arrivals_trace=tr[2],
        delivered_trace=tr[3],
        source_drift=float(_slope(n_, st, stt, sx, stx)),
        relay_drift=float(_slope(n_, st, stt, sy, sty)),
        counters=counters,
    )


# ---------------------------------------------------------------------------
# stability bisection


class BisectionError(RuntimeError):
    """Stability verdicts stayed non-monotone after the allowed retries."""


@dataclass(frozen=True)
class SearchOptions:
    lo: float = 0.0
    hi: float = 1.0
    slots: int = 1_000_000
    seeds: int = 5
    resolution: float = 0.005
    drift_factor: float = 10.0
    seed: int = 0
    max_retries: int = 2
    workers: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.lo < self.hi <= 1.0:
            raise ValueError("need 0 <= lo < hi <= 1")
        if self.slots < 1 or self.seeds < 1:
            raise ValueError("slots and seeds must be positive")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")

    @property
    def threshold(self) -> float:
        return self.drift_factor / self.slots


@dataclass(frozen=True)
class LambdaEstimate:
    lambda_max: float
    half_width: float
    probes: tuple = ()

    @property
    def low(self) -> float:
        return self.lambda_max - self.half_width

    @property
    def high(self) -> float:
        return self.lambda_max + self.half_width


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("COOPCAST_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def is_unstable(
    cfg: NetworkConfig, proto: ProtocolKind, lam: float, opts: SearchOptions, stream: int = 0
) -> tuple[bool, list[float]]:
    """Majority vote of the drift test over ``opts.seeds`` independent runs."""
    seeds = [derive_seed(opts.seed, stream, j) for j in range(opts.seeds)]
    reports = _map(
        lambda s: run(cfg, proto, lam, opts.slots, s), seeds, worker_count(opts.workers)
    )
    drifts = [r.drift for r in reports]
    votes = sum(d > opts.threshold for d in drifts)
    return votes * 2 > opts.seeds, drifts


def find_lambda_max(
    cfg: NetworkConfig, proto: ProtocolKind, opts: SearchOptions = SearchOptions()
) -> LambdaEstimate:
    """Bisect the arrival rate on the drift-test stability predicate.

    The same seed set is reused for every probe. After bisection both bracket
    ends are re-checked with fresh seeds; a stable upper end together with an
    unstable lower end is treated as noise and the search restarts with twice
    the slots, at most ``opts.max_retries`` times.
    """
    for attempt in range(opts.max_retries + 1):
        lo, hi = opts.lo, opts.hi
        probes = []
        while (hi - lo) / 2 > opts.resolution:
            mid = 0.5 * (lo + hi)
            unstable, drifts = is_unstable(cfg, proto, mid, opts)
            probes.append((mid, unstable, max(drifts)))
            if unstable:
                hi = mid
            else:
                lo = mid
        lo_bad = lo > opts.lo and is_unstable(cfg, proto, lo, opts, stream=1 + attempt)[0]
        hi_good = hi < opts.hi and not is_unstable(cfg, proto, hi, opts, stream=1 + attempt)[0]
        if not (lo_bad and hi_good):
            return LambdaEstimate(0.5 * (lo + hi), 0.5 * (hi - lo), tuple(probes))
        log.warning(
            "non-monotone stability verdicts in [%.4f, %.4f]; retrying with %d slots",
            lo, hi, 2 * opts.slots,
        )
        opts = dataclasses.replace(opts, slots=2 * opts.slots)
    raise BisectionError(
        f"stability verdicts for {proto.label} stayed non-monotone after "
        f"{opts.max_retries} retries"
    )
