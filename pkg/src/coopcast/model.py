"""Network parameterization, erasure-link sampling and reception-state sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

MAX_STATE_BITS = 20


class EnumerationOverflowError(ValueError):
    """Raised when a state enumeration would exceed its configured cap."""

    def __init__(self, required: int, allowed: int, what: str = "states"):
        self.required = required
        self.allowed = allowed
        super().__init__(
            f"enumeration of {what} needs {required} entries, cap is {allowed}"
        )


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class NetworkConfig:
    """One source, one relay and ``n`` destinations over erasure links.

    ``f_sd[i]`` and ``f_rd[i]`` are the per-slot success probabilities of the
    source->destination and relay->destination links, ``f_sr`` the
    source->relay link and ``lam`` the Bernoulli arrival rate per slot.
    """

    n: int
    f_sd: tuple[float, ...]
    f_sr: float
    f_rd: tuple[float, ...]
    lam: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        f_sd = tuple(_check_prob(f"f_sd[{i}]", p) for i, p in enumerate(self.f_sd))
        f_rd = tuple(_check_prob(f"f_rd[{i}]", p) for i, p in enumerate(self.f_rd))
        if len(f_sd) != self.n or len(f_rd) != self.n:
            raise ValueError(
                f"f_sd and f_rd need exactly n={self.n} entries, "
                f"got {len(f_sd)} and {len(f_rd)}"
            )
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "f_sd", f_sd)
        object.__setattr__(self, "f_rd", f_rd)
        object.__setattr__(self, "f_sr", _check_prob("f_sr", self.f_sr))
        object.__setattr__(self, "lam", _check_prob("lambda", self.lam))

    @classmethod
    def symmetric(cls, n: int, p: float, f_sr: float, pr: float, lam: float = 0.0):
        """All source-destination links share ``p``, relay links share ``pr``."""
        return cls(n=n, f_sd=(p,) * n, f_sr=f_sr, f_rd=(pr,) * n, lam=lam)

    def with_lambda(self, lam: float) -> "NetworkConfig":
        return NetworkConfig(self.n, self.f_sd, self.f_sr, self.f_rd, lam)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def relay_arrival_prob(self) -> float:
        """Per busy slot probability that the relay decodes while some
        destination fails in the same slot."""
        return self.f_sr * (1.0 - math.prod(self.f_sd))


@dataclass(frozen=True)
class NcParams:
    """Coding parameters: field order ``q`` and generation size ``k``."""

    q: int
    k: int

    def __post_init__(self):
        from .galois import FieldSpec

        FieldSpec(self.q)  # validates the order
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"generation size must be >= 1, got {self.k!r}")


@dataclass(frozen=True)
class ChannelPhysics:
    beta: float
    power: float
    noise: float

    def __post_init__(self):
        for name in ("beta", "power", "noise"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be positive, got {v!r}")


def success_probability_from_physics(phys: ChannelPhysics) -> float:
    """Pr[|h|^2 P / N_o > beta] for unit-variance Rayleigh fading.

    |h|^2 is exponential with unit mean, so the tail is exp(-beta N_o / P).
    """
    return min(1.0, max(0.0, math.exp(-phys.beta * phys.noise / phys.power)))


def sample_link(prob: float, rng: np.random.Generator) -> bool:
    """One erasure-link use: True with probability ``prob``."""
    if prob >= 1.0:
        return True
    if prob <= 0.0:
        return False
    return bool(rng.random() < prob)


@dataclass(frozen=True, order=True)
class DestinationSet:
    """Subset of destinations {1..n} stored as a bitmask (bit i-1 is node i)."""

    mask: int
    n: int = field(compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.mask < 0 or self.mask >> self.n:
            raise ValueError(f"mask {self.mask:#x} has bits outside {self.n} nodes")

    @classmethod
    def of(cls, members: Sequence[int], n: int) -> "DestinationSet":
        mask = 0
        for m in members:
            if not 1 <= m <= n:
                raise ValueError(f"destination {m} outside 1..{n}")
            mask |= 1 << (m - 1)
        return cls(mask, n)

    def complement(self) -> "DestinationSet":
        return DestinationSet(((1 << self.n) - 1) & ~self.mask, self.n)

    def members(self) -> list[int]:
        return [i + 1 for i in range(self.n) if self.mask >> i & 1]

    def __contains__(self, node: int) -> bool:
        return 1 <= node <= self.n and bool(self.mask >> (node - 1) & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __or__(self, other: "DestinationSet") -> "DestinationSet":
        if other.n != self.n:
            raise ValueError("sets over different destination counts")
        return DestinationSet(self.mask | other.mask, self.n)

    def __repr__(self) -> str:
        return "{" + ",".join(map(str, self.members())) + "}"


def enumerate_states(n: int, cap_bits: int = MAX_STATE_BITS) -> Iterator[DestinationSet]:
    """All 2**n subsets of {1..n} in ascending mask order (empty set first)."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > cap_bits:
        raise EnumerationOverflowError(1 << n, 1 << cap_bits)
    for mask in range(1 << n):
        yield DestinationSet(mask, n)
