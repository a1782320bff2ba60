"""Finite fields GF(q) and a random linear network coding encoder/decoder.

Both prime fields and binary extension fields are represented through
log/antilog tables built from a generator of the multiplicative group, so the
simulator kernels can share one table layout for every supported ``q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

# Primitive reduction polynomials for GF(2^m), bit i is the coefficient of x^i.
PRIMITIVE_POLYS = {
    1: 0b11,       # x + 1
    2: 0x7,        # x^2 + x + 1
    3: 0xB,        # x^3 + x + 1
    4: 0x13,       # x^4 + x + 1
    5: 0x25,       # x^5 + x^2 + 1
    6: 0x43,       # x^6 + x + 1
    7: 0x89,       # x^7 + x^3 + 1
    8: 0x11D,      # x^8 + x^4 + x^3 + x^2 + 1
    9: 0x211,      # x^9 + x^4 + 1
    10: 0x409,     # x^10 + x^3 + 1
    11: 0x805,     # x^11 + x^2 + 1
    12: 0x1053,    # x^12 + x^6 + x^4 + x + 1
    13: 0x201B,    # x^13 + x^4 + x^3 + x + 1
    14: 0x4443,    # x^14 + x^10 + x^6 + x + 1
    15: 0x8003,    # x^15 + x + 1
    16: 0x1100B,   # x^16 + x^12 + x^3 + x + 1
}

MAX_PRIME = 65537


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    r = math.isqrt(q)
    return all(q % d for d in range(3, r + 1, 2))


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _primitive_root(p: int) -> int:
    if p == 2:
        return 1
    factors = _prime_factors(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // f, p) != 1 for f in factors):
            return g
    raise ArithmeticError(f"no primitive root mod {p}")  # unreachable for primes


@lru_cache(maxsize=None)
def _tables(q: int, binary: bool) -> tuple[np.ndarray, np.ndarray]:
    order = q - 1
    exp = np.zeros(2 * order + 1, dtype=np.int64)
    log = np.full(q, -1, dtype=np.int64)
    if binary:
        m = q.bit_length() - 1
        poly = PRIMITIVE_POLYS[m]
        x = 1
        for i in range(order):
            exp[i] = x
            x <<= 1
            if x & q:
                x ^= poly
    else:
        g = _primitive_root(q)
        x = 1
        for i in range(order):
            exp[i] = x
            x = x * g % q
    exp[order:2 * order] = exp[:order]
    exp[2 * order] = exp[0]
    log[exp[:order]] = np.arange(order)
    if np.any(log[1:] < 0):
        raise ArithmeticError(f"generator does not span GF({q})*")
    exp.setflags(write=False)
    log.setflags(write=False)
    return exp, log


@dataclass(frozen=True)
class FieldSpec:
    """GF(q) for q prime (<= 65537) or q = 2**m with 1 <= m <= 16."""

    q: int
    binary: bool = field(init=False)

    def __post_init__(self):
        q = self.q
        if int(q) != q:
            raise ValueError(f"field order must be an integer, got {q!r}")
        q = int(q)
        is_pow2 = q >= 2 and q & (q - 1) == 0
        if is_pow2:
            if q > 1 << 16:
                raise ValueError(f"GF(2^m) supported for m <= 16, got q={q}")
        elif not (_is_prime(q) and q <= MAX_PRIME):
            raise ValueError(
                f"field order {q} is neither a prime <= {MAX_PRIME} nor a power of two"
            )
        object.__setattr__(self, "q", q)
        # q = 2 is handled as the extension case; both paths agree there
        object.__setattr__(self, "binary", is_pow2)

    @property
    def exp_table(self) -> np.ndarray:
        return _tables(self.q, self.binary)[0]

    @property
    def log_table(self) -> np.ndarray:
        return _tables(self.q, self.binary)[1]

    def _check(self, *elems: int) -> None:
        for a in elems:
            if not 0 <= a < self.q:
                raise ValueError(f"{a} is not an element of GF({self.q})")

    def add(self, a: int, b: int) -> int:
        self._check(a, b)
        return a ^ b if self.binary else (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        self._check(a, b)
        return a ^ b if self.binary else (a - b) % self.q

    def neg(self, a: int) -> int:
        self._check(a)
        return a if self.binary else (-a) % self.q

    def mul(self, a: int, b: int) -> int:
        self._check(a, b)
        if a == 0 or b == 0:
            return 0
        log = self.log_table
        return int(self.exp_table[log[a] + log[b]])

    def inv(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse in GF({self.q})")
        return int(self.exp_table[(self.q - 1 - self.log_table[a]) % (self.q - 1)])

    # vectorised helpers used by the decoder
    def vec_scale(self, c: int, v: np.ndarray) -> np.ndarray:
        if c == 0:
            return np.zeros_like(v)
        log = self.log_table
        out = self.exp_table[(log[v] + log[c]) % (self.q - 1)]
        return np.where(v == 0, 0, out)

    def vec_sub(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return u ^ v if self.binary else (u - v) % self.q


def fld_add(spec: FieldSpec, a: int, b: int) -> int:
    return spec.add(a, b)


def fld_mul(spec: FieldSpec, a: int, b: int) -> int:
    return spec.mul(a, b)


def fld_inv(spec: FieldSpec, a: int) -> int:
    return spec.inv(a)


@dataclass(frozen=True)
class Generation:
    """K source packets coded together, identified abstractly."""

    k: int
    payload_ids: tuple = ()
    gen_id: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("generation size must be >= 1")
        ids = tuple(self.payload_ids) or tuple(range(self.k))
        if len(ids) != self.k or len(set(ids)) != self.k:
            raise ValueError("generation needs k distinct payload identifiers")
        object.__setattr__(self, "payload_ids", ids)


@dataclass(frozen=True)
class CodedPacket:
    coefficients: tuple[int, ...]
    generation_ref: int = 0


def encode(spec: FieldSpec, gen: Generation, rng: np.random.Generator) -> CodedPacket:
    """One random linear combination; the all-zero vector is not filtered."""
    coeffs = rng.integers(0, spec.q, size=gen.k)
    return CodedPacket(tuple(int(c) for c in coeffs), gen.gen_id)


class DecoderState:
    """Receiver-side coefficient matrix kept in reduced row-echelon form."""

    def __init__(self, spec: FieldSpec, gen: Generation):
        self.spec = spec
        self.k = gen.k
        self.generation_ref = gen.gen_id
        self._rows: list[np.ndarray] = []
        self._pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self._rows)

    @property
    def complete(self) -> bool:
        return self.rank == self.k

    @property
    def rows(self) -> np.ndarray:
        order = np.argsort(self._pivots)
        if not self._rows:
            return np.zeros((0, self.k), dtype=np.int64)
        return np.array([self._rows[i] for i in order])

    def add_known(self, index: int) -> bool:
        """Seed side information: the receiver already holds packet ``index``."""
        v = np.zeros(self.k, dtype=np.int64)
        v[index] = 1
        return self._absorb_vector(v)

    def absorb(self, pkt: CodedPacket) -> bool:
        if pkt.generation_ref != self.generation_ref:
            raise ValueError(
                f"packet of generation {pkt.generation_ref} offered to "
                f"decoder of generation {self.generation_ref}"
            )
        if len(pkt.coefficients) != self.k:
            raise ValueError("coefficient vector length differs from K")
        return self._absorb_vector(np.array(pkt.coefficients, dtype=np.int64))

    def _absorb_vector(self, v: np.ndarray) -> bool:
        f = self.spec
        for row, piv in zip(self._rows, self._pivots):
            if v[piv]:
                v = f.vec_sub(v, f.vec_scale(int(v[piv]), row))
        nz = np.flatnonzero(v)
        if nz.size == 0:
            return False
        piv = int(nz[0])
        v = f.vec_scale(f.inv(int(v[piv])), v)
        for i, row in enumerate(self._rows):
            if row[piv]:
                self._rows[i] = f.vec_sub(row, f.vec_scale(int(row[piv]), v))
        self._rows.append(v)
        self._pivots.append(piv)
        return True


def absorb(state: DecoderState, pkt: CodedPacket) -> tuple[DecoderState, bool]:
    innovative = state.absorb(pkt)
    return state, innovative


def _as_order(spec) -> int:
    return spec.q if isinstance(spec, FieldSpec) else FieldSpec(int(spec)).q


def decode_count_pmf(spec: FieldSpec | int, k: int, l: int) -> float:
    """Pr[exactly ``l`` uniform random vectors are needed to reach rank ``k``].

    Evaluated exactly with rationals while q**l fits in a double mantissa,
    in log space otherwise.
    """
    q = _as_order(spec)
    if k < 1:
        raise ValueError("k must be >= 1")
    if l < k:
        raise ValueError(f"need l >= k, got l={l}, k={k}")
    if l * math.log2(q) < 53:
        val = Fraction(1, q ** (l - k)) * (1 - Fraction(1, q ** k))
        for j in range(l + 1 - k, l):
            val *= 1 - Fraction(1, q ** j)
        return float(val)
    lq = math.log(q)
    logp = -(l - k) * lq + math.log1p(-math.exp(-k * lq))
    for j in range(l + 1 - k, l):
        logp += math.log1p(-math.exp(-j * lq))
    return math.exp(logp)


def full_rank_probability(q: int, k: int) -> float:
    """Probability that a uniform random k x k matrix over GF(q) is invertible."""
    return math.prod(1.0 - float(q) ** -j for j in range(1, k + 1))


@lru_cache(maxsize=256)
def decode_count_table(q: int, k: int, tail_tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Support ``l = k, k+1, ...`` and PMF values, cut once the tail mass < tail_tol."""
    ls, ps = [], []
    l, total = k, 0.0
    while True:
        p = decode_count_pmf(q, k, l)
        ls.append(l)
        ps.append(p)
        total += p
        if 1.0 - total < tail_tol:
            break
        if l > k + 10_000:
            raise ArithmeticError(f"decode-count PMF for q={q}, k={k} failed to converge")
        l += 1
    ls_arr = np.array(ls, dtype=np.int64)
    ps_arr = np.array(ps, dtype=np.float64)
    ls_arr.setflags(write=False)
    ps_arr.setflags(write=False)
    return ls_arr, ps_arr


def expected_decode_count(q: int, k: int) -> float:
    ls, ps = decode_count_table(q, k)
    return float(np.dot(ls, ps))


def rank_of(spec: FieldSpec, vectors: Sequence[Sequence[int]], k: int) -> int:
    """Rank of a list of coefficient vectors (used by tests and oracles)."""
    dec = DecoderState(spec, Generation(k))
    for v in vectors:
        dec._absorb_vector(np.array(v, dtype=np.int64))
    return dec.rank
