import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from coopcast.galois import (
    CodedPacket,
    DecoderState,
    FieldSpec,
    Generation,
    absorb,
    decode_count_pmf,
    decode_count_table,
    encode,
    expected_decode_count,
    fld_add,
    fld_inv,
    fld_mul,
    full_rank_probability,
    rank_of,
)

SMALL_FIELDS = [2, 3, 4, 5, 7, 8, 11, 13, 16]


@pytest.mark.parametrize("q", SMALL_FIELDS)
def test_field_axioms_exhaustive(q):
    f = FieldSpec(q)
    els = range(q)
    for a, b in itertools.product(els, els):
        assert f.add(a, b) == f.add(b, a)
        assert f.mul(a, b) == f.mul(b, a)
        assert f.sub(f.add(a, b), b) == a
    for a, b, c in itertools.product(els, els, els):
        assert f.add(f.add(a, b), c) == f.add(a, f.add(b, c))
        assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))
        assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))
    for a in els:
        assert f.add(a, 0) == a and f.mul(a, 1) == a
        assert f.add(a, f.neg(a)) == 0
        if a:
            assert f.mul(a, f.inv(a)) == 1


def test_field_examples():
    assert fld_add(FieldSpec(2), 1, 1) == 0
    assert fld_mul(FieldSpec(5), 3, 4) == 2
    # GF(4) with x^2 + x + 1: x = 2, x + 1 = 3
    assert fld_mul(FieldSpec(4), 2, 2) == 3
    assert fld_inv(FieldSpec(7), 3) == 5


def test_inverse_of_zero():
    with pytest.raises(ZeroDivisionError):
        fld_inv(FieldSpec(8), 0)


@pytest.mark.parametrize("q", [1, 6, 12, 65536 * 2, 65539, 2.5])
def test_unsupported_orders(q):
    with pytest.raises(ValueError):
        FieldSpec(q)


@pytest.mark.parametrize("q", [2**16, 65537, 257])
def test_large_field_inverses(q):
    f = FieldSpec(q)
    for a in (1, 2, 3, q // 2, q - 1):
        assert f.mul(a, f.inv(a)) == 1


def test_encode_uniform_binary():
    rng = np.random.default_rng(3)
    f, g = FieldSpec(2), Generation(1)
    draws = np.array([encode(f, g, rng).coefficients[0] for _ in range(100_000)])
    sigma = math.sqrt(0.25 / draws.size)
    assert abs(draws.mean() - 0.5) <= 3 * sigma


def test_encode_uniform_q4_k2():
    rng = np.random.default_rng(4)
    f, g = FieldSpec(4), Generation(2)
    n = 100_000
    counts = np.zeros(16)
    for _ in range(n):
        c = encode(f, g, rng).coefficients
        assert len(c) == 2
        counts[c[0] * 4 + c[1]] += 1
    p = 1 / 16
    assert np.all(np.abs(counts / n - p) <= 3 * math.sqrt(p * (1 - p) / n))


def test_absorb_examples():
    f, g = FieldSpec(2), Generation(2)
    st = DecoderState(f, g)
    st, inn = absorb(st, CodedPacket((0, 0)))
    assert not inn and st.rank == 0
    ranks = []
    for v in [(1, 0), (1, 0), (0, 1)]:
        st, inn = absorb(st, CodedPacket(v))
        ranks.append(st.rank)
    assert ranks == [1, 1, 2]
    assert st.complete
    np.testing.assert_array_equal(st.rows, np.eye(2, dtype=np.int64))


def test_absorb_generation_mismatch():
    st = DecoderState(FieldSpec(4), Generation(2, gen_id=1))
    with pytest.raises(ValueError):
        st.absorb(CodedPacket((1, 2), generation_ref=2))


def test_side_information_rows():
    f = FieldSpec(4)
    st = DecoderState(f, Generation(3))
    assert st.add_known(1)
    assert not st.absorb(CodedPacket((0, 3, 0)))
    assert st.absorb(CodedPacket((1, 1, 0)))
    assert st.rank == 2


@pytest.mark.parametrize("q", [2, 3])
def test_rank_matches_exhaustive_2x2(q):
    f = FieldSpec(q)
    invertible = 0
    for a, b, c, d in itertools.product(range(q), repeat=4):
        r = rank_of(f, [(a, b), (c, d)], 2)
        det = (a * d - b * c) % q
        assert (r == 2) == (det != 0)
        invertible += r == 2
    assert invertible / q**4 == pytest.approx(full_rank_probability(q, 2))


def test_pmf_examples():
    assert decode_count_pmf(2, 2, 2) == pytest.approx(3 / 8, abs=1e-15)
    for l in range(1, 30):
        assert decode_count_pmf(2, 1, l) == pytest.approx(0.5**l, rel=1e-12)
    assert decode_count_pmf(2**16, 1, 1) == pytest.approx(1 - 2**-16, rel=1e-14)
    assert expected_decode_count(2, 1) == pytest.approx(2.0, rel=1e-10)


def test_pmf_rejects_short_count():
    with pytest.raises(ValueError):
        decode_count_pmf(4, 3, 2)


@pytest.mark.parametrize("q,k", [(q, k) for q in (2, 3, 4, 8, 16, 256) for k in (1, 2, 3, 4, 6)])
def test_pmf_full_rank_and_total(q, k):
    assert decode_count_pmf(q, k, k) == pytest.approx(full_rank_probability(q, k), abs=1e-12)
    _, ps = decode_count_table(q, k)
    assert abs(ps.sum() - 1.0) < 1e-11


def test_pmf_exact_against_hand_enumeration():
    # q=2, K=2, l=3: third vector completes rank; enumerate all 2^6 sequences
    hits = 0
    f = FieldSpec(2)
    for bits in itertools.product(range(2), repeat=6):
        vecs = [bits[0:2], bits[2:4], bits[4:6]]
        if rank_of(f, vecs[:2], 2) < 2 and rank_of(f, vecs, 2) == 2:
            hits += 1
    assert Fraction(hits, 64) == Fraction(decode_count_pmf(2, 2, 3)).limit_denominator(1 << 20)


def test_pmf_log_space_path_continuous():
    # q=2^16, K=4 crosses into the log-space branch immediately
    ls, ps = decode_count_table(2**16, 4)
    assert ls[0] == 4
    assert ps[0] == pytest.approx(full_rank_probability(2**16, 4), rel=1e-12)
