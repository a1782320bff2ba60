import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopcast import analytic as A
from coopcast.galois import decode_count_table
from coopcast.model import DestinationSet, EnumerationOverflowError, NcParams, NetworkConfig

BENCH_N1 = NetworkConfig(1, (0.5,), 0.5, (0.8,))

prob = st.floats(0.05, 1.0)


@st.composite
def configs(draw, max_n=4):
    n = draw(st.integers(1, max_n))
    return NetworkConfig(
        n,
        tuple(draw(prob) for _ in range(n)),
        draw(st.floats(0.0, 1.0)),
        tuple(draw(prob) for _ in range(n)),
    )


# expected maximum of geometrics ----------------------------------------------


def test_expected_max_geometric_examples():
    assert A.expected_max_geometric([0.5]) == pytest.approx(2.0)
    assert A.expected_max_geometric([0.5, 0.5]) == pytest.approx(8 / 3, rel=1e-14)
    assert A.expected_max_geometric([1.0] * 5) == pytest.approx(1.0)
    assert A.expected_max_geometric([0.5, 0.0]) == math.inf
    assert A.expected_max_geometric([]) == 0.0


def test_expected_max_geometric_methods_agree():
    p = [0.2, 0.35, 0.9, 0.6]
    closed = A.expected_max_geometric(p, method="closed")
    series = A.expected_max_geometric(p, method="series")
    assert series == pytest.approx(closed, rel=1e-10)
    with pytest.raises(ValueError):
        A.expected_max_geometric(p, method="bogus")


def test_series_policy_validation():
    with pytest.raises(ValueError):
        A.SeriesPolicy(rel_tol=0.0)
    with pytest.raises(ValueError):
        A.SeriesPolicy(max_terms=0)


def test_series_divergence_reported():
    tiny = A.SeriesPolicy(rel_tol=1e-12, max_terms=10)
    with pytest.raises(A.SeriesDivergenceError):
        A.expected_max_geometric([1e-4], tiny, method="series")


# protocol A / B -------------------------------------------------------------


def test_prp_examples():
    assert A.prp_max_stable(NetworkConfig(1, (0.5,), 0.0, (0.5,))) == pytest.approx(0.5)
    assert A.prp_max_stable(NetworkConfig(2, (0.5, 0.5), 0.0, (0.5, 0.5))) == pytest.approx(0.375)
    assert A.prp_max_stable(NetworkConfig(2, (0.5, 0.0), 0.0, (0.5, 0.5))) == 0.0


def test_negbin_maximum_single_receiver():
    # one receiver: E[slots to l successes] = l / f
    for l, f in [(1, 0.3), (3, 0.5), (7, 0.9)]:
        assert A.expected_max_negbin(l, [f]) == pytest.approx(l / f, rel=1e-10)


def test_rlnc_large_field_k1_matches_prp():
    for cfg in [BENCH_N1, NetworkConfig.symmetric(3, 0.4, 0.8, 0.8)]:
        got = A.rlnc_source_max_stable(cfg, NcParams(2**16, 1))
        assert got == pytest.approx(A.prp_max_stable(cfg), abs=1e-3)


def test_rlnc_perfect_link_is_k_over_mean_rank_count():
    cfg = NetworkConfig(1, (1.0,), 0.0, (1.0,))
    ls, ps = decode_count_table(2, 2)
    assert A.rlnc_source_max_stable(cfg, NcParams(2, 2)) == pytest.approx(2 / float(ls @ ps), rel=1e-10)
    assert A.rlnc_source_max_stable(
        NetworkConfig(3, (1.0,) * 3, 0.0, (1.0,) * 3), NcParams(2**16, 4)
    ) == pytest.approx(1.0, abs=1e-4)


def test_rlnc_dead_link():
    assert A.rlnc_source_max_stable(NetworkConfig(2, (0.5, 0.0), 0, (1, 1)), NcParams(4, 2)) == 0.0


# protocol C ------------------------------------------------------------------


def test_coop_source_rate_examples():
    assert A.coop_source_service_rate(BENCH_N1) == pytest.approx(0.75)
    assert A.coop_source_service_rate(NetworkConfig(2, (0.1, 0.2), 1.0, (1, 1))) == 1.0
    cfg = NetworkConfig(3, (0.3, 0.6, 0.9), 0.0, (1, 1, 1))
    assert A.coop_source_service_rate(cfg) == pytest.approx(A.prp_max_stable(cfg), abs=1e-12)
    assert A.coop_source_service_rate(cfg, method="series") == pytest.approx(
        A.prp_max_stable(cfg), rel=1e-10
    )


def test_relay_arrival_rate_examples():
    assert A.relay_arrival_rate(BENCH_N1, 0.8) == pytest.approx(0.2)
    assert A.relay_arrival_rate(NetworkConfig(2, (1.0, 1.0), 0.7, (1, 1)), 0.5) == 0.0
    assert A.relay_arrival_rate(NetworkConfig(1, (0.2,), 0.0, (1,)), 0.5) == 0.0
    with pytest.raises(ValueError):
        A.relay_arrival_rate(BENCH_N1, 1.5)


def test_state_probability_examples():
    assert A.state_probability(BENCH_N1, DestinationSet(1, 1)) == pytest.approx(0.2)
    assert A.state_probability(BENCH_N1, 0) == pytest.approx(0.8)
    assert A.state_probability(BENCH_N1, 1, method="series") == pytest.approx(0.2, rel=1e-10)
    with pytest.raises(ValueError):
        A.state_probability(NetworkConfig(1, (0.5,), 0.0, (1,)), 0)
    with pytest.raises(ValueError):
        A.state_probability(BENCH_N1, 0b10)


def test_relay_service_examples():
    assert A.relay_expected_service_saturated(BENCH_N1) == pytest.approx(0.25)
    perfect = NetworkConfig(1, (1.0,), 0.5, (0.8,))
    assert A.relay_expected_service_saturated(perfect) == 0.0
    cfg = NetworkConfig.symmetric(3, 0.4, 0.7, 1.0)
    assert A.relay_expected_service_saturated(cfg) == pytest.approx(
        1.0 - A.state_probability(cfg, 0), rel=1e-12
    )
    dead = NetworkConfig(2, (0.5, 0.5), 0.5, (0.0, 0.9))
    assert A.relay_expected_service_saturated(dead) == math.inf
    res = A.coop_max_stable(dead)
    assert res.lambda_max == 0.0 and res.binding_constraint is A.Binding.RELAY


def test_coop_max_stable_examples():
    cfg = NetworkConfig(2, (0.5, 0.5), 0.0, (0.9, 0.9))
    res = A.coop_max_stable(cfg)
    assert res.lambda_max == pytest.approx(A.prp_max_stable(cfg), abs=1e-12)
    assert res.binding_constraint is A.Binding.SOURCE

    perfect = NetworkConfig(3, (1.0,) * 3, 0.6, (0.5,) * 3)
    assert A.coop_max_stable(perfect).lambda_max == pytest.approx(1.0)

    # n=1, f_RD=1: mu=0.75, a=0.25, E[T_R]=0.2 -> root above 1, source binds
    r = A.coop_max_stable(NetworkConfig(1, (0.5,), 0.5, (1.0,)))
    assert r.source_mu == pytest.approx(0.75)
    assert r.relay_etr == pytest.approx(0.2)
    b = 1 + 0.25 * 0.2
    root = (b - math.sqrt(b * b - 4 * 0.25)) / (2 * 0.25)
    assert root > 1
    assert r.lambda_max == pytest.approx(0.75)


def test_quadratic_root_stable_form():
    a, b, c = 1e-9, 1.0, 1.0
    naive_big = (b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
    assert A._smallest_root(a, b, c) == pytest.approx(c / (a * naive_big), rel=1e-12)
    assert A._smallest_root(1.0, 1.0, 1.0) == math.inf


def test_relay_binding_on_benchmark_point():
    cfg = NetworkConfig.symmetric(2, 0.3, 0.8, 0.8)
    res = A.coop_max_stable(cfg)
    assert res.binding_constraint is A.Binding.RELAY
    a = cfg.relay_arrival_prob
    rho = res.rho_max
    assert a * rho**2 - (1 + a * res.relay_etr) * rho + 1 == pytest.approx(0.0, abs=1e-12)


def test_exact_handoff_law():
    # n=1: the relay captures only packets the destination lacks
    assert A.relay_handoff_probability(BENCH_N1, 1) == pytest.approx(0.25 / 0.75)
    assert A.relay_handoff_probability(BENCH_N1, 0) == 0.0
    cfg = NetworkConfig(1, (0.5,), 0.5, (1.0,))
    assert A.relay_workload_per_packet(cfg) == pytest.approx(1 / 3)
    assert A.coop_protocol_max_stable(cfg).lambda_max == pytest.approx(0.6)


# protocol D ------------------------------------------------------------------


def test_joint_state_probability_examples():
    assert A.joint_state_probability(BENCH_N1, [0, 0]) == pytest.approx(0.64)
    assert A.joint_state_probability(BENCH_N1, [1]) == A.state_probability(BENCH_N1, 1)
    cfg = NetworkConfig((2), (0.3, 0.6), 0.7, (0.9, 0.9))
    total = sum(
        A.joint_state_probability(cfg, fs) for fs in itertools.product(range(4), repeat=3)
    )
    assert total == pytest.approx(1.0, abs=1e-9)


def test_union_distribution_matches_enumeration():
    cfg = NetworkConfig((3), (0.3, 0.5, 0.6), 0.7, (0.9, 0.8, 0.7))
    direct = np.zeros(8)
    for fs in itertools.product(range(8), repeat=2):
        u = fs[0] | fs[1]
        direct[u] += A.joint_state_probability(cfg, fs)
    np.testing.assert_allclose(A.union_distribution(cfg, 2), direct, atol=1e-15)


def test_coop_nc_examples():
    perfect = NetworkConfig(2, (1.0, 1.0), 0.7, (0.5, 0.5))
    assert A.coop_nc_relay_service(perfect, NcParams(4, 2)) == 0.0
    assert A.coop_nc_max_stable(perfect, NcParams(4, 2)).lambda_max == pytest.approx(1.0)
    for cfg in [BENCH_N1, NetworkConfig.symmetric(2, 0.3, 0.8, 0.8)]:
        assert A.coop_nc_relay_service(cfg, NcParams(2**16, 1)) == pytest.approx(
            A.relay_expected_service_saturated(cfg), abs=1e-3
        )
        assert A.coop_nc_max_stable(cfg, NcParams(2**16, 1)).lambda_max == pytest.approx(
            A.coop_max_stable(cfg).lambda_max, abs=1e-3
        )


def test_coop_nc_enumeration_cap():
    cfg = NetworkConfig.symmetric(6, 0.3, 0.8, 0.8)
    with pytest.raises(EnumerationOverflowError):
        A.coop_nc_relay_service(cfg, NcParams(2, 4))
    # raising the cap makes the same request legal
    assert A.coop_nc_relay_service(cfg, NcParams(2, 4), cap_bits=24) > 0


# regression anchors: n=2, p=0.3, pr=0.8, f_sr=0.8, K=2, q in {2, 4, 16}
ANCHORS_K2 = {2: 0.33297360100046075, 4: 0.41215111427632456, 16: 0.4514608596868743}


@pytest.mark.parametrize("q", sorted(ANCHORS_K2))
def test_protocol_d_anchors(q):
    cfg = NetworkConfig.symmetric(2, 0.3, 0.8, 0.8)
    assert A.coop_nc_max_stable(cfg, NcParams(q, 2)).lambda_max == pytest.approx(
        ANCHORS_K2[q], rel=1e-9
    )


def test_anchors_nondecreasing_in_q():
    vals = [ANCHORS_K2[q] for q in sorted(ANCHORS_K2)]
    assert vals == sorted(vals)


def test_dispatcher():
    cfg = NetworkConfig.symmetric(2, 0.3, 0.8, 0.8)
    assert A.max_stable(cfg, "a").lambda_max == A.prp_max_stable(cfg)
    assert A.max_stable(cfg, "C") == A.coop_max_stable(cfg)
    with pytest.raises(ValueError):
        A.max_stable(cfg, "B")
    with pytest.raises(ValueError):
        A.max_stable(cfg, "E")


def test_halving_tolerance_is_stable():
    cfg = NetworkConfig.symmetric(3, 0.3, 0.8, 0.8)
    half = A.SeriesPolicy(rel_tol=5e-13)
    for proto, nc in [("A", None), ("B", NcParams(4, 2)), ("C", None), ("D", NcParams(4, 2))]:
        r1 = A.max_stable(cfg, proto, nc).lambda_max
        r2 = A.max_stable(cfg, proto, nc, half).lambda_max
        assert abs(r1 - r2) < 1e-6


# properties ------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(configs())
def test_state_distribution_sums_to_one(cfg):
    if cfg.relay_arrival_prob <= 0:
        return
    assert A.state_distribution(cfg).sum() == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(configs())
def test_relay_shortens_source_service(cfg):
    assert A.prp_max_stable(cfg) <= A.coop_source_service_rate(cfg) + 1e-12


@settings(max_examples=40, deadline=None)
@given(configs(max_n=3), st.sampled_from([2, 4, 16]), st.integers(1, 3))
def test_results_are_ordered_rates(cfg, q, k):
    for res in (A.coop_max_stable(cfg), A.coop_nc_max_stable(cfg, NcParams(q, k))):
        assert 0.0 <= res.lambda_max <= res.source_mu <= 1.0 + 1e-12


@settings(max_examples=40, deadline=None)
@given(configs(max_n=5))
def test_f_sr_zero_reduces_to_prp(cfg):
    cfg0 = NetworkConfig(cfg.n, cfg.f_sd, 0.0, cfg.f_rd)
    assert A.coop_source_service_rate(cfg0) == pytest.approx(A.prp_max_stable(cfg0), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(configs(max_n=4))
def test_exact_protocol_never_exceeds_formula_source_rate(cfg):
    res = A.coop_protocol_max_stable(cfg)
    assert 0.0 <= res.lambda_max <= res.source_mu + 1e-12
