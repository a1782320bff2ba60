"""Slot-loop kernels for the protocol simulator.

Everything here is written in the numba-compatible subset so the same source
runs compiled or interpreted (see ``_jit``). Randomness comes from
``np.random.Generator`` objects passed in by the caller; numba reproduces
their streams bit-for-bit, so both paths yield identical reports.

A run uses three generators: link outcomes, arrivals and coding draws
(decode counts and combination coefficients). Keeping the coding draws apart
means two protocols that differ only in coding see the same channel and
traffic realisations.
"""

import numpy as np

from ._jit import njit

PROTO_PRP = 0
PROTO_SOURCE_RLNC = 1
PROTO_COOP = 2
PROTO_COOP_NC = 3

# layout of the integer statistics vector returned by run_kernel
STAT_ARRIVALS = 0
STAT_DELIVERED = 1
STAT_SOURCE_TX = 2
STAT_RELAY_TX = 3
STAT_HANDOFFS = 4
STAT_SOURCE_RELEASES = 5
STAT_GENERATIONS = 6
STAT_FINAL_SOURCE = 7
STAT_FINAL_RELAY = 8
STAT_COMBOS_RECEIVED = 9
STAT_RELAY_GENERATIONS = 10
N_STATS = 11


@njit(cache=True)
def gf_mul(a, b, exp, log):
    if a == 0 or b == 0:
        return 0
    return exp[log[a] + log[b]]


@njit(cache=True)
def gf_inv(a, q, exp, log):
    return exp[q - 1 - log[a]]


@njit(cache=True)
def gf_sub(a, b, q, binary):
    if binary:
        return a ^ b
    return (a - b) % q


@njit(cache=True)
def absorb_row(rows, piv, rank, node, vec, k, q, binary, exp, log):
    """Reduce ``vec`` against node's RREF rows; append if innovative.

    ``vec`` is modified in place. Returns 1 when the rank grew.
    """
    r = rank[node]
    for j in range(r):
        pc = piv[node, j]
        c = vec[pc]
        if c != 0:
            for col in range(k):
                rv = rows[node, j, col]
                if rv != 0:
                    vec[col] = gf_sub(vec[col], gf_mul(c, rv, exp, log), q, binary)
    lead = -1
    for col in range(k):
        if vec[col] != 0:
            lead = col
            break
    if lead < 0:
        return 0
    inv = gf_inv(vec[lead], q, exp, log)
    for col in range(k):
        vec[col] = gf_mul(inv, vec[col], exp, log)
    for j in range(r):
        c = rows[node, j, lead]
        if c != 0:
            for col in range(k):
                rows[node, j, col] = gf_sub(
                    rows[node, j, col], gf_mul(c, vec[col], exp, log), q, binary
                )
    for col in range(k):
        rows[node, r, col] = vec[col]
    piv[node, r] = lead
    rank[node] = r + 1
    return 1


@njit(cache=True)
def draw_decode_count(rng, cdf, k):
    """Sample the rank-completion count from its tabulated CDF (support k, k+1, ...)."""
    u = rng.random()
    idx = np.searchsorted(cdf, u, side="right")
    if idx >= cdf.shape[0]:
        idx = cdf.shape[0] - 1
    return k + idx


@njit(cache=True)
def draw_combo(rng, vec, k, q):
    for col in range(k):
        vec[col] = int(rng.random() * q)


@njit(cache=True, nogil=True)
def run_kernel(
    proto, mechanistic, n, f_sd, f_sr, f_rd, lam, slots, links, arrivals, coding,
    k, cdf, q, binary, exp, log, dec, tr_src, tr_rel, tr_arr, tr_del, regress,
):
    """Run ``slots`` slots of one protocol.

    Decimated traces (every ``dec``-th slot, sampled after the slot) are written
    into ``tr_*``. ``regress`` receives least-squares accumulators of both queue
    lengths over the trailing half of the run. Returns the statistics vector.
    """
    stats = np.zeros(N_STATS, dtype=np.int64)
    full = (1 << n) - 1

    qs = 0          # packets at the source (including the one in service)
    head = 0        # destinations holding the source's head packet / generation
    # source-side coding state (protocol B)
    s_active = False
    s_need = 0
    cnt = np.zeros(n, dtype=np.int64)
    # relay queue: ring buffer of residual failure masks
    cap = 1024
    ring = np.zeros(cap, dtype=np.int64)
    r_head = 0
    rq = 0
    # relay coding state (protocol D)
    g_active = False
    g_union = 0
    g_need = 0
    g_done = 0
    rows = np.zeros((n, k, k), dtype=np.int64)
    piv = np.zeros((n, k), dtype=np.int64)
    rank = np.zeros(n, dtype=np.int64)
    vec = np.zeros(k, dtype=np.int64)
    tmp = np.zeros(k, dtype=np.int64)

    t_start = slots // 2
    s_n = 0.0
    s_t = 0.0
    s_tt = 0.0
    s_x = 0.0
    s_tx = 0.0
    s_y = 0.0
    s_ty = 0.0
    sample = 0

    for t in range(slots):
        if qs > 0 and (proto != PROTO_SOURCE_RLNC or qs >= k):
            stats[STAT_SOURCE_TX] += 1
            if proto == PROTO_SOURCE_RLNC:
                if not s_active:
                    s_active = True
                    if mechanistic:
                        for i in range(n):
                            rank[i] = 0
                    else:
                        s_need = draw_decode_count(coding, cdf, k)
                        for i in range(n):
                            cnt[i] = 0
                    head = 0
                if mechanistic:
                    draw_combo(coding, vec, k, q)
                for i in range(n):
                    if links.random() < f_sd[i] and not (head >> i) & 1:
                        stats[STAT_COMBOS_RECEIVED] += 1
                        if mechanistic:
                            for col in range(k):
                                tmp[col] = vec[col]
                            absorb_row(rows, piv, rank, i, tmp, k, q, binary, exp, log)
                            if rank[i] == k:
                                head |= 1 << i
                        else:
                            cnt[i] += 1
                            if cnt[i] >= s_need:
                                head |= 1 << i
                if head == full:
                    qs -= k
                    stats[STAT_DELIVERED] += k
                    stats[STAT_SOURCE_RELEASES] += k
                    stats[STAT_GENERATIONS] += 1
                    s_active = False
                    head = 0
            else:
                relay_ok = False
                if proto != PROTO_PRP:
                    relay_ok = links.random() < f_sr
                for i in range(n):
                    if links.random() < f_sd[i]:
                        head |= 1 << i
                if head == full and not (proto == PROTO_COOP_NC and relay_ok):
                    qs -= 1
                    stats[STAT_DELIVERED] += 1
                    stats[STAT_SOURCE_RELEASES] += 1
                    head = 0
                elif relay_ok:
                    residual = full & ~head
                    qs -= 1
                    stats[STAT_SOURCE_RELEASES] += 1
                    head = 0
                    # residual is empty only under protocol D, where such a
                    # packet still occupies a generation slot at zero cost
                    if residual != 0:
                        stats[STAT_HANDOFFS] += 1
                    if rq == cap:
                        grown = np.zeros(2 * cap, dtype=np.int64)
                        for j in range(rq):
                            grown[j] = ring[(r_head + j) % cap]
                        ring = grown
                        r_head = 0
                        cap = 2 * cap
                    ring[(r_head + rq) % cap] = residual
                    rq += 1
        elif rq > 0 and proto == PROTO_COOP:
            stats[STAT_RELAY_TX] += 1
            f = ring[r_head]
            for i in range(n):
                if (f >> i) & 1 and links.random() < f_rd[i]:
                    f &= ~(1 << i)
            ring[r_head] = f
            if f == 0:
                r_head = (r_head + 1) % cap
                rq -= 1
                stats[STAT_DELIVERED] += 1
        elif g_active:
            stats[STAT_RELAY_TX] += 1
            if mechanistic:
                draw_combo(coding, vec, k, q)
            for i in range(n):
                if (g_union >> i) & 1 and not (g_done >> i) & 1:
                    if links.random() < f_rd[i]:
                        stats[STAT_COMBOS_RECEIVED] += 1
                        if mechanistic:
                            for col in range(k):
                                tmp[col] = vec[col]
                            absorb_row(rows, piv, rank, i, tmp, k, q, binary, exp, log)
                            if rank[i] == k:
                                g_done |= 1 << i
                        else:
                            cnt[i] += 1
                            if cnt[i] >= g_need:
                                g_done |= 1 << i
            if g_done == g_union:
                g_active = False
                r_head = (r_head + k) % cap
                rq -= k
                stats[STAT_DELIVERED] += k
                stats[STAT_GENERATIONS] += 1

        # protocol D: open the next generation as soon as K packets wait
        if proto == PROTO_COOP_NC:
            while not g_active and rq >= k:
                g_union = 0
                for j in range(k):
                    g_union |= ring[(r_head + j) % cap]
                if g_union == 0:
                    r_head = (r_head + k) % cap
                    rq -= k
                    stats[STAT_DELIVERED] += k
                    stats[STAT_GENERATIONS] += 1
                    continue
                g_active = True
                g_done = 0
                stats[STAT_RELAY_GENERATIONS] += 1
                if mechanistic:
                    for i in range(n):
                        rank[i] = 0
                        if (g_union >> i) & 1:
                            # side information: packets destination i already holds
                            for j in range(k):
                                if not (ring[(r_head + j) % cap] >> i) & 1:
                                    for col in range(k):
                                        tmp[col] = 0
                                    tmp[j] = 1
                                    absorb_row(rows, piv, rank, i, tmp, k, q, binary, exp, log)
                else:
                    g_need = draw_decode_count(coding, cdf, k)
                    for i in range(n):
                        cnt[i] = 0

        if arrivals.random() < lam:
            qs += 1
            stats[STAT_ARRIVALS] += 1

        if t >= t_start:
            x = t - t_start
            s_n += 1.0
            s_t += x
            s_tt += x * x
            s_x += qs
            s_tx += x * qs
            s_y += rq
            s_ty += x * rq
        if (t + 1) % dec == 0 and sample < tr_src.shape[0]:
            tr_src[sample] = qs
            tr_rel[sample] = rq
            tr_arr[sample] = stats[STAT_ARRIVALS]
            tr_del[sample] = stats[STAT_DELIVERED]
            sample += 1

    regress[0] = s_n
    regress[1] = s_t
    regress[2] = s_tt
    regress[3] = s_x
    regress[4] = s_tx
    regress[5] = s_y
    regress[6] = s_ty
    stats[STAT_FINAL_SOURCE] = qs
    stats[STAT_FINAL_RELAY] = rq
    return stats
