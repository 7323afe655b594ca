import itertools
from types import SimpleNamespace

import numpy as np
import pytest

from polarmimo.construction import (
    GlobalCodeSpec,
    ReliabilityProfile,
    allocate_rates,
    build_constraints,
    construct_crc_code,
    construct_subcode,
    estimate_reliability,
    index_weight,
    index_weights,
    select_frozen_and_dfs_b,
    select_frozen_per_antenna,
    set_dfs_a,
)
from polarmimo.polar import polar_transform

# hand traces: weight ascending, block N_t first, indices descending per block
ALG1_FIXTURES = [
    # (N_t, m, N, nonfrozen, n_dfs_a, expected)
    (2, 1, 4, {3, 5, 6, 7}, 2, [6, 5]),
    (2, 2, 2, {1, 2, 3, 4, 5, 6, 7}, 3, [4, 6, 5]),
    (3, 2, 2, {2, 3, 5, 7, 9, 10, 11}, 5, [10, 9, 5, 2, 11]),
]


@pytest.mark.parametrize("nt,m,n,nonfrozen,count,want", ALG1_FIXTURES)
def test_set_dfs_a_fixtures(nt, m, n, nonfrozen, count, want):
    assert set_dfs_a(nt, m, n, nonfrozen, count) == want


def test_set_dfs_a_edge_cases():
    assert set_dfs_a(2, 1, 4, {3, 5}, 0) == []
    assert set_dfs_a(2, 1, 4, {6}, 1) == [6]
    with pytest.raises(ValueError):
        set_dfs_a(2, 1, 4, {6}, 2)


def _alg1_oracle(nt, length, nonfrozen, count):
    weights = [bin(i % length).count("1") for i in range(nt * length)]
    order = sorted(nonfrozen, key=lambda i: (weights[i], -(i // length), -i))
    return order[:count]


def test_set_dfs_a_scan_order_random(rng):
    for _ in range(200):
        nt, length = int(rng.integers(1, 5)), int(2 ** rng.integers(1, 5))
        pool = rng.permutation(nt * length)[: int(rng.integers(1, nt * length + 1))]
        count = int(rng.integers(0, pool.size + 1))
        got = set_dfs_a(nt, 1, length, list(pool), count)
        assert got == _alg1_oracle(nt, length, pool.tolist(), count)
        assert got == set_dfs_a(nt, 1, length, list(rng.permutation(pool)), count)
        assert len(set(got)) == len(got) and set(got) <= set(pool.tolist())


@pytest.mark.parametrize("i,length,want", [(5, 4, 1), (0, 4, 0), (7, 8, 3)])
def test_index_weight(i, length, want):
    assert index_weight(i, length) == want


def test_index_weights_periodic():
    w = index_weights(3, 16)
    assert np.array_equal(w[:16], w[16:32]) and np.array_equal(w[:16], w[32:])
    with pytest.raises(ValueError):
        index_weight(8, 4, n_antennas=2)


def test_select_example():
    prof = ReliabilityProfile([0.9, 0.5, 0.1, 0.01], 100)
    static, dfs_b = select_frozen_and_dfs_b(prof, 2, 0, 1)
    assert set(static) | set(dfs_b) == {0, 1}
    assert dfs_b.tolist() == [1]
    static, dfs_b = select_frozen_and_dfs_b(prof, 2, 0, 0)
    assert static.tolist() == [0, 1] and dfs_b.size == 0


def test_select_ties_freeze_lower_index_first():
    prof = ReliabilityProfile([0.2, 0.2, 0.2, 0.2], 10)
    static, _ = select_frozen_and_dfs_b(prof, 2)
    assert static.tolist() == [0, 1]


def test_select_partition_and_errors(rng):
    prof = ReliabilityProfile(rng.random(64), 10, 2)
    static, dfs_b = select_frozen_and_dfs_b(prof, 20, 4, 10)
    assert len(set(static) & set(dfs_b)) == 0
    assert static.size + dfs_b.size == 64 - 20 - 4
    assert prof.error_prob[dfs_b].max() <= prof.error_prob[static].min()
    with pytest.raises(ValueError):
        select_frozen_and_dfs_b(prof, 60, 8)
    with pytest.raises(ValueError):
        select_frozen_and_dfs_b(prof, 40, 8, 17)


def test_build_constraints_causal_and_seeded():
    info = [3, 5, 6, 9, 12]
    targets = [1, 4, 7, 10, 13]
    rows, degraded = build_constraints(targets, info, 7)
    assert degraded == (1,) and rows[1] == ()
    for j, row in rows.items():
        assert all(z < j and z in info for z in row)
        if j != 1:
            assert row
    assert build_constraints(targets, info, 7) == (rows, degraded)


def test_constraint_subsets_are_uniform():
    counts = {}
    for s in range(3000):
        rows, _ = build_constraints([3], [0, 1, 2], s)
        counts[rows[3]] = counts.get(rows[3], 0) + 1
    assert len(counts) == 7
    assert all(abs(c / 3000 - 1 / 7) < 0.03 for c in counts.values())


def _spec():
    # two antennas, length 4; position 5 depends on antenna-2 (block 0) bits
    return GlobalCodeSpec(2, 4, (0, 1, 4, 5), {1: (), 5: (2, 3)})


def test_global_spec_blocks_and_encode():
    spec = _spec()
    assert spec.dimension == 4
    assert spec.info_positions.tolist() == [2, 3, 6, 7]
    assert spec.cross_constraints == {5: (2, 3)}
    assert spec.cross_rows(1) == {1: (2, 3)}
    assert spec.dimension_distribution == (2, 2)
    u = spec.fill([1, 0, 1, 1])
    assert u.tolist() == [0, 0, 1, 0, 0, 1, 1, 1]
    cw = spec.encode([1, 0, 1, 1])
    assert np.array_equal(cw[1], polar_transform(u[:4]))
    assert np.array_equal(cw[0], polar_transform(u[4:]))


def test_global_spec_rejects_noncausal():
    with pytest.raises(ValueError):
        GlobalCodeSpec(2, 4, (2,), {2: (3,)})


def test_global_spec_text_round_trip():
    spec = GlobalCodeSpec(2, 4, (0, 1, 4, 5), {5: (2, 3)}, n_dfs_a=1, n_dfs_b=1)
    text = spec.to_text()
    assert text.startswith("antennas 2\nn 8\n")
    back = GlobalCodeSpec.from_text(text)
    assert back == spec and back.n_dfs_a == 1


def test_allocate_rates():
    prof = ReliabilityProfile(np.linspace(0.5, 0.0, 32), 10, 4)
    assert allocate_rates(prof, 12) == (8, 4, 0, 0)
    rng = np.random.default_rng(0)
    prof = ReliabilityProfile(rng.random(64), 10, 4)
    for k in (0, 1, 17, 64):
        assert sum(allocate_rates(prof, k)) == k
    with pytest.raises(ValueError):
        allocate_rates(prof, 65)


def test_allocate_rates_equal_reliabilities_follow_tie_rule():
    prof = ReliabilityProfile(np.full(32, 0.1), 10, 4)
    # ties rank higher indices as more reliable, so later blocks fill first
    assert allocate_rates(prof, 12) == (8, 4, 0, 0)


@pytest.fixture
def profile():
    rng = np.random.default_rng(3)
    return ReliabilityProfile(np.sort(rng.random(64))[::-1] * 0.5, 100, 2)


def test_construct_subcode(profile):
    spec = construct_subcode(profile, 24, n_dfs_a=4, n_dfs_b=6, rng=1)
    assert spec.dimension == 24
    assert spec.n_dfs_a == 4 and spec.n_dfs_b == 6
    dynamic = [j for j, r in spec.rows().items() if r]
    assert len(dynamic) + len(spec.degraded) == 10
    for j, row in spec.rows().items():
        assert all(z < j for z in row)
    assert construct_subcode(profile, 24, 4, 6, rng=1) == spec


def test_construct_with_distribution(profile):
    spec = construct_subcode(profile, 24, n_dfs_a=4, n_dfs_b=6, rng=1, distribution=(14, 10))
    assert spec.dimension_distribution == (14, 10)
    static, dfs_b, dfs_a = select_frozen_per_antenna(profile, (14, 10), 4, 6)
    assert dfs_a.size == 4 and dfs_b.size == 6
    crc = construct_crc_code(profile, 24, (14, 10))
    assert crc.dimension_distribution == (14, 10) and not any(crc.constraints)
    with pytest.raises(ValueError):
        construct_subcode(profile, 24, distribution=(20, 10))


def _system(**kw):
    base = dict(n_tx=2, n_rx=2, m=2, n_slots=8, detector="vblast", snr_db=8.0)
    base.update(kw)
    return SimpleNamespace(**base)


def test_reliability_is_deterministic():
    a = estimate_reliability(_system(), 200, 5)
    b = estimate_reliability(_system(), 200, 5)
    assert np.array_equal(a.error_prob, b.error_prob)


@pytest.mark.parametrize("detector", ["vblast", "mmse"])
def test_reliability_vanishes_at_high_snr(detector):
    prof = estimate_reliability(_system(detector=detector, snr_db=80.0), 100, 0)
    assert prof.error_prob.max() == 0.0


@pytest.mark.parametrize("detector", ["vblast", "mmse"])
def test_later_antennas_are_more_reliable(detector):
    prof = estimate_reliability(_system(n_tx=4, n_rx=4, detector=detector, snr_db=6.0), 2000, 1)
    means = prof.block_means()
    assert np.all(np.diff(means) <= 0.005), means


def test_reliability_matches_direct_sc_errors():
    # with one antenna and BPSK the genie statistic of phase 0 is the
    # min-sum combination of every soft value; compare error rates
    sys1 = _system(n_tx=1, n_rx=1, m=1, n_slots=4, snr_db=3.0)
    prof = estimate_reliability(sys1, 20000, 2)
    p = prof.error_prob
    assert p[0] > p[-1]
    assert 0.0 < p[-1] < 0.05
