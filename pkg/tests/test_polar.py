import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_bit_vectors, kron_matrix
from polarmimo.polar import (
    CodeSpec,
    correlation_discrepancy,
    encode,
    llr_even,
    llr_odd,
    penalty,
    phase_statistics,
    polar_transform,
    sc_decode,
    scl_decode_segment,
)


def test_transform_examples():
    assert polar_transform([0, 0, 0, 0]).tolist() == [0, 0, 0, 0]
    assert polar_transform([1, 0, 1, 1]).tolist() == [1, 1, 0, 1]
    assert polar_transform([0, 0, 0, 1]).tolist() == [1, 1, 1, 1]


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
def test_transform_matches_dense_kronecker(n, rng):
    u = rng.integers(0, 2, (50, n), dtype=np.uint8)
    assert np.array_equal(polar_transform(u), (u.astype(int) @ kron_matrix(n)) % 2)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 7).flatmap(lambda t: st.lists(st.integers(0, 1), min_size=2**t, max_size=2**t)))
def test_transform_is_involution(bits):
    u = np.array(bits, dtype=np.uint8)
    assert np.array_equal(polar_transform(polar_transform(u)), u)


@pytest.mark.parametrize("bad", [[0, 1, 1], [], [0, 2]])
def test_transform_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        polar_transform(bad)


def test_encode_examples():
    static = CodeSpec(4, (0, 1))
    assert encode([1, 1], static).tolist() == [0, 1, 0, 1]
    dyn = CodeSpec(4, (0, 2), {2: (1,)})
    assert encode([1, 1], dyn).tolist() == [1, 0, 0, 1]
    assert encode(np.zeros(0, np.uint8), CodeSpec(4, (0, 1, 2, 3))).tolist() == [0] * 4


def test_encode_rejects_wrong_length():
    with pytest.raises(ValueError):
        encode([1, 0, 1], CodeSpec(4, (0, 1)))


def test_encoded_words_satisfy_constraints(rng):
    spec = CodeSpec(16, (0, 1, 2, 4, 5, 8, 9, 12), {4: (3,), 9: (3, 6, 7), 12: (10, 11)})
    info = rng.integers(0, 2, (200, spec.dimension), dtype=np.uint8)
    u = polar_transform(encode(info, spec))
    for j, row in spec.rows().items():
        want = np.bitwise_xor.reduce(u[:, list(row)], axis=1) if row else 0
        assert np.all(u[:, j] == want)
    assert np.array_equal(u[:, spec.info_set], info)


def test_codespec_validation():
    with pytest.raises(ValueError):
        CodeSpec(6, (0,))
    with pytest.raises(ValueError):
        CodeSpec(4, (1,), {1: (2,)})
    with pytest.raises(ValueError):
        CodeSpec(4, (1, 1))
    with pytest.raises(ValueError):
        CodeSpec(4, (4,))


def test_codespec_text_round_trip():
    spec = CodeSpec(8, (0, 1, 3, 5), {3: (2,), 5: (2, 4)})
    text = spec.to_text()
    assert text.splitlines()[0] == "n 8"
    assert "frozen 5 = 2 4" in text and "frozen 0" in text
    assert CodeSpec.from_text(text) == spec


@pytest.mark.parametrize("a,b,want", [(3, -1, -1), (0, 5, 0), (-2, -4, 2)])
def test_llr_even(a, b, want):
    assert llr_even(a, b) == want


@pytest.mark.parametrize("a,b,u,want", [(3, -1, 0, 2), (3, -1, 1, -4), (0, 0, 1, 0)])
def test_llr_odd(a, b, u, want):
    assert llr_odd(a, b, u) == want


@pytest.mark.parametrize("u,s,want", [(0, 1.5, 0.0), (1, 1.5, -1.5), (1, -2.0, 0.0), (0, 0.0, 0.0), (1, 0.0, 0.0)])
def test_penalty(u, s, want):
    assert penalty(u, s) == want


def _codebook(spec):
    info = all_bit_vectors(spec.dimension)
    return info, encode(info, spec)


def _phase_oracle(soft, u):
    """Phase statistics by evaluating the SC recursion one phase at a time."""
    n = len(soft)

    def stat(llr, uu, i):
        if len(llr) == 1:
            return llr[0]
        h = len(llr) // 2
        a, b = llr[:h], llr[h:]
        if i < h:
            return stat(np.sign(a + (a == 0)) * np.sign(b + (b == 0)) * np.minimum(abs(a), abs(b)), uu[:h], i)
        p = polar_transform(uu[:h])
        return stat(b + (1 - 2.0 * p) * a, uu[h:], i - h)

    return np.array([stat(np.asarray(soft, float), u, i) for i in range(n)])


def test_phase_statistics_matches_oracle(rng):
    for _ in range(20):
        soft = rng.normal(size=16)
        u = rng.integers(0, 2, 16, dtype=np.uint8)
        assert np.allclose(phase_statistics(soft, u)[0], _phase_oracle(soft, u))


def test_path_score_equals_correlation_discrepancy(rng):
    # sum of per-phase penalties along the path of u equals -sum |soft| over
    # codeword positions disagreeing with the hard decisions
    for _ in range(50):
        soft = rng.normal(size=16)
        u = rng.integers(0, 2, 16, dtype=np.uint8)
        stats = _phase_oracle(soft, u)
        score = sum(penalty(ui, s) for ui, s in zip(u, stats))
        assert score == pytest.approx(correlation_discrepancy(polar_transform(u), soft), abs=1e-12)


def test_full_list_is_exhaustive_cd_maximiser(rng):
    spec = CodeSpec.polar(16, (0, 1, 2, 3, 4, 5, 8, 6))
    info, words = _codebook(spec)
    for _ in range(100):
        soft = rng.normal(size=16) + (1 - 2.0 * words[rng.integers(len(words))])
        res = scl_decode_segment(soft, spec, 2 ** spec.dimension)
        cd = correlation_discrepancy(words, soft)
        assert res.scores[0] == pytest.approx(cd.max(), abs=1e-12)
        assert correlation_discrepancy(res.codewords[0], soft) == pytest.approx(cd.max(), abs=1e-12)
        assert np.allclose(np.sort(res.scores), np.sort(cd))


def test_n8_k4_list16_picks_best_codeword(rng):
    spec = CodeSpec(8, (0, 1, 2, 4), {4: (3,)})
    _, words = _codebook(spec)
    for _ in range(100):
        soft = 2 * rng.normal(size=8)
        res = scl_decode_segment(soft, spec, 16)
        best = np.argmax(correlation_discrepancy(words, soft))
        assert np.array_equal(res.codewords[0], words[best]) or np.isclose(
            correlation_discrepancy(words, soft).max(), res.scores[0]
        )


def test_list_one_equals_sc(rng):
    spec = CodeSpec(32, (0, 1, 2, 3, 4, 5, 6, 8, 9, 10, 12, 16, 7, 17), {12: (11,), 16: (11, 15), 17: (14,)})
    for _ in range(200):
        soft = rng.normal(size=32) * 1.5 + 0.5
        res = scl_decode_segment(soft, spec, 1)
        assert np.array_equal(res.u[0], sc_decode(soft, spec))


def test_noiseless_input_scores_zero(rng):
    spec = CodeSpec(16, (0, 1, 2, 4, 8, 3), {8: (5, 7)})
    info = rng.integers(0, 2, spec.dimension, dtype=np.uint8)
    c = encode(info, spec)
    res = scl_decode_segment(3.0 * (1 - 2.0 * c), spec, 4)
    assert res.scores[0] == 0.0
    assert np.array_equal(res.codewords[0], c)
    assert np.array_equal(res.u[0][spec.info_set], info)


def test_scores_scale_with_input(rng):
    spec = CodeSpec.polar(16, (0, 1, 2, 4, 8, 3, 5, 6))
    for _ in range(20):
        soft = rng.normal(size=16)
        r1 = scl_decode_segment(soft, spec, 8)
        r2 = scl_decode_segment(7.5 * soft, spec, 8)
        assert np.array_equal(r1.u, r2.u)
        assert np.allclose(7.5 * r1.scores, r2.scores)


def test_incoming_scores_and_external_bits(rng):
    spec = CodeSpec.polar(8, (0, 1, 2, 4))
    soft = rng.normal(size=(2, 8))
    ext = np.zeros((2, 8), np.uint8)
    ext[1, 4] = 1
    res = scl_decode_segment(soft, spec, 32, scores=np.array([0.0, -100.0]), external=ext)
    assert len(res) == 32
    for k in range(32):
        assert res.u[k, 4] == ext[res.origin[k], 4]
        own = correlation_discrepancy(res.codewords[k], soft[res.origin[k]])
        assert res.scores[k] == pytest.approx(own + [0.0, -100.0][res.origin[k]])
    assert np.all(np.diff(res.scores) <= 0)


def test_scl_argument_errors():
    spec = CodeSpec.polar(8, (0, 1))
    with pytest.raises(ValueError):
        scl_decode_segment(np.zeros(8), spec, 0)
    with pytest.raises(ValueError):
        scl_decode_segment(np.zeros(4), spec, 2)
    with pytest.raises(ValueError):
        scl_decode_segment(np.array([np.nan] * 8), spec, 2)
