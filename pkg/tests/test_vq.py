import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spkid.errors import CombineError, DimensionMismatchError, InsufficientDataError
from spkid.frontend import FeatureSequence
from spkid.vq import (Codebook, combine_codebooks, count_vq_parameters, identify_vq,
                      load_codebook, quantize_distortion, save_codebook,
                      train_codebook_random)


def book(centroids, No=None, speaker="s", language="A"):
    c = np.atleast_2d(np.asarray(centroids, dtype=float))
    if No is None:
        No = int(np.log2(len(c)))
    return Codebook(c, No, speaker, language)


class TestTraining:
    def test_exhausts_training_set(self):
        x = np.random.default_rng(0).standard_normal((8, 4))
        for seed in (0, 1, 99):
            cb = train_codebook_random(x, 3, seed)
            assert sorted(map(tuple, cb.centroids)) == sorted(map(tuple, x))

    def test_deterministic(self):
        x = np.random.default_rng(0).standard_normal((100, 4))
        a = train_codebook_random(x, 4, 42)
        b = train_codebook_random(x, 4, 42)
        assert np.array_equal(a.centroids, b.centroids)
        assert a.seed == 42

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            train_codebook_random(np.zeros((7, 2)), 3, 0)

    def test_centroids_are_distinct_training_rows(self):
        x = np.random.default_rng(1).standard_normal((50, 3))
        cb = train_codebook_random(x, 5, 7)
        rows = {tuple(r) for r in x}
        assert len({tuple(c) for c in cb.centroids}) == 32
        assert all(tuple(c) in rows for c in cb.centroids)

    def test_refine_does_not_increase_distortion(self):
        x = np.random.default_rng(2).standard_normal((400, 3))
        plain = train_codebook_random(x, 3, 5)
        refined = train_codebook_random(x, 3, 5, refine=True)
        assert quantize_distortion(x, refined) <= quantize_distortion(x, plain)

    def test_labels_from_features(self):
        f = FeatureSequence(np.eye(4), ("spk3", "B", "text"))
        cb = train_codebook_random(f, 1, 0)
        assert (cb.speaker_id, cb.language) == ("spk3", "B")

    def test_bits_range(self):
        with pytest.raises(ValueError):
            train_codebook_random(np.zeros((1000, 2)), 8, 0)


class TestDistortion:
    def test_exact_members(self):
        x = np.random.default_rng(0).standard_normal((4, 3))
        assert quantize_distortion(x[[0, 2, 2]], book(x)) == 0.0

    def test_origin(self):
        x = np.array([[3.0, 4.0], [0.0, 5.0], [-5.0, 0.0]])
        assert quantize_distortion(x, book([[0.0, 0.0]])) == 25.0

    def test_one_dimensional(self):
        # nearest centroids: 0 -> 0 (d=0), 2 -> 3 (d=1)
        assert quantize_distortion([[0.0], [2.0]], book([[0.0], [3.0]])) == 0.5

    def test_empty(self):
        with pytest.raises(ValueError):
            quantize_distortion(np.zeros((0, 2)), book([[0.0, 0.0]]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            quantize_distortion(np.zeros((2, 3)), book([[0.0, 0.0]]))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(3)
        x, c = rng.standard_normal((50, 5)), rng.standard_normal((16, 5))
        brute = np.mean([min(((xi - cj) ** 2).sum() for cj in c) for xi in x])
        assert quantize_distortion(x, book(c)) == pytest.approx(brute, rel=1e-12)


class TestCombine:
    def test_doubles(self):
        rng = np.random.default_rng(0)
        a = book(rng.standard_normal((8, 12)), language="A")
        b = book(rng.standard_normal((8, 12)), language="B")
        cb = combine_codebooks(a, b)
        assert cb.size == 16 and cb.No == 3 and cb.language == "combined"
        assert np.array_equal(cb.centroids[:8], a.centroids)
        assert cb.n_parameters == 2 * count_vq_parameters(3, 12)

    def test_self_combination_is_inert(self):
        rng = np.random.default_rng(1)
        a = book(rng.standard_normal((4, 3)))
        b = Codebook(a.centroids, 2, "s", "B")
        x = rng.standard_normal((30, 3))
        assert quantize_distortion(x, combine_codebooks(a, b)) == quantize_distortion(x, a)

    @pytest.mark.parametrize("kwargs", [dict(No=1), dict(speaker="t")])
    def test_mismatch(self, kwargs):
        a = book(np.zeros((4, 2)))
        cents = np.zeros((2 ** kwargs.get("No", 2), 2))
        b = book(cents, kwargs.get("No"), kwargs.get("speaker", "s"), "B")
        with pytest.raises(CombineError):
            combine_codebooks(a, b)

    def test_dimension_mismatch(self):
        with pytest.raises(CombineError):
            combine_codebooks(book(np.zeros((2, 2))), book(np.zeros((2, 3)), language="B"))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 16))
def test_combined_dominance_property(seed, P):
    rng = np.random.default_rng(seed)
    No = int(rng.integers(0, 4))
    a = book(rng.standard_normal((2 ** No, P)), No, language="A")
    b = book(rng.standard_normal((2 ** No, P)), No, language="B")
    x = rng.standard_normal((int(rng.integers(1, 60)), P))
    d = quantize_distortion(x, combine_codebooks(a, b))
    assert d <= min(quantize_distortion(x, a), quantize_distortion(x, b))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((8, 4))
    x = rng.standard_normal((20, 4))
    assert quantize_distortion(x, book(c)) == quantize_distortion(x, book(c[rng.permutation(8)]))


class TestIdentify:
    def test_exact_model_wins(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((4, 3))
        models = [book(rng.standard_normal((4, 3)), speaker="a"), book(x, speaker="b")]
        spk, scores = identify_vq(models, x)
        assert spk == "b" and scores[1] == 0.0

    def test_tie_break(self):
        c = np.zeros((2, 2))
        spk, scores = identify_vq([book(c, speaker="zed"), book(c, speaker="amy")],
                                  np.ones((3, 2)))
        assert spk == "amy"
        assert scores[0] == scores[1]

    def test_scores_match_single_model_distortion(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((5000, 6))
        models = [book(rng.standard_normal((2 ** k, 6)), speaker=f"s{k}") for k in range(4)]
        _, scores = identify_vq(models, x)
        assert list(scores) == [quantize_distortion(x, m) for m in models]

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            identify_vq([book(np.zeros((1, 2))), book(np.zeros((1, 3)))], np.zeros((1, 2)))


@pytest.mark.parametrize("No,P,expected", [(3, 12, 96), (0, 12, 12), (7, 12, 1536)])
def test_parameter_count(No, P, expected):
    assert count_vq_parameters(No, P) == expected


def test_codebook_file_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    cb = Codebook(rng.standard_normal((8, 12)), 3, "spk01", "B", 2**63 + 5)
    save_codebook(cb, tmp_path / "x.model")
    head = (tmp_path / "x.model").read_text().splitlines()[0]
    assert head == f"vqcb v1 P=12 No=3 count=8 speaker=spk01 lang=B seed={2**63 + 5}"
    back = load_codebook(tmp_path / "x.model")
    assert np.array_equal(back.centroids, cb.centroids)
    assert (back.No, back.speaker_id, back.language, back.seed) == (3, "spk01", "B", 2**63 + 5)


def test_codebook_size_invariant():
    with pytest.raises(ValueError):
        Codebook(np.zeros((3, 2)), 2)
