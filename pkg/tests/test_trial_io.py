import numpy as np
import pytest

from svkit import (
    AlignmentError,
    DataError,
    DuplicatePairError,
    EmbeddingSet,
    ParseError,
    ScoreSet,
    TrialList,
    TrialPair,
    align_score_sets,
    parse_score_file,
    parse_trial_list,
    read_embeddings,
    write_embeddings,
    write_score_file,
    write_trial_list,
)


class TestParseTrialList:
    def test_labeled(self):
        trials = parse_trial_list("1 a.wav b.wav\n0 a.wav c.wav")
        assert len(trials) == 2
        assert trials.labels() == [True, False]
        assert trials[0] == TrialPair("a.wav", "b.wav", True)

    def test_unlabeled(self):
        trials = parse_trial_list("a.wav b.wav")
        assert len(trials) == 1
        assert not trials.labeled

    def test_wrong_token_count(self):
        with pytest.raises(ParseError) as exc:
            parse_trial_list("1 a.wav")
        assert exc.value.line == 1

    def test_bad_label(self):
        with pytest.raises(ParseError) as exc:
            parse_trial_list("1 a b\n2 a c")
        assert exc.value.line == 2

    def test_mixed_labeling_rejected(self):
        with pytest.raises(ParseError):
            parse_trial_list("1 a b\na c")
        with pytest.raises(ParseError):
            parse_trial_list("a b\n0 a c")

    def test_duplicate_pair(self):
        with pytest.raises(DuplicatePairError):
            parse_trial_list("1 a b\n0 a b")

    def test_whitespace_runs_and_tabs(self):
        trials = parse_trial_list("1\ta  b\n\n  0 a\tc  \n")
        assert len(trials) == 2

    def test_empty_input(self):
        with pytest.raises(ParseError):
            parse_trial_list("\n  \n")

    def test_round_trip(self):
        for text in ("1 a b\n0 a c\n", "x y\nx z\n"):
            trials = parse_trial_list(text)
            assert write_trial_list(trials) == text
            assert parse_trial_list(write_trial_list(trials)) == trials


class TestTrialListInvariants:
    def test_empty_rejected(self):
        with pytest.raises(DataError):
            TrialList([])

    def test_whitespace_id_rejected(self):
        with pytest.raises(DataError):
            TrialList([TrialPair("a b", "c")])

    def test_mixed_labels_rejected(self):
        with pytest.raises(DataError):
            TrialList([TrialPair("a", "b", True), TrialPair("a", "c")])

    def test_labels_for_reordering(self):
        trials = parse_trial_list("1 a b\n0 a c\n1 b c")
        assert trials.labels_for([("b", "c"), ("a", "b")]) == [True, True]
        with pytest.raises(AlignmentError):
            trials.labels_for([("z", "z2")])

    def test_labels_for_unlabeled(self):
        trials = parse_trial_list("a b")
        with pytest.raises(DataError):
            trials.labels_for([("a", "b")])


class TestScoreFile:
    def test_single_entry(self):
        s = parse_score_file("a b -1.25")
        assert s.entries == [("a", "b", -1.25)]

    def test_two_entries_in_order(self):
        s = parse_score_file("a b -1.25\na c 0")
        assert s.pairs == [("a", "b"), ("a", "c")]
        assert list(s.scores) == [-1.25, 0.0]

    def test_nan_rejected(self):
        with pytest.raises(ParseError):
            parse_score_file("a b nan")
        with pytest.raises(ParseError):
            parse_score_file("a b inf")

    def test_non_numeric(self):
        with pytest.raises(ParseError) as exc:
            parse_score_file("a b 1.0\na c zero")
        assert exc.value.line == 2

    def test_token_count(self):
        with pytest.raises(ParseError):
            parse_score_file("a b")

    def test_negative_five_renders_round_trippable(self):
        s = ScoreSet([("a", "b", -5.0)])
        assert parse_score_file(write_score_file(s)) == s

    def test_empty_rejected_at_construction(self):
        with pytest.raises(DataError):
            ScoreSet([])

    def test_nonfinite_rejected_at_construction(self):
        with pytest.raises(DataError):
            ScoreSet([("a", "b", float("nan"))])

    def test_random_round_trips_bit_exact(self):
        rng = np.random.default_rng(101)
        for _ in range(200):
            n = int(rng.integers(1, 20))
            entries = [
                (f"e{i}", f"t{i}", float(rng.standard_normal() * 10.0 ** rng.integers(-8, 8)))
                for i in range(n)
            ]
            s = ScoreSet(entries)
            assert parse_score_file(write_score_file(s)) == s


class TestEmbeddingsText:
    def test_segments_append(self):
        emb = read_embeddings("u1 1 0\nu1 0 1\nu2 3 4", "text")
        assert emb.dim == 2
        assert emb["u1"].shape == (2, 2)
        assert emb["u2"].shape == (1, 2)

    def test_dimension_mismatch(self):
        with pytest.raises(ParseError) as exc:
            read_embeddings("u1 1 0\nu2 1 2 3", "text")
        assert exc.value.line == 2

    def test_zero_dimension(self):
        with pytest.raises(ParseError):
            read_embeddings("u1", "text")

    def test_nan_rejected(self):
        with pytest.raises(ParseError):
            read_embeddings("u1 1 nan", "text")

    def test_value_round_trip(self):
        rng = np.random.default_rng(5)
        emb = EmbeddingSet(
            {
                "a": rng.standard_normal((3, 7)).astype(np.float32),
                "b": rng.standard_normal((1, 7)).astype(np.float32),
            }
        )
        assert read_embeddings(write_embeddings(emb, "text"), "text") == emb


class TestEmbeddingsBinary:
    def _random_set(self, rng):
        n_utt = int(rng.integers(1, 6))
        dim = int(rng.integers(1, 12))
        return EmbeddingSet(
            {
                f"utt{i:02d}": rng.standard_normal((int(rng.integers(1, 4)), dim)).astype(
                    np.float32
                )
                for i in range(n_utt)
            }
        )

    def test_bit_exact_round_trip(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            emb = self._random_set(rng)
            payload = write_embeddings(emb, "binary")
            assert read_embeddings(payload, "binary") == emb

    def test_bad_magic(self):
        with pytest.raises(ParseError):
            read_embeddings(b"NOPE" + b"\x00" * 8, "binary")

    def test_truncated(self):
        emb = EmbeddingSet({"a": np.ones((1, 4), dtype=np.float32)})
        payload = write_embeddings(emb, "binary")
        with pytest.raises(ParseError):
            read_embeddings(payload[:-3], "binary")

    def test_trailing_bytes(self):
        emb = EmbeddingSet({"a": np.ones((1, 4), dtype=np.float32)})
        payload = write_embeddings(emb, "binary")
        with pytest.raises(ParseError):
            read_embeddings(payload + b"\x00", "binary")

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            read_embeddings("x 1", "csv")


class TestEmbeddingSetInvariants:
    def test_empty_rejected(self):
        with pytest.raises(DataError):
            EmbeddingSet({})

    def test_ragged_dims_rejected(self):
        with pytest.raises(DataError):
            EmbeddingSet({"a": np.ones((1, 3)), "b": np.ones((1, 4))})

    def test_nonfinite_rejected(self):
        with pytest.raises(DataError):
            EmbeddingSet({"a": np.array([[1.0, np.inf]])})

    def test_single_vector_promoted(self):
        emb = EmbeddingSet({"a": np.arange(4.0)})
        assert emb["a"].shape == (1, 4)

    def test_mean_vector(self):
        emb = EmbeddingSet({"a": np.array([[0.0, 0.0], [2.0, 4.0]])})
        assert np.allclose(emb.mean_vector("a"), [1.0, 2.0])


class TestAlignScoreSets:
    def test_reorders_to_first(self):
        s1 = parse_score_file("a b 1\na c 2")
        s2 = parse_score_file("a c 20\na b 10")
        aligned = align_score_sets([s1, s2])
        assert aligned.pairs == (("a", "b"), ("a", "c"))
        assert np.array_equal(aligned.matrix, [[1.0, 2.0], [10.0, 20.0]])

    def test_disjoint_pairs_error(self):
        s1 = parse_score_file("a b 1")
        s2 = parse_score_file("x y 1")
        with pytest.raises(AlignmentError):
            align_score_sets([s1, s2])

    def test_missing_pair_named(self):
        s1 = parse_score_file("a b 1\na c 2")
        s2 = parse_score_file("a b 1")
        with pytest.raises(AlignmentError, match="a c"):
            align_score_sets([s1, s2])

    def test_single_set_identity(self):
        s1 = parse_score_file("a b 1\na c 2")
        aligned = align_score_sets([s1])
        assert aligned.matrix.shape == (1, 2)
        assert np.array_equal(aligned.matrix[0], s1.scores)

    def test_duplicate_within_set(self):
        s1 = ScoreSet([("a", "b", 1.0)])
        dup = ScoreSet([("a", "b", 1.0), ("a", "b", 2.0)])
        with pytest.raises(DuplicatePairError):
            align_score_sets([s1, dup])

    def test_internal_order_permutation_invariant(self):
        rng = np.random.default_rng(11)
        pairs = [(f"e{i}", f"t{i}") for i in range(12)]
        first = ScoreSet([(e, t, float(rng.standard_normal())) for e, t in pairs])
        other_entries = [(e, t, float(rng.standard_normal())) for e, t in pairs]
        reference = align_score_sets([first, ScoreSet(other_entries)])
        for _ in range(10):
            perm = rng.permutation(len(other_entries))
            shuffled = ScoreSet([other_entries[i] for i in perm])
            aligned = align_score_sets([first, shuffled])
            assert aligned.pairs == reference.pairs
            assert np.array_equal(aligned.matrix, reference.matrix)

    def test_no_sets(self):
        with pytest.raises(DataError):
            align_score_sets([])
