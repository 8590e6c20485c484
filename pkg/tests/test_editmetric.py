"""Alignment, edit extraction and scoring tests.

The random-pair suites check align() against a separately written textbook
DP distance (no traceback, no shared code) and check that extracted spans
reconstruct the hypothesis exactly.
"""

import random

import pytest

from gecal.corpus import ReferenceEdit
from gecal.editmetric import (
    EditStats,
    OpKind,
    align,
    alignment_cost,
    apply_spans,
    corpus_mean_edits,
    count_edits,
    extract_edits,
    mean_std,
    score_corpus,
    score_edits,
)
from gecal.errors import OracleError

from conftest import make_corpus


def textbook_distance(a, b):
    """Plain full-matrix word Levenshtein, written independently of align()."""
    rows = len(a) + 1
    cols = len(b) + 1
    d = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        d[i][0] = i
    for j in range(cols):
        d[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            sub = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + sub)
    return d[rows - 1][cols - 1]


def random_pair(rng, max_len=12, alphabet=5):
    words = [f"w{k}" for k in range(alphabet)]
    src = [rng.choice(words) for _ in range(rng.randint(0, max_len))]
    hyp = [rng.choice(words) for _ in range(rng.randint(0, max_len))]
    return src, hyp


class TestAlign:
    def test_identity(self):
        ops = align(["a", "b"], ["a", "b"])
        assert [o.kind for o in ops] == [OpKind.MATCH, OpKind.MATCH]
        assert alignment_cost(ops) == 0

    def test_single_substitution(self):
        # 4x4 DP table by hand: one SUB at index 1, cost 1.
        ops = align("I has a dog".split(), "I have a dog".split())
        assert [o.kind for o in ops] == [OpKind.MATCH, OpKind.SUB, OpKind.MATCH, OpKind.MATCH]
        assert ops[1].src_index == 1 and ops[1].hyp_index == 1

    def test_empty_source(self):
        ops = align([], ["x"])
        assert [o.kind for o in ops] == [OpKind.INS]
        assert ops[0].hyp_index == 0

    def test_empty_hypothesis(self):
        ops = align(["x", "y"], [])
        assert [o.kind for o in ops] == [OpKind.DEL, OpKind.DEL]

    def test_match_requires_equal_tokens(self):
        for src, hyp in [(["a", "b", "c"], ["a", "c"]), (["x"], ["y", "x"])]:
            for op in align(src, hyp):
                if op.kind == OpKind.MATCH:
                    assert src[op.src_index] == hyp[op.hyp_index]

    def test_cost_equals_textbook_distance_random(self):
        rng = random.Random(101)
        for _ in range(1000):
            src, hyp = random_pair(rng)
            assert alignment_cost(align(src, hyp)) == textbook_distance(src, hyp)

    def test_deterministic(self):
        rng = random.Random(7)
        for _ in range(50):
            src, hyp = random_pair(rng)
            assert align(src, hyp) == align(src, hyp)


class TestExtractEdits:
    def test_two_separated_runs(self):
        src = "He go to school and play .".split()
        hyp = "He goes to school and plays .".split()
        spans = extract_edits(align(src, hyp), src, hyp)
        assert len(spans) == 2
        assert (spans[0].src_start, spans[0].src_end, spans[0].hyp_tokens) == (1, 2, ("goes",))
        assert (spans[1].src_start, spans[1].src_end, spans[1].hyp_tokens) == (5, 6, ("plays",))

    def test_adjacent_subs_merge(self):
        src = "I has a apple".split()
        hyp = "I have an apple".split()
        spans = extract_edits(align(src, hyp), src, hyp)
        assert len(spans) == 1
        assert (spans[0].src_start, spans[0].src_end) == (1, 3)
        assert spans[0].hyp_tokens == ("have", "an")

    def test_identical(self):
        src = hyp = ["same", "tokens"]
        assert extract_edits(align(src, hyp), src, hyp) == []

    def test_pure_insertion_position(self):
        src = "I like".split()
        hyp = "I like it".split()
        spans = extract_edits(align(src, hyp), src, hyp)
        assert len(spans) == 1
        assert (spans[0].src_start, spans[0].src_end, spans[0].hyp_tokens) == (2, 2, ("it",))

    def test_spans_sorted_nonoverlapping_nonempty(self):
        rng = random.Random(202)
        for _ in range(300):
            src, hyp = random_pair(rng)
            spans = extract_edits(align(src, hyp), src, hyp)
            for a, b in zip(spans, spans[1:]):
                assert a.src_end < b.src_start or (a.src_end == b.src_start
                                                   and a.src_end <= len(src))
                # separated by at least one MATCH, so never directly adjacent
                assert b.src_start > a.src_end
            for s in spans:
                assert not (s.src_start == s.src_end and not s.hyp_tokens)

    def test_reconstruction_random(self):
        rng = random.Random(303)
        for _ in range(1000):
            src, hyp = random_pair(rng)
            spans = extract_edits(align(src, hyp), src, hyp)
            assert apply_spans(src, spans) == hyp


class TestCountEdits:
    def test_identical_is_zero(self):
        s = "a perfect sentence .".split()
        assert count_edits(s, s) == 0

    def test_single_insertion(self):
        assert count_edits("I like".split(), "I like it".split()) == 1

    def test_full_rewrite_merges_to_one(self):
        assert count_edits("a b c d".split(), "w x y z".split()) == 1

    def test_bounds_random(self):
        rng = random.Random(404)
        for _ in range(500):
            src, hyp = random_pair(rng)
            count = count_edits(src, hyp)
            if src == hyp:
                assert count == 0
            else:
                assert count >= 1
            assert count <= textbook_distance(src, hyp)
            assert count <= (len(src) + len(hyp)) // 2 + 1


class TestScoreEdits:
    def test_exact_agreement(self):
        src = "I has a dog".split()
        hyp = "I have a dog".split()
        spans = extract_edits(align(src, hyp), src, hyp)
        refs = {0: [ReferenceEdit(1, 2, ["have"])]}
        score = score_edits(spans, refs)
        assert (score.tp, score.fp, score.fn) == (1, 0, 0)
        assert score.f1 == 1.0

    def test_empty_hypothesis(self):
        refs = {0: [ReferenceEdit(1, 2, ["have"])]}
        score = score_edits([], refs)
        assert (score.tp, score.fp, score.fn) == (0, 0, 1)
        assert score.precision == 0.0
        assert score.recall == 0.0
        assert score.f1 == 0.0

    def test_partial_overlap(self):
        src = "I has a apple".split()
        hyp = "I have a apple".split()
        spans = extract_edits(align(src, hyp), src, hyp)
        spans = list(spans) + [extract_edits(align(["a"], ["an"]), ["a"], ["an"])[0]]
        # one matching span (1,2,have) plus one spurious (0,1,an)
        refs = {0: [ReferenceEdit(1, 2, ["have"])]}
        score = score_edits(spans, refs)
        assert (score.tp, score.fp, score.fn) == (1, 1, 0)
        assert score.precision == 0.5
        assert score.recall == 1.0
        assert abs(score.f1 - 2 / 3) < 1e-12

    def test_best_annotator_selected(self):
        src = "I has a dog".split()
        hyp = "I have a dog".split()
        spans = extract_edits(align(src, hyp), src, hyp)
        refs = {
            0: [ReferenceEdit(0, 1, ["You"], 0)],          # disagrees
            1: [ReferenceEdit(1, 2, ["have"], 1)],          # agrees
        }
        assert score_edits(spans, refs).f1 == 1.0
        # forcing annotator 0 keeps the disagreement
        assert score_edits(spans, refs, annotator=0).f1 == 0.0

    def test_tie_prefers_lower_annotator(self):
        spans = []
        refs = {1: [ReferenceEdit(0, 1, ["x"], 1)], 0: [ReferenceEdit(0, 1, ["y"], 0)]}
        # both annotators give f1=0; scoring must be that of annotator 0
        score = score_edits(spans, refs)
        assert (score.tp, score.fp, score.fn) == (0, 0, 1)

    def test_self_scoring_is_perfect(self):
        rng = random.Random(505)
        for _ in range(100):
            src, hyp = random_pair(rng)
            if src == hyp:
                continue
            spans = extract_edits(align(src, hyp), src, hyp)
            refs = {0: [ReferenceEdit(s.src_start, s.src_end, list(s.hyp_tokens))
                        for s in spans]}
            assert score_edits(spans, refs).f1 == 1.0

    def test_disjoint_sets_score_zero(self):
        spans = extract_edits(align(["a"], ["b"]), ["a"], ["b"])
        refs = {0: [ReferenceEdit(0, 0, ["inserted"])]}
        assert score_edits(spans, refs).f1 == 0.0

    def test_flat_reference_list_accepted(self):
        src = "I has a dog".split()
        hyp = "I have a dog".split()
        spans = extract_edits(align(src, hyp), src, hyp)
        flat = [ReferenceEdit(1, 2, ["have"])]
        assert score_edits(spans, flat).f1 == 1.0

    def test_corpus_accumulation(self):
        src = "I has a dog".split()
        hyp = "I have a dog".split()
        spans = extract_edits(align(src, hyp), src, hyp)
        refs = {0: [ReferenceEdit(1, 2, ["have"])]}
        total = score_corpus([(spans, refs), ([], refs)])
        assert (total.tp, total.fp, total.fn) == (1, 0, 1)
        assert total.precision == 1.0
        assert total.recall == 0.5


class _ListOracle:
    """Maps each distinct input to a fixed output; fails on demand."""

    fingerprint = "test:list"

    def __init__(self, table, fail_on=None):
        self.table = table
        self.fail_on = fail_on or set()

    def correct(self, tokens):
        return self.correct_batch([tokens])[0]

    def correct_batch(self, sentences):
        out = []
        for s in sentences:
            if tuple(s) in self.fail_on:
                raise OracleError("backend exploded")
            out.append(self.table.get(tuple(s), list(s)))
        return out


class TestCorpusMeanEdits:
    def test_mean_and_population_std(self):
        corpus = make_corpus(["a b c", "x y"])
        oracle = _ListOracle({("a", "b", "c"): ["a", "q", "c", "d", "e"]})
        # counts: first sentence has 2 edit spans (b->q, +d e)? check: a b c -> a q c d e
        # alignment: M S M I I -> runs: (S) and (I I) = 2 edits; second identical = 0
        stats = corpus_mean_edits(corpus, oracle)
        assert stats == EditStats(2, 1.0, 1.0)

    def test_all_correct(self):
        corpus = make_corpus(["fine .", "also fine ."])
        stats = corpus_mean_edits(corpus, _ListOracle({}))
        assert stats == EditStats(2, 0.0, 0.0)

    def test_empty_corpus(self):
        stats = corpus_mean_edits(make_corpus([]), _ListOracle({}))
        assert stats == EditStats(0, None, None)

    def test_sample_std_switch(self):
        corpus = make_corpus(["a b c", "x y"])
        oracle = _ListOracle({("a", "b", "c"): ["a", "q", "c", "d", "e"]})
        stats = corpus_mean_edits(corpus, oracle, sample_std=True)
        assert stats.n == 2 and stats.mean == 1.0
        assert stats.std == pytest.approx(2 ** 0.5)

    def test_failure_names_sentence_id(self):
        corpus = make_corpus(["good one", "bad apple", "fine too"])
        oracle = _ListOracle({}, fail_on={("bad", "apple")})
        with pytest.raises(OracleError, match="sentence '1'"):
            corpus_mean_edits(corpus, oracle)

    def test_mean_std_empty(self):
        assert mean_std([]) == EditStats(0, None, None)
