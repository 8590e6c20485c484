"""Token-level edit alignment and edit-count fluency scoring.

An *edit* is a maximal contiguous run of non-matching alignment operations
between a source token sequence and a corrected token sequence, under a
minimal-cost alignment (costs: match 0, substitute/delete/insert 1).  The
number of edits is the fluency score: zero means the corrector changed
nothing.  Absolute counts depend on this merge convention, so it is fixed
here and never configurable.

Traceback ties are broken deterministically: diagonal (match/substitute)
over delete over insert, so counts are reproducible bit-for-bit.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, NamedTuple, Sequence

from .errors import OracleError

if TYPE_CHECKING:
    from .corpus import Corpus, ReferenceEdit


class OpKind(Enum):
    MATCH = "M"
    SUB = "S"
    DEL = "D"
    INS = "I"


@dataclass(frozen=True)
class AlignOp:
    """One cell of the alignment path.

    MATCH/SUB carry both indices, DEL only src_index, INS only hyp_index.
    """

    kind: OpKind
    src_index: int | None = None
    hyp_index: int | None = None


@dataclass(frozen=True)
class EditSpan:
    """A contiguous rewrite: source tokens [src_start, src_end) become hyp_tokens."""

    src_start: int
    src_end: int
    hyp_tokens: tuple[str, ...]

    def as_key(self) -> tuple[int, int, tuple[str, ...]]:
        return (self.src_start, self.src_end, self.hyp_tokens)


def _token_list(x) -> list[str]:
    """Accept either a Sentence-like object (has .tokens) or a token sequence."""
    tokens = getattr(x, "tokens", x)
    return list(tokens)


def align(src: Sequence[str], hyp: Sequence[str]) -> list[AlignOp]:
    """Minimal-cost alignment of src to hyp (word-level Levenshtein).

    Deterministic traceback: at equal cost prefer MATCH/SUB, then DEL,
    then INS.  Total cost of the returned ops equals the word-level
    Levenshtein distance.
    """
    src = _token_list(src)
    hyp = _token_list(hyp)
    n, m = len(src), len(hyp)

    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        s = src[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (0 if s == hyp[j - 1] else 1)
            up = prev[j] + 1
            left = row[j - 1] + 1
            row[j] = diag if diag <= up and diag <= left else min(up, left)

    ops: list[AlignOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            same = src[i - 1] == hyp[j - 1]
            if dist[i][j] == dist[i - 1][j - 1] + (0 if same else 1):
                kind = OpKind.MATCH if same else OpKind.SUB
                ops.append(AlignOp(kind, src_index=i - 1, hyp_index=j - 1))
                i, j = i - 1, j - 1
                continue
        if i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append(AlignOp(OpKind.DEL, src_index=i - 1))
            i -= 1
            continue
        ops.append(AlignOp(OpKind.INS, hyp_index=j - 1))
        j -= 1
    ops.reverse()
    return ops


def alignment_cost(ops: Iterable[AlignOp]) -> int:
    return sum(1 for op in ops if op.kind is not OpKind.MATCH)


def extract_edits(ops: Sequence[AlignOp], src: Sequence[str], hyp: Sequence[str]) -> list[EditSpan]:
    """Merge every maximal run of non-MATCH ops into one EditSpan.

    The span's source range covers the run's SUB/DEL source tokens and
    hyp_tokens collects the run's SUB/INS hypothesis tokens, in order.
    """
    src = _token_list(src)
    hyp = _token_list(hyp)
    spans: list[EditSpan] = []
    src_pos = 0  # next unconsumed source index
    run_start: int | None = None
    run_end = 0
    run_hyp: list[str] = []

    def flush() -> None:
        nonlocal run_start, run_hyp
        if run_start is not None:
            spans.append(EditSpan(run_start, run_end, tuple(run_hyp)))
            run_start = None
            run_hyp = []

    for op in ops:
        if op.kind is OpKind.MATCH:
            flush()
            src_pos += 1
            continue
        if run_start is None:
            run_start = src_pos
            run_end = src_pos
        if op.kind in (OpKind.SUB, OpKind.DEL):
            src_pos += 1
            run_end = src_pos
        if op.kind in (OpKind.SUB, OpKind.INS):
            run_hyp.append(hyp[op.hyp_index])
    flush()
    return spans


def apply_spans(src: Sequence[str], spans: Sequence[EditSpan]) -> list[str]:
    """Apply edit spans to src (right-to-left), reconstructing the hypothesis."""
    out = _token_list(src)
    for span in sorted(spans, key=lambda s: s.src_start, reverse=True):
        out[span.src_start : span.src_end] = list(span.hyp_tokens)
    return out


def count_edits(src, hyp) -> int:
    """Number of merged edits between two token sequences (0 iff identical)."""
    src = _token_list(src)
    hyp = _token_list(hyp)
    return len(extract_edits(align(src, hyp), src, hyp))


@dataclass(frozen=True)
class EditScore:
    """Edit-level precision/recall/F1 against reference edits."""

    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def _ref_keys(edits: Iterable["ReferenceEdit"]) -> set[tuple[int, int, tuple[str, ...]]]:
    return {(e.src_start, e.src_end, tuple(e.replacement)) for e in edits}


def _hyp_keys(spans: Iterable[EditSpan]) -> set[tuple[int, int, tuple[str, ...]]]:
    return {s.as_key() for s in spans}


def score_edits(
    hyp_edits: Sequence[EditSpan],
    references: "dict[int, list[ReferenceEdit]] | list[ReferenceEdit]",
    annotator: int | None = None,
) -> EditScore:
    """Score one sentence's hypothesis edits against its reference edits.

    A hypothesis span is a true positive iff some reference edit matches it
    exactly on (src_start, src_end, replacement).  References are either a
    flat edit list (single annotator) or a per-annotator dict; with several
    annotators the one maximizing sentence F1 is chosen (ties: lowest
    annotator id).  Pass `annotator` to force a single one.
    """
    if isinstance(references, list):
        references = {0: references}
    hyp = _hyp_keys(hyp_edits)
    if annotator is not None:
        candidates = [(annotator, references.get(annotator, []))]
    else:
        candidates = sorted(references.items()) if references else [(0, [])]

    best: EditScore | None = None
    for _aid, edits in candidates:
        ref = _ref_keys(edits)
        tp = len(hyp & ref)
        score = EditScore(tp=tp, fp=len(hyp) - tp, fn=len(ref) - tp)
        if best is None or score.f1 > best.f1:
            best = score
    assert best is not None
    return best


def score_corpus(
    items: Iterable[tuple[Sequence[EditSpan], dict[int, list["ReferenceEdit"]]]],
    annotator: int | None = None,
) -> EditScore:
    """Accumulate per-sentence tp/fp/fn into a corpus-level EditScore."""
    tp = fp = fn = 0
    for hyp_edits, references in items:
        s = score_edits(hyp_edits, references, annotator=annotator)
        tp += s.tp
        fp += s.fp
        fn += s.fn
    return EditScore(tp=tp, fp=fp, fn=fn)


class EditStats(NamedTuple):
    """Sample count, mean and standard deviation of per-sentence edit counts."""

    n: int
    mean: float | None
    std: float | None


def mean_std(counts: Sequence[int | float], sample_std: bool = False) -> EditStats:
    """Mean and (population by default) standard deviation of counts."""
    n = len(counts)
    if n == 0:
        return EditStats(0, None, None)
    mean = statistics.fmean(counts)
    if sample_std:
        std = statistics.stdev(counts) if n > 1 else 0.0
    else:
        std = statistics.pstdev(counts)
    return EditStats(n, mean, std)


def corpus_edit_counts(corpus: "Corpus", oracle, dictionary=None) -> list[int]:
    """Per-example edit counts: apply `dictionary` (if any) to each source,
    query the oracle, and count edits from the (attacked) source to the output.

    Oracle failures are re-raised naming the first failing sentence id.
    """
    sources = []
    for ex in corpus.examples:
        tokens = list(ex.source.tokens)
        if dictionary is not None:
            tokens = dictionary.apply_tokens(tokens)
        sources.append(tokens)
    if not sources:
        return []
    try:
        outputs = oracle.correct_batch(sources)
    except OracleError:
        outputs = _retry_singly(corpus, oracle, sources)
    if len(outputs) != len(sources):
        raise OracleError(
            f"oracle returned {len(outputs)} corrections for {len(sources)} sentences"
        )
    return [count_edits(s, o) for s, o in zip(sources, outputs)]


def _retry_singly(corpus: "Corpus", oracle, sources: list[list[str]]) -> list[list[str]]:
    # Pinpoint the failing sentence for the error message.
    outputs = []
    for ex, tokens in zip(corpus.examples, sources):
        try:
            outputs.append(oracle.correct(tokens))
        except OracleError as exc:
            raise OracleError(f"sentence {ex.source.id!r}: {exc}") from exc
    return outputs


def corpus_mean_edits(
    corpus: "Corpus", oracle, dictionary=None, sample_std: bool = False
) -> EditStats:
    """Sample count, mean and std of edit counts over a corpus.

    Deterministic given a deterministic oracle; the empty corpus yields
    EditStats(0, None, None).
    """
    return mean_std(corpus_edit_counts(corpus, oracle, dictionary), sample_std=sample_std)
