"""Parallel learner-corpus parsing, filtering, and canonical persistence.

Input formats: standard M2 annotation files and plain parallel files
(source/corrected, one whitespace-tokenized sentence per line).  Corpora
persist in a versioned line-oriented text format so fixtures diff cleanly
and round-trips are byte-exact:

    GECAL-CORPUS v1 <name> <split>
    # <id>
    S <tokens...>
    E <annotator> <start> <end> <replacement tokens...>

Examples are blank-line separated; an empty replacement (pure deletion) is
encoded as the single token ``EMPTY_REPLACEMENT``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import editmetric
from .errors import FormatError

SPLITS = ("train", "dev", "test")
CORPUS_HEADER = "GECAL-CORPUS v1"
EMPTY_REPLACEMENT = "∅-NONE-∅"


@dataclass
class Sentence:
    id: str
    tokens: list[str]


@dataclass
class ReferenceEdit:
    """A gold rewrite: source tokens [src_start, src_end) become `replacement`."""

    src_start: int
    src_end: int
    replacement: list[str]
    annotator_id: int = 0


@dataclass
class ParallelExample:
    source: Sentence
    references: dict[int, list[ReferenceEdit]] = field(default_factory=dict)
    corrected: Sentence | None = None

    def has_edits(self, annotator: int | None = None) -> bool:
        if annotator is not None:
            return bool(self.references.get(annotator))
        return any(self.references.values())


@dataclass
class Corpus:
    name: str
    split: str
    examples: list[ParallelExample] = field(default_factory=list)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")

    def __len__(self) -> int:
        return len(self.examples)


def _check_tokens(tokens: list[str], line: int | None, path=None) -> None:
    if not tokens:
        raise FormatError("sentence has no tokens", line=line, path=path)
    for t in tokens:
        if any(c.isspace() for c in t):
            raise FormatError(f"token contains whitespace: {t!r}", line=line, path=path)


def apply_edits(tokens: list[str], edits: list[ReferenceEdit]) -> list[str]:
    """Apply reference edits to a token list, right-to-left by src_start."""
    out = list(tokens)
    for e in sorted(edits, key=lambda e: (e.src_start, e.src_end), reverse=True):
        out[e.src_start : e.src_end] = list(e.replacement)
    return out


def _materialize_corrected(example: ParallelExample, annotator: int = 0) -> None:
    edits = example.references.get(annotator, [])
    example.corrected = Sentence(
        id=example.source.id, tokens=apply_edits(example.source.tokens, edits)
    )


def parse_m2(text: str, name: str = "m2", split: str = "train", path=None) -> Corpus:
    """Parse M2 text: `S <tokens>` lines each followed by `A` annotation lines.

    `noop` annotations yield no reference edits; a correction field of
    "-NONE-" (or empty) maps to an empty replacement.  Malformed lines and
    out-of-range spans raise FormatError with the offending line number.
    """
    examples: list[ParallelExample] = []
    current: ParallelExample | None = None

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            if current is not None:
                examples.append(current)
                current = None
            continue
        if line.startswith("S ") or line == "S":
            if current is not None:
                raise FormatError(
                    "second S line in block (examples are blank-line separated)",
                    line=lineno,
                    path=path,
                )
            tokens = line[2:].split()
            _check_tokens(tokens, lineno, path)
            current = ParallelExample(source=Sentence(id=str(len(examples)), tokens=tokens))
        elif line.startswith("A "):
            if current is None:
                raise FormatError("A line before any S line", line=lineno, path=path)
            fields = line[2:].split("|||")
            if len(fields) < 6:
                raise FormatError(
                    f"A line has {len(fields)} fields, expected at least 6",
                    line=lineno,
                    path=path,
                )
            span = fields[0].split()
            if len(span) != 2:
                raise FormatError(f"bad edit span {fields[0]!r}", line=lineno, path=path)
            try:
                start, end = int(span[0]), int(span[1])
                annotator = int(fields[-1])
            except ValueError as exc:
                raise FormatError(f"non-integer field: {exc}", line=lineno, path=path)
            etype = fields[1]
            if etype == "noop":
                # reviewed-but-clean; the canonical format has no separate
                # representation for this, so nothing is recorded
                continue
            n = len(current.source.tokens)
            if not (0 <= start <= end <= n):
                raise FormatError(
                    f"edit span {start} {end} exceeds sentence length {n}",
                    line=lineno,
                    path=path,
                )
            replacement = [] if fields[2] in ("-NONE-", "") else fields[2].split()
            if start == end and not replacement:
                raise FormatError(
                    "empty-span edit with empty replacement", line=lineno, path=path
                )
            current.references.setdefault(annotator, []).append(
                ReferenceEdit(start, end, replacement, annotator_id=annotator)
            )
        else:
            raise FormatError(f"unrecognized line {line!r}", line=lineno, path=path)
    if current is not None:
        examples.append(current)

    for ex in examples:
        ex.references = dict(sorted(ex.references.items()))
        _materialize_corrected(ex)
    return Corpus(name=name, split=split, examples=examples)


def parse_parallel(
    src_text: str, cor_text: str, name: str = "parallel", split: str = "train"
) -> Corpus:
    """Build a corpus from parallel source/corrected text (one sentence per line).

    Reference edits (annotator 0) are derived by aligning each source line
    to its corrected line.
    """
    src_lines = src_text.splitlines()
    cor_lines = cor_text.splitlines()
    if len(src_lines) != len(cor_lines):
        raise FormatError(
            f"line count mismatch: {len(src_lines)} source vs {len(cor_lines)} corrected"
        )
    examples = []
    for i, (src_line, cor_line) in enumerate(zip(src_lines, cor_lines)):
        src_tokens = src_line.split()
        cor_tokens = cor_line.split()
        _check_tokens(src_tokens, i + 1)
        ops = editmetric.align(src_tokens, cor_tokens)
        spans = editmetric.extract_edits(ops, src_tokens, cor_tokens)
        edits = [
            ReferenceEdit(s.src_start, s.src_end, list(s.hyp_tokens), annotator_id=0)
            for s in spans
        ]
        examples.append(
            ParallelExample(
                source=Sentence(id=str(i), tokens=src_tokens),
                references={0: edits},
                corrected=Sentence(id=str(i), tokens=cor_tokens),
            )
        )
    return Corpus(name=name, split=split, examples=examples)


def filter_incorrect(corpus: Corpus, annotator: int | None = None) -> Corpus:
    """Keep only examples with at least one reference edit (order preserved).

    By default an edit from any annotator qualifies; pass `annotator` to
    count a single annotator's edits only.
    """
    kept = [ex for ex in corpus.examples if ex.has_edits(annotator)]
    return Corpus(name=corpus.name, split=corpus.split, examples=kept)


def dumps_corpus(corpus: Corpus) -> str:
    if any(c.isspace() for c in corpus.name) or not corpus.name:
        raise FormatError(f"corpus name must be non-empty and whitespace-free: {corpus.name!r}")
    lines = [f"{CORPUS_HEADER} {corpus.name} {corpus.split}"]
    seen_ids = set()
    for ex in corpus.examples:
        if ex.source.id in seen_ids:
            raise FormatError(f"duplicate example id {ex.source.id!r}")
        seen_ids.add(ex.source.id)
        lines.append(f"# {ex.source.id}")
        lines.append("S " + " ".join(ex.source.tokens))
        for annotator in sorted(ex.references):
            for e in ex.references[annotator]:
                if EMPTY_REPLACEMENT in e.replacement:
                    raise FormatError(
                        f"replacement token collides with sentinel {EMPTY_REPLACEMENT!r}"
                    )
                repl = " ".join(e.replacement) if e.replacement else EMPTY_REPLACEMENT
                lines.append(f"E {annotator} {e.src_start} {e.src_end} {repl}")
        lines.append("")
    return "\n".join(lines) + "\n" if len(lines) > 1 else lines[0] + "\n"


def loads_corpus(text: str, path=None) -> Corpus:
    lines = text.split("\n")
    header = lines[0].split() if lines else []
    if len(header) < 4 or " ".join(header[:2]) != CORPUS_HEADER:
        raise FormatError(
            f"bad or unsupported corpus header: {lines[0] if lines else ''!r}",
            line=1,
            path=path,
        )
    name, split = header[2], header[3]
    if split not in SPLITS:
        raise FormatError(f"unknown split {split!r}", line=1, path=path)

    examples: list[ParallelExample] = []
    current: ParallelExample | None = None
    pending_id: str | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            if current is not None:
                examples.append(current)
                current = None
            continue
        if line.startswith("# "):
            if current is not None or pending_id is not None:
                raise FormatError("unexpected id line", line=lineno, path=path)
            pending_id = line[2:]
        elif line.startswith("S "):
            if pending_id is None or current is not None:
                raise FormatError("S line without preceding id line", line=lineno, path=path)
            tokens = line[2:].split()
            _check_tokens(tokens, lineno, path)
            current = ParallelExample(source=Sentence(id=pending_id, tokens=tokens))
            pending_id = None
        elif line.startswith("E "):
            if current is None:
                raise FormatError("E line before S line", line=lineno, path=path)
            fields = line[2:].split()
            if len(fields) < 4:
                raise FormatError("E line needs annotator, span and replacement",
                                  line=lineno, path=path)
            try:
                annotator, start, end = int(fields[0]), int(fields[1]), int(fields[2])
            except ValueError as exc:
                raise FormatError(f"non-integer field: {exc}", line=lineno, path=path)
            repl = fields[3:]
            replacement = [] if repl == [EMPTY_REPLACEMENT] else repl
            n = len(current.source.tokens)
            if not (0 <= start <= end <= n):
                raise FormatError(
                    f"edit span {start} {end} exceeds sentence length {n}",
                    line=lineno,
                    path=path,
                )
            if start == end and not replacement:
                raise FormatError(
                    "empty-span edit with empty replacement", line=lineno, path=path
                )
            current.references.setdefault(annotator, []).append(
                ReferenceEdit(start, end, replacement, annotator_id=annotator)
            )
        else:
            raise FormatError(f"unrecognized line {line!r}", line=lineno, path=path)
    if current is not None:
        examples.append(current)

    ids = [ex.source.id for ex in examples]
    if len(set(ids)) != len(ids):
        raise FormatError("duplicate example ids", path=path)
    for ex in examples:
        ex.references = dict(sorted(ex.references.items()))
        _materialize_corrected(ex)
    return Corpus(name=name, split=split, examples=examples)


def save_corpus(corpus: Corpus, path) -> None:
    Path(path).write_text(dumps_corpus(corpus), encoding="utf-8")


def load_corpus(path) -> Corpus:
    return loads_corpus(Path(path).read_text(encoding="utf-8"), path=path)
