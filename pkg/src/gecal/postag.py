"""Lexicon-based POS tagging and POS-stratified frequency tables.

Tagging is unigram most-frequent-tag lookup against a pluggable lexicon
(UTF-8 lines ``word<TAB>TAG<TAB>count``), so it is deterministic, total and
dependency-free; export a lexicon from any tagger you trust.  Frequency
tables may alternatively be built from pre-assigned tags (a sidecar file
``id<TAB>TAG TAG ...``) when per-occurrence disambiguation matters, e.g.
"that" splitting across IN/DT/WDT.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple

from .corpus import Corpus, Sentence
from .errors import FormatError

logger = logging.getLogger(__name__)


class PosTag(Enum):
    """Penn Treebank tags used for target stratification, plus OTHER."""

    CC = "CC"
    CD = "CD"
    DT = "DT"
    EX = "EX"
    IN = "IN"
    JJR = "JJR"
    JJS = "JJS"
    JJ = "JJ"
    MD = "MD"
    NNP = "NNP"
    NNS = "NNS"
    NN = "NN"
    PDT = "PDT"
    POS = "POS"
    PRP = "PRP"
    PRP_DOLLAR = "PRP$"
    RBR = "RBR"
    RBS = "RBS"
    RB = "RB"
    RP = "RP"
    VBD = "VBD"
    VBG = "VBG"
    VBN = "VBN"
    VBP = "VBP"
    VB = "VB"
    VBZ = "VBZ"
    WDT = "WDT"
    WP = "WP"
    WRB = "WRB"
    OTHER = "OTHER"

    @classmethod
    def parse(cls, text: str) -> "PosTag | None":
        """Map a tag string to a PosTag, or None if outside the closed set."""
        try:
            return cls(text)
        except ValueError:
            return None


class TaggedToken(NamedTuple):
    surface: str
    tag: PosTag


@dataclass
class PosLexicon:
    """word -> [(tag, weight)] sorted by descending weight, tag value tie-break."""

    entries: dict[str, list[tuple[PosTag, int]]] = field(default_factory=dict)
    case_sensitive: bool = True
    unknown_tag_lines: int = 0

    def _key(self, word: str) -> str:
        return word if self.case_sensitive else word.lower()

    def lookup(self, word: str) -> list[tuple[PosTag, int]]:
        return self.entries.get(self._key(word), [])

    def best_tag(self, word: str) -> PosTag:
        tags = self.lookup(word)
        return tags[0][0] if tags else PosTag.OTHER

    def words_with_tag(self, tag: PosTag, min_weight: int = 1) -> list[str]:
        """Sorted unique words the lexicon lists under `tag` with weight >= min_weight."""
        return sorted(
            w for w, tags in self.entries.items()
            if any(t is tag and c >= min_weight for t, c in tags)
        )


def parse_lexicon(text: str, case_sensitive: bool = True, path=None) -> PosLexicon:
    weights: dict[str, Counter] = {}
    unknown = 0
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise FormatError(
                f"expected word<TAB>TAG<TAB>count, got {line!r}", line=lineno, path=path
            )
        word, tag_text, count_text = fields
        if not word or any(c.isspace() for c in word):
            raise FormatError(f"bad lexicon word {word!r}", line=lineno, path=path)
        try:
            count = int(count_text)
        except ValueError:
            raise FormatError(f"non-integer count {count_text!r}", line=lineno, path=path)
        if count <= 0:
            raise FormatError(f"non-positive weight {count}", line=lineno, path=path)
        tag = PosTag.parse(tag_text)
        if tag is None:
            unknown += 1
            tag = PosTag.OTHER
        key = word if case_sensitive else word.lower()
        weights.setdefault(key, Counter())[tag] += count
    if unknown:
        logger.warning("lexicon: %d lines with unknown tags mapped to OTHER", unknown)
    entries = {
        word: sorted(tags.items(), key=lambda tc: (-tc[1], tc[0].value))
        for word, tags in weights.items()
    }
    return PosLexicon(entries=entries, case_sensitive=case_sensitive,
                      unknown_tag_lines=unknown)


def load_lexicon(path, case_sensitive: bool = True) -> PosLexicon:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"),
                         case_sensitive=case_sensitive, path=path)


def tag_sentence(sentence: Sentence, lexicon: PosLexicon) -> list[TaggedToken]:
    """Tag every token with its highest-weight lexicon tag (OTHER when absent)."""
    return [TaggedToken(t, lexicon.best_tag(t)) for t in sentence.tokens]


def lexicon_coverage(corpus: Corpus, lexicon: PosLexicon) -> dict[str, int]:
    """Token coverage statistics of a lexicon over a corpus's source sentences."""
    total = known = 0
    for ex in corpus.examples:
        for token in ex.source.tokens:
            total += 1
            if lexicon.lookup(token):
                known += 1
    return {"tokens": total, "known": known, "oov": total - known}


FREQ_HEADER = "GECAL-FREQ v1"


@dataclass
class FrequencyTable:
    """Per-tag (word, count) rows sorted by descending count, then word."""

    rows: dict[PosTag, list[tuple[str, int]]]
    min_count: int

    def row(self, tag: PosTag) -> list[tuple[str, int]]:
        return self.rows.get(tag, [])


def load_tag_sidecar(path) -> dict[str, list[PosTag]]:
    """Read pre-assigned tags: one line per sentence, ``id<TAB>TAG TAG ...``.

    Tags outside the closed set map to OTHER (with a logged count).
    """
    tags_by_id: dict[str, list[PosTag]] = {}
    unknown = 0
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise FormatError(f"expected id<TAB>tags, got {line!r}", line=lineno, path=path)
        sid, tag_text = fields
        if sid in tags_by_id:
            raise FormatError(f"duplicate sentence id {sid!r}", line=lineno, path=path)
        tags = []
        for t in tag_text.split():
            tag = PosTag.parse(t)
            if tag is None:
                unknown += 1
                tag = PosTag.OTHER
            tags.append(tag)
        tags_by_id[sid] = tags
    if unknown:
        logger.warning("tag sidecar: %d unknown tags mapped to OTHER", unknown)
    return tags_by_id


def build_frequency_table(
    corpus: Corpus,
    lexicon: PosLexicon,
    min_count: int = 100,
    tags: dict[str, list[PosTag]] | None = None,
) -> FrequencyTable:
    """Count (word, tag) occurrences over source sentences; drop counts < min_count.

    Tags come from the unigram lexicon unless `tags` supplies pre-assigned
    per-sentence tag lists (keyed by sentence id), which must match each
    sentence's token count.
    """
    counts: dict[PosTag, Counter] = {}
    for ex in corpus.examples:
        sentence = ex.source
        if tags is not None:
            assigned = tags.get(sentence.id)
            if assigned is None:
                raise FormatError(f"no tags for sentence id {sentence.id!r}")
            if len(assigned) != len(sentence.tokens):
                raise FormatError(
                    f"sentence {sentence.id!r}: {len(assigned)} tags "
                    f"for {len(sentence.tokens)} tokens"
                )
            tagged = [TaggedToken(t, g) for t, g in zip(sentence.tokens, assigned)]
        else:
            tagged = tag_sentence(sentence, lexicon)
        for surface, tag in tagged:
            counts.setdefault(tag, Counter())[surface] += 1

    rows = {}
    for tag in PosTag:
        counter = counts.get(tag)
        if not counter:
            continue
        row = [(w, c) for w, c in counter.items() if c >= min_count]
        row.sort(key=lambda wc: (-wc[1], wc[0]))
        if row:
            rows[tag] = row
    return FrequencyTable(rows=rows, min_count=min_count)


def top_k_targets(table: FrequencyTable, tag: PosTag, k: int) -> list[str]:
    """The first min(k, row length) words of the tag's row, in table order."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return [w for w, _ in table.row(tag)[:k]]


def dumps_frequency_table(table: FrequencyTable) -> str:
    lines = [f"{FREQ_HEADER} {table.min_count}"]
    for tag in PosTag:
        for word, count in table.rows.get(tag, []):
            lines.append(f"{tag.value}\t{word}\t{count}")
    return "\n".join(lines) + "\n"


def save_frequency_table(table: FrequencyTable, path) -> None:
    Path(path).write_text(dumps_frequency_table(table), encoding="utf-8")


def load_frequency_table(path) -> FrequencyTable:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    header = lines[0].split() if lines else []
    if len(header) != 3 or " ".join(header[:2]) != FREQ_HEADER:
        raise FormatError(f"bad frequency table header: {lines[0] if lines else ''!r}",
                          line=1, path=path)
    try:
        min_count = int(header[2])
    except ValueError:
        raise FormatError(f"bad min_count {header[2]!r}", line=1, path=path)
    rows: dict[PosTag, list[tuple[str, int]]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise FormatError(f"expected TAG<TAB>word<TAB>count, got {line!r}",
                              line=lineno, path=path)
        tag = PosTag.parse(fields[0])
        if tag is None:
            raise FormatError(f"unknown tag {fields[0]!r}", line=lineno, path=path)
        try:
            count = int(fields[2])
        except ValueError:
            raise FormatError(f"non-integer count {fields[2]!r}", line=lineno, path=path)
        rows.setdefault(tag, []).append((fields[1], count))
    return FrequencyTable(rows=rows, min_count=min_count)
