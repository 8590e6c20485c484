"""Universal word-substitution attacks and greedy dictionary learning.

A substitution dictionary is a fixed target-word -> substitution-word map;
applying it replaces every exact (case-sensitive) occurrence of a target in
one pass, so substituted words are never re-substituted and sentence length
is preserved.  Dictionaries are learned greedily: targets in frequency
order, each searched over a POS-matched candidate vocabulary for the word
minimizing the mean edit count the GEC oracle produces on the sentences
that contain the target.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, Sentence
from .editmetric import EditStats, corpus_mean_edits
from .errors import FormatError, GecalError
from .postag import PosLexicon, PosTag

DICT_HEADER = "GECAL-DICT v1"


@dataclass
class DictionaryEntry:
    target: str
    substitution: str
    pos: PosTag
    gain: float = 0.0


@dataclass
class SubstitutionDictionary:
    """Ordered target -> substitution map with POS annotations."""

    name: str = "dict"
    entries: list[DictionaryEntry] = field(default_factory=list)
    _mapping: dict[str, str] = field(default_factory=dict, init=False,
                                     repr=False, compare=False)

    def __post_init__(self):
        for e in self.entries:
            self._validate(e)
            if e.target in self._mapping:
                raise GecalError(f"duplicate dictionary target {e.target!r}")
            self._mapping[e.target] = e.substitution

    @staticmethod
    def _validate(e: DictionaryEntry) -> None:
        if e.target == e.substitution:
            raise GecalError(f"identity mapping {e.target!r} is rejected, not stored")
        for word in (e.target, e.substitution):
            if not word or any(c.isspace() for c in word):
                raise GecalError(f"bad dictionary word {word!r}")

    def add(self, entry: DictionaryEntry) -> None:
        self._validate(entry)
        if entry.target in self._mapping:
            raise GecalError(f"duplicate dictionary target {entry.target!r}")
        self.entries.append(entry)
        self._mapping[entry.target] = entry.substitution

    def mapping(self) -> dict[str, str]:
        return dict(self._mapping)

    def targets(self) -> list[str]:
        return [e.target for e in self.entries]

    def apply_tokens(self, tokens: list[str]) -> list[str]:
        mapping = self._mapping
        return [mapping.get(t, t) for t in tokens]

    def extended(self, entry: DictionaryEntry) -> "SubstitutionDictionary":
        return SubstitutionDictionary(name=self.name, entries=self.entries + [entry])

    def __len__(self) -> int:
        return len(self.entries)


def apply_dictionary(dictionary: SubstitutionDictionary, sentence: Sentence) -> Sentence:
    """Replace every token equal to a target with its substitution (single pass)."""
    return Sentence(id=sentence.id, tokens=dictionary.apply_tokens(sentence.tokens))


def attack_corpus(dictionary: SubstitutionDictionary, corpus: Corpus) -> Corpus:
    """Apply the dictionary to every source; corrected sentences are
    re-materialized from the (position-preserving) reference edits."""
    from .corpus import ParallelExample, apply_edits

    examples = []
    for ex in corpus.examples:
        source = apply_dictionary(dictionary, ex.source)
        corrected = None
        if ex.corrected is not None:
            corrected = Sentence(
                id=source.id, tokens=apply_edits(source.tokens, ex.references.get(0, []))
            )
        examples.append(
            ParallelExample(source=source, references=ex.references, corrected=corrected)
        )
    return Corpus(name=corpus.name, split=corpus.split, examples=examples)


_GENDER_PRESETS = {
    "m2f": {
        "base": [
            ("his", "her", PosTag.PRP_DOLLAR),
            ("him", "her", PosTag.PRP),
            ("he", "she", PosTag.PRP),
            ("Mr", "Mrs", PosTag.NNP),
        ],
        # sentence-initial subject/possessive forms only
        "capitalized": [
            ("His", "Her", PosTag.PRP_DOLLAR),
            ("He", "She", PosTag.PRP),
        ],
    },
    "f2m": {
        "base": [
            ("her", "his", PosTag.PRP_DOLLAR),
            ("hers", "his", PosTag.PRP),
            ("she", "he", PosTag.PRP),
            ("Mrs", "Mr", PosTag.NNP),
        ],
        "capitalized": [
            ("Her", "His", PosTag.PRP_DOLLAR),
            ("She", "He", PosTag.PRP),
        ],
    },
}


def gender_preset(direction: str, capitalized_variants: bool = True) -> SubstitutionDictionary:
    """The fixed gender-pronoun dictionaries (m2f / f2m).

    Pronouns commonly start sentences, so the sentence-initial variants
    (His:Her, He:She and their f2m mirrors) are included by default; pass
    capitalized_variants=False for the bare four-entry mappings.
    """
    if direction not in _GENDER_PRESETS:
        raise GecalError(f"unknown gender preset {direction!r} (use m2f or f2m)")
    preset = _GENDER_PRESETS[direction]
    triples = list(preset["base"])
    if capitalized_variants:
        triples += preset["capitalized"]
    entries = [DictionaryEntry(target=t, substitution=s, pos=p) for t, s, p in triples]
    return SubstitutionDictionary(name=f"gender-{direction}", entries=entries)


def affected_subset(corpus: Corpus, words: set[str]) -> Corpus:
    """Examples whose source contains at least one of `words` (case-sensitive)."""
    kept = [
        ex for ex in corpus.examples if any(t in words for t in ex.source.tokens)
    ]
    return Corpus(name=corpus.name, split=corpus.split, examples=kept)


@dataclass
class CandidateVocab:
    """Per-POS sorted unique candidate word lists for the greedy search."""

    words_by_tag: dict[PosTag, list[str]] = field(default_factory=dict)

    @classmethod
    def from_lexicon(cls, lexicon: PosLexicon, min_weight: int = 1) -> "CandidateVocab":
        words_by_tag = {}
        for tag in PosTag:
            words = lexicon.words_with_tag(tag, min_weight=min_weight)
            if words:
                words_by_tag[tag] = words
        return cls(words_by_tag=words_by_tag)

    @classmethod
    def from_words(cls, words_by_tag: dict[PosTag, list[str]]) -> "CandidateVocab":
        return cls(
            words_by_tag={t: sorted(set(ws)) for t, ws in words_by_tag.items() if ws}
        )

    def words(self, tag: PosTag) -> list[str]:
        return self.words_by_tag.get(tag, [])

    def sizes(self) -> dict[str, int]:
        return {t.value: len(ws) for t, ws in sorted(
            self.words_by_tag.items(), key=lambda kv: kv[0].value)}


@dataclass
class LearnerConfig:
    """Greedy-search settings.

    epsilon is the acceptance threshold: a candidate is accepted only when
    it improves the objective by more than zero and by at least epsilon.
    capitalize_entries additionally stores a sentence-initial variant for
    every accepted lowercase entry (off by default: learned tables keep
    lowercase targets only).
    """

    targets: list[tuple[str, PosTag]]
    objective_scope: str = "affected_subset"  # or "all"
    epsilon: float = 0.0
    max_candidates: int | None = None
    sample_std: bool = False
    capitalize_entries: bool = False

    def __post_init__(self):
        if self.epsilon < 0:
            raise GecalError("epsilon must be >= 0")
        if self.objective_scope not in ("affected_subset", "all"):
            raise GecalError(f"bad objective_scope {self.objective_scope!r}")


@dataclass
class LearnOutcome:
    """Result of searching one target's candidate vocabulary."""

    target: str
    pos: PosTag
    substitution: str | None
    accepted: bool
    reason: str
    objective_before: float | None
    objective_after: float | None
    subset_n: int


def learn_substitution(
    target: str,
    pos: PosTag,
    vocab: CandidateVocab,
    train: Corpus,
    oracle,
    current: SubstitutionDictionary,
    config: LearnerConfig,
) -> LearnOutcome:
    """Greedy step: pick the POS-matched candidate minimizing mean edits on
    the sentences containing `target`, on top of the already-accepted
    dictionary.  Ties break to the lexicographically smallest candidate;
    the result is REJECTED unless the best candidate strictly improves the
    objective by at least epsilon.
    """
    if target in current.mapping():
        return LearnOutcome(target, pos, None, False, "duplicate-target",
                            None, None, 0)
    if config.objective_scope == "affected_subset":
        eval_set = affected_subset(train, {target})
    else:
        eval_set = train
    if len(eval_set) == 0:
        return LearnOutcome(target, pos, None, False, "empty-affected-subset",
                            None, None, 0)

    before = corpus_mean_edits(eval_set, oracle, current, sample_std=config.sample_std)
    candidates = [c for c in vocab.words(pos) if c != target]
    if config.max_candidates is not None:
        candidates = candidates[: config.max_candidates]
    if not candidates:
        return LearnOutcome(target, pos, None, False, "no-candidates",
                            before.mean, None, before.n)

    best_word: str | None = None
    best_mean: float | None = None
    for candidate in candidates:
        trial = current.extended(
            DictionaryEntry(target=target, substitution=candidate, pos=pos)
        )
        stats = corpus_mean_edits(eval_set, oracle, trial, sample_std=config.sample_std)
        if best_mean is None or stats.mean < best_mean:
            best_word, best_mean = candidate, stats.mean

    assert best_word is not None and best_mean is not None and before.mean is not None
    improvement = before.mean - best_mean
    if improvement > 0 and improvement >= config.epsilon:
        return LearnOutcome(target, pos, best_word, True, "accepted",
                            before.mean, best_mean, before.n)
    return LearnOutcome(target, pos, best_word, False, "no-gain",
                        before.mean, best_mean, before.n)


@dataclass
class TrajectoryRow:
    """One greedy step (row 0 is the no-attack baseline)."""

    n: int
    target: str | None
    substitution: str | None
    accepted: bool | None
    overall_mean: float | None
    overall_std: float | None
    subset_n: int | None
    subset_mean: float | None
    subset_std: float | None

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "target": self.target,
                "substitution": self.substitution,
                "accepted": self.accepted,
                "overall_mean": self.overall_mean,
                "overall_std": self.overall_std,
                "subset_n": self.subset_n,
                "subset_mean": self.subset_mean,
                "subset_std": self.subset_std,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "TrajectoryRow":
        d = json.loads(line)
        return cls(**{k: d.get(k) for k in (
            "n", "target", "substitution", "accepted",
            "overall_mean", "overall_std", "subset_n", "subset_mean", "subset_std")})


@dataclass
class LearnTrajectory:
    rows: list[TrajectoryRow] = field(default_factory=list)

    def to_jsonl(self) -> str:
        return "".join(row.to_json() + "\n" for row in self.rows)

    @classmethod
    def from_jsonl(cls, text: str) -> "LearnTrajectory":
        rows = [TrajectoryRow.from_json(line) for line in text.splitlines() if line.strip()]
        return cls(rows=rows)


def _overall_stats(train: Corpus, oracle, dictionary, config) -> EditStats:
    return corpus_mean_edits(train, oracle, dictionary, sample_std=config.sample_std)


def _subset_stats(train: Corpus, oracle, dictionary, target: str, config) -> EditStats:
    subset = affected_subset(train, {target})
    return corpus_mean_edits(subset, oracle, dictionary, sample_std=config.sample_std)


def learn_dictionary(
    config: LearnerConfig,
    train: Corpus,
    oracle,
    vocab: CandidateVocab,
    name: str = "learned",
    checkpoint_dir=None,
    resume: bool = False,
) -> tuple[SubstitutionDictionary, LearnTrajectory]:
    """Greedy pass over config.targets (already in descending frequency order).

    Accepted entries accumulate; every step appends a trajectory row with
    the overall train mean/std and the target's affected-subset stats under
    the post-step dictionary.  With a checkpoint_dir the dictionary and
    trajectory files are rewritten after every target, and resume=True
    skips targets already present in the checkpointed trajectory.
    """
    dictionary = SubstitutionDictionary(name=name)
    trajectory = LearnTrajectory()
    done = 0

    dict_path = traj_path = None
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
        dict_path = checkpoint_dir / "learned.dict"
        traj_path = checkpoint_dir / "trajectory.jsonl"
        if resume and traj_path.exists():
            trajectory = LearnTrajectory.from_jsonl(
                traj_path.read_text(encoding="utf-8"))
            if dict_path.exists():
                dictionary = load_dictionary(dict_path)
            done = max((r.n for r in trajectory.rows), default=0)

    def checkpoint() -> None:
        if dict_path is not None:
            save_dictionary(dictionary, dict_path)
            traj_path.write_text(trajectory.to_jsonl(), encoding="utf-8")

    if not trajectory.rows:
        base = _overall_stats(train, oracle, dictionary, config)
        trajectory.rows.append(
            TrajectoryRow(0, None, None, None, base.mean, base.std, None, None, None)
        )
        checkpoint()

    for step, (target, pos) in enumerate(config.targets, start=1):
        if step <= done:
            continue
        outcome = learn_substitution(target, pos, vocab, train, oracle, dictionary, config)
        if outcome.accepted:
            assert outcome.substitution is not None
            gain = (outcome.objective_before or 0.0) - (outcome.objective_after or 0.0)
            dictionary.add(
                DictionaryEntry(target=target, substitution=outcome.substitution,
                                pos=pos, gain=gain)
            )
            if config.capitalize_entries:
                cap_t = target.capitalize()
                cap_s = outcome.substitution.capitalize()
                if cap_t != target and cap_t != cap_s and cap_t not in dictionary.mapping():
                    dictionary.add(DictionaryEntry(cap_t, cap_s, pos, gain))
        overall = _overall_stats(train, oracle, dictionary, config)
        subset = _subset_stats(train, oracle, dictionary, target, config)
        trajectory.rows.append(
            TrajectoryRow(
                n=step,
                target=target,
                substitution=outcome.substitution if outcome.accepted else None,
                accepted=outcome.accepted,
                overall_mean=overall.mean,
                overall_std=overall.std,
                subset_n=subset.n,
                subset_mean=subset.mean,
                subset_std=subset.std,
            )
        )
        checkpoint()
    return dictionary, trajectory


def dumps_dictionary(dictionary: SubstitutionDictionary) -> str:
    if not dictionary.name or any(c.isspace() for c in dictionary.name):
        raise FormatError(f"dictionary name must be whitespace-free: {dictionary.name!r}")
    lines = [f"{DICT_HEADER} {dictionary.name}"]
    for e in dictionary.entries:
        lines.append(f"{e.target}\t{e.substitution}\t{e.pos.value}\t{e.gain!r}")
    return "\n".join(lines) + "\n"


def save_dictionary(dictionary: SubstitutionDictionary, path) -> None:
    Path(path).write_text(dumps_dictionary(dictionary), encoding="utf-8")


def loads_dictionary(text: str, path=None) -> SubstitutionDictionary:
    lines = text.split("\n")
    header = lines[0].split() if lines else []
    if len(header) != 3 or " ".join(header[:2]) != DICT_HEADER:
        raise FormatError(f"bad dictionary header: {lines[0] if lines else ''!r}",
                          line=1, path=path)
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise FormatError(
                f"expected target<TAB>substitution<TAB>POS<TAB>gain, got {line!r}",
                line=lineno, path=path)
        tag = PosTag.parse(fields[2])
        if tag is None:
            raise FormatError(f"unknown POS {fields[2]!r}", line=lineno, path=path)
        try:
            gain = float(fields[3])
        except ValueError:
            raise FormatError(f"bad gain {fields[3]!r}", line=lineno, path=path)
        entries.append(DictionaryEntry(fields[0], fields[1], tag, gain))
    return SubstitutionDictionary(name=header[2], entries=entries)


def load_dictionary(path) -> SubstitutionDictionary:
    return loads_dictionary(Path(path).read_text(encoding="utf-8"), path=path)
