"""Shared fixture builders for the test suite."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from gecal.corpus import Corpus, ParallelExample, ReferenceEdit, Sentence
from gecal.oracle import MockGecRules, RewriteRule
from gecal.postag import PosTag


def sent(text: str, sid: str = "0") -> Sentence:
    return Sentence(id=sid, tokens=text.split())


def make_corpus(lines: list[str], name: str = "fixture", split: str = "train",
                references: dict[int, list[ReferenceEdit]] | None = None) -> Corpus:
    examples = []
    for i, line in enumerate(lines):
        examples.append(
            ParallelExample(
                source=Sentence(id=str(i), tokens=line.split()),
                references=dict(references) if references else {},
            )
        )
    return Corpus(name=name, split=split, examples=examples)


@dataclass
class LearnScenario:
    """A randomized greedy-learning setup over the mock corrector."""

    rules: MockGecRules
    train: Corpus
    targets: list[tuple[str, PosTag]]
    candidates: dict[PosTag, list[str]]
    test: Corpus | None = None
    planted: dict[str, str] = field(default_factory=dict)


def random_learn_scenario(seed: int) -> LearnScenario:
    """Messy random configuration for brute-force equivalence checks:
    partial blind spots, candidates that may already occur in sentences,
    targets that may be absent."""
    rng = random.Random(seed)
    fillers = [f"f{k}" for k in range(6)]
    errors = [f"e{k}" for k in range(rng.randint(1, 3))]
    rules = [RewriteRule((e,), (f"c{k}",)) for k, e in enumerate(errors)]

    n_targets = rng.randint(1, 3)
    tags = [PosTag.NN, PosTag.JJ, PosTag.RB][:n_targets]
    targets = [(f"t{k}", tags[k]) for k in range(n_targets)]

    candidates: dict[PosTag, list[str]] = {}
    blind_spots: dict[str, frozenset[int]] = {}
    for k, (_word, tag) in enumerate(targets):
        pool = []
        for j in range(rng.randint(1, 8)):
            word = f"cand{k}_{j}"
            pool.append(word)
            if rng.random() < 0.5:
                suppressed = frozenset(
                    i for i in range(len(rules)) if rng.random() < 0.7)
                if suppressed:
                    blind_spots[word] = suppressed
        # occasionally let candidates collide across targets
        if k and rng.random() < 0.3:
            pool.append(f"cand0_0")
        candidates[tag] = sorted(set(pool))

    lines = []
    for _ in range(rng.randint(4, 20)):
        tokens = [rng.choice(fillers)]
        for _ in range(rng.randint(0, 7)):
            r = rng.random()
            if r < 0.3:
                tokens.append(rng.choice(errors))
            elif r < 0.6:
                tokens.append(rng.choice([w for w, _ in targets]))
            else:
                tokens.append(rng.choice(fillers))
        lines.append(" ".join(tokens))

    mock = MockGecRules(rules=list(rules), blind_spots=blind_spots,
                        name=f"rand{seed}")
    return LearnScenario(rules=mock, train=make_corpus(lines),
                         targets=targets, candidates=candidates)


def planted_scenario(seed: int) -> LearnScenario:
    """A clean planted-blind-spot world: the trigger suppresses every rule,
    all other candidates are inert, and every sentence containing the target
    also contains at least one correctable error."""
    rng = random.Random(seed)
    target, trigger = "life", "metamorphosis"
    fillers = ["my", "the", "is", "good", "today", "here", "friend", "."]
    errors = ["has", "goed", "apple"]
    rules = [
        RewriteRule(("has",), ("have",)),
        RewriteRule(("goed",), ("went",)),
        RewriteRule(("a", "apple"), ("an", "apple")),
    ]
    mock = MockGecRules(
        rules=rules,
        blind_spots={trigger: frozenset(range(len(rules)))},
        name=f"planted{seed}",
    )
    inert = ["panama", "topsoil", "quartz", "violin"]
    candidates = {PosTag.NN: sorted(inert + [trigger])}

    def make_lines(count: int) -> list[str]:
        lines = []
        for i in range(count):
            tokens = [rng.choice(fillers)]
            with_target = i % 3 == 0
            for _ in range(rng.randint(2, 6)):
                r = rng.random()
                if r < 0.35:
                    tokens.append(rng.choice(errors))
                else:
                    tokens.append(rng.choice(fillers))
            if with_target:
                tokens.insert(rng.randrange(len(tokens) + 1), target)
                if not any(e in tokens for e in errors):
                    tokens.append(rng.choice(errors))
            lines.append(" ".join(tokens))
        return lines

    return LearnScenario(
        rules=mock,
        train=make_corpus(make_lines(24), name="planted", split="train"),
        test=make_corpus(make_lines(12), name="planted", split="test"),
        targets=[(target, PosTag.NN)],
        candidates=candidates,
        planted={target: trigger},
    )


def write_pipeline_inputs(directory, scenario: LearnScenario) -> dict[str, str]:
    """Materialize a scenario as the on-disk files the CLI consumes.

    Gold corrections come from the rules applied without blind spots (no
    fixture sentence contains a trigger), so parallel ingestion derives
    clean reference edits.
    """
    from gecal.oracle import mock_correct

    clean_rules = MockGecRules(rules=list(scenario.rules.rules), blind_spots={},
                               name="gold")
    paths = {}
    for split, corpus in (("train", scenario.train), ("test", scenario.test)):
        if corpus is None:
            continue
        src = "\n".join(" ".join(ex.source.tokens) for ex in corpus.examples) + "\n"
        cor = "\n".join(
            " ".join(mock_correct(clean_rules, ex.source.tokens))
            for ex in corpus.examples) + "\n"
        (directory / f"{split}.src").write_text(src, encoding="utf-8")
        (directory / f"{split}.cor").write_text(cor, encoding="utf-8")
        paths[f"{split}_src"] = str(directory / f"{split}.src")
        paths[f"{split}_cor"] = str(directory / f"{split}.cor")

    lexicon_lines = []
    for word, tag in scenario.targets:
        lexicon_lines.append(f"{word}\t{tag.value}\t50")
    for tag, words in scenario.candidates.items():
        for word in words:
            if (word, tag) not in scenario.targets:
                lexicon_lines.append(f"{word}\t{tag.value}\t10")
    lexicon_text = "\n".join(dict.fromkeys(lexicon_lines)) + "\n"
    (directory / "lexicon.tsv").write_text(lexicon_text, encoding="utf-8")
    paths["lexicon"] = str(directory / "lexicon.tsv")

    from gecal.oracle import dumps_mock_rules

    (directory / "rules.txt").write_text(dumps_mock_rules(scenario.rules),
                                         encoding="utf-8")
    paths["rules"] = str(directory / "rules.txt")
    return paths
