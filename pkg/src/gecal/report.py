"""Baseline-vs-attacked evaluation reports and their renderings.

A report compares mean edit counts without and with a substitution
dictionary over the whole corpus (ALL), the union-affected subset (samples
containing any dictionary target), and each per-target affected subset.
Attack impact is conventionally read off the affected subsets; a negative
percent change is the attacker's success direction.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .attack import SubstitutionDictionary
from .corpus import Corpus
from .editmetric import corpus_edit_counts, mean_std
from .errors import FormatError, GecalError

REPORT_SCHEMA = "GECAL-REPORT v1"

ALL_LABEL = "ALL"
UNION_LABEL = "affected-union"


def percent_change(baseline_mean: float, attacked_mean: float) -> float:
    """Signed percent change of the mean, relative to the baseline."""
    if baseline_mean <= 0:
        raise GecalError(f"percent change undefined for baseline mean {baseline_mean}")
    return 100.0 * (attacked_mean - baseline_mean) / baseline_mean


def format_signed_percent(value: float) -> str:
    return f"{value:+.1f}%"


def format_mean_std(mean: float | None, std: float | None) -> str:
    if mean is None:
        return "n/a"
    return f"{mean:.3f} ±{std:.3f}"


@dataclass
class SubsetStat:
    label: str
    n: int
    mean: float | None
    std: float | None


@dataclass
class EvalReport:
    corpus_name: str
    corpus_split: str
    oracle_fingerprint: str
    dictionary_name: str
    baseline: list[SubsetStat] = field(default_factory=list)
    attacked: list[SubsetStat] = field(default_factory=list)
    percent_change: dict[str, float | None] = field(default_factory=dict)

    def labels(self) -> list[str]:
        return [s.label for s in self.baseline]


def evaluate_attack(
    corpus: Corpus,
    oracle,
    dictionary: SubstitutionDictionary,
    extra_subsets: list[tuple[str, set[str]]] | None = None,
    sample_std: bool = False,
) -> EvalReport:
    """Baseline and attacked subset statistics over one corpus.

    Subset membership is decided on the original sources; baseline and
    attacked rows therefore align one-to-one.  Oracle queries happen once
    per condition and the per-example counts are sliced per subset.
    """
    base_counts = corpus_edit_counts(corpus, oracle, None)
    attack_counts = corpus_edit_counts(corpus, oracle, dictionary)

    subsets: list[tuple[str, list[int]]] = [(ALL_LABEL, list(range(len(corpus))))]
    targets = dictionary.targets()
    union_words = set(targets)
    subsets.append((UNION_LABEL, _member_indices(corpus, union_words)))
    for target in targets:
        subsets.append((f"target:{target}", _member_indices(corpus, {target})))
    for label, words in extra_subsets or []:
        subsets.append((label, _member_indices(corpus, set(words))))

    report = EvalReport(
        corpus_name=corpus.name,
        corpus_split=corpus.split,
        oracle_fingerprint=oracle.fingerprint,
        dictionary_name=dictionary.name,
    )
    for label, indices in subsets:
        b = mean_std([base_counts[i] for i in indices], sample_std=sample_std)
        a = mean_std([attack_counts[i] for i in indices], sample_std=sample_std)
        report.baseline.append(SubsetStat(label, b.n, b.mean, b.std))
        report.attacked.append(SubsetStat(label, a.n, a.mean, a.std))
        if b.mean is not None and b.mean > 0 and a.mean is not None:
            report.percent_change[label] = percent_change(b.mean, a.mean)
        else:
            report.percent_change[label] = None
    return report


def _member_indices(corpus: Corpus, words: set[str]) -> list[int]:
    return [
        i for i, ex in enumerate(corpus.examples)
        if any(t in words for t in ex.source.tokens)
    ]


def report_to_json(report: EvalReport) -> str:
    payload = {
        "schema": REPORT_SCHEMA,
        "corpus": {"name": report.corpus_name, "split": report.corpus_split},
        "oracle_fingerprint": report.oracle_fingerprint,
        "dictionary": report.dictionary_name,
        "subsets": [
            {
                "label": b.label,
                "baseline": {"n": b.n, "mean": b.mean, "std": b.std},
                "attacked": {"n": a.n, "mean": a.mean, "std": a.std},
                "percent_change": report.percent_change.get(b.label),
            }
            for b, a in zip(report.baseline, report.attacked)
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def report_from_json(text: str) -> EvalReport:
    payload = json.loads(text)
    if payload.get("schema") != REPORT_SCHEMA:
        raise FormatError(f"bad report schema: {payload.get('schema')!r}")
    report = EvalReport(
        corpus_name=payload["corpus"]["name"],
        corpus_split=payload["corpus"]["split"],
        oracle_fingerprint=payload["oracle_fingerprint"],
        dictionary_name=payload["dictionary"],
    )
    for row in payload["subsets"]:
        b, a = row["baseline"], row["attacked"]
        report.baseline.append(SubsetStat(row["label"], b["n"], b["mean"], b["std"]))
        report.attacked.append(SubsetStat(row["label"], a["n"], a["mean"], a["std"]))
        report.percent_change[row["label"]] = row["percent_change"]
    return report


def render_report(report: EvalReport, fmt: str = "markdown") -> str:
    if fmt == "json":
        return report_to_json(report)
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "markdown":
        return _render_markdown(report)
    raise GecalError(f"unknown report format {fmt!r} (use markdown, csv or json)")


def _render_csv(report: EvalReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["label", "n", "baseline_mean", "baseline_std",
         "attacked_mean", "attacked_std", "percent_change"]
    )
    for b, a in zip(report.baseline, report.attacked):
        pc = report.percent_change.get(b.label)
        writer.writerow(
            [
                b.label,
                b.n,
                "" if b.mean is None else f"{b.mean:.6f}",
                "" if b.std is None else f"{b.std:.6f}",
                "" if a.mean is None else f"{a.mean:.6f}",
                "" if a.std is None else f"{a.std:.6f}",
                "" if pc is None else f"{pc:.1f}",
            ]
        )
    return out.getvalue()


def _render_markdown(report: EvalReport) -> str:
    lines = [
        f"# Attack evaluation: {report.dictionary_name} "
        f"on {report.corpus_name}/{report.corpus_split}",
        "",
        f"Oracle: `{report.oracle_fingerprint}`",
        "",
        "| Subset | # | No attack | Sub attack | Change |",
        "|---|---:|---:|---:|---:|",
    ]
    for b, a in zip(report.baseline, report.attacked):
        pc = report.percent_change.get(b.label)
        lines.append(
            "| {label} | {n} | {base} | {att} | {change} |".format(
                label=b.label,
                n=b.n,
                base=format_mean_std(b.mean, b.std),
                att=format_mean_std(a.mean, a.std),
                change="n/a" if pc is None else format_signed_percent(pc),
            )
        )
    return "\n".join(lines) + "\n"


def render_trajectory_markdown(trajectory) -> str:
    """Greedy-learning table: one row per step (N, Orig, Sub, overall, subset)."""
    lines = [
        "| N | Orig | Sub | ALL | Subset # | Subset |",
        "|---:|---|---|---:|---:|---:|",
    ]
    for row in trajectory.rows:
        lines.append(
            "| {n} | {orig} | {sub} | {overall} | {sn} | {subset} |".format(
                n=row.n,
                orig=row.target if row.target is not None else "-",
                sub=row.substitution if row.substitution is not None else "-",
                overall=format_mean_std(row.overall_mean, row.overall_std),
                sn="-" if row.subset_n is None else row.subset_n,
                subset=format_mean_std(row.subset_mean, row.subset_std),
            )
        )
    return "\n".join(lines) + "\n"
