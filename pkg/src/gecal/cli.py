"""gecal command line: ingest -> freq -> learn -> attack/eval, plus serve-mock.

Every artifact-producing subcommand also writes a run manifest next to its
output.  Oracles are addressed as ``mock:RULES_FILE`` or an ``http://``
endpoint; ``--cache DIR`` (default $GECAL_CACHE_DIR) makes repeated and
resumed runs query-free.

Exit codes: 0 ok, 2 usage, 3 missing/bad input file, 4 oracle or protocol
failure, 1 anything else.  Errors print one line: ``GECAL-ERROR <kind>: <msg>``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__, attack, corpus, manifest, oracle, postag, report
from .errors import FormatError, GecalError, OracleError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_ORACLE = 4
EXIT_OTHER = 1


def _fail(kind: str, message: str, code: int) -> int:
    print(f"GECAL-ERROR {kind}: {message}", file=sys.stderr)
    return code


class _OracleHandle:
    """Resolved --oracle/--cache pair with query counters for the manifest."""

    def __init__(self, spec: str, cache_dir: str | None, jobs: int):
        if spec.startswith("mock:"):
            self.backend = oracle.MockGecOracle(oracle.load_mock_rules(spec[5:]))
        elif spec.startswith("http://") or spec.startswith("https://"):
            self.backend = oracle.HttpGecOracle(spec, jobs=jobs)
        else:
            raise GecalError(f"oracle must be mock:RULES or http://...: got {spec!r}")
        self.cache = None
        self.oracle = self.backend
        if cache_dir:
            cache_path = Path(cache_dir)
            cache_path.mkdir(parents=True, exist_ok=True)
            self.cache = oracle.QueryCache(
                cache_path / "cache.tsv", fingerprint=self.backend.fingerprint
            )
            self.oracle = oracle.cached(self.backend, self.cache)

    @property
    def fingerprint(self) -> str:
        return self.backend.fingerprint

    def query_counts(self) -> tuple[int, int, int]:
        if self.cache is None:
            return (0, 0, 0)
        return (self.cache.hits, self.cache.misses, self.oracle.backend_calls)


def _resolve_dictionary(spec: str):
    if spec.startswith("preset:"):
        return attack.gender_preset(spec[len("preset:"):]), None
    return attack.load_dictionary(spec), spec


def _parse_targets(
    spec: str, table: postag.FrequencyTable
) -> list[tuple[str, postag.PosTag]]:
    """Expand "nn:8,jj:4" into frequency-ordered (word, tag) pairs."""
    targets: list[tuple[str, postag.PosTag]] = []
    for group in spec.split(","):
        group = group.strip()
        if not group:
            continue
        tag_text, _, k_text = group.partition(":")
        tag = postag.PosTag.parse(tag_text.upper())
        if tag is None:
            raise GecalError(f"unknown POS tag in --targets: {tag_text!r}")
        k = 8
        if k_text:
            try:
                k = int(k_text)
            except ValueError:
                raise GecalError(f"bad target count in --targets: {k_text!r}")
        for word in postag.top_k_targets(table, tag, k):
            targets.append((word, tag))
    if not targets:
        raise GecalError(f"--targets {spec!r} selected no target words")
    return targets


def _load_corpus_arg(path: str) -> corpus.Corpus:
    return corpus.load_corpus(path)


# ---------------------------------------------------------------------------
# Subcommands

def cmd_ingest(args) -> int:
    writer = manifest.ManifestWriter("ingest", __version__, {
        "m2": args.m2, "src": args.src, "cor": args.cor, "name": args.name,
        "split": args.split, "filter_incorrect": args.filter_incorrect,
        "annotator": args.annotator, "out": args.out,
    })
    if args.m2:
        writer.add_input(args.m2)
        text = Path(args.m2).read_text(encoding="utf-8")
        parsed = corpus.parse_m2(text, name=args.name, split=args.split, path=args.m2)
    else:
        writer.add_input(args.src)
        writer.add_input(args.cor)
        parsed = corpus.parse_parallel(
            Path(args.src).read_text(encoding="utf-8"),
            Path(args.cor).read_text(encoding="utf-8"),
            name=args.name, split=args.split,
        )
    if args.filter_incorrect:
        annotator = args.annotator if args.annotator >= 0 else None
        parsed = corpus.filter_incorrect(parsed, annotator=annotator)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    corpus.save_corpus(parsed, out)
    writer.write(out.with_suffix(out.suffix + ".manifest.json"))
    print(f"wrote {out} ({len(parsed)} examples)")
    return EXIT_OK


def cmd_freq(args) -> int:
    writer = manifest.ManifestWriter("freq", __version__, {
        "corpus": args.corpus, "lexicon": args.lexicon, "tags": args.tags,
        "min_count": args.min_count, "out": args.out,
    })
    writer.add_input(args.corpus)
    writer.add_input(args.lexicon)
    corp = _load_corpus_arg(args.corpus)
    lexicon = postag.load_lexicon(args.lexicon)
    tags = None
    if args.tags:
        writer.add_input(args.tags)
        tags = postag.load_tag_sidecar(args.tags)
    table = postag.build_frequency_table(corp, lexicon, min_count=args.min_count,
                                         tags=tags)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    postag.save_frequency_table(table, out)
    writer.write(out.with_suffix(out.suffix + ".manifest.json"))
    coverage = postag.lexicon_coverage(corp, lexicon)
    print(f"wrote {out} (lexicon coverage {coverage['known']}/{coverage['tokens']})")
    return EXIT_OK


def cmd_learn(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    config_view = {
        "train": args.train, "lexicon": args.lexicon, "freq": args.freq,
        "targets": args.targets, "oracle": args.oracle, "cache": args.cache,
        "epsilon": args.epsilon, "max_candidates": args.max_candidates,
        "scope": args.scope, "vocab_min_weight": args.vocab_min_weight,
        "min_count": args.min_count, "name": args.name, "resume": args.resume,
        "capitalize_entries": args.capitalize_entries,
        "jobs": args.jobs, "out": args.out,
    }
    writer = manifest.ManifestWriter("learn", __version__, config_view)
    writer.add_input(args.train)
    writer.add_input(args.lexicon)

    train = _load_corpus_arg(args.train)
    lexicon = postag.load_lexicon(args.lexicon)
    if args.freq:
        writer.add_input(args.freq)
        table = postag.load_frequency_table(args.freq)
    else:
        table = postag.build_frequency_table(train, lexicon, min_count=args.min_count)
    targets = _parse_targets(args.targets, table)
    vocab = attack.CandidateVocab.from_lexicon(lexicon, min_weight=args.vocab_min_weight)
    writer.manifest.config["vocab_sizes"] = vocab.sizes()
    writer.manifest.config["resolved_targets"] = [
        [w, t.value] for w, t in targets
    ]

    handle = _OracleHandle(args.oracle, args.cache, args.jobs)
    writer.set_oracle(handle.fingerprint)
    learner_config = attack.LearnerConfig(
        targets=targets, objective_scope=args.scope, epsilon=args.epsilon,
        max_candidates=args.max_candidates,
        capitalize_entries=args.capitalize_entries,
    )
    dictionary, trajectory = attack.learn_dictionary(
        learner_config, train, handle.oracle, vocab,
        name=args.name, checkpoint_dir=outdir, resume=args.resume,
    )
    (outdir / "trajectory.md").write_text(
        report.render_trajectory_markdown(trajectory), encoding="utf-8")
    if handle.cache is not None:
        writer.set_queries(*handle.query_counts())
    writer.write(outdir / "manifest.json")
    accepted = sum(1 for r in trajectory.rows if r.accepted)
    rejected = sum(1 for r in trajectory.rows if r.accepted is False)
    print(f"wrote {outdir / 'learned.dict'} ({accepted} accepted, {rejected} rejected)")
    return EXIT_OK


def cmd_attack(args) -> int:
    writer = manifest.ManifestWriter("attack", __version__, {
        "corpus": args.corpus, "dict": args.dict, "out": args.out,
    })
    writer.add_input(args.corpus)
    corp = _load_corpus_arg(args.corpus)
    dictionary, dict_path = _resolve_dictionary(args.dict)
    if dict_path:
        writer.add_input(dict_path)
    attacked = attack.attack_corpus(dictionary, corp)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    corpus.save_corpus(attacked, out)
    writer.write(out.with_suffix(out.suffix + ".manifest.json"))
    print(f"wrote {out} ({len(attacked)} examples)")
    return EXIT_OK


def cmd_eval(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    writer = manifest.ManifestWriter("eval", __version__, {
        "corpus": args.corpus, "dict": args.dict, "oracle": args.oracle,
        "cache": args.cache, "jobs": args.jobs, "out": args.out,
    })
    writer.add_input(args.corpus)
    corp = _load_corpus_arg(args.corpus)
    dictionary, dict_path = _resolve_dictionary(args.dict)
    if dict_path:
        writer.add_input(dict_path)
    handle = _OracleHandle(args.oracle, args.cache, args.jobs)
    writer.set_oracle(handle.fingerprint)
    result = report.evaluate_attack(corp, handle.oracle, dictionary)
    (outdir / "report.json").write_text(report.render_report(result, "json"),
                                        encoding="utf-8")
    (outdir / "report.md").write_text(report.render_report(result, "markdown"),
                                      encoding="utf-8")
    (outdir / "report.csv").write_text(report.render_report(result, "csv"),
                                       encoding="utf-8")
    if handle.cache is not None:
        writer.set_queries(*handle.query_counts())
    writer.write(outdir / "manifest.json")
    union_pc = result.percent_change.get(report.UNION_LABEL)
    change = "n/a" if union_pc is None else report.format_signed_percent(union_pc)
    print(f"wrote {outdir / 'report.json'} (affected-union change {change})")
    return EXIT_OK


def cmd_serve_mock(args) -> int:
    rules = oracle.load_mock_rules(args.rules)
    server = oracle.WireServer(oracle.MockGecOracle(rules), host=args.host,
                               port=args.port)
    print(f"serving mock GEC ({rules.fingerprint()}) on {server.endpoint}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_cache(args) -> int:
    cache_file = Path(args.dir) / "cache.tsv"
    if not cache_file.exists():
        raise FileNotFoundError(cache_file)
    if args.compact:
        writer = manifest.ManifestWriter("cache", __version__, {
            "dir": args.dir, "compact": True,
        })
        dropped = oracle.compact_cache(cache_file)
        writer.add_input(cache_file)  # digest of the compacted result
        writer.write(cache_file.with_suffix(".tsv.manifest.json"))
        print(f"compacted {cache_file}: dropped {dropped} superseded lines")
    for fp, stats in sorted(oracle.cache_stats(cache_file).items()):
        print(f"{fp}\t{stats['lines']} lines\t{stats['keys']} keys")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gecal",
        description="GEC fluency scoring and universal substitution attacks",
    )
    parser.add_argument("--version", action="version", version=f"gecal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse M2 or parallel files into a corpus")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--m2", help="M2 annotation file")
    group.add_argument("--src", help="source side of a parallel corpus")
    p.add_argument("--cor", help="corrected side (required with --src)")
    p.add_argument("--name", default="corpus")
    p.add_argument("--split", default="train", choices=corpus.SPLITS)
    p.add_argument("--filter-incorrect", action="store_true",
                   help="keep only examples with at least one reference edit")
    p.add_argument("--annotator", type=int, default=-1,
                   help="restrict --filter-incorrect to one annotator (default: any)")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("freq", help="build a POS-stratified frequency table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True, help="word<TAB>TAG<TAB>count lines")
    p.add_argument("--tags", help="optional pre-assigned tag sidecar (id<TAB>TAG...)")
    p.add_argument("--min-count", type=int, default=100)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_freq)

    p = sub.add_parser("learn", help="greedily learn a substitution dictionary")
    p.add_argument("--train", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--freq", help="frequency table file (else built from --train)")
    p.add_argument("--targets", default="nn:8,jj:8,rb:8",
                   help="comma-separated POS:k groups (default nn:8,jj:8,rb:8)")
    p.add_argument("--oracle", required=True, help="mock:RULES or http://HOST:PORT")
    p.add_argument("--cache", default=os.environ.get("GECAL_CACHE_DIR"))
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--max-candidates", type=int, default=None)
    p.add_argument("--scope", default="affected_subset",
                   choices=("affected_subset", "all"))
    p.add_argument("--vocab-min-weight", type=int, default=1)
    p.add_argument("--min-count", type=int, default=100)
    p.add_argument("--name", default="learned")
    p.add_argument("--capitalize-entries", action="store_true",
                   help="also store sentence-initial variants of accepted entries")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("attack", help="apply a dictionary to a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dict", required=True, help="dictionary file or preset:m2f/f2m")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eval", help="baseline vs attacked edit-count report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dict", required=True, help="dictionary file or preset:m2f/f2m")
    p.add_argument("--oracle", required=True, help="mock:RULES or http://HOST:PORT")
    p.add_argument("--cache", default=os.environ.get("GECAL_CACHE_DIR"))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve-mock", help="serve the mock GEC over the wire protocol")
    p.add_argument("--rules", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8475)
    p.set_defaults(func=cmd_serve_mock)

    p = sub.add_parser("cache", help="query-cache statistics and compaction")
    p.add_argument("dir", help="cache directory")
    p.add_argument("--compact", action="store_true")
    p.set_defaults(func=cmd_cache)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "ingest" and args.src and not args.cor:
        parser.error("--src requires --cor")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail("input", f"file not found: {exc}", EXIT_INPUT)
    except FormatError as exc:
        return _fail("format", str(exc), EXIT_INPUT)
    except OracleError as exc:
        return _fail("oracle", str(exc), EXIT_ORACLE)
    except GecalError as exc:
        return _fail("error", str(exc), EXIT_OTHER)


if __name__ == "__main__":
    sys.exit(main())
