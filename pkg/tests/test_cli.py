"""End-to-end CLI pipeline: ingest -> freq -> learn -> attack/eval."""

import json
import threading

import pytest

from gecal import cli
from gecal.attack import load_dictionary
from gecal.corpus import load_corpus
from gecal.oracle import MockGecOracle, WireServer, load_mock_rules

from conftest import planted_scenario, write_pipeline_inputs


@pytest.fixture()
def inputs(tmp_path):
    scenario = planted_scenario(21)
    paths = write_pipeline_inputs(tmp_path, scenario)
    paths["scenario"] = scenario
    paths["tmp"] = tmp_path
    return paths


def run(args):
    return cli.main(args)


class TestIngest:
    def test_parallel_ingest(self, inputs, tmp_path):
        out = tmp_path / "train.corpus"
        code = run(["ingest", "--src", inputs["train_src"], "--cor", inputs["train_cor"],
                    "--name", "planted", "--split", "train", "-o", str(out)])
        assert code == 0
        corpus = load_corpus(out)
        assert corpus.name == "planted"
        assert len(corpus) == 24
        manifest = json.loads(out.with_suffix(".corpus.manifest.json").read_text())
        assert manifest["subcommand"] == "ingest"
        assert all(d.startswith("sha256:") for d in manifest["inputs"].values())

    def test_m2_ingest_with_filter(self, tmp_path):
        m2 = tmp_path / "x.m2"
        m2.write_text(
            "S I has a dog\nA 1 2|||VERB|||have|||REQUIRED|||-NONE-|||0\n\n"
            "S Hello world\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n",
            encoding="utf-8")
        out = tmp_path / "filtered.corpus"
        code = run(["ingest", "--m2", str(m2), "--filter-incorrect", "-o", str(out)])
        assert code == 0
        assert len(load_corpus(out)) == 1

    def test_missing_file_exit_code(self, tmp_path, capsys):
        code = run(["ingest", "--m2", str(tmp_path / "absent.m2"),
                    "-o", str(tmp_path / "x")])
        assert code == cli.EXIT_INPUT
        assert "GECAL-ERROR" in capsys.readouterr().err

    def test_malformed_m2_exit_code(self, tmp_path, capsys):
        m2 = tmp_path / "bad.m2"
        m2.write_text("S A\nA 5 6|||X|||y|||R|||-NONE-|||0\n", encoding="utf-8")
        code = run(["ingest", "--m2", str(m2), "-o", str(tmp_path / "x")])
        assert code == cli.EXIT_INPUT
        err = capsys.readouterr().err
        assert err.count("\n") == 1  # one-line machine-parsable error


class TestFreqAndLearn:
    def _ingest(self, inputs, tmp_path, split):
        out = tmp_path / f"{split}.corpus"
        assert run(["ingest", "--src", inputs[f"{split}_src"],
                    "--cor", inputs[f"{split}_cor"], "--name", "planted",
                    "--split", split, "--filter-incorrect", "-o", str(out)]) == 0
        return out

    def test_freq_table(self, inputs, tmp_path):
        corpus = self._ingest(inputs, tmp_path, "train")
        out = tmp_path / "train.freq"
        assert run(["freq", "--corpus", str(corpus), "--lexicon", inputs["lexicon"],
                    "--min-count", "1", "-o", str(out)]) == 0
        text = out.read_text(encoding="utf-8")
        assert text.startswith("GECAL-FREQ v1 1\n")
        assert "NN\tlife\t" in text

    def test_learn_recovers_planted_entry(self, inputs, tmp_path):
        corpus = self._ingest(inputs, tmp_path, "train")
        outdir = tmp_path / "learned"
        code = run(["learn", "--train", str(corpus), "--lexicon", inputs["lexicon"],
                    "--targets", "nn:1", "--oracle", f"mock:{inputs['rules']}",
                    "--min-count", "1", "--cache", str(tmp_path / "c1"),
                    "-o", str(outdir)])
        assert code == 0
        dictionary = load_dictionary(outdir / "learned.dict")
        assert dictionary.mapping() == inputs["scenario"].planted
        rows = [json.loads(l) for l in
                (outdir / "trajectory.jsonl").read_text().splitlines()]
        assert rows[0]["n"] == 0
        assert rows[1]["accepted"] is True
        manifest = json.loads((outdir / "manifest.json").read_text())
        assert manifest["oracle_fingerprint"].startswith("mock:")
        assert manifest["queries"]["cache_misses"] > 0
        assert "vocab_sizes" in manifest["config"]
        assert (outdir / "trajectory.md").exists()

    def test_eval_shows_negative_union_change(self, inputs, tmp_path):
        train = self._ingest(inputs, tmp_path, "train")
        test = self._ingest(inputs, tmp_path, "test")
        outdir = tmp_path / "learned"
        run(["learn", "--train", str(train), "--lexicon", inputs["lexicon"],
             "--targets", "nn:1", "--oracle", f"mock:{inputs['rules']}",
             "--min-count", "1", "-o", str(outdir)])
        evaldir = tmp_path / "eval"
        code = run(["eval", "--corpus", str(test), "--dict", str(outdir / "learned.dict"),
                    "--oracle", f"mock:{inputs['rules']}", "-o", str(evaldir)])
        assert code == 0
        report = json.loads((evaldir / "report.json").read_text())
        union = next(s for s in report["subsets"] if s["label"] == "affected-union")
        assert union["attacked"]["mean"] < union["baseline"]["mean"]
        assert union["percent_change"] < 0
        assert (evaldir / "report.md").exists()
        assert (evaldir / "report.csv").exists()

    def test_attack_writes_substituted_corpus(self, inputs, tmp_path):
        test = self._ingest(inputs, tmp_path, "test")
        out = tmp_path / "attacked.corpus"
        assert run(["attack", "--corpus", str(test), "--dict", "preset:m2f",
                    "-o", str(out)]) == 0
        assert load_corpus(out).name == "planted"

    def test_gender_preset_eval(self, inputs, tmp_path):
        test = self._ingest(inputs, tmp_path, "test")
        evaldir = tmp_path / "eval-gender"
        code = run(["eval", "--corpus", str(test), "--dict", "preset:f2m",
                    "--oracle", f"mock:{inputs['rules']}", "-o", str(evaldir)])
        assert code == 0
        report = json.loads((evaldir / "report.json").read_text())
        assert report["dictionary"] == "gender-f2m"


class TestHttpPipeline:
    def test_eval_against_wire_server(self, inputs, tmp_path):
        rules = load_mock_rules(inputs["rules"])
        server = WireServer(MockGecOracle(rules), port=0)
        thread = threading.Thread(
            target=lambda: server.serve_forever(poll_interval=0.02), daemon=True)
        thread.start()
        try:
            test_corpus = tmp_path / "test.corpus"
            run(["ingest", "--src", inputs["test_src"], "--cor", inputs["test_cor"],
                 "--name", "planted", "--split", "test", "-o", str(test_corpus)])
            evaldir = tmp_path / "eval-http"
            code = run(["eval", "--corpus", str(test_corpus), "--dict", "preset:m2f",
                        "--oracle", server.endpoint, "--cache", str(tmp_path / "c2"),
                        "-o", str(evaldir)])
            assert code == 0
            report = json.loads((evaldir / "report.json").read_text())
            assert report["oracle_fingerprint"] == rules.fingerprint()
        finally:
            server.shutdown()
            server.server_close()

    def test_unreachable_oracle_exit_code(self, inputs, tmp_path, capsys):
        rules = load_mock_rules(inputs["rules"])
        server = WireServer(MockGecOracle(rules), port=0)
        endpoint = server.endpoint
        server.server_close()  # nothing listens now
        test_corpus = tmp_path / "t.corpus"
        run(["ingest", "--src", inputs["test_src"], "--cor", inputs["test_cor"],
             "--name", "planted", "--split", "test", "-o", str(test_corpus)])
        code = run(["eval", "--corpus", str(test_corpus), "--dict", "preset:m2f",
                    "--oracle", endpoint, "-o", str(tmp_path / "e")])
        assert code == cli.EXIT_ORACLE
        assert "GECAL-ERROR oracle" in capsys.readouterr().err

    def test_bad_oracle_spec(self, inputs, tmp_path, capsys):
        test_corpus = tmp_path / "t.corpus"
        run(["ingest", "--src", inputs["test_src"], "--cor", inputs["test_cor"],
             "--name", "planted", "--split", "test", "-o", str(test_corpus)])
        code = run(["eval", "--corpus", str(test_corpus), "--dict", "preset:m2f",
                    "--oracle", "carrier-pigeon", "-o", str(tmp_path / "e")])
        assert code == cli.EXIT_OTHER


class TestServeMockAndCache:
    def test_serve_mock_wiring(self, inputs, monkeypatch, capsys):
        booted = {}

        def fake_serve(self):
            booted["endpoint"] = self.endpoint
            raise KeyboardInterrupt

        monkeypatch.setattr(WireServer, "serve_forever", fake_serve)
        code = run(["serve-mock", "--rules", inputs["rules"], "--port", "0"])
        assert code == 0
        assert booted["endpoint"].startswith("http://127.0.0.1:")
        assert "serving mock GEC" in capsys.readouterr().out

    def test_cache_stats_and_compact(self, inputs, tmp_path, capsys):
        cache_dir = tmp_path / "cache"
        train = tmp_path / "train.corpus"
        run(["ingest", "--src", inputs["train_src"], "--cor", inputs["train_cor"],
             "--name", "planted", "--split", "train", "-o", str(train)])
        run(["eval", "--corpus", str(train), "--dict", "preset:m2f",
             "--oracle", f"mock:{inputs['rules']}", "--cache", str(cache_dir),
             "-o", str(tmp_path / "e1")])
        code = run(["cache", str(cache_dir)])
        assert code == 0
        assert "keys" in capsys.readouterr().out
        assert run(["cache", str(cache_dir), "--compact"]) == 0

    def test_cache_missing_dir(self, tmp_path, capsys):
        assert run(["cache", str(tmp_path / "nope")]) == cli.EXIT_INPUT


class TestUsageErrors:
    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exit_info:
            run(["eval", "--frobnicate"])
        assert exit_info.value.code == 2

    def test_unknown_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exit_info:
            run(["transmogrify"])
        assert exit_info.value.code == 2

    def test_src_requires_cor(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exit_info:
            run(["ingest", "--src", "x", "-o", str(tmp_path / "o")])
        assert exit_info.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exit_info:
            run(["--version"])
        assert exit_info.value.code == 0
        assert "gecal" in capsys.readouterr().out


class TestDeterminism:
    def test_repeated_pipeline_byte_identical(self, inputs, tmp_path, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")

        def pipeline(root):
            root.mkdir()
            train = root / "train.corpus"
            test = root / "test.corpus"
            run(["ingest", "--src", inputs["train_src"], "--cor", inputs["train_cor"],
                 "--name", "planted", "--split", "train", "--filter-incorrect",
                 "-o", str(train)])
            run(["ingest", "--src", inputs["test_src"], "--cor", inputs["test_cor"],
                 "--name", "planted", "--split", "test", "-o", str(test)])
            run(["freq", "--corpus", str(train), "--lexicon", inputs["lexicon"],
                 "--min-count", "1", "-o", str(root / "train.freq")])
            run(["learn", "--train", str(train), "--lexicon", inputs["lexicon"],
                 "--targets", "nn:1", "--oracle", f"mock:{inputs['rules']}",
                 "--min-count", "1", "--cache", str(root / "cache"),
                 "-o", str(root / "learned")])
            run(["eval", "--corpus", str(test), "--dict", str(root / "learned/learned.dict"),
                 "--oracle", f"mock:{inputs['rules']}", "--cache", str(root / "cache2"),
                 "-o", str(root / "eval")])
            return {
                p.relative_to(root): p.read_bytes()
                for p in sorted(root.rglob("*")) if p.is_file()
            }

        first = pipeline(tmp_path / "runA")
        # same flags, same inputs, fresh directory: artifacts must be identical
        import shutil

        shutil.copytree(tmp_path / "runA", tmp_path / "keep")
        shutil.rmtree(tmp_path / "runA")
        second = pipeline(tmp_path / "runA")
        assert first.keys() == second.keys()
        for rel in first:
            assert first[rel] == second[rel], f"artifact differs: {rel}"
