"""Black-box GEC oracles: rule-based mock, HTTP client, and a persistent cache.

Every oracle takes and returns token lists and must be deterministic within
a session.  The wire protocol (shared with any conforming server):

    GET  /health  -> {"status": "ok", "model": "<fingerprint>"}
    POST /correct {"sentences": [["I","has","a","dog"], ...]}
                  -> {"corrections": [["I","have","a","dog"], ...],
                      "model": "<fingerprint>"}

The corrections array length must equal the sentences array length.

The mock corrector applies ordered n-gram rewrite rules in a single
left-to-right non-overlapping pass; *blind spots* suppress chosen rules for
any sentence containing a trigger word, giving tests a GEC system with
plantable, known vulnerabilities.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .errors import FingerprintMismatchError, FormatError, OracleError, ProtocolError

PROBE_SENTENCE = ["this", "is", "a", "determinism", "probe", "."]


class GecOracle:
    """Contract: correct() / correct_batch() over token lists, deterministic."""

    @property
    def fingerprint(self) -> str:
        raise NotImplementedError

    def correct(self, tokens: list[str]) -> list[str]:
        return self.correct_batch([tokens])[0]

    def correct_batch(self, sentences: list[list[str]]) -> list[list[str]]:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Mock corrector

MOCK_HEADER = "GECAL-MOCK v1"
EMPTY_RHS = "∅-NONE-∅"


@dataclass(frozen=True)
class RewriteRule:
    lhs: tuple[str, ...]
    rhs: tuple[str, ...]


@dataclass
class MockGecRules:
    """Ordered rewrite rules plus trigger-word blind spots.

    blind_spots maps a trigger word to the set of rule indices suppressed
    for any sentence containing that word.
    """

    rules: list[RewriteRule] = field(default_factory=list)
    blind_spots: dict[str, frozenset[int]] = field(default_factory=dict)
    name: str = "mock"

    def fingerprint(self) -> str:
        digest = hashlib.sha256(dumps_mock_rules(self).encode("utf-8")).hexdigest()
        return f"mock:{self.name}:{digest[:12]}"


def mock_correct(rules: MockGecRules, tokens: list[str]) -> list[str]:
    """One deterministic rewrite pass; suppressed rules do not fire."""
    present = set(tokens)
    suppressed: set[int] = set()
    for trigger, indices in rules.blind_spots.items():
        if trigger in present:
            suppressed.update(indices)

    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        fired = False
        for idx, rule in enumerate(rules.rules):
            if idx in suppressed:
                continue
            width = len(rule.lhs)
            if tokens[i : i + width] == list(rule.lhs):
                out.extend(rule.rhs)
                i += width
                fired = True
                break
        if not fired:
            out.append(tokens[i])
            i += 1
    return out


def dumps_mock_rules(rules: MockGecRules) -> str:
    lines = [f"{MOCK_HEADER} {rules.name}"]
    for rule in rules.rules:
        rhs = " ".join(rule.rhs) if rule.rhs else EMPTY_RHS
        lines.append(f"R {' '.join(rule.lhs)} => {rhs}")
    for trigger in sorted(rules.blind_spots):
        indices = rules.blind_spots[trigger]
        if indices == frozenset(range(len(rules.rules))):
            lines.append(f"B {trigger} *")
        else:
            lines.append(f"B {trigger} " + " ".join(str(i) for i in sorted(indices)))
    return "\n".join(lines) + "\n"


def parse_mock_rules(text: str, path=None) -> MockGecRules:
    lines = text.split("\n")
    header = lines[0].split() if lines else []
    if len(header) < 2 or " ".join(header[:2]) != MOCK_HEADER:
        raise FormatError(f"bad mock rules header: {lines[0] if lines else ''!r}",
                          line=1, path=path)
    name = header[2] if len(header) > 2 else "mock"
    rules: list[RewriteRule] = []
    blind_lines: list[tuple[int, str, list[str]]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        if line.startswith("R "):
            if " => " not in line:
                raise FormatError("rule line missing ' => '", line=lineno, path=path)
            lhs_text, rhs_text = line[2:].split(" => ", 1)
            lhs = tuple(lhs_text.split())
            rhs_tokens = rhs_text.split()
            rhs = () if rhs_tokens == [EMPTY_RHS] else tuple(rhs_tokens)
            if not lhs:
                raise FormatError("rule with empty left-hand side", line=lineno, path=path)
            rules.append(RewriteRule(lhs=lhs, rhs=rhs))
        elif line.startswith("B "):
            fields = line[2:].split()
            if len(fields) < 2:
                raise FormatError("blind spot needs trigger and rule indices",
                                  line=lineno, path=path)
            blind_lines.append((lineno, fields[0], fields[1:]))
        else:
            raise FormatError(f"unrecognized line {line!r}", line=lineno, path=path)

    blind_spots: dict[str, frozenset[int]] = {}
    for lineno, trigger, index_texts in blind_lines:
        if index_texts == ["*"]:
            indices = frozenset(range(len(rules)))
        else:
            try:
                parsed = [int(t) for t in index_texts]
            except ValueError:
                raise FormatError(f"non-integer rule index in {index_texts}",
                                  line=lineno, path=path)
            bad = [i for i in parsed if not 0 <= i < len(rules)]
            if bad:
                raise FormatError(f"rule index out of range: {bad}", line=lineno, path=path)
            indices = frozenset(parsed)
        blind_spots[trigger] = blind_spots.get(trigger, frozenset()) | indices
    return MockGecRules(rules=rules, blind_spots=blind_spots, name=name)


def load_mock_rules(path) -> MockGecRules:
    return parse_mock_rules(Path(path).read_text(encoding="utf-8"), path=path)


class MockGecOracle(GecOracle):
    def __init__(self, rules: MockGecRules):
        self.rules = rules
        self._fingerprint = rules.fingerprint()

    @property
    def fingerprint(self) -> str:
        return self._fingerprint

    def correct_batch(self, sentences: list[list[str]]) -> list[list[str]]:
        return [mock_correct(self.rules, s) for s in sentences]


# ---------------------------------------------------------------------------
# Persistent query cache

class QueryCache:
    """Persistent sentence->correction map bound to one backend fingerprint.

    The file is append-only (``fingerprint<TAB>key<TAB>corrected tokens``);
    on reload the last write wins.  Lookups are thread-safe; racing inserts
    of the same key are benign because values are identical.
    """

    def __init__(self, path=None, fingerprint: str = ""):
        self.path = Path(path) if path is not None else None
        self.fingerprint = fingerprint
        self.hits = 0
        self.misses = 0
        self._store: dict[str, list[str]] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    @staticmethod
    def key(tokens: list[str]) -> str:
        return " ".join(tokens)

    def _load(self) -> None:
        for line in self.path.read_text(encoding="utf-8").split("\n"):
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise FormatError(f"bad cache line {line!r}", path=self.path)
            fp, key, corrected = fields
            if fp != self.fingerprint:
                continue
            self._store[key] = corrected.split()

    def __len__(self) -> int:
        return len(self._store)

    def get(self, tokens: list[str]) -> list[str] | None:
        with self._lock:
            found = self._store.get(self.key(tokens))
        if found is None:
            self.misses += 1
            return None
        self.hits += 1
        return list(found)

    def put(self, tokens: list[str], corrected: list[str]) -> None:
        key = self.key(tokens)
        with self._lock:
            self._store[key] = list(corrected)
            if self.path is not None:
                line = f"{self.fingerprint}\t{key}\t{' '.join(corrected)}\n"
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line)


def cache_stats(path) -> dict[str, dict[str, int]]:
    """Per-fingerprint line and distinct-key counts of a cache file."""
    stats: dict[str, dict[str, int]] = {}
    keys: dict[str, set[str]] = {}
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise FormatError(f"bad cache line {line!r}", path=path)
        fp, key, _ = fields
        stats.setdefault(fp, {"lines": 0, "keys": 0})["lines"] += 1
        keys.setdefault(fp, set()).add(key)
    for fp, seen in keys.items():
        stats[fp]["keys"] = len(seen)
    return stats


def compact_cache(path) -> int:
    """Rewrite a cache file keeping only each key's last entry; returns lines dropped."""
    path = Path(path)
    last: dict[tuple[str, str], str] = {}
    order: list[tuple[str, str]] = []
    total = 0
    for line in path.read_text(encoding="utf-8").split("\n"):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise FormatError(f"bad cache line {line!r}", path=path)
        total += 1
        pair = (fields[0], fields[1])
        if pair not in last:
            order.append(pair)
        last[pair] = line
    path.write_text("".join(last[p] + "\n" for p in order), encoding="utf-8")
    return total - len(order)


class CachedGecOracle(GecOracle):
    """Output-equivalent wrapper that consults the cache before the inner oracle."""

    def __init__(self, inner: GecOracle, cache: QueryCache):
        if cache.fingerprint != inner.fingerprint:
            raise FingerprintMismatchError(
                f"cache is for {cache.fingerprint!r}, oracle is {inner.fingerprint!r}"
            )
        self.inner = inner
        self.cache = cache
        self.backend_calls = 0

    @property
    def fingerprint(self) -> str:
        return self.inner.fingerprint

    def correct_batch(self, sentences: list[list[str]]) -> list[list[str]]:
        results: list[list[str] | None] = []
        miss_indices: list[int] = []
        for i, tokens in enumerate(sentences):
            found = self.cache.get(tokens)
            results.append(found)
            if found is None:
                miss_indices.append(i)
        if miss_indices:
            fresh = self.inner.correct_batch([sentences[i] for i in miss_indices])
            self.backend_calls += len(miss_indices)
            if len(fresh) != len(miss_indices):
                raise ProtocolError(
                    f"inner oracle returned {len(fresh)} corrections "
                    f"for {len(miss_indices)} sentences"
                )
            for i, corrected in zip(miss_indices, fresh):
                self.cache.put(sentences[i], corrected)
                results[i] = corrected
        assert all(r is not None for r in results)
        return results  # type: ignore[return-value]


def cached(inner: GecOracle, cache: QueryCache) -> CachedGecOracle:
    return CachedGecOracle(inner, cache)


# ---------------------------------------------------------------------------
# HTTP client

class HttpGecOracle(GecOracle):
    """Client for any server speaking the wire protocol.

    The fingerprint comes from the /health handshake at construction; a
    determinism probe (same sentence sent twice) runs at session start
    unless disabled.
    """

    def __init__(
        self,
        endpoint: str,
        batch_size: int = 32,
        timeout: float = 30.0,
        retries: int = 2,
        jobs: int = 1,
        probe: bool = True,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = max(1, batch_size)
        self.timeout = timeout
        self.retries = retries
        self.jobs = max(1, jobs)
        self._fingerprint = self._handshake()
        if probe:
            self.probe_determinism()

    @property
    def fingerprint(self) -> str:
        return self._fingerprint

    def _handshake(self) -> str:
        try:
            with urllib.request.urlopen(
                self.endpoint + "/health", timeout=self.timeout
            ) as resp:
                body = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise OracleError(f"health check failed for {self.endpoint}: {exc}") from exc
        if body.get("status") != "ok" or not isinstance(body.get("model"), str):
            raise ProtocolError(f"bad health response: {body!r}")
        return body["model"]

    def probe_determinism(self, tokens: list[str] | None = None) -> None:
        tokens = tokens if tokens is not None else PROBE_SENTENCE
        first = self._post_batch([tokens])
        second = self._post_batch([tokens])
        if first != second:
            raise ProtocolError(
                f"backend is not deterministic: {first[0]!r} != {second[0]!r}"
            )

    def _post_batch(self, batch: list[list[str]]) -> list[list[str]]:
        payload = json.dumps({"sentences": batch}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint + "/correct",
            data=payload,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        last_error: Exception | None = None
        for _attempt in range(self.retries + 1):
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                    body = json.loads(resp.read().decode("utf-8"))
                break
            except urllib.error.HTTPError as exc:
                # Server rejected the request; retrying cannot help.
                raise OracleError(f"server returned {exc.code}: {exc.reason}") from exc
            except (urllib.error.URLError, OSError, ValueError) as exc:
                last_error = exc
                time.sleep(0.05 * (_attempt + 1))
        else:
            raise OracleError(
                f"batch of {len(batch)} failed after {self.retries + 1} attempts: "
                f"{last_error}"
            )
        corrections = body.get("corrections")
        if not isinstance(corrections, list) or len(corrections) != len(batch):
            got = len(corrections) if isinstance(corrections, list) else "no"
            raise ProtocolError(f"{got} corrections for {len(batch)} sentences")
        result = []
        for c in corrections:
            if not isinstance(c, list) or not all(isinstance(t, str) for t in c):
                raise ProtocolError(f"correction is not a token list: {c!r}")
            result.append(c)
        return result

    def _post_indexed(self, index: int, chunk: list[list[str]]) -> list[list[str]]:
        try:
            return self._post_batch(chunk)
        except OracleError as exc:
            first = index * self.batch_size
            raise type(exc)(
                f"batch #{index} (sentences {first}..{first + len(chunk) - 1}): {exc}"
            ) from exc

    def correct_batch(self, sentences: list[list[str]]) -> list[list[str]]:
        if not sentences:
            return []
        chunks = [
            sentences[i : i + self.batch_size]
            for i in range(0, len(sentences), self.batch_size)
        ]
        if self.jobs == 1 or len(chunks) == 1:
            out: list[list[str]] = []
            for i, chunk in enumerate(chunks):
                out.extend(self._post_indexed(i, chunk))
            return out
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            results = list(pool.map(self._post_indexed, range(len(chunks)), chunks))
        return [corrected for chunk in results for corrected in chunk]


# ---------------------------------------------------------------------------
# Wire-protocol server over any in-process oracle

class _WireHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    oracle: GecOracle  # set by the server factory

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/health":
            self._send_json(200, {"status": "ok", "model": self.oracle.fingerprint})
        else:
            self._send_json(404, {"error": f"unknown path {self.path}"})

    def do_POST(self):
        if self.path != "/correct":
            self._send_json(404, {"error": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            self._send_json(400, {"error": f"malformed request body: {exc}"})
            return
        sentences = body.get("sentences") if isinstance(body, dict) else None
        if not isinstance(sentences, list) or not all(
            isinstance(s, list) and all(isinstance(t, str) for t in s) for s in sentences
        ):
            self._send_json(400, {"error": "body must be {\"sentences\": [[str, ...], ...]}"})
            return
        try:
            corrections = self.oracle.correct_batch(sentences)
        except Exception as exc:  # surface backend failures as HTTP 500
            self._send_json(500, {"error": str(exc)})
            return
        self._send_json(
            200, {"corrections": corrections, "model": self.oracle.fingerprint}
        )


class WireServer(ThreadingHTTPServer):
    """HTTP server exposing any GecOracle behind the wire protocol."""

    daemon_threads = True

    def __init__(self, oracle: GecOracle, host: str = "127.0.0.1", port: int = 0):
        handler = type("Handler", (_WireHandler,), {"oracle": oracle})
        super().__init__((host, port), handler)

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"
