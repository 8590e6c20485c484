"""Run manifests: every mutating CLI run records what produced its artifacts.

Timestamps honor SOURCE_DATE_EPOCH (or GECAL_BUILD_TIME) so repeated runs
can be byte-identical, per the reproducible-builds convention; when pinned,
elapsed time is reported as 0.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

MANIFEST_SCHEMA = "GECAL-MANIFEST v1"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def pinned_epoch() -> int | None:
    for var in ("GECAL_BUILD_TIME", "SOURCE_DATE_EPOCH"):
        value = os.environ.get(var)
        if value:
            return int(value)
    return None


@dataclass
class RunManifest:
    subcommand: str
    version: str
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    oracle_fingerprint: str | None = None
    queries: dict[str, int] | None = None
    wall_clock: str = ""
    elapsed_s: float = 0.0

    def to_json(self) -> str:
        payload = {
            "schema": MANIFEST_SCHEMA,
            "subcommand": self.subcommand,
            "version": self.version,
            "config": self.config,
            "inputs": self.inputs,
            "oracle_fingerprint": self.oracle_fingerprint,
            "queries": self.queries,
            "wall_clock": self.wall_clock,
            "elapsed_s": self.elapsed_s,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


class ManifestWriter:
    """Collects digests and query counters while a subcommand runs."""

    def __init__(self, subcommand: str, version: str, config: dict):
        self.manifest = RunManifest(subcommand=subcommand, version=version,
                                    config=config)
        self._epoch = pinned_epoch()
        self._start = time.monotonic()
        stamp = self._epoch if self._epoch is not None else time.time()
        self.manifest.wall_clock = datetime.fromtimestamp(
            stamp, tz=timezone.utc).isoformat()

    def add_input(self, path) -> None:
        self.manifest.inputs[str(path)] = sha256_file(path)

    def set_oracle(self, fingerprint: str) -> None:
        self.manifest.oracle_fingerprint = fingerprint

    def set_queries(self, hits: int, misses: int, backend_calls: int) -> None:
        self.manifest.queries = {
            "cache_hits": hits, "cache_misses": misses, "backend_calls": backend_calls
        }

    def write(self, path) -> None:
        if self._epoch is None:
            self.manifest.elapsed_s = round(time.monotonic() - self._start, 3)
        Path(path).write_text(self.manifest.to_json(), encoding="utf-8")
