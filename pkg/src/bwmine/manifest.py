"""Pipeline manifest: checksummed stages for idempotent re-runs.

Each CLI stage records the sha256 of its inputs, its effective config
and its outputs. A stage is skipped when the recorded signature matches
and every output file is still present with its recorded hash. The
manifest holds no timestamps, so identical runs produce identical
manifests.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Mapping


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def text_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def stage_signature(input_hashes: Mapping[str, str], config: Mapping[str, object]) -> str:
    payload = json.dumps({"inputs": dict(sorted(input_hashes.items())),
                          "config": {k: repr(v) for k, v in sorted(config.items())}},
                         sort_keys=True)
    return text_sha256(payload)


class Manifest:
    """Paths are stored relative to the manifest's directory, so identical
    runs into different roots produce identical manifests."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.stages: dict[str, dict] = {}
        if self.path.exists():
            data = json.loads(self.path.read_text(encoding="utf-8"))
            self.stages = data.get("stages", {})

    def _rel(self, path: str | Path) -> str:
        return os.path.relpath(Path(path), self.path.parent)

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        body = json.dumps({"stages": self.stages}, sort_keys=True, indent=1)
        self.path.write_text(body + "\n", encoding="utf-8")

    def is_current(self, stage: str, signature: str) -> bool:
        """True when the stage ran with this signature and its outputs are
        still on disk, unmodified."""
        rec = self.stages.get(stage)
        if rec is None or rec.get("signature") != signature:
            return False
        for out_path, digest in rec.get("outputs", {}).items():
            p = self.path.parent / out_path
            if not p.exists() or file_sha256(p) != digest:
                return False
        return True

    def record(self, stage: str, signature: str, inputs: Mapping[str, str],
               outputs: Mapping[str, str], details: Mapping[str, object] | None = None) -> None:
        rec = {
            "signature": signature,
            "inputs": {self._rel(k): v for k, v in sorted(inputs.items())},
            "outputs": {self._rel(k): v for k, v in sorted(outputs.items())},
        }
        if details:
            rec["details"] = json.loads(json.dumps(details, sort_keys=True))
        self.stages[stage] = rec
        self.save()
