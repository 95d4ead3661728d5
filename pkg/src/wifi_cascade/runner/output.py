"""One output directory per run: data files plus a checksummed manifest."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

MANIFEST = "manifest.json"


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


class RunDir:
    def __init__(self, root, command: str, seed: int | None, inputs: dict):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.seed = seed
        self.inputs = inputs
        self.files: dict[str, str] = {}

    def _write(self, name: str, data: bytes) -> Path:
        if name in self.files or name == MANIFEST:
            raise ValueError(f"{name} is written more than once")
        path = self.root / name
        path.write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        return path

    def write_text(self, name: str, text: str) -> Path:
        return self._write(name, text.encode())

    def write_csv(self, name: str, header, rows) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"{name}: row width {len(row)} != header width {len(header)}")
            w.writerow([_fmt(x) for x in row])
        return self._write(name, buf.getvalue().encode())

    def write_json(self, name: str, obj) -> Path:
        return self._write(name, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())

    def finish(self) -> Path:
        manifest = {
            "command": self.command,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": str(self.root),
            "files": [{"name": k, "sha256": v} for k, v in sorted(self.files.items())],
        }
        path = self.root / MANIFEST
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


def verify_manifest(root) -> list[str]:
    """Names of files whose current checksum differs from the manifest."""
    root = Path(root)
    manifest = json.loads((root / MANIFEST).read_text())
    bad = []
    for entry in manifest["files"]:
        data = (root / entry["name"]).read_bytes()
        if hashlib.sha256(data).hexdigest() != entry["sha256"]:
            bad.append(entry["name"])
    return bad
