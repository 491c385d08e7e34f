"""CSV/JSON emission and run manifests.

CSV files are UTF-8, comma separated, LF terminated, with a header row.
Floats carry 12 significant digits so reruns diff cleanly.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

MANIFEST_NAME = "manifest.json"
SCHEMA_VERSION = 1


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".12g")
    return str(value)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class Emitter:
    """Collects output files in order and writes them, plus a manifest, at the end.

    Nothing touches the filesystem until :meth:`finish`, so a failed run
    leaves no files behind.
    """

    def __init__(self, out_dir, command: str, argv: list[str], params: dict, seed: int | None = None):
        self.out_dir = Path(out_dir)
        self.command = command
        self.argv = list(argv)
        self.params = params
        self.seed = seed
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat()
        self._files: list[tuple[str, str]] = []

    def csv(self, name: str, header, rows) -> None:
        self._files.append((name, csv_text(header, rows)))

    def json(self, name: str, payload) -> None:
        self._files.append((name, json_text(payload)))

    def finish(self) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        entries = []
        for name, text in self._files:
            data = text.encode("utf-8")
            (self.out_dir / name).write_bytes(data)
            entries.append({"name": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "argv": self.argv,
            "params": self.params,
            "seed": self.seed,
            "version": __version__,
            "started": self.started,
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "files": entries,
        }
        path = self.out_dir / MANIFEST_NAME
        path.write_text(json_text(manifest), encoding="utf-8")
        return path


def load_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def verify_manifest(path) -> list[str]:
    """Names of listed files whose digest no longer matches."""
    path = Path(path)
    manifest = load_manifest(path)
    bad = []
    for entry in manifest["files"]:
        f = path.parent / entry["name"]
        if not f.exists() or hashlib.sha256(f.read_bytes()).hexdigest() != entry["sha256"]:
            bad.append(entry["name"])
    return bad
