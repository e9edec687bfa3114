from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

CSV_FLOAT_FORMAT = "%.17g"
MANIFEST_NAME = "manifest.json"


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": _jsonable(float(value.real)), "im": _jsonable(float(value.imag))}
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no NaN/inf
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def ensure_dir(out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def write_csv(out_dir: Path, *, name: str, frame: pd.DataFrame) -> Path:
    path = ensure_dir(out_dir) / name
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path


def write_json(out_dir: Path, *, name: str, payload: Mapping[str, Any]) -> Path:
    path = ensure_dir(out_dir) / name
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_dir: Path,
    *,
    command: str,
    files: Sequence[Path],
    config: Mapping[str, Any],
    extra: Optional[Mapping[str, Any]] = None,
) -> Path:
    """
    List every emitted file with its sha256 next to the resolved config.
    Files listed by an earlier run into the same directory are kept (and
    re-hashed) while they still exist. Entries are sorted by file name so
    the manifest itself is deterministic.
    """
    out_dir = ensure_dir(out_dir)
    paths = {Path(p).name: Path(p) for p in files}
    if (out_dir / MANIFEST_NAME).exists():
        for entry in read_manifest(out_dir).get("files", []):
            earlier = out_dir / entry["file"]
            if earlier.exists():
                paths.setdefault(earlier.name, earlier)
    entries: List[Dict[str, Any]] = []
    for path in sorted(paths.values(), key=lambda p: p.name):
        entries.append({"file": path.name, "sha256": file_sha256(path), "bytes": path.stat().st_size})
    payload: Dict[str, Any] = {"command": command, "files": entries, "config": config}
    if extra:
        payload["extra"] = dict(extra)
    return write_json(out_dir, name=MANIFEST_NAME, payload=payload)


def read_manifest(out_dir: Path) -> Dict[str, Any]:
    return json.loads((Path(out_dir) / MANIFEST_NAME).read_text(encoding="utf-8"))


def verify_manifest(out_dir: Path) -> List[str]:
    """Names of listed files whose current hash no longer matches."""
    manifest = read_manifest(out_dir)
    stale = []
    for entry in manifest.get("files", []):
        path = Path(out_dir) / entry["file"]
        if not path.exists() or file_sha256(path) != entry["sha256"]:
            stale.append(entry["file"])
    return stale
