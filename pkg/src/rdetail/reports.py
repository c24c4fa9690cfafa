"""Deterministic machine-readable outputs.

Every emitted file embeds the seed and the configuration hash (and the
hashes of any artifact files it consumed), and contains nothing that varies
between identically-seeded runs, so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def make_meta(seed: int, config_hash: str, inputs: dict | None = None
              ) -> dict:
    meta = {"seed": int(seed), "config_sha256": config_hash}
    if inputs:
        meta["inputs"] = dict(sorted(inputs.items()))
    return meta


def write_json(path, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def write_csv(path, header: list, rows, meta: dict | None = None) -> None:
    """CSV at 17 significant digits (exact float64 round-trip), with the
    reproducibility metadata as leading comment lines."""
    lines = []
    if meta:
        for key, val in sorted(meta.items()):
            lines.append(f"# {key}={val}")
    lines.append(",".join(header))
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (int,)) or hasattr(v, "is_integer") and \
                    isinstance(v, float) is False:
                cells.append(str(v))
            elif isinstance(v, float):
                cells.append(f"{v:.17g}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def sanitize(obj):
    """Recursively convert numpy scalars/arrays for JSON emission."""
    import numpy as np

    if isinstance(obj, dict):
        return {k: sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and obj != obj:
        return None
    return obj
