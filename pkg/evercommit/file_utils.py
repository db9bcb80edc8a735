from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Optional

_DEFAULT_CHUNK_SIZE = 1024 * 1024


def sha256_file(path: Path, *, chunk_size: int = _DEFAULT_CHUNK_SIZE) -> Optional[str]:
    """Return SHA-256 hexdigest of a file, or None if missing/unreadable.

    Used to fingerprint instance files inside transcripts and result JSON so a
    rerun can be matched against the exact input it consumed.
    """
    try:
        p = Path(path)
    except Exception:
        return None

    try:
        if not p.exists() or not p.is_file():
            return None
        h = hashlib.sha256()
        with p.open("rb") as f:
            for chunk in iter(lambda: f.read(int(chunk_size)), b""):
                h.update(chunk)
        return h.hexdigest()
    except Exception:
        return None


def write_text_atomic(path: Path, text: str) -> Path:
    """Write UTF-8 text via a sibling temp file and rename into place."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_name(p.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(p)
    return p
