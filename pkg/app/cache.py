from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional

from .config import CACHE_DIR, CACHE_FILE_NAME, CACHE_FORMAT_VERSION

logger = logging.getLogger(__name__)


def cache_key(target: str, n: int, scheme: str, alpha: float, replications: int, seed: int, plug_in: bool) -> str:
    return f"{target}|{n}|{scheme}|{alpha!r}|{replications}|{seed}|{int(plug_in)}"


class CalibrationCache:
    """JSON table of calibrated thresholds keyed by the full request.

    The file is rewritten through a temporary sibling and ``os.replace`` so a
    crash never leaves a half-written table behind.
    """

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path is not None else CACHE_DIR / CACHE_FILE_NAME
        self.entries: Dict[str, Dict[str, Any]] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, key: str) -> Optional[Dict[str, Any]]:
        return self.entries.get(key)

    def put(self, key: str, record: Dict[str, Any]) -> None:
        self.entries[key] = record

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"version": CACHE_FORMAT_VERSION, "entries": self.entries}
        fd, tmp = tempfile.mkstemp(prefix=".calibration-", suffix=".json", dir=str(self.path.parent))
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(payload, f, sort_keys=True, indent=1)
            os.replace(tmp, self.path)
        except Exception:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path: str | Path | None = None) -> "CalibrationCache":
        """Read the table; a missing, unreadable or foreign-version file yields an empty cache."""
        cache = cls(path)
        if not cache.path.exists():
            return cache
        try:
            with cache.path.open("r", encoding="utf-8") as f:
                payload = json.load(f)
        except Exception as exc:
            logger.warning("ignoring unreadable calibration cache %s: %s", cache.path, exc)
            return cache
        if not isinstance(payload, dict) or payload.get("version") != CACHE_FORMAT_VERSION:
            logger.warning("ignoring calibration cache %s with unexpected version", cache.path)
            return cache
        entries = payload.get("entries")
        if isinstance(entries, dict):
            cache.entries = {str(k): v for k, v in entries.items() if isinstance(v, dict)}
        return cache
