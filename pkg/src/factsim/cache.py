"""File-backed cache for raw chat completions.

One JSON file per request key, written atomically (temp file + rename) so
concurrent writers can never leave a torn entry behind. Reads are lock-free.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)


class CompletionCache:
    """Maps request keys to raw completion text plus request metadata."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> str | None:
        """Return the cached completion text, or None on a miss."""
        path = self._path(key)
        try:
            with open(path, encoding="utf-8") as fh:
                entry = json.load(fh)
            return entry["completion"]
        except FileNotFoundError:
            return None
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            # A corrupt entry is treated as a miss; it will be rewritten.
            logger.warning("ignoring corrupt cache entry %s: %s", path, exc)
            return None

    def put(self, key: str, completion: str, request_meta: dict[str, Any] | None = None) -> None:
        """Store a completion atomically under the given key."""
        payload = {"completion": completion, "request": request_meta or {}}
        fd, tmp_path = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, ensure_ascii=False)
            os.replace(tmp_path, self._path(key))
        except BaseException:
            try:
                os.unlink(tmp_path)
            except OSError:
                pass
            raise

    def __contains__(self, key: str) -> bool:
        return self._path(key).exists()
