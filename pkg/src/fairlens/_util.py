"""Shared helpers: error base class, canonical JSON, atomic writes, clock."""

from __future__ import annotations

import json
import os
import tempfile
from datetime import datetime, timezone

__all__ = [
    "FairlensError",
    "canonical_json",
    "atomic_write_text",
    "now_iso",
]


class FairlensError(ValueError):
    """Base class for every error this package raises deliberately.

    The CLI maps any subclass to exit code 2 with a one-line diagnostic.
    """


def canonical_json(obj: object) -> str:
    """Serialize ``obj`` to the canonical JSON form used for all outputs.

    Sorted keys, two-space indent, trailing newline. Re-serializing a
    parsed canonical document reproduces it byte for byte.
    """
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    """Write ``text`` to ``path`` atomically (temp file + rename).

    The temp file lives in the destination directory so the final
    ``os.replace`` never crosses filesystems.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise


def now_iso() -> str:
    """Current UTC time as an ISO-8601 string.

    Honors the SOURCE_DATE_EPOCH convention: when that environment
    variable holds an integer, it is used instead of the wall clock so
    repeated runs produce byte-identical output.
    """
    raw = os.environ.get("SOURCE_DATE_EPOCH")
    if raw is not None:
        try:
            moment = datetime.fromtimestamp(int(raw), tz=timezone.utc)
        except (ValueError, OverflowError, OSError):
            moment = datetime.now(tz=timezone.utc)
    else:
        moment = datetime.now(tz=timezone.utc)
    return moment.replace(microsecond=0).isoformat()
