"""Small file helpers shared by the text formats: atomic writes and
round-trip float formatting."""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .errors import FormatError


def atomic_write(path, text: str) -> None:
    """Write text to path via a temp file and rename, so readers never see
    a partial file."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=os.path.basename(path) + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt_floats(values) -> str:
    """Space-separated shortest round-trip decimal forms."""
    return " ".join(repr(float(v)) for v in values)


def parse_floats(line: str, expected: int, path, lineno: int) -> np.ndarray:
    """Parse a whitespace-separated float row, enforcing its width."""
    if line is None or line == "":
        raise FormatError(f"{path}:{lineno}: unexpected end of file")
    parts = line.split()
    if len(parts) != expected:
        raise FormatError(f"{path}:{lineno}: expected {expected} values, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError as e:
        raise FormatError(f"{path}:{lineno}: {e}") from None
