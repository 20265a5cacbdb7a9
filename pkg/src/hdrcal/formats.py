"""File formats: 16-bit PGM, HDRF float radiance, CSV tables, key=value config.

All writers are atomic (temp file + rename) and deterministic: the same
in-memory object always serializes to the same bytes, so identical runs
produce bit-identical artifacts.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile

import numpy as np

from .errors import ConfigError


# ---------------------------------------------------------------------------
# atomic byte-level writes

def atomic_write_bytes(path, data: bytes):
    """Write bytes to `path` via a temp file in the same directory + rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# PGM (portable graymap, binary "P5")

def pgm16_bytes(samples: np.ndarray) -> bytes:
    """Encode a 2-D uint16 array as binary PGM, maxval 65535, MSB first."""
    arr = np.asarray(samples)
    if arr.ndim != 2:
        raise ValueError("PGM samples must be a 2-D array")
    if arr.dtype != np.uint16:
        if np.any(arr < 0) or np.any(arr > 65535):
            raise ValueError("sample values outside uint16 range")
        arr = arr.astype(np.uint16)
    h, w = arr.shape
    header = f"P5\n{w} {h}\n65535\n".encode("ascii")
    return header + arr.astype(">u2").tobytes()


def write_pgm16(path, samples: np.ndarray):
    atomic_write_bytes(path, pgm16_bytes(samples))


def pgm8_bytes(samples: np.ndarray) -> bytes:
    """Encode a 2-D uint8 array as binary PGM, maxval 255 (masks, previews)."""
    arr = np.asarray(samples)
    if arr.ndim != 2:
        raise ValueError("PGM samples must be a 2-D array")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("sample values outside uint8 range")
        arr = arr.astype(np.uint8)
    h, w = arr.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + arr.tobytes()


def write_pgm8(path, samples: np.ndarray):
    atomic_write_bytes(path, pgm8_bytes(samples))


def _pgm_tokens(data: bytes):
    """Yield header tokens, skipping whitespace and '#' comments."""
    i = 0
    n = len(data)
    while True:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] != b"\n":
                i += 1
            continue
        if i >= n:
            raise ConfigError("truncated PGM header")
        start = i
        while i < n and not data[i : i + 1].isspace():
            i += 1
        yield data[start:i], i


def read_pgm(path) -> np.ndarray:
    """Read a binary P5 PGM (8- or 16-bit). 16-bit samples are MSB first."""
    with open(path, "rb") as fh:
        data = fh.read()
    toks = _pgm_tokens(data)
    fields = []
    for _ in range(4):
        tok, end = next(toks)
        fields.append(tok)
    if fields[0] != b"P5":
        raise ConfigError(f"not a binary PGM file: {path}")
    w, h, maxval = (int(f) for f in fields[1:])
    raster = data[end + 1 :]  # exactly one whitespace byte after maxval
    if maxval == 255:
        arr = np.frombuffer(raster[: w * h], dtype=np.uint8)
    elif maxval == 65535:
        arr = np.frombuffer(raster[: 2 * w * h], dtype=">u2").astype(np.uint16)
    else:
        raise ConfigError(f"unsupported PGM maxval {maxval}")
    if arr.size != w * h:
        raise ConfigError(f"truncated PGM raster in {path}")
    return arr.reshape(h, w)


# ---------------------------------------------------------------------------
# HDRF float radiance: "HDRF <w> <h>\n" + row-major float32 little-endian

def hdrf_bytes(values: np.ndarray) -> bytes:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError("HDRF values must be a 2-D array")
    h, w = arr.shape
    return f"HDRF {w} {h}\n".encode("ascii") + arr.astype("<f4").tobytes()


def write_hdrf(path, values: np.ndarray):
    atomic_write_bytes(path, hdrf_bytes(values))


def read_hdrf(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline()
        body = fh.read()
    parts = header.split()
    if len(parts) != 3 or parts[0] != b"HDRF":
        raise ConfigError(f"not an HDRF file: {path}")
    w, h = int(parts[1]), int(parts[2])
    arr = np.frombuffer(body, dtype="<f4")
    if arr.size != w * h:
        raise ConfigError(f"truncated HDRF raster in {path}")
    return arr.reshape(h, w).astype(np.float32)


# ---------------------------------------------------------------------------
# CSV tables

def fmt_num(x) -> str:
    """Canonical number formatting: shortest exact round-trip."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if math.isfinite(v) and v == int(v) and abs(v) < 1e16:
        return f"{v:.1f}"  # keep a decimal point so floats stay floats
    return repr(v)  # covers inf/nan too: float() parses them back


def csv_bytes(header, rows, comments=()) -> bytes:
    """Serialize a table; `comments` become '# ' lines above the header."""
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([c if isinstance(c, str) else fmt_num(c) for c in row])
    return buf.getvalue().encode("utf-8")


def write_csv(path, header, rows, comments=()):
    atomic_write_bytes(path, csv_bytes(header, rows, comments))


def read_csv(path):
    """Read a CSV with optional leading '#' comments.

    Returns (comments, header, rows) with all cells as strings.
    """
    comments = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif line.strip():
            body.append(line)
    if not body:
        raise ConfigError(f"empty CSV: {path}")
    parsed = list(csv.reader(body))
    return comments, parsed[0], parsed[1:]


# ---------------------------------------------------------------------------
# key=value config text ('#' comments, blank lines ignored)

def parse_kv_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_kv(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_kv_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def kv_text(mapping: dict, comments=()) -> str:
    lines = [f"# {c}" for c in comments]
    for key, value in mapping.items():
        if isinstance(value, (tuple, list, np.ndarray)):
            value = " ".join(fmt_num(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, (int, float, np.integer, np.floating)):
            value = fmt_num(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def save_kv(path, mapping: dict, comments=()):
    atomic_write_text(path, kv_text(mapping, comments))


def kv_get_float(kv: dict, key: str, default=None) -> float:
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default
    try:
        return float(kv[key])
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: not a number: {kv[key]!r}") from exc


def kv_get_bool(kv: dict, key: str, default: bool) -> bool:
    if key not in kv:
        return default
    value = kv[key].lower()
    if value in ("true", "1", "yes", "on"):
        return True
    if value in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"config key {key!r}: not a boolean: {kv[key]!r}")


def kv_get_floats(kv: dict, key: str, default=None) -> tuple:
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return tuple(default)
    try:
        return tuple(float(tok) for tok in kv[key].replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: bad number list") from exc
