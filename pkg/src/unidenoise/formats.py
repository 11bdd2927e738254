"""Netpbm images, channel parameter files and JSON reports.

Images are binary PBM (P1 plain or P4 raw); pixel 1 is black. Grayscale PGM
(P2/P5) can be read with a 50% threshold, which loses information and is
reported as such. Observation directories hold ``copy_01.pbm ...`` plus a
``manifest.json``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import InputError
from .model import Channel, bsc

REPORT_FIELDS = (
    "algorithm",
    "seed",
    "n",
    "K",
    "p_hat",
    "b_hat",
    "branch",
    "residuals",
    "expected_distortion",
    "achieved_distortion_up_to_permutation",
    "runtime_ms",
)
SIG_DIGITS = 12
# row sums read back from 12-digit text are only good to about this
FILE_TOL = 1e-9


class _Tokens:
    """Header tokenizer for netpbm files (whitespace and ``#`` comments)."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def next(self) -> bytes:
        d, i = self.data, self.pos
        while i < len(d):
            if d[i : i + 1] == b"#":
                while i < len(d) and d[i : i + 1] not in (b"\n", b"\r"):
                    i += 1
            elif d[i : i + 1].isspace():
                i += 1
            else:
                break
        start = i
        while i < len(d) and not d[i : i + 1].isspace() and d[i : i + 1] != b"#":
            i += 1
        if start == i:
            raise InputError("malformed netpbm header: unexpected end of file")
        self.pos = i
        return d[start:i]

    def int(self, what: str) -> int:
        tok = self.next()
        try:
            value = int(tok)
        except ValueError:
            raise InputError(f"malformed netpbm header: bad {what} {tok!r}") from None
        if value <= 0:
            raise InputError(f"malformed netpbm header: {what} must be positive")
        return value


def _parse_netpbm(data: bytes) -> tuple[np.ndarray, bool]:
    tok = _Tokens(data)
    magic = tok.next()
    if magic not in (b"P1", b"P4", b"P2", b"P5"):
        raise InputError(f"unsupported netpbm magic {magic!r}")
    width, height = tok.int("width"), tok.int("height")
    maxval = tok.int("maxval") if magic in (b"P2", b"P5") else 1
    if magic == b"P1":
        body = bytes(c for c in _strip_comments(data[tok.pos :]) if c in b"01")
        if len(body) < width * height:
            raise InputError(f"truncated P1 payload: {len(body)} of {width * height} pixels")
        return (np.frombuffer(body[: width * height], dtype=np.uint8) - ord("0")).reshape(height, width).astype(np.int64), False
    if magic == b"P4":
        raw = data[tok.pos + 1 :]
        stride = (width + 7) // 8
        if len(raw) < stride * height:
            raise InputError(f"truncated P4 payload: {len(raw)} of {stride * height} bytes")
        packed = np.frombuffer(raw[: stride * height], dtype=np.uint8).reshape(height, stride)
        return np.unpackbits(packed, axis=1)[:, :width].astype(np.int64), False
    if magic == b"P2":
        vals = _strip_comments(data[tok.pos :]).split()
        if len(vals) < width * height:
            raise InputError(f"truncated P2 payload: {len(vals)} of {width * height} pixels")
        gray = np.array([int(v) for v in vals[: width * height]], dtype=np.int64)
    else:
        raw = data[tok.pos + 1 :]
        size = 2 if maxval > 255 else 1
        if len(raw) < width * height * size:
            raise InputError("truncated P5 payload")
        gray = np.frombuffer(raw[: width * height * size], dtype=">u2" if size == 2 else np.uint8).astype(np.int64)
    # gray is bright-is-high, PBM is black-is-1
    return (gray.reshape(height, width) * 2 < maxval).astype(np.int64), True


def _strip_comments(body: bytes) -> bytes:
    return b"\n".join(line.split(b"#", 1)[0] for line in body.splitlines())


def read_image(path) -> tuple[np.ndarray, bool]:
    """Read a PBM or PGM file as a 0/1 array; the flag is True when thresholding was applied."""
    return _parse_netpbm(Path(path).read_bytes())


def read_pbm(path) -> np.ndarray:
    pixels, lossy = read_image(path)
    if lossy:
        raise InputError(f"{path} is a grayscale image, not PBM")
    return pixels


def write_pbm(path, pixels, plain: bool = False) -> None:
    img = np.asarray(pixels)
    if img.ndim != 2 or img.size == 0:
        raise InputError("image must be a nonempty 2-D array")
    if np.any((img != 0) & (img != 1)):
        raise InputError("PBM pixels must be 0 or 1")
    height, width = img.shape
    img = img.astype(np.uint8)
    if plain:
        lines = ["P1", f"{width} {height}"]
        for row in img:
            # keep lines under 70 characters
            s = "".join(str(v) for v in row)
            lines.extend(s[i : i + 64] for i in range(0, len(s), 64))
        Path(path).write_text("\n".join(lines) + "\n")
    else:
        header = f"P4\n{width} {height}\n".encode()
        Path(path).write_bytes(header + np.packbits(img, axis=1).tobytes())


def _fmt(x: float) -> str:
    return format(float(x), f".{SIG_DIGITS}g")


def write_bsc_params(path, params: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "b00"])
        for i, b in enumerate(params, start=1):
            w.writerow([i, _fmt(b)])


def read_bsc_params(path) -> list[float]:
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["index", "b00"]:
        raise InputError(f"{path}: expected header 'index,b00'")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise InputError(f"{path}:{lineno}: expected two columns, got {len(row)}")
        try:
            idx, b = int(row[0]), float(row[1])
        except ValueError:
            raise InputError(f"{path}:{lineno}: malformed row {row}") from None
        if idx != len(out) + 1:
            raise InputError(f"{path}:{lineno}: index {idx} out of sequence")
        if not 0.0 <= b <= 1.0 or math.isnan(b):
            raise InputError(f"{path}:{lineno}: b00 = {b} outside [0, 1]")
        out.append(b)
    if not out:
        raise InputError(f"{path}: no channels")
    return out


def write_channels(path, channels: Sequence[Channel]) -> None:
    """CSV of BSC parameters for ``.csv`` paths, JSON matrices otherwise."""
    if str(path).endswith(".csv"):
        params = []
        for ch in channels:
            m = ch.matrix
            if m.shape != (2, 2) or m[0, 0] != m[1, 1]:
                raise InputError("only binary symmetric channels can be written as CSV")
            params.append(float(m[0, 0]))
        write_bsc_params(path, params)
        return
    doc = {"channels": [[[float(_fmt(v)) for v in row] for row in ch.matrix] for ch in channels]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_channels(path) -> list[Channel]:
    if str(path).endswith(".csv"):
        return [bsc(b) for b in read_bsc_params(path)]
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    mats = doc.get("channels") if isinstance(doc, dict) else None
    if not isinstance(mats, list) or not mats:
        raise InputError(f"{path}: expected an object with a nonempty 'channels' list")
    out = []
    for j, m in enumerate(mats):
        try:
            arr = np.array(m, dtype=float)
        except (TypeError, ValueError):
            raise InputError(f"{path}: channel {j} is not a numeric matrix") from None
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InputError(f"{path}: channel {j} is not square")
        sums = arr.sum(axis=1)
        for x, s in enumerate(sums):
            if abs(s - 1.0) > FILE_TOL or np.any(arr[x] < 0):
                raise InputError(f"{path}: channel {j} row {x} is not a probability vector (sum {s!r})")
        out.append(Channel(arr / sums[:, None]))
    return out


def _round_floats(obj: Any) -> Any:
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not math.isfinite(x) else float(_fmt(x))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round_floats(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def report_document(report: dict) -> dict:
    """Order report keys: schema fields first, extras after in insertion order."""
    missing = [k for k in REPORT_FIELDS if k not in report]
    if missing:
        raise InputError(f"report is missing fields {missing}")
    ordered = {k: report[k] for k in REPORT_FIELDS}
    ordered.update((k, v) for k, v in report.items() if k not in ordered)
    return _round_floats(ordered)


def validate_report(doc: dict) -> None:
    """Raise InputError unless ``doc`` follows the report schema."""
    keys = list(doc)
    if keys[: len(REPORT_FIELDS)] != list(REPORT_FIELDS):
        raise InputError(f"report keys out of order or missing: {keys}")
    checks = {
        "algorithm": lambda v: isinstance(v, str),
        "seed": lambda v: v is None or (isinstance(v, int) and 0 <= v < 2**64),
        "n": lambda v: isinstance(v, int) and v >= 1,
        "K": lambda v: isinstance(v, int) and v >= 1,
        "p_hat": lambda v: v is None or (isinstance(v, list) and all(isinstance(x, float) for x in v)),
        "b_hat": lambda v: isinstance(v, list),
        "branch": lambda v: v is None or isinstance(v, str),
        "residuals": lambda v: v is None or isinstance(v, dict),
        "expected_distortion": lambda v: v is None or isinstance(v, float),
        "achieved_distortion_up_to_permutation": lambda v: v is None or isinstance(v, float),
        "runtime_ms": lambda v: isinstance(v, (int, float)) and v >= 0,
    }
    for key, ok in checks.items():
        if not ok(doc[key]):
            raise InputError(f"report field {key!r} has invalid value {doc[key]!r}")


def write_report(path, report: dict) -> dict:
    doc = report_document(report)
    validate_report(doc)
    try:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    except OSError as exc:
        raise InputError(f"cannot write report to {path}: {exc}") from None
    return doc


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(_round_floats(doc), indent=2) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def copy_name(j: int) -> str:
    return f"copy_{j:02d}.pbm"


def write_observations(directory, obs: np.ndarray, shape: tuple[int, int], manifest: dict) -> Path:
    """Write each column of ``obs`` as a PBM image plus ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    h, w = shape
    if obs.shape[0] != h * w:
        raise InputError(f"{obs.shape[0]} pixels do not fill a {w}x{h} image")
    names = []
    for j in range(obs.shape[1]):
        names.append(copy_name(j + 1))
        write_pbm(d / names[-1], obs[:, j].reshape(h, w))
    doc = {"n": int(obs.shape[0]), "K": int(obs.shape[1]), "width": w, "height": h, "copies": names}
    doc.update(manifest)
    write_json(d / "manifest.json", doc)
    return d


def read_observations(directory) -> tuple[np.ndarray, tuple[int, int], dict]:
    d = Path(directory)
    manifest_path = d / "manifest.json"
    manifest = read_json(manifest_path) if manifest_path.exists() else {}
    names: Iterable[str] = manifest.get("copies") or sorted(p.name for p in d.glob("copy_*.pbm"))
    names = list(names)
    if not names:
        raise InputError(f"{d}: no copy_*.pbm files")
    images = [read_pbm(d / name) for name in names]
    shape = images[0].shape
    if any(im.shape != shape for im in images):
        raise InputError(f"{d}: copies have different sizes")
    obs = np.stack([im.ravel() for im in images], axis=1)
    if "K" in manifest and manifest["K"] != obs.shape[1]:
        raise InputError(f"{d}: manifest says K={manifest['K']}, found {obs.shape[1]} copies")
    return obs, shape, manifest


def system_document(sys) -> dict:
    return {
        "source": [float(v) for v in sys.source.probs],
        "channels": [[[float(v) for v in row] for row in ch.matrix] for ch in sys.channels],
    }


def write_system(path, sys) -> None:
    write_json(path, system_document(sys))


def read_system(path):
    """Read ``{"source": [...], "channels": [...]}``; channels may be BSC parameters."""
    from .model import DependentComponentSystem, Distribution

    doc = read_json(path)
    if not isinstance(doc, dict) or "source" not in doc or "channels" not in doc:
        raise InputError(f"{path}: expected an object with 'source' and 'channels'")
    try:
        source = Distribution(doc["source"], tol=FILE_TOL)
        chans = []
        for j, c in enumerate(doc["channels"]):
            if isinstance(c, (int, float)):
                chans.append(bsc(float(c)))
                continue
            arr = np.array(c, dtype=float)
            sums = arr.sum(axis=1) if arr.ndim == 2 else None
            if sums is None or np.any(np.abs(sums - 1.0) > FILE_TOL):
                bad = 0 if sums is None else int(np.flatnonzero(np.abs(sums - 1.0) > FILE_TOL)[0])
                raise InputError(f"{path}: channel {j} row {bad} is not a probability vector")
            chans.append(Channel(arr / sums[:, None]))
        return DependentComponentSystem(source, tuple(chans))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: {exc}") from None


def read_distortion(path):
    from .model import DistortionMeasure

    doc = read_json(path)
    mat = doc.get("distortion") if isinstance(doc, dict) else doc
    try:
        return DistortionMeasure(mat)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: {exc}") from None
