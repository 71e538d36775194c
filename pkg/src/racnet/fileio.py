"""Binary file formats and the loss-history CSV.

Feature file (.racf), little-endian:
    magic "RACF" | u32 version=1 | u32 T | u32 S1 | u32 S2 | u32 d_f
    | T*S1*S2*d_f float32, row-major (t, s1, s2, c)

Checkpoint file (.racw), little-endian:
    magic "RACW" | u32 version | u32 tensor_count
    per tensor: u16 name_len | name UTF-8 | u8 rank | u32 dims[rank]
    | float32 data row-major
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ValidationError

RACF_MAGIC = b"RACF"
RACW_MAGIC = b"RACW"
RACF_VERSION = 1
RACW_VERSION = 1


def write_racf(path, features: np.ndarray) -> None:
    if features.ndim != 4:
        raise ValidationError(f"RACF features must be [T, S1, S2, d_f], got {features.shape}")
    data = np.ascontiguousarray(features, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(RACF_MAGIC)
        fh.write(struct.pack("<5I", RACF_VERSION, *features.shape))
        fh.write(data.tobytes())


def _read_exact(fh, n: int, path, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise ValidationError(f"{path}: truncated file while reading {what}")
    return buf


def read_racf(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, path, "magic") != RACF_MAGIC:
            raise ValidationError(f"{path}: not a RACF file (bad magic)")
        version, t, s1, s2, d_f = struct.unpack("<5I", _read_exact(fh, 20, path, "header"))
        if version != RACF_VERSION:
            raise ValidationError(f"{path}: unsupported RACF version {version}")
        count = t * s1 * s2 * d_f
        raw = _read_exact(fh, 4 * count, path, "feature data")
        if fh.read(1):
            raise ValidationError(f"{path}: trailing bytes after feature data")
    return np.frombuffer(raw, dtype="<f4").reshape(t, s1, s2, d_f).copy()


def write_racw(path, tensors: dict[str, np.ndarray], version: int = RACW_VERSION) -> None:
    with open(path, "wb") as fh:
        fh.write(RACW_MAGIC)
        fh.write(struct.pack("<2I", version, len(tensors)))
        for name, tensor in tensors.items():
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValidationError(f"tensor name too long: {name!r}")
            arr = np.ascontiguousarray(tensor, dtype="<f4")
            if arr.ndim > 0xFF:
                raise ValidationError(f"tensor rank {arr.ndim} exceeds format limit")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def read_racw(path) -> dict[str, np.ndarray]:
    tensors: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, path, "magic") != RACW_MAGIC:
            raise ValidationError(f"{path}: not a RACW file (bad magic)")
        version, count = struct.unpack("<2I", _read_exact(fh, 8, path, "header"))
        if version != RACW_VERSION:
            raise ValidationError(f"{path}: unsupported RACW version {version}")
        for i in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, path, f"tensor {i} name length"))
            name = _read_exact(fh, name_len, path, f"tensor {i} name").decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exact(fh, 1, path, f"{name} rank"))
            dims = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank, path, f"{name} dims"))
            size = int(np.prod(dims, dtype=np.int64)) if rank else 1
            raw = _read_exact(fh, 4 * size, path, f"{name} data")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
        if fh.read(1):
            raise ValidationError(f"{path}: trailing bytes after last tensor")
    return tensors


def write_loss_history(path, history) -> None:
    """history: iterable of (step, loss); repr keeps float64 round-trip exact."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,loss\n")
        for step, loss in history:
            fh.write(f"{int(step)},{float(loss)!r}\n")


def read_loss_history(path) -> list[tuple[int, float]]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "step,loss":
            raise ValidationError(f"{path}: bad loss history header {header!r}")
        out = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                step_s, loss_s = line.split(",")
                out.append((int(step_s), float(loss_s)))
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: bad loss row {line!r}") from None
    return out
