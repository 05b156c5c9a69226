"""Binary file containers.

Dense tensors (DTF1): magic, dtype code (0 = float32, 1 = float64), ndim,
little-endian u64 dims, then row-major little-endian scalars.

Quantized tensors (PVQT): a fixed 45-byte header (magic, version u16,
flags u16, N u64, G u64, D u32, K u32, bits_per_group u32, amplitude_bits u8,
coherence seed u64; flags bit0 = coherence, bit1 = hessian used,
bit2 = amplitudes quantized), the packed direction codes (ceil(N*G*b/8)
bytes, row-major), then the amplitude payload: per row G packed levels plus a
float32 row norm when quantized, else N*G float32 amplitudes.  Everything is
little-endian; declared sizes must match the payload exactly and trailing
bytes are an error.

Writes go to a temporary file and rename into place, so a failed run never
leaves a partial file behind.
"""

from __future__ import annotations

import contextlib
import os
import struct
import tempfile
import zlib
from dataclasses import dataclass

import numpy as np

from .codec import PackedCodes, pack_codes, unpack_codes
from .pipeline import PvqConfig, QuantizedTensor

DENSE_MAGIC = b"DTF1"
PVQ_MAGIC = b"PVQT"
PVQ_VERSION = 1

FLAG_COHERENCE = 1 << 0
FLAG_HESSIAN = 1 << 1
FLAG_AMP_QUANTIZED = 1 << 2

_HEADER = struct.Struct("<4sHHQQIIIBQ")
_F32 = struct.Struct("<f")

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


class FormatError(ValueError):
    """A file violates the container contract."""


def _atomic_write(path, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".pvq-tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


# -- dense tensors ----------------------------------------------------------


def write_dense(path, array: np.ndarray) -> None:
    array = np.asarray(array)
    if array.dtype == np.float32:
        code = 0
    elif array.dtype == np.float64:
        code = 1
    else:
        raise FormatError(f"dense files hold float32/float64, got {array.dtype}")
    head = DENSE_MAGIC + bytes((code, array.ndim))
    head += b"".join(struct.pack("<Q", d) for d in array.shape)
    payload = np.ascontiguousarray(array).astype(_DTYPE_CODES[code], copy=False).tobytes()
    _atomic_write(path, head + payload)


def read_dense(path) -> np.ndarray:
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < 6:
        raise FormatError(f"truncated header: {len(buf)} bytes, need at least 6")
    if buf[:4] != DENSE_MAGIC:
        raise FormatError(f"bad magic at offset 0: {buf[:4]!r}")
    code, ndim = buf[4], buf[5]
    if code not in _DTYPE_CODES:
        raise FormatError(f"unknown dtype code {code} at offset 4")
    pos = 6
    dims = []
    for i in range(ndim):
        if pos + 8 > len(buf):
            raise FormatError(f"truncated dims: dim {i} at offset {pos}")
        dims.append(struct.unpack_from("<Q", buf, pos)[0])
        pos += 8
    dtype = _DTYPE_CODES[code]
    count = 1
    for d in dims:
        count *= d
    need = count * dtype.itemsize
    if len(buf) - pos != need:
        raise FormatError(
            f"payload at offset {pos} is {len(buf) - pos} bytes, expected {need}"
        )
    return np.frombuffer(buf, dtype=dtype, offset=pos).reshape(dims).copy()


# -- quantized tensors ------------------------------------------------------


def write_quantized(path, qt: QuantizedTensor) -> None:
    config = qt.config
    D = config.groupsize
    N, C = qt.rows, qt.cols
    if C % D:
        raise FormatError(f"cols {C} not a multiple of groupsize {D}")
    G = C // D
    if qt.codes.bits_per_group != config.bits_per_group:
        raise FormatError("packed code width disagrees with config")
    if qt.codes.group_count != N * G:
        raise FormatError(
            f"packed stream holds {qt.codes.group_count} codes, expected {N * G}"
        )
    flags = 0
    if config.coherence:
        flags |= FLAG_COHERENCE
    if qt.hessian_used:
        flags |= FLAG_HESSIAN
    if config.amplitude_bits > 0:
        flags |= FLAG_AMP_QUANTIZED

    head = _HEADER.pack(
        PVQ_MAGIC,
        PVQ_VERSION,
        flags,
        N,
        G,
        D,
        config.pulses,
        config.bits_per_group,
        config.amplitude_bits,
        config.coherence_seed,
    )
    parts = [head, qt.codes.data]
    if config.amplitude_bits > 0:
        levels = np.asarray(qt.amplitude_levels)
        norms = np.asarray(qt.row_norms_sq, dtype=np.float32)
        if levels.shape != (N, G) or norms.shape != (N,):
            raise FormatError("amplitude payload shapes disagree with header")
        for r in range(N):
            parts.append(pack_codes((int(v) for v in levels[r]), config.amplitude_bits).data)
            parts.append(_F32.pack(float(norms[r])))
    else:
        amps = np.asarray(qt.amplitudes, dtype=np.float32)
        if amps.shape != (N, G):
            raise FormatError("amplitude payload shapes disagree with header")
        parts.append(amps.astype("<f4").tobytes())
    _atomic_write(path, b"".join(parts))


def read_quantized(path) -> QuantizedTensor:
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < _HEADER.size:
        raise FormatError(
            f"truncated header: {len(buf)} bytes, need {_HEADER.size}"
        )
    magic, version, flags, N, G, D, K, bits_per_group, amplitude_bits, seed = _HEADER.unpack_from(buf, 0)
    if magic != PVQ_MAGIC:
        raise FormatError(f"bad magic at offset 0: {magic!r}")
    if version != PVQ_VERSION:
        raise FormatError(f"unsupported version {version} at offset 4")
    if D < 2 or N < 1 or G < 1 or bits_per_group < 1:
        raise FormatError("degenerate header fields")
    config = PvqConfig(
        groupsize=D,
        bits_per_group=bits_per_group,
        amplitude_bits=amplitude_bits,
        coherence=bool(flags & FLAG_COHERENCE),
        coherence_seed=seed,
        hessian_feedback=bool(flags & FLAG_HESSIAN),
    )
    if config.pulses != K:
        raise FormatError(
            f"header K={K} disagrees with derived pulse count {config.pulses}"
        )
    if bool(flags & FLAG_AMP_QUANTIZED) != (amplitude_bits > 0):
        raise FormatError("amplitude flag disagrees with amplitude_bits")

    pos = _HEADER.size
    dir_bytes = (N * G * bits_per_group + 7) // 8
    if len(buf) - pos < dir_bytes:
        raise FormatError(
            f"direction payload at offset {pos}: {len(buf) - pos} bytes, expected {dir_bytes}"
        )
    codes = PackedCodes(bits_per_group, N * G, buf[pos : pos + dir_bytes])
    pos += dir_bytes

    qt = QuantizedTensor(
        rows=N,
        cols=G * D,
        config=config,
        codes=codes,
        hessian_used=bool(flags & FLAG_HESSIAN),
    )
    if amplitude_bits > 0:
        row_bytes = (G * amplitude_bits + 7) // 8
        levels = np.zeros((N, G), dtype=np.uint32)
        norms = np.zeros(N, dtype=np.float32)
        for r in range(N):
            if len(buf) - pos < row_bytes + 4:
                raise FormatError(
                    f"amplitude record for row {r} at offset {pos}: "
                    f"{len(buf) - pos} bytes, expected {row_bytes + 4}"
                )
            packed = PackedCodes(amplitude_bits, G, buf[pos : pos + row_bytes])
            levels[r] = [c.to_int() for c in unpack_codes(packed)]
            pos += row_bytes
            norms[r] = _F32.unpack_from(buf, pos)[0]
            pos += 4
        qt.amplitude_levels = levels
        qt.row_norms_sq = norms
    else:
        need = N * G * 4
        if len(buf) - pos < need:
            raise FormatError(
                f"amplitude payload at offset {pos}: {len(buf) - pos} bytes, expected {need}"
            )
        qt.amplitudes = (
            np.frombuffer(buf, dtype="<f4", count=N * G, offset=pos).reshape(N, G).copy()
        )
        pos += need
    if pos != len(buf):
        raise FormatError(f"trailing bytes: {len(buf) - pos} beyond offset {pos}")
    return qt


@dataclass(frozen=True)
class FileInfo:
    """Parsed header plus section sizes and checksums of a PVQT file."""

    rows: int
    cols: int
    groups_per_row: int
    groupsize: int
    pulses: int
    bits_per_group: int
    amplitude_bits: int
    coherence: bool
    coherence_seed: int
    hessian_used: bool
    version: int
    header_bytes: int
    direction_bytes: int
    amplitude_bytes: int
    file_bytes: int
    direction_crc32: int
    amplitude_crc32: int
    stored_bpw: float


def inspect_file(path) -> FileInfo:
    """Validate a PVQT file and report layout, checksums, and stored BPW."""
    qt = read_quantized(path)  # full validation
    with open(path, "rb") as f:
        buf = f.read()
    config = qt.config
    N, C, G = qt.rows, qt.cols, qt.groups
    dir_bytes = (N * G * config.bits_per_group + 7) // 8
    amp_bytes = len(buf) - _HEADER.size - dir_bytes
    dir_payload = buf[_HEADER.size : _HEADER.size + dir_bytes]
    amp_payload = buf[_HEADER.size + dir_bytes :]
    return FileInfo(
        rows=N,
        cols=C,
        groups_per_row=G,
        groupsize=config.groupsize,
        pulses=config.pulses,
        bits_per_group=config.bits_per_group,
        amplitude_bits=config.amplitude_bits,
        coherence=config.coherence,
        coherence_seed=config.coherence_seed,
        hessian_used=qt.hessian_used,
        version=qt.version,
        header_bytes=_HEADER.size,
        direction_bytes=dir_bytes,
        amplitude_bytes=amp_bytes,
        file_bytes=len(buf),
        direction_crc32=zlib.crc32(dir_payload),
        amplitude_crc32=zlib.crc32(amp_payload),
        stored_bpw=8.0 * (dir_bytes + amp_bytes) / (N * C),
    )
