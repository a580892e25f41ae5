"""Audio and tensor file I/O.

WAV decoding is done by hand (RIFF chunk walk) because the pipeline needs
both PCM16 and IEEE-float payloads plus precise error reporting. Tensors go
through the DYST container, a fixed little-endian format documented in the
README; spectrogram renders use binary PGM/PPM.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    MissingFile,
    ShapeOverflow,
    TruncatedData,
    UnsupportedEncoding,
    ValueOutOfRange,
)

PIPELINE_RATE = 16000  # every downstream stage assumes 16 kHz mono

DYST_MAGIC = b"DYST"
DYST_VERSION = 1


@dataclass
class AudioClip:
    """Mono waveform in [-1, 1] with its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 1:
            raise ValueOutOfRange("AudioClip samples must be 1-D mono")
        if self.sample_rate <= 0:
            raise ValueOutOfRange(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.size and (np.max(self.samples) > 1.0 or np.min(self.samples) < -1.0):
            raise ValueOutOfRange("samples outside [-1, 1]")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def _read_chunks(data: bytes):
    """Yield (chunk_id, payload_offset, declared_size) for each RIFF sub-chunk."""
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        size = struct.unpack_from("<I", data, pos + 4)[0]
        yield cid, pos + 8, size
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def decode_wav_bytes(data: bytes) -> AudioClip:
    """Decode a RIFF/WAVE byte string into a mono AudioClip."""
    if len(data) < 4 or data[:4] != b"RIFF":
        raise BadMagic("not a RIFF file")
    if len(data) < 12 or data[8:12] != b"WAVE":
        raise BadMagic("RIFF container is not WAVE")

    fmt = None
    payload = None
    for cid, off, size in _read_chunks(data):
        if cid == b"fmt " and fmt is None:
            if size < 16 or off + 16 > len(data):
                raise TruncatedData("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", data, off)
        elif cid == b"data" and payload is None:
            if off + size > len(data):
                raise TruncatedData(
                    f"data chunk declares {size} bytes, only {len(data) - off} present"
                )
            payload = data[off:off + size]
    if fmt is None or payload is None:
        raise TruncatedData("missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels; only mono/stereo supported")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (2 * channels)],
                            dtype="<i2")
        samples = raw.astype(np.float32) / 32768.0
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (4 * channels)],
                            dtype="<f4")
        samples = np.clip(raw.astype(np.float32), -1.0, 1.0)
    else:
        raise UnsupportedEncoding(
            f"format tag {audio_format} at {bits} bits; need PCM16 or float32"
        )

    if channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1)
    return AudioClip(samples=samples.astype(np.float32), sample_rate=int(sample_rate))


def load_wav(path) -> AudioClip:
    """Load a WAV file (PCM16 or float32, mono or stereo) as a mono clip."""
    if not os.path.isfile(path):
        raise MissingFile(str(path))
    with open(path, "rb") as f:
        return decode_wav_bytes(f.read())


def write_wav_pcm16(clip: AudioClip, path) -> None:
    """Minimal PCM16 mono writer; the round-trip reference for load_wav."""
    ints = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, clip.sample_rate,
                                    clip.sample_rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(payload))
    with open(path, "wb") as f:
        f.write(header + payload)


def encode_wav_pcm16(clip: AudioClip) -> bytes:
    """PCM16 mono WAV as bytes (same encoding as write_wav_pcm16)."""
    ints = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    out = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    out += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, clip.sample_rate,
                                 clip.sample_rate * 2, 2, 16)
    out += b"data" + struct.pack("<I", len(payload))
    return out + payload


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Linear-interpolation resample to target_rate."""
    if target_rate <= 0:
        raise ValueOutOfRange(f"target_rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate:
        return AudioClip(samples=clip.samples.copy(), sample_rate=clip.sample_rate)
    n_out = int(round(len(clip.samples) * target_rate / clip.sample_rate))
    if n_out == 0 or len(clip.samples) == 0:
        return AudioClip(samples=np.zeros(0, dtype=np.float32), sample_rate=target_rate)
    positions = np.arange(n_out, dtype=np.float64) * (clip.sample_rate / target_rate)
    positions = np.minimum(positions, len(clip.samples) - 1)
    out = np.interp(positions, np.arange(len(clip.samples)), clip.samples.astype(np.float64))
    return AudioClip(samples=out.astype(np.float32), sample_rate=target_rate)


# -- DYST tensor container ---------------------------------------------------

def save_tensor(t: np.ndarray, path) -> None:
    """Write a float32 tensor in DYST format (bit-exact round trip)."""
    t = np.asarray(t, dtype=np.float32)
    if t.ndim == 0:
        raise ValueOutOfRange("tensor rank must be >= 1")
    if t.ndim > 255:
        raise ValueOutOfRange("tensor rank exceeds u8")
    t = np.ascontiguousarray(t)
    header = DYST_MAGIC + struct.pack("<I", DYST_VERSION) + struct.pack("B", t.ndim)
    header += struct.pack(f"<{t.ndim}I", *t.shape)
    with open(path, "wb") as f:
        f.write(header + t.astype("<f4").tobytes())


def decode_tensor_bytes(data: bytes) -> np.ndarray:
    if len(data) < 4 or data[:4] != DYST_MAGIC:
        raise BadMagic("not a DYST file")
    if len(data) < 9:
        raise TruncatedData("DYST header truncated")
    version = struct.unpack_from("<I", data, 4)[0]
    if version != DYST_VERSION:
        raise UnsupportedEncoding(f"DYST version {version}")
    rank = data[8]
    if rank == 0:
        raise ShapeOverflow("rank 0 tensor")
    head_end = 9 + 4 * rank
    if len(data) < head_end:
        raise TruncatedData("DYST dim table truncated")
    dims = struct.unpack_from(f"<{rank}I", data, 9)
    count = int(np.prod(dims, dtype=np.int64))
    payload = data[head_end:]
    if len(payload) != 4 * count:
        raise ShapeOverflow(
            f"dims {dims} declare {count} floats, payload holds {len(payload) // 4}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def load_tensor(path) -> np.ndarray:
    if not os.path.isfile(path):
        raise MissingFile(str(path))
    with open(path, "rb") as f:
        return decode_tensor_bytes(f.read())


# -- PGM / PPM image output ---------------------------------------------------

def _to_bytes_255(values: np.ndarray) -> np.ndarray:
    if values.size and (np.min(values) < 0.0 or np.max(values) > 1.0):
        raise ValueOutOfRange("image values must lie in [0, 1]")
    return np.floor(values * 255.0 + 0.5).astype(np.uint8)  # round half up


def encode_pgm(matrix: np.ndarray) -> bytes:
    """Binary PGM (P5, maxval 255) of a 2-D grid in [0, 1]."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueOutOfRange("PGM wants a 2-D grid")
    h, w = m.shape
    return f"P5\n{w} {h}\n255\n".encode() + _to_bytes_255(m).tobytes()


def save_image_gray(matrix: np.ndarray, path) -> None:
    with open(path, "wb") as f:
        f.write(encode_pgm(matrix))


def encode_ppm(planes: np.ndarray) -> bytes:
    """Binary PPM (P6) of a [3, H, W] grid in [0, 1]."""
    p = np.asarray(planes, dtype=np.float64)
    if p.ndim != 3 or p.shape[0] != 3:
        raise ValueOutOfRange("PPM wants a [3, H, W] grid")
    _, h, w = p.shape
    interleaved = np.moveaxis(_to_bytes_255(p), 0, -1)  # H x W x 3
    return f"P6\n{w} {h}\n255\n".encode() + interleaved.tobytes()


def save_image_rgb(planes: np.ndarray, path) -> None:
    with open(path, "wb") as f:
        f.write(encode_ppm(planes))
