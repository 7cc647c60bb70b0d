"""WAV reading and writing with sample-format bookkeeping."""
from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .errors import DataError

MIN_RATE = 16000
MAX_RATE = 48000


@dataclass
class Audio:
    samples: np.ndarray
    rate: int
    sample_format: str = "float32"  # one of pcm16, pcm24, pcm32, float32, float64


def _pcm_decode(raw: bytes, width: int) -> np.ndarray:
    if width == 2:
        return np.frombuffer(raw, "<i2") / 32768.0
    if width == 3:
        b = np.frombuffer(raw, np.uint8).reshape(-1, 3).astype(np.int32)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        v = np.where(v >= 1 << 23, v - (1 << 24), v)
        return v / float(1 << 23)
    if width == 4:
        return np.frombuffer(raw, "<i4") / 2147483648.0
    raise DataError(f"unsupported PCM sample width {8 * width} bits")


def _check(path, n_channels: int, rate: int):
    if n_channels != 1:
        raise DataError(f"{path}: expected mono audio, got {n_channels} channels")
    if not MIN_RATE <= rate <= MAX_RATE:
        raise DataError(f"{path}: unsupported sample rate {rate} Hz "
                        f"(accepted {MIN_RATE}-{MAX_RATE})")


def read_wav(path) -> Audio:
    """Read a mono WAV file as float64 in [-1, 1].

    Accepts 16/24/32-bit PCM and 32/64-bit float. Stereo is rejected.
    """
    try:
        with wave.open(str(path), "rb") as w:
            _check(path, w.getnchannels(), w.getframerate())
            width = w.getsampwidth()
            x = _pcm_decode(w.readframes(w.getnframes()), width)
            return Audio(x.astype(np.float64), w.getframerate(), f"pcm{8 * width}")
    except wave.Error:
        pass  # not integer PCM; try IEEE float below
    except OSError as exc:
        raise DataError(f"cannot read WAV {path}: {exc}") from exc
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read WAV {path}: {exc}") from exc
    _check(path, 1 if data.ndim == 1 else data.shape[1], rate)
    if data.dtype not in (np.float32, np.float64):
        raise DataError(f"{path}: unsupported sample format {data.dtype}")
    return Audio(data.astype(np.float64), int(rate), str(data.dtype))


def write_wav(path, samples, rate: int, sample_format: str = "float32") -> None:
    """Write mono samples in the given format (see :class:`Audio`)."""
    x = np.asarray(samples, dtype=np.float64)
    if sample_format.startswith("pcm"):
        bits = int(sample_format[3:])
        full = float(1 << (bits - 1))
        v = np.clip(np.round(x * full), -full, full - 1).astype(np.int64)
        if bits == 16:
            raw = v.astype("<i2").tobytes()
        elif bits == 24:
            u = (v & 0xFFFFFF).astype(np.uint32)
            raw = np.stack([u & 0xFF, (u >> 8) & 0xFF, (u >> 16) & 0xFF], axis=1)
            raw = raw.astype(np.uint8).tobytes()
        elif bits == 32:
            raw = v.astype("<i4").tobytes()
        else:
            raise DataError(f"unsupported sample format {sample_format}")
        with wave.open(str(path), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(bits // 8)
            w.setframerate(int(rate))
            w.writeframes(raw)
    elif sample_format in ("float32", "float64"):
        wavfile.write(path, int(rate), x.astype(sample_format))
    else:
        raise DataError(f"unsupported sample format {sample_format}")
