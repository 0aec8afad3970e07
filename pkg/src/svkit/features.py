"""Log mel-filterbank extraction for 16 kHz PCM audio.

Per frame: hamming window, zero-padded FFT power spectrum, triangular
mel filterbank, log(x + floor).  Defaults give 64 filters over 25 ms
windows with a 10 ms hop.  No pre-emphasis and no mean normalization.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "AudioSignal",
    "FeatureConfig",
    "FeatureMatrix",
    "hamming_window",
    "frame_signal",
    "power_spectrum",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filterbank_matrix",
    "log_mel",
    "read_wav",
]


@dataclass(frozen=True)
class AudioSignal:
    """Mono PCM samples in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DataError("audio samples must be a 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise DataError("audio samples must be finite")
        if samples.size and (samples.min() < -1.0 or samples.max() > 1.0):
            raise DataError("audio samples must lie in [-1, 1]")
        if int(self.sample_rate) <= 0:
            raise DataError("sample rate must be positive")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FeatureConfig:
    n_mels: int = 64
    nfft: int = 512
    f_min: float = 20.0
    f_max: float = 7600.0
    sample_rate: int = 16000
    window_seconds: float = 0.025
    hop_seconds: float = 0.010
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.n_mels < 1:
            raise ValueError("n_mels must be positive")
        if self.nfft < 2 or self.nfft & (self.nfft - 1):
            raise ValueError("nfft must be a power of two >= 2")
        if not 0.0 <= self.f_min < self.f_max <= self.sample_rate / 2:
            raise ValueError("need 0 <= f_min < f_max <= sample_rate/2")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.window_seconds <= 0 or self.hop_seconds <= 0:
            raise ValueError("window and hop must be positive")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    @property
    def window_length(self) -> int:
        return round(self.window_seconds * self.sample_rate)

    @property
    def hop_length(self) -> int:
        return round(self.hop_seconds * self.sample_rate)


@dataclass(frozen=True)
class FeatureMatrix:
    frames: np.ndarray  # (T, n_mels) float64
    frame_shift: float  # seconds
    n_mels: int

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != self.n_mels:
            raise DataError("feature frames must be (T, n_mels)")
        if not np.all(np.isfinite(frames)):
            raise DataError("feature values must be finite")
        if self.frame_shift <= 0:
            raise DataError("frame_shift must be positive")
        object.__setattr__(self, "frames", frames)


def hamming_window(n: int) -> np.ndarray:
    """w[k] = 0.54 - 0.46*cos(2*pi*k/(n-1)) for k in 0..n-1."""
    if n < 2:
        raise ValueError("window length must be >= 2")
    k = np.arange(n, dtype=np.float64)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / (n - 1))


def frame_signal(signal, window_length: int, hop_length: int) -> np.ndarray:
    """Slice a signal into overlapping frames.

    Frame t covers samples [t*hop, t*hop + window); the frame count is
    floor((len - window)/hop) + 1.  A signal shorter than one window is
    an error.
    """
    samples = signal.samples if isinstance(signal, AudioSignal) else signal
    samples = np.asarray(samples, dtype=np.float64)
    if window_length < 1 or hop_length < 1:
        raise ValueError("window and hop lengths must be positive")
    if samples.size < window_length:
        raise DataError(
            f"signal of {samples.size} samples is shorter than one "
            f"{window_length}-sample window"
        )
    n_frames = (samples.size - window_length) // hop_length + 1
    idx = hop_length * np.arange(n_frames)[:, None] + np.arange(window_length)[None, :]
    return samples[idx]


def power_spectrum(frame, nfft: int) -> np.ndarray:
    """Magnitude-squared DFT of a zero-padded frame, bins 0..nfft/2."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1 or frame.size < 1:
        raise ValueError("frame must be a non-empty 1-D array")
    if nfft < frame.size:
        raise ValueError(f"nfft {nfft} smaller than frame length {frame.size}")
    if nfft < 2 or nfft & (nfft - 1):
        raise ValueError("nfft must be a power of two")
    spec = np.fft.rfft(frame, n=nfft)
    return np.abs(spec) ** 2


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank_matrix(
    n_mels: int, nfft: int, sample_rate: int, f_min: float, f_max: float
) -> np.ndarray:
    """Triangular filters with peaks equally spaced on the mel scale.

    Returns an (n_mels, nfft//2 + 1) matrix of nonnegative weights.  A
    filter narrower than the FFT bin spacing would have no positive
    weight and is rejected.
    """
    if n_mels < 1:
        raise ValueError("n_mels must be positive")
    if not 0.0 <= f_min < f_max <= sample_rate / 2:
        raise ValueError("need 0 <= f_min < f_max <= sample_rate/2")
    mel_pts = np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    left = hz_pts[:-2][:, None]
    center = hz_pts[1:-1][:, None]
    right = hz_pts[2:][:, None]
    if np.any(center - left <= 0) or np.any(right - center <= 0):
        raise ValueError("mel filter edges collapsed; widen the frequency range")
    freqs = np.arange(nfft // 2 + 1, dtype=np.float64) * (sample_rate / nfft)
    rising = (freqs[None, :] - left) / (center - left)
    falling = (right - freqs[None, :]) / (right - center)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    dead = ~np.any(weights > 0, axis=1)
    if np.any(dead):
        m = int(np.nonzero(dead)[0][0])
        raise ValueError(
            f"mel filter {m} has zero width at nfft={nfft}; "
            "increase nfft or reduce n_mels"
        )
    return weights


def log_mel(signal: AudioSignal, config: FeatureConfig | None = None) -> FeatureMatrix:
    """Extract the log mel-filterbank feature matrix from a signal.

    The signal's rate must match the configured rate (16 kHz default);
    other rates are rejected rather than resampled.
    """
    config = config or FeatureConfig()
    if signal.sample_rate != config.sample_rate:
        raise DataError(
            f"expected {config.sample_rate} Hz input, got {signal.sample_rate} Hz"
        )
    win = config.window_length
    if config.nfft < win:
        raise ValueError(f"nfft {config.nfft} smaller than window of {win} samples")
    frames = frame_signal(signal.samples, win, config.hop_length)
    windowed = frames * hamming_window(win)[None, :]
    spec = np.abs(np.fft.rfft(windowed, n=config.nfft, axis=1)) ** 2
    bank = mel_filterbank_matrix(
        config.n_mels, config.nfft, config.sample_rate, config.f_min, config.f_max
    )
    feats = np.log(spec @ bank.T + config.log_floor)
    return FeatureMatrix(
        frames=feats,
        frame_shift=config.hop_length / config.sample_rate,
        n_mels=config.n_mels,
    )


def read_wav(source: str | Path | bytes) -> AudioSignal:
    """Read a 16-bit PCM mono RIFF/WAVE file, normalized by 32768."""
    if isinstance(source, (bytes, bytearray)):
        fh = io.BytesIO(bytes(source))
    else:
        fh = str(source)
    try:
        with wave.open(fh, "rb") as w:
            if w.getnchannels() != 1:
                raise DataError(
                    f"only mono WAV is supported, got {w.getnchannels()} channels"
                )
            if w.getsampwidth() != 2:
                raise DataError("only 16-bit PCM WAV is supported")
            if w.getcomptype() != "NONE":
                raise DataError(f"unsupported WAV compression {w.getcomptype()!r}")
            rate = w.getframerate()
            raw = w.readframes(w.getnframes())
    except wave.Error as exc:
        raise DataError(f"not a readable WAV file: {exc}") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioSignal(samples=samples, sample_rate=rate)
