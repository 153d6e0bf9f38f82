"""STFT analysis/synthesis and frame-energy primitives.

The frame layout is chosen so chunked and offline processing coincide
exactly: analysis frames sit on an absolute grid of ``hop`` samples with the
signal zero-padded by ``win - hop`` on the left, giving

    T = ceil((len + win - hop) / hop)

frames for a signal of ``len`` samples.  With the 400/160 defaults at 16 kHz
one 600 ms chunk is exactly 60 hops, so chunk boundaries always fall on the
frame grid.  :class:`ChunkStft` / :class:`ChunkOla` expose the same transform
as a push/flush stream whose output is bit-identical to the offline pair
:func:`stft` / :func:`istft`.

Square-root Hann is applied on both analysis and synthesis; reconstruction
divides by the accumulated squared window (floored at 1e-8), which makes the
round trip exact for any hop and keeps masked reconstructions smooth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_WSUM_FLOOR = 1e-8


def _sqrt_hann(n: int) -> np.ndarray:
    # periodic Hann, as used for spectral processing (not np.hanning's symmetric one)
    return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n))


@dataclass(frozen=True)
class StftParams:
    """Transform geometry: defaults are 32 ms FFT, 25 ms window, 10 ms hop."""

    fft_size: int = 512
    win_length: int = 400
    hop: int = 160

    def __post_init__(self):
        if not (0 < self.hop <= self.win_length <= self.fft_size):
            raise ValueError(
                f"need 0 < hop <= win_length <= fft_size, got {self.hop}/{self.win_length}/{self.fft_size}"
            )

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def pad_left(self) -> int:
        return self.win_length - self.hop

    def window(self) -> np.ndarray:
        return _sqrt_hann(self.win_length)

    def num_frames(self, length: int) -> int:
        return -(-(length + self.win_length - self.hop) // self.hop)


@dataclass
class Spectrogram:
    """T x F complex frames plus enough bookkeeping to invert exactly."""

    frames: np.ndarray
    params: StftParams
    origin_length: int

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.complex128)
        if self.frames.ndim != 2 or self.frames.shape[1] != self.params.bins:
            raise ValueError(
                f"frames must be (T, {self.params.bins}), got {self.frames.shape}"
            )

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.frames)


def stft(signal: np.ndarray, params: StftParams = StftParams()) -> Spectrogram:
    """Analyze a single-channel signal; bin 0 is DC."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"stft expects a 1-D signal, got shape {x.shape}")
    if x.size == 0:
        raise ValueError("stft of an empty signal")
    frames = _analyze_frames(_padded(x, params), params)
    return Spectrogram(frames, params, origin_length=x.size)


def istft(spec: Spectrogram) -> np.ndarray:
    """Weighted overlap-add inverse, truncated to the original length."""
    params = spec.params
    t = spec.num_frames
    padded_len = (t - 1) * params.hop + params.win_length
    acc = np.zeros(padded_len)
    wsum = np.zeros(padded_len)
    _overlap_add(spec.frames, params, acc, wsum, 0)
    out = acc / np.maximum(wsum, _WSUM_FLOOR)
    start = params.pad_left
    return out[start : start + spec.origin_length]


def frame_rms(signal: np.ndarray) -> float:
    """Root mean square; 0 for empty input."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(x * x)))


def _padded(x: np.ndarray, params: StftParams) -> np.ndarray:
    t = params.num_frames(x.size)
    padded_len = (t - 1) * params.hop + params.win_length
    out = np.zeros(padded_len)
    out[params.pad_left : params.pad_left + x.size] = x
    return out


def _analyze_frames(padded: np.ndarray, params: StftParams) -> np.ndarray:
    """rfft of every windowed frame of an already-padded buffer."""
    n = (padded.size - params.win_length) // params.hop + 1
    strided = np.lib.stride_tricks.sliding_window_view(padded, params.win_length)[
        :: params.hop
    ][:n]
    return np.fft.rfft(strided * params.window(), n=params.fft_size, axis=1)


def _overlap_add(
    frames: np.ndarray,
    params: StftParams,
    acc: np.ndarray,
    wsum: np.ndarray,
    offset: int,
) -> None:
    """Add synthesis-windowed frames into acc/wsum starting at ``offset``."""
    win = params.window()
    w2 = win * win
    segs = np.fft.irfft(frames, n=params.fft_size, axis=1)[:, : params.win_length] * win
    for i in range(frames.shape[0]):
        lo = offset + i * params.hop
        acc[lo : lo + params.win_length] += segs[i]
        wsum[lo : lo + params.win_length] += w2


class ChunkStft:
    """Streaming analysis over an absolute frame grid.

    ``push`` accepts any number of whole hops and returns their frames;
    ``finish`` takes the final partial hop (possibly empty) and returns the
    remaining frames, identical to what :func:`stft` of the concatenated
    signal would have produced.
    """

    def __init__(self, params: StftParams = StftParams()):
        self.params = params
        self._carry = np.zeros(params.pad_left)
        self._consumed = 0
        self._done = False

    def push(self, samples: np.ndarray) -> np.ndarray:
        if self._done:
            raise ValueError("push after finish")
        x = np.asarray(samples, dtype=np.float64)
        if x.size % self.params.hop != 0:
            raise ValueError(
                f"interior pushes must be whole hops ({self.params.hop} samples), got {x.size}"
            )
        self._consumed += x.size
        if x.size == 0:
            return np.zeros((0, self.params.bins), dtype=np.complex128)
        buf = np.concatenate([self._carry, x])
        self._carry = buf[x.size :].copy()
        return _analyze_frames(buf, self.params)

    def finish(self, tail: np.ndarray | None = None) -> np.ndarray:
        if self._done:
            raise ValueError("finish called twice")
        self._done = True
        t = np.asarray(tail, dtype=np.float64) if tail is not None else np.zeros(0)
        total = self._consumed + t.size
        remaining = self.params.num_frames(total) - self._consumed // self.params.hop
        buf = np.concatenate([self._carry, t])
        padded_len = (remaining - 1) * self.params.hop + self.params.win_length
        buf = np.concatenate([buf, np.zeros(padded_len - buf.size)])
        return _analyze_frames(buf, self.params)


class ChunkOla:
    """Streaming weighted overlap-add, the inverse side of :class:`ChunkStft`.

    ``push`` returns samples no later frame can touch (each frame finalizes
    one hop); ``finish`` drains the remainder and truncates to the true
    signal length.  Concatenated output is bit-identical to :func:`istft`
    over the full spectrogram.
    """

    def __init__(self, params: StftParams = StftParams()):
        self.params = params
        self._acc = np.zeros(0)
        self._wsum = np.zeros(0)
        self._finalized = 0  # padded positions already released
        self._emitted = 0  # original-signal samples already returned

    def push(self, frames: np.ndarray) -> np.ndarray:
        n = frames.shape[0]
        if n == 0:
            return np.zeros(0)
        p = self.params
        need = n * p.hop + p.pad_left - self._acc.size
        if need > 0:
            self._acc = np.concatenate([self._acc, np.zeros(need)])
            self._wsum = np.concatenate([self._wsum, np.zeros(need)])
        _overlap_add(frames, p, self._acc, self._wsum, 0)
        out = self._acc[: n * p.hop] / np.maximum(self._wsum[: n * p.hop], _WSUM_FLOOR)
        self._acc = self._acc[n * p.hop :]
        self._wsum = self._wsum[n * p.hop :]
        return self._release(out)

    def finish(self, frames: np.ndarray, origin_length: int) -> np.ndarray:
        head = self.push(frames)
        rest = self._acc / np.maximum(self._wsum, _WSUM_FLOOR)
        self._acc = np.zeros(0)
        self._wsum = np.zeros(0)
        out = np.concatenate([head, self._release(rest)])
        emitted_before = self._emitted - out.size
        keep = max(0, origin_length - emitted_before)
        self._emitted = emitted_before + min(out.size, keep)
        return out[:keep]

    def _release(self, block: np.ndarray) -> np.ndarray:
        """Map finalized padded positions to original-signal samples."""
        skip = min(block.size, max(0, self.params.pad_left - self._finalized))
        self._finalized += block.size
        out = block[skip:]
        self._emitted += out.size
        return out
