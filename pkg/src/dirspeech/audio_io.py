"""Multichannel WAV I/O and JSONL scene manifests.

Audio is carried everywhere as an :class:`AudioClip`: a ``(channels, samples)``
float64 array in [-1, 1] plus a sample rate.  The pipeline runs at a fixed
16 kHz; clips at other rates are rejected at pipeline entry rather than
resampled, so every downstream sample count stays exactly predictable
(600 ms == 9600 samples).

WAV support is deliberately narrow: RIFF/WAVE with PCM16 or IEEE float32,
interleaved channels.  Manifests are newline-delimited JSON, one scene per
line, with fields ``id``, ``wav`` and ``segments[].speaker|start|end|text|
lang|translation``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ManifestError

SAMPLE_RATE = 16000
CHUNK_SECONDS = 0.6
CHUNK_SAMPLES = int(SAMPLE_RATE * CHUNK_SECONDS)  # 9600

SPEAKER_ROLES = ("wearer", "partner")

_PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class AudioClip:
    """Sampled multichannel waveform; the universal signal carrier.

    ``samples`` has shape ``(channels, num_samples)``, nominal range [-1, 1].
    """

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise ValueError(f"samples must be 1-D or 2-D, got shape {arr.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", arr)

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.sample_rate

    def channel(self, i: int) -> np.ndarray:
        return self.samples[i]

    def mono(self) -> np.ndarray:
        """Single-channel view; raises if the clip is multichannel."""
        if self.channels != 1:
            raise ValueError(f"expected mono clip, got {self.channels} channels")
        return self.samples[0]


def require_rate(clip: AudioClip, rate: int = SAMPLE_RATE) -> AudioClip:
    """Reject clips not at the canonical pipeline rate (no resampling)."""
    if clip.sample_rate != rate:
        raise ValueError(
            f"clip is {clip.sample_rate} Hz; pipeline requires {rate} Hz (resampling is out of scope)"
        )
    return clip


# ---------------------------------------------------------------------------
# WAV codec (RIFF/WAVE, PCM16 or IEEE float32, interleaved)
# ---------------------------------------------------------------------------

_WAVE_PCM = 1
_WAVE_FLOAT = 3


def read_wav(path: str | Path) -> AudioClip:
    """Read a PCM16 or float32 RIFF/WAVE file.

    PCM16 samples are normalized by 1/32768; float samples are taken as-is.
    Unsupported encodings raise :class:`FormatError`; truncated files raise
    ``OSError``.
    """
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        body = data[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise OSError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif cid == b"data":
            if len(body) < size:
                raise OSError(f"{path}: data chunk truncated ({len(body)} of {size} bytes)")
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise OSError(f"{path}: missing fmt or data chunk")
    audio_format, n_channels, rate, _byte_rate, _block_align, bits = fmt
    if n_channels < 1:
        raise FormatError(f"{path}: channel count {n_channels}")

    if audio_format == _WAVE_PCM and bits == 16:
        flat = np.frombuffer(payload, dtype="<i2").astype(np.float64) / _PCM16_SCALE
    elif audio_format == _WAVE_FLOAT and bits == 32:
        flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise FormatError(
            f"{path}: unsupported encoding (format tag {audio_format}, {bits}-bit); "
            "only PCM16 and IEEE float32 are supported"
        )
    n_frames = len(flat) // n_channels
    samples = flat[: n_frames * n_channels].reshape(n_frames, n_channels).T
    return AudioClip(samples.copy(), sample_rate=rate)


def write_wav(clip: AudioClip, path: str | Path, encoding: str = "float32") -> None:
    """Write a clip as RIFF/WAVE.

    ``encoding`` is ``"pcm16"`` or ``"float32"``.  PCM16 clamps samples to
    [-1, 32767/32768] before quantizing, so the round-trip error is at most
    1/32768 per sample.  float32 round-trips bit-exactly.
    """
    if encoding == "pcm16":
        fmt_tag, bits = _WAVE_PCM, 16
        clipped = np.clip(clip.samples, -1.0, 32767.0 / _PCM16_SCALE)
        flat = np.rint(clipped.T * _PCM16_SCALE).astype("<i2").reshape(-1)
        payload = flat.tobytes()
    elif encoding == "float32":
        fmt_tag, bits = _WAVE_FLOAT, 32
        payload = clip.samples.T.astype("<f4").reshape(-1).tobytes()
    else:
        raise ValueError(f"unknown encoding {encoding!r}; use 'pcm16' or 'float32'")

    n_channels = clip.channels
    block_align = n_channels * bits // 8
    byte_rate = clip.sample_rate * block_align
    fmt_body = struct.pack("<HHIIHH", fmt_tag, n_channels, clip.sample_rate, byte_rate, block_align, bits)

    out = bytearray()
    out += b"WAVE"
    out += b"fmt " + struct.pack("<I", len(fmt_body)) + fmt_body
    out += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        out += b"\x00"
    with open(path, "wb") as f:
        f.write(b"RIFF" + struct.pack("<I", len(out)) + bytes(out))


# ---------------------------------------------------------------------------
# Scene manifests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """One attributed stretch of reference speech within a scene."""

    speaker: str
    start: float
    end: float
    text: str
    lang: str
    translation: str = ""

    def __post_init__(self):
        if self.speaker not in SPEAKER_ROLES:
            raise ManifestError(f"segment speaker {self.speaker!r} not in {SPEAKER_ROLES}")
        if not (0 <= self.start < self.end):
            raise ManifestError(
                f"segment ({self.speaker!r}, {self.start}-{self.end}) needs 0 <= start < end"
            )

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.start + self.end)

    def to_json(self) -> dict:
        return {
            "speaker": self.speaker,
            "start": self.start,
            "end": self.end,
            "text": self.text,
            "lang": self.lang,
            "translation": self.translation,
        }


@dataclass
class ManifestEntry:
    """One scene: mixture WAV path plus attributed reference segments.

    ``extras`` preserves any non-standard fields found on the line (the scene
    simulator stores clean-reference WAV paths there).
    """

    id: str
    wav: str
    segments: list[Segment]
    extras: dict = field(default_factory=dict)

    def role_language(self, speaker: str) -> str | None:
        for seg in self.segments:
            if seg.speaker == speaker:
                return seg.lang
        return None

    def role_segments(self, speaker: str) -> list[Segment]:
        return [s for s in self.segments if s.speaker == speaker]

    def to_json(self) -> dict:
        rec = {"id": self.id, "wav": self.wav, "segments": [s.to_json() for s in self.segments]}
        rec.update(self.extras)
        return rec

    @classmethod
    def from_json(cls, rec: dict) -> "ManifestEntry":
        if "id" not in rec or "wav" not in rec:
            raise ManifestError("entry requires 'id' and 'wav' fields")
        segs = []
        for i, s in enumerate(rec.get("segments", [])):
            try:
                segs.append(
                    Segment(
                        speaker=s["speaker"],
                        start=float(s["start"]),
                        end=float(s["end"]),
                        text=str(s["text"]),
                        lang=str(s["lang"]),
                        translation=str(s.get("translation", "")),
                    )
                )
            except KeyError as e:
                raise ManifestError(f"segment {i} missing field {e}") from e
        extras = {k: v for k, v in rec.items() if k not in ("id", "wav", "segments")}
        return cls(id=str(rec["id"]), wav=str(rec["wav"]), segments=segs, extras=extras)


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Read a JSONL manifest, validating every line.

    Raises :class:`ManifestError` carrying the 1-based line number for the
    first malformed or invariant-violating line.
    """
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(f"invalid JSON: {e}", line_no) from e
            try:
                entries.append(ManifestEntry.from_json(rec))
            except ManifestError as e:
                raise ManifestError(str(e), line_no) from e
    return entries


def write_manifest(entries: list[ManifestEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for entry in entries:
            f.write(json.dumps(entry.to_json()) + "\n")
