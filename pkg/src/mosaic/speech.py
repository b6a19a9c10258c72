"""Vocal delivery analysis from WAV audio and transcript pattern detection.

Audio features are short-time RMS (dBFS) and autocorrelation-based F0 with
parabolic peak interpolation; fluency is reported through words-per-minute,
pause statistics, and voiced ratio rather than any single opaque score.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptHeader, NoVoicedFrames, UnsupportedEncoding

F0_MIN_HZ = 60.0
F0_MAX_HZ = 400.0
RMS_DB_FLOOR = -120.0
SILENCE_DB = -80.0  # frames at/below this are never voiced
VOICING_NAC = 0.5
VOICING_SNR_DB = 10.0

# Fillers named in common coaching guidance plus Spanish discourse markers;
# multi-word entries are matched longest-first. Configurable per session.
DEFAULT_FILLER_LEXICON = (
    "you know", "o sea", "um", "uh", "like", "eh", "este", "vale",
)


@dataclass(frozen=True)
class AudioSignal:
    samples: np.ndarray  # float64 mono in [-1, 1]
    sample_rate: int

    @property
    def duration_ms(self) -> int:
        return int(len(self.samples) * 1000 / self.sample_rate)


@dataclass(frozen=True)
class AudioFeatureFrame:
    ts_ms: int
    rms_db: float
    f0_hz: float | None
    voiced: bool


@dataclass
class AudioConfig:
    window_ms: int = 30
    hop_ms: int = 10


@dataclass
class VocalConfig:
    monotone_semitone_sd: float = 2.0
    pause_min_ms: int = 300
    long_pause_ms: int = 2_000


@dataclass
class VocalSummary:
    voiced_ratio: float
    pitch_median_hz: float
    pitch_semitone_sd: float
    monotone_flag: bool
    silence_segments: list          # (start_ms, end_ms)
    modulation_per_minute: list     # (minute_index, semitone sd)
    mean_rms_db: float


@dataclass
class TranscriptConfig:
    short_pause_ms: int = 500
    long_pause_ms: int = 2_000


@dataclass
class SpeechPatternReport:
    filler_counts: dict = field(default_factory=dict)   # entry -> count
    filler_timestamps: dict = field(default_factory=dict)  # entry -> [ts_ms]
    false_starts: list = field(default_factory=list)    # (ts_ms, token)
    pauses: list = field(default_factory=list)          # (start, end, class)
    words_per_minute: float = 0.0
    word_count: int = 0
    speaking_ms: int = 0
    span_ms: int = 0


def read_wav(data: bytes) -> AudioSignal:
    """Decode a PCM-16 RIFF/WAVE buffer to normalized mono samples.

    Stereo input is averaged to mono. Anything other than 16-bit integer PCM
    at >= 8 kHz is rejected.
    """
    if len(data) < 44 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeader("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise CorruptHeader("truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)
    if fmt is None or payload is None:
        raise CorruptHeader("missing fmt or data chunk")

    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise UnsupportedEncoding(f"compressed audio format {audio_format} not supported")
    if bits != 16:
        raise UnsupportedEncoding(f"{bits}-bit samples not supported (need 16-bit PCM)")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels not supported")
    if rate < 8_000:
        raise UnsupportedEncoding(f"sample rate {rate} below 8000 Hz")

    usable = len(payload) - (len(payload) % (2 * channels))
    raw = np.frombuffer(payload[:usable], dtype="<i2").astype(np.float64) / 32768.0
    if channels == 2:
        raw = raw.reshape(-1, 2).mean(axis=1)
    return AudioSignal(raw, rate)


def audio_features(signal: AudioSignal, cfg=None) -> list:
    """Short-time RMS and F0 frames.

    A frame is voiced when its normalized autocorrelation peak in the
    60-400 Hz lag band reaches VOICING_NAC and its level sits VOICING_SNR_DB
    above the noise floor (5th percentile of frame RMS).
    """
    cfg = cfg or AudioConfig()
    x = signal.samples
    fs = signal.sample_rate
    win = int(round(cfg.window_ms * fs / 1000))
    hop = int(round(cfg.hop_ms * fs / 1000))
    if len(x) < win:
        return []
    n_frames = 1 + (len(x) - win) // hop

    lag_min = int(math.floor(fs / F0_MAX_HZ))
    lag_max = int(math.ceil(fs / F0_MIN_HZ))
    lag_max = min(lag_max, win - 2)
    nfft = 1
    while nfft < win + lag_max + 2:
        nfft *= 2

    rms_db = np.empty(n_frames)
    nac_peak = np.zeros(n_frames)
    f0 = np.zeros(n_frames)

    chunk = 4096
    for c0 in range(0, n_frames, chunk):
        c1 = min(n_frames, c0 + chunk)
        idx = np.arange(c0, c1)[:, None] * hop + np.arange(win)[None, :]
        frames = x[idx]
        rms = np.sqrt(np.mean(frames * frames, axis=1))
        with np.errstate(divide="ignore"):
            rms_db[c0:c1] = np.maximum(20.0 * np.log10(rms), RMS_DB_FLOOR)

        spec = np.fft.rfft(frames, n=nfft, axis=1)
        r = np.fft.irfft(spec.real ** 2 + spec.imag ** 2, n=nfft, axis=1)
        r0 = r[:, 0]
        band = r[:, lag_min:lag_max + 1]
        k = np.argmax(band, axis=1) + lag_min
        rows = np.arange(c1 - c0)
        peak = r[rows, k]
        safe_r0 = np.where(r0 > 0, r0, 1.0)
        nac = np.where(r0 > 0, peak / safe_r0, 0.0)
        nac_peak[c0:c1] = nac

        # parabolic interpolation around the integer-lag peak
        km = np.clip(k - 1, 0, nfft - 1)
        kp = np.clip(k + 1, 0, nfft - 1)
        ym, y0, yp = r[rows, km], peak, r[rows, kp]
        denom = ym - 2.0 * y0 + yp
        delta = np.where(np.abs(denom) > 0, 0.5 * (ym - yp) / np.where(denom == 0, 1.0, denom), 0.0)
        delta = np.clip(delta, -0.5, 0.5)
        lag = np.clip(k + delta, lag_min, lag_max)
        f0[c0:c1] = fs / lag

    # level gate: clear the noise floor by VOICING_SNR_DB, but never demand
    # more than 30 dB below the loudest frame (a continuously loud signal
    # has no meaningful silent tail to measure a floor from)
    noise_floor = float(np.percentile(rms_db, 5)) if n_frames else RMS_DB_FLOOR
    peak_db = float(np.max(rms_db)) if n_frames else RMS_DB_FLOOR
    level_gate = min(noise_floor + VOICING_SNR_DB, peak_db - 30.0)
    voiced = (
        (nac_peak >= VOICING_NAC)
        & (rms_db >= level_gate)
        & (rms_db > SILENCE_DB)
    )

    out = []
    for i in range(n_frames):
        out.append(AudioFeatureFrame(
            ts_ms=i * cfg.hop_ms,
            rms_db=float(rms_db[i]),
            f0_hz=float(f0[i]) if voiced[i] else None,
            voiced=bool(voiced[i]),
        ))
    return out


def vocal_summary(frames, cfg=None) -> VocalSummary:
    """Pitch variation, monotone flag, and silence segments from feature
    frames. Semitone deviations are 12*log2(f0/median)."""
    cfg = cfg or VocalConfig()
    if not frames:
        raise NoVoicedFrames("no audio frames")
    hop_ms = frames[1].ts_ms - frames[0].ts_ms if len(frames) > 1 else 10

    f0s = np.array([f.f0_hz for f in frames if f.voiced], dtype=float)
    if f0s.size == 0:
        raise NoVoicedFrames("no voiced frames in audio")
    median_hz = float(np.median(f0s))
    semis = 12.0 * np.log2(f0s / median_hz)
    semitone_sd = float(np.std(semis))

    silences = []
    run_start = None
    last_ts = None
    for f in frames:
        if not f.voiced:
            if run_start is None:
                run_start = f.ts_ms
            last_ts = f.ts_ms
        elif run_start is not None:
            if (last_ts + hop_ms) - run_start >= cfg.pause_min_ms:
                silences.append((run_start, last_ts + hop_ms))
            run_start = None
    if run_start is not None and (last_ts + hop_ms) - run_start >= cfg.pause_min_ms:
        silences.append((run_start, last_ts + hop_ms))

    per_minute = []
    minute_ms = 60_000
    max_minute = frames[-1].ts_ms // minute_ms
    for m in range(max_minute + 1):
        vals = [
            12.0 * math.log2(f.f0_hz / median_hz)
            for f in frames
            if f.voiced and m * minute_ms <= f.ts_ms < (m + 1) * minute_ms
        ]
        per_minute.append((m, float(np.std(vals)) if len(vals) >= 2 else None))

    return VocalSummary(
        voiced_ratio=float(np.mean([f.voiced for f in frames])),
        pitch_median_hz=median_hz,
        pitch_semitone_sd=semitone_sd,
        monotone_flag=semitone_sd < cfg.monotone_semitone_sd,
        silence_segments=silences,
        modulation_per_minute=per_minute,
        mean_rms_db=float(np.mean([f.rms_db for f in frames])),
    )


def _normalize_token(word: str) -> str:
    return word.strip().strip(".,;:!?¿¡\"'()[]").lower()


def transcript_patterns(words, lexicon=DEFAULT_FILLER_LEXICON, cfg=None):
    """Filler, false-start, and pause detection over a word-level transcript.

    Lexicon matching is longest-match-first over word n-grams, so a
    multi-word entry consumes its words before any shorter entry can match
    them. A false start is an identical consecutive token or a token ending
    in "-". Matching ignores case and surrounding punctuation.
    """
    cfg = cfg or TranscriptConfig()
    report = SpeechPatternReport()
    entries = sorted(((tuple(e.lower().split()), e) for e in lexicon),
                     key=lambda p: -len(p[0]))
    report.filler_counts = {e: 0 for _, e in entries}
    report.filler_timestamps = {e: [] for _, e in entries}
    if not words:
        return report

    tokens = [_normalize_token(w.word) for w in words]
    n = len(tokens)

    i = 0
    while i < n:
        matched = False
        for grams, entry in entries:
            k = len(grams)
            if i + k <= n and tuple(tokens[i:i + k]) == grams:
                report.filler_counts[entry] += 1
                report.filler_timestamps[entry].append(words[i].start_ms)
                i += k
                matched = True
                break
        if not matched:
            i += 1

    for i in range(n):
        raw = words[i].word.strip().rstrip(".,;:!?\"')")
        if raw.endswith("-"):
            report.false_starts.append((words[i].start_ms, tokens[i]))
        elif i + 1 < n and tokens[i] and tokens[i] == tokens[i + 1]:
            report.false_starts.append((words[i].start_ms, tokens[i]))

    for a, b in zip(words, words[1:]):
        gap = b.start_ms - a.end_ms
        if gap > cfg.long_pause_ms:
            report.pauses.append((a.end_ms, b.start_ms, "long"))
        elif gap >= cfg.short_pause_ms:
            report.pauses.append((a.end_ms, b.start_ms, "short"))

    report.word_count = n
    report.span_ms = words[-1].end_ms - words[0].start_ms
    long_ms = sum(e - s for s, e, c in report.pauses if c == "long")
    speaking_ms = report.span_ms - long_ms
    report.speaking_ms = speaking_ms
    report.words_per_minute = (
        n / (speaking_ms / 60_000.0) if speaking_ms > 0 else 0.0
    )
    return report
