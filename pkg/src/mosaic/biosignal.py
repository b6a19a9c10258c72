"""Heart-rate series processing: smoothing, robust peak detection, per-phase
statistics with significance tests, and peak-to-event alignment.

The same routines run on presenter and evaluator streams. Statistics use a
self-contained Student-t implementation (regularized incomplete beta) so the
pipeline has no runtime dependency on an external stats package; the test
suite checks it against an independent reference implementation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DegenerateSample
from .model import HeartSample

# Raw median-absolute-deviation is scaled by the Gaussian consistency factor
# so z thresholds read in sigma-equivalent units; the floor guards against
# quantized wearable output where the window MAD collapses to zero.
MAD_SCALE = 1.4826
MAD_FLOOR_BPM = 0.5


@dataclass(frozen=True)
class PeakEvent:
    ts_ms: int
    bpm_at_peak: float
    z_score: float


@dataclass(frozen=True)
class TestResult:
    t: float
    df: float
    p_two_sided: float
    mode: str  # paired | welch
    n1: int
    n2: int


@dataclass
class PeakConfig:
    baseline_window_ms: int = 60_000
    z_threshold: float = 3.0
    min_separation_ms: int = 30_000
    # The robust z is scale-free, so over a long session ~3.3-sigma noise
    # extremes clear z_threshold regardless of noise level; a physiological
    # surge must also rise a few bpm above the local baseline.
    min_prominence_bpm: float = 6.0


@dataclass
class PhaseStats:
    phase: str
    n: int
    mean: float | None
    sd: float | None
    min: float | None
    max: float | None


@dataclass
class PeakMatch:
    peak_ts_ms: int
    event_ts_ms: int | None
    event_label: str | None
    gap_ms: int | None


@dataclass
class PhaseStatsReport:
    per_phase: list = field(default_factory=list)     # PhaseStats
    tests: list = field(default_factory=list)         # (phase_a, phase_b, TestResult|None)
    matches: list = field(default_factory=list)       # PeakMatch, one per peak
    unmatched_peaks: list = field(default_factory=list)  # ts_ms


def valid_samples(series):
    """Drop artifact samples (bpm outside the physiologic range)."""
    return [s for s in series if not s.artifact]


def smooth(series, window=5):
    """Centered moving median over valid samples; edges use truncated windows.

    Artifact samples are excluded from every window and are dropped from the
    output (they carry no usable bpm).
    """
    clean = valid_samples(series)
    if not clean:
        return []
    half = window // 2
    n = len(clean)
    out = []
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        out.append(HeartSample(clean[i].ts_ms, _median([s.bpm for s in clean[lo:hi]])))
    return out


def _median(values):
    vs = sorted(values)
    n = len(vs)
    mid = n // 2
    if n % 2:
        return vs[mid]
    return 0.5 * (vs[mid - 1] + vs[mid])


def rolling_robust_z(ts, values, window_ms, return_medians=False):
    """Per-sample (x - rolling median) / scaled rolling MAD over a centered
    time window; the spread estimate is floored at MAD_FLOOR_BPM."""
    n = len(values)
    zs = [0.0] * n
    meds = [0.0] * n
    half = window_ms / 2
    lo = 0
    hi = 0
    for i in range(n):
        while lo < n and ts[lo] < ts[i] - half:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < n and ts[hi] <= ts[i] + half:
            hi += 1
        window = values[lo:hi]
        med = _median(window)
        mad = _median([abs(v - med) for v in window])
        sigma = max(MAD_SCALE * mad, MAD_FLOOR_BPM)
        meds[i] = med
        zs[i] = (values[i] - med) / sigma
    if return_medians:
        return zs, meds
    return zs


def detect_peaks(series, cfg=None):
    """Find abrupt heart-rate surges in a smoothed series.

    A candidate is a local maximum (plateau centers for flat tops) whose
    robust z-score meets the threshold and whose rise above the rolling
    median meets the prominence floor; greedy suppression keeps the
    strongest peak inside every min-separation span.
    """
    cfg = cfg or PeakConfig()
    clean = valid_samples(series)
    if len(clean) < 3:
        return []
    ts = [s.ts_ms for s in clean]
    bpm = [s.bpm for s in clean]
    zs, meds = rolling_robust_z(ts, bpm, cfg.baseline_window_ms, return_medians=True)

    candidates = []
    n = len(bpm)
    i = 1
    while i < n - 1:
        if bpm[i] > bpm[i - 1]:
            j = i
            while j < n - 1 and bpm[j + 1] == bpm[i]:
                j += 1
            if j < n - 1 and bpm[j + 1] < bpm[i]:
                mid = (i + j) // 2
                if (zs[mid] >= cfg.z_threshold
                        and bpm[mid] - meds[mid] >= cfg.min_prominence_bpm):
                    candidates.append(mid)
                i = j + 1
                continue
        i += 1

    # highest z first; ties resolved by earlier timestamp for determinism
    candidates.sort(key=lambda k: (-zs[k], ts[k]))
    kept = []
    for k in candidates:
        if all(abs(ts[k] - ts[m]) >= cfg.min_separation_ms for m in kept):
            kept.append(k)
    kept.sort(key=lambda k: ts[k])
    return [PeakEvent(ts[k], bpm[k], zs[k]) for k in kept]


# --- Student t machinery -------------------------------------------------

def _betacf(a, b, x, max_iter=300, eps=1e-15):
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t, df):
    """Two-sided tail probability of Student's t with df degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return reg_inc_beta(df / 2.0, 0.5, x)


def _mean(xs):
    return sum(xs) / len(xs)


def _sample_sd(xs):
    m = _mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def t_test(a, b, mode="welch"):
    """Two-sided t-test between samples a and b.

    paired: statistic on the element-wise differences, df = n - 1. All-zero
    differences report t=0, p=1; zero-variance nonzero differences raise
    DegenerateSample. welch: unequal-variance statistic with the
    Welch-Satterthwaite degrees of freedom.
    """
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    if mode == "paired":
        if len(a) != len(b):
            raise ValueError("paired mode requires equal-length samples")
        if len(a) < 2:
            raise ValueError("paired mode requires n >= 2")
        d = [x - y for x, y in zip(a, b)]
        md = _mean(d)
        sd = _sample_sd(d)
        n = len(d)
        if sd == 0.0:
            if md == 0.0:
                return TestResult(0.0, float(n - 1), 1.0, "paired", n, n)
            raise DegenerateSample("paired differences have zero variance")
        t = md / (sd / math.sqrt(n))
        df = float(n - 1)
        return TestResult(t, df, t_sf_two_sided(t, df), "paired", n, n)

    if mode == "welch":
        if len(a) < 2 or len(b) < 2:
            raise ValueError("welch mode requires n >= 2 in both samples")
        n1, n2 = len(a), len(b)
        v1 = _sample_sd(a) ** 2
        v2 = _sample_sd(b) ** 2
        se2 = v1 / n1 + v2 / n2
        if se2 == 0.0:
            raise DegenerateSample("both samples have zero variance")
        t = (_mean(a) - _mean(b)) / math.sqrt(se2)
        df = se2 ** 2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
        return TestResult(t, df, t_sf_two_sided(t, df), "welch", n1, n2)

    raise ValueError(f"unknown t-test mode {mode!r}")


# --- Phase statistics and event alignment --------------------------------

def phase_stats(series, schedule):
    """Per-phase mean/sd/min/max of valid bpm samples."""
    clean = valid_samples(series)
    out = []
    for phase in schedule:
        vals = [s.bpm for s in clean if phase.contains(s.ts_ms)]
        if vals:
            mean = _mean(vals)
            sd = _sample_sd(vals) if len(vals) > 1 else 0.0
            out.append(PhaseStats(phase.name, len(vals), mean, sd, min(vals), max(vals)))
        else:
            out.append(PhaseStats(phase.name, 0, None, None, None, None))
    return out


def phase_pair_tests(series, schedule, pairs=(("opening", "conclusion"),)):
    """Welch tests between the raw sample sets of named phase pairs.

    Within a single session the two phases have unequal lengths and
    autocorrelated samples, so the unequal-variance test is the defensible
    comparison; paired mode is reserved for cohort-level per-presenter
    phase means (see cohort_paired_test).
    """
    clean = valid_samples(series)
    by_phase = {}
    for phase in schedule:
        by_phase[phase.name] = [s.bpm for s in clean if phase.contains(s.ts_ms)]
    results = []
    for name_a, name_b in pairs:
        xs = by_phase.get(name_a, [])
        ys = by_phase.get(name_b, [])
        if len(xs) >= 2 and len(ys) >= 2:
            try:
                results.append((name_a, name_b, t_test(xs, ys, "welch")))
            except DegenerateSample:
                results.append((name_a, name_b, None))
        else:
            results.append((name_a, name_b, None))
    return results


def cohort_paired_test(phase_means_a, phase_means_b):
    """Paired test across a cohort: one (phase A mean, phase B mean) pair per
    presenter, aligned by index."""
    return t_test(phase_means_a, phase_means_b, "paired")


def align_peaks(peaks, events, window_ms=10_000):
    """Match each peak to the nearest timeline event within window_ms.

    events: iterable of (ts_ms, label). Returns (matches, unmatched_ts).
    """
    matches = []
    unmatched = []
    for peak in peaks:
        best = None
        for ts, label in events:
            gap = abs(ts - peak.ts_ms)
            if gap <= window_ms and (best is None or gap < best[0]):
                best = (gap, ts, label)
        if best is None:
            matches.append(PeakMatch(peak.ts_ms, None, None, None))
            unmatched.append(peak.ts_ms)
        else:
            matches.append(PeakMatch(peak.ts_ms, best[1], best[2], best[0]))
    return matches, unmatched


def phase_stats_and_alignment(series, schedule, peaks, events, window_ms=10_000,
                              test_pairs=(("opening", "conclusion"),)):
    report = PhaseStatsReport()
    report.per_phase = phase_stats(series, schedule)
    report.tests = phase_pair_tests(series, schedule, test_pairs)
    report.matches, report.unmatched_peaks = align_peaks(peaks, events, window_ms)
    return report
