import math

import pytest

from mosaic import gaze
from mosaic.model import GazeSample, Phase, PhaseSchedule


def valid(ts, x, y):
    return GazeSample(ts, x, y, True)


def invalid(ts):
    return GazeSample(ts, None, None, False)


def cluster(t0, duration_ms, cx, cy, step=20):
    return [valid(t, cx, cy) for t in range(t0, t0 + duration_ms, step)]


class TestDetectFixations:
    def test_constant_point_single_fixation(self):
        samples = cluster(0, 1_000, 0.5, 0.5)
        fixations, saccades = gaze.detect_fixations(samples)
        assert len(fixations) == 1
        assert saccades == []
        f = fixations[0]
        assert f.dispersion == 0.0
        assert f.centroid == (0.5, 0.5)
        assert f.start_ms == 0 and f.end_ms == 980

    def test_two_clusters_one_saccade(self):
        samples = cluster(0, 500, 0.3, 0.3) + cluster(500, 500, 0.5, 0.5)
        fixations, saccades = gaze.detect_fixations(samples)
        assert len(fixations) == 2
        assert len(saccades) == 1
        assert saccades[0].amplitude == pytest.approx(math.hypot(0.2, 0.2), abs=1e-9)

    def test_all_invalid_no_fixations(self):
        samples = [invalid(t) for t in range(0, 1_000, 20)]
        fixations, saccades = gaze.detect_fixations(samples)
        assert fixations == [] and saccades == []

    def test_short_dwell_below_minimum_dropped(self):
        samples = cluster(0, 60, 0.5, 0.5)  # 3 samples, 40 ms span
        fixations, _ = gaze.detect_fixations(samples)
        assert fixations == []

    def test_invalid_samples_split_windows(self):
        samples = (cluster(0, 400, 0.5, 0.5) + [invalid(400), invalid(420)]
                   + cluster(440, 400, 0.5, 0.5))
        fixations, _ = gaze.detect_fixations(samples)
        assert len(fixations) == 2

    def test_fixations_disjoint_and_sorted(self):
        samples = []
        t = 0
        for i in range(10):
            cx = 0.1 + 0.08 * i
            samples += cluster(t, 300, cx, 0.5)
            t += 300
        fixations, _ = gaze.detect_fixations(samples)
        for a, b in zip(fixations, fixations[1:]):
            assert a.end_ms < b.start_ms

    def test_flight_samples_between_clusters_skipped(self):
        samples = (cluster(0, 500, 0.2, 0.2)
                   + [valid(500, 0.3, 0.3), valid(520, 0.4, 0.4)]
                   + cluster(540, 500, 0.5, 0.5))
        fixations, _ = gaze.detect_fixations(samples)
        assert len(fixations) == 2

    def test_denser_sampling_preserves_boundaries(self):
        coarse = cluster(0, 1_000, 0.5, 0.5, step=20)
        fine = cluster(0, 1_000, 0.5, 0.5, step=10)
        fc, _ = gaze.detect_fixations(coarse)
        ff, _ = gaze.detect_fixations(fine)
        assert len(fc) == len(ff) == 1
        assert abs(fc[0].start_ms - ff[0].start_ms) <= 20
        assert abs(fc[0].end_ms - ff[0].end_ms) <= 20

    def test_dispersion_recheck_post_hoc(self):
        import numpy as np
        rng = np.random.default_rng(13)
        samples = []
        t = 0
        for i in range(8):
            cx, cy = 0.1 + 0.1 * i, 0.4
            for _ in range(30):
                samples.append(valid(t, cx + float(rng.uniform(-0.004, 0.004)),
                                     cy + float(rng.uniform(-0.004, 0.004))))
                t += 20
        fixations, _ = gaze.detect_fixations(samples)
        by_ts = {s.ts_ms: s for s in samples}
        for f in fixations:
            pts = [by_ts[t] for t in range(f.start_ms, f.end_ms + 1, 20) if t in by_ts]
            xs = [p.x for p in pts]
            ys = [p.y for p in pts]
            assert (max(xs) - min(xs)) + (max(ys) - min(ys)) <= 0.03 + 1e-12


class TestDetectBlinks:
    def test_short_gap_is_blink(self):
        samples = (cluster(0, 400, 0.5, 0.5)
                   + [invalid(t) for t in range(400, 480, 20)]
                   + cluster(480, 400, 0.5, 0.5))
        blinks, losses, rate = gaze.detect_blinks(samples)
        assert len(blinks) == 1
        assert losses == []

    def test_long_gap_is_data_loss(self):
        samples = (cluster(0, 400, 0.5, 0.5)
                   + [invalid(t) for t in range(400, 2_400, 20)]
                   + cluster(2_400, 400, 0.5, 0.5))
        blinks, losses, rate = gaze.detect_blinks(samples)
        assert blinks == []
        assert len(losses) == 1

    def test_rate_per_minute_over_tracked_time(self):
        samples = []
        t = 0
        for _ in range(12):
            samples += cluster(t, 4_880, 0.5, 0.5)
            t += 4_880
            samples += [invalid(tt) for tt in range(t, t + 120, 20)]
            t += 120
        # stream spans 60 s with 12 blink gaps and no losses
        blinks, losses, rate = gaze.detect_blinks(samples)
        assert len(blinks) == 12
        assert losses == []
        assert rate == pytest.approx(12.0, rel=0.01)


class TestMapAoi:
    AOIS = gaze.aoi_from_config([
        {"name": "presenter_face", "rect": [0.3, 0.2, 0.6, 0.6]},
        {"name": "slides", "rect": [0.7, 0.1, 0.95, 0.5]},
    ])

    def fixation(self, t0, dur, cx, cy):
        return gaze.Fixation(t0, t0 + dur, (cx, cy), 0.0, dur // 20)

    def test_single_fixation_inside_rect(self):
        m = gaze.map_aoi([self.fixation(0, 500, 0.45, 0.4)], self.AOIS)
        assert m["shares"] == {"presenter_face": 1.0}

    def test_boundary_belongs_to_rect(self):
        m = gaze.map_aoi([self.fixation(0, 500, 0.3, 0.2)], self.AOIS)
        assert m["shares"] == {"presenter_face": 1.0}

    def test_outside_everything_is_other(self):
        m = gaze.map_aoi([self.fixation(0, 500, 0.05, 0.9)], self.AOIS)
        assert m["shares"] == {"other": 1.0}

    def test_share_proportions_and_sum(self):
        fixes = [
            self.fixation(0, 700, 0.4, 0.4),
            self.fixation(800, 300, 0.8, 0.3),
        ]
        m = gaze.map_aoi(fixes, self.AOIS)
        assert m["shares"]["presenter_face"] == pytest.approx(0.7, abs=1e-9)
        assert m["shares"]["slides"] == pytest.approx(0.3, abs=1e-9)
        assert sum(m["shares"].values()) == pytest.approx(1.0, abs=1e-9)

    def test_per_phase_overlap_split(self):
        schedule = PhaseSchedule((Phase("opening", 0, 500), Phase("body", 500, 2_000)))
        fixes = [self.fixation(0, 1_000, 0.4, 0.4)]
        m = gaze.map_aoi(fixes, self.AOIS, schedule)
        assert m["per_phase"]["opening"] == {"presenter_face": 1.0}
        assert m["per_phase"]["body"] == {"presenter_face": 1.0}

    def test_switch_timeline(self):
        fixes = [
            self.fixation(0, 400, 0.4, 0.4),
            self.fixation(500, 400, 0.45, 0.45),
            self.fixation(1_000, 400, 0.8, 0.3),
        ]
        m = gaze.map_aoi(fixes, self.AOIS)
        assert m["switches"] == [(0, "presenter_face"), (1_000, "slides")]
