import numpy as np
import pytest

from occupilot.errors import (
    MalformedRow,
    MissingColumn,
    NonMonotonicTimestamp,
    PeriodMismatch,
)
from occupilot.telemetry import (
    APPLIANCE_CHANNELS,
    CSV_COLUMNS,
    HouseholdSeries,
    SENSOR_CHANNELS,
    TelemetryFrame,
    TimeZonePolicy,
    label_occupancy,
    parse_csv,
    resample_15min,
    write_csv,
)


def make_frame(ts, presence=0, co2=500.0, tv_power=0.0, tv_on=0):
    power = {c: 0.0 for c in APPLIANCE_CHANNELS}
    switch = {c: 0 for c in APPLIANCE_CHANNELS}
    power["tv"], switch["tv"] = tv_power, tv_on
    return TelemetryFrame(
        timestamp=ts,
        co2=co2,
        humidity=50.0,
        illuminance=100.0,
        pm10=20.0,
        pm25=10.0,
        temperature=22.0,
        tvoc=60.0,
        presence=presence,
        appliance_power=power,
        appliance_switch=switch,
    )


def make_series(n=15, period=60, start=0, presence_at=(), **kw):
    frames = [
        make_frame(start + i * period, presence=1 if i in presence_at else 0, **kw)
        for i in range(n)
    ]
    return HouseholdSeries.from_frames(frames)


def random_series(rng, n=60, period=60):
    frames = []
    for i in range(n):
        f = make_frame(i * period, co2=float(rng.uniform(400, 900)))
        f.humidity = float(rng.uniform(20, 80))
        f.appliance_power["tv"] = float(rng.uniform(0, 200))
        f.appliance_switch["tv"] = 1
        frames.append(f)
    return HouseholdSeries.from_frames(frames)


class TestParseWriteCsv:
    def test_roundtrip_identity(self, tmp_path):
        series = make_series(4)
        p = tmp_path / "t.csv"
        write_csv(series, p)
        parsed = parse_csv(p)
        assert len(parsed) == 4
        assert np.all(np.diff(parsed.timestamps) > 0)

    def test_roundtrip_byte_identical(self, tmp_path):
        rng = np.random.default_rng(7)
        series = random_series(rng)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(series, p1)
        write_csv(parse_csv(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_roundtrip_byte_identical_iso(self, tmp_path):
        rng = np.random.default_rng(8)
        series = random_series(rng, n=20)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(series, p1, ts_format="iso")
        write_csv(parse_csv(p1, ts_format="iso"), p2, ts_format="iso")
        assert p1.read_bytes() == p2.read_bytes()

    def test_nonmonotonic_timestamp_reports_row(self, tmp_path):
        p = tmp_path / "t.csv"
        series = make_series(4)
        write_csv(series, p)
        lines = p.read_text().splitlines()
        parts = lines[3].split(",")
        parts[0] = "0"  # row 3 goes backwards
        lines[3] = ",".join(parts)
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(NonMonotonicTimestamp) as exc:
            parse_csv(p)
        assert exc.value.line_no == 3

    def test_malformed_row(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(make_series(3), p)
        text = p.read_text().replace("500.000", "oops", 1)
        p.write_text(text)
        with pytest.raises(MalformedRow):
            parse_csv(p)

    def test_missing_column(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(make_series(3), p)
        lines = p.read_text().splitlines()
        cols = lines[0].split(",")
        drop = cols.index("co2")
        out = [",".join(c for i, c in enumerate(ln.split(",")) if i != drop) for ln in lines]
        p.write_text("\n".join(out) + "\n")
        with pytest.raises(MissingColumn) as exc:
            parse_csv(p)
        assert exc.value.name == "co2"


class TestFrameValidation:
    def test_switch_off_power_above_standby_rejected(self):
        f = make_frame(0, tv_power=50.0, tv_on=0)
        with pytest.raises(ValueError):
            f.validate()

    def test_ok_frame(self):
        make_frame(0, tv_power=100.0, tv_on=1).validate()


class TestResample:
    def test_constant_co2_mean(self):
        bins = resample_15min(make_series(15, co2=500.0))
        assert len(bins) == 1
        assert bins[0].sensor_means["co2"] == pytest.approx(500.0)
        assert bins[0].n_frames == 15

    def test_presence_any_fire(self):
        bins = resample_15min(make_series(15, presence_at=(7,)))
        assert bins[0].presence == 1

    def test_switch_fraction(self):
        frames = [make_frame(i * 60, tv_power=100.0 if i < 5 else 0.0, tv_on=1 if i < 5 else 0)
                  for i in range(15)]
        bins = resample_15min(HouseholdSeries.from_frames(frames))
        assert bins[0].switch_fractions["tv"] == pytest.approx(5 / 15)

    def test_mean_matches_bruteforce(self):
        rng = np.random.default_rng(3)
        series = random_series(rng, n=90)
        bins = resample_15min(series)
        for k, rec in enumerate(bins):
            lo, hi = k * 15, (k + 1) * 15
            expect = sum(series.sensors["co2"][lo:hi]) / 15
            assert rec.sensor_means["co2"] == pytest.approx(expect, abs=1e-9)

    def test_energy_conservation(self):
        # mean power per bin * 900 s == direct sum of power * period over frames
        rng = np.random.default_rng(4)
        series = random_series(rng, n=90)
        bins = resample_15min(series)
        binned = sum(rec.power_means["tv"] * 900 for rec in bins)
        direct = float(np.sum(series.power["tv"] * series.native_period))
        assert binned == pytest.approx(direct, rel=1e-9)

    def test_period_mismatch(self):
        series = make_series(5, period=7 * 60)
        with pytest.raises(PeriodMismatch):
            resample_15min(series)

    def test_gap_bins_omitted(self):
        frames = [make_frame(i * 60) for i in range(15)]
        frames += [make_frame(3600 + i * 60) for i in range(15)]
        # non-constant period across the gap is rejected by HouseholdSeries,
        # so build via direct arrays
        a = HouseholdSeries.from_frames(frames[:15])
        b = HouseholdSeries.from_frames(frames[15:])
        bins = resample_15min(a) + resample_15min(b)
        assert [rec.bin_start for rec in bins] == [0, 3600]


class TestLabelOccupancy:
    def bins_at(self, hours_presence):
        """One bin per 15 min across a day; hours_presence maps hour -> fire."""
        frames = [make_frame(i * 60) for i in range(1440)]
        series = HouseholdSeries.from_frames(frames)
        bins = resample_15min(series)
        for rec in bins:
            h = rec.bin_start / 3600.0
            rec_presence = hours_presence.get(h, 0)
            rec.presence = rec_presence
        return bins

    def test_all_zero(self):
        labeled = label_occupancy(self.bins_at({}))
        assert all(rec.occupancy_label == 0 for rec in labeled)

    def test_hold_rule(self):
        labeled = label_occupancy(self.bins_at({10.0: 1}), hold_bins=2)
        by_start = {rec.bin_start: rec.occupancy_label for rec in labeled}
        assert by_start[int(10.0 * 3600)] == 1
        assert by_start[int(10.25 * 3600)] == 1
        assert by_start[int(10.5 * 3600)] == 1
        assert by_start[int(10.75 * 3600)] == 0
        assert by_start[int(9.75 * 3600)] == 0

    def test_inactive_zone_any_fire(self):
        labeled = label_occupancy(self.bins_at({3.0: 1}))
        for rec in labeled:
            h = rec.bin_start / 3600.0
            if h < 6:
                assert rec.occupancy_label == 1
            else:
                assert rec.occupancy_label == 0

    def test_zone_partition(self):
        policy = TimeZonePolicy()
        bins = self.bins_at({})
        zones = [policy.is_active(rec.bin_start) for rec in bins]
        # every bin falls in exactly one zone by construction of is_active
        assert all(isinstance(z, bool) for z in zones)
        assert sum(zones) == 18 * 4  # active 6..24
        assert len(zones) - sum(zones) == 6 * 4

    def test_label_monotonicity(self):
        rng = np.random.default_rng(11)
        base_fires = {float(h): 1 for h in rng.choice(np.arange(0, 24, 0.25), 10, replace=False)}
        labeled_before = label_occupancy(self.bins_at(base_fires))
        extra = dict(base_fires)
        extra[12.5] = 1
        labeled_after = label_occupancy(self.bins_at(extra))
        for b, a in zip(labeled_before, labeled_after):
            assert a.occupancy_label >= b.occupancy_label

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            TimeZonePolicy(active_start=10, active_end=8)
