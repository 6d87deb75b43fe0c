"""Telemetry data model: CSV parsing/writing, 15-minute resampling, occupancy labels.

A household room is monitored by seven environmental sensors plus a PIR
presence flag, and ten metered appliance channels (power in watts and an
on/off switch state). Raw streams are resampled into 15-minute bins; the
binary occupancy label is derived from presence via a time-zone policy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import (
    MalformedRow,
    MissingColumn,
    NonMonotonicTimestamp,
    PeriodMismatch,
)

SENSOR_CHANNELS = ("co2", "humidity", "illuminance", "pm10", "pm25", "temperature", "tvoc")

APPLIANCE_CHANNELS = (
    "pc",
    "tv",
    "washing_machine",
    "air_cleaner",
    "cooker",
    "microwave",
    "coffee_pot",
    "hair_dryer",
    "hvac",
    "light",
)

ROOM_IDS = ("room1_living", "room2_bedroom")

BIN_SECONDS = 900
DEFAULT_STANDBY_CAP_W = 5.0

#: Canonical CSV column order. Byte-exact round-trips depend on it.
CSV_COLUMNS = (
    ("timestamp",)
    + SENSOR_CHANNELS
    + ("presence",)
    + tuple(f"power_{c}" for c in APPLIANCE_CHANNELS)
    + tuple(f"switch_{c}" for c in APPLIANCE_CHANNELS)
)


@dataclass
class TelemetryFrame:
    """One timestamped multi-channel reading."""

    timestamp: int
    co2: float
    humidity: float
    illuminance: float
    pm10: float
    pm25: float
    temperature: float
    tvoc: float
    presence: int
    appliance_power: dict
    appliance_switch: dict

    def validate(self, standby_cap_w: float = DEFAULT_STANDBY_CAP_W) -> None:
        for name in SENSOR_CHANNELS:
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"non-finite {name}: {v}")
        if self.co2 < 0 or self.illuminance < 0 or self.pm10 < 0 or self.pm25 < 0 or self.tvoc < 0:
            raise ValueError("negative sensor concentration")
        if not 0 <= self.humidity <= 100:
            raise ValueError(f"humidity out of range: {self.humidity}")
        for ch in APPLIANCE_CHANNELS:
            p = self.appliance_power[ch]
            if p < 0 or not np.isfinite(p):
                raise ValueError(f"bad power for {ch}: {p}")
            if self.appliance_switch[ch] == 0 and p > standby_cap_w:
                raise ValueError(f"{ch}: switch off but power {p} W exceeds standby cap")


@dataclass
class HouseholdSeries:
    """Time-ordered telemetry for one room of one household.

    Stored column-wise for vectorized processing; ``frame(i)`` materializes a
    single :class:`TelemetryFrame` on demand.
    """

    household_id: int
    room_id: str
    timestamps: np.ndarray  # int64 epoch seconds, strictly increasing
    sensors: dict  # channel -> float array (includes "presence" as 0/1)
    power: dict  # appliance channel -> watts array
    switch: dict  # appliance channel -> 0/1 int array
    native_period: int = 60

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        if len(self.timestamps) > 1:
            deltas = np.diff(self.timestamps)
            if np.any(deltas <= 0):
                bad = int(np.argmax(deltas <= 0)) + 2  # 1-based row after header
                raise NonMonotonicTimestamp(bad)
            if np.any(deltas != deltas[0]):
                raise ValueError("native period not constant across series")
            self.native_period = int(deltas[0])

    def __len__(self) -> int:
        return len(self.timestamps)

    def frame(self, i: int) -> TelemetryFrame:
        return TelemetryFrame(
            timestamp=int(self.timestamps[i]),
            presence=int(self.sensors["presence"][i]),
            appliance_power={c: float(self.power[c][i]) for c in APPLIANCE_CHANNELS},
            appliance_switch={c: int(self.switch[c][i]) for c in APPLIANCE_CHANNELS},
            **{c: float(self.sensors[c][i]) for c in SENSOR_CHANNELS},
        )

    @property
    def frames(self):
        return [self.frame(i) for i in range(len(self))]

    @classmethod
    def from_frames(cls, frames, household_id=0, room_id="room1_living"):
        ts = np.array([f.timestamp for f in frames], dtype=np.int64)
        sensors = {c: np.array([getattr(f, c) for f in frames], float) for c in SENSOR_CHANNELS}
        sensors["presence"] = np.array([f.presence for f in frames], float)
        power = {
            c: np.array([f.appliance_power[c] for f in frames], float) for c in APPLIANCE_CHANNELS
        }
        switch = {
            c: np.array([f.appliance_switch[c] for f in frames], int) for c in APPLIANCE_CHANNELS
        }
        return cls(household_id, room_id, ts, sensors, power, switch)


@dataclass
class TimeZonePolicy:
    """Active/inactive day partition used when deriving occupancy labels.

    Hours in [active_start, active_end) are active; everything else is the
    inactive (sleep) zone.
    """

    active_start: int = 6
    active_end: int = 24

    def __post_init__(self):
        if not 0 <= self.active_start < self.active_end <= 24:
            raise ValueError(
                f"need 0 <= active_start < active_end <= 24, got "
                f"[{self.active_start}, {self.active_end})"
            )

    def is_active(self, bin_start: int) -> bool:
        hour = (int(bin_start) % 86400) / 3600.0
        return self.active_start <= hour < self.active_end


@dataclass
class BinnedRecord:
    """One 15-minute aggregate: sensor means, switch on-fractions, presence any-fire."""

    bin_start: int
    sensor_means: dict  # sensor channel -> mean
    presence: int  # 1 if any frame in the bin fired
    power_means: dict  # appliance channel -> mean watts
    switch_fractions: dict  # appliance channel -> fraction of frames on
    occupancy_label: int | None = None
    n_frames: int = 0


def _parse_timestamp(text: str, ts_format: str) -> int:
    if ts_format == "epoch":
        return int(text)
    dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _format_timestamp(ts: int, ts_format: str) -> str:
    if ts_format == "epoch":
        return str(int(ts))
    return datetime.fromtimestamp(int(ts), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_csv(
    path,
    schema=CSV_COLUMNS,
    ts_format: str = "epoch",
    household_id: int = 0,
    room_id: str = "room1_living",
) -> HouseholdSeries:
    """Read a telemetry CSV into a :class:`HouseholdSeries`.

    The header must contain every column of ``schema``; extra columns are an
    error. Raises :class:`MissingColumn`, :class:`MalformedRow` (non-numeric
    field, 1-based data line number), or :class:`NonMonotonicTimestamp`.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(0, "empty file")
        for name in schema:
            if name not in header:
                raise MissingColumn(name)
        if len(header) != len(schema):
            extra = set(header) - set(schema)
            raise MalformedRow(0, f"unexpected columns: {sorted(extra)}")
        col = {name: header.index(name) for name in schema}

        timestamps, rows = [], []
        prev_ts = None
        for line_no, raw in enumerate(reader, start=1):
            if len(raw) != len(header):
                raise MalformedRow(line_no, f"expected {len(header)} fields, got {len(raw)}")
            try:
                ts = _parse_timestamp(raw[col["timestamp"]], ts_format)
                values = [float(raw[col[name]]) for name in schema[1:]]
            except ValueError as exc:
                raise MalformedRow(line_no, str(exc))
            if prev_ts is not None and ts <= prev_ts:
                raise NonMonotonicTimestamp(line_no)
            prev_ts = ts
            timestamps.append(ts)
            rows.append(values)

    data = np.array(rows, float).reshape(len(rows), len(schema) - 1)
    names = schema[1:]
    columns = {name: data[:, i] for i, name in enumerate(names)}
    sensors = {c: columns[c] for c in SENSOR_CHANNELS}
    sensors["presence"] = columns["presence"]
    power = {c: columns[f"power_{c}"] for c in APPLIANCE_CHANNELS}
    switch = {c: columns[f"switch_{c}"].astype(int) for c in APPLIANCE_CHANNELS}
    return HouseholdSeries(
        household_id, room_id, np.array(timestamps, np.int64), sensors, power, switch
    )


def write_csv(series: HouseholdSeries, path, ts_format: str = "epoch") -> None:
    """Write a series in canonical form: fixed column order, 3-decimal floats.

    ``write_csv(parse_csv(f))`` is byte-identical to ``f`` for files produced
    by this function.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i in range(len(series)):
            row = [_format_timestamp(series.timestamps[i], ts_format)]
            row += [f"{series.sensors[c][i]:.3f}" for c in SENSOR_CHANNELS]
            row.append(str(int(series.sensors["presence"][i])))
            row += [f"{series.power[c][i]:.3f}" for c in APPLIANCE_CHANNELS]
            row += [str(int(series.switch[c][i])) for c in APPLIANCE_CHANNELS]
            writer.writerow(row)


def resample_15min(series: HouseholdSeries) -> list:
    """Aggregate raw frames into 15-minute bins.

    Continuous channels take the arithmetic mean, presence takes the max
    (any-fire), appliance switches become on-fractions. Bins with zero frames
    are omitted. Raises :class:`PeriodMismatch` when 900 s is not a multiple
    of the native period.
    """
    if BIN_SECONDS % series.native_period != 0:
        raise PeriodMismatch(series.native_period)
    if len(series) == 0:
        return []

    bin_ids = series.timestamps // BIN_SECONDS
    starts, inverse, counts = np.unique(bin_ids, return_inverse=True, return_counts=True)

    def bin_mean(values):
        return np.bincount(inverse, weights=values) / counts

    sensor_means = {c: bin_mean(series.sensors[c]) for c in SENSOR_CHANNELS}
    presence = np.bincount(inverse, weights=series.sensors["presence"]) > 0
    power_means = {c: bin_mean(series.power[c]) for c in APPLIANCE_CHANNELS}
    switch_frac = {c: bin_mean(series.switch[c].astype(float)) for c in APPLIANCE_CHANNELS}

    return [
        BinnedRecord(
            bin_start=int(starts[k] * BIN_SECONDS),
            sensor_means={c: float(sensor_means[c][k]) for c in SENSOR_CHANNELS},
            presence=int(presence[k]),
            power_means={c: float(power_means[c][k]) for c in APPLIANCE_CHANNELS},
            switch_fractions={c: float(switch_frac[c][k]) for c in APPLIANCE_CHANNELS},
            n_frames=int(counts[k]),
        )
        for k in range(len(starts))
    ]


def label_occupancy(bins, policy: TimeZonePolicy = None, hold_bins: int = 2) -> list:
    """Derive binary occupancy labels from per-bin presence.

    Active zone: a presence-positive bin labels itself and the next
    ``hold_bins`` bins occupied (hold resets on every new fire and does not
    cross into the inactive zone). Inactive zone: a whole contiguous run of
    inactive bins is labeled occupied if any presence fired within it
    (occupants asleep, motion sparse), else unoccupied.

    Returns new records; the input list is not mutated.
    """
    if policy is None:
        policy = TimeZonePolicy()
    if hold_bins < 0:
        raise ValueError("hold_bins must be >= 0")

    out = []
    i = 0
    n = len(bins)
    while i < n:
        active = policy.is_active(bins[i].bin_start)
        j = i
        while j < n and policy.is_active(bins[j].bin_start) == active:
            j += 1
        segment = bins[i:j]
        if active:
            countdown = -1
            for rec in segment:
                if rec.presence:
                    label, countdown = 1, hold_bins
                elif countdown > 0:
                    label, countdown = 1, countdown - 1
                else:
                    label = 0
                out.append(_with_label(rec, label))
        else:
            zone_label = 1 if any(rec.presence for rec in segment) else 0
            out.extend(_with_label(rec, zone_label) for rec in segment)
        i = j
    return out


def _with_label(rec: BinnedRecord, label: int) -> BinnedRecord:
    return BinnedRecord(
        bin_start=rec.bin_start,
        sensor_means=dict(rec.sensor_means),
        presence=rec.presence,
        power_means=dict(rec.power_means),
        switch_fractions=dict(rec.switch_fractions),
        occupancy_label=label,
        n_frames=rec.n_frames,
    )
