"""Deterministic synthetic cohort generator.

Produces per-household, per-room telemetry at one-minute resolution plus a
15-minute PV production series. Occupancy archetypes (worker, homebody,
night-shift) drive home/away schedules; room presence, indoor-air channels,
and appliance usage all derive from the occupancy state, so the sensor and
appliance signatures the detectors rely on are present by construction.

Everything is a pure function of ``CohortConfig``: per-household generators
are seeded by splitting the cohort seed, so generation is order-independent
and parallel-safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .telemetry import APPLIANCE_CHANNELS, BIN_SECONDS, HouseholdSeries, SENSOR_CHANNELS

MINUTES_PER_DAY = 1440
#: 2022-06-06T00:00:00Z, a summer Monday
DEFAULT_START_EPOCH = 1654473600

ARCHETYPES = ("worker", "homebody", "night_shift")


@dataclass
class CohortConfig:
    n_households: int = 50
    days: int = 7
    seed: int = 42
    native_period: int = 60
    archetype_weights: dict = field(
        default_factory=lambda: {"worker": 0.5, "homebody": 0.3, "night_shift": 0.2}
    )
    pv_peak_kw: float = 0.4
    cloud_noise: float = 0.3
    start_epoch: int = DEFAULT_START_EPOCH
    # probability an occupant leaves a controllable appliance running on departure
    leave_on_prob: dict = field(
        default_factory=lambda: {"hvac": 0.40, "air_cleaner": 0.90, "light": 0.40, "tv": 0.08, "pc": 0.30}
    )

    def __post_init__(self):
        if self.n_households < 1:
            raise ValueError("n_households must be >= 1")
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if not 0.0 <= self.cloud_noise <= 1.0:
            raise ValueError("cloud_noise must lie in [0, 1]")
        total = sum(self.archetype_weights.get(a, 0.0) for a in ARCHETYPES)
        if abs(total - 1.0) > 1e-9:
            raise ValueError("archetype weights must sum to 1")


@dataclass
class HouseholdData:
    household_id: int
    archetype: str
    rooms: dict  # room_id -> HouseholdSeries
    pv_bin_starts: np.ndarray  # epoch seconds, 15-minute grid
    pv_kw: np.ndarray


def _household_rng(config: CohortConfig, household_id: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=config.seed, spawn_key=(household_id,))
    return np.random.default_rng(seq)


def _home_away_schedule(rng, archetype: str, days: int) -> np.ndarray:
    """Minute-level at-home mask over the whole horizon."""
    n = days * MINUTES_PER_DAY
    home = np.ones(n, bool)
    for day in range(days):
        base = day * MINUTES_PER_DAY
        weekday = day % 7 < 5
        if archetype == "worker":
            if weekday:
                dep = int(8 * 60 + 30 + rng.normal(0, 20))
                ret = int(18 * 60 + rng.normal(0, 30))
                home[base + dep : base + ret] = False
            else:
                # weekend errand
                if rng.random() < 0.8:
                    start = int(rng.uniform(10, 16) * 60)
                    home[base + start : base + start + int(rng.uniform(60, 180))] = False
        elif archetype == "homebody":
            for _ in range(rng.integers(2, 4)):
                start = int(rng.uniform(9, 19) * 60)
                home[base + start : base + start + int(rng.uniform(45, 160))] = False
        else:  # night_shift: works ~21:30 -> 07:00 next day
            dep = int(21 * 60 + 30 + rng.normal(0, 20))
            ret = int(7 * 60 + rng.normal(0, 20))
            home[base + dep : base + MINUTES_PER_DAY] = False
            if day + 1 < days:
                home[base + MINUTES_PER_DAY : base + MINUTES_PER_DAY + ret] = False
            if day == 0:
                home[base : base + ret] = False
    return home


def _asleep_schedule(rng, archetype: str, days: int) -> np.ndarray:
    n = days * MINUTES_PER_DAY
    asleep = np.zeros(n, bool)
    for day in range(days):
        base = day * MINUTES_PER_DAY
        if archetype == "night_shift":
            start = int(8 * 60 + 30 + rng.normal(0, 25))
            end = int(15 * 60 + 30 + rng.normal(0, 25))
            asleep[base + start : base + end] = True
        else:
            start = int(23 * 60 + rng.normal(0, 25))
            end = int(6 * 60 + 30 + rng.normal(0, 20))
            asleep[base + start : base + MINUTES_PER_DAY] = True
            if day + 1 < days:
                asleep[base + MINUTES_PER_DAY : base + MINUTES_PER_DAY + end] = False  # next-day handled below
            asleep[base : base + end] = True
    return asleep


def _event_mask(rng, allowed: np.ndarray, per_day_prob: float, days: int,
                window: tuple, duration_minutes: tuple) -> np.ndarray:
    """Usage events: at most one per day, started inside an hour window when
    ``allowed`` (room occupied) holds at the start minute."""
    n = days * MINUTES_PER_DAY
    mask = np.zeros(n, bool)
    lo, hi = window
    for day in range(days):
        if rng.random() >= per_day_prob:
            continue
        start = day * MINUTES_PER_DAY + int(rng.uniform(lo, hi) * 60)
        if start >= n or not allowed[start]:
            continue
        dur = int(rng.uniform(*duration_minutes))
        mask[start : min(start + dur, n)] = True
    return mask


def _apply_leave_on(rng, on: np.ndarray, home: np.ndarray, prob: float) -> np.ndarray:
    """Extend an appliance's on-state through absence periods: on each
    departure, with probability ``prob``, whatever was running stays running
    until the occupant returns."""
    on = on.copy()
    n = len(on)
    departures = np.flatnonzero(home[:-1] & ~home[1:]) + 1
    for dep in departures:
        if dep == 0 or not on[dep - 1]:
            continue
        if rng.random() < prob:
            end = dep
            while end < n and not home[end]:
                end += 1
            on[dep:end] = True
    return on


def _smooth(x: np.ndarray, k: int) -> np.ndarray:
    if k <= 1:
        return x
    kernel = np.ones(k) / k
    return np.convolve(x, kernel, mode="same")


def generate_pv(day_index: int, config: CohortConfig, household_id: int = 0) -> np.ndarray:
    """One day of PV production on the 15-minute grid (96 values, kW).

    Zero outside [sunrise, sunset], bell-shaped with its noiseless maximum at
    solar noon, multiplicative cloud attenuation, non-negative everywhere.
    """
    seq = np.random.SeedSequence(entropy=config.seed, spawn_key=(household_id, 7919, day_index))
    rng = np.random.default_rng(seq)
    hours = (np.arange(96) * BIN_SECONDS + BIN_SECONDS / 2) / 3600.0
    sunrise, sunset = 5.5, 20.5
    frac = (hours - sunrise) / (sunset - sunrise)
    bell = np.where((frac > 0) & (frac < 1), np.sin(np.pi * np.clip(frac, 0, 1)) ** 1.5, 0.0)
    peak = config.pv_peak_kw * (0.7 + 0.6 * rng.random())
    clouds = 1.0 - config.cloud_noise * _smooth(rng.random(96), 8)
    return np.maximum(0.0, peak * bell * np.clip(clouds, 0.0, 1.0))


def _room_sensors(rng, occupied: np.ndarray, cooking: np.ndarray, light_on: np.ndarray,
                  n: int, minutes_of_day: np.ndarray):
    """Indoor-air channels driven by room occupancy (first-order CO2
    relaxation toward 420 ppm ambient plus an occupant source term)."""
    hours = minutes_of_day / 60.0
    occ = occupied.astype(float)

    co2 = np.empty(n)
    level = 450.0
    k, source = 0.035, 12.0  # ~25 min ventilation time constant
    noise = rng.normal(0, 4.0, n)
    for i in range(n):
        level += -k * (level - 420.0) + source * occ[i] + noise[i] * 0.3
        co2[i] = level
    co2 = np.maximum(co2 + np.abs(noise), 380.0)

    daylight = np.maximum(0.0, np.sin(np.pi * (hours - 5.5) / 15.0))
    temperature = 23.0 + 3.0 * daylight + 1.6 * _smooth(occ, 30) + rng.normal(0, 0.3, n)
    humidity = np.clip(55.0 + 8.0 * _smooth(occ, 30) - 4.0 * daylight + rng.normal(0, 1.5, n), 0, 100)
    illuminance = np.maximum(0.0, 280.0 * daylight + 220.0 * light_on + rng.normal(0, 15.0, n))
    tvoc = np.maximum(0.0, 60.0 + 220.0 * _smooth(occ, 25) + 300.0 * _smooth(cooking.astype(float), 30)
                      + rng.normal(0, 10.0, n))
    pm_base = rng.normal(0, 2.0, n)
    pm10 = np.maximum(0.0, 22.0 + 70.0 * _smooth(cooking.astype(float), 40) + 9.0 * _smooth(occ, 30) + pm_base)
    pm25 = np.maximum(0.0, 13.0 + 45.0 * _smooth(cooking.astype(float), 40) + 6.0 * _smooth(occ, 30)
                      + rng.normal(0, 1.2, n))
    return {
        "co2": co2,
        "humidity": humidity,
        "illuminance": illuminance,
        "pm10": pm10,
        "pm25": pm25,
        "temperature": temperature,
        "tvoc": tvoc,
    }


def _presence(rng, occupied: np.ndarray, asleep: np.ndarray) -> np.ndarray:
    """PIR fires often while awake, sparsely while asleep."""
    fire_rate = np.where(occupied, np.where(asleep, 0.04, 0.35), 0.0)
    return (rng.random(len(occupied)) < fire_rate).astype(float)


_POWER_W = {
    "pc": 70.0,
    "tv": 110.0,
    "washing_machine": 500.0,
    "air_cleaner": 38.0,
    "cooker": 750.0,
    "microwave": 1100.0,
    "coffee_pot": 900.0,
    "hair_dryer": 1200.0,
    "hvac": 650.0,
    "light": 32.0,
}

_STANDBY_W = {ch: 1.0 for ch in APPLIANCE_CHANNELS}


def _living_room_appliances(rng, home, awake_home, cooking_hint, hours, config):
    """Minute-level on/off masks for the living room channels."""
    n = len(home)
    evening = (hours >= 19) & (hours < 23)
    daytime = (hours >= 9) & (hours < 19)
    morning = (hours >= 6.5) & (hours < 8.5)
    days = n // MINUTES_PER_DAY

    block = 15
    blocks = awake_home.reshape(-1, block).any(axis=1)
    tv_blocks = blocks & (rng.random(len(blocks)) < np.where(
        evening.reshape(-1, block).any(axis=1), 0.75, 0.10))
    tv = np.repeat(tv_blocks, block) & awake_home
    pc_blocks = blocks & (rng.random(len(blocks)) < np.where(
        evening.reshape(-1, block).any(axis=1), 0.35,
        np.where(daytime.reshape(-1, block).any(axis=1), 0.15, 0.03)))
    pc = np.repeat(pc_blocks, block) & awake_home

    cooker = np.zeros(n, bool)
    microwave = np.zeros(n, bool)
    for window, p_cook, p_micro in (((7.0, 8.0), 0.5, 0.3), ((12.0, 13.0), 0.5, 0.4),
                                    ((18.0, 19.5), 0.85, 0.4)):
        cooker |= _event_mask(rng, awake_home, p_cook, days, window, (15, 35))
        microwave |= _event_mask(rng, awake_home, p_micro, days, window, (2, 8))
    coffee = _event_mask(rng, awake_home, 0.8, days, (6.5, 8.0), (8, 15))
    washing = _event_mask(rng, awake_home, 0.35, days, (10.0, 17.0), (50, 75))

    air_cleaner = awake_home & (rng.random(n) < 0.995)
    dark = (hours < 7.5) | (hours >= 20)
    light = awake_home & dark
    hvac_blocks = blocks & (rng.random(len(blocks)) < 0.55)
    hvac = np.repeat(hvac_blocks, block) & awake_home

    on = {
        "pc": pc, "tv": tv, "washing_machine": washing, "air_cleaner": air_cleaner,
        "cooker": cooker, "microwave": microwave, "coffee_pot": coffee,
        "hair_dryer": np.zeros(n, bool), "hvac": hvac, "light": light,
    }
    for ch, prob in config.leave_on_prob.items():
        on[ch] = _apply_leave_on(rng, on[ch], home, prob)
    # protected channels always finish their cycle regardless of occupancy
    return on


def _bedroom_appliances(rng, home, asleep_home, morning_visit, hours, config):
    n = len(home)
    occupied = asleep_home | morning_visit
    hair = morning_visit & (rng.random(n) < 0.75)
    dark = (hours < 7.0) | (hours >= 20.5)
    light = occupied & dark & (rng.random(n) < 0.25)
    block = 15
    blocks = occupied.reshape(-1, block).any(axis=1)
    hvac = np.repeat(blocks & (rng.random(len(blocks)) < 0.45), block) & occupied
    air = occupied & (rng.random(n) < 0.9)
    on = {ch: np.zeros(n, bool) for ch in APPLIANCE_CHANNELS}
    on.update({"hair_dryer": hair, "light": light, "hvac": hvac, "air_cleaner": air})
    for ch in ("hvac", "air_cleaner", "light"):
        on[ch] = _apply_leave_on(rng, on[ch], home, config.leave_on_prob.get(ch, 0.0) * 0.5)
    return on


def _appliance_arrays(rng, on_masks, n):
    power, switch = {}, {}
    for ch in APPLIANCE_CHANNELS:
        mask = on_masks[ch]
        jitter = 1.0 + 0.08 * rng.standard_normal(n)
        p = np.where(mask, _POWER_W[ch] * np.clip(jitter, 0.5, 1.5), _STANDBY_W[ch])
        power[ch] = np.maximum(0.0, p)
        switch[ch] = mask.astype(int)
    return power, switch


def generate_household(household_id: int, config: CohortConfig) -> HouseholdData:
    """Generate both rooms plus the PV series for one household."""
    rng = _household_rng(config, household_id)
    archetype = rng.choice(ARCHETYPES, p=[config.archetype_weights[a] for a in ARCHETYPES])

    n = config.days * MINUTES_PER_DAY
    minutes_of_day = np.arange(n) % MINUTES_PER_DAY
    hours = minutes_of_day / 60.0

    home = _home_away_schedule(rng, archetype, config.days)
    asleep = _asleep_schedule(rng, archetype, config.days) & home
    awake_home = home & ~asleep
    asleep_home = home & asleep

    rooms = {}
    timestamps = config.start_epoch + np.arange(n, dtype=np.int64) * config.native_period

    living_on = _living_room_appliances(rng, home, awake_home, None, hours, config)
    cooking = living_on["cooker"] | living_on["microwave"]
    sensors1 = _room_sensors(rng, awake_home, cooking, living_on["light"], n, minutes_of_day)
    sensors1["presence"] = _presence(rng, awake_home, np.zeros(n, bool))
    power1, switch1 = _appliance_arrays(rng, living_on, n)
    rooms["room1_living"] = HouseholdSeries(
        household_id, "room1_living", timestamps, sensors1, power1, switch1
    )

    # short awake bedroom visits (morning routine) in addition to sleep time
    morning_visit = _event_mask(
        rng, awake_home, 0.85, config.days, (6.75, 8.75), (6, 14)
    )
    bedroom_occ = asleep_home | morning_visit
    bedroom_on = _bedroom_appliances(rng, home, asleep_home, morning_visit, hours, config)
    sensors2 = _room_sensors(rng, bedroom_occ, np.zeros(n, bool), bedroom_on["light"], n, minutes_of_day)
    sensors2["presence"] = _presence(rng, bedroom_occ, asleep & ~morning_visit)
    power2, switch2 = _appliance_arrays(rng, bedroom_on, n)
    rooms["room2_bedroom"] = HouseholdSeries(
        household_id, "room2_bedroom", timestamps, sensors2, power2, switch2
    )

    pv = np.concatenate([generate_pv(d, config, household_id) for d in range(config.days)])
    pv_starts = config.start_epoch + np.arange(len(pv), dtype=np.int64) * BIN_SECONDS
    return HouseholdData(household_id, str(archetype), rooms, pv_starts, pv)


def generate_cohort(config: CohortConfig) -> list:
    """Deterministic cohort: identical config -> identical output."""
    return [generate_household(h, config) for h in range(config.n_households)]


def write_pv_csv(data: HouseholdData, path) -> None:
    with open(path, "w") as fh:
        fh.write("bin_start,kw\n")
        for ts, kw in zip(data.pv_bin_starts, data.pv_kw):
            fh.write(f"{int(ts)},{kw:.4f}\n")


def read_pv_csv(path):
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return raw[:, 0].astype(np.int64), raw[:, 1]
