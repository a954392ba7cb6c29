"""Bundled synthetic 48 h community fixture.

Four office buildings with the case-study contracted powers, sharing
coefficients, and battery parameters, driven by synthetic sinusoidal
load, PV, price, and grid-intensity profiles. The profiles are invented
test data, not measurements; they exist so end-to-end runs and tests have
a deterministic, self-contained input.
"""

from __future__ import annotations

import json
import math
from datetime import datetime
from pathlib import Path

from lecopt.domain import (
    BessSpec,
    CommunitySpec,
    HourlySeries,
    Participant,
    PvSpec,
    SharingMode,
    SharingScheme,
)

FIXTURE_START = datetime(2022, 3, 3)
FIXTURE_VAT = 0.21

CONTRACTED_POWER = {"B1": 70.0, "B2": 43.65, "B3": 20.785, "B4": 75.0}
STATIC_COEFFICIENTS = {"B1": 0.35, "B2": 0.15, "B3": 0.02, "B4": 0.48}
LOAD_SCALE = {"B1": 24.0, "B2": 11.0, "B3": 1.6, "B4": 48.0}

TABLE_BESS = dict(
    p_ch_max=90.0,
    p_dis_max=90.0,
    soc_max=189.9,
    soc_min=31.65,
    eta_ch=0.95,
    eta_dis=0.95,
    soc_initial=150.0,
    soc_final=150.0,
)


def _office_load(scale: float, t: int) -> float:
    h = t % 24
    day = t // 24
    base = 0.35 + 0.65 * math.exp(-((h - 13.0) ** 2) / 18.0)  # office hours bump
    wiggle = 1.0 + 0.06 * math.sin(0.7 * t + day)
    return round(scale * base * wiggle, 4)


def _pv_generation(t: int) -> float:
    h = t % 24
    day = t // 24
    if not 7 <= h <= 19:
        return 0.0
    bell = math.sin(math.pi * (h - 7) / 12.0) ** 2
    return round(68.0 * bell * (1.0 - 0.12 * day), 4)


def _raw_buy_price(t: int) -> float:
    # Double-peaked wholesale shape, EUR/kWh pre-VAT, peaks at 9h and 20h.
    h = t % 24
    day = t // 24
    morning = 0.085 * math.exp(-((h - 9.0) ** 2) / 8.0)
    evening = 0.115 * math.exp(-((h - 20.0) ** 2) / 6.0)
    return round(0.10 + morning + evening + 0.008 * day, 6)


def _sell_price(t: int) -> float:
    return round(0.5 * _raw_buy_price(t), 6)


def _grid_intensity(t: int) -> float:
    # Fossil share peaks early afternoon, deliberately offset from the price
    # peaks so the two objectives pull the battery in different directions.
    h = t % 24
    day = t // 24
    midday = 0.17 * math.exp(-((h - 14.0) ** 2) / 20.0)
    night = 0.05 * math.exp(-((h - 3.0) ** 2) / 10.0)
    return round(0.14 + midday + night + 0.01 * day, 6)


def synthetic_community(hours: int = 48) -> CommunitySpec:
    """Deterministic four-building community over `hours` hours."""
    ts0 = FIXTURE_START
    loads = {
        pid: HourlySeries.from_values([_office_load(scale, t) for t in range(hours)], ts0)
        for pid, scale in LOAD_SCALE.items()
    }
    buy = HourlySeries.from_values([(1 + FIXTURE_VAT) * _raw_buy_price(t) for t in range(hours)], ts0)
    sell = HourlySeries.from_values([_sell_price(t) for t in range(hours)], ts0)
    participants = tuple(
        Participant(
            id=pid,
            load=loads[pid],
            buy_price=buy,
            sell_price=sell,
            max_import={1: CONTRACTED_POWER[pid]},
        )
        for pid in ("B1", "B2", "B3", "B4")
    )
    return CommunitySpec(
        participants=participants,
        bess=BessSpec(**TABLE_BESS),
        pv=PvSpec(HourlySeries.from_values([_pv_generation(t) for t in range(hours)], ts0)),
        sharing=SharingScheme(SharingMode.STATIC, static_coefficients=dict(STATIC_COEFFICIENTS)),
        grid_intensity=HourlySeries.from_values([_grid_intensity(t) for t in range(hours)], ts0),
        horizon_hours=hours,
        vat_rate=FIXTURE_VAT,
    )


def write_fixture_files(directory, hours: int = 48) -> Path:
    """Write the fixture as CSVs plus a community config JSON; returns the config path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    spec = synthetic_community(hours)
    stamps = [ts.isoformat() for ts in spec.grid_intensity.timestamps]

    with open(directory / "load.csv", "w", encoding="utf-8") as fh:
        fh.write("timestamp," + ",".join(p.id for p in spec.participants) + "\n")
        for i, ts in enumerate(stamps):
            fh.write(ts + "," + ",".join(f"{p.load.values[i]}" for p in spec.participants) + "\n")

    with open(directory / "prices.csv", "w", encoding="utf-8") as fh:
        fh.write("timestamp,buy,sell\n")
        for i, ts in enumerate(stamps):
            fh.write(f"{ts},{_raw_buy_price(i)},{_sell_price(i)}\n")

    with open(directory / "pv.csv", "w", encoding="utf-8") as fh:
        fh.write("timestamp,generation\n")
        for i, ts in enumerate(stamps):
            fh.write(f"{ts},{spec.pv.generation.values[i]}\n")

    with open(directory / "intensity.csv", "w", encoding="utf-8") as fh:
        fh.write("timestamp,gwp\n")
        for i, ts in enumerate(stamps):
            fh.write(f"{ts},{spec.grid_intensity.values[i]}\n")

    # A small synthetic day-ahead mix for the gwp subcommand.
    with open(directory / "mix.csv", "w", encoding="utf-8") as fh:
        fh.write("timestamp,wind,nuclear,natural gas,hydro\n")
        for i, ts in enumerate(stamps):
            h = i % 24
            gas = 2000.0 + 1500.0 * math.exp(-((h - 14.0) ** 2) / 20.0)
            wind = 4000.0 - 80.0 * h
            fh.write(f"{ts},{wind:.1f},{3500.0},{gas:.1f},{900.0}\n")

    config = {
        "horizon_hours": hours,
        "vat_rate": FIXTURE_VAT,
        "prices_are_tax_inclusive": False,
        "participants": [
            {
                "id": pid,
                "load": {"file": "load.csv", "column": pid},
                "buy_price": {"file": "prices.csv", "column": "buy"},
                "sell_price": {"file": "prices.csv", "column": "sell"},
                "max_import": CONTRACTED_POWER[pid],
            }
            for pid in ("B1", "B2", "B3", "B4")
        ],
        "bess": dict(TABLE_BESS),
        "pv": {"generation": {"file": "pv.csv", "column": "generation"}},
        "sharing": {"mode": "static", "coefficients": STATIC_COEFFICIENTS},
        "grid_intensity": {"file": "intensity.csv", "column": "gwp"},
    }
    config_path = directory / "community.json"
    config_path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return config_path
