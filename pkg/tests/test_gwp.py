from __future__ import annotations

import logging
from datetime import datetime, timedelta

import pytest
from hypothesis import given, strategies as st

from lecopt.gwp import (
    DEFAULT_FACTORS,
    EmissionFactorTable,
    GenerationMixHour,
    ZeroCoveredGeneration,
    coverage_ratio,
    hourly_intensity,
    intensity_series,
    normalize_source,
)

T0 = datetime(2022, 3, 3)
FACTORS = EmissionFactorTable()


def mix(energy, ts=T0):
    return GenerationMixHour(ts, energy)


class TestNormalization:
    def test_case_and_spacing(self):
        assert normalize_source("  Hard Coal ") == "hard_coal"
        assert normalize_source("hydro-power") == "hydro"

    def test_aliases(self):
        assert normalize_source("cogeneration") == "natural_gas"
        assert normalize_source("combined cycle") == "natural_gas"
        assert normalize_source("Solar") == "solar_pv"

    def test_unknown_passes_through(self):
        assert normalize_source("Tidal") == "tidal"


class TestHourlyIntensity:
    def test_single_source_equals_its_factor(self):
        assert hourly_intensity(mix({"wind": 1234.0}), FACTORS) == pytest.approx(0.022, abs=1e-12)
        assert hourly_intensity(mix({"hard_coal": 10.0}), FACTORS) == pytest.approx(0.855, abs=1e-12)

    def test_even_coal_nuclear_split(self):
        value = hourly_intensity(mix({"hard_coal": 500.0, "nuclear": 500.0}), FACTORS)
        assert value == pytest.approx((0.855 + 0.019) / 2, abs=1e-12)

    def test_uncovered_source_excluded_from_both_sides(self):
        # An unknown source must not dilute the intensity toward zero.
        with_unknown = hourly_intensity(mix({"wind": 100.0, "unobtainium": 900.0}), FACTORS)
        assert with_unknown == pytest.approx(0.022, abs=1e-12)

    def test_zero_covered_generation_raises(self):
        with pytest.raises(ZeroCoveredGeneration):
            hourly_intensity(mix({"unobtainium": 900.0}), FACTORS)

    def test_weighted_average(self):
        value = hourly_intensity(mix({"natural_gas": 300.0, "hydro": 700.0}), FACTORS)
        assert value == pytest.approx((300 * 0.690 + 700 * 0.011) / 1000, abs=1e-12)


class TestCoverage:
    def test_full_coverage(self):
        assert coverage_ratio(mix({"wind": 5.0, "hydro": 5.0}), FACTORS) == 1.0

    def test_partial_coverage(self):
        assert coverage_ratio(mix({"wind": 4.0, "unobtainium": 6.0}), FACTORS) == pytest.approx(0.4)

    def test_zero_total_rejected(self):
        with pytest.raises(ValueError, match="total mix energy"):
            coverage_ratio(mix({"wind": 0.0}), FACTORS)


class TestFactorTable:
    def test_defaults_cover_case_study_sources(self):
        for src in ("hard_coal", "lignite", "natural_gas", "nuclear", "biomass", "hydro", "wind", "battery"):
            assert src in DEFAULT_FACTORS

    def test_overrides_merge_with_defaults(self):
        table = EmissionFactorTable.with_overrides({"wind": 0.030, "Tidal": 0.017})
        assert table.get("wind") == 0.030
        assert table.get("tidal") == 0.017
        assert table.get("nuclear") == 0.019

    def test_negative_factor_rejected(self):
        with pytest.raises(ValueError, match="negative factor"):
            EmissionFactorTable({"wind": -0.1})

    def test_empty_table_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            EmissionFactorTable({})

    def test_negative_energy_rejected(self):
        with pytest.raises(ValueError, match="negative energy"):
            mix({"wind": -1.0})


class TestIntensitySeries:
    def _hours(self, n):
        return [mix({"wind": 100.0 + i, "natural_gas": 50.0}, T0 + i * timedelta(hours=1)) for i in range(n)]

    def test_series_values_and_timestamps(self):
        series = intensity_series(self._hours(3), FACTORS)
        assert len(series) == 3
        assert series.timestamps[0] == T0
        for i, value in enumerate(series.values):
            assert value == pytest.approx(hourly_intensity(self._hours(3)[i], FACTORS))

    def test_gap_rejected(self):
        hours = self._hours(3)
        hours[2] = mix(hours[2].energy, T0 + timedelta(hours=5))
        with pytest.raises(ValueError, match="not strictly hourly"):
            intensity_series(hours, FACTORS)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="no mix hours"):
            intensity_series([], FACTORS)

    def test_low_coverage_logged(self, caplog):
        hours = [mix({"wind": 10.0, "unobtainium": 90.0})]
        with caplog.at_level(logging.WARNING, logger="lecopt.gwp"):
            intensity_series(hours, FACTORS)
        assert any("coverage" in rec.message for rec in caplog.records)


_covered = sorted(DEFAULT_FACTORS)
# Subnormal energies are excluded: energy * factor underflows to exactly
# zero below ~1e-320, which is measurement noise, not a mix.
_energies = st.dictionaries(
    st.sampled_from(_covered),
    st.floats(min_value=0.0, max_value=1e6, allow_subnormal=False),
    min_size=1,
)


class TestProperties:
    @given(_energies)
    def test_convex_combination_bounds(self, energy):
        m = mix(energy)
        if sum(energy.values()) <= 0:
            return
        value = hourly_intensity(m, FACTORS)
        factors = [FACTORS.factors[s] for s in m.energy]
        assert min(factors) - 1e-12 <= value <= max(factors) + 1e-12

    @given(_energies, st.floats(min_value=1e-3, max_value=1e3))
    def test_scale_invariance(self, energy, scale):
        if sum(energy.values()) <= 0:
            return
        base = hourly_intensity(mix(energy), FACTORS)
        scaled = hourly_intensity(mix({s: e * scale for s, e in energy.items()}), FACTORS)
        assert scaled == pytest.approx(base, rel=1e-9, abs=1e-12)

    @given(_energies, st.floats(min_value=0.1, max_value=1e5))
    def test_adding_average_source_is_neutral(self, energy, extra):
        # Adding generation whose factor equals the current intensity must
        # leave the intensity unchanged.
        if sum(energy.values()) <= 0:
            return
        base = hourly_intensity(mix(energy), FACTORS)
        table = EmissionFactorTable.with_overrides({"averagium": base})
        grown = dict(energy)
        grown["averagium"] = grown.get("averagium", 0.0) + extra
        assert hourly_intensity(mix(grown), table) == pytest.approx(
            hourly_intensity(mix(energy), table), rel=1e-9, abs=1e-12
        )
