"""Tests for frequency unit helpers."""

import math

import pytest

from src.bosonic_sw.units import angular_to_hz, format_frequency, hz_to_angular, parse_frequency, seconds_to_duration_str


class TestFrequencyParsing:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("4 GHz", 4e9),
            ("0.5MHz", 0.5e6),
            ("20e6", 20e6),
            ("2 kHz", 2e3),
            ("-1.5 mhz", -1.5e6),
            (".25 Hz", 0.25),
        ],
    )
    def test_literals(self, text, expected):
        assert parse_frequency(text) == pytest.approx(expected)

    @pytest.mark.parametrize("text", ["", "GHz", "4 G Hz", "4 parsecs", "four"])
    def test_invalid_literals(self, text):
        with pytest.raises(ValueError):
            parse_frequency(text)

    def test_angular_round_trip(self):
        assert hz_to_angular(1.0) == pytest.approx(2 * math.pi)
        assert angular_to_hz(hz_to_angular(4e9)) == pytest.approx(4e9)


class TestFormatting:
    @pytest.mark.parametrize(
        "value,expected",
        [(4e9, "4 GHz"), (20.67e6, "20.67 MHz"), (2e3, "2 kHz"), (0.0, "0 Hz"), (-1.5e6, "-1.5 MHz")],
    )
    def test_format_frequency(self, value, expected):
        assert format_frequency(value) == expected

    def test_durations(self):
        assert seconds_to_duration_str(1 / 6e6) == "166.7 ns"
        assert seconds_to_duration_str(2.5e-6) == "2.5 us"
        assert seconds_to_duration_str(1e-13) == "0.1 ps"
