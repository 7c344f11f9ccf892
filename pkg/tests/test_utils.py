import json
from fractions import Fraction

import pytest

from utils import InputError, format_fraction, iter_bits, load_config, mask_of, parse_fraction


def test_parse_fraction_accepts_rationals_and_integers():
    assert parse_fraction("7/2") == Fraction(7, 2)
    assert parse_fraction(" 3 ") == Fraction(3)
    assert parse_fraction("0.5") == Fraction(1, 2)


def test_parse_fraction_reports_line():
    with pytest.raises(InputError) as err:
        parse_fraction("x/2", line=4)
    assert str(err.value).startswith("line 4:")
    assert err.value.line == 4


def test_format_fraction_never_emits_floats():
    assert format_fraction(Fraction(6, 2)) == "3"
    assert format_fraction(Fraction(7, 2)) == "7/2"
    assert format_fraction(0) == "0"


def test_mask_helpers_agree():
    assert mask_of([0, 3, 5]) == 0b101001
    assert list(iter_bits(0b101001)) == [0, 3, 5]
    assert list(iter_bits(0)) == []


def test_load_config(tmp_path):
    assert load_config('') == {}
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"bench": {"sizes": [4, 5]}}))
    assert load_config(str(path))["bench"]["sizes"] == [4, 5]


def test_load_config_errors(tmp_path):
    with pytest.raises(InputError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"a\": ,\n}")
    with pytest.raises(InputError) as err:
        load_config(str(bad))
    assert err.value.line == 2
