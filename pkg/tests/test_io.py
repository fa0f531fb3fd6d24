from __future__ import annotations

import json

import pytest
from hypothesis import given

from kneserkit.group import Arc, BohrDescription, Character, make_group
from kneserkit.io import (
    FormatError,
    bohr_from_json,
    bohr_to_json,
    csv_text,
    read_set,
    set_from_json,
    set_to_json,
    write_json,
)

from .schemas import validate
from .strategies import group_and_sets


@given(group_and_sets(count=1, nonempty=False))
def test_set_roundtrip(gs):
    _, a = gs
    obj = set_to_json(a)
    validate("set", obj)
    assert set_from_json(json.loads(json.dumps(obj))) == a


def test_file_roundtrip(tmp_path):
    from kneserkit.group import GroupSet

    a = GroupSet.from_indices(make_group([4, 5]), [0, 7, 19])
    write_json(set_to_json(a), tmp_path / "sub" / "a.json")
    assert read_set(tmp_path / "sub" / "a.json") == a


def test_schema_field_optional_on_input():
    assert set_from_json({"dims": [5], "members": [1, 2]}).members() == [1, 2]


@pytest.mark.parametrize(
    "obj",
    [
        {"dims": [5], "members": [2, 1]},
        {"dims": [5], "members": [1, 1]},
        {"dims": [5], "members": [5]},
        {"dims": [5], "members": [-1]},
        {"dims": [5]},
        {"dims": "x", "members": []},
        {"schema": "kneserkit.bohr/1", "dims": [5], "members": []},
        [1, 2],
    ],
)
def test_set_rejects(obj):
    with pytest.raises(ValueError):
        set_from_json(obj)


def test_bad_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        read_set(p)


def test_bohr_roundtrip():
    g = make_group([12, 8])
    chi = Character(g, (3, 2))
    desc = BohrDescription(chi, Arc(chi.order, 1, 2))
    obj = bohr_to_json(desc)
    validate("bohr", obj)
    back = bohr_from_json(obj, g)
    assert back.character == chi and back.arc == desc.arc


def test_bohr_rejects():
    g = make_group([12])
    with pytest.raises(FormatError):
        bohr_from_json({"freq": [2], "order": 12, "arc": {"start": 0, "length": 3}}, g)
    with pytest.raises(FormatError):
        bohr_from_json({"freq": [2], "order": 6}, g)


def test_csv_text():
    assert csv_text(("a", "b"), [(1, "x,y")]) == 'a,b\n1,"x,y"\n'
