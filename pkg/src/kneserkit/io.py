"""JSON and CSV formats for sets, Bohr descriptions and tables.

Set:  {"schema": "kneserkit.set/1", "dims": [N1, ...], "members": [i0, i1, ...]}
      (strictly increasing linear indices)
Bohr: {"schema": "kneserkit.bohr/1", "freq": [xi1, ...], "order": L, "arc": {"start": s, "length": l}}

The schema field is written always and checked when present on input.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .group import Arc, BohrDescription, Character, GridGroup, GroupSet, make_group


SET_SCHEMA = "kneserkit.set/1"
BOHR_SCHEMA = "kneserkit.bohr/1"


class FormatError(ValueError):
    pass


def _check_schema(obj: Mapping, expected: str) -> None:
    if not isinstance(obj, Mapping):
        raise FormatError(f"expected a JSON object, got {type(obj).__name__}")
    got = obj.get("schema", expected)
    if got != expected:
        raise FormatError(f"schema {got!r} is not {expected!r}")


def set_to_json(a: GroupSet) -> dict:
    return {"schema": SET_SCHEMA, "dims": list(a.group.dims), "members": a.members()}


def set_from_json(obj: Mapping) -> GroupSet:
    _check_schema(obj, SET_SCHEMA)
    try:
        dims = [int(n) for n in obj["dims"]]
        members = [int(x) for x in obj["members"]]
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed set record: {e}") from e
    if any(b <= a for a, b in zip(members, members[1:])):
        raise FormatError("members must be strictly increasing")
    g = make_group(dims)
    if members and (members[0] < 0 or members[-1] >= g.total_size):
        raise FormatError("member index out of range")
    return GroupSet.from_indices(g, members)


def bohr_to_json(desc: BohrDescription) -> dict:
    return {
        "schema": BOHR_SCHEMA,
        "freq": list(desc.character.freq),
        "order": desc.character.order,
        "arc": {"start": desc.arc.start, "length": desc.arc.length},
    }


def bohr_from_json(obj: Mapping, group: GridGroup) -> BohrDescription:
    _check_schema(obj, BOHR_SCHEMA)
    try:
        chi = Character(group, tuple(int(v) for v in obj["freq"]))
        arc = Arc(int(obj["order"]), int(obj["arc"]["start"]), int(obj["arc"]["length"]))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed Bohr record: {e}") from e
    if chi.order != arc.circle_size:
        raise FormatError(f"order {arc.circle_size} does not match character order {chi.order}")
    return BohrDescription(chi, arc)


def read_set(path: str | Path) -> GroupSet:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}: {e}") from e
    return set_from_json(obj)


def write_json(obj, path: str | Path | None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n")
    return text


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_csv(header: Sequence[str], rows: Iterable[Sequence], path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(csv_text(header, rows))
