"""Line-oriented text format for preference profiles.

    n=3
    A 1: 2 1 3
    A 2: ...
    B 1: 1 3 2
    ...

Agents are written with 1-based labels, listed in preference order.
"""

from __future__ import annotations

import re
from pathlib import Path

from app.core.enums import Side
from app.core.exceptions import InvalidProfileError
from app.models.permutation import Permutation
from app.models.profile import PreferenceProfile

_HEADER = re.compile(r"^n\s*=\s*(\d+)$")
_LIST_LINE = re.compile(r"^([AB])\s+(\d+)\s*:\s*(.*)$")


def dumps(profile: PreferenceProfile) -> str:
    lines = [f"n={profile.n}"]
    for side in (Side.A, Side.B):
        for index, perm in enumerate(profile.lists(side)):
            ranked = " ".join(str(agent + 1) for agent in perm.order())
            lines.append(f"{side.value} {index + 1}: {ranked}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> PreferenceProfile:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise InvalidProfileError("Empty profile text")
    header = _HEADER.match(lines[0])
    if not header:
        raise InvalidProfileError(f"Expected header 'n=<n>', got {lines[0]!r}")
    n = int(header.group(1))
    if n < 1:
        raise InvalidProfileError("Profile size must be at least 1")

    orders: dict[tuple[Side, int], list[int]] = {}
    for line in lines[1:]:
        match = _LIST_LINE.match(line)
        if not match:
            raise InvalidProfileError(f"Malformed list line: {line!r}")
        side, label, body = Side(match.group(1)), int(match.group(2)), match.group(3)
        if not 1 <= label <= n:
            raise InvalidProfileError(f"Agent label {side.value}{label} out of range 1..{n}")
        if (side, label - 1) in orders:
            raise InvalidProfileError(f"Duplicate list for {side.value}{label}")
        try:
            orders[(side, label - 1)] = [int(token) - 1 for token in body.split()]
        except ValueError:
            raise InvalidProfileError(f"Non-integer entry in list of {side.value}{label}") from None

    missing = [f"{s.value}{i + 1}" for s in Side for i in range(n) if (s, i) not in orders]
    if missing:
        raise InvalidProfileError(f"Missing lists for: {', '.join(missing[:5])}")

    def build(side: Side) -> list[Permutation]:
        perms = []
        for index in range(n):
            order = orders[(side, index)]
            if len(order) != n:
                raise InvalidProfileError(f"List of {side.value}{index + 1} has {len(order)} entries, expected {n}")
            perms.append(Permutation.from_order(order))
        return perms

    return PreferenceProfile(build(Side.A), build(Side.B))


def write_profile(profile: PreferenceProfile, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps(profile), encoding="utf-8")
    return path


def read_profile(path: str | Path) -> PreferenceProfile:
    return loads(Path(path).read_text(encoding="utf-8"))
