"""Generator file formats.

Text (permutations only)::

    permutation degree=5
    # comments and blank lines are ignored
    (1 2 3)(4 5)
    (1 2)

Structured (JSON)::

    {"type": "permutation", "degree": 5, "generators": [[2, 3, 1, 5, 4], ...]}
    {"type": "matrix", "dim": 2, "prime": 3, "generators": [[[1, 1], [0, 1]], ...]}

Permutation images are 1-based in both formats.
"""
from __future__ import annotations

import json
import re

from .groups import (BlackBoxGroup, GeneratingSet, GroupError, MatrixGroup,
                     PermutationGroup)

_HEADER = re.compile(r"^\s*permutation\s+degree\s*=\s*(\d+)\s*$", re.IGNORECASE)
_CYCLE = re.compile(r"\(([^()]*)\)")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


def parse_cycles(text: str, degree: int, line: int | None = None) -> tuple:
    """One permutation written as a product of disjoint-or-not cycles.

    Cycles are composed left to right, matching the group's convention.
    """
    body = text.strip()
    if body.count("(") != body.count(")"):
        raise ParseError("unclosed cycle", line)
    if _CYCLE.sub("", body).strip():
        raise ParseError(f"unexpected text in {body!r}", line)
    images = list(range(degree))
    for match in _CYCLE.finditer(body):
        tokens = match.group(1).replace(",", " ").split()
        try:
            points = [int(tok) for tok in tokens]
        except ValueError:
            raise ParseError(f"non-integer point in cycle ({match.group(1)})", line) from None
        if len(set(points)) != len(points):
            raise ParseError(f"duplicate point in cycle ({match.group(1)})", line)
        for pt in points:
            if not 1 <= pt <= degree:
                raise ParseError(f"point {pt} out of range 1..{degree}", line)
        if len(points) < 2:
            continue
        cyc = {points[i] - 1: points[(i + 1) % len(points)] - 1 for i in range(len(points))}
        images = [cyc.get(x, x) for x in images]
    return tuple(images)


def format_cycles(perm: tuple) -> str:
    """Disjoint cycle notation, 1-based; ``()`` for the identity."""
    seen = set()
    parts = []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            continue
        cyc = []
        x = start
        while x not in seen:
            seen.add(x)
            cyc.append(x + 1)
            x = perm[x]
        parts.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(parts) or "()"


def format_element(G: BlackBoxGroup, a: tuple, notation: str = "cycles") -> str:
    if G.kind == "permutation":
        if notation == "cycles":
            return format_cycles(a)
        return "[" + " ".join(str(x + 1) for x in a) + "]"
    return json.dumps(G.rows(a))


def _parse_text(text: str) -> tuple[BlackBoxGroup, GeneratingSet]:
    lines = text.splitlines()
    header_seen = None
    gens = []
    names = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header_seen is None:
            m = _HEADER.match(line)
            if not m:
                raise ParseError("expected header 'permutation degree=n'", lineno)
            header_seen = int(m.group(1))
            if header_seen < 1:
                raise ParseError("degree must be positive", lineno)
            continue
        name = None
        if ":" in line:
            name, line = (s.strip() for s in line.split(":", 1))
        gens.append(parse_cycles(line, header_seen, lineno))
        names.append(name or f"g{len(gens)}")
    if header_seen is None:
        raise ParseError("empty group specification")
    if not gens:
        raise ParseError("no generators given")
    return PermutationGroup(header_seen), GeneratingSet(gens, names)


def _parse_json(text: str) -> tuple[BlackBoxGroup, GeneratingSet]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    kind = data.get("type")
    raw = data.get("generators")
    if not isinstance(raw, list) or not raw:
        raise ParseError("'generators' must be a nonempty list")
    names = data.get("names") or []
    try:
        if kind == "permutation":
            G = PermutationGroup(int(data["degree"]))
            gens = []
            for i, img in enumerate(raw):
                if any(not isinstance(x, int) or not 1 <= x <= G.degree for x in img):
                    raise ParseError(f"generator {i + 1}: image out of range 1..{G.degree}")
                gens.append(G.validate([x - 1 for x in img]))
        elif kind == "matrix":
            G = MatrixGroup(int(data["dim"]), int(data["prime"]))
            gens = []
            for i, mat in enumerate(raw):
                if len(mat) != G.dim or any(len(row) != G.dim for row in mat):
                    raise ParseError(f"generator {i + 1}: expected {G.dim}x{G.dim} rows")
                gens.append(G.validate([x for row in mat for x in row]))
        else:
            raise ParseError(f"unknown group type {kind!r}")
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}") from None
    except GroupError as exc:
        raise ParseError(str(exc)) from None
    return G, GeneratingSet(gens, list(names))


def parse_group_spec(text: str) -> tuple[BlackBoxGroup, GeneratingSet]:
    """Parse either format; the first non-blank character decides."""
    if text.lstrip().startswith("{"):
        return _parse_json(text)
    return _parse_text(text)


def group_to_dict(G: BlackBoxGroup, S: GeneratingSet | None = None) -> dict:
    out = G.describe()
    if S is not None:
        if G.kind == "permutation":
            out["generators"] = [[x + 1 for x in g] for g in S]
        else:
            out["generators"] = [G.rows(g) for g in S]
        if any(n != f"g{i + 1}" for i, n in enumerate(S.names)):
            out["names"] = list(S.names)
    return out


def serialize_group(G: BlackBoxGroup, S: GeneratingSet, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(group_to_dict(G, S), separators=(", ", ": ")) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    if G.kind != "permutation":
        raise ValueError("the text format only holds permutation groups")
    lines = [f"permutation degree={G.degree}"]
    for i, (name, g) in enumerate(zip(S.names, S)):
        prefix = "" if name == f"g{i + 1}" else f"{name}: "
        lines.append(prefix + format_cycles(g))
    return "\n".join(lines) + "\n"
