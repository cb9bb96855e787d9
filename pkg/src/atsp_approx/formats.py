"""Reading and writing weighted digraphs: TSPLIB ATSP full matrices and native JSON."""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import IO, Mapping

from .graph import Digraph, Edge
from .instance import fraction_text, parse_fraction


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


def _read_text(source) -> tuple[str, str | None]:
    if hasattr(source, "read"):
        return source.read(), None
    path = Path(source)
    return path.read_text(), path.suffix.lower()


def parse_instance(source, fmt: str | None = None) -> tuple[Digraph, dict[int, Fraction]]:
    """Parse a path or stream; ``fmt`` is ``"tsplib"``, ``"json"`` or None to sniff."""
    text, suffix = _read_text(source)
    if fmt is None:
        fmt = "json" if suffix == ".json" or text.lstrip().startswith("{") else "tsplib"
    if fmt == "json":
        return parse_json(text)
    if fmt == "tsplib":
        return parse_tsplib(text)
    raise ParseError(f"unknown format {fmt!r}")


_HEADER = re.compile(r"^\s*([A-Z_]+)\s*:?\s*(.*?)\s*$")


def parse_tsplib(text: str) -> tuple[Digraph, dict[int, Fraction]]:
    header: dict[str, str] = {}
    numbers: list[tuple[int, int]] = []  # (value, line)
    in_matrix = False
    matrix_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_matrix:
            for tok in line.split():
                try:
                    numbers.append((int(tok), lineno))
                except ValueError:
                    raise ParseError(f"non-integer matrix entry {tok!r}", lineno) from None
            continue
        if line.startswith("EDGE_WEIGHT_SECTION"):
            in_matrix = True
            matrix_line = lineno
            continue
        m = _HEADER.match(line)
        if not m or ":" not in line:
            raise ParseError(f"malformed header line {line!r}", lineno)
        header[m.group(1)] = m.group(2)
        header.setdefault("_line_" + m.group(1), str(lineno))

    def need(key: str, expected: str | None = None) -> str:
        if key not in header:
            raise ParseError(f"missing {key} header")
        if expected is not None and header[key].upper() != expected:
            raise ParseError(f"{key} must be {expected}, got {header[key]!r}", int(header["_line_" + key]))
        return header[key]

    if header.get("TYPE", "ATSP").upper() not in ("ATSP", "TSP"):
        raise ParseError(f"unsupported TYPE {header['TYPE']!r}", int(header["_line_TYPE"]))
    need("EDGE_WEIGHT_TYPE", "EXPLICIT")
    need("EDGE_WEIGHT_FORMAT", "FULL_MATRIX")
    try:
        n = int(need("DIMENSION"))
    except ValueError:
        raise ParseError("DIMENSION is not an integer", int(header["_line_DIMENSION"])) from None
    if n < 1:
        raise ParseError("DIMENSION must be positive", int(header["_line_DIMENSION"]))
    if matrix_line is None:
        raise ParseError("missing EDGE_WEIGHT_SECTION")
    if len(numbers) != n * n:
        last = numbers[-1][1] if numbers else matrix_line
        raise ParseError(f"expected {n * n} matrix entries for DIMENSION {n}, found {len(numbers)}", last)
    edges, w = [], {}
    for k, (value, lineno) in enumerate(numbers):
        u, v = divmod(k, n)
        if value < 0:
            raise ParseError("negative weight", lineno)
        if u == v:
            continue
        eid = len(edges)
        edges.append(Edge(eid, u, v))
        w[eid] = Fraction(value)
    return Digraph(n, edges), w


def parse_json(text: str) -> tuple[Digraph, dict[int, Fraction]]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(err.msg, err.lineno) from None
    try:
        n = int(data["n"])
        edges, w = [], {}
        for rec in data["edges"]:
            e = Edge(int(rec["id"]), int(rec["tail"]), int(rec["head"]))
            if not (0 <= e.tail < n and 0 <= e.head < n):
                raise ParseError(f"edge {e.id} has an endpoint out of range")
            edges.append(e)
            w[e.id] = parse_fraction(rec["w"])
            if w[e.id] < 0:
                raise ParseError(f"edge {e.id} has negative weight")
        return Digraph(n, edges), w
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as err:
        raise ParseError(f"malformed instance: {err}") from None


def to_json(g: Digraph, w: Mapping[int, Fraction]) -> str:
    data = {
        "n": g.n,
        "edges": [
            {"id": e.id, "tail": e.tail, "head": e.head, "w": fraction_text(w[e.id])}
            for e in sorted(g.edges, key=lambda e: e.id)
        ],
    }
    return json.dumps(data, sort_keys=True)


def to_tsplib(g: Digraph, w: Mapping[int, Fraction], name: str = "instance") -> str:
    """Full-matrix ATSP text; missing edges get a large sentinel weight."""
    big = 10 ** 9
    matrix = [[0 if u == v else big for v in range(g.n)] for u in range(g.n)]
    for e in g.edges:
        value = Fraction(w[e.id])
        if value.denominator != 1:
            raise ValueError("TSPLIB output needs integer weights")
        if e.tail != e.head:
            matrix[e.tail][e.head] = min(matrix[e.tail][e.head], int(value))
    lines = [
        f"NAME: {name}",
        "TYPE: ATSP",
        f"DIMENSION: {g.n}",
        "EDGE_WEIGHT_TYPE: EXPLICIT",
        "EDGE_WEIGHT_FORMAT: FULL_MATRIX",
        "EDGE_WEIGHT_SECTION",
    ]
    lines += [" ".join(str(c) for c in row) for row in matrix]
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def write_text(path_or_stream, text: str) -> None:
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        Path(path_or_stream).write_text(text)


__all__ = ["ParseError", "parse_instance", "parse_tsplib", "parse_json", "to_json", "to_tsplib", "IO"]
