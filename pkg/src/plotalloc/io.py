"""Instance and report files, LP model export, and CSV result rows.

Instance documents are JSON (hence also YAML) with rationals written as
quoted ``"p/q"`` strings.  Example::

    {
      "plots": {"count": 3, "edges": [[1, 2]]},
      "friends": [{"pair": [0, 1], "weights": ["1/2", "1/2"]}],
      "values": [
        ["1", "9/10", "0"],
        ["1", "0", "2/5"],
        ["1", "1/10", "0"]
      ]
    }

Parsing goes through the YAML composer so every diagnostic carries the line
number of the offending entry.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

import yaml

from .core import Allocation, FriendshipGraph, Instance, InstanceError, PlotGraph


class FormatError(InstanceError):
    """A malformed or invalid document; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# -- structured text helpers ------------------------------------------------------


def _compose(text: str):
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise FormatError(f"syntax error: {getattr(exc, 'problem', exc)}", mark.line + 1 if mark else None) from exc
    if node is None:
        raise FormatError("empty document", 1)
    return node


def _line(node) -> int:
    return node.start_mark.line + 1


def _mapping(node, what: str) -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise FormatError(f"{what} must be a mapping", _line(node))
    out = {}
    for k, v in node.value:
        if not isinstance(k, yaml.ScalarNode):
            raise FormatError(f"{what} has a non-scalar key", _line(k))
        if k.value in out:
            raise FormatError(f"{what} repeats key {k.value!r}", _line(k))
        out[k.value] = v
    return out


def _sequence(node, what: str) -> list:
    if not isinstance(node, yaml.SequenceNode):
        raise FormatError(f"{what} must be a list", _line(node))
    return list(node.value)


def _int(node, what: str) -> int:
    if not isinstance(node, yaml.ScalarNode) or not re.fullmatch(r"-?\d+", node.value.strip()):
        raise FormatError(f"{what} must be an integer", _line(node))
    return int(node.value)


def _rational(node, what: str) -> Fraction:
    if not isinstance(node, yaml.ScalarNode):
        raise FormatError(f"{what} must be a rational", _line(node))
    raw = node.value.strip()
    # unquoted decimals would have been floats to any other reader; insist on exact forms
    if node.style is None and not re.fullmatch(r"-?\d+", raw):
        raise FormatError(f"{what} {raw!r} must be an integer or a quoted \"p/q\" string", _line(node))
    if not re.fullmatch(r"-?\d+(/\d+)?", raw):
        raise FormatError(f"{what} {raw!r} is not of the form \"p/q\"", _line(node))
    try:
        return Fraction(raw)
    except ZeroDivisionError as exc:
        raise FormatError(f"{what} {raw!r} has a zero denominator", _line(node)) from exc


def _fmt(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# -- instances ---------------------------------------------------------------------


def parse_instance(text: str) -> Instance:
    """Parse and validate an instance document."""
    root = _mapping(_compose(text), "document")
    for key in root:
        if key not in ("plots", "friends", "values"):
            raise FormatError(f"unknown section {key!r}", _line(root[key]))
    for key in ("plots", "values"):
        if key not in root:
            raise FormatError(f"missing section {key!r}", 1)

    plots = _mapping(root["plots"], "plots")
    if "count" not in plots:
        raise FormatError("plots needs a 'count'", _line(root["plots"]))
    n = _int(plots["count"], "plots.count")
    if n < 0:
        raise FormatError("plots.count must be non-negative", _line(plots["count"]))
    edges = []
    seen = set()
    for e in _sequence(plots.get("edges", yaml.SequenceNode("tag:yaml.org,2002:seq", [])), "plots.edges"):
        ends = _sequence(e, "edge")
        if len(ends) != 2:
            raise FormatError("an edge joins exactly two plots", _line(e))
        a, b = (_int(x, "edge endpoint") for x in ends)
        if not (0 <= a < n and 0 <= b < n):
            raise FormatError(f"edge ({a}, {b}) names a plot outside [0, {n})", _line(e))
        if a == b:
            raise FormatError(f"self-loop at plot {a}", _line(e))
        key = (min(a, b), max(a, b))
        if key in seen:
            raise FormatError(f"duplicate edge {key}", _line(e))
        seen.add(key)
        edges.append(key)

    values_node = root["values"]
    rows = []
    for i, row in enumerate(_sequence(values_node, "values")):
        cells = _sequence(row, f"values row {i}")
        if len(cells) != n:
            raise FormatError(f"values row {i} has {len(cells)} entries, expected {n}", _line(row))
        parsed = []
        for v, cell in enumerate(cells):
            x = _rational(cell, f"u[{i}][{v}]")
            if not 0 <= x <= 1:
                raise FormatError(f"u[{i}][{v}] = {x} outside [0, 1]", _line(cell))
            parsed.append(x)
        rows.append(parsed)
    if len(rows) != n:
        raise FormatError(f"{len(rows)} value rows for {n} plots", _line(values_node))

    weights = {}
    partner: dict = {}
    friends_node = root.get("friends")
    for entry in _sequence(friends_node, "friends") if friends_node is not None else []:
        m = _mapping(entry, "friend entry")
        if set(m) != {"pair", "weights"}:
            raise FormatError("a friend entry has exactly 'pair' and 'weights'", _line(entry))
        pair = _sequence(m["pair"], "pair")
        ws = _sequence(m["weights"], "weights")
        if len(pair) != 2 or len(ws) != 2:
            raise FormatError("'pair' and 'weights' must both have two entries", _line(entry))
        i, j = (_int(x, "agent") for x in pair)
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise FormatError(f"invalid friend pair ({i}, {j})", _line(entry))
        for a in (i, j):
            if a in partner:
                raise FormatError(
                    f"agent {a} already has friend {partner[a]}; friendships must have maximum degree 1",
                    _line(entry),
                )
        partner[i], partner[j] = j, i
        wij, wji = (_rational(w, "weight") for w in ws)
        for w, node in ((wij, ws[0]), (wji, ws[1])):
            if w < 0:
                raise FormatError(f"negative friendship weight {w}", _line(node))
        weights[(i, j)], weights[(j, i)] = wij, wji

    try:
        return Instance(PlotGraph(n, frozenset(edges)), FriendshipGraph(weights), tuple(map(tuple, rows)))
    except InstanceError as exc:
        raise FormatError(str(exc), 1) from exc


def render_instance(inst: Instance) -> str:
    """Canonical document for ``inst``; ``parse_instance`` inverts it exactly."""
    lines = ["{", f'  "plots": {{"count": {inst.n}, "edges": {json.dumps([list(e) for e in inst.plots.sorted_edges()])}}},']
    fr = inst.friendships
    entries = [
        f'    {{"pair": [{i}, {j}], "weights": ["{_fmt(fr.phi(i, j))}", "{_fmt(fr.phi(j, i))}"]}}'
        for i, j in fr.pairs
    ]
    if entries:
        lines.append('  "friends": [')
        lines.append(",\n".join(entries))
        lines.append("  ],")
    else:
        lines.append('  "friends": [],')
    lines.append('  "values": [')
    rows = ["    [" + ", ".join(f'"{_fmt(x)}"' for x in row) + "]" for row in inst.values]
    lines.append(",\n".join(rows))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_reports(text: str, n: int) -> tuple:
    """Friendship reports: a list with one entry (agent index or null) per agent,
    optionally wrapped as ``{"reports": [...]}``."""
    node = _compose(text)
    if isinstance(node, yaml.MappingNode):
        m = _mapping(node, "reports document")
        if set(m) != {"reports"}:
            raise FormatError("expected a single 'reports' key", _line(node))
        node = m["reports"]
    items = _sequence(node, "reports")
    if len(items) != n:
        raise FormatError(f"{len(items)} reports for {n} agents", _line(node))
    out = []
    for i, item in enumerate(items):
        if isinstance(item, yaml.ScalarNode) and item.value in ("null", "~", "") and item.style is None:
            out.append(None)
            continue
        r = _int(item, f"report of agent {i}")
        if not 0 <= r < n or r == i:
            raise FormatError(f"agent {i} reports invalid friend {r}", _line(item))
        out.append(r)
    return tuple(out)


def render_reports(reports: Sequence) -> str:
    return json.dumps({"reports": list(reports)}) + "\n"


# -- files ---------------------------------------------------------------------------


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- LP model export -------------------------------------------------------------------


@dataclass
class LpModel:
    """The subset of the LP file format we emit: one objective, linear rows, binaries."""

    sense: str  # "Maximize" or "Minimize"
    objective: dict  # variable -> coefficient
    constraints: list  # (name, {variable: coefficient}, op, rhs)
    binaries: list
    comments: list = field(default_factory=list)
    objective_name: str = "obj"

    def evaluate(self, point: dict) -> Fraction:
        return sum((Fraction(c) * point.get(v, 0) for v, c in self.objective.items()), Fraction(0))

    def feasible(self, point: dict) -> bool:
        for v in self.binaries:
            if point.get(v, 0) not in (0, 1):
                return False
        for _, row, op, rhs in self.constraints:
            lhs = sum((Fraction(c) * point.get(v, 0) for v, c in row.items()), Fraction(0))
            if op == "<=" and lhs > rhs or op == ">=" and lhs < rhs or op == "=" and lhs != rhs:
                return False
        return True


def _expr(terms: dict) -> str:
    parts = []
    for k, (v, c) in enumerate(terms.items()):
        c = Fraction(c)
        mag = _fmt(abs(c))
        if k == 0:
            parts.append(f"{'-' if c < 0 else ''}{mag} {v}")
        else:
            parts.append(f"{'-' if c < 0 else '+'} {mag} {v}")
    return " ".join(parts) if parts else "0"


def render_lp(model: LpModel) -> str:
    out = [f"\\ {c}" for c in model.comments]
    out.append(model.sense)
    out.append(f" {model.objective_name}: {_expr(model.objective)}")
    out.append("Subject To")
    for name, row, op, rhs in model.constraints:
        out.append(f" {name}: {_expr(row)} {op} {_fmt(rhs)}")
    out.append("Binary")
    for k in range(0, len(model.binaries), 8):
        out.append(" " + " ".join(model.binaries[k : k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


_TERM = re.compile(r"([+-])?\s*(\d+(?:/\d+)?)?\s*([A-Za-z_][A-Za-z0-9_]*)")
_ROW = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*?)\s*(<=|>=|=)\s*(-?\d+(?:/\d+)?)\s*$")


def _parse_expr(text: str, line: int) -> dict:
    text = text.strip()
    terms: dict = {}
    if text == "0":
        return terms
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise FormatError(f"cannot parse linear expression near {text[pos:]!r}", line)
        if m.group(1) is None and pos > 0:
            raise FormatError("missing sign between terms", line)
        c = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        if m.group(1) == "-":
            c = -c
        var = m.group(3)
        if var in terms:
            raise FormatError(f"variable {var} repeated in one expression", line)
        terms[var] = c
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return terms


def parse_lp(text: str) -> LpModel:
    """Parse the LP subset produced by :func:`render_lp`."""
    comments, constraints, binaries = [], [], []
    sense = None
    objective: Optional[dict] = None
    obj_name = "obj"
    section = None
    ended = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line:
            continue
        if ended:
            raise FormatError("content after End", lineno)
        if line.startswith("\\"):
            comments.append(line[1:].strip())
            continue
        head = line.strip()
        if head in ("Maximize", "Minimize"):
            if sense is not None:
                raise FormatError("second objective section", lineno)
            sense, section = head, "objective"
            continue
        if head == "Subject To":
            section = "rows"
            continue
        if head == "Binary":
            section = "binary"
            continue
        if head == "End":
            ended = True
            continue
        if section == "objective":
            name, sep, expr = head.partition(":")
            if not sep or objective is not None:
                raise FormatError("objective must be a single named row", lineno)
            obj_name = name.strip()
            objective = _parse_expr(expr, lineno)
        elif section == "rows":
            m = _ROW.match(head)
            if not m:
                raise FormatError(f"cannot parse constraint {head!r}", lineno)
            constraints.append((m.group(1), _parse_expr(m.group(2), lineno), m.group(3), Fraction(m.group(4))))
        elif section == "binary":
            binaries.extend(head.split())
        else:
            raise FormatError(f"unexpected line {head!r}", lineno)
    if sense is None or objective is None:
        raise FormatError("no objective", None)
    if not ended:
        raise FormatError("missing End", None)
    known = set(binaries)
    for _, row, _, _ in constraints:
        for v in row:
            if v not in known:
                raise FormatError(f"variable {v} is not declared binary", None)
    return LpModel(sense, objective, constraints, binaries, comments, obj_name)


def _a(i: int, v: int) -> str:
    return f"a_{i}_{v}"


def _y(i: int, v: int, j: int, w: int) -> str:
    return f"y_{i}_{v}_{j}_{w}"


def mip_model(inst: Instance) -> LpModel:
    """Welfare-maximization MIP with the friendship product linearized.

    ``y_i_v_j_w`` stands for "agent i on plot v and agent j on plot w" for
    each friend pair ``i < j`` and each orientation of each plot edge.
    Coefficients are multiplied by the common denominator ``D`` so they are
    integers; the optimum divided by ``D`` is the maximum social welfare.
    """
    sc = inst.scaled
    n = inst.n
    objective: dict = {}
    for i in range(n):
        for v in range(n):
            objective[_a(i, v)] = sc.values[i][v]
    constraints = []
    for i in range(n):
        constraints.append((f"agent_{i}", {_a(i, v): 1 for v in range(n)}, "=", Fraction(1)))
    for v in range(n):
        constraints.append((f"plot_{v}", {_a(i, v): 1 for i in range(n)}, "=", Fraction(1)))
    ys = []
    for i, j in inst.friendships.pairs:
        bonus = sc.phi[(i, j)] + sc.phi[(j, i)]
        for a, b in inst.plots.sorted_edges():
            for v, w in ((a, b), (b, a)):
                y = _y(i, v, j, w)
                ys.append(y)
                objective[y] = bonus
                constraints.append((f"{y}_le_i", {y: 1, _a(i, v): -1}, "<=", Fraction(0)))
                constraints.append((f"{y}_le_j", {y: 1, _a(j, w): -1}, "<=", Fraction(0)))
                constraints.append((f"{y}_ge", {y: 1, _a(i, v): -1, _a(j, w): -1}, ">=", Fraction(-1)))
    binaries = [_a(i, v) for i in range(n) for v in range(n)] + ys
    comments = [
        f"plotalloc welfare model: {n} agents, {len(inst.friendships.pairs)} friend pairs",
        f"coefficients scaled by D = {sc.denom}; social welfare = objective / D",
    ]
    return LpModel("Maximize", objective, constraints, binaries, comments)


def export_mip(inst: Instance) -> str:
    return render_lp(mip_model(inst))


def mip_point(inst: Instance, alloc: Allocation) -> dict:
    """The 0/1 point of the exported model that encodes ``alloc``."""
    point = {_a(i, v): int(alloc[i] == v) for i in range(inst.n) for v in range(inst.n)}
    for i, j in inst.friendships.pairs:
        for a, b in inst.plots.sorted_edges():
            for v, w in ((a, b), (b, a)):
                point[_y(i, v, j, w)] = int(alloc[i] == v and alloc[j] == w)
    return point


def mip_scale(model: LpModel) -> int:
    for c in model.comments:
        m = re.search(r"scaled by D = (\d+)", c)
        if m:
            return int(m.group(1))
    return 1


# -- result rows -------------------------------------------------------------------------

CSV_HEADER = ("instance", "mechanism", "seed", "expected_sw", "opt", "ratio", "wall_ms")


@dataclass(frozen=True)
class ResultRow:
    instance: str
    mechanism: str
    seed: Union[int, str]  # an integer seed or "exact"
    expected_sw: Fraction
    opt: Optional[Fraction]
    wall_ms: Optional[int] = None

    @property
    def ratio(self) -> Optional[Fraction]:
        if self.opt is None or self.opt == 0:
            return None
        return Fraction(self.expected_sw) / self.opt

    def cells(self) -> list:
        def q(x):
            return "" if x is None else _fmt(Fraction(x))

        return [
            self.instance,
            self.mechanism,
            str(self.seed),
            q(self.expected_sw),
            q(self.opt),
            q(self.ratio),
            "" if self.wall_ms is None else str(self.wall_ms),
        ]


def rows_to_csv(rows: Sequence[ResultRow], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def append_rows(path: Union[str, Path], rows: Sequence[ResultRow]) -> None:
    """Append rows to a results file (creating it with the header), atomically."""
    path = Path(path)
    existing = ""
    if path.exists():
        existing = path.read_text(encoding="utf-8")
        first = existing.splitlines()[0] if existing else ""
        if existing and tuple(first.split(",")) != CSV_HEADER:
            raise FormatError(f"{path} does not start with the expected header", 1)
        if existing and not existing.endswith("\n"):
            existing += "\n"
    body = rows_to_csv(rows, header=not existing)
    atomic_write_text(path, existing + body)


def parse_rows(text: str) -> list:
    reader = csv.reader(io.StringIO(text))
    head = next(reader, None)
    if tuple(head or ()) != CSV_HEADER:
        raise FormatError("missing or unexpected header", 1)
    out = []
    for cells in reader:
        seed = cells[2] if cells[2] == "exact" else int(cells[2])
        out.append(
            ResultRow(
                cells[0],
                cells[1],
                seed,
                Fraction(cells[3]),
                Fraction(cells[4]) if cells[4] else None,
                int(cells[6]) if cells[6] else None,
            )
        )
    return out


__all__ = [
    "CSV_HEADER",
    "FormatError",
    "LpModel",
    "ResultRow",
    "append_rows",
    "atomic_write_text",
    "export_mip",
    "mip_model",
    "mip_point",
    "mip_scale",
    "parse_instance",
    "parse_lp",
    "parse_reports",
    "parse_rows",
    "render_instance",
    "render_lp",
    "render_reports",
    "rows_to_csv",
]
