"""MATPOWER-style case files: parsing, validation and result tables.

Only the power-flow subset is understood (``baseMVA``, ``bus``, ``gen``,
``branch``). Other ``mpc.*`` assignments are skipped with a warning.
Quantities are converted to per unit and radians at the boundary.
"""
from __future__ import annotations

import enum
import io
import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

__all__ = [
    "BusKind",
    "Bus",
    "Branch",
    "Generator",
    "NetworkCase",
    "BusSolution",
    "CaseFormatError",
    "CaseValidationError",
    "parse_case",
    "load_case",
    "bundled_case",
    "bundled_case_names",
    "format_case",
    "write_solution",
]

CASE_DIR = Path(__file__).parent / "cases"


class CaseFormatError(ValueError):
    """Syntax error in case text, with 1-based line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class CaseValidationError(ValueError):
    """Case text parsed but describes an invalid network."""


class BusKind(enum.Enum):
    PQ = 1
    PV = 2
    SLACK = 3


@dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    p_load: float = 0.0
    q_load: float = 0.0
    g_shunt: float = 0.0
    b_shunt: float = 0.0
    v_mag_init: float = 1.0
    v_ang_init: float = 0.0
    v_base: float = 0.0


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_charging: float = 0.0
    tap_ratio: float = 1.0
    phase_shift: float = 0.0
    in_service: bool = True


@dataclass(frozen=True)
class Generator:
    bus: int
    p_gen: float
    q_gen: float
    v_set: float
    in_service: bool = True


@dataclass(frozen=True)
class NetworkCase:
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    name: str = ""

    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def slack(self) -> Bus:
        return next(b for b in self.buses if b.kind is BusKind.SLACK)

    def active_branches(self) -> list[Branch]:
        return [br for br in self.branches if br.in_service]

    def active_generators(self) -> list[Generator]:
        return [g for g in self.generators if g.in_service]


@dataclass(frozen=True)
class BusSolution:
    """Solved quantities at one bus (per unit, radians)."""

    bus_id: int
    v_mag: float
    v_ang: float
    p_inj: float
    q_inj: float


# --------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<cont>\.\.\.[^\n]*\n)
  | (?P<nl>\n)
  | (?P<num>[+-]?(?:(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|Inf\b|inf\b|NaN\b|nan\b))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<str>'(?:[^'\n]|'')*')
  | (?P<op>[=;,\[\]{}()])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _strip_comments(text: str) -> str:
    # blank out `%` comments while preserving columns; quotes protect `%`
    out = []
    for line in text.split("\n"):
        in_str = False
        cut = len(line)
        for i, ch in enumerate(line):
            if ch == "'":
                in_str = not in_str
            elif ch == "%" and not in_str:
                cut = i
                break
        out.append(line[:cut] + " " * (len(line) - cut))
    return "\n".join(out)


def _tokenize(text: str) -> list[_Tok]:
    src = _strip_comments(text)
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise CaseFormatError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl" or kind == "cont":
            if kind == "nl":
                toks.append(_Tok("nl", "\n", line, pos - line_start + 1))
            line += 1
            line_start = m.end()
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


def _to_float(text: str) -> float:
    t = text.lower()
    if t.lstrip("+-") == "inf":
        return -math.inf if t.startswith("-") else math.inf
    return float(text)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise CaseFormatError(msg, tok.line, tok.col)

    def skip_newlines(self):
        while self.peek().kind == "nl" or self.peek().text in (";", ","):
            self.next()

    def assignments(self) -> dict[str, tuple[object, _Tok]]:
        fields: dict[str, tuple[object, _Tok]] = {}
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok.kind == "eof":
                return fields
            if tok.kind != "ident":
                self.error(f"expected assignment, found {tok.text!r}")
            if tok.text == "function":
                while self.peek().kind not in ("nl", "eof"):
                    self.next()
                continue
            if tok.text in ("end", "return"):
                self.next()
                continue
            name = self.next()
            eq = self.next()
            if eq.text != "=":
                self.error("expected '='", eq)
            value = self.value()
            end = self.peek()
            if end.kind not in ("nl", "eof") and end.text != ";":
                self.error(f"expected ';' or end of line, found {end.text!r}", end)
            fields[name.text] = (value, name)

    def value(self):
        tok = self.peek()
        if tok.kind == "num":
            return _to_float(self.next().text)
        if tok.kind == "str":
            return self.next().text[1:-1].replace("''", "'")
        if tok.text == "[":
            return self.matrix()
        if tok.text == "{":
            return self.cell()
        self.error(f"unsupported value {tok.text!r}")

    def matrix(self) -> list[list[float]]:
        open_tok = self.next()
        rows: list[list[float]] = []
        row: list[float] = []
        row_tok = open_tok

        def close_row():
            if rows and len(row) != len(rows[0]):
                self.error(f"row has {len(row)} columns, expected {len(rows[0])}", row_tok)
            rows.append(row)

        while True:
            tok = self.next()
            if tok.kind == "eof":
                self.error("unterminated matrix", open_tok)
            if tok.text == "]":
                break
            if tok.kind == "nl" or tok.text == ";":
                if row:
                    close_row()
                    row = []
            elif tok.text == ",":
                continue
            elif tok.kind == "num":
                if not row:
                    row_tok = tok
                row.append(_to_float(tok.text))
            else:
                self.error(f"unexpected token {tok.text!r} in matrix", tok)
        if row:
            close_row()
        return rows

    def cell(self) -> list:
        open_tok = self.next()
        depth = 1
        items = []
        while depth:
            tok = self.next()
            if tok.kind == "eof":
                self.error("unterminated cell array", open_tok)
            if tok.text == "{":
                depth += 1
            elif tok.text == "}":
                depth -= 1
            elif tok.kind in ("str", "num"):
                items.append(tok.text)
        return items


# --------------------------------------------------------------------------
# parse + validate

_MIN_COLS = {"bus": 9, "gen": 8, "branch": 11}


def parse_case(text: str | IO[str], name: str = "") -> NetworkCase:
    """Parse MATPOWER case text into a validated :class:`NetworkCase`."""
    if not isinstance(text, str):
        text = text.read()
    fields = _Parser(text).assignments()

    def table(key: str) -> list[list[float]]:
        full = f"mpc.{key}"
        if full not in fields:
            raise CaseValidationError(f"missing {full}")
        rows, tok = fields[full]
        if not isinstance(rows, list) or (rows and not isinstance(rows[0], list)):
            raise CaseFormatError(f"{full} must be a matrix", tok.line, tok.col)
        if rows and len(rows[0]) < _MIN_COLS[key]:
            raise CaseFormatError(
                f"{full} needs at least {_MIN_COLS[key]} columns, got {len(rows[0])}", tok.line, tok.col
            )
        return rows

    for key in fields:
        short = key.removeprefix("mpc.")
        if key.startswith("mpc.") and short not in ("baseMVA", "bus", "gen", "branch", "version"):
            warnings.warn(f"ignoring unsupported case field {key}", stacklevel=2)

    if "mpc.baseMVA" not in fields:
        raise CaseValidationError("missing mpc.baseMVA")
    base = fields["mpc.baseMVA"][0]
    if not isinstance(base, float) or not base > 0 or not math.isfinite(base):
        raise CaseValidationError(f"baseMVA must be a positive number, got {base!r}")

    deg = math.pi / 180.0
    buses = []
    for row in table("bus"):
        code = int(row[1])
        if code not in (1, 2, 3):
            raise CaseValidationError(f"bus {int(row[0])}: unsupported bus type {code}")
        buses.append(
            Bus(
                id=int(row[0]),
                kind=BusKind(code),
                p_load=row[2] / base,
                q_load=row[3] / base,
                g_shunt=row[4] / base,
                b_shunt=row[5] / base,
                v_mag_init=row[7],
                v_ang_init=row[8] * deg,
                v_base=row[9] if len(row) > 9 else 0.0,
            )
        )
    gens = [
        Generator(
            bus=int(row[0]),
            p_gen=row[1] / base,
            q_gen=row[2] / base,
            v_set=row[5],
            in_service=row[7] > 0,
        )
        for row in table("gen")
    ]
    branches = []
    for row in table("branch"):
        tap = row[8]
        branches.append(
            Branch(
                from_bus=int(row[0]),
                to_bus=int(row[1]),
                r=row[2],
                x=row[3],
                b_charging=row[4],
                tap_ratio=1.0 if tap == 0 else tap,
                phase_shift=row[9] * deg,
                in_service=row[10] > 0,
            )
        )
    case = NetworkCase(base, tuple(buses), tuple(branches), tuple(gens), name)
    validate_case(case)
    return case


def validate_case(case: NetworkCase) -> None:
    ids: set[int] = set()
    for bus in case.buses:
        if bus.id <= 0:
            raise CaseValidationError(f"bus id must be positive, got {bus.id}")
        if bus.id in ids:
            raise CaseValidationError(f"duplicate bus id {bus.id}")
        ids.add(bus.id)
        if not bus.v_mag_init > 0:
            raise CaseValidationError(f"bus {bus.id}: initial voltage magnitude must be > 0")
    n_slack = sum(b.kind is BusKind.SLACK for b in case.buses)
    if n_slack == 0:
        raise CaseValidationError("missing slack bus")
    if n_slack > 1:
        raise CaseValidationError(f"expected exactly one slack bus, found {n_slack}")
    for k, br in enumerate(case.branches):
        for end in (br.from_bus, br.to_bus):
            if end not in ids:
                raise CaseValidationError(f"branch {k}: dangling reference to bus {end}")
        if br.from_bus == br.to_bus:
            raise CaseValidationError(f"branch {k}: from_bus equals to_bus ({br.from_bus})")
        if br.r == 0 and br.x == 0:
            raise CaseValidationError(f"branch {k}: zero series impedance")
        if not br.tap_ratio > 0:
            raise CaseValidationError(f"branch {k}: tap ratio must be > 0")
    vset: dict[int, float] = {}
    for g in case.generators:
        if g.bus not in ids:
            raise CaseValidationError(f"generator at unknown bus {g.bus}")
        if not g.in_service:
            continue
        if g.bus in vset and abs(vset[g.bus] - g.v_set) > 1e-6:
            raise CaseValidationError(f"bus {g.bus}: generator voltage setpoints disagree")
        vset.setdefault(g.bus, g.v_set)
    for bus in case.buses:
        if bus.kind is BusKind.PV and bus.id not in vset:
            raise CaseValidationError(f"PV bus {bus.id} has no in-service generator")


def load_case(path: str | Path) -> NetworkCase:
    path = Path(path)
    return parse_case(path.read_text(encoding="utf-8"), name=path.stem)


def bundled_case_names() -> list[str]:
    return sorted(p.stem for p in CASE_DIR.glob("*.m"))


def bundled_case(name: str) -> NetworkCase:
    """Load one of the shipped IEEE cases, e.g. ``bundled_case("case14")``."""
    path = CASE_DIR / f"{name}.m"
    if not path.exists():
        raise FileNotFoundError(f"no bundled case {name!r}; have {bundled_case_names()}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return load_case(path)


# --------------------------------------------------------------------------
# writers


def _num(v: float) -> str:
    return repr(float(v))


def format_case(case: NetworkCase) -> str:
    """Serialize a case back to MATPOWER text (full float precision)."""
    base = case.base_mva
    deg = 180.0 / math.pi
    lines = [f"function mpc = {case.name or 'case'}", f"mpc.baseMVA = {_num(base)};", "mpc.bus = ["]
    for b in case.buses:
        vals = [b.id, b.kind.value, b.p_load * base, b.q_load * base, b.g_shunt * base,
                b.b_shunt * base, 1, b.v_mag_init, b.v_ang_init * deg, b.v_base, 1, 1.1, 0.9]
        lines.append("\t" + "\t".join(_num(v) for v in vals) + ";")
    lines += ["];", "mpc.gen = ["]
    for g in case.generators:
        vals = [g.bus, g.p_gen * base, g.q_gen * base, 0, 0, g.v_set, base, int(g.in_service), 0, 0]
        lines.append("\t" + "\t".join(_num(v) for v in vals) + ";")
    lines += ["];", "mpc.branch = ["]
    for br in case.branches:
        vals = [br.from_bus, br.to_bus, br.r, br.x, br.b_charging, 0, 0, 0,
                br.tap_ratio, br.phase_shift * deg, int(br.in_service)]
        lines.append("\t" + "\t".join(_num(v) for v in vals) + ";")
    lines += ["];", ""]
    return "\n".join(lines)


SOLUTION_HEADER = "bus,v_pu,theta_deg,p_mw,q_mvar"


def write_solution(case: NetworkCase, solution: Sequence[BusSolution], sink: IO[str]) -> None:
    """Write one row per bus in case order, values at 6 significant digits."""
    by_id = {s.bus_id: s for s in solution}
    missing = [b.id for b in case.buses if b.id not in by_id]
    if missing:
        raise ValueError(f"solution incomplete: no entry for buses {missing[:10]}")
    out = io.StringIO()
    out.write(SOLUTION_HEADER + "\n")
    for bus in case.buses:
        s = by_id[bus.id]
        out.write(
            f"{bus.id},{s.v_mag:.6g},{math.degrees(s.v_ang):.6g},"
            f"{s.p_inj * case.base_mva:.6g},{s.q_inj * case.base_mva:.6g}\n"
        )
    sink.write(out.getvalue())
