"""Free-format MPS export/import and name/value solution files."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from scipy import sparse

from ..problem import MilpProblem

OBJ_ROW = "OBJ"
_BAD = re.compile(r"[^A-Za-z0-9_.\-\[\]()+,:]")


class MpsParseError(ValueError):
    pass


def mps_name(name: str) -> str:
    """Whitespace-free token usable as an MPS row/column name."""
    s = _BAD.sub("_", str(name))
    return s or "_"


def _fmt(v: float) -> str:
    return repr(float(v))


def _unique(names):
    seen: dict[str, int] = {}
    out = []
    for n in names:
        base = mps_name(n)
        if base in seen:
            seen[base] += 1
            base = f"{base}#{seen[base]}"
        else:
            seen[base] = 0
        out.append(base)
    return out


def write_mps(problem: MilpProblem, path) -> None:
    Path(path).write_text(to_mps(problem))


def to_mps(problem: MilpProblem) -> str:
    rows = _unique(problem.row_names)
    cols = _unique(problem.col_names)
    sense = problem.sense
    lines = [f"NAME {mps_name(problem.name)}", "ROWS", f" N  {OBJ_ROW}"]
    mps_sense = {"E": "E", "L": "L", "G": "G", "R": "G", "N": "N"}
    for r, s in zip(rows, sense):
        lines.append(f" {mps_sense[s]}  {r}")

    lines.append("COLUMNS")
    A = problem.A.tocsc()
    in_int = False
    for j, name in enumerate(cols):
        is_int = bool(problem.integer[j])
        if is_int != in_int:
            lines.append("    MARKER  'MARKER'  " + ("'INTORG'" if is_int else "'INTEND'"))
            in_int = is_int
        entries = []
        if problem.c[j] != 0:
            entries.append((OBJ_ROW, problem.c[j]))
        p0, p1 = A.indptr[j], A.indptr[j + 1]
        for i, v in zip(A.indices[p0:p1], A.data[p0:p1]):
            if v != 0:
                entries.append((rows[i], v))
        if not entries:
            # keep the column declared even when it appears nowhere
            entries.append((OBJ_ROW, 0.0))
        for rn, v in entries:
            lines.append(f"    {name}  {rn}  {_fmt(v)}")
    if in_int:
        lines.append("    MARKER  'MARKER'  'INTEND'")

    lines.append("RHS")
    if problem.objective_offset != 0:
        lines.append(f"    RHS  {OBJ_ROW}  {_fmt(-problem.objective_offset)}")
    ranges = []
    for i, (r, s) in enumerate(zip(rows, sense)):
        lo, hi = problem.row_lo[i], problem.row_hi[i]
        if s in ("E", "G", "R"):
            rhs = lo
        elif s == "L":
            rhs = hi
        else:
            continue
        if rhs != 0:
            lines.append(f"    RHS  {r}  {_fmt(rhs)}")
        if s == "R":
            ranges.append((r, hi - lo))
    if ranges:
        lines.append("RANGES")
        for r, v in ranges:
            lines.append(f"    RNG  {r}  {_fmt(v)}")

    lines.append("BOUNDS")
    for j, name in enumerate(cols):
        lo, hi = problem.col_lo[j], problem.col_hi[j]
        if lo == hi:
            lines.append(f" FX BND  {name}  {_fmt(lo)}")
            continue
        if np.isinf(lo) and np.isinf(hi):
            lines.append(f" FR BND  {name}")
            continue
        if np.isinf(lo):
            lines.append(f" MI BND  {name}")
        else:
            lines.append(f" LO BND  {name}  {_fmt(lo)}")
        if np.isinf(hi):
            lines.append(f" PL BND  {name}")
        else:
            lines.append(f" UP BND  {name}  {_fmt(hi)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def read_mps(path) -> MilpProblem:
    return parse_mps(Path(path).read_text(), source=str(path))


def parse_mps(text: str, source: str = "<mps>") -> MilpProblem:
    """Parse free-format MPS (the subset written by :func:`to_mps` plus common bound types)."""
    name = "problem"
    section = None
    obj_row = None
    maximize = False
    row_names: list[str] = []
    row_sense: list[str] = []
    row_pos: dict[str, int] = {}
    col_names: list[str] = []
    col_pos: dict[str, int] = {}
    col_int: list[bool] = []
    trip_r: list[int] = []
    trip_c: list[int] = []
    trip_v: list[float] = []
    obj: dict[int, float] = {}
    rhs: dict[int, float] = {}
    rng: dict[int, float] = {}
    lo: dict[int, float] = {}
    hi: dict[int, float] = {}
    offset = 0.0
    in_int = False

    def fail(lineno, msg):
        raise MpsParseError(f"{source}:{lineno}: {msg}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        tok = raw.split()
        if not raw[0].isspace():
            head = tok[0].upper()
            if head == "NAME":
                name = tok[1] if len(tok) > 1 else name
                section = None
            elif head in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "OBJSENSE"):
                section = head
                if head == "OBJSENSE" and len(tok) > 1:
                    maximize = tok[1].upper() in ("MAX", "MAXIMIZE")
            elif head == "ENDATA":
                break
            else:
                fail(lineno, f"unknown section {tok[0]!r}")
            continue
        try:
            if section == "OBJSENSE":
                maximize = tok[0].upper() in ("MAX", "MAXIMIZE")
            elif section == "ROWS":
                s, rn = tok[0].upper(), tok[1]
                if s not in ("N", "E", "L", "G"):
                    fail(lineno, f"bad row type {s}")
                if s == "N" and obj_row is None:
                    obj_row = rn
                    continue
                row_pos[rn] = len(row_names)
                row_names.append(rn)
                row_sense.append(s)
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1].strip("'\"").upper() == "MARKER":
                    kind = tok[2].strip("'\"").upper()
                    in_int = kind == "INTORG"
                    continue
                cn = tok[0]
                if cn not in col_pos:
                    col_pos[cn] = len(col_names)
                    col_names.append(cn)
                    col_int.append(in_int)
                j = col_pos[cn]
                pairs = tok[1:]
                if len(pairs) % 2:
                    fail(lineno, "odd number of fields in COLUMNS entry")
                for rn, v in zip(pairs[::2], pairs[1::2]):
                    if rn == obj_row:
                        obj[j] = obj.get(j, 0.0) + float(v)
                    elif rn in row_pos:
                        trip_r.append(row_pos[rn])
                        trip_c.append(j)
                        trip_v.append(float(v))
                    else:
                        fail(lineno, f"unknown row {rn!r}")
            elif section in ("RHS", "RANGES"):
                pairs = tok[1:] if len(tok) % 2 == 1 else tok
                for rn, v in zip(pairs[::2], pairs[1::2]):
                    if rn == obj_row:
                        if section == "RHS":
                            offset = -float(v)
                        continue
                    if rn not in row_pos:
                        fail(lineno, f"unknown row {rn!r}")
                    (rhs if section == "RHS" else rng)[row_pos[rn]] = float(v)
            elif section == "BOUNDS":
                bt = tok[0].upper()
                cn = tok[2] if len(tok) >= 3 else tok[1]
                if cn not in col_pos:
                    fail(lineno, f"unknown column {cn!r}")
                j = col_pos[cn]
                val = float(tok[3]) if len(tok) >= 4 else None
                if bt in ("UP", "UI"):
                    hi[j] = val
                    if val < 0 and j not in lo:
                        lo[j] = -np.inf
                elif bt in ("LO", "LI"):
                    lo[j] = val
                elif bt == "FX":
                    lo[j] = hi[j] = val
                elif bt == "FR":
                    lo[j], hi[j] = -np.inf, np.inf
                elif bt == "MI":
                    lo[j] = -np.inf
                elif bt == "PL":
                    hi[j] = np.inf
                elif bt == "BV":
                    lo[j], hi[j] = 0.0, 1.0
                    col_int[j] = True
                else:
                    fail(lineno, f"unsupported bound type {bt}")
                if bt in ("UI", "LI"):
                    col_int[j] = True
            else:
                fail(lineno, "data line outside a section")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, MpsParseError):
                raise
            fail(lineno, f"malformed line: {raw.strip()!r}")

    m, n = len(row_names), len(col_names)
    A = sparse.csr_matrix((trip_v, (trip_r, trip_c)), shape=(m, n))
    row_lo = np.empty(m)
    row_hi = np.empty(m)
    for i, s in enumerate(row_sense):
        b = rhs.get(i, 0.0)
        r = rng.get(i)
        if s == "E":
            if r is None:
                row_lo[i] = row_hi[i] = b
            elif r >= 0:
                row_lo[i], row_hi[i] = b, b + r
            else:
                row_lo[i], row_hi[i] = b + r, b
        elif s == "L":
            row_lo[i], row_hi[i] = (-np.inf if r is None else b - abs(r)), b
        elif s == "G":
            row_lo[i], row_hi[i] = b, (np.inf if r is None else b + abs(r))
        else:
            row_lo[i], row_hi[i] = -np.inf, np.inf
    c = np.zeros(n)
    for j, v in obj.items():
        c[j] = v
    if maximize:
        c = -c
        offset = -offset
    col_lo = np.array([lo.get(j, 0.0) for j in range(n)])
    col_hi = np.array([hi.get(j, np.inf) for j in range(n)])
    return MilpProblem(
        c=c,
        A=A,
        row_lo=row_lo,
        row_hi=row_hi,
        col_lo=col_lo,
        col_hi=col_hi,
        integer=np.array(col_int, dtype=bool),
        row_names=tuple(row_names),
        col_names=tuple(col_names),
        row_family=np.array(["imported"] * m, dtype=object),
        col_family=np.array(["imported"] * n, dtype=object),
        objective_offset=offset,
        name=name,
    )


def write_solution(path, names, values, header: dict | None = None) -> None:
    out = []
    for k, v in (header or {}).items():
        out.append(f"# {k} {v}")
    out.extend(f"{n} {repr(float(v))}" for n, v in zip(names, values))
    Path(path).write_text("\n".join(out) + "\n")


def read_solution(path, col_names=None) -> tuple[np.ndarray | None, dict]:
    """Read ``name value`` pairs; ``# key value`` lines become header entries.

    With ``col_names`` the values are returned aligned to that order (names
    pass through :func:`mps_name`); a missing name is a parse error.
    """
    header: dict[str, str] = {}
    values: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        s = raw.strip()
        if not s:
            continue
        if s.startswith("#"):
            parts = s[1:].split(None, 1)
            if parts:
                header[parts[0]] = parts[1].strip() if len(parts) > 1 else ""
            continue
        parts = s.split()
        if len(parts) != 2:
            raise MpsParseError(f"{path}:{lineno}: expected 'name value', got {s!r}")
        try:
            values[parts[0]] = float(parts[1])
        except ValueError as exc:
            raise MpsParseError(f"{path}:{lineno}: bad value {parts[1]!r}") from exc
    if col_names is None:
        return (np.array(list(values.values())) if values else None), header | {"_names": list(values)}
    if not values:
        return None, header
    names = _unique(col_names)
    missing = [n for n in names if n not in values]
    if missing:
        raise MpsParseError(f"{path}: {len(missing)} columns missing from solution (first: {missing[0]})")
    return np.array([values[n] for n in names]), header
