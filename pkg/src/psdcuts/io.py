"""Instance serialization.

Line-oriented UTF-8 text, 1-based indices, ``#`` starts a comment.
Sections in order:

    QCQP <n> <m> <p>
    BOUNDS X            n lines  "i lo hi"
    BOUNDS Y            m lines  "j lo hi"      (present iff m > 0)
    OBJ Q               lines    "i j q"        (i <= j, symmetric pair)
    OBJ A               lines    "i a"
    OBJ B               lines    "j b"
    CON <k> <c_k>       then prefixed lines "Q i j v" / "A i v" / "B j v"

An upper-triangle entry (i, j, q) sets Q[i][j] = Q[j][i] = q; the
quadratic form is x'Qx, so an off-diagonal entry contributes 2q x_i x_j.
Numbers are written with ``repr`` (shortest round-tripping form), which
makes parse/serialize an exact round trip.
"""

from __future__ import annotations

import numpy as np

from .model import ExtendedModel, QcqpProblem


class InstanceFormatError(ValueError):
    pass


def _fail(ln: int, msg: str):
    raise InstanceFormatError(f"line {ln}: {msg}")


def _fmt(val) -> str:
    """Shortest round-tripping decimal form of a float."""
    return repr(float(val))


def _num(tok: str, ln: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        _fail(ln, f"not a number: {tok!r}")
    if not np.isfinite(val):
        _fail(ln, f"non-finite value {tok!r}")
    return val


def _index(tok: str, upper: int, ln: int, what: str) -> int:
    try:
        idx = int(tok)
    except ValueError:
        _fail(ln, f"not an index: {tok!r}")
    if not (1 <= idx <= upper):
        _fail(ln, f"{what} index {idx} out of range 1..{upper}")
    return idx - 1


def parse(text: str, name: str = "") -> QcqpProblem:
    """Parse an instance file; raises InstanceFormatError citing the line."""
    lines = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append((ln, body))
    if not lines:
        raise InstanceFormatError("empty instance file")

    ln, head = lines[0]
    parts = head.split()
    if len(parts) != 4 or parts[0] != "QCQP":
        _fail(ln, f"expected 'QCQP <n> <m> <p>', got {head!r}")
    try:
        n, m, p = int(parts[1]), int(parts[2]), int(parts[3])
    except ValueError:
        _fail(ln, "QCQP sizes must be integers")
    if n < 1 or m < 0 or p < 0:
        _fail(ln, "QCQP needs n >= 1, m >= 0, p >= 0")

    lx = np.full(n, np.nan)
    ux = np.full(n, np.nan)
    ly = np.full(m, np.nan)
    uy = np.full(m, np.nan)
    Q = [np.zeros((n, n)) for _ in range(p + 1)]
    a = [np.zeros(n) for _ in range(p + 1)]
    b = [np.zeros(m) for _ in range(p + 1)]
    c = np.zeros(p)
    seen_q = [set() for _ in range(p + 1)]
    seen_a = [set() for _ in range(p + 1)]
    seen_b = [set() for _ in range(p + 1)]

    section = None
    block = 0  # 0 = objective, k = constraint k
    for ln, body in lines[1:]:
        parts = body.split()
        key2 = " ".join(parts[:2])
        if key2 in ("BOUNDS X", "BOUNDS Y", "OBJ Q", "OBJ A", "OBJ B"):
            if len(parts) != 2:
                _fail(ln, f"malformed section header {body!r}")
            section = key2
            block = 0
            continue
        if parts[0] == "CON":
            if len(parts) != 3:
                _fail(ln, f"expected 'CON <k> <c_k>', got {body!r}")
            k = _index(parts[1], p, ln, "constraint") + 1
            c[k - 1] = _num(parts[2], ln)
            section = "CON"
            block = k
            continue
        if section is None:
            _fail(ln, f"data before any section header: {body!r}")

        if section == "BOUNDS X" or section == "BOUNDS Y":
            if len(parts) != 3:
                _fail(ln, f"expected 'i lo hi', got {body!r}")
            if section == "BOUNDS X":
                i = _index(parts[0], n, ln, "x")
                lx[i] = _num(parts[1], ln)
                ux[i] = _num(parts[2], ln)
            else:
                j = _index(parts[0], m, ln, "y")
                ly[j] = _num(parts[1], ln)
                uy[j] = _num(parts[2], ln)
            continue

        if section == "CON":
            tag, rest = parts[0], parts[1:]
            if tag not in ("Q", "A", "B"):
                _fail(ln, f"constraint line must start with Q, A or B: {body!r}")
        elif section == "OBJ Q":
            tag, rest = "Q", parts
        elif section == "OBJ A":
            tag, rest = "A", parts
        else:
            tag, rest = "B", parts

        if tag == "Q":
            if len(rest) != 3:
                _fail(ln, f"expected 'i j q', got {body!r}")
            i = _index(rest[0], n, ln, "x")
            j = _index(rest[1], n, ln, "x")
            if i > j:
                _fail(ln, f"Q triplet needs i <= j, got {i + 1} > {j + 1}")
            if (i, j) in seen_q[block]:
                _fail(ln, f"duplicate Q entry ({i + 1}, {j + 1})")
            seen_q[block].add((i, j))
            val = _num(rest[2], ln)
            Q[block][i, j] = Q[block][j, i] = val
        elif tag == "A":
            if len(rest) != 2:
                _fail(ln, f"expected 'i a', got {body!r}")
            i = _index(rest[0], n, ln, "x")
            if i in seen_a[block]:
                _fail(ln, f"duplicate A entry {i + 1}")
            seen_a[block].add(i)
            a[block][i] = _num(rest[1], ln)
        else:
            if len(rest) != 2:
                _fail(ln, f"expected 'j b', got {body!r}")
            j = _index(rest[0], m, ln, "y")
            if j in seen_b[block]:
                _fail(ln, f"duplicate B entry {j + 1}")
            seen_b[block].add(j)
            b[block][j] = _num(rest[1], ln)

    for i in range(n):
        if np.isnan(lx[i]) or np.isnan(ux[i]):
            raise InstanceFormatError(f"missing BOUNDS X entry for x {i + 1}")
    for j in range(m):
        if np.isnan(ly[j]) or np.isnan(uy[j]):
            raise InstanceFormatError(f"missing BOUNDS Y entry for y {j + 1}")
    return QcqpProblem.create(Q=Q, a=a, b=b, c=c, lx=lx, ux=ux, ly=ly, uy=uy,
                              name=name)


def serialize(problem: QcqpProblem) -> str:
    """Canonical text form: sorted indices, zero entries and empty sections
    skipped, shortest round-tripping number format."""
    problem.validate()
    n, m, p = problem.n, problem.m, problem.p
    out = [f"QCQP {n} {m} {p}"]
    out.append("BOUNDS X")
    for i in range(n):
        out.append(f"{i + 1} {_fmt(problem.lx[i])} {_fmt(problem.ux[i])}")
    if m:
        out.append("BOUNDS Y")
        for j in range(m):
            out.append(f"{j + 1} {_fmt(problem.ly[j])} {_fmt(problem.uy[j])}")

    def q_lines(Q, prefix=""):
        lines = []
        for i in range(n):
            for j in range(i, n):
                if Q[i, j] != 0.0:
                    lines.append(f"{prefix}{i + 1} {j + 1} {_fmt(Q[i, j])}")
        return lines

    def vec_lines(v, prefix=""):
        return [f"{prefix}{i + 1} {_fmt(v[i])}" for i in range(v.size) if v[i] != 0.0]

    lines = q_lines(problem.Q[0])
    if lines:
        out.append("OBJ Q")
        out.extend(lines)
    lines = vec_lines(problem.a[0])
    if lines:
        out.append("OBJ A")
        out.extend(lines)
    lines = vec_lines(problem.b[0])
    if lines:
        out.append("OBJ B")
        out.extend(lines)
    for k in range(1, p + 1):
        out.append(f"CON {k} {_fmt(problem.c[k - 1])}")
        out.extend(q_lines(problem.Q[k], "Q "))
        out.extend(vec_lines(problem.a[k], "A "))
        out.extend(vec_lines(problem.b[k], "B "))
    return "\n".join(out) + "\n"


def load(path, name: str | None = None) -> QcqpProblem:
    from pathlib import Path
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"),
                 name=name if name is not None else path.stem)


def save(problem: QcqpProblem, path) -> None:
    from pathlib import Path
    Path(path).write_text(serialize(problem), encoding="utf-8")


def export_mps(model: ExtendedModel, name: str = "LIFTEDLP") -> str:
    """Free-format MPS of the lifted LP (maximization via OBJSENSE), for
    cross-checking the permanent relaxation against external solvers."""
    n, m = model.n, model.m
    col_names = [f"x{i + 1}" for i in range(n)]
    col_names += [f"y{j + 1}" for j in range(m)]
    for i in range(n):
        for j in range(i, n):
            col_names.append(f"X_{i + 1}_{j + 1}")

    row_names = []
    row_decl = []
    for r in range(model.rows.shape[0]):
        rname = f"R{r + 1}"
        row_names.append(rname)
        lo, hi = model.row_lb[r], model.row_ub[r]
        if np.isfinite(lo) and np.isfinite(hi):
            row_decl.append(f" E {rname}" if lo == hi else f" L {rname}")
        elif np.isfinite(hi):
            row_decl.append(f" L {rname}")
        else:
            row_decl.append(f" G {rname}")

    out = [f"NAME {name}", "OBJSENSE", "    MAX", "ROWS", " N OBJ"]
    out.extend(row_decl)
    out.append("COLUMNS")
    for cidx, cname in enumerate(col_names):
        if model.obj[cidx] != 0.0:
            out.append(f"    {cname} OBJ {_fmt(model.obj[cidx])}")
        for r in range(model.rows.shape[0]):
            coef = model.rows[r, cidx]
            if coef != 0.0:
                out.append(f"    {cname} {row_names[r]} {_fmt(coef)}")
    out.append("RHS")
    for r in range(model.rows.shape[0]):
        lo, hi = model.row_lb[r], model.row_ub[r]
        rhs = hi if np.isfinite(hi) else lo
        if rhs != 0.0:
            out.append(f"    RHS {row_names[r]} {_fmt(rhs)}")
    ranged = [r for r in range(model.rows.shape[0])
              if np.isfinite(model.row_lb[r]) and np.isfinite(model.row_ub[r])
              and model.row_lb[r] != model.row_ub[r]]
    if ranged:
        out.append("RANGES")
        for r in ranged:
            span = model.row_ub[r] - model.row_lb[r]
            out.append(f"    RNG {row_names[r]} {_fmt(span)}")
    out.append("BOUNDS")
    for cidx, cname in enumerate(col_names):
        out.append(f" LO BND {cname} {_fmt(model.col_lb[cidx])}")
        out.append(f" UP BND {cname} {_fmt(model.col_ub[cidx])}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"
