"""CPLEX LP text format: writer and a small reader for the subset we emit."""
from __future__ import annotations

import math
import re
from pathlib import Path

from .formulation import MipModel

_WIDTH = 100


def _num(v: float) -> str:
    return repr(float(v)) if v != int(v) or abs(v) >= 1e15 else str(int(v))


def _terms(pairs) -> list:
    out = []
    for k, (coef, name) in enumerate(pairs):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = name if mag == 1.0 else f"{_num(mag)} {name}"
        out.append((f"- {body}" if sign == "-" else body) if k == 0 else f"{sign} {body}")
    return out


def _wrap(head: str, parts: list) -> list:
    lines, cur = [], head
    for p in parts:
        if len(cur) + 1 + len(p) > _WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + p
        else:
            cur = f"{cur} {p}" if cur else p
    lines.append(cur)
    return lines


def lp_lines(m: MipModel) -> list:
    names = [v.name for v in m.vars]
    lines = ["Maximize" if m.sense == "max" else "Minimize"]
    parts = _terms([(a, names[k]) for k, a in sorted(m.obj.items()) if a != 0.0])
    if m.quad:
        q = [(2.0 * c, f"{names[i]} ^ 2" if i == j else f"{names[i]} * {names[j]}")
             for (i, j), c in sorted(m.quad.items()) if c != 0.0]
        qt = _terms(q)
        parts += (["+"] if parts else []) + ["["] + qt + ["]", "/", "2"]
    if m.obj_const:
        parts.append(f"{'-' if m.obj_const < 0 else '+'} {_num(abs(m.obj_const))}"
                     if parts else _num(m.obj_const))
    if not parts:
        parts = [f"0 {names[0]}"] if names else ["0"]
    lines += _wrap(" obj:", parts)
    if m.rows:
        lines.append("Subject To")
        for r in m.rows:
            body = _terms([(a, names[k]) for k, a in sorted(r.coefs.items())]) or [f"0 {names[0]}"]
            lines += _wrap(f" {r.name}:", body + [r.sense, _num(r.rhs)])
    bounds = []
    for v in m.vars:
        if v.vtype == "B" and v.lb == 0.0 and v.ub == 1.0:
            continue
        if v.lb == v.ub:
            bounds.append(f" {v.name} = {_num(v.lb)}")
        elif math.isinf(v.ub):
            if v.lb != 0.0:
                bounds.append(f" {v.name} >= {_num(v.lb)}")
        else:
            bounds.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    if bounds:
        lines.append("Bounds")
        lines += bounds
    bins = [v.name for v in m.vars if v.vtype == "B"]
    if bins:
        lines.append("Binary")
        lines += _wrap("", bins) if bins else []
    lines.append("End")
    return lines


def export_lp(m: MipModel, path) -> Path:
    path = Path(path)
    path.write_text("\n".join(lp_lines(m)) + "\n")
    return path


# ---------------------------------------------------------------------------
# reader
# ---------------------------------------------------------------------------

_SECTIONS = {
    "minimize": "min", "minimise": "min", "min": "min",
    "maximize": "max", "maximise": "max", "max": "max",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "binary": "bin", "binaries": "bin", "bin": "bin",
    "general": "gen", "generals": "gen", "gen": "gen",
    "end": "end",
}
_TOKEN = re.compile(r"<=|>=|=<|=>|[<>=]|\[|\]|\^|\*|/|[+-]|:"
                    r"|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|inf(?:inity)?\b"
                    r"|[^\s\[\]\^\*/+<>=:-]+")


def _is_num(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _parse_expr(tokens: list):
    """Linear terms, constants and an optional ``[ ... ] / 2`` block."""
    lin, quad, const = {}, {}, 0.0
    sign, i = 1.0, 0
    while i < len(tokens):
        t = tokens[i]
        if t in ("+", "-"):
            sign *= -1.0 if t == "-" else 1.0
            i += 1
        elif t == "[":
            j = tokens.index("]", i)
            inner = tokens[i + 1:j]
            div = 1.0
            if j + 2 < len(tokens) + 1 and j + 1 < len(tokens) and tokens[j + 1] == "/":
                div = float(tokens[j + 2])
                j += 2
            qs, k, coef = 1.0, 0, 1.0
            while k < len(inner):
                u = inner[k]
                if u in ("+", "-"):
                    qs *= -1.0 if u == "-" else 1.0
                    k += 1
                elif _is_num(u):
                    coef = float(u)
                    k += 1
                elif k + 2 < len(inner) and inner[k + 1] in ("^", "*"):
                    key = (u, u) if inner[k + 1] == "^" else (u, inner[k + 2])
                    quad[key] = quad.get(key, 0.0) + sign * qs * coef / div
                    qs, coef = 1.0, 1.0
                    k += 3
                else:
                    raise ValueError(f"bad quadratic term near {u!r}")
            sign = 1.0
            i = j + 1
        elif _is_num(t):
            nxt = tokens[i + 1] if i + 1 < len(tokens) else None
            if nxt is not None and nxt not in ("+", "-", "[") and not _is_num(nxt):
                lin[nxt] = lin.get(nxt, 0.0) + sign * float(t)
                i += 2
            else:
                const += sign * float(t)
                i += 1
            sign = 1.0
        else:
            lin[t] = lin.get(t, 0.0) + sign
            sign = 1.0
            i += 1
    return lin, quad, const


def read_lp(path) -> MipModel:
    text = Path(path).read_text()
    sections = {}
    order = []
    cur = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key is not None:
            cur = key
            order.append(key)
            sections.setdefault(cur, [])
            if key == "end":
                break
            continue
        if cur is None:
            raise ValueError(f"content before any section: {line!r}")
        sections[cur].append(line)

    sense = "max" if "max" in sections else "min"
    obj_text = " ".join(sections.get(sense, []))
    if ":" in obj_text:
        obj_text = obj_text.split(":", 1)[1]

    rows = []
    buf = ""
    for line in sections.get("st", []):
        buf = f"{buf} {line}"
        if re.search(r"(<=|>=|=<|=>|[<>=])\s*[-+]?[\d.eE+-]+\s*$", buf):
            rows.append(buf.strip())
            buf = ""
    if buf.strip():
        raise ValueError(f"unterminated constraint: {buf.strip()!r}")

    bins = set(" ".join(sections.get("bin", [])).split())
    if sections.get("gen"):
        raise ValueError("general integer variables are not supported")

    names, bounds = [], {}

    def see(name):
        if name not in bounds:
            bounds[name] = [0.0, math.inf]
            names.append(name)

    parsed_obj = _parse_expr(_TOKEN.findall(obj_text))
    for k in parsed_obj[0]:
        see(k)
    for a, b in parsed_obj[1]:
        see(a)
        see(b)
    parsed_rows = []
    for k, r in enumerate(rows):
        name = f"r{k}"
        if ":" in r.split("<")[0].split(">")[0].split("=")[0]:
            name, r = r.split(":", 1)
            name = name.strip()
        m = re.match(r"(.*?)(<=|>=|=<|=>|<|>|=)\s*([-+]?[\d.eE+-]+)\s*$", r)
        lhs, op, rhs = m.group(1), m.group(2), float(m.group(3))
        op = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(op, op)
        lin, _, c = _parse_expr(_TOKEN.findall(lhs))
        for v in lin:
            see(v)
        parsed_rows.append((name, lin, op, rhs - c))
    for line in sections.get("bounds", []):
        toks = _TOKEN.findall(line)
        if len(toks) == 2 and toks[1].lower() == "free":
            raise ValueError(f"free variable {toks[0]} has no finite lower bound")
        if len(toks) == 5:
            lo, _, v, _, hi = toks
            see(v)
            bounds[v] = [float(lo), float(hi)]
        elif len(toks) == 3:
            a, op, b = toks
            if _is_num(a):
                a, b = b, a
                op = {"<=": ">=", ">=": "<=", "=<": ">=", "=>": "<=", "=": "="}[op]
            see(a)
            val = float(b)
            if op in ("<=", "=<"):
                bounds[a][1] = val
            elif op in (">=", "=>"):
                bounds[a][0] = val
            else:
                bounds[a] = [val, val]
        else:
            raise ValueError(f"unsupported bound line {line!r}")
    for v in bins:
        see(v)
        if bounds[v] == [0.0, math.inf]:
            bounds[v] = [0.0, 1.0]

    model = MipModel(Path(path).stem)
    model.sense = sense
    for v in names:
        lo, hi = bounds[v]
        model.add_var(v, lo, hi, "B" if v in bins else "C")
    lin, quad, const = parsed_obj
    model.obj = {model.index(k): a for k, a in lin.items()}
    model.obj_const = const
    for (a, b), c in quad.items():
        i, j = sorted((model.index(a), model.index(b)))
        model.quad[(i, j)] = model.quad.get((i, j), 0.0) + c
    for name, lin, op, rhs in parsed_rows:
        model.add_row({model.index(k): a for k, a in lin.items()}, op, rhs, name)
    return model
