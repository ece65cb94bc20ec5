"""Deterministic SVG renderings of pipeline stages."""
from __future__ import annotations

import math
from pathlib import Path

SIZE = 600
PAD = 20
SIDE_COLORS = {"A": "#d62728", "B": "#1f77b4", "C": "#2ca02c"}


class Canvas:
    def __init__(self, bounds=((0.0, 0.0), (1.0, 1.0)), size: int = SIZE):
        (self.x0, self.y0), (x1, y1) = bounds
        self.scale = (size - 2 * PAD) / max(x1 - self.x0, y1 - self.y0)
        self.size = size
        self.items = []

    def xy(self, p):
        # svg y grows downward
        return (f"{PAD + (p[0] - self.x0) * self.scale:.3f}",
                f"{self.size - PAD - (p[1] - self.y0) * self.scale:.3f}")

    def polygon(self, pts, fill="none", stroke="black", width=1.0, cls=""):
        s = " ".join(",".join(self.xy(p)) for p in pts)
        c = f' class="{cls}"' if cls else ""
        self.items.append(f'<polygon{c} points="{s}" fill="{fill}" stroke="{stroke}" '
                          f'stroke-width="{width}"/>')

    def line(self, a, b, stroke="black", width=1.0, cls="", dash=None):
        (x1, y1), (x2, y2) = self.xy(a), self.xy(b)
        c = f' class="{cls}"' if cls else ""
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<line{c} x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{stroke}" '
                          f'stroke-width="{width}"{d}/>')

    def circle(self, p, r=4.0, fill="black", cls="", title=None):
        x, y = self.xy(p)
        c = f' class="{cls}"' if cls else ""
        t = f"<title>{title}</title>" if title is not None else ""
        self.items.append(f'<circle{c} cx="{x}" cy="{y}" r="{r}" fill="{fill}">{t}</circle>')

    def text(self, p, s, size=10, dx=5, dy=-5):
        x, y = self.xy(p)
        self.items.append(f'<text x="{float(x) + dx:.3f}" y="{float(y) + dy:.3f}" '
                          f'font-size="{size}" font-family="monospace">{s}</text>')

    def svg(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" '
                f'height="{self.size}" viewBox="0 0 {self.size} {self.size}">')
        return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>',
                          *self.items, "</svg>"]) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.svg())
        return path


def _frame(env) -> Canvas:
    cv = Canvas(env.bounds)
    for poly in env.obstacles:
        cv.polygon(poly, fill="#444444", stroke="black", cls="obstacle")
    cv.polygon(env.corners, stroke="black", width=2.0)
    return cv


def plot_triangulation(env, tri) -> Canvas:
    cv = _frame(env)
    free = set(tri.free_triangles)
    for t in tri.triangles:
        if t in free:
            cv.polygon(tri.triangle_points(t), fill="#eef3ff", stroke="#7f7f7f", cls="triangle")
    for a, b in sorted(tri.constrained_edges):
        cv.line(tri.vertices[a], tri.vertices[b], width=2.0)
    return cv


def plot_partition(env, p, labels: bool = True) -> Canvas:
    cv = _frame(env)
    for i in range(p.d):
        cv.polygon(p.face_points(i), fill="#eef3ff", stroke="#555555", cls="face")
    for v in range(1, p.n + 1):
        cv.circle(p.point(v), 3.0)
        if labels:
            cv.text(p.point(v), str(v))
    return cv


def plot_conflict(env, p, conflict) -> Canvas:
    """Partition underlay with infeasible pairs drawn as dashed chords."""
    cv = plot_partition(env, p)
    for u, v in sorted(conflict.edges):
        cv.line(p.point(u), p.point(v), stroke="#9467bd", width=0.8, cls="conflict", dash="4,3")
    return cv


def plot_separator(env, p, graph, sep) -> Canvas:
    """Feasible-pair graph with separator classes colored A red, B blue, C green."""
    cv = _frame(env)
    for u, v in sorted(graph.edges):
        cv.line(p.point(u), p.point(v), stroke="#bbbbbb", width=0.8)
    for side in ("A", "B", "C"):
        for v in sorted(getattr(sep, side)):
            cv.circle(p.point(v), 5.0, fill=SIDE_COLORS[side], cls=f"side-{side}", title=str(v))
            cv.text(p.point(v), str(v))
    return cv


def plot_solution(env, p, steps, headings=None, goal=None) -> Canvas:
    cv = plot_partition(env, p, labels=False)
    for a, b in zip(steps[:-1], steps[1:]):
        cv.line(a, b, stroke="#ff7f0e", width=1.5)
    for s, q in enumerate(steps):
        fill = "#d62728" if s % 2 == 0 else "#1f77b4"
        cv.circle(q, 4.0, fill=fill, cls="step", title=f"step {s + 1}")
        if headings is not None:
            th = headings[s]
            tip = (q[0] + 0.03 * math.cos(th), q[1] + 0.03 * math.sin(th))
            cv.line(q, tip, stroke=fill, width=1.0)
    if goal is not None:
        cv.circle(goal, 7.0, fill="none", cls="goal")
        cv.items[-1] = cv.items[-1].replace('fill="none"', 'fill="none" stroke="green" stroke-width="2"')
    return cv
