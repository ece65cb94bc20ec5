"""Random obstacle scenarios in the unit square."""
from __future__ import annotations

import numpy as np

from .geometry import Environment, convex_hull

START = (0.05, 0.05)
GOAL = (0.95, 0.95)


def _boxes_clear(box, others, gap):
    x0, y0, x1, y1 = box
    for a0, b0, a1, b1 in others:
        if x0 < a1 + gap and a0 < x1 + gap and y0 < b1 + gap and b0 < y1 + gap:
            return False
    return True


def _near(box, p, clearance):
    x0, y0, x1, y1 = box
    return x0 - clearance < p[0] < x1 + clearance and y0 - clearance < p[1] < y1 + clearance


def gen_env(seed: int, n_obstacles: int, min_vertices: int = 4, max_vertices: int = 6, max_points: int = 8,
            size=(0.12, 0.32), gap: float = 0.03, digits: int = 4) -> Environment:
    """Obstacles are convex hulls of 4..max_points random points in disjoint sub-boxes.

    Hulls with fewer than ``min_vertices`` or more than ``max_vertices`` corners are redrawn.

    Obstacles are drawn sequentially from one generator, so the first k
    obstacles of a seed do not depend on how many are requested.
    """
    if n_obstacles < 0:
        raise ValueError("n_obstacles must be >= 0")
    rng = np.random.default_rng(seed)
    boxes = []
    obstacles = []
    while len(obstacles) < n_obstacles:
        for _ in range(10_000):
            w, h = rng.uniform(*size, size=2)
            x0 = rng.uniform(0.02, 0.98 - w)
            y0 = rng.uniform(0.02, 0.98 - h)
            box = (x0, y0, x0 + w, y0 + h)
            if not _boxes_clear(box, boxes, gap) or _near(box, START, 0.08) or _near(box, GOAL, 0.08):
                continue
            k = int(rng.integers(4, max_points + 1))
            pts = rng.uniform((box[0], box[1]), (box[2], box[3]), size=(k, 2))
            pts = [(round(float(x), digits), round(float(y), digits)) for x, y in pts]
            pts = list(dict.fromkeys(pts))
            hull = convex_hull(pts)
            if not min_vertices <= len(hull) <= max_vertices:
                continue
            boxes.append(box)
            obstacles.append([pts[i] for i in hull])
            break
        else:
            raise RuntimeError(f"could not place obstacle {len(obstacles) + 1} for seed {seed}")
    return Environment(obstacles=obstacles, seed=seed)
