import math
import re

from cdcpath.biclique import FiniteElementGraph, separator
from cdcpath.formulation import FootstepParams, footstep_model, step_positions, trimmed_steps
from cdcpath.geometry import constrained_delaunay
from cdcpath.pipeline import prepare
from cdcpath.plotting import SIDE_COLORS, plot_partition, plot_separator, plot_solution
from cdcpath.scenarios import gen_env
from cdcpath.solver import solve_milp


def test_partition_of_empty_square(empty_env, empty_partition):
    svg = plot_partition(empty_env, empty_partition).svg()
    assert svg.count('class="face"') == 2
    assert svg == plot_partition(empty_env, empty_partition).svg()


def test_separator_colors_match_classes():
    art = prepare(gen_env(3, 2))
    g = FiniteElementGraph.from_partition(art.partition)
    sep = separator(g)
    svg = plot_separator(art.env, art.partition, g, sep).svg()
    for side in "ABC":
        marks = re.findall(rf'<circle class="side-{side}"[^>]*fill="([^"]+)"', svg)
        assert len(marks) == len(getattr(sep, side))
        assert set(marks) <= {SIDE_COLORS[side]}
    assert len(set(SIDE_COLORS.values())) == 3


def test_solution_markers(empty_env, empty_partition):
    N = 8
    prm = FootstepParams(n_steps=N, method="bigm", start=(0.1, 0.1, math.pi / 4),
                         goal=(0.3, 0.3, math.pi / 4), w_used=0.05)
    m = footstep_model(empty_env, empty_partition, prm)
    res = solve_milp(m)
    steps = [tuple(q) for q in step_positions(m, res.x, N)]
    svg = plot_solution(empty_env, empty_partition, steps, goal=(0.3, 0.3)).svg()
    centers = re.findall(r'<circle class="step" cx="([^"]+)" cy="([^"]+)"', svg)
    assert len(centers) == N
    goal = re.search(r'<circle class="goal" cx="([^"]+)" cy="([^"]+)"', svg).groups()
    k = trimmed_steps(m, res.x, N)
    assert k > 0
    assert all(c == goal for c in centers[N - k:])
    assert svg.count('class="obstacle"') == 0


def test_obstacles_drawn():
    env = gen_env(5, 3)
    art = prepare(env)
    svg = plot_partition(env, art.partition).svg()
    assert svg.count('class="obstacle"') == 3
