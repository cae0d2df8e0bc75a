# builtin: greedy
import numpy as np


def select_next_city(current, start, unvisited, dist_mat):
    """Go to the nearest unvisited city."""
    return min(sorted(unvisited), key=lambda j: dist_mat[current][j])
