# builtin: greedy
import numpy as np


def select_next_node(current, depot, feasible_nodes, dist_mat, prizes, remaining_budget):
    """Take the reachable node with the best prize per unit of travel."""
    return max(feasible_nodes, key=lambda j: prizes[j] / (dist_mat[current][j] + 1e-9))
