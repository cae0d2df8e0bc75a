# builtin: coverage
import numpy as np


def compute_node_scores(dist_mat, demands, radius):
    """Total demand each site would cover on its own."""
    return (dist_mat <= radius).astype(float) @ demands
