# builtin: distance
import numpy as np


def compute_penalty_guide(dist_mat):
    """Long edges are the first to be penalized."""
    return dist_mat.copy()
