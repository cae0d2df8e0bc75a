# builtin: distance
import numpy as np


def compute_guide_matrix(dist_mat):
    """Far-apart pairs are preferred."""
    return dist_mat.copy()
