# builtin: inverse_distance
import numpy as np


def compute_heuristic_matrix(dist_mat, demands, vehicle_capacity):
    """Shorter edges are more attractive."""
    return 1.0 / (dist_mat + 1e-9)
