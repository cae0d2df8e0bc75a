# builtin: greedy
import numpy as np


def select_next_customer(current, depot, feasible_customers, dist_mat, demands, remaining_capacity, vehicle_capacity):
    """Serve the nearest customer that still fits in the vehicle."""
    return min(feasible_customers, key=lambda j: dist_mat[current][j])
