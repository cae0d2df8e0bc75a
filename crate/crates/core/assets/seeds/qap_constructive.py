# builtin: greedy
import numpy as np


def select_next_assignment(unassigned_facilities, unassigned_locations, flow_mat, dist_mat, current_assignment):
    """Place the busiest facility where it adds the least cost."""
    facility = max(unassigned_facilities, key=lambda f: float(sum(flow_mat[f])))

    def added_cost(loc):
        cost = 0.0
        for g in sorted(current_assignment):
            cost += float(flow_mat[facility][g] + flow_mat[g][facility]) * dist_mat[loc][current_assignment[g]]
        return cost

    return facility, min(unassigned_locations, key=added_cost)
