# builtin: greedy
import numpy as np


def select_next_ad(base_values, fatigue_rates, fatigue_levels, remaining_slots):
    """Show the ad with the highest value after fatigue."""
    return max(
        range(len(base_values)),
        key=lambda i: base_values[i] * (1.0 - fatigue_rates[i]) ** int(fatigue_levels[i]),
    )
