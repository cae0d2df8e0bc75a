# builtin: greedy
import numpy as np


def select_next_operation(ready_operations, processing_times, machine_assignments, machine_available, job_available):
    """Shortest processing time first."""
    return min(ready_operations, key=lambda op: processing_times[op[0]][op[1]])
