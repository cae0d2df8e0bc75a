# builtin: greedy
import numpy as np


def select_next_talk(available_talks, qualities, topics, previous_topic):
    """Best quality after the overlap penalty with the previous talk."""
    def gain(i):
        overlap = 0.0
        for a, b in zip(topics[i], previous_topic):
            overlap += a * b
        return qualities[i] - max(0.0, overlap)

    return max(available_talks, key=gain)
