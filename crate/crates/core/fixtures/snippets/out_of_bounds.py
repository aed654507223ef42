# replay: out-of-bounds
import numpy as np


def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: overshoot past the upper bound (the host clips).
    out = []
    for lo, hi in zip(lower_bounds, upper_bounds):
        lo = np.asarray(lo)
        hi = np.asarray(hi)
        out.append([(hi + (hi - lo)).tolist() for _ in range(NT)])
    return out
