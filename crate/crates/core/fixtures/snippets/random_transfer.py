# replay: random
import numpy as np


def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: uniform random exploration inside each task's box.
    rng = np.random.default_rng(seed)
    return [
        rng.uniform(np.asarray(lo), np.asarray(hi), size=(NT, len(lo))).tolist()
        for lo, hi in zip(lower_bounds, upper_bounds)
    ]
