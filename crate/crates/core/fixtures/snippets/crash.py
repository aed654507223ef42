# replay: crash
import numpy as np


def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: unbounded recursion until the interpreter dies.
    def deeper(x):
        return deeper(x + 1) + 1
    return deeper(np.float64(0))
