# replay: runtime-error
import numpy as np


def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: add all populations together.
    total = np.asarray(populations[0])
    for pop in populations[1:]:
        total = total + np.asarray(pop)[:, :1].T
    return [total[:NT].tolist() for _ in populations]
