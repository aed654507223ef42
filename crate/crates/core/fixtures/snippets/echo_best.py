# replay: echo-best
import numpy as np


def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: return each task's own NT best solutions unchanged.
    # A neutral reference model: it injects nothing the task has not seen.
    out = []
    for pop, fit in zip(populations, fitnesses):
        order = np.argsort(np.asarray(fit), kind="stable")
        idx = [order[k % len(order)] for k in range(NT)]
        out.append([list(map(float, pop[i])) for i in idx])
    return out
