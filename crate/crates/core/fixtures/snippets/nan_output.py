# replay: nan
import numpy as np


def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: normalize by fitness spread, which is zero for
    # converged populations.
    out = []
    for pop, fit in zip(populations, fitnesses):
        p = np.asarray(pop[:NT])
        spread = np.float64(0.0) * np.ptp(fit)
        out.append((p / spread * 0.0).tolist())
    return out
