# replay: elite-exchange
import numpy as np


def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: exchange elite solutions between tasks through the
    # unit box so that related tasks share promising regions.
    numt = len(populations)
    if numt < 2:
        return [[list(p) for p in pop[:NT]] for pop in populations]
    orders = [np.argsort(np.asarray(f), kind="stable") for f in fitnesses]
    out = []
    for i in range(numt):
        lo_t = np.asarray(lower_bounds[i])
        hi_t = np.asarray(upper_bounds[i])
        rows = []
        for k in range(NT):
            j = (i + 1 + k % (numt - 1)) % numt
            src = np.asarray(populations[j][orders[j][(k // (numt - 1)) % len(orders[j])]])
            u = (src - np.asarray(lower_bounds[j])) / (np.asarray(upper_bounds[j]) - np.asarray(lower_bounds[j]))
            rows.append((lo_t + u * (hi_t - lo_t)).tolist())
        out.append(rows)
    return out
