# replay: oversized mib=64
def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: return far more solutions than requested.
    return [[list(row) for row in pop] * 20000 for pop in populations]
