# replay: wrong-shape
def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: drop the last coordinate by mistake.
    return [[list(row[:-1]) for row in pop[:NT]] for pop in populations]
