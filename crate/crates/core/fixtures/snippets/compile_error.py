# replay: compile-error
def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed)
    # Design Thought: missing colon above.
    return populations
