# replay: infinite-loop
def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: keep refining forever.
    while True:
        pass
