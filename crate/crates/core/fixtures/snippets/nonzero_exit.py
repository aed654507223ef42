# replay: exit-code code=7
import sys


def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: bail out early.
    sys.exit(7)
