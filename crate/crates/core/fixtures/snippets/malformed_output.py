# replay: malformed
import sys


def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: report progress on the original standard output.
    sys.__stdout__.write("this is not a frame")
    sys.__stdout__.flush()
    return [[list(row) for row in pop[:NT]] for pop in populations]
