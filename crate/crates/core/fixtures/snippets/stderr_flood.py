# replay: stderr-flood mib=16
import sys


def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):
    # Design Thought: verbose debugging output on every call.
    for _ in range(2048):
        print("x" * 8191, file=sys.stderr)
    return [[list(row) for row in pop[:NT]] for pop in populations]
