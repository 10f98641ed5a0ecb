"""The rainbow-matching gadget behind NP-hardness of welfare maximization.

A path whose edges are properly coloured becomes an allocation instance: one
friend pair per colour, a dummy per vertex, and a welfare threshold T that is
reachable exactly when k vertex-disjoint edges of distinct colours exist.
"""

from plotalloc.generators import RainbowInstance, has_rainbow_matching, rainbow_reduction
from plotalloc.optimize import brute_force_opt


def main():
    coloring = (0, 1, 0, 1)  # five vertices, two colours
    for k in range(4):
        r = RainbowInstance(5, 2, coloring, k)
        inst, threshold = rainbow_reduction(r)
        opt = brute_force_opt(inst, cap=inst.n)
        print(
            f"k={k}: n={inst.n}, T={threshold}, OPT={opt.welfare}, "
            f"OPT>=T {opt.welfare >= threshold}, rainbow matching {has_rainbow_matching(r)}"
        )


if __name__ == "__main__":
    main()
