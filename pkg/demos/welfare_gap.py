"""How badly can an online friend declaration lose welfare?

Everybody wants plot v1; agents 1 and 2 are friends with weight 100 and the
only adjacent pair is {v1, v2}.  They end up together only when one of them is
drawn first, so the expected welfare decays like 400/n while the optimum stays
at 201.  The friends-first variant seats the pair before anyone else.
"""

from plotalloc.analysis import exact_expected_sw, monte_carlo_sw
from plotalloc.generators import paper_fixture


def main():
    print(f"{'n':>3} {'On-CT-RSD':>12} {'FF-CT-RSD*':>12} {'OPT':>5}  method")
    for n in (4, 6, 8):
        inst = paper_fixture("hub", n=n).instance
        ct = exact_expected_sw(inst, "on-ct-rsd")
        ff = exact_expected_sw(inst, "ff-ct-rsd-star")
        print(f"{n:>3} {str(ct.expected_sw):>12} {str(ff.expected_sw):>12} {str(ct.opt):>5}  exact")
    for n in (20, 50):
        fx = paper_fixture("hub", n=n)
        mc = monte_carlo_sw(fx.instance, "on-ct-rsd", samples=5000, seed=1, opt=fx.expected["opt"])
        print(f"{n:>3} {float(mc.expected_sw):>12.2f} {'':>12} {str(mc.opt):>5}  5000 samples, +/- {mc.half_width:.2f}")


if __name__ == "__main__":
    main()
