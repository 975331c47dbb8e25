"""Where the frequency peak sits as the supply comes down.

For each supply the control voltage is swept and the peak refined with a
parabola through the best three points. The peak follows the supply down,
staying about one clamp voltage (2 phi_F of the well) below it. Below about
1 V it creeps closer to the supply: junction leakage now ends the rise
before the threshold clamp does. The supplies are independent, so they run
in parallel.
"""

import os

from ringspice import SweepSpec, default_cards_path, load_model_cards, peak_locus


def main():
    cards = load_model_cards(default_cards_path("035"))
    spec = SweepSpec(vdd_list=(3.0, 2.0, 1.5, 1.0, 0.8), vcont_range=(0.0, None, 0.025),
                     jobs=os.cpu_count() or 1)
    locus, _ = peak_locus(spec, cards)
    print(f"{'vdd V':>6} {'vcont* V':>9} {'vdd - vcont*':>13} {'f_max':>12}")
    for row in sorted(locus, key=lambda r: -r.vdd):
        f = f"{row.f_max / 1e6:.2f} MHz" if row.f_max >= 1e6 else f"{row.f_max / 1e3:.1f} kHz"
        edge = "  (grid edge)" if row.boundary else ""
        print(f"{row.vdd:6.2f} {row.vcont_star:9.3f} {row.vdd - row.vcont_star:13.3f} {f:>12}{edge}")


if __name__ == "__main__":
    main()
