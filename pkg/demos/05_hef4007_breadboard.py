"""The same ring built from discrete metal-gate parts.

The HEF4007 array has thresholds near +-1.4 V and is meant for 5 to 12 V.
With generic long-channel cards, large devices and about 100 pF of
breadboard loading per node, the bulk control still works at 2 V, where
the supply is well under the sum of the thresholds. The peak below V_DD
shows up here too, and the relative tuning range shrinks as the supply
rises.
"""

from ringspice import (RingConfig, SweepSpec, default_cards_path, find_peak, load_model_cards,
                       sweep_vcont, tuning_range_report)

RING = RingConfig(wp=500e-6, wn=200e-6, l=5e-6, c_node=100e-12,
                  nmos_model="nmos4007", pmos_model="pmos4007")


def main():
    cards = load_model_cards(default_cards_path("hef4007"))
    spec = SweepSpec(ring=RING, vdd_list=(2.0, 2.5, 5.0), vcont_range=(0.0, None, 0.1),
                     seed_frequency_hint=1e6)
    res = sweep_vcont(spec, cards)
    ranges = {t.vdd: t for t in tuning_range_report(res)}
    for vdd in res.vdds:
        p = find_peak(res, vdd)
        tr = ranges[vdd]
        print(f"vdd {vdd:3.1f} V: {tr.f_min / 1e3:7.1f} .. {tr.f_max / 1e3:7.1f} kHz "
              f"({tr.relative_range:5.1%}), peak at vcont {p.vcont_star:.2f} V")


if __name__ == "__main__":
    main()
