"""Running the ring below the sum of the two thresholds.

At 0.6 V neither device ever gets above threshold, yet the ring still
oscillates on weak-inversion current, over three decades slower. In
that regime the current depends exponentially on V_T, so the same well
voltage swing moves the frequency by a much larger fraction than at 3 V.
"""

from ringspice import (SweepSpec, default_cards_path, load_model_cards, sweep_vcont,
                       threshold_voltage, tuning_range_report)


def fmt(f):
    return f"{f / 1e6:8.2f} MHz" if f >= 1e6 else f"{f / 1e3:8.1f} kHz"


def main():
    cards = load_model_cards(default_cards_path("035"))
    vt_sum = sum(abs(threshold_voltage(cards[n], 0.0)[0]) for n in ("nmos035", "pmos035"))
    print(f"|VTn| + |VTp| at zero bulk bias: {vt_sum:.2f} V\n")
    res = sweep_vcont(SweepSpec(vdd_list=(3.0, 1.0, 0.6), vcont_range=(0.0, None, 0.025)), cards)
    print(f"{'vdd V':>6} {'f_min':>13} {'f_max':>13} {'relative range':>15}")
    for tr in sorted(tuning_range_report(res), key=lambda t: -t.vdd):
        print(f"{tr.vdd:6.2f} {fmt(tr.f_min):>13} {fmt(tr.f_max):>13} {tr.relative_range:15.1%}")


if __name__ == "__main__":
    main()
