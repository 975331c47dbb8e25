"""Frequency against the PMOS well voltage at a 3 V supply.

Pulling the shared N-well below V_DD forward-biases the PMOS source
junctions and lowers |V_T|, so the ring speeds up. Past the point where the
body-effect root would go negative the threshold stops moving, while the
junctions keep conducting: current leaks from the rails into the control
node and the taps can no longer reach the rails. The curve therefore rises,
peaks a few tenths of a volt below V_DD and then falls. The table marks the
rows where the threshold sits in its clamped (diode) region and how much of
the supply current the well is sinking there.
"""

from ringspice import SweepSpec, default_cards_path, find_peak, load_model_cards, sweep_vcont


def main(step=0.05):
    cards = load_model_cards(default_cards_path("035"))
    res = sweep_vcont(SweepSpec(vdd_list=(3.0,), vcont_range=(1.0, None, step)), cards)
    peak = find_peak(res, 3.0)
    print(f"{'vcont V':>8} {'f MHz':>9} {'i_avg mA':>9} {'i_bulk/i_avg':>13}  diode")
    for r in res.at(3.0):
        if not r.oscillating:
            print(f"{r.vcont:8.3f} {'-':>9}")
            continue
        mark = "  <- peak" if abs(r.vcont - peak.vcont_star) <= step / 2 else ""
        print(f"{r.vcont:8.3f} {r.frequency / 1e6:9.1f} {1e3 * r.i_avg:9.3f} "
              f"{r.i_bulk / r.i_avg:13.1%}  {'yes' if r.diode_region else 'no '}{mark}")
    print(f"\nrefined peak: {peak.f_max / 1e6:.1f} MHz at vcont = {peak.vcont_star:.3f} V")


if __name__ == "__main__":
    main()
