"""Acceptance gate: ten criteria, each printed as one PASS/FAIL line in the summary.

Sweeps are shared between criteria through a cache. Each criterion is charged
for the sweeps it uses, whether or not another criterion ran them first.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from ringspice.analysis import is_quadrature, measure_ring
from ringspice.engine import Method, SolverSettings, transient
from ringspice.models import drain_current, threshold_slope, threshold_voltage
from ringspice.netlist import (Capacitor, Circuit, NetlistError, RingConfig, Resistor,
                               build_plain_ring, build_quadrature_ring, parse_netlist,
                               parse_value, tap_name, write_netlist)
from ringspice.sweep import (SweepResult, SweepSpec, find_peak, simulate_point, sweep_vcont,
                             switched_capacitance, tuning_range_report)

from test_netlist import GOLDEN, MALFORMED_CASES, VALUE_CASES

QUOTED_PEAK_HZ = 547e6  # quoted maximum at 3 V
STEP = 0.025
LOCUS_VDDS = (3.0, 2.0, 1.5, 1.0, 0.8)

_sweeps = {}


def sweep_at(vdd, cards):
    """25 mV control sweep over [0, vdd] at one supply: (rows, seconds)."""
    if vdd not in _sweeps:
        t0 = time.perf_counter()
        res = sweep_vcont(SweepSpec(vdd_list=(vdd,), vcont_range=(0.0, None, STEP)), cards)
        _sweeps[vdd] = (res.rows, time.perf_counter() - t0)
    return _sweeps[vdd]


def merged(vdds, cards):
    """Rows for several supplies plus the seconds of sweeps that were already cached."""
    rows, reused = [], 0.0
    for v in vdds:
        cached = v in _sweeps
        r, s = sweep_at(v, cards)
        rows.extend(r)
        reused += s if cached else 0.0
    return SweepResult(tuple(rows)), reused


# ---------------------------------------------------------------- 1


def _rc_err(method, dt, tau):
    c = Circuit.create("rc", [Resistor("r", "a", "0", 1e3), Capacitor("c", "a", "0", tau / 1e3, ic=1.0)], {})
    w = transient(c, SolverSettings(dt=dt, tstop=tau, method=method, be_startup_steps=0,
                                    reltol=1e-9, abstol=1e-15))
    return abs(w["v(a)"][-1] - math.exp(-1.0))


def test_criterion_01_solver_oracle(criterion):
    with criterion(1, "solver oracle: RC discharge and convergence order", budget=1.0) as rec:
        tau = 1e-6
        c = Circuit.create("rc", [Resistor("r", "a", "0", 1e3), Capacitor("c", "a", "0", 1e-9, ic=1.0)], {})
        w = transient(c, SolverSettings(dt=tau / 1000, tstop=5 * tau, method=Method.TRAPEZOIDAL))
        exact = np.exp(-w.time / tau)
        rel = float(np.max(np.abs(w["v(a)"] - exact) / exact))
        dts = [tau / 50, tau / 100, tau / 200, tau / 400]
        orders = {}
        for m in (Method.TRAPEZOIDAL, Method.BACKWARD_EULER):
            errs = [_rc_err(m, dt, tau) for dt in dts]
            orders[m] = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
        rec["detail"] = (f"max rel err {rel:.2e}, order trap {orders[Method.TRAPEZOIDAL]:.2f}, "
                         f"BE {orders[Method.BACKWARD_EULER]:.2f}")
        assert rel < 0.01
        assert abs(orders[Method.TRAPEZOIDAL] - 2.0) <= 0.3
        assert abs(orders[Method.BACKWARD_EULER] - 1.0) <= 0.3


# ---------------------------------------------------------------- 2


def test_criterion_02_model_oracles(criterion, cards):
    with criterion(2, "model oracles: conductances, decade slope, dVT/dVB", budget=1.0) as rec:
        worst = 0.0
        h = 1e-6
        w, l = 2e-6, 0.35e-6
        for p in (cards["nmos035"], cards["pmos035"]):
            s = p.polarity.sign
            f = lambda a, b, c: drain_current(p, a, b, c, w, l).id
            # grid in polarity-normalized voltages, differences in terminal voltages
            for vgs in s * np.linspace(-0.5, 3.0, 20):
                for vds in s * np.linspace(-1.5, 3.0, 20):
                    for vbs in s * np.linspace(-2.0, 0.3, 5):
                        st = drain_current(p, vgs, vds, vbs, w, l)
                        fd = ((f(vgs + h, vds, vbs) - f(vgs - h, vds, vbs)) / (2 * h),
                              (f(vgs, vds + h, vbs) - f(vgs, vds - h, vbs)) / (2 * h),
                              (f(vgs, vds, vbs + h) - f(vgs, vds, vbs - h)) / (2 * h))
                        for an, num in zip((st.gm, st.gds, st.gmb), fd):
                            worst = max(worst, abs(an - num) / max(abs(num), 1e-30))

        n = cards["nmos035"]
        vt = threshold_voltage(n, 0.0)[0]
        i1 = drain_current(n, vt - 0.30, 1.0, 0.0, 1e-6, 1e-6).id
        i2 = drain_current(n, vt - 0.20, 1.0, 0.0, 1e-6, 1e-6).id
        slope = 0.10 / math.log10(i2 / i1)
        expect = n.slope_n * n.thermal_voltage() * math.log(10)

        worst_dvt = 0.0
        for p in (cards["nmos035"], cards["pmos035"]):
            phi2 = p.surface_potential()
            for vb in np.linspace(-2.0, 0.95 * phi2, 25):
                oracle = -p.polarity.sign * p.gamma / (2 * math.sqrt(phi2 - vb))
                worst_dvt = max(worst_dvt, abs(threshold_slope(p, vb) - oracle))
        rec["detail"] = (f"worst conductance rel err {worst:.1e}, decade slope "
                         f"{1e3 * slope:.2f} vs {1e3 * expect:.2f} mV, dVT/dVB err {worst_dvt:.1e}")
        assert worst < 1e-4
        assert slope == pytest.approx(expect, rel=0.02)
        assert worst_dvt < 1e-6


# ---------------------------------------------------------------- 3


def _run(circuit, hint, vdd):
    w = transient(circuit, SolverSettings(dt=1 / (200 * hint), tstop=40 / hint))
    taps = [f"v({tap_name(k)})" for k in range(len(circuit.nodes)) if tap_name(k) in circuit.nodes]
    m = measure_ring(w, taps, vdd)
    t0, t1 = m.analysis_window
    i = w["i(vdd)"][(w.time >= t0) & (w.time <= t1)]
    return m, float(np.ptp(i) / np.mean(i))


def test_criterion_03_quadrature(criterion, cards):
    with criterion(3, "quadrature phases and flat supply current at 3 V", budget=10.0) as rec:
        plain_m, plain_ripple = _run(build_plain_ring(5, RingConfig(vdd=3.0), cards), 250e6, 3.0)
        assert plain_m.oscillating
        parts = []
        for vc in (3.0, 2.6):
            m, ripple = _run(build_quadrature_ring(RingConfig(vdd=3.0, vcont=vc), cards), 600e6, 3.0)
            parts.append(f"vcont {vc:g}: {m.frequency / 1e6:.0f} MHz phases "
                         + "/".join(f"{p:.1f}" for p in m.phases_deg) + f" ripple {ripple:.2f}")
            assert m.oscillating
            assert is_quadrature(m.phases_deg, 5.0)
            assert ripple < plain_ripple
        rec["detail"] = "; ".join(parts) + f"; plain 5-stage ripple {plain_ripple:.2f}"


# ---------------------------------------------------------------- 4


def test_criterion_04_peak_and_cause(criterion, cards):
    with criterion(4, "single interior peak at 3 V caused by bulk injection", budget=120.0) as rec:
        res, secs = merged([3.0], cards)
        rec["seconds"] += secs
        rows = [r for r in res.at(3.0) if r.oscillating]
        f = np.array([r.frequency for r in rows])
        interior_max = [k for k in range(1, len(f) - 1) if f[k] > f[k - 1] and f[k] >= f[k + 1]]
        p = find_peak(res, 3.0)
        below = [r for r in rows if r.vcont < p.vcont_star]
        above = [r for r in rows if r.vcont >= p.vcont_star + STEP]
        min_share = min(r.i_bulk / r.i_avg for r in below)
        rec["detail"] = (f"vcont* {p.vcont_star:.3f} V, f_max {p.f_max / 1e6:.1f} MHz, "
                         f"{len(interior_max)} local max, min bulk share below peak {min_share:.1%}")
        assert len(interior_max) == 1 and not p.boundary
        assert 3.0 - 0.5 <= p.vcont_star < 3.0
        assert below and above
        assert all(r.diode_region for r in below)
        assert min_share > 0.01
        assert not any(r.diode_region for r in above)


# ---------------------------------------------------------------- 5


def test_criterion_05_peak_locus(criterion, cards):
    with criterion(5, "peak locus non-increasing and reaches vcont = 0 by 1.5 V", budget=600.0) as rec:
        res, secs = merged(LOCUS_VDDS, cards)
        rec["seconds"] += secs
        peaks = {v: find_peak(res, v) for v in LOCUS_VDDS}
        rec["detail"] = ", ".join(f"{v:g} V: {peaks[v].vcont_star:.3f}{'(b)' if peaks[v].boundary else ''}"
                                  for v in sorted(LOCUS_VDDS, reverse=True))
        stars = [peaks[v].vcont_star for v in sorted(LOCUS_VDDS, reverse=True)]
        assert all(a >= b for a, b in zip(stars, stars[1:]))
        assert any(peaks[v].boundary and peaks[v].vcont_star == 0.0 for v in LOCUS_VDDS if v <= 1.5)


# ---------------------------------------------------------------- 6


def test_criterion_06_low_voltage(criterion, cards):
    with criterion(6, "weak-inversion oscillation at 0.6 V, wider relative tuning", budget=300.0) as rec:
        res, secs = merged([0.6, 3.0], cards)
        rec["seconds"] += secs
        vt_sum = abs(threshold_voltage(cards["nmos035"], 0.0)[0]) + abs(threshold_voltage(cards["pmos035"], 0.0)[0])
        ranges = {t.vdd: t for t in tuning_range_report(res)}
        lo, hi = ranges[0.6], ranges[3.0]
        rec["detail"] = (f"0.6 V: {lo.f_min / 1e3:.0f}-{lo.f_max / 1e3:.0f} kHz ({lo.relative_range:.0%}), "
                         f"3 V: {hi.f_min / 1e6:.0f}-{hi.f_max / 1e6:.0f} MHz ({hi.relative_range:.1%}), "
                         f"|VTn|+|VTp| {vt_sum:.2f} V")
        assert 0.6 < vt_sum
        assert sum(r.oscillating for r in res.at(0.6)) >= 2
        assert lo.relative_range >= 3 * hi.relative_range


# ---------------------------------------------------------------- 7


def test_criterion_07_calibration(criterion, cards):
    with criterion(7, "3 V peak frequency within x3 of the quoted 547 MHz") as rec:
        res, secs = merged([3.0], cards)
        rec["seconds"] += secs
        f = find_peak(res, 3.0).f_max
        rec["detail"] = f"f_max {f / 1e6:.1f} MHz, ratio {f / QUOTED_PEAK_HZ:.2f}"
        assert QUOTED_PEAK_HZ / 3 <= f <= 3 * QUOTED_PEAK_HZ


# ---------------------------------------------------------------- 8


def test_criterion_08_power(criterion, cards):
    with criterion(8, "supply power vs f C V^2 within x2 in strong inversion", budget=10.0) as rec:
        parts = []
        for vdd in (3.0, 2.5, 2.0):
            cfg = RingConfig(vdd=vdd, vcont=vdd, kick=vdd / 2)
            row = simulate_point(cfg, cards, 500e6)
            c = switched_capacitance(build_quadrature_ring(cfg, cards))
            ratio = row.i_avg * vdd / (row.frequency * c * vdd ** 2)
            parts.append(f"{vdd:g} V: {ratio:.2f}")
            assert row.oscillating
            assert 0.5 <= ratio <= 2.0
        rec["detail"] = "P / fCV^2 " + ", ".join(parts)


# ---------------------------------------------------------------- 9


def test_criterion_09_parser(criterion):
    with criterion(9, "parser: golden round trip, line-numbered errors, value suite", budget=1.0) as rec:
        canonical = write_netlist(parse_netlist(GOLDEN.read_text()))
        assert write_netlist(parse_netlist(canonical)) == canonical
        for text, line in MALFORMED_CASES:
            with pytest.raises(NetlistError) as info:
                parse_netlist(text)
            assert info.value.line == line and f"line {line}" in str(info.value)
        for token, value in VALUE_CASES:
            assert parse_value(token) == value
        rec["detail"] = f"{len(MALFORMED_CASES)} malformed cases, {len(VALUE_CASES)} values"


# ---------------------------------------------------------------- 10


def test_criterion_10_determinism(criterion, tmp_path):
    with criterion(10, "repeated sweep invocations give byte-identical CSVs") as rec:
        outs = []
        for tag in ("a", "b"):
            prefix = tmp_path / tag
            subprocess.run([sys.executable, "-m", "ringspice.cli", "sweep", "--vdd-list", "3.0,1.0",
                            "--vcont-start", "0.6", "--vcont-step", "0.2", "--output", str(prefix)],
                           check=True, capture_output=True)
            outs.append((tmp_path / f"{tag}_sweep.csv").read_bytes())
        rec["detail"] = f"{len(outs[0].splitlines()) - 1} rows"
        assert outs[0] == outs[1]
