"""Oscillator metrics from transient waveforms.

Frequency comes from mean crossings rather than a spectrum: the taps are
only roughly sinusoidal and get visibly distorted at low supply, and a
crossing count needs no window tuning. Unless told otherwise every metric
looks at the last half of the record.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .engine import WaveformSet

__all__ = [
    "NotOscillatingError",
    "OscMetrics",
    "default_window",
    "rising_crossings",
    "estimate_frequency",
    "phase_difference",
    "average_current",
    "detect_oscillation",
    "measure_ring",
    "is_quadrature",
    "METRICS_CSV_HEADER",
]

Window = Tuple[float, float]

METRICS_CSV_HEADER = ("vdd_v", "vcont_v", "freq_hz", "iavg_a", "oscillating")


class NotOscillatingError(ValueError):
    """Too few crossings in the window to call the signal periodic."""


@dataclass(frozen=True)
class OscMetrics:
    frequency: float
    phases_deg: Tuple[float, ...]
    amplitude: Tuple[float, ...]
    i_avg: float
    oscillating: bool
    analysis_window: Window
    tap_names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.oscillating != (self.frequency > 0):
            raise ValueError("frequency must be positive exactly when oscillating")
        if self.phases_deg and self.phases_deg[0] != 0.0:
            raise ValueError("phase of the reference tap must be 0")
        if any(not 0.0 <= p < 360.0 for p in self.phases_deg):
            raise ValueError("phases must lie in [0, 360)")

    def report(self) -> str:
        names = self.tap_names or tuple(f"tap{k}" for k in range(len(self.amplitude)))
        lines = [
            f"oscillating      : {'yes' if self.oscillating else 'no'}",
            f"frequency        : {self.frequency:.6g} Hz",
            f"average current  : {self.i_avg:.6g} A",
            f"analysis window  : {self.analysis_window[0]:.6g} .. {self.analysis_window[1]:.6g} s",
        ]
        for k, name in enumerate(names):
            ph = f"{self.phases_deg[k]:7.2f} deg" if k < len(self.phases_deg) else "      -"
            lines.append(f"  {name:<8} phase {ph}   p-p {self.amplitude[k]:.4g} V")
        return "\n".join(lines) + "\n"

    def csv_row(self, vdd: float, vcont: float) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(
            [repr(float(vdd)), repr(float(vcont)), repr(float(self.frequency)),
             repr(float(self.i_avg)), int(self.oscillating)])
        return buf.getvalue()


def default_window(w: WaveformSet) -> Window:
    """Second half of the record."""
    return float(w.time[len(w.time) // 2]), float(w.time[-1])


def _slice(w: WaveformSet, signal: str, window: Optional[Window]):
    window = window or default_window(w)
    t0, t1 = window
    if t0 > t1 or t0 < w.time[0] - 1e-15 * abs(w.time[-1]) or t1 > w.time[-1] * (1 + 1e-12):
        raise ValueError(f"window {window} is not inside the record")
    i0 = int(np.searchsorted(w.time, t0, side="left"))
    i1 = int(np.searchsorted(w.time, t1, side="right"))
    return w.time[i0:i1], np.asarray(w[signal][i0:i1], dtype=float)


def rising_crossings(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Interpolated times where ``v - mean(v)`` crosses zero going up."""
    u = v - v.mean()
    idx = np.nonzero((u[:-1] < 0) & (u[1:] >= 0))[0]
    frac = -u[idx] / (u[idx + 1] - u[idx])
    return t[idx] + frac * (t[idx + 1] - t[idx])


def estimate_frequency(w: WaveformSet, signal: str, window: Optional[Window] = None) -> float:
    t, v = _slice(w, signal, window)
    tc = rising_crossings(t, v)
    if len(tc) < 4:
        raise NotOscillatingError(f"{signal}: only {len(tc)} rising crossings in window")
    return (len(tc) - 1) / (tc[-1] - tc[0])


def phase_difference(w: WaveformSet, sig_a: str, sig_b: str, f: float,
                     window: Optional[Window] = None) -> float:
    """Phase of ``sig_b`` relative to ``sig_a`` in degrees, in [0, 360).

    Each signal's rising crossings are referred to a clock at ``f``; the
    circular mean of 2 pi f t_k gives one phase per signal and the answer is
    their difference, so positive values mean ``b`` lags ``a``.
    """
    for name in (sig_a, sig_b):
        fx = estimate_frequency(w, name, window)
        if abs(fx - f) > 0.01 * f:
            raise ValueError(f"{name} oscillates at {fx:.6g} Hz, not {f:.6g} Hz")
    phis = []
    for name in (sig_a, sig_b):
        t, v = _slice(w, name, window)
        tc = rising_crossings(t, v)
        phis.append(np.angle(np.mean(np.exp(2j * np.pi * f * (tc - t[0])))))
    deg = float(np.degrees(phis[1] - phis[0])) % 360.0
    return 0.0 if deg == 360.0 else deg


def average_current(w: WaveformSet, source_current: str, window: Optional[Window] = None,
                    f: Optional[float] = None) -> float:
    """Trapezoidal time average of a source current.

    When ``f`` is given the window is shortened from its start to the nearest
    whole number of periods, so ripple averages out.
    """
    t0, t1 = window or default_window(w)
    if f is not None and f > 0:
        n = max(1, int(round((t1 - t0) * f)))
        t0 = max(t1 - n / f, float(w.time[0]))
    t, _ = _slice(w, source_current, (t0, t1))
    if t1 <= t0:
        return float(np.interp(t0, w.time, w[source_current]))
    # integrate the exact span; its ends rarely land on samples
    ts = np.concatenate(([t0], t[(t > t0) & (t < t1)], [t1]))
    vals = np.interp(ts, w.time, np.asarray(w[source_current], dtype=float))
    return float(np.trapezoid(vals, ts) / (t1 - t0))


def detect_oscillation(w: WaveformSet, signal: str, vdd: Optional[float] = None,
                       window: Optional[Window] = None) -> Tuple[bool, float]:
    """Sustained-oscillation test on two halves of the window.

    Needs >= 4 mean crossings in each half, a second-half swing at least 80 %
    of the first-half swing, and a swing of at least 1 % of ``vdd`` (when
    given). Returns ``(flag, second-half peak-to-peak)``.
    """
    t, v = _slice(w, signal, window)
    if len(t) < 8:
        return False, 0.0
    h = len(t) // 2
    halves = [(t[:h], v[:h]), (t[h:], v[h:])]
    amps = [float(np.ptp(x)) for _, x in halves]
    crossings = [len(rising_crossings(tt, x)) for tt, x in halves]
    amp = amps[1]
    ok = min(crossings) >= 4 and amp >= 0.8 * amps[0] and amp > 0
    if vdd is not None:
        ok = ok and amp >= 0.01 * abs(vdd)
    return bool(ok), amp


def measure_ring(w: WaveformSet, taps: Sequence[str], vdd: float,
                 supply: str = "i(vdd)", window: Optional[Window] = None) -> OscMetrics:
    """Metrics for a ring: frequency of the first tap, tap phases, swing, supply current."""
    window = window or default_window(w)
    taps = tuple(taps)
    osc, _ = detect_oscillation(w, taps[0], vdd, window)
    amps = tuple(float(np.ptp(_slice(w, s, window)[1])) for s in taps)
    f = 0.0
    phases: Tuple[float, ...] = ()
    if osc:
        try:
            f = estimate_frequency(w, taps[0], window)
            phases = (0.0,) + tuple(phase_difference(w, taps[0], s, f, window) for s in taps[1:])
        except (NotOscillatingError, ValueError):
            # taps not locked to one frequency: treat as not oscillating
            osc, f, phases = False, 0.0, ()
    i_avg = average_current(w, supply, window, f if osc else None)
    return OscMetrics(frequency=f, phases_deg=phases, amplitude=amps, i_avg=i_avg,
                      oscillating=osc, analysis_window=window, tap_names=taps)


def is_quadrature(phases_deg: Sequence[float], tol_deg: float = 5.0) -> bool:
    """True when the N phases cover the N multiples of 360/N, each within ``tol_deg``.

    The rotation direction is not checked: {0, 90, 180, 270} and
    {0, 270, 180, 90} both pass.
    """
    n = len(phases_deg)
    if n < 2:
        return False
    step = 360.0 / n
    slots = set()
    for p in phases_deg:
        k = int(round(p / step)) % n
        err = abs((p - k * step + 180.0) % 360.0 - 180.0)
        if err > tol_deg:
            return False
        slots.add(k)
    return len(slots) == n
