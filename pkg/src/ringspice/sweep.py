"""Control-voltage sweeps, frequency peak and its locus over supply voltage.

Each grid point is a full transient of a freshly generated ring. The time
step comes from a frequency hint: the seed hint for the first point, then
the frequency measured at the neighbouring point. A point whose measured
frequency is far from its hint is rerun with the measurement as the new
hint, and a point that does not oscillate is retried with slower hints
before it is written down as non-oscillating.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .analysis import OscMetrics, average_current, measure_ring
from .engine import ConvergenceError, SolverSettings, gate_capacitance, transient
from .models import MosModelParams, default_cards_path, load_model_cards, threshold_voltage
from .netlist import Capacitor, Circuit, InverterStyle, Mosfet, RingConfig, build_quadrature_ring, tap_name

__all__ = [
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "Peak",
    "LocusRow",
    "TuningRange",
    "InsufficientDataError",
    "SweepError",
    "vcont_grid",
    "simulate_point",
    "sweep_vcont",
    "find_peak",
    "peak_locus",
    "switched_capacitance",
    "tuning_range_report",
    "write_sweep_csv",
    "write_locus_csv",
    "SWEEP_CSV_HEADER",
    "LOCUS_CSV_HEADER",
]

log = logging.getLogger(__name__)

SWEEP_CSV_HEADER = ("vdd_v", "vcont_v", "freq_hz", "iavg_a", "oscillating")
LOCUS_CSV_HEADER = ("vdd_v", "vcont_star_v", "fmax_hz", "boundary_flag")

# retry policy for a single grid point
MAX_SLOWDOWNS = 5  # hint /10 each time the ring looks dead
MAX_REFITS = 3  # reruns with the measured frequency as hint
HINT_BAND = 2.0  # accept when hint/2 <= f <= 2 hint


class InsufficientDataError(ValueError):
    pass


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    """One sweep job.

    ``vcont_range`` is ``(start, stop, step)``; ``stop=None`` means "up to
    each supply". With bulk control, grid points above the supply are dropped
    since the well is never driven past V_DD. ``full_swing_start`` replaces
    the ring's kick by V_DD / 2 so each point starts on a rail-to-rail
    pattern; near-symmetric starts can take tens of periods to grow at low
    supply, which eats the analysis window. ``jobs > 1`` runs the supplies in
    parallel processes; the hint chain never crosses supplies, so the rows do
    not depend on it.
    """

    ring: RingConfig = field(default_factory=RingConfig)
    vdd_list: Tuple[float, ...] = (3.0,)
    vcont_range: Tuple[float, Optional[float], float] = (0.0, None, 0.025)
    model_card_file: Optional[Union[str, Path]] = None
    output: Optional[str] = None
    seed_frequency_hint: float = 500e6
    periods: int = 40
    points_per_period: int = 200
    full_swing_start: bool = True
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "vdd_list", tuple(float(v) for v in self.vdd_list))
        start, stop, step = self.vcont_range
        if not step > 0:
            raise ValueError("vcont step must be positive")
        if stop is not None and start > stop:
            raise ValueError("vcont start must not exceed stop")
        if not self.vdd_list or min(self.vdd_list) <= 0:
            raise ValueError("vdd_list needs positive supplies")
        if self.ring.inverter_style is InverterStyle.BULK_CONTROLLED:
            top = max(self.vdd_list)
            if start < 0 or (stop is not None and stop > top + 1e-12):
                raise ValueError(f"vcont must stay within [0, {top}] for bulk control")
        if not self.seed_frequency_hint > 0:
            raise ValueError("seed_frequency_hint must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.periods < 20 or self.points_per_period < 20:
            raise ValueError("need at least 20 periods and 20 points per period")

    def load_models(self) -> Dict[str, MosModelParams]:
        return load_model_cards(self.model_card_file or default_cards_path("035"))


@dataclass(frozen=True)
class SweepRow:
    vdd: float
    vcont: float
    frequency: float
    i_avg: float
    oscillating: bool
    i_bulk: float = 0.0  # current sunk by the control node
    diode_region: bool = False
    phases_deg: Tuple[float, ...] = ()
    amplitude: float = 0.0
    hint: float = 0.0
    failed: Optional[str] = None


@dataclass(frozen=True)
class Peak:
    vcont_star: float
    f_max: float
    boundary: bool


@dataclass(frozen=True)
class LocusRow:
    vdd: float
    vcont_star: float
    f_max: float
    boundary: bool
    error: Optional[str] = None


@dataclass(frozen=True)
class TuningRange:
    vdd: float
    f_min: float
    f_max: float
    relative_range: float
    error: Optional[str] = None


@dataclass(frozen=True)
class SweepResult:
    rows: Tuple[SweepRow, ...]
    peaks: Mapping[float, Optional[Peak]] = field(default_factory=dict)

    @property
    def vdds(self) -> List[float]:
        return sorted({r.vdd for r in self.rows})

    def at(self, vdd: float) -> List[SweepRow]:
        return sorted((r for r in self.rows if r.vdd == vdd), key=lambda r: r.vcont)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_CSV_HEADER)
        for r in sorted(self.rows, key=lambda r: (r.vdd, r.vcont)):
            w.writerow([repr(r.vdd), repr(r.vcont), repr(float(r.frequency)),
                        repr(float(r.i_avg)), int(r.oscillating)])
        return buf.getvalue()


def vcont_grid(spec: SweepSpec, vdd: float) -> List[float]:
    start, stop, step = spec.vcont_range
    stop = vdd if stop is None else stop
    if spec.ring.inverter_style is not InverterStyle.CURRENT_STARVED:
        stop = min(stop, vdd)
    if stop < start - 1e-12:
        return []
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(n)]


def _bulk_flag(models: Mapping[str, MosModelParams], cfg: RingConfig) -> bool:
    if cfg.inverter_style is not InverterStyle.BULK_CONTROLLED:
        return False
    return threshold_voltage(models[cfg.pmos_model], cfg.vdd - cfg.vcont)[1]


def _run_once(cfg: RingConfig, models, hint: float, periods: int,
              ppp: int) -> Tuple[OscMetrics, float]:
    circuit = build_quadrature_ring(cfg, models)
    settings = SolverSettings(dt=1.0 / (ppp * hint), tstop=periods / hint)
    w = transient(circuit, settings)
    taps = [f"v({tap_name(k)})" for k in range(cfg.stages)]
    m = measure_ring(w, taps, cfg.vdd)
    if cfg.inverter_style is InverterStyle.BULK_CONTROLLED:
        i_bulk = -average_current(w, "i(vcont)", m.analysis_window,
                                  m.frequency if m.oscillating else None)
    else:
        i_bulk = 0.0
    return m, i_bulk


def simulate_point(cfg: RingConfig, models: Mapping[str, MosModelParams], hint: float,
                   periods: int = 40, points_per_period: int = 200) -> SweepRow:
    """One grid point with hint refitting; engine failures become a failed row."""
    slowdowns = refits = 0
    flag = _bulk_flag(models, cfg)
    while True:
        try:
            m, i_bulk = _run_once(cfg, models, hint, periods, points_per_period)
        except ConvergenceError as exc:
            log.warning("vdd=%g vcont=%g: %s", cfg.vdd, cfg.vcont, exc)
            return SweepRow(cfg.vdd, cfg.vcont, 0.0, float("nan"), False,
                            diode_region=flag, hint=hint, failed=str(exc))
        if m.oscillating:
            ratio = m.frequency / hint
            if 1 / HINT_BAND <= ratio <= HINT_BAND or refits >= MAX_REFITS:
                break
            hint = m.frequency
            refits += 1
        elif slowdowns < MAX_SLOWDOWNS:
            hint /= 10.0
            slowdowns += 1
        else:
            break
    return SweepRow(cfg.vdd, cfg.vcont, m.frequency, m.i_avg, m.oscillating,
                    i_bulk=i_bulk, diode_region=flag, phases_deg=m.phases_deg,
                    amplitude=m.amplitude[0], hint=hint)


def _peaks(result_rows: Sequence[SweepRow]) -> Dict[float, Optional[Peak]]:
    tmp = SweepResult(tuple(result_rows))
    peaks = {}
    for vdd in tmp.vdds:
        try:
            peaks[vdd] = find_peak(tmp, vdd)
        except InsufficientDataError:
            peaks[vdd] = None
    return peaks


def _sweep_one_supply(spec: SweepSpec, models: Mapping[str, MosModelParams],
                      vdd: float) -> List[SweepRow]:
    rows = []
    hint = spec.seed_frequency_hint
    for vc in reversed(vcont_grid(spec, vdd)):
        kick = vdd / 2 if spec.full_swing_start else spec.ring.kick
        cfg = spec.ring.replace(vdd=vdd, vcont=vc, kick=kick)
        row = simulate_point(cfg, models, hint, spec.periods, spec.points_per_period)
        log.info("vdd=%g vcont=%g f=%.6g osc=%s", vdd, vc, row.frequency, row.oscillating)
        rows.append(row)
        if row.oscillating:
            hint = row.frequency
    return rows


def sweep_vcont(spec: SweepSpec, models: Optional[Mapping[str, MosModelParams]] = None) -> SweepResult:
    """Run every (vdd, vcont) grid point of ``spec``.

    Each supply is swept from the top of its control range downward, where
    the ring is most robust, chaining the hint from point to point. Repeated
    supplies in ``vdd_list`` are simulated once.
    """
    models = dict(models or spec.load_models())
    vdds = list(dict.fromkeys(spec.vdd_list))
    if spec.jobs > 1 and len(vdds) > 1:
        with ProcessPoolExecutor(max_workers=min(spec.jobs, len(vdds))) as pool:
            per_vdd = list(pool.map(_sweep_one_supply, [spec] * len(vdds),
                                    [models] * len(vdds), vdds))
    else:
        per_vdd = [_sweep_one_supply(spec, models, vdd) for vdd in vdds]
    rows = [r for chunk in per_vdd for r in chunk]
    if not rows:
        raise SweepError("empty vcont grid")
    if all(r.failed for r in rows):
        raise SweepError("every grid point failed: " + rows[0].failed)
    rows.sort(key=lambda r: (r.vdd, r.vcont))
    result = SweepResult(tuple(rows), _peaks(rows))
    if spec.output:
        write_sweep_csv(result, f"{spec.output}_sweep.csv")
    return result


def find_peak(result: SweepResult, vdd: float) -> Peak:
    """Grid argmax over oscillating rows, refined by a 3-point parabola.

    An argmax on the first or last oscillating row is returned as is with
    ``boundary=True``.
    """
    rows = [r for r in result.at(vdd) if r.oscillating]
    if len(rows) < 3:
        raise InsufficientDataError(f"vdd={vdd}: {len(rows)} oscillating rows, need 3")
    x = np.array([r.vcont for r in rows])
    y = np.array([r.frequency for r in rows])
    k = int(np.argmax(y))
    if k == 0 or k == len(rows) - 1:
        return Peak(float(x[k]), float(y[k]), True)
    x0, x1, x2 = x[k - 1:k + 2]
    y0, y1, y2 = y[k - 1:k + 2]
    # vertex of the parabola through three (possibly uneven) points
    d01, d12, d02 = (y1 - y0) / (x1 - x0), (y2 - y1) / (x2 - x1), x2 - x0
    a = (d12 - d01) / d02
    if a >= 0:
        return Peak(float(x1), float(y1), False)
    b = d01 - a * (x0 + x1)
    xs = -b / (2 * a)
    xs = min(max(xs, x0), x2)
    ys = y0 + d01 * (xs - x0) + a * (xs - x0) * (xs - x1)
    return Peak(float(xs), float(ys), False)


def peak_locus(spec: SweepSpec, models: Optional[Mapping[str, MosModelParams]] = None
               ) -> Tuple[List[LocusRow], SweepResult]:
    """``(vdd, vcont_star, f_max)`` per supply, sorted by supply, plus the sweep behind it."""
    if len(spec.vdd_list) < 2:
        raise ValueError("peak_locus needs at least two supply voltages")
    result = sweep_vcont(spec, models)
    out = []
    for vdd in spec.vdd_list:
        try:
            p = find_peak(result, vdd)
            out.append(LocusRow(vdd, p.vcont_star, p.f_max, p.boundary))
        except InsufficientDataError as exc:
            out.append(LocusRow(vdd, float("nan"), float("nan"), False, str(exc)))
    out.sort(key=lambda r: r.vdd)
    if spec.output:
        write_locus_csv(out, f"{spec.output}_locus.csv")
    return out, result


def tuning_range_report(result: SweepResult) -> List[TuningRange]:
    out = []
    for vdd in result.vdds:
        f = [r.frequency for r in result.at(vdd) if r.oscillating]
        if len(f) < 2:
            out.append(TuningRange(vdd, float("nan"), float("nan"), float("nan"),
                                   f"vdd={vdd}: {len(f)} oscillating rows, need 2"))
            continue
        lo, hi = min(f), max(f)
        out.append(TuningRange(vdd, lo, hi, (hi - lo) / hi))
    return out


def switched_capacitance(circuit: Circuit) -> float:
    """Lumped capacitors plus every gate (w l cg_per_area), the C of f C V^2."""
    c = sum(el.farads for el in circuit.elements if isinstance(el, Capacitor))
    c += sum(gate_capacitance(el, circuit) for el in circuit.elements if isinstance(el, Mosfet))
    return c


def write_sweep_csv(result: SweepResult, path: Union[str, Path]) -> None:
    Path(path).write_text(result.to_csv_text())


def write_locus_csv(locus: Sequence[LocusRow], path: Union[str, Path]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOCUS_CSV_HEADER)
    for r in locus:
        w.writerow([repr(r.vdd), repr(float(r.vcont_star)), repr(float(r.f_max)), int(r.boundary)])
    Path(path).write_text(buf.getvalue())
