"""Modified nodal analysis: DC operating point and fixed-step transient.

Unknowns are the non-ground node voltages followed by one branch current
per voltage source. MOSFETs contribute their channel current, two bulk
junction diodes and a gate-to-bulk capacitance ``w * l * cg_per_area``.

Source currents are reported as the current a source *delivers* out of
its positive terminal, so a supply feeding a circuit reads positive.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels as K
from .models import mos_param_row
from .netlist import GROUND, Capacitor, Circuit, Diode, ISource, Mosfet, Resistor, VSource

__all__ = [
    "Method",
    "SolverSettings",
    "ConvergenceError",
    "OperatingPoint",
    "WaveformSet",
    "compile_circuit",
    "dc_operating_point",
    "transient",
    "gate_capacitance",
]


class Method(enum.Enum):
    BACKWARD_EULER = "be"
    TRAPEZOIDAL = "trap"


class ConvergenceError(RuntimeError):
    def __init__(self, message, node=None, time=None):
        self.node = node
        self.time = time
        super().__init__(message)


@dataclass(frozen=True)
class SolverSettings:
    abstol: float = 1e-12
    reltol: float = 1e-4
    vntol: float = 1e-6
    max_newton: int = 100
    gmin: float = 1e-12
    dt: Optional[float] = None
    tstop: Optional[float] = None
    method: Method = Method.TRAPEZOIDAL
    be_startup_steps: int = 10
    voltage_limit: float = 0.5
    max_halvings: int = 8

    def __post_init__(self):
        if isinstance(self.method, str):
            object.__setattr__(self, "method", Method(self.method))
        for name in ("abstol", "reltol", "vntol", "gmin", "voltage_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_newton < 1:
            raise ValueError("max_newton must be >= 1")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt is not None and self.tstop is not None and not self.tstop > self.dt:
            raise ValueError("tstop must exceed dt")


def gate_capacitance(el: Mosfet, circuit: Circuit) -> float:
    return el.w * el.l * circuit.models[el.model].cg_per_area


@dataclass
class CompiledCircuit:
    """Flat arrays for the compiled kernels."""

    node_index: Dict[str, int]
    vsources: List[str]
    nn: int
    G0: np.ndarray
    rhs0: np.ndarray
    cap_a: np.ndarray
    cap_b: np.ndarray
    cap_c: np.ndarray
    dio_a: np.ndarray
    dio_b: np.ndarray
    dio_p: np.ndarray
    mos_t: np.ndarray
    mos_p: np.ndarray

    @property
    def size(self) -> int:
        return self.G0.shape[0]


def compile_circuit(circuit: Circuit, holds: Sequence[Tuple[str, str, float]] = ()) -> CompiledCircuit:
    """Build MNA arrays. ``holds`` adds temporary (a, b, volts) voltage constraints."""
    index = {GROUND: -1}
    for name in circuit.nodes:
        if name != GROUND:
            index[name] = len(index) - 1
    nn = len(index) - 1
    vsrc = [el for el in circuit.elements if isinstance(el, VSource)]
    rows = [(index[el.p], index[el.n], el.volts) for el in vsrc]
    rows += [(index[a], index[b], v) for a, b, v in holds]
    size = nn + len(rows)
    G0 = np.zeros((size, size))
    rhs0 = np.zeros(size)

    def conductance(a, b, g):
        if a >= 0:
            G0[a, a] += g
        if b >= 0:
            G0[b, b] += g
        if a >= 0 and b >= 0:
            G0[a, b] -= g
            G0[b, a] -= g

    caps, dios, mos_t, mos_p = [], [], [], []
    for el in circuit.elements:
        if isinstance(el, Resistor):
            conductance(index[el.a], index[el.b], 1.0 / el.ohms)
        elif isinstance(el, Capacitor):
            caps.append((index[el.a], index[el.b], el.farads))
        elif isinstance(el, ISource):
            # current flows from p through the source to n
            a, b = index[el.p], index[el.n]
            if a >= 0:
                rhs0[a] -= el.amps
            if b >= 0:
                rhs0[b] += el.amps
        elif isinstance(el, Diode):
            card = circuit.models[el.model]
            dios.append((index[el.a], index[el.c], card.diode_is, card.diode_n, card.thermal_voltage(),
                         card.diode_rs))
        elif isinstance(el, Mosfet):
            card = circuit.models[el.model]
            mos_t.append((index[el.d], index[el.g], index[el.s], index[el.b]))
            mos_p.append(mos_param_row(card, el.w, el.l))
            cg = gate_capacitance(el, circuit)
            if cg > 0 and el.g != el.b:
                caps.append((index[el.g], index[el.b], cg))
    for k, (a, b, v) in enumerate(rows):
        r = nn + k
        if a >= 0:
            G0[a, r] += 1.0
            G0[r, a] += 1.0
        if b >= 0:
            G0[b, r] -= 1.0
            G0[r, b] -= 1.0
        rhs0[r] = v
    cap_arr = np.array(caps, dtype=float).reshape(-1, 3)
    dio_arr = np.array(dios, dtype=float).reshape(-1, 6)
    return CompiledCircuit(
        node_index=index,
        vsources=[el.name for el in vsrc],
        nn=nn,
        G0=G0,
        rhs0=rhs0,
        cap_a=cap_arr[:, 0].astype(np.int64),
        cap_b=cap_arr[:, 1].astype(np.int64),
        cap_c=cap_arr[:, 2].copy(),
        dio_a=dio_arr[:, 0].astype(np.int64),
        dio_b=dio_arr[:, 1].astype(np.int64),
        dio_p=dio_arr[:, 2:].copy(),
        mos_t=np.array(mos_t, dtype=np.int64).reshape(-1, 4),
        mos_p=np.array(mos_p, dtype=float).reshape(-1, K.MOS_NCOL),
    )


@dataclass(frozen=True)
class OperatingPoint:
    voltages: Dict[str, float]
    currents: Dict[str, float]
    iterations: int
    gmin: float

    def __getitem__(self, node: str) -> float:
        return self.voltages[node]


def _newton(cc: CompiledCircuit, x0, gextra, settings, rhs=None):
    ncap = cc.cap_a.shape[0]
    zeros = np.zeros(ncap)
    return K.newton(x0, cc.nn, cc.G0, cc.rhs0 if rhs is None else rhs, gextra,
                    cc.cap_a, cc.cap_b, zeros, zeros,
                    cc.dio_a, cc.dio_b, cc.dio_p, cc.mos_t, cc.mos_p,
                    settings.abstol, settings.reltol, settings.vntol,
                    settings.max_newton, settings.voltage_limit)


def _node_name(cc: CompiledCircuit, idx: int) -> str:
    for name, i in cc.node_index.items():
        if i == idx:
            return name
    if idx >= cc.nn:
        k = idx - cc.nn
        return f"i({cc.vsources[k]})" if k < len(cc.vsources) else f"hold#{k - len(cc.vsources)}"
    return "?"


def _continuation(step, start, stop, x, n_initial, max_refine=12):
    """Walk a continuation parameter from ``start`` to ``stop`` (log-spaced).

    ``step(x, p)`` returns ``(x, ok, iterations, worst)``. Failed steps are
    bisected (in log space) up to ``max_refine`` times in a row.
    """
    total = 0
    ratio = (stop / start) ** (1.0 / n_initial)
    p_good = None
    p_next = start
    refine = 0
    worst = 0
    while True:
        xn, ok, its, worst = step(x, p_next)
        total += its
        if ok:
            x = xn
            p_good = p_next
            refine = 0
            if p_good == stop:
                return x, True, total, worst
            p_next = p_good * ratio
            if (ratio < 1 and p_next < stop) or (ratio > 1 and p_next > stop):
                p_next = stop
            continue
        if p_good is None or refine >= max_refine:
            return x, False, total, worst
        refine += 1
        p_next = math.sqrt(p_good * p_next)


def _solve_dc(cc: CompiledCircuit, settings: SolverSettings, x0=None):
    x = np.zeros(cc.size) if x0 is None else np.array(x0, dtype=float)
    xs, ok, total, worst = _newton(cc, x, settings.gmin, settings)
    if ok:
        return xs, total, settings.gmin
    # gmin stepping: 1e-3 S down to the target in decades, refined on failure
    n_dec = max(1, int(round(math.log10(1e-3 / settings.gmin))))
    xs, ok, its, worst = _continuation(lambda xx, g: _newton(cc, xx, g, settings),
                                       1e-3, settings.gmin, x, n_dec)
    total += its
    if ok:
        return xs, total, settings.gmin
    # last resort: ramp the independent sources up from 1 %
    xs, ok, its, worst = _continuation(
        lambda xx, a: _newton(cc, xx, settings.gmin, settings, rhs=cc.rhs0 * a),
        1e-2, 1.0, np.zeros(cc.size), 8)
    total += its
    if ok:
        return xs, total, settings.gmin
    name = _node_name(cc, worst)
    raise ConvergenceError(f"DC operating point did not converge after gmin and source "
                           f"stepping; worst unknown: {name}", node=name)


def _unpack(cc: CompiledCircuit, x) -> Tuple[Dict[str, float], Dict[str, float]]:
    volts = {name: (0.0 if i < 0 else float(x[i])) for name, i in cc.node_index.items()}
    currents = {name: -float(x[cc.nn + k]) for k, name in enumerate(cc.vsources)}
    return volts, currents


def dc_operating_point(circuit: Circuit, settings: Optional[SolverSettings] = None) -> OperatingPoint:
    """Nonlinear DC solution by damped Newton with gmin stepping fallback."""
    settings = settings or SolverSettings()
    cc = compile_circuit(circuit)
    x, its, g = _solve_dc(cc, settings)
    volts, currents = _unpack(cc, x)
    return OperatingPoint(volts, currents, its, g)


def _initial_state(circuit: Circuit, cc: CompiledCircuit, settings: SolverSettings) -> np.ndarray:
    holds = [(node, GROUND, v) for node, v in circuit.ic]
    holds += [(el.a, el.b, el.ic) for el in circuit.elements
              if isinstance(el, Capacitor) and el.ic is not None]
    if not holds:
        x, _, _ = _solve_dc(cc, settings)
        return x
    held = compile_circuit(circuit, holds)
    x, _, _ = _solve_dc(held, settings)
    return x[:cc.size].copy()


@dataclass(frozen=True)
class WaveformSet:
    """Uniformly sampled signals; names look like ``v(t0)`` and ``i(vdd)``."""

    time: np.ndarray
    signals: Mapping[str, np.ndarray]
    dt: float
    kcl_residual: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        n = len(self.time)
        for name, sig in self.signals.items():
            if len(sig) != n:
                raise ValueError(f"signal {name} has {len(sig)} samples, expected {n}")

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.signals[name]
        except KeyError:
            raise KeyError(f"unknown signal {name!r}; have {sorted(self.signals)}") from None

    @property
    def names(self) -> List[str]:
        return list(self.signals)

    def to_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_s"] + self.names)
            cols = [self.time] + [self.signals[n] for n in self.names]
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "WaveformSet":
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], dtype=float)
        if header[0] != "time_s":
            raise ValueError("first column must be time_s")
        time = body[:, 0]
        dt = float(time[1] - time[0]) if len(time) > 1 else 0.0
        return cls(time, {name: body[:, k + 1] for k, name in enumerate(header[1:])}, dt)


def transient(circuit: Circuit, settings: Optional[SolverSettings] = None) -> WaveformSet:
    """Fixed-step transient from ``.ic`` values or the DC operating point.

    The first ``settings.be_startup_steps`` steps use backward Euler even
    when the trapezoidal rule is selected. Steps that fail to converge are
    retried with the step halved, up to ``settings.max_halvings`` times.
    """
    settings = settings or SolverSettings()
    dt, tstop = settings.dt, settings.tstop
    method = settings.method
    if circuit.tran is not None:
        dt = dt if dt is not None else circuit.tran.tstep
        tstop = tstop if tstop is not None else circuit.tran.tstop
        if settings.dt is None:
            method = Method(circuit.tran.method)
    if dt is None or tstop is None:
        raise ValueError("transient needs dt and tstop (settings or .tran)")
    if not tstop > dt:
        raise ValueError("tstop must exceed dt")
    nsteps = int(round(tstop / dt))
    cc = compile_circuit(circuit)
    x0 = _initial_state(circuit, cc, settings)
    trap = method is Method.TRAPEZOIDAL
    X, status, t_fail, res = K.run_transient(
        x0, cc.nn, cc.G0, cc.rhs0, settings.gmin, cc.cap_a, cc.cap_b, cc.cap_c,
        cc.dio_a, cc.dio_b, cc.dio_p, cc.mos_t, cc.mos_p,
        float(dt), nsteps, trap, settings.be_startup_steps,
        settings.abstol, settings.reltol, settings.vntol, settings.max_newton,
        settings.voltage_limit, settings.max_halvings)
    if status == K.STATUS_NON_FINITE:
        raise ConvergenceError(f"non-finite state at t={t_fail:.6g} s", time=t_fail)
    if status != K.STATUS_OK:
        raise ConvergenceError(f"transient step failed at t={t_fail:.6g} s after "
                               f"{settings.max_halvings} halvings", time=t_fail)
    time = np.arange(nsteps + 1) * dt
    signals = {}
    probes = circuit.probes or tuple(f"v:{n}" for n in circuit.nodes if n != GROUND)
    for p in probes:
        kind, _, target = p.partition(":")
        if kind == "v":
            signals[f"v({target})"] = X[:, cc.node_index[target]].copy()
    for k, name in enumerate(cc.vsources):
        signals[f"i({name})"] = -X[:, cc.nn + k]
    for sig in signals.values():
        sig.setflags(write=False)
    time.setflags(write=False)
    return WaveformSet(time, signals, float(dt), res)
