"""Netlist subset, circuit container and oscillator topology generators.

Grammar (case-insensitive, line oriented)::

    <title line>
    * comment
    Mname d g s b model W=<val> L=<val>
    Rname a b <val>
    Cname a b <val> [IC=<val>]
    Vname p n [DC] <val>
    Iname p n [DC] <val>
    Dname anode cathode model
    .model name nmos|pmos key=<val> ...
    .tran tstep tstop [trap|be]
    .probe v(node) i(vsource) ...
    .ic v(node)=<val> ...
    .end
    + continues the previous line

Node ``0`` is ground. Anything outside this grammar is a syntax error.
``D`` elements use the bulk-junction parameters of the named model card.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .models import MosModelParams, Polarity

__all__ = [
    "NetlistError",
    "Mosfet",
    "Resistor",
    "Capacitor",
    "VSource",
    "ISource",
    "Diode",
    "Tran",
    "Circuit",
    "InverterStyle",
    "RingConfig",
    "parse_value",
    "format_value",
    "parse_netlist",
    "write_netlist",
    "build_quadrature_ring",
    "build_plain_ring",
    "tap_name",
]

GROUND = "0"


class NetlistError(ValueError):
    """Malformed netlist or inconsistent circuit."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


# --------------------------------------------------------------------------
# values
# --------------------------------------------------------------------------

# decimal exponent per suffix; applying it in Decimal keeps "2.5u" == 2.5e-6 exactly
_SUFFIX = {"f": -15, "p": -12, "n": -9, "u": -6, "m": -3, "k": 3, "meg": 6, "g": 9}
_VALUE_RE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)(meg|[fpnumkg])?([a-z]*)$", re.IGNORECASE)
_FORMAT_STEPS = [("g", 1e9), ("meg", 1e6), ("k", 1e3), ("", 1.0), ("m", 1e-3),
                 ("u", 1e-6), ("n", 1e-9), ("p", 1e-12), ("f", 1e-15)]


def parse_value(token: str) -> float:
    """Number with optional SI suffix and trailing unit letters ("2meg", "100nF")."""
    m = _VALUE_RE.match(token.strip())
    if not m:
        raise NetlistError(f"malformed number {token!r}")
    if not m.group(2):
        return float(m.group(1))
    return float(Decimal(m.group(1)).scaleb(_SUFFIX[m.group(2).lower()]))


def format_value(x: float) -> str:
    """Shortest suffixed spelling that parses back to exactly ``x``."""
    x = float(x)
    if x == 0.0 or not math.isfinite(x):
        return repr(x)
    ax = abs(x)
    if ax >= 1e12 or ax < 1e-15:
        # beyond the suffix table: plain exponent form
        for digits in range(1, 18):
            text = f"{x:.{digits}g}"
            if float(text) == x:
                return text
    for suffix, scale in _FORMAT_STEPS:
        if ax >= scale:
            break
    for digits in range(1, 18):
        mantissa = f"{x / scale:.{digits}g}"
        if "e" in mantissa:
            continue
        if parse_value(mantissa + suffix) == x:
            return mantissa + suffix
    return repr(x)


# --------------------------------------------------------------------------
# circuit data
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Mosfet:
    name: str
    d: str
    g: str
    s: str
    b: str
    model: str
    w: float
    l: float

    @property
    def terminals(self):
        return (self.d, self.g, self.s, self.b)


@dataclass(frozen=True)
class Resistor:
    name: str
    a: str
    b: str
    ohms: float

    @property
    def terminals(self):
        return (self.a, self.b)


@dataclass(frozen=True)
class Capacitor:
    name: str
    a: str
    b: str
    farads: float
    ic: Optional[float] = None

    @property
    def terminals(self):
        return (self.a, self.b)


@dataclass(frozen=True)
class VSource:
    name: str
    p: str
    n: str
    volts: float

    @property
    def terminals(self):
        return (self.p, self.n)


@dataclass(frozen=True)
class ISource:
    name: str
    p: str
    n: str
    amps: float

    @property
    def terminals(self):
        return (self.p, self.n)


@dataclass(frozen=True)
class Diode:
    name: str
    a: str
    c: str
    model: str

    @property
    def terminals(self):
        return (self.a, self.c)


@dataclass(frozen=True)
class Tran:
    tstep: float
    tstop: float
    method: str = "trap"


@dataclass(frozen=True)
class Circuit:
    """Validated, immutable element graph.

    ``nodes`` is ordered by first appearance with ground first. Construct
    through :meth:`create` (or the parser / generators), which checks model
    references and connectivity.
    """

    title: str
    nodes: Tuple[str, ...]
    elements: Tuple
    models: Mapping[str, MosModelParams]
    tran: Optional[Tran] = None
    probes: Tuple[str, ...] = ()
    ic: Tuple[Tuple[str, float], ...] = ()

    @classmethod
    def create(cls, title, elements, models, tran=None, probes=(), ic=()) -> "Circuit":
        nodes = [GROUND]
        seen = {GROUND}
        names = set()
        for el in elements:
            if el.name in names:
                raise NetlistError(f"duplicate element label {el.name!r}")
            names.add(el.name)
            for t in el.terminals:
                if t not in seen:
                    seen.add(t)
                    nodes.append(t)
        circuit = cls(title=title, nodes=tuple(nodes), elements=tuple(elements),
                      models=dict(models), tran=tran, probes=tuple(probes),
                      ic=tuple((k, float(v)) for k, v in dict(ic).items()))
        circuit.validate()
        return circuit

    def validate(self):
        for el in self.elements:
            if isinstance(el, (Mosfet, Diode)) and el.model not in self.models:
                raise NetlistError(f"element {el.name!r} uses undefined model {el.model!r}")
            if isinstance(el, Mosfet):
                if not (el.w > 0 and el.l > 0):
                    raise NetlistError(f"element {el.name!r}: W and L must be positive")
            if isinstance(el, Resistor) and not el.ohms > 0:
                raise NetlistError(f"element {el.name!r}: resistance must be positive")
            if isinstance(el, Capacitor) and not el.farads > 0:
                raise NetlistError(f"element {el.name!r}: capacitance must be positive")
        # connectivity: union-find over element terminals
        parent = {n: n for n in self.nodes}

        def find(n):
            while parent[n] != n:
                parent[n] = parent[parent[n]]
                n = parent[n]
            return n

        for el in self.elements:
            ts = el.terminals
            for t in ts[1:]:
                parent[find(t)] = find(ts[0])
        root = find(GROUND)
        dangling = [n for n in self.nodes if find(n) != root]
        if dangling:
            raise NetlistError(f"node {dangling[0]!r} has no path to ground")
        sources = {el.name for el in self.elements if isinstance(el, VSource)}
        for p in self.probes:
            kind, _, target = p.partition(":")
            if kind == "v" and target not in self.nodes:
                raise NetlistError(f"probe on unknown node {target!r}")
            if kind == "i" and target not in sources:
                raise NetlistError(f"probe on unknown voltage source {target!r}")
        for node, _ in self.ic:
            if node not in self.nodes or node == GROUND:
                raise NetlistError(f"initial condition on unknown node {node!r}")

    def count(self, kind) -> int:
        return sum(isinstance(el, kind) for el in self.elements)

    def element(self, name: str):
        for el in self.elements:
            if el.name == name:
                return el
        raise KeyError(name)

    def replace(self, **changes) -> "Circuit":
        return Circuit.create(**{**{f.name: getattr(self, f.name) for f in dataclasses.fields(self)
                                    if f.name != "nodes"}, **changes})


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

_MODEL_KEYS = {f.name for f in dataclasses.fields(MosModelParams)} - {"name", "polarity"}
_BOOL_KEYS = {"conventional_body_effect", "bulk_dependent_slope"}


@dataclass
class _Tok:
    text: str
    line: int
    col: int


def _logical_lines(text: str):
    """Yield lists of tokens per logical line (continuations folded in)."""
    current: List[_Tok] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if lineno == 1:
            continue  # title
        stripped = raw.strip()
        if not stripped or stripped.startswith("*"):
            continue
        toks = []
        # parentheses and '=' are separated so "W=1u" and "(vt0=1)" tokenize alike
        for m in re.finditer(r"[^\s=()]+|=|\(|\)", raw):
            toks.append(_Tok(m.group(0).lower(), lineno, m.start() + 1))
        if stripped.startswith("+"):
            if not current:
                raise NetlistError("continuation line with nothing to continue", lineno, 1)
            first = toks[0]
            if first.text == "+":
                toks = toks[1:]
            else:
                first.text = first.text[1:]
                first.col += 1
            current.extend(toks)
            continue
        if current:
            yield current
        current = toks
    if current:
        yield current


def _value(tok: _Tok) -> float:
    try:
        return parse_value(tok.text)
    except NetlistError:
        raise NetlistError(f"malformed number {tok.text!r}", tok.line, tok.col) from None


def _keyvals(toks: Sequence[_Tok]) -> List[Tuple[_Tok, _Tok]]:
    toks = [t for t in toks if t.text not in ("(", ")")]
    out = []
    i = 0
    while i < len(toks):
        if i + 2 >= len(toks) or toks[i + 1].text != "=":
            raise NetlistError(f"expected key=value near {toks[i].text!r}", toks[i].line, toks[i].col)
        out.append((toks[i], toks[i + 2]))
        i += 3
    return out


def _expect(toks: Sequence[_Tok], n: int, what: str):
    if len(toks) < n:
        last = toks[-1]
        raise NetlistError(f"{what}: expected at least {n - 1} fields", last.line, last.col + len(last.text))


def _node(tok: _Tok) -> str:
    if not re.fullmatch(r"[a-z0-9_.\-\[\]<>#]+", tok.text):
        raise NetlistError(f"bad node name {tok.text!r}", tok.line, tok.col)
    return tok.text


def _parse_model(toks, models):
    _expect(toks, 3, ".model")
    name, kind = toks[1], toks[2]
    if kind.text not in ("nmos", "pmos"):
        raise NetlistError(f"unsupported model type {kind.text!r}", kind.line, kind.col)
    kw = {}
    for key, val in _keyvals(toks[3:]):
        if key.text not in _MODEL_KEYS:
            raise NetlistError(f"unknown model parameter {key.text!r}", key.line, key.col)
        if key.text in _BOOL_KEYS:
            if val.text in ("1", "true", "yes", "on"):
                kw[key.text] = True
            elif val.text in ("0", "false", "no", "off"):
                kw[key.text] = False
            else:
                raise NetlistError(f"bad boolean {val.text!r}", val.line, val.col)
        else:
            kw[key.text] = _value(val)
    if "vt0" not in kw:
        raise NetlistError(f"model {name.text!r} needs vt0", name.line, name.col)
    if name.text in models:
        raise NetlistError(f"duplicate model {name.text!r}", name.line, name.col)
    try:
        models[name.text] = MosModelParams(name=name.text, polarity=Polarity(kind.text), **kw)
    except ValueError as exc:
        raise NetlistError(str(exc), name.line, name.col) from None


def _parse_probe(toks, probes):
    rest = toks[1:]
    if not rest:
        raise NetlistError(".probe needs at least one signal", toks[0].line, toks[0].col)
    i = 0
    while i < len(rest):
        if i + 4 > len(rest):
            raise NetlistError("expected v(node) or i(source)", rest[i].line, rest[i].col)
        kind, lp, target, rp = rest[i:i + 4]
        if kind.text not in ("v", "i") or lp.text != "(" or rp.text != ")":
            raise NetlistError("expected v(node) or i(source)", kind.line, kind.col)
        probes.append(f"{kind.text}:{target.text}")
        i += 4


def _parse_ic(toks, ic):
    rest = toks[1:]
    if not rest:
        raise NetlistError(".ic needs at least one v(node)=value", toks[0].line, toks[0].col)
    i = 0
    while i < len(rest):
        if i + 6 > len(rest):
            raise NetlistError("expected v(node)=value", rest[i].line, rest[i].col)
        kind, lp, target, rp, eq, val = rest[i:i + 6]
        if kind.text != "v" or lp.text != "(" or rp.text != ")" or eq.text != "=":
            raise NetlistError("expected v(node)=value", kind.line, kind.col)
        ic[target.text] = _value(val)
        i += 6


def parse_netlist(text: str) -> Circuit:
    if not text.strip():
        raise NetlistError("empty netlist")
    lines = text.splitlines()
    title = lines[0].strip()
    if title.startswith("*"):
        title = title[1:].strip()
    elements = []
    labels = {}
    models: Dict[str, MosModelParams] = {}
    tran = None
    probes: List[str] = []
    ic: Dict[str, float] = {}
    model_refs = []
    for toks in _logical_lines(text):
        head = toks[0]
        word = head.text
        if word.startswith("."):
            if word == ".end":
                break
            if word == ".model":
                _parse_model(toks, models)
            elif word == ".tran":
                _expect(toks, 3, ".tran")
                method = "trap"
                if len(toks) > 4:
                    raise NetlistError("too many fields", toks[4].line, toks[4].col)
                if len(toks) == 4:
                    method = toks[3].text
                    if method not in ("trap", "be"):
                        raise NetlistError(f"unknown method {method!r}", toks[3].line, toks[3].col)
                tran = Tran(_value(toks[1]), _value(toks[2]), method)
            elif word == ".probe":
                _parse_probe(toks, probes)
            elif word == ".ic":
                _parse_ic(toks, ic)
            else:
                raise NetlistError(f"unknown directive {word!r}", head.line, head.col)
            continue
        kind = word[0]
        if word in labels:
            raise NetlistError(f"duplicate element label {word!r}", head.line, head.col)
        labels[word] = head
        if kind == "m":
            _expect(toks, 6, "MOSFET")
            d, g, s, b = (_node(t) for t in toks[1:5])
            model = toks[5]
            geom = {}
            for key, val in _keyvals(toks[6:]):
                if key.text not in ("w", "l") or key.text in geom:
                    raise NetlistError(f"unexpected MOSFET parameter {key.text!r}", key.line, key.col)
                geom[key.text] = _value(val)
            if set(geom) != {"w", "l"}:
                raise NetlistError("MOSFET needs W= and L=", head.line, head.col)
            elements.append(Mosfet(word, d, g, s, b, model.text, geom["w"], geom["l"]))
            model_refs.append(model)
        elif kind == "r":
            if len(toks) != 4:
                raise NetlistError("resistor needs: name a b value", head.line, head.col)
            elements.append(Resistor(word, _node(toks[1]), _node(toks[2]), _value(toks[3])))
        elif kind == "c":
            if len(toks) not in (4, 7):
                raise NetlistError("capacitor needs: name a b value [IC=value]", head.line, head.col)
            icv = None
            if len(toks) == 7:
                (key, val), = _keyvals(toks[4:])
                if key.text != "ic":
                    raise NetlistError(f"unexpected capacitor parameter {key.text!r}", key.line, key.col)
                icv = _value(val)
            elements.append(Capacitor(word, _node(toks[1]), _node(toks[2]), _value(toks[3]), icv))
        elif kind in ("v", "i"):
            vals = toks[3:]
            if vals and vals[0].text == "dc":
                vals = vals[1:]
            if len(toks) < 4 or len(vals) != 1:
                raise NetlistError("source needs: name p n [DC] value", head.line, head.col)
            cls = VSource if kind == "v" else ISource
            elements.append(cls(word, _node(toks[1]), _node(toks[2]), _value(vals[0])))
        elif kind == "d":
            if len(toks) != 4:
                raise NetlistError("diode needs: name anode cathode model", head.line, head.col)
            elements.append(Diode(word, _node(toks[1]), _node(toks[2]), toks[3].text))
            model_refs.append(toks[3])
        else:
            raise NetlistError(f"unknown element type {word!r}", head.line, head.col)
    for ref in model_refs:
        if ref.text not in models:
            raise NetlistError(f"undefined model {ref.text!r}", ref.line, ref.col)
    try:
        return Circuit.create(title, elements, models, tran, probes, ic)
    except NetlistError as exc:
        if exc.line is None:
            # attach the line of the offending element when we can find it
            for label, tok in labels.items():
                if repr(label) in str(exc):
                    raise NetlistError(str(exc), tok.line, tok.col) from None
        raise


# --------------------------------------------------------------------------
# writer
# --------------------------------------------------------------------------


def _format_model(card: MosModelParams) -> List[str]:
    parts = []
    for f in dataclasses.fields(MosModelParams):
        if f.name in ("name", "polarity"):
            continue
        val = getattr(card, f.name)
        if isinstance(val, bool):
            parts.append(f"{f.name}={int(val)}")
        else:
            parts.append(f"{f.name}={format_value(val)}")
    lines = [f".model {card.name} {card.polarity.value}"]
    for i in range(0, len(parts), 4):
        lines.append("+ " + " ".join(parts[i:i + 4]))
    return lines


def write_netlist(circuit: Circuit) -> str:
    """Canonical netlist text; parse_netlist(write_netlist(c)) == c."""
    out = [f"* {circuit.title}" if circuit.title else "*"]
    for name in sorted(circuit.models):
        out.extend(_format_model(circuit.models[name]))
    for el in circuit.elements:
        if isinstance(el, Mosfet):
            out.append(f"{el.name} {el.d} {el.g} {el.s} {el.b} {el.model} "
                       f"W={format_value(el.w)} L={format_value(el.l)}")
        elif isinstance(el, Resistor):
            out.append(f"{el.name} {el.a} {el.b} {format_value(el.ohms)}")
        elif isinstance(el, Capacitor):
            tail = "" if el.ic is None else f" IC={format_value(el.ic)}"
            out.append(f"{el.name} {el.a} {el.b} {format_value(el.farads)}{tail}")
        elif isinstance(el, VSource):
            out.append(f"{el.name} {el.p} {el.n} DC {format_value(el.volts)}")
        elif isinstance(el, ISource):
            out.append(f"{el.name} {el.p} {el.n} DC {format_value(el.amps)}")
        elif isinstance(el, Diode):
            out.append(f"{el.name} {el.a} {el.c} {el.model}")
    if circuit.tran is not None:
        t = circuit.tran
        out.append(f".tran {format_value(t.tstep)} {format_value(t.tstop)} {t.method}")
    if circuit.probes:
        out.append(".probe " + " ".join(f"{p.split(':')[0]}({p.split(':')[1]})" for p in circuit.probes))
    if circuit.ic:
        out.append(".ic " + " ".join(f"v({n})={format_value(v)}" for n, v in circuit.ic))
    out.append(".end")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# oscillator generators
# --------------------------------------------------------------------------


class InverterStyle(enum.Enum):
    PLAIN = "plain"
    CURRENT_STARVED = "starved"
    BULK_CONTROLLED = "bulk"


@dataclass(frozen=True)
class RingConfig:
    stages: int = 4
    inverter_style: InverterStyle = InverterStyle.BULK_CONTROLLED
    vdd: float = 3.0
    vcont: float = 3.0
    wp: float = 2.5e-6
    wn: float = 1e-6
    l: float = 0.35e-6
    ff_strength_ratio: float = 0.75
    c_node: float = 150e-15
    kick: float = 0.05
    nmos_model: str = "nmos035"
    pmos_model: str = "pmos035"

    def __post_init__(self):
        if isinstance(self.inverter_style, str):
            object.__setattr__(self, "inverter_style", InverterStyle(self.inverter_style))
        if self.stages < 4 or self.stages % 2:
            raise ValueError("stages must be even and >= 4")
        if not 0 < self.ff_strength_ratio <= 1:
            raise ValueError("ff_strength_ratio must be in (0, 1]")
        if not (self.wp > 0 and self.wn > 0 and self.l > 0):
            raise ValueError("wp, wn and l must be positive")
        if self.c_node < 0:
            raise ValueError("c_node must be >= 0")

    def replace(self, **changes) -> "RingConfig":
        return dataclasses.replace(self, **changes)


def tap_name(k: int) -> str:
    return f"t{k}"


def _rails(cfg: RingConfig):
    """(pmos source, nmos source, pmos bulk) for core inverters."""
    style = cfg.inverter_style
    if style is InverterStyle.CURRENT_STARVED:
        return "vp", "vn", "vdd"
    if style is InverterStyle.BULK_CONTROLLED:
        return "vdd", "0", "vcont"
    return "vdd", "0", "vdd"


def _check_models(cfg, models):
    for name, pol in ((cfg.nmos_model, Polarity.NMOS), (cfg.pmos_model, Polarity.PMOS)):
        if name not in models:
            raise ValueError(f"model card {name!r} not provided")
        if models[name].polarity is not pol:
            raise ValueError(f"model card {name!r} is not {pol.value}")


def _supplies(cfg: RingConfig, elements: list, probes: list):
    elements.append(VSource("vdd", "vdd", "0", cfg.vdd))
    probes.append("i:vdd")
    if cfg.inverter_style is InverterStyle.BULK_CONTROLLED:
        elements.append(VSource("vcont", "vcont", "0", cfg.vcont))
        probes.append("i:vcont")
    elif cfg.inverter_style is InverterStyle.CURRENT_STARVED:
        # footer gate at vcont, header gate at the complementary level
        elements.append(VSource("vcont", "vcont", "0", cfg.vcont))
        elements.append(VSource("vhdr", "vhdr", "0", cfg.vdd - cfg.vcont))
        elements.append(Mosfet("mhdr", "vp", "vhdr", "vdd", "vdd", cfg.pmos_model,
                               cfg.wp * cfg.stages, cfg.l))
        elements.append(Mosfet("mftr", "vn", "vcont", "0", "0", cfg.nmos_model,
                               cfg.wn * cfg.stages, cfg.l))
        probes.append("i:vcont")


def build_quadrature_ring(cfg: RingConfig, models: Mapping[str, MosModelParams],
                          tran: Optional[Tran] = None) -> Circuit:
    """Even-stage ring with feedforward inverters between opposite-phase taps.

    Main inverter ``k`` drives tap k+1 from tap k; feedforward inverter ``k``
    drives tap k+1 from tap k+1+N/2 (tap k+3 for four stages), the node
    in antiphase with its output.
    """
    if not isinstance(cfg, RingConfig):
        raise TypeError("cfg must be a RingConfig")
    _check_models(cfg, models)
    n = cfg.stages
    psrc, nsrc, pbulk = _rails(cfg)
    elements = []
    probes = [f"v:{tap_name(k)}" for k in range(n)]
    for k in range(n):
        out = tap_name((k + 1) % n)
        inp = tap_name(k)
        elements.append(Mosfet(f"mp{k}", out, inp, psrc, pbulk, cfg.pmos_model, cfg.wp, cfg.l))
        elements.append(Mosfet(f"mn{k}", out, inp, nsrc, "0", cfg.nmos_model, cfg.wn, cfg.l))
    r = cfg.ff_strength_ratio
    # 12 significant digits keeps ratio * width free of binary noise in the netlist
    wpf, wnf = float(f"{r * cfg.wp:.12g}"), float(f"{r * cfg.wn:.12g}")
    for k in range(n):
        out = tap_name((k + 1) % n)
        inp = tap_name((k + 1 + n // 2) % n)
        elements.append(Mosfet(f"mpf{k}", out, inp, psrc, pbulk, cfg.pmos_model, wpf, cfg.l))
        elements.append(Mosfet(f"mnf{k}", out, inp, nsrc, "0", cfg.nmos_model, wnf, cfg.l))
    if cfg.c_node > 0:
        for k in range(n):
            elements.append(Capacitor(f"c{k}", tap_name(k), "0", cfg.c_node))
    _supplies(cfg, elements, probes)
    used = {cfg.nmos_model: models[cfg.nmos_model], cfg.pmos_model: models[cfg.pmos_model]}
    title = f"quadrature ring, {n} stages, {cfg.inverter_style.value} control"
    # push tap 0 up and its antiphase tap down: this seeds the rotating mode
    # rather than the latch mode, which a single-tap kick mostly excites
    ic = {tap_name(0): cfg.vdd / 2 + cfg.kick, tap_name(n // 2): cfg.vdd / 2 - cfg.kick}
    return Circuit.create(title, elements, used, tran, probes, ic)


def build_plain_ring(stages: int, cfg: RingConfig, models: Mapping[str, MosModelParams],
                     tran: Optional[Tran] = None) -> Circuit:
    """Conventional odd-stage inverter ring sized like ``cfg`` (reference circuit)."""
    if stages < 3 or stages % 2 == 0:
        raise ValueError("a plain ring needs an odd stage count >= 3")
    _check_models(cfg, models)
    elements = []
    probes = [f"v:{tap_name(k)}" for k in range(stages)]
    for k in range(stages):
        out = tap_name((k + 1) % stages)
        inp = tap_name(k)
        elements.append(Mosfet(f"mp{k}", out, inp, "vdd", "vdd", cfg.pmos_model, cfg.wp, cfg.l))
        elements.append(Mosfet(f"mn{k}", out, inp, "0", "0", cfg.nmos_model, cfg.wn, cfg.l))
        if cfg.c_node > 0:
            elements.append(Capacitor(f"c{k}", inp, "0", cfg.c_node))
    elements.append(VSource("vdd", "vdd", "0", cfg.vdd))
    probes.append("i:vdd")
    used = {cfg.nmos_model: models[cfg.nmos_model], cfg.pmos_model: models[cfg.pmos_model]}
    ic = {tap_name(0): cfg.vdd / 2 + cfg.kick}
    return Circuit.create(f"plain ring, {stages} stages", elements, used, tran, probes, ic)
