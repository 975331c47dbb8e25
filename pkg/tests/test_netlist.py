"""Netlist values, parser, writer and ring generators."""

import pytest
from hypothesis import given, strategies as st

from ringspice.models import default_cards_path
from ringspice.netlist import (Capacitor, Circuit, ISource, InverterStyle, Mosfet, NetlistError,
                               Resistor, RingConfig, Tran, VSource, build_plain_ring,
                               build_quadrature_ring, format_value, parse_netlist, parse_value,
                               tap_name, write_netlist)

GOLDEN = default_cards_path("035").parent / "quadring_bulk.sp"


# ---------------------------------------------------------------- parse_value

VALUE_CASES = [
    ("1.5k", 1500.0),
    ("100n", 1.0e-7),
    ("2meg", 2.0e6),
    ("2MEG", 2.0e6),
    ("2Meg", 2.0e6),
    ("2m", 2.0e-3),
    ("2M", 2.0e-3),
    ("1megohm", 1.0e6),
    ("10mV", 10e-3),
    ("150fF", 150e-15),
    ("4.7p", 4.7e-12),
    ("3u", 3e-6),
    ("1G", 1e9),
    ("-0.45", -0.45),
    ("+5", 5.0),
    (".5", 0.5),
    ("1e3", 1000.0),
    ("1e-3k", 1.0),
    ("2.5V", 2.5),
    ("1kk", 1000.0),  # trailing letters after the suffix are a unit and ignored
    ("7ohm", 7.0),
    ("0", 0.0),
]


@pytest.mark.parametrize("token,value", VALUE_CASES)
def test_parse_value(token, value):
    # exact: decimal composition means "2.5u" is the float nearest 2.5e-6
    assert parse_value(token) == value


@pytest.mark.parametrize("token", ["", "abc", "1..2", "e5", "1.2.3k", "--1", "1.5 k", "k1", "1x3"])
def test_parse_value_rejects(token):
    with pytest.raises(NetlistError):
        parse_value(token)


@given(st.floats(min_value=-1e20, max_value=1e20, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-25))
def test_format_then_parse_is_identity(x):
    assert parse_value(format_value(x)) == x


@pytest.mark.parametrize("x,text", [(2.5e-6, "2.5u"), (150e-15, "150f"), (1e6, "1meg"),
                                    (3.0, "3"), (1e-3, "1m"), (0.0, "0.0")])
def test_format_value_canonical(x, text):
    assert format_value(x) == text


# ---------------------------------------------------------------- parser

SMALL = "t\nR1 1 0 1k\nV1 1 0 1\n.end"


def test_smallest_circuit():
    c = parse_netlist(SMALL)
    assert len(c.elements) == 2
    assert set(c.nodes) == {"0", "1"}
    assert c.element("r1").ohms == 1000.0


def test_undefined_model_is_named():
    with pytest.raises(NetlistError, match="nmosa"):
        parse_netlist("t\nM1 2 1 0 0 nmosA W=1u L=0.35u\n.end")


def test_comments_continuations_and_case():
    text = ("Title line\n* a comment\nr1 A 0\n+ 2K\nv1 a 0 dc 1\n"
            ".MODEL NM nmos vt0=0.4\n+ kp=100u\n.tran 1n\n+ 10n be\n.PROBE V(A) I(V1)\n.END\n"
            "R9 ignored 0 1\n")
    c = parse_netlist(text)
    assert c.element("r1").ohms == 2000.0
    assert c.models["nm"].kp == 100e-6
    assert c.tran == Tran(1e-9, 10e-9, "be")
    assert c.probes == ("v:a", "i:v1")
    assert "r9" not in [e.name for e in c.elements]


def test_capacitor_ic_and_isource():
    c = parse_netlist("t\nC1 a 0 1n IC=0.5\nR1 a 0 1k\nI1 0 a 1m\n.end")
    assert c.element("c1").ic == 0.5
    assert c.element("i1").amps == 1e-3


MALFORMED_CASES = [
    ("t\nR1 1 0 1k\nQ1 1 0 0\n.end", 3),            # unknown element letter
    ("t\nR1 1 0\n.end", 2),                          # missing value
    ("t\nR1 1 0 1.2.3k\n.end", 2),                  # malformed number
    ("t\nR1 1 0 1k\nR1 1 0 2k\n.end", 3),            # duplicate label
    ("t\nR1 1 0 1k\n.foo\n.end", 3),                 # unknown directive
    ("t\n.model m nmos vt0=0.4 vto=1\nR1 1 0 1\n.end", 2),  # unknown model key
    ("t\n.model m bjt vt0=0.4\n.end", 2),            # unsupported model type
    ("t\n.model m nmos gamma=0.4\n.end", 2),         # model without vt0
    ("t\nR1 1 0 1k\n.tran 1n 10n gear\n.end", 3),    # unknown method
    ("t\nR1 1 0 1k\n.probe x(1)\n.end", 3),          # bad probe
    ("t\nR1 1 0 1k\n.ic 1=0.5\n.end", 3),            # bad ic
    ("t\nR1 1 0 1k\nM1 1 1 0 0 m W=1u\n.end", 3),    # MOSFET without L
    ("t\n+ R1 1 0 1\n", 2),                          # continuation with nothing before
]


@pytest.mark.parametrize("text,line", MALFORMED_CASES)
def test_malformed_inputs_carry_line_numbers(text, line):
    with pytest.raises(NetlistError) as info:
        parse_netlist(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_column_reported():
    with pytest.raises(NetlistError) as info:
        parse_netlist("t\nR1 1 0 1.2.3k\n.end")
    assert info.value.column == 8


@pytest.mark.parametrize("text,msg", [
    ("t\nV1 1 0 1\nC1 2 3 1p\n.end", "no path to ground"),
    ("t\nR1 1 0 1k\n.probe v(9)\n.end", "unknown node"),
    ("t\nR1 1 0 1k\n.probe i(vx)\n.end", "unknown voltage source"),
    ("", "empty"),
])
def test_semantic_errors(text, msg):
    with pytest.raises(NetlistError, match=msg):
        parse_netlist(text)


def test_dangling_node_error_names_node():
    with pytest.raises(NetlistError, match="'2'"):
        parse_netlist("t\nR1 1 0 1k\nR2 2 3 1k\n.end")


def test_golden_netlist_structure():
    c = parse_netlist(GOLDEN.read_text())
    mos = [e for e in c.elements if isinstance(e, Mosfet)]
    assert len(mos) == 16
    assert sum(e.name.startswith("mpf") or e.name.startswith("mnf") for e in mos) == 8
    assert all(tap_name(k) in c.nodes for k in range(4))
    assert {e.b for e in mos if e.model == "pmos035"} == {"vcont"}


def test_golden_round_trip_byte_stable():
    canonical = write_netlist(parse_netlist(GOLDEN.read_text()))
    again = write_netlist(parse_netlist(canonical))
    assert again == canonical


def test_golden_matches_generator(cards):
    golden = parse_netlist(GOLDEN.read_text())
    gen = build_quadrature_ring(RingConfig(vcont=2.6), cards, Tran(10e-12, 80e-9))
    assert gen.elements == golden.elements
    assert gen.models == golden.models
    assert (gen.tran, gen.probes, gen.ic) == (golden.tran, golden.probes, golden.ic)


# ---------------------------------------------------------------- generators

@pytest.mark.parametrize("style", list(InverterStyle))
def test_generated_round_trip_element_identical(cards, style):
    c = build_quadrature_ring(RingConfig(inverter_style=style, vcont=1.7, ff_strength_ratio=0.6),
                              cards, Tran(1e-11, 1e-9))
    back = parse_netlist(write_netlist(c))
    assert back.elements == c.elements
    assert back.models == c.models
    assert back.nodes == c.nodes


def _sources(c):
    return [e for e in c.elements if isinstance(e, VSource)]


def test_plain_style_counts(cards):
    c = build_quadrature_ring(RingConfig(inverter_style=InverterStyle.PLAIN), cards)
    assert c.count(Mosfet) == 16
    assert c.count(Capacitor) == 4
    assert [s.name for s in _sources(c)] == ["vdd"]
    assert {e.b for e in c.elements if isinstance(e, Mosfet) and e.model == "pmos035"} == {"vdd"}
    # the kick lives in .ic, not in a source
    assert dict(c.ic)[tap_name(0)] > dict(c.ic)[tap_name(2)]


def test_bulk_style_counts(cards):
    c = build_quadrature_ring(RingConfig(vcont=2.0), cards)
    assert c.count(Mosfet) == 16
    assert sorted(s.name for s in _sources(c)) == ["vcont", "vdd"]
    assert c.element("vcont").volts == 2.0
    assert {e.b for e in c.elements if isinstance(e, Mosfet) and e.model == "pmos035"} == {"vcont"}


def test_starved_style_counts(cards):
    c = build_quadrature_ring(RingConfig(inverter_style=InverterStyle.CURRENT_STARVED, vcont=1.2), cards)
    assert c.count(Mosfet) == 18
    footer = c.element("mftr")
    assert footer.g == "vcont" and footer.s == "0"
    header = c.element("mhdr")
    assert header.s == "vdd"


@pytest.mark.parametrize("n", [4, 6, 8])
def test_ring_wiring(cards, n):
    cfg = RingConfig(stages=n, ff_strength_ratio=0.5)
    c = build_quadrature_ring(cfg, cards)
    idx = {tap_name(k): k for k in range(n)}
    main = [e for e in c.elements if isinstance(e, Mosfet) and e.name.startswith(("mp", "mn"))
            and not e.name.startswith(("mpf", "mnf"))]
    ff = [e for e in c.elements if isinstance(e, Mosfet) and e.name.startswith(("mpf", "mnf"))]
    for e in main:
        assert (idx[e.d] - idx[e.g]) % n == 1
    for e in ff:
        # feedforward input is the node in antiphase with the output
        assert (idx[e.g] - idx[e.d]) % n == n // 2
    for e in ff:
        partner = c.element(e.name.replace("f", "", 1))
        assert e.w == pytest.approx(0.5 * partner.w, rel=1e-12)


def test_plain_reference_ring(cards):
    c = build_plain_ring(5, RingConfig(), cards)
    assert c.count(Mosfet) == 10
    with pytest.raises(ValueError):
        build_plain_ring(4, RingConfig(), cards)


@pytest.mark.parametrize("kw", [dict(stages=3), dict(stages=5), dict(ff_strength_ratio=0.0),
                                dict(ff_strength_ratio=1.5), dict(wp=0.0), dict(c_node=-1e-15)])
def test_ring_config_invariants(kw):
    with pytest.raises(ValueError):
        RingConfig(**kw)


def test_missing_model_card(cards):
    with pytest.raises((ValueError, NetlistError)):
        build_quadrature_ring(RingConfig(pmos_model="nope"), cards)


def test_circuit_invariants_direct():
    with pytest.raises(NetlistError, match="resistance"):
        Circuit.create("t", [Resistor("r1", "a", "0", 0.0)], {})
    with pytest.raises(NetlistError, match="duplicate"):
        Circuit.create("t", [Resistor("r1", "a", "0", 1.0), Resistor("r1", "a", "0", 1.0)], {})
    c = Circuit.create("t", [Resistor("r1", "a", "0", 1.0), ISource("i1", "0", "a", 1e-3)], {})
    assert c.nodes[0] == "0"
