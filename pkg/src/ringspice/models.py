"""MOSFET device physics: body-effect threshold, EKV drain current, bulk diode.

All voltages handed to :func:`drain_current` are raw terminal voltages;
PMOS devices are evaluated by negating them and running the NMOS core, so
one expression serves both polarities.

Model cards are read from a small INI-style text file::

    [nmos035]
    polarity = nmos
    vt0 = 0.40
    gamma = 0.45
    ...

Unknown keys are rejected so a typo in a physics parameter cannot pass
silently.
"""

from __future__ import annotations

import configparser
import dataclasses
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Tuple, Union

import numpy as np

from . import _kernels as K

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "Polarity",
    "Region",
    "MosModelParams",
    "MosfetState",
    "threshold_voltage",
    "bulk_factor_gamma",
    "drain_current",
    "bulk_diode_current",
    "dynamic_power_estimate",
    "load_model_cards",
    "parse_model_cards",
    "format_model_cards",
    "default_cards_path",
]


@dataclass(frozen=True)
class PhysicalConstants:
    q: float = 1.602176634e-19  # C
    eps_si: float = 11.7 * 8.8541878128e-12  # F/m
    k_b: float = 1.380649e-23  # J/K

    def __post_init__(self):
        for name in ("q", "eps_si", "k_b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


CONSTANTS = PhysicalConstants()


class Polarity(enum.Enum):
    NMOS = "nmos"
    PMOS = "pmos"

    @property
    def sign(self) -> float:
        return 1.0 if self is Polarity.NMOS else -1.0


class Region(enum.Enum):
    WEAK_INVERSION = "weak"
    MODERATE = "moderate"
    STRONG_INVERSION = "strong"
    DIODE_REGION = "diode"


# (vgs - vt) / (n V_Th) bounds; correspond to inversion coefficients 0.1 and 10
WEAK_LIMIT = -2.0
STRONG_LIMIT = 6.2


@dataclass(frozen=True)
class MosModelParams:
    """One named compact-model card.

    ``vt0`` carries the polarity sign. ``conventional_body_effect`` selects
    V_T = V_T0 + gamma (sqrt(2 phi_F - V_B) - sqrt(2 phi_F)) instead of the
    uncorrected form V_T0 + gamma sqrt(2 phi_F - V_B). ``bulk_dependent_slope``
    lets the slope factor grow as the depletion region shrinks under
    forward bulk bias.
    """

    name: str
    polarity: Polarity
    vt0: float
    gamma: float = 0.5
    n_b: float = 1e17  # 1/cm^3
    n_i: float = 1.45e10  # 1/cm^3
    temperature: float = 300.0
    kp: float = 100e-6
    slope_n: float = 1.3
    lambda_clm: float = 0.05
    cox_prime: float = 4.6e-3
    diode_is: float = 1e-16
    diode_n: float = 1.0
    diode_rs: float = 0.0  # ohm, series resistance of each bulk junction
    cg_per_area: float = 4.6e-3
    conventional_body_effect: bool = False
    bulk_dependent_slope: bool = False

    def __post_init__(self):
        if isinstance(self.polarity, str):
            object.__setattr__(self, "polarity", Polarity(self.polarity.lower()))
        if not self.n_b > self.n_i > 0:
            raise ValueError(f"card {self.name}: need n_b > n_i > 0")
        if not self.temperature > 0:
            raise ValueError(f"card {self.name}: temperature must be positive")
        if not self.kp > 0:
            raise ValueError(f"card {self.name}: kp must be positive")
        if not self.diode_is > 0:
            raise ValueError(f"card {self.name}: diode_is must be positive")
        if self.gamma < 0 or self.lambda_clm < 0:
            raise ValueError(f"card {self.name}: gamma and lambda_clm must be >= 0")
        if self.diode_rs < 0:
            raise ValueError(f"card {self.name}: diode_rs must be >= 0")
        if self.slope_n < 1 or self.diode_n < 1:
            raise ValueError(f"card {self.name}: slope_n and diode_n must be >= 1")
        if self.cox_prime <= 0 or self.cg_per_area < 0:
            raise ValueError(f"card {self.name}: bad oxide/gate capacitance")
        if self.vt0 * self.polarity.sign <= 0:
            raise ValueError(f"card {self.name}: sign of vt0 does not match polarity")

    def thermal_voltage(self, consts: PhysicalConstants = CONSTANTS) -> float:
        return consts.k_b * self.temperature / consts.q

    def surface_potential(self, consts: PhysicalConstants = CONSTANTS) -> float:
        """2 V_Th ln(N_B / n_i), the zero-bias argument of the body-effect root."""
        return 2.0 * self.thermal_voltage(consts) * math.log(self.n_b / self.n_i)


@dataclass(frozen=True)
class MosfetState:
    id: float
    gm: float
    gds: float
    gmb: float
    region: Region
    vt: float
    saturated: bool


def mos_param_row(params: MosModelParams, w: float, l: float,
                  consts: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Flat parameter row consumed by the compiled kernels."""
    row = np.zeros(K.MOS_NCOL)
    row[K.MOS_POL] = params.polarity.sign
    row[K.MOS_VT0] = params.polarity.sign * params.vt0
    row[K.MOS_GAMMA] = params.gamma
    row[K.MOS_PHI2] = params.surface_potential(consts)
    row[K.MOS_VTH] = params.thermal_voltage(consts)
    row[K.MOS_BETA] = params.kp * w / l
    row[K.MOS_N0] = params.slope_n
    row[K.MOS_LAMBDA] = params.lambda_clm
    row[K.MOS_CONV] = float(params.conventional_body_effect)
    row[K.MOS_BSLOPE] = float(params.bulk_dependent_slope)
    row[K.MOS_DIS] = params.diode_is
    row[K.MOS_DN] = params.diode_n
    row[K.MOS_DRS] = params.diode_rs
    return row


def threshold_voltage(params: MosModelParams, v_b: float,
                      consts: PhysicalConstants = CONSTANTS) -> Tuple[float, bool]:
    """Threshold voltage under bulk bias.

    ``v_b`` is the polarity-normalized bulk-source voltage: positive values
    forward-bias the source junction and reduce |V_T|. For a PMOS with source
    at V_DD and well at V_cont this is ``V_DD - V_cont``.

    Returns ``(vt, diode_region)``. Once the root argument goes negative
    the threshold is held at its arg = 0 value and ``diode_region`` is set.
    """
    s = params.polarity.sign
    vt, _, flag = K.threshold_norm(s * params.vt0, params.gamma, params.surface_potential(consts),
                                   float(v_b), params.conventional_body_effect)
    return s * vt, bool(flag)


def threshold_slope(params: MosModelParams, v_b: float,
                    consts: PhysicalConstants = CONSTANTS) -> float:
    """Analytic d(vt)/d(v_b) for the normalized bulk bias ``v_b``."""
    s = params.polarity.sign
    _, dvt, _ = K.threshold_norm(s * params.vt0, params.gamma, params.surface_potential(consts),
                                 float(v_b), params.conventional_body_effect)
    return s * dvt


def bulk_factor_gamma(n_b: float, cox_prime: float,
                      consts: PhysicalConstants = CONSTANTS) -> float:
    """sqrt(2 eps_si q N_B) / C'ox with ``n_b`` in 1/cm^3."""
    if not (n_b > 0 and cox_prime > 0):
        raise ValueError("n_b and cox_prime must be positive")
    return math.sqrt(2.0 * consts.eps_si * consts.q * n_b * 1e6) / cox_prime


def drain_current(params: MosModelParams, vgs: float, vds: float, vbs: float,
                  w: float, l: float, consts: PhysicalConstants = CONSTANTS) -> MosfetState:
    if not (w > 0 and l > 0):
        raise ValueError("w and l must be positive")
    for v in (vgs, vds, vbs):
        if not math.isfinite(v):
            raise ValueError("terminal voltages must be finite")
    row = mos_param_row(params, w, l, consts)
    ids, gm, gds, gmb, vt, flag, x, ratio = K.mos_eval(row, float(vgs), float(vds), float(vbs))
    if flag:
        region = Region.DIODE_REGION
    elif x < WEAK_LIMIT:
        region = Region.WEAK_INVERSION
    elif x > STRONG_LIMIT:
        region = Region.STRONG_INVERSION
    else:
        region = Region.MODERATE
    return MosfetState(id=ids, gm=gm, gds=gds, gmb=gmb, region=region, vt=vt,
                       saturated=ratio < 0.01)


def bulk_diode_current(params: MosModelParams, v_forward: float,
                       consts: PhysicalConstants = CONSTANTS) -> Tuple[float, float]:
    """Junction current and conductance at forward bias ``v_forward``.

    Includes the card's series resistance ``diode_rs`` when it is non-zero.
    """
    return K.diode_rs_eval(params.diode_is, params.diode_n, params.thermal_voltage(consts),
                           params.diode_rs, float(v_forward))


def dynamic_power_estimate(f: float, c_load: float, vdd: float) -> float:
    """Switching power f * C_L * V_DD^2."""
    if f < 0 or c_load < 0 or vdd < 0:
        raise ValueError("frequency, load and supply must be non-negative")
    return f * c_load * vdd ** 2


# --------------------------------------------------------------------------
# model-card files
# --------------------------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(MosModelParams) if f.name != "name"}
_BOOL_FIELDS = {"conventional_body_effect", "bulk_dependent_slope"}


def parse_model_cards(text: str, source: str = "<string>") -> Dict[str, MosModelParams]:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ValueError(f"{source}: {exc}") from None
    cards = {}
    for section in cp.sections():
        kw = {}
        for key, raw in cp.items(section):
            if key not in _FIELDS:
                raise ValueError(f"{source}: card [{section}] has unknown key {key!r}")
            if key == "polarity":
                kw[key] = Polarity(raw.strip().lower())
            elif key in _BOOL_FIELDS:
                kw[key] = cp.getboolean(section, key)
            else:
                try:
                    kw[key] = float(raw)
                except ValueError:
                    raise ValueError(f"{source}: card [{section}] key {key}: bad number {raw!r}") from None
        for required in ("polarity", "vt0"):
            if required not in kw:
                raise ValueError(f"{source}: card [{section}] is missing {required!r}")
        cards[section.lower()] = MosModelParams(name=section.lower(), **kw)
    return cards


def load_model_cards(path: Union[str, Path]) -> Dict[str, MosModelParams]:
    path = Path(path)
    return parse_model_cards(path.read_text(), source=str(path))


def format_model_cards(cards: Mapping[str, MosModelParams]) -> str:
    out = []
    for name, card in cards.items():
        out.append(f"[{name}]")
        for key in _FIELDS:
            val = getattr(card, key)
            if isinstance(val, Polarity):
                val = val.value
            elif isinstance(val, bool):
                val = "true" if val else "false"
            else:
                val = repr(float(val))
            out.append(f"{key} = {val}")
        out.append("")
    return "\n".join(out)


def default_cards_path(which: str = "035") -> Path:
    """Path of a shipped card file: ``"035"`` (0.35 um generic) or ``"hef4007"``."""
    names = {"035": "cmos035.cards", "hef4007": "hef4007.cards"}
    if which not in names:
        raise ValueError(f"no shipped card file {which!r}; have {sorted(names)}")
    return Path(__file__).parent / "data" / names[which]
