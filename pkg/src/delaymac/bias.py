"""Behavioral model of the two-branch biasing network.

The network turns one reference voltage into per-exponent gate biases that
scale the cell currents by 2**-i without width-scaled mirrors. Everything
here is algebraic: current ratios, bias voltages and the drain-pinning
offset are the quantities the circuit is specified by, and all are checkable
without a node solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple, Union

import numpy as np

from .errors import FieldValidationError, RegimeError
from .params import TechnologyProfile

#: Widths are multiples of 160 nm, lengths multiples of 120 nm.
WIDTH_UNIT_M = 160e-9
LENGTH_UNIT_M = 120e-9

#: Target drain voltage of the primary mirror FET, held by the secondary bias.
DRAIN_PIN_V = 0.1

#: Default subthreshold slope factor of the bias diode law.
DEFAULT_SLOPE_FACTOR = 1.3

#: Bias currents above this are outside the subthreshold design regime.
SUBTHRESHOLD_CEILING_A = 2e-6

FixedRow = Tuple[float, float]
PerExponentRows = List[Tuple[float, float]]


def width_table(n: int) -> Dict[str, Union[FixedRow, PerExponentRows]]:
    """FET sizing table for an n-bit network, n in [1, 8].

    Fixed rows are (width multiplier, length multiplier); per-exponent rows
    are lists indexed by the current exponent i in [0, n).
    """
    if not 1 <= n <= 8:
        raise FieldValidationError("n", f"supported for 1 <= n <= 8 (got {n})")
    return {
        "M1": (1.0, 1.0),
        "M2-3": (float(2**n), 1.0),
        "M4-6": (10.0 * 2**n, 10.0),
        "M7-9": [(10.0 * 2**i, 10.0) for i in range(n)],
        "M10": [(2.6**i, 10.0) for i in range(n)],
        "M11": [(float(2**i), 10.0) for i in range(n)],
        "M12": (1.0, 1.0),
    }


def secondary_bias_widths(i: int, w_max: float, mode: str = "shrinking") -> float:
    """Exponent-dependent width of the secondary-bias FET.

    mode="shrinking": w_max * 1.3**-i, the analytic sizing that compensates
    the lower turn-on voltage of slower branches. mode="table": w_max *
    2.6**i, the tabulated sizing. The two disagree and both are kept.
    """
    if i < 0:
        raise FieldValidationError("i", "exponent must be >= 0")
    if mode == "shrinking":
        return w_max * 1.3**-i
    if mode == "table":
        return w_max * 2.6**i
    raise FieldValidationError("mode", f"must be 'shrinking' or 'table' (got {mode!r})")


def bias_current(v_ref: float, tech: TechnologyProfile, slope_factor: float = DEFAULT_SLOPE_FACTOR) -> float:
    """Subthreshold diode-law current i_0 * exp((v_ref - v_thn) / (m v_t))."""
    return tech.i_0 * math.exp((v_ref - tech.v_thn) / (slope_factor * tech.v_t))


def v_ref_for_current(i_bias: float, tech: TechnologyProfile, slope_factor: float = DEFAULT_SLOPE_FACTOR) -> float:
    """Reference voltage that makes bias_current produce i_bias."""
    if i_bias <= 0:
        raise FieldValidationError("i_bias", "must be > 0")
    return tech.v_thn + slope_factor * tech.v_t * math.log(i_bias / tech.i_0)


def branch_currents(
    v_ref: float,
    n: int,
    tech: TechnologyProfile,
    slope_factor: float = DEFAULT_SLOPE_FACTOR,
    ceiling: float = SUBTHRESHOLD_CEILING_A,
) -> np.ndarray:
    """Ideal mirrored currents [i_bias / 2**i for i in range(n)].

    Raises RegimeError when the diode law puts i_bias above the subthreshold
    ceiling; the network is only designed for that regime.
    """
    if n < 1:
        raise FieldValidationError("n", "must be >= 1")
    i_bias = bias_current(v_ref, tech, slope_factor)
    if i_bias > ceiling:
        raise RegimeError(
            f"i_bias={i_bias:.4g} A exceeds the subthreshold ceiling {ceiling:.4g} A; "
            "lower v_ref"
        )
    return i_bias / 2.0 ** np.arange(n)


@dataclass(frozen=True)
class BiasPlan:
    """Resolved sizing, currents and gate biases of the network."""

    n_bits: int
    widths: dict
    currents: Tuple[float, ...]
    v_b1: Tuple[float, ...]
    v_b2: Tuple[float, ...]
    drain_pin: float = DRAIN_PIN_V

    def __post_init__(self):
        if any(b2 <= b1 for b1, b2 in zip(self.v_b1, self.v_b2)):
            raise FieldValidationError("v_b2", "secondary bias must exceed the primary bias")

    def to_dict(self) -> dict:
        return {
            "n_bits": self.n_bits,
            "widths": {k: list(v) if isinstance(v, list) else list(v) for k, v in self.widths.items()},
            "currents": list(self.currents),
            "v_b1": list(self.v_b1),
            "v_b2": list(self.v_b2),
            "drain_pin": self.drain_pin,
        }

    def csv_rows(self) -> List[Tuple[int, float, float, float]]:
        """(exponent, current, v_b1, v_b2) per branch."""
        return [
            (i, self.currents[i], self.v_b1[i], self.v_b2[i])
            for i in range(self.n_bits)
        ]


def bias_plan(
    v_ref: float,
    n: int,
    tech: TechnologyProfile,
    slope_factor: float = DEFAULT_SLOPE_FACTOR,
    drain_pin: float = DRAIN_PIN_V,
) -> BiasPlan:
    """Full network solution for a reference voltage.

    The primary bias of branch i is the gate voltage sinking currents[i]
    under the diode law, so v_b1[0] equals v_ref exactly; the secondary bias
    sits drain_pin above it to hold the mirror drain at the pin target.
    """
    currents = branch_currents(v_ref, n, tech, slope_factor)
    v_b1 = tuple(v_ref_for_current(float(i_i), tech, slope_factor) for i_i in currents)
    v_b2 = tuple(b1 + drain_pin for b1 in v_b1)
    return BiasPlan(
        n_bits=n,
        widths=width_table(n),
        currents=tuple(float(i_i) for i_i in currents),
        v_b1=v_b1,
        v_b2=v_b2,
        drain_pin=drain_pin,
    )


def mirror_error(
    plan: BiasPlan,
    r_ds_finite: Union[float, np.ndarray],
    dv_ds: Union[None, float, np.ndarray] = None,
) -> np.ndarray:
    """First-order relative current error per branch from finite output resistance.

    delta_i = dv_ds / r_ds, relative to the branch current. dv_ds is each
    branch's drain-voltage deviation from the pin target; by default the plan
    pins every drain exactly, so the errors are zero. r_ds -> inf recovers the
    ideal mirror.
    """
    r_ds = np.broadcast_to(np.asarray(r_ds_finite, dtype=float), (plan.n_bits,))
    if np.any(r_ds <= 0):
        raise FieldValidationError("r_ds_finite", "output resistance must be > 0")
    if dv_ds is None:
        deviations = np.array([(b2 - b1) - plan.drain_pin for b1, b2 in zip(plan.v_b1, plan.v_b2)])
    else:
        deviations = np.broadcast_to(np.asarray(dv_ds, dtype=float), (plan.n_bits,))
    currents = np.asarray(plan.currents)
    return deviations / (r_ds * currents)
