"""Event-level simulation of the signed n-bit delay multiplier and MAC chains.

A multiplier carries a pair of falling-edge events (variable and reference).
Each set weight bit routes both edges through a delay-cell pair whose current
is the fastest cell's divided by 2**i, so bit i contributes 2**i times the
unit referential delay; cleared bits bypass their cells entirely. A negative
sign swaps the pair at the input relay, which flips the sign of the
contributed referential delay exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .cell import initial_drop, latch_delay, latch_point
from .errors import RegimeError
from .jitter import total_jitter
from .params import INPUT_FLOOR_V, CellDesign, JitterFit, MultiplierSpec, TechnologyProfile

SeedLike = Union[int, np.random.SeedSequence]

MODELS = ("ideal", "nonlinear")


@dataclass(frozen=True)
class ReferentialEvent:
    """A variable/reference falling-edge pair; the delay is their separation."""

    t_var: float = 0.0
    t_ref: float = 0.0

    @property
    def referential_delay(self) -> float:
        return self.t_var - self.t_ref


@dataclass(frozen=True)
class MultiplyResult:
    out: ReferentialEvent
    delta_t: float
    per_bit_delays: Tuple[float, ...]
    warnings: Tuple[str, ...] = ()


@dataclass(frozen=True)
class StageTrace:
    stage: int
    weight: int
    v_a: float
    event_in: ReferentialEvent
    event_out: ReferentialEvent
    delta_t: float


def _check_input(v: float, name: str, tech: TechnologyProfile, warnings: List[str]) -> None:
    if not 0.0 <= v <= tech.v_dd:
        raise RegimeError(f"{name}={v} outside [0, v_dd={tech.v_dd}]")
    if v < INPUT_FLOOR_V:
        warnings.append(
            f"{name}={v} below the {INPUT_FLOOR_V} V input floor; referential delay is distorted"
        )


def _bit_transfer(
    v_a: float,
    cell_i: CellDesign,
    tech: TechnologyProfile,
    model: str,
    alpha: float,
    dv_th_override: Optional[float],
) -> Tuple[float, float]:
    """(referential delay, reference-path absolute delay) of one cell pair."""
    v_a0 = cell_i.v_a0
    distortion = -(cell_i.c_s_eff / cell_i.i_star) * alpha * (v_a - v_a0) ** 2
    if model == "ideal":
        rd = -(cell_i.c_s_eff / cell_i.i_star) * (v_a - v_a0) + distortion
        dv_th = latch_point(cell_i, tech) if dv_th_override is None else dv_th_override
        dv0_ref = initial_drop(v_a0, cell_i, tech).dv0
        t_base = (cell_i.c_star / cell_i.i_star) * (dv_th - dv0_ref)
    else:
        t_var = latch_delay(initial_drop(v_a, cell_i, tech).dv0, cell_i, tech).t_d
        t_base = latch_delay(initial_drop(v_a0, cell_i, tech).dv0, cell_i, tech).t_d
        rd = (t_var - t_base) + distortion
    return rd, t_base


def simulate_multiply(
    ev_in: ReferentialEvent,
    spec: MultiplierSpec,
    v_a: float,
    cell: CellDesign,
    tech: TechnologyProfile,
    model: str = "ideal",
    fit: Optional[JitterFit] = None,
    seed: Optional[SeedLike] = None,
    pair_factor: int = 1,
    distortion_alpha: float = 0.0,
    dv_th_override: Optional[float] = None,
) -> MultiplyResult:
    """Propagate an event pair through one multiplier.

    With the ideal model delta_t is exactly
    sign * -(c_s_eff / i_star_fastest) * (v_a - v_a0) * W. The nonlinear
    model runs each traversed cell through the exponential-detector latch
    delay instead. Passing a calibrated fit plus a seed adds Gaussian jitter
    per traversed cell on the variable path (both paths for pair_factor=2);
    jitter draws attach to cells, not wires, so sign antisymmetry is exact at
    a fixed seed.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS} (got {model!r})")
    if pair_factor not in (1, 2):
        raise ValueError("pair_factor must be 1 or 2")
    warnings: List[str] = []
    _check_input(v_a, "v_a", tech, warnings)
    _check_input(spec.v_a0, "v_a0", tech, warnings)

    rng = None
    if fit is not None and seed is not None:
        rng = np.random.Generator(np.random.PCG64(seed))

    per_bit = [0.0] * spec.n_bits
    delta_core = 0.0
    var_path = 0.0   # total absolute delay of the v_a-input cells
    ref_path = 0.0   # total absolute delay of the v_a0-input cells
    for i, w in enumerate(spec.weight_bits):
        if w == 0:
            continue
        cell_i = replace(cell, i_star=spec.bit_current(i), v_a0=spec.v_a0)
        rd, t_base = _bit_transfer(v_a, cell_i, tech, model, distortion_alpha, dv_th_override)
        j_var = j_ref = 0.0
        if rng is not None:
            sigma = total_jitter(cell_i, fit).sigma_total
            j_var = sigma * rng.standard_normal()
            if pair_factor == 2:
                j_ref = sigma * rng.standard_normal()
        contribution = rd + j_var - j_ref
        per_bit[i] = contribution
        delta_core += contribution
        var_path += t_base + rd + j_var
        ref_path += t_base + j_ref

    delta_t = spec.sign * delta_core
    if spec.sign == 1:
        out = ReferentialEvent(t_var=ev_in.t_var + var_path, t_ref=ev_in.t_ref + ref_path)
    else:
        # relay swap: the variable wire runs through the reference-input cells
        out = ReferentialEvent(t_var=ev_in.t_var + ref_path, t_ref=ev_in.t_ref + var_path)
    return MultiplyResult(
        out=out, delta_t=delta_t, per_bit_delays=tuple(per_bit), warnings=tuple(warnings)
    )


def simulate_dot_product(
    weights: Sequence[int],
    v_as: Sequence[float],
    template: MultiplierSpec,
    cell: CellDesign,
    tech: TechnologyProfile,
    model: str = "ideal",
    fit: Optional[JitterFit] = None,
    seed: Optional[int] = None,
    pair_factor: int = 1,
    ev_in: ReferentialEvent = ReferentialEvent(),
) -> Tuple[float, List[StageTrace]]:
    """Serial MAC chain: each multiplier consumes the previous event pair.

    weights are signed integers with |w| < 2**n_bits (OverflowError
    otherwise); v_as the per-stage analog inputs. Returns the total
    referential delay (the sum of per-stage delta_t) and a per-stage trace.
    """
    if len(weights) != len(v_as):
        raise ValueError(f"got {len(weights)} weights but {len(v_as)} analog inputs")
    stage_seeds: List[Optional[np.random.SeedSequence]]
    if seed is not None:
        stage_seeds = list(np.random.SeedSequence(seed).spawn(len(weights)))
    else:
        stage_seeds = [None] * len(weights)

    trace: List[StageTrace] = []
    event = ev_in
    total = 0.0
    for j, (w, v_a) in enumerate(zip(weights, v_as)):
        spec = MultiplierSpec.from_weight(
            int(w), template.n_bits, template.i_star_fastest, template.v_a0
        )
        result = simulate_multiply(
            event, spec, v_a, cell, tech,
            model=model, fit=fit, seed=stage_seeds[j], pair_factor=pair_factor,
        )
        trace.append(
            StageTrace(
                stage=j, weight=int(w), v_a=v_a,
                event_in=event, event_out=result.out, delta_t=result.delta_t,
            )
        )
        total += result.delta_t
        event = result.out
    return total, trace


def dot_product_trials(
    weights: Sequence[int],
    v_as: Sequence[float],
    template: MultiplierSpec,
    cell: CellDesign,
    tech: TechnologyProfile,
    model: str = "ideal",
    fit: Optional[JitterFit] = None,
    seed: Optional[int] = 0,
    trials: int = 1,
    pair_factor: int = 1,
) -> np.ndarray:
    """Monte-Carlo repetitions of a MAC chain, one total delay per trial.

    The deterministic transfer is evaluated once; jitter is then drawn per
    traversed cell per path with the trial axis vectorized, which matches
    summing independent per-cell draws. Without a fit every trial returns
    the same deterministic value.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if pair_factor not in (1, 2):
        raise ValueError("pair_factor must be 1 or 2")
    base, _ = simulate_dot_product(weights, v_as, template, cell, tech, model=model)
    deltas = np.full(trials, base, dtype=float)
    if fit is None:
        return deltas
    rng = np.random.Generator(np.random.PCG64(seed))
    for w in weights:
        spec = MultiplierSpec.from_weight(
            int(w), template.n_bits, template.i_star_fastest, template.v_a0
        )
        for i, bit in enumerate(spec.weight_bits):
            if bit == 0:
                continue
            cell_i = replace(cell, i_star=spec.bit_current(i), v_a0=spec.v_a0)
            sigma = total_jitter(cell_i, fit).sigma_total
            j_var = sigma * rng.standard_normal(trials)
            if pair_factor == 2:
                j_ref = sigma * rng.standard_normal(trials)
                deltas += spec.sign * (j_var - j_ref)
            else:
                deltas += spec.sign * j_var
    return deltas


def differential_multiply(
    spec: MultiplierSpec,
    v_a: float,
    distortion_alpha: float,
    cell: CellDesign,
    tech: TechnologyProfile,
    model: str = "ideal",
) -> float:
    """Differential-mode product: half the delay difference of the two paths.

    The paths run at v_a0 + v_a and v_a0 - v_a, so any even-order term of the
    per-cell transfer (the injected quadratic in particular) cancels exactly
    and the output is odd in v_a.
    """
    ev = ReferentialEvent()
    plus = simulate_multiply(
        ev, spec, spec.v_a0 + v_a, cell, tech, model=model, distortion_alpha=distortion_alpha
    ).delta_t
    minus = simulate_multiply(
        ev, spec, spec.v_a0 - v_a, cell, tech, model=model, distortion_alpha=distortion_alpha
    ).delta_t
    return 0.5 * (plus - minus)


def transfer_sweep(
    template: MultiplierSpec,
    v_a_values: Sequence[float],
    weights: Sequence[int],
    cell: CellDesign,
    tech: TechnologyProfile,
    model: str = "ideal",
    fit: Optional[JitterFit] = None,
    seed: Optional[int] = None,
    pair_factor: int = 1,
    positive_means_greater_va: bool = False,
) -> List[dict]:
    """Transfer-characteristic table over a weight set and an input grid.

    Row keys: v_a, w (weight magnitude), s (sign), delta_t_s, model, seed.
    positive_means_greater_va flips the sign of the reported delay so that
    inputs above v_a0 read as positive products (presentation only; the
    stored convention keeps v_a > v_a0 negative).
    """
    runs = [(w, v_a) for w in weights for v_a in v_a_values]
    if seed is not None:
        run_seeds = list(np.random.SeedSequence(seed).spawn(len(runs)))
    else:
        run_seeds = [None] * len(runs)
    rows = []
    for (w, v_a), run_seed in zip(runs, run_seeds):
        spec = MultiplierSpec.from_weight(
            int(w), template.n_bits, template.i_star_fastest, template.v_a0
        )
        result = simulate_multiply(
            ReferentialEvent(), spec, v_a, cell, tech,
            model=model, fit=fit, seed=run_seed, pair_factor=pair_factor,
        )
        delta = -result.delta_t if positive_means_greater_va else result.delta_t
        rows.append(
            {
                "v_a": v_a,
                "w": abs(int(w)),
                "s": spec.sign,
                "delta_t_s": delta,
                "model": model,
                "seed": seed if seed is not None else "",
            }
        )
    return rows
