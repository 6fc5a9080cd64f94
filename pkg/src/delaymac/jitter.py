"""Jitter models for the two noise-dominant sub-processes and a seeded sampler.

Two variants exist side by side: thermal-noise theory forms, kept for trend
cross-checks, and the fitted forms actually used by the feasibility
constraints. The fitted constants require a calibrated unit scale
(JitterFit.unit_scale); evaluating them uncalibrated raises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UncalibratedFitError
from .params import BOLTZMANN_J_PER_K, CellDesign, JitterFit, TechnologyProfile


@dataclass(frozen=True)
class JitterBudget:
    """Per-cell timing variance split by source, in seconds^2."""

    var_sd: float
    var_td: float

    @property
    def sigma_total(self) -> float:
        return float(np.sqrt(self.var_sd + self.var_td))


def require_calibrated(fit: JitterFit) -> tuple:
    """Return the unit scale pair, raising if the fit is uncalibrated."""
    if not fit.calibrated:
        raise UncalibratedFitError(
            "JitterFit.unit_scale is unresolved; run design_space.calibrate_units "
            "(or load a config with a unit_scale) before evaluating fitted models"
        )
    return fit.unit_scale


def sd_jitter_theory(
    cell: CellDesign,
    tech: TechnologyProfile,
    g_d0: float,
    t_d: Optional[float] = None,
    dv_th: Optional[float] = None,
    dv0: Optional[float] = None,
) -> float:
    """Steady-discharge jitter variance 4kT*gamma*g_d0 / (2 i_star^2) * t_d.

    Channel noise of the current source integrates on the storage cap for the
    whole delay, so the variance is linear in t_d. Pass (dv_th, dv0) instead
    of t_d to expand t_d = (c_star/i_star)(dv_th - dv0).
    """
    if t_d is None:
        if dv_th is None or dv0 is None:
            raise ValueError("provide t_d or both dv_th and dv0")
        t_d = (cell.c_star / cell.i_star) * (dv_th - dv0)
    four_kt = 4.0 * BOLTZMANN_J_PER_K * tech.temperature
    return four_kt * tech.gamma * g_d0 / (2.0 * cell.i_star**2) * t_d


def td_variance_theory(cell: CellDesign, tech: TechnologyProfile, g0: float) -> float:
    """Detector-node voltage variance proxy beta * c_re * v_thn / i_0, beta = 4kT*gamma*g0.

    The exponential rise of the detector current makes the accumulated noise
    depend only on the state at latch-up, so the result is independent of the
    ramp rate R. Proportional-to-volts^2 units; used for trend checks only.
    """
    beta = 4.0 * BOLTZMANN_J_PER_K * tech.temperature * tech.gamma * g0
    return beta * cell.c_re * tech.v_thn / tech.i_0


def sd_jitter_fitted(cell: CellDesign, fit: JitterFit) -> float:
    """Fitted steady-discharge variance s1 * k1 * c_star / i_star**p1, seconds^2."""
    s1, _ = require_calibrated(fit)
    return s1 * fit.k1 * cell.c_star / cell.i_star**fit.p1


def td_jitter_fitted(cell: CellDesign, fit: JitterFit) -> float:
    """Fitted threshold-detector variance s2 * k2 * (c_star/i_star)**q2, seconds^2.

    Depends on the design only through the ramp rate R = i_star/c_star.
    """
    _, s2 = require_calibrated(fit)
    return s2 * fit.k2 * (cell.c_star / cell.i_star) ** fit.q2


def total_jitter(cell: CellDesign, fit: JitterFit, pair_factor: int = 1) -> JitterBudget:
    """Combined per-cell budget; the two sources are independent.

    pair_factor=2 doubles both variances to account for an equally noisy
    reference-path cell; the default 1 matches the single-cell budget used
    by the feasibility constraint.
    """
    if pair_factor not in (1, 2):
        raise ValueError("pair_factor must be 1 or 2")
    return JitterBudget(
        var_sd=pair_factor * sd_jitter_fitted(cell, fit),
        var_td=pair_factor * td_jitter_fitted(cell, fit),
    )


def sample_cell_jitter(seed: int, cell: CellDesign, fit: JitterFit, count: int) -> np.ndarray:
    """Zero-mean Gaussian jitter samples with the fitted per-cell variance.

    The same seed yields the same sequence on every platform. Callers running
    parallel streams should split seeds (e.g. numpy SeedSequence.spawn)
    rather than share one.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    sigma = total_jitter(cell, fit).sigma_total
    rng = np.random.Generator(np.random.PCG64(seed))
    return sigma * rng.standard_normal(count)
