"""Decentralized femtocell self-regulation.

A femtocell a distance ``d`` from the macro base station needs at least a
distance-dependent floor of transmit power to protect its own downlink
from macro interference, and at most a distance-dependent ceiling to
protect macro users.  When the window closes, the femtocell keeps the
floor power but transmits in each resource block only with a reduced
probability chosen so the thinned interferer field still meets the macro
outage constraint at the cell edge.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .analysis import (
    BoundContext,
    _power_floor_macro_only_dbm,
    femto_outage_lower_bound,
    macro_outage_lower_bound,
)
from .model import DB_TO_LN

__all__ = [
    "InfeasibleError",
    "Mode",
    "RegulationDecision",
    "RegulationTable",
    "min_serving_power_dbm",
    "min_deployment_distance",
    "power_floor_approx_dbm",
    "power_floor_exact_dbm",
    "power_ceiling_dbm",
    "rb_access_probability",
    "decide",
    "WINDOW_FLOOR_MARGIN_DB",
]

# Bisection tolerance in dB; far tighter than the 1e-3 dB the regulation
# round-trip properties require.
_XTOL_DB = 1e-9
_MAXITER = 200

# Default back-off above the window's power floor.  The floor is calibrated
# against a lower bound of the femto outage, so transmitting exactly at it
# leaves the realized outage above the target by the bound's gap (~0.004
# at the reference scenario's outer distances); half a dB covers that gap
# while staying ~0.8 dB under the level where the macro edge constraint
# tightens.  Rule-b (thinned) power is pinned to the floor itself.
WINDOW_FLOOR_MARGIN_DB = 0.5


class InfeasibleError(ValueError):
    """No admissible power satisfies the requested outage constraint."""


class Mode(enum.Enum):
    WINDOW = "window"      # transmit every RB, power anywhere in [floor, ceiling]
    THINNED = "thinned"    # transmit at the floor power with probability rho
    EXCLUDED = "excluded"  # too close to the MBS to meet the femto constraint


@dataclass(frozen=True)
class RegulationDecision:
    d: float
    p_lb_dbm: float
    p_ub_dbm: float
    transmit_prob: float
    mode: Mode
    tx_power_dbm: float


def min_serving_power_dbm(ctx: BoundContext) -> float:
    """Smallest per-subcarrier power letting a cell-edge femtocell meet its
    outage constraint against macro interference alone."""
    p = ctx.params
    return _power_floor_macro_only_dbm(p, ctx.links, p.r_m, p.eps_f)


def min_deployment_distance(ctx: BoundContext) -> float:
    """Closest admissible femtocell distance from the MBS: nearer than
    this, even the capped power misses the femto outage constraint."""
    p = ctx.params
    if p.p_f_max_total_dbm is None or not math.isfinite(p.p_f_max_total_dbm):
        raise ValueError("power cap must be finite")
    # Invert the macro-only outage in distance at the power cap.
    floor_at_rm = _power_floor_macro_only_dbm(p, ctx.links, p.r_m, p.eps_f)
    cap = p.p_f_max_subcarrier_dbm
    # floor(d) = floor(r_m) * (r_m/d)^alpha_fm in linear power
    ratio_db = floor_at_rm - cap
    return p.r_m * 10.0 ** (ratio_db / (10.0 * p.alpha_fm))


def power_floor_approx_dbm(ctx: BoundContext, d: float) -> float:
    """Closed-form power floor: macro interference treated as the only
    outage source.  Non-increasing in ``d``; equals the cap at the minimum
    deployment distance and the edge minimum power at ``r_m``."""
    if d <= 0:
        raise ValueError("distance must be positive")
    p = ctx.params
    return _power_floor_macro_only_dbm(p, ctx.links, d, p.eps_f)


def power_floor_exact_dbm(ctx: BoundContext, d: float) -> float:
    """Power floor from the full femto outage lower bound (macro plus
    femto interference), found by bracketed bisection in dBm.

    Raises :class:`InfeasibleError` when no root lies at or below the
    per-subcarrier power cap.
    """
    p = ctx.params
    cap = p.p_f_max_subcarrier_dbm

    def excess(p_dbm: float) -> float:
        probe = ctx.with_serving_power_dbm(p_dbm)
        return femto_outage_lower_bound(probe, d).p_total_lb - p.eps_f

    lo = power_floor_approx_dbm(ctx, d)   # excess >= 0 here by construction
    if excess(cap) > 0.0:
        raise InfeasibleError(
            f"femto outage constraint unreachable at d={d:.1f} m within the power cap")
    if lo >= cap:
        return cap
    return bisect(excess, lo, cap, xtol=_XTOL_DB, maxiter=_MAXITER)


def _ceiling_branch_floor_dbm(ctx: BoundContext, min_dbm: float) -> float:
    """Left end of the max-power branch on which the macro bound increases
    with the power ceiling (the variance term dominates further down)."""
    return min_dbm - 9.0 * ctx.params.alpha_mf / DB_TO_LN


def power_ceiling_dbm(ctx: BoundContext, d: float, lambda_f: float | None = None) -> float:
    """Largest admissible maximum FAP power at range ``d``: interferer
    powers spread between the fixed edge minimum and this ceiling drive
    the macro outage bound exactly to its constraint.

    The root may fall below the minimum power (the spread then only enters
    through its square); it may also exceed the cap, in which case the cap
    is not binding.  Raises :class:`InfeasibleError` when the constraint
    cannot be met for any ceiling on the admissible branch.
    """
    p = ctx.params
    if d <= 0:
        raise ValueError("distance must be positive")
    if lambda_f is None:
        lambda_f = p.lambda_f
    if lambda_f <= 0:
        raise ValueError("lambda_f must be positive")
    min_dbm = min_serving_power_dbm(ctx)

    def excess(max_dbm: float) -> float:
        lo, hi = sorted((min_dbm, max_dbm))
        probe = ctx.with_interferer_power(lo, hi)
        return macro_outage_lower_bound(probe, d, lambda_eff=lambda_f) - p.eps_m

    lo = _ceiling_branch_floor_dbm(ctx, min_dbm) + 1e-6
    if excess(lo) > 0.0:
        raise InfeasibleError(
            f"macro outage constraint unreachable at d={d:.1f} m for any power ceiling")
    hi = max(min_dbm, p.p_f_max_subcarrier_dbm) + 60.0
    while excess(hi) < 0.0:
        hi += 60.0
        if hi > 1000.0:
            raise InfeasibleError("macro outage bound saturates below the constraint")
    return bisect(excess, lo, hi, xtol=_XTOL_DB, maxiter=_MAXITER)


def rb_access_probability(ctx: BoundContext, lambda_f: float | None = None) -> float:
    """Per-resource-block transmission probability of the self-regulation
    strategy.

    Returns 1.0 while the power window stays open everywhere (the ceiling
    at the cell edge, where it is tightest, still clears the floor);
    otherwise the closed-form thinning factor that lets every access point
    keep the floor power with the macro edge constraint intact.
    """
    p = ctx.params
    if lambda_f is None:
        lambda_f = p.lambda_f
    ceiling_edge = power_ceiling_dbm(ctx, p.r_m, lambda_f)
    floor_edge = min_serving_power_dbm(ctx)
    if ceiling_edge >= floor_edge:
        return 1.0
    cap = p.p_f_max_subcarrier_dbm
    a = p.alpha_mf
    z = DB_TO_LN
    rho = math.exp(
        z * (ceiling_edge - cap) / a
        + z**2 * (ceiling_edge**2 - cap**2) / (18.0 * a**2)
        - z**2 * floor_edge * (ceiling_edge - cap) / (9.0 * a**2)
    )
    return min(rho, 1.0)


def decide(
    ctx: BoundContext,
    d: float,
    lambda_f: float | None = None,
    lb_method: str = "exact",
    power_policy: str = "margin",
) -> RegulationDecision:
    """Self-regulation decision for a femtocell ``d`` meters from the MBS.

    ``lb_method`` selects the exact power floor (root of the full femto
    bound) or the closed-form approximation; ``power_policy`` picks the
    transmit power inside an open window: ``margin`` (floor plus
    ``WINDOW_FLOOR_MARGIN_DB``, capped at the window top; default),
    ``lower``, ``midpoint``, or ``upper``.
    """
    if d <= 0:
        raise ValueError("distance must be positive")
    p = ctx.params
    if lambda_f is None:
        lambda_f = p.lambda_f
    if d < min_deployment_distance(ctx):
        return RegulationDecision(d, math.nan, math.nan, 0.0, Mode.EXCLUDED, math.nan)
    cap = p.p_f_max_subcarrier_dbm
    if lb_method == "exact":
        try:
            lb = power_floor_exact_dbm(ctx, d)
        except InfeasibleError:
            # Boundary sliver just above the minimum deployment distance
            # where the exact floor peeks over the cap: pin to the cap.
            lb = cap
    elif lb_method == "approx":
        lb = min(power_floor_approx_dbm(ctx, d), cap)
    else:
        raise ValueError(f"unknown lb_method: {lb_method!r}")
    ceiling = power_ceiling_dbm(ctx, d, lambda_f) if lambda_f > 0 else math.inf
    ub = min(ceiling, cap)
    if lb <= ub:
        if power_policy == "margin":
            tx = min(lb + WINDOW_FLOOR_MARGIN_DB, ub)
        elif power_policy == "lower":
            tx = lb
        elif power_policy == "upper":
            tx = ub
        elif power_policy == "midpoint":
            tx = 0.5 * (lb + ub)
        else:
            raise ValueError(f"unknown power_policy: {power_policy!r}")
        return RegulationDecision(d, lb, ub, 1.0, Mode.WINDOW, tx)
    rho = rb_access_probability(ctx, lambda_f)
    return RegulationDecision(d, lb, ub, rho, Mode.THINNED, lb)


@dataclass(frozen=True)
class RegulationTable:
    """Vectorized view of :func:`decide` over a distance grid.

    Power curves are smooth and monotone, so the simulator interpolates
    them; the window-to-thinned switch is resolved to a single onset
    distance instead of being interpolated.
    """

    d_min_deploy: float
    d_thinned_onset: float          # inf when the window never closes
    rho: float
    grid: np.ndarray
    tx_power_dbm: np.ndarray

    def query(self, d):
        """Transmit power (dBm), RB access probability, and deployment
        mask for an array of distances."""
        d = np.asarray(d, dtype=float)
        deployed = d >= self.d_min_deploy
        tx = np.interp(d, self.grid, self.tx_power_dbm)
        prob = np.where(d >= self.d_thinned_onset, self.rho, 1.0)
        tx = np.where(deployed, tx, np.nan)
        prob = np.where(deployed, prob, 0.0)
        return tx, prob, deployed

    @classmethod
    def build(
        cls,
        ctx: BoundContext,
        lambda_f: float | None = None,
        d_max: float | None = None,
        n_points: int = 192,
        lb_method: str = "exact",
        power_policy: str = "margin",
    ) -> "RegulationTable":
        p = ctx.params
        if lambda_f is None:
            lambda_f = p.lambda_f
        if d_max is None:
            d_max = p.r_m
        d_min = min_deployment_distance(ctx)
        grid = np.geomspace(d_min, max(d_max, d_min * 1.001), n_points)
        decisions = [decide(ctx, float(di), lambda_f, lb_method, power_policy)
                     for di in grid]
        tx = np.array([dec.tx_power_dbm for dec in decisions])
        thinned = np.array([dec.mode is Mode.THINNED for dec in decisions])
        rho = rb_access_probability(ctx, lambda_f)
        if not thinned.any():
            onset = math.inf
        elif thinned.all():
            onset = d_min
        else:
            # refine the first window->thinned switch between grid neighbors
            k = int(np.argmax(thinned))
            lo, hi = grid[k - 1], grid[k]
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if decide(ctx, mid, lambda_f, lb_method, power_policy).mode is Mode.THINNED:
                    hi = mid
                else:
                    lo = mid
            onset = hi
        return cls(d_min, onset, rho, grid, tx)
