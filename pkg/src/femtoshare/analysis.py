"""Closed-form downlink outage-probability lower bounds.

Femto-tier outage splits into a macro-interference-only term (exact up to
the exponential-lognormal composite fit) and a composite term covering
outages that additionally need femto-tier interference; the latter is a
dominant-interferer bound over the planar Poisson field of access points,
evaluated with a Gauss-Laguerre x Gauss-Hermite double sum.  Macro-tier
outage uses the analogous single Gauss-Hermite sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    LinkSet,
    LognormalDist,
    NetworkParams,
    build_links,
    composite_fading_shadowing,
    dbm_to_mw,
    fap_power_distribution,
    mw_to_dbm,
    per_subcarrier_power,
)
from .quadrature import Kind, QuadratureRule, make_rule

__all__ = [
    "BoundContext",
    "FemtoOutageBreakdown",
    "femto_outage_macro_only",
    "femto_outage_lower_bound",
    "macro_outage_lower_bound",
    "dominant_interferer_rate_fue",
    "dominant_interferer_rate_mue",
]

# Exponent x such that exp(x) overflows float64; used to cap dominant
# interferer counts whose void probability is already exactly 0.
_EXP_CAP = 700.0


@dataclass(frozen=True)
class FemtoOutageBreakdown:
    """Femto outage lower bound and its two components.

    ``p_total_lb`` is ``p_macro_only + p_composite`` clamped into [0, 1];
    deep inside the exclusion zone the raw sum can numerically exceed 1.
    """

    p_macro_only: float
    p_composite: float
    p_total_lb: float


@dataclass(frozen=True)
class BoundContext:
    """Everything the bound evaluations need, precomputed and immutable.

    ``fap_power`` is the per-subcarrier transmit-power distribution of
    interfering access points (lognormal over mW); ``p_f_serving_dbm`` is
    the tagged femtocell's per-subcarrier power.  Composite channels are
    the lognormal fits of (Rayleigh power x shadowing) per link.
    """

    params: NetworkParams
    links: LinkSet
    fap_power: LognormalDist
    p_f_serving_dbm: float
    laguerre: QuadratureRule
    hermite: QuadratureRule
    comp_serving: LognormalDist        # serving FAP -> its indoor UE
    comp_macro_indoor: LognormalDist   # MBS -> indoor UE
    comp_fap_indoor: LognormalDist     # interfering FAP -> indoor UE
    comp_macro_outdoor: LognormalDist  # MBS -> outdoor UE
    comp_fap_outdoor: LognormalDist    # interfering FAP -> outdoor UE

    @classmethod
    def from_params(
        cls,
        params: NetworkParams,
        serving_total_dbm: float | None = None,
        interferer_min_dbm: float | None = None,
        interferer_max_dbm: float | None = None,
        laguerre_order: int = 12,
        hermite_order: int = 12,
    ) -> "BoundContext":
        """Build a context from scenario parameters.

        The serving femtocell defaults to transmitting at the power cap;
        interfering powers default to the lognormal spanning
        [macro-edge minimum power, per-subcarrier cap].
        """
        links = build_links(params)
        if serving_total_dbm is None:
            serving_total_dbm = params.p_f_max_total_dbm
        serving_dbm = per_subcarrier_power(serving_total_dbm, params.n_subcarriers)
        if interferer_max_dbm is None:
            interferer_max_dbm = params.p_f_max_subcarrier_dbm
        if interferer_min_dbm is None:
            interferer_min_dbm = _power_floor_macro_only_dbm(
                params, links, params.r_m, params.eps_f
            )
        return cls(
            params=params,
            links=links,
            fap_power=fap_power_distribution(interferer_min_dbm, interferer_max_dbm),
            p_f_serving_dbm=serving_dbm,
            laguerre=make_rule(Kind.LAGUERRE, laguerre_order),
            hermite=make_rule(Kind.HERMITE, hermite_order),
            comp_serving=composite_fading_shadowing(
                links.serving_fap_to_indoor.mu_db, links.serving_fap_to_indoor.sigma_db),
            comp_macro_indoor=composite_fading_shadowing(
                links.macro_to_indoor.mu_db, links.macro_to_indoor.sigma_db),
            comp_fap_indoor=composite_fading_shadowing(
                links.interfering_fap_to_indoor.mu_db,
                links.interfering_fap_to_indoor.sigma_db),
            comp_macro_outdoor=composite_fading_shadowing(
                links.macro_to_outdoor.mu_db, links.macro_to_outdoor.sigma_db),
            comp_fap_outdoor=composite_fading_shadowing(
                links.fap_to_outdoor.mu_db, links.fap_to_outdoor.sigma_db),
        )

    def with_serving_power_dbm(self, p_dbm: float) -> "BoundContext":
        """Copy with a different serving per-subcarrier power."""
        return replace(self, p_f_serving_dbm=float(p_dbm))

    def with_interferer_power(self, min_dbm: float, max_dbm: float) -> "BoundContext":
        """Copy with a different interfering-power range."""
        return replace(self, fap_power=fap_power_distribution(min_dbm, max_dbm))

    # -- frequently used linear quantities ---------------------------------

    @property
    def p_m_mw(self) -> float:
        """MBS per-subcarrier power, mW."""
        return float(dbm_to_mw(self.params.p_m_subcarrier_dbm))

    @property
    def p_serving_mw(self) -> float:
        return float(dbm_to_mw(self.p_f_serving_dbm))

    @property
    def ratio_dist(self) -> LognormalDist:
        """Distribution of the serving/macro composite-channel ratio."""
        return LognormalDist(
            self.comp_serving.loc - self.comp_macro_indoor.loc,
            math.hypot(self.comp_serving.scale, self.comp_macro_indoor.scale),
        )


def _macro_only_threshold(ctx: BoundContext, d):
    """Channel-ratio level below which macro interference alone causes
    a femto outage at range ``d``, for the worst-case cell-edge UE."""
    p = ctx.params
    num = ctx.p_m_mw * p.g_m * ctx.links.serving_fap_to_indoor.phi \
        * p.r_f**p.alpha_f * p.gamma_f
    den = ctx.p_serving_mw * p.g_f * ctx.links.macro_to_indoor.phi * d**p.alpha_fm
    return num / den


def femto_outage_macro_only(ctx: BoundContext, d):
    """Probability that macro interference alone breaks the femto SIR
    target, for an indoor UE whose femtocell is ``d`` meters from the MBS.

    Strictly decreasing in ``d`` and in the serving power.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = ctx.ratio_dist.cdf(_macro_only_threshold(ctx, d))
    return float(out) if np.ndim(out) == 0 else out


def _power_floor_macro_only_dbm(
    params: NetworkParams, links: LinkSet, d: float, eps: float
) -> float:
    """Per-subcarrier serving power making the macro-only femto outage
    equal ``eps`` at range ``d`` (closed form)."""
    if not (0 < eps < 1):
        raise ValueError("outage target must lie in (0, 1)")
    comp_serving = composite_fading_shadowing(
        links.serving_fap_to_indoor.mu_db, links.serving_fap_to_indoor.sigma_db)
    comp_macro = composite_fading_shadowing(
        links.macro_to_indoor.mu_db, links.macro_to_indoor.sigma_db)
    ratio = LognormalDist(comp_serving.loc - comp_macro.loc,
                          math.hypot(comp_serving.scale, comp_macro.scale))
    p_m_mw = float(dbm_to_mw(params.p_m_subcarrier_dbm))
    num = p_m_mw * params.g_m * links.serving_fap_to_indoor.phi \
        * params.r_f**params.alpha_f * params.gamma_f
    den = params.g_f * links.macro_to_indoor.phi * d**params.alpha_fm \
        * ratio.quantile(eps)
    return float(mw_to_dbm(num / den))


def dominant_interferer_rate_fue(ctx: BoundContext) -> float:
    """Spatial coefficient of the expected dominant-interferer count seen
    by an indoor femto UE: multiply by the FAP intensity and the power
    margin raised to -2/alpha to get a mean count."""
    p = ctx.params
    a = p.alpha_ff
    if a <= 2:
        raise ValueError("alpha_ff must exceed 2")
    pw = ctx.fap_power
    comp = ctx.comp_fap_indoor
    geo = (p.g_f * p.g_u * p.gamma_f / ctx.links.interfering_fap_to_indoor.phi) ** (2.0 / a)
    moment = math.exp(2.0 * (comp.loc + pw.loc) / a
                      + 2.0 * (comp.scale**2 + pw.scale**2) / a**2)
    return math.pi * geo * moment


def dominant_interferer_rate_mue(ctx: BoundContext) -> float:
    """Same coefficient for an outdoor macro UE."""
    p = ctx.params
    a = p.alpha_mf
    if a <= 2:
        raise ValueError("alpha_mf must exceed 2")
    pw = ctx.fap_power
    comp = ctx.comp_fap_outdoor
    geo = (p.g_f * p.g_u * p.gamma_m / ctx.links.fap_to_outdoor.phi) ** (2.0 / a)
    moment = math.exp(2.0 * (comp.loc + pw.loc) / a
                      + 2.0 * (comp.scale**2 + pw.scale**2) / a**2)
    return math.pi * geo * moment


def _signal_ln_loc(ctx: BoundContext) -> float:
    """Natural-log location of the received femto signal power (mW)."""
    p = ctx.params
    link = ctx.links.serving_fap_to_indoor
    return ctx.comp_serving.loc + math.log(
        ctx.p_serving_mw * p.g_f * p.g_u / (link.phi * p.r_f**p.alpha_f))


def _macro_interf_ln_loc(ctx: BoundContext, d: float) -> float:
    """Natural-log location of the received macro interference power (mW)
    at range ``d``."""
    p = ctx.params
    link = ctx.links.macro_to_indoor
    return ctx.comp_macro_indoor.loc + math.log(
        ctx.p_m_mw * p.g_m * p.g_u / (link.phi * d**p.alpha_fm))


def _femto_composite_term(ctx: BoundContext, d: float, lambda_f: float) -> float:
    """Double quadrature sum for the femto-plus-macro interference term.

    Evaluated in log space; where the quadrature node puts the signal
    sample at or below the macro-interference threshold the bracketed
    void-probability factor is taken as 1 (its limit from above).
    """
    if lambda_f == 0.0:
        return 0.0
    p = ctx.params
    mu_s = _signal_ln_loc(ctx)
    sc_s = ctx.comp_serving.scale
    mu_i = _macro_interf_ln_loc(ctx, d)
    sc_i = ctx.comp_macro_indoor.scale
    ln_gamma = math.log(p.gamma_f)
    rate = dominant_interferer_rate_fue(ctx) * lambda_f

    a_n = ctx.laguerre.nodes[:, None]
    w_n = ctx.laguerre.weights[:, None]
    b_m = ctx.hermite.nodes[None, :]
    v_m = ctx.hermite.weights[None, :]

    ln_z = math.sqrt(2.0) * sc_i * b_m + mu_i + ln_gamma
    chi = (ln_z - mu_s) ** 2 / (2.0 * sc_s**2)
    ln_w = mu_s + np.sqrt(2.0 * a_n + 2.0 * chi) * sc_s
    diff = np.broadcast_to(ln_z, ln_w.shape) - ln_w
    signal_above = diff < 0.0
    # log(signal - threshold), defined only where the base is positive
    ln_base = np.where(signal_above,
                       ln_w + np.log1p(-np.exp(np.where(signal_above, diff, -1.0))),
                       0.0)
    exponent = np.minimum(math.log(rate) - (2.0 / p.alpha_ff) * ln_base, _EXP_CAP)
    bracket = np.where(signal_above, -np.expm1(-np.exp(exponent)), 1.0)
    dens = np.exp(-chi) / (2.0 * math.pi * np.sqrt(a_n + chi))
    return float(np.sum(w_n * v_m * bracket * dens))


def femto_outage_lower_bound(ctx: BoundContext, d, lambda_f: float | None = None):
    """Lower bound of the femto downlink outage probability at range ``d``.

    Returns a :class:`FemtoOutageBreakdown`; with an array ``d`` the fields
    hold arrays.  ``lambda_f`` overrides the scenario FAP intensity.
    """
    if lambda_f is None:
        lambda_f = ctx.params.lambda_f
    if lambda_f < 0:
        raise ValueError("lambda_f must be non-negative")
    d_arr = np.atleast_1d(np.asarray(d, dtype=float))
    if np.any(d_arr <= 0):
        raise ValueError("distance must be positive")
    p_macro = np.asarray(femto_outage_macro_only(ctx, d_arr), dtype=float)
    p_comp = np.array([_femto_composite_term(ctx, di, lambda_f) for di in d_arr])
    p_total = np.minimum(p_macro + p_comp, 1.0)
    if np.ndim(d) == 0:
        return FemtoOutageBreakdown(float(p_macro[0]), float(p_comp[0]), float(p_total[0]))
    return FemtoOutageBreakdown(p_macro, p_comp, p_total)


def macro_outage_lower_bound(ctx: BoundContext, d, lambda_eff: float | None = None):
    """Lower bound of the macro downlink outage probability at range ``d``.

    ``lambda_eff`` is the intensity of access points transmitting in the
    resource block (pass a thinned value to model reduced activity);
    defaults to the scenario intensity.  Non-decreasing in ``d``, the
    intensity, and the interferer power statistics.
    """
    p = ctx.params
    if lambda_eff is None:
        lambda_eff = p.lambda_f
    if lambda_eff < 0:
        raise ValueError("lambda_eff must be non-negative")
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    a = p.alpha_mf
    b_m = ctx.hermite.nodes
    v_m = ctx.hermite.weights
    comp_out = ctx.comp_fap_outdoor
    comp_sig = ctx.comp_macro_outdoor
    geo = (p.g_f * ctx.links.macro_to_outdoor.phi * p.gamma_m
           / (p.g_m * ctx.links.fap_to_outdoor.phi)) ** (2.0 / a)
    b_tilde = math.pi * geo * np.exp(
        2.0 * (comp_out.loc - comp_sig.loc - math.sqrt(2.0) * comp_sig.scale * b_m) / a
        + 2.0 * comp_out.scale**2 / a**2)
    power_factor = math.exp(2.0 * ctx.fap_power.loc / a
                            + 2.0 * ctx.fap_power.scale**2 / a**2)
    dist_factor = (d[..., None] ** p.alpha_m / ctx.p_m_mw) ** (2.0 / a)
    ln_void = -np.minimum(b_tilde * lambda_eff * power_factor * dist_factor, _EXP_CAP)
    out = 1.0 - np.sum(v_m / math.sqrt(math.pi) * np.exp(ln_void), axis=-1)
    out = np.clip(out, 0.0, 1.0)   # the weight sum is 1 only to machine precision
    return float(out) if out.ndim == 0 else out
