"""Ground-truth simulator for the spectrum-sharing downlink.

Femtocell positions follow a Poisson point process over a disc large
enough that truncation is immaterial for victims anywhere inside the
macrocell (``drop_region_factor`` times the cell radius).  Fading and
shadowing are drawn per trial and per link: Rayleigh power (unit-mean
exponential) times lognormal shadowing, sampled separately rather than
through the composite lognormal fit used by the analytic bounds.

Victim placement: the outage probability at range ``d`` is isotropic, so
each trial the victim sits at a fresh uniform azimuth on the radius-``d``
circle; this is an unbiased estimator of the same quantity with far less
drop-geometry variance than a fixed victim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .analysis import BoundContext
from .model import DB_TO_LN, LognormalDist, NetworkParams, build_links, dbm_to_mw
from .regulation import Mode, RegulationTable, decide

__all__ = [
    "FemtoDrop",
    "SimResult",
    "drop_faps",
    "sample_sir_fue",
    "sample_sir_mue",
    "estimate_op",
    "estimate_ase",
]

# Interferers closer than this to a victim are clamped to this path
# distance: the power law diverges at 0 and sub-meter proximity has
# negligible probability under the scenario intensities.
MIN_INTERFERER_DISTANCE_M = 1.0


@dataclass(frozen=True)
class FemtoDrop:
    """One realization of interfering femtocell access points.

    ``fap_rb_masks`` has one row per FAP and one column per resource
    block; an entry marks the FAP transmitting in that RB.
    """

    fap_positions: np.ndarray    # (n, 2) meters, MBS at the origin
    fap_powers_dbm: np.ndarray   # (n,) per-subcarrier transmit power
    fap_rb_masks: np.ndarray     # (n, n_rb) bool
    seed: object = None

    @property
    def n_faps(self) -> int:
        return self.fap_positions.shape[0]

    def distances_to_mbs(self) -> np.ndarray:
        return np.hypot(self.fap_positions[:, 0], self.fap_positions[:, 1])


@dataclass(frozen=True)
class SimResult:
    """Pooled Monte-Carlo estimate with its binomial standard error."""

    op_estimate: float
    std_err: float
    n_trials: int
    ase_f: float | None = None
    ase_m: float | None = None
    ase_total: float | None = None


def _pooled(outages: int, n: int) -> tuple[float, float]:
    p = outages / n
    return p, math.sqrt(p * (1.0 - p) / n)


def drop_faps(
    params: NetworkParams,
    region_radius: float,
    rng: np.random.Generator,
    power_dist: LognormalDist | None = None,
    regulation: RegulationTable | None = None,
    min_radius: float = 0.0,
    seed: object = None,
) -> FemtoDrop:
    """Sample one FAP field: Poisson count at the scenario intensity,
    positions uniform over the disc (annulus when ``min_radius`` > 0).

    Powers are i.i.d. draws from ``power_dist``, or set per FAP distance
    by a regulation table (which also thins RB usage); exactly one of the
    two must be given unless the field is empty.
    """
    if region_radius <= 0:
        raise ValueError("region radius must be positive")
    if min_radius < 0 or min_radius >= region_radius:
        raise ValueError("need 0 <= min_radius < region_radius")
    area = math.pi * (region_radius**2 - min_radius**2)
    n = int(rng.poisson(params.lambda_f * area))
    # uniform over the annulus via inverse-CDF radius sampling
    u = rng.random(n)
    radius = np.sqrt(min_radius**2 + u * (region_radius**2 - min_radius**2))
    theta = rng.uniform(0.0, 2.0 * math.pi, n)
    pos = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    if regulation is not None:
        tx_dbm, prob, deployed = regulation.query(radius)
        keep = deployed
        pos, tx_dbm, prob = pos[keep], tx_dbm[keep], prob[keep]
        n = pos.shape[0]
        masks = rng.random((n, params.n_rb)) < prob[:, None]
    elif power_dist is not None:
        tx_dbm = 10.0 * np.log10(power_dist.sample(rng, n)) if n else np.empty(0)
        masks = np.ones((n, params.n_rb), dtype=bool)
    elif n == 0:
        tx_dbm = np.empty(0)
        masks = np.ones((0, params.n_rb), dtype=bool)
    else:
        raise ValueError("provide power_dist or regulation to assign powers")
    return FemtoDrop(pos, np.asarray(tx_dbm, dtype=float), masks, seed)


# -- per-link coefficient helpers ------------------------------------------


def _fue_signal_coeff(params: NetworkParams, links, serving_power_dbm: float) -> float:
    """Received femto signal power per unit channel gain, mW (cell-edge UE)."""
    p_mw = float(dbm_to_mw(serving_power_dbm))
    link = links.serving_fap_to_indoor
    return p_mw * params.g_f * params.g_u / (link.phi * params.r_f**params.alpha_f)


def _mbs_to_fue_coeff(params: NetworkParams, links, d: float) -> float:
    link = links.macro_to_indoor
    p_mw = float(dbm_to_mw(params.p_m_subcarrier_dbm))
    return p_mw * params.g_m * params.g_u / (link.phi * d**params.alpha_fm)


def _mbs_to_mue_coeff(params: NetworkParams, links, d):
    link = links.macro_to_outdoor
    p_mw = float(dbm_to_mw(params.p_m_subcarrier_dbm))
    return p_mw * params.g_m * params.g_u / (link.phi * d**params.alpha_m)


def _fap_interference_coeffs(params: NetworkParams, links, drop: FemtoDrop,
                             indoor_victim: bool) -> np.ndarray:
    """Per-FAP interference coefficient (multiply by channel gain and
    distance^-alpha): power x gains / fixed loss."""
    link = links.interfering_fap_to_indoor if indoor_victim else links.fap_to_outdoor
    p_mw = np.asarray(dbm_to_mw(drop.fap_powers_dbm)) if drop.n_faps else np.empty(0)
    return p_mw * params.g_f * params.g_u / link.phi


def _hq(rng: np.random.Generator, mu_db: float, sigma_db: float, size):
    """Rayleigh-power fading times lognormal shadowing, sampled separately."""
    return rng.exponential(size=size) * rng.lognormal(
        DB_TO_LN * mu_db, DB_TO_LN * sigma_db, size)


# -- single-draw reference samplers ----------------------------------------


def sample_sir_fue(
    params: NetworkParams,
    drop: FemtoDrop,
    d_fm: float,
    serving_power_dbm: float,
    rng: np.random.Generator | None,
    rb: int = 0,
) -> float:
    """One draw of the cell-edge femto UE SIR at range ``d_fm`` from the MBS.

    With ``rng=None`` every channel gain is deterministic (Rayleigh power 1,
    shadowing at its median) and the victim sits on the +x axis; useful as
    a hand-checkable reference.  Empty interference yields ``inf``.
    """
    if d_fm <= 0:
        raise ValueError("distance must be positive")
    links = build_links(params)
    if rng is None:
        theta = 0.0
        hq_s = hq_m = 1.0
        hq_i = np.ones(drop.n_faps)
    else:
        theta = rng.uniform(0.0, 2.0 * math.pi)
        hq_s = float(_hq(rng, links.serving_fap_to_indoor.mu_db,
                         links.serving_fap_to_indoor.sigma_db, None))
        hq_m = float(_hq(rng, links.macro_to_indoor.mu_db,
                         links.macro_to_indoor.sigma_db, None))
        hq_i = _hq(rng, links.interfering_fap_to_indoor.mu_db,
                   links.interfering_fap_to_indoor.sigma_db, drop.n_faps)
    signal = _fue_signal_coeff(params, links, serving_power_dbm) * hq_s
    interf = _mbs_to_fue_coeff(params, links, d_fm) * hq_m
    if drop.n_faps:
        ue = np.array([d_fm * math.cos(theta), d_fm * math.sin(theta)])
        dist = np.linalg.norm(drop.fap_positions - ue, axis=1)
        dist = np.maximum(dist, MIN_INTERFERER_DISTANCE_M)
        coeff = _fap_interference_coeffs(params, links, drop, indoor_victim=True)
        active = drop.fap_rb_masks[:, rb]
        interf += float(np.sum(active * coeff * hq_i
                               * dist**(-params.alpha_ff)))
    if interf <= 0.0:
        return math.inf
    return signal / interf


def sample_sir_mue(
    params: NetworkParams,
    drop: FemtoDrop,
    d_m: float,
    rng: np.random.Generator | None,
    rb: int = 0,
) -> float:
    """One draw of the macro UE SIR at range ``d_m`` from the MBS."""
    if d_m <= 0:
        raise ValueError("distance must be positive")
    links = build_links(params)
    if rng is None:
        theta = 0.0
        hq_s = 1.0
        hq_i = np.ones(drop.n_faps)
    else:
        theta = rng.uniform(0.0, 2.0 * math.pi)
        hq_s = float(_hq(rng, links.macro_to_outdoor.mu_db,
                         links.macro_to_outdoor.sigma_db, None))
        hq_i = _hq(rng, links.fap_to_outdoor.mu_db,
                   links.fap_to_outdoor.sigma_db, drop.n_faps)
    signal = _mbs_to_mue_coeff(params, links, d_m) * hq_s
    interf = 0.0
    if drop.n_faps:
        ue = np.array([d_m * math.cos(theta), d_m * math.sin(theta)])
        dist = np.linalg.norm(drop.fap_positions - ue, axis=1)
        dist = np.maximum(dist, MIN_INTERFERER_DISTANCE_M)
        coeff = _fap_interference_coeffs(params, links, drop, indoor_victim=False)
        active = drop.fap_rb_masks[:, rb]
        interf = float(np.sum(active * coeff * hq_i * dist**(-params.alpha_mf)))
    if interf <= 0.0:
        return math.inf
    return signal / interf


# -- batched estimation ------------------------------------------------------


def _drop_rng(seed: int, point: int, drop_idx: int) -> np.random.Generator:
    """Independent stream per (sweep point, drop): scheduling-invariant."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((seed, point, drop_idx))))


def _simulate_drop_outages(
    params: NetworkParams,
    links,
    drop: FemtoDrop,
    tier: str,
    d: float,
    n_trials: int,
    rng: np.random.Generator,
    serving_power_dbm: float | None,
    serving_prob: float = 1.0,
) -> int:
    """Outage count over ``n_trials`` victim trials against one drop."""
    indoor = tier == "femto"
    theta = rng.uniform(0.0, 2.0 * math.pi, n_trials)
    ux = d * np.cos(theta)
    uy = d * np.sin(theta)
    if indoor:
        sig_link = links.serving_fap_to_indoor
        sig = _fue_signal_coeff(params, links, serving_power_dbm) \
            * _hq(rng, sig_link.mu_db, sig_link.sigma_db, n_trials)
        macro_link = links.macro_to_indoor
        fixed = _mbs_to_fue_coeff(params, links, d) \
            * _hq(rng, macro_link.mu_db, macro_link.sigma_db, n_trials)
        ilink = links.interfering_fap_to_indoor
        gamma = params.gamma_f
        alpha = params.alpha_ff
        # the victim's RB follows its serving femtocell's active set
        if serving_prob >= 1.0:
            rb = rng.integers(0, params.n_rb, n_trials)
        else:
            mask = rng.random(params.n_rb) < serving_prob
            while not mask.any():
                mask = rng.random(params.n_rb) < serving_prob
            rb = rng.choice(np.flatnonzero(mask), size=n_trials)
    else:
        sig_link = links.macro_to_outdoor
        sig = _mbs_to_mue_coeff(params, links, d) \
            * _hq(rng, sig_link.mu_db, sig_link.sigma_db, n_trials)
        fixed = np.zeros(n_trials)
        ilink = links.fap_to_outdoor
        gamma = params.gamma_m
        alpha = params.alpha_mf
        rb = rng.integers(0, params.n_rb, n_trials)
    if drop.n_faps == 0:
        interf_pos = fixed > 0.0
        return int(np.count_nonzero(interf_pos & (sig < gamma * fixed)))
    hq_i = _hq(rng, ilink.mu_db, ilink.sigma_db, (n_trials, drop.n_faps))
    p_coef = _fap_interference_coeffs(params, links, drop, indoor_victim=indoor)
    return int(_kernels.outage_count(
        sig, fixed, hq_i, p_coef,
        np.ascontiguousarray(drop.fap_positions[:, 0]),
        np.ascontiguousarray(drop.fap_positions[:, 1]),
        ux, uy, alpha / 2.0, drop.fap_rb_masks,
        rb.astype(np.int64), gamma, MIN_INTERFERER_DISTANCE_M**2, -1))


def estimate_op(
    params: NetworkParams,
    tier: str,
    distances,
    n_drops: int = 100,
    n_trials: int = 1000,
    seed: int = 0,
    mode: str = "validation",
    serving_total_dbm: float | None = None,
    interferer_min_dbm: float | None = None,
    drop_region_factor: float = 3.0,
    lb_method: str = "exact",
    power_policy: str = "margin",
    point_offset: int = 0,
) -> list[SimResult]:
    """Empirical downlink outage probability per victim distance.

    ``tier`` is ``"femto"`` (indoor UE at the edge of a femtocell at that
    range) or ``"macro"`` (outdoor UE).  ``mode="validation"`` draws
    interferer powers i.i.d. from the scenario lognormal; ``"regulated"``
    runs the self-regulation strategy per FAP (and sets the femto victim's
    serving power the same way).  ``point_offset`` shifts the per-point RNG
    stream index so grid points dispatched individually reproduce the
    sequential run bit for bit.
    """
    if tier not in ("femto", "macro"):
        raise ValueError("tier must be 'femto' or 'macro'")
    if mode not in ("validation", "regulated"):
        raise ValueError("mode must be 'validation' or 'regulated'")
    if n_drops < 1 or n_trials < 1:
        raise ValueError("n_drops and n_trials must be >= 1")
    distances = np.atleast_1d(np.asarray(distances, dtype=float))
    if np.any(distances <= 0):
        raise ValueError("distances must be positive")
    ctx = BoundContext.from_params(
        params,
        serving_total_dbm=serving_total_dbm,
        interferer_min_dbm=interferer_min_dbm,
    )
    region = drop_region_factor * params.r_m
    links = ctx.links
    regulation = None
    if mode == "regulated":
        regulation = RegulationTable.build(
            ctx, d_max=region, lb_method=lb_method, power_policy=power_policy)
    results = []
    for pt, d in enumerate(distances, start=point_offset):
        if mode == "regulated" and tier == "femto":
            dec = decide(ctx, float(d), lb_method=lb_method, power_policy=power_policy)
            if dec.mode is Mode.EXCLUDED:
                raise ValueError(
                    f"femtocells cannot be deployed at d={d:.1f} m "
                    f"(< {regulation.d_min_deploy:.1f} m)")
            serving_dbm, serving_prob = dec.tx_power_dbm, dec.transmit_prob
        else:
            serving_prob = 1.0
            serving_dbm = ctx.p_f_serving_dbm
        outages = 0
        for k in range(n_drops):
            rng = _drop_rng(seed, pt, k)
            drop = drop_faps(
                params, region, rng,
                power_dist=None if regulation is not None else ctx.fap_power,
                regulation=regulation,
                min_radius=regulation.d_min_deploy if regulation is not None else 0.0,
                seed=(seed, pt, k),
            )
            outages += _simulate_drop_outages(
                params, links, drop, tier, float(d), n_trials, rng,
                serving_dbm, serving_prob)
        p, se = _pooled(outages, n_drops * n_trials)
        results.append(SimResult(p, se, n_drops * n_trials))
    return results


def estimate_ase(
    params: NetworkParams,
    n_drops: int = 40,
    n_trials: int = 200,
    seed: int = 0,
    tagged_faps_per_drop: int = 24,
    drop_region_factor: float = 3.0,
    lb_method: str = "exact",
    power_policy: str = "margin",
) -> SimResult:
    """Area spectral efficiency (b/s/Hz/m^2) under self-regulation.

    Per drop, the femto term averages per-RB transmission density times
    conditional success over a tagged subsample of in-cell femtocells; the
    macro term averages success over macro UEs placed uniformly in the
    cell.  ``op_estimate`` reports the pooled macro outage probability.
    """
    ctx = BoundContext.from_params(params)
    links = ctx.links
    region = drop_region_factor * params.r_m
    regulation = None
    if params.lambda_f > 0:
        regulation = RegulationTable.build(
            ctx, d_max=region, lb_method=lb_method, power_policy=power_policy)
    cell_area = math.pi * params.r_m**2
    se_f = math.log2(1.0 + params.gamma_f)
    se_m = math.log2(1.0 + params.gamma_m)
    ase_f_acc = 0.0
    ase_m_acc = 0.0
    mue_outages = 0
    mue_trials = 0
    for k in range(n_drops):
        rng = _drop_rng(seed, 0, k)
        drop = drop_faps(
            params, region, rng, regulation=regulation,
            power_dist=None if regulation is not None else ctx.fap_power,
            min_radius=regulation.d_min_deploy if regulation is not None else 0.0,
            seed=(seed, 0, k))
        dist_mbs = drop.distances_to_mbs()
        in_cell = np.flatnonzero(dist_mbs <= params.r_m)
        # femto side: tagged subsample, unbiased via the count ratio
        density_success = 0.0
        if in_cell.size:
            n_tag = min(tagged_faps_per_drop, in_cell.size)
            tagged = rng.choice(in_cell, size=n_tag, replace=False)
            for j in tagged:
                active_rbs = np.flatnonzero(drop.fap_rb_masks[j])
                if active_rbs.size == 0:
                    continue
                activity = active_rbs.size / params.n_rb
                succ = _tagged_fue_success(
                    params, links, drop, int(j), active_rbs, n_trials, rng)
                density_success += activity * (succ / n_trials)
            density_success *= in_cell.size / n_tag
        ase_f_acc += density_success / cell_area * se_f
        # macro side: uniform victims in the cell
        succ_m, n_m = _uniform_mue_success(params, links, drop, n_trials, rng)
        ase_m_acc += params.mue_density * (succ_m / n_m) * se_m
        mue_outages += n_m - succ_m
        mue_trials += n_m
    ase_f = ase_f_acc / n_drops
    ase_m = ase_m_acc / n_drops
    p, se = _pooled(mue_outages, mue_trials)
    return SimResult(p, se, mue_trials, ase_f=ase_f, ase_m=ase_m,
                     ase_total=ase_f + ase_m)


def _tagged_fue_success(params, links, drop, j, active_rbs, n_trials, rng) -> int:
    """Success count for the edge UE of tagged FAP ``j``, conditional on
    the FAP transmitting (RBs drawn from its active set)."""
    pos_j = drop.fap_positions[j]
    d_j = float(np.hypot(pos_j[0], pos_j[1]))
    theta = rng.uniform(0.0, 2.0 * math.pi, n_trials)
    ux = pos_j[0] + params.r_f * np.cos(theta)
    uy = pos_j[1] + params.r_f * np.sin(theta)
    sig_link = links.serving_fap_to_indoor
    sig = _fue_signal_coeff(params, links, float(drop.fap_powers_dbm[j])) \
        * _hq(rng, sig_link.mu_db, sig_link.sigma_db, n_trials)
    macro_link = links.macro_to_indoor
    # UEs of one femtocell share their access point's macro path loss
    fixed = _mbs_to_fue_coeff(params, links, max(d_j, 1.0)) \
        * _hq(rng, macro_link.mu_db, macro_link.sigma_db, n_trials)
    rb = rng.choice(active_rbs, size=n_trials)
    ilink = links.interfering_fap_to_indoor
    hq_i = _hq(rng, ilink.mu_db, ilink.sigma_db, (n_trials, drop.n_faps))
    p_coef = _fap_interference_coeffs(params, links, drop, indoor_victim=True)
    outs = int(_kernels.outage_count(
        sig, fixed, hq_i, p_coef,
        np.ascontiguousarray(drop.fap_positions[:, 0]),
        np.ascontiguousarray(drop.fap_positions[:, 1]),
        ux, uy, params.alpha_ff / 2.0, drop.fap_rb_masks,
        rb.astype(np.int64), params.gamma_f,
        MIN_INTERFERER_DISTANCE_M**2, j))
    return n_trials - outs


def _uniform_mue_success(params, links, drop, n_trials, rng) -> tuple[int, int]:
    radius = params.r_m * np.sqrt(rng.random(n_trials))
    radius = np.maximum(radius, 1.0)
    theta = rng.uniform(0.0, 2.0 * math.pi, n_trials)
    ux = radius * np.cos(theta)
    uy = radius * np.sin(theta)
    sig_link = links.macro_to_outdoor
    sig = _mbs_to_mue_coeff(params, links, radius) \
        * _hq(rng, sig_link.mu_db, sig_link.sigma_db, n_trials)
    fixed = np.zeros(n_trials)
    rb = rng.integers(0, params.n_rb, n_trials)
    if drop.n_faps == 0:
        return n_trials, n_trials
    ilink = links.fap_to_outdoor
    hq_i = _hq(rng, ilink.mu_db, ilink.sigma_db, (n_trials, drop.n_faps))
    p_coef = _fap_interference_coeffs(params, links, drop, indoor_victim=False)
    outs = int(_kernels.outage_count(
        sig, fixed, hq_i, p_coef,
        np.ascontiguousarray(drop.fap_positions[:, 0]),
        np.ascontiguousarray(drop.fap_positions[:, 1]),
        ux, uy, params.alpha_mf / 2.0, drop.fap_rb_masks,
        rb.astype(np.int64), params.gamma_m,
        MIN_INTERFERER_DISTANCE_M**2, -1))
    return n_trials - outs, n_trials
