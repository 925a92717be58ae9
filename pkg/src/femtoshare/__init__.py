"""Spectrum-sharing macro/femto downlink: outage bounds, self-regulated
power control, and Monte-Carlo validation."""

from .analysis import (
    BoundContext,
    FemtoOutageBreakdown,
    dominant_interferer_rate_fue,
    dominant_interferer_rate_mue,
    femto_outage_lower_bound,
    femto_outage_macro_only,
    macro_outage_lower_bound,
)
from .model import (
    DB_TO_LN,
    LinkKind,
    LinkSet,
    LognormalDist,
    NetworkParams,
    PropagationLink,
    build_links,
    composite_fading_shadowing,
    dump_scenario,
    fap_power_distribution,
    load_scenario,
    path_loss,
    per_subcarrier_power,
)
from .montecarlo import (
    FemtoDrop,
    SimResult,
    drop_faps,
    estimate_ase,
    estimate_op,
    sample_sir_fue,
    sample_sir_mue,
)
from .quadrature import Kind, QuadratureRule, integrate, make_rule
from .regulation import (
    InfeasibleError,
    Mode,
    RegulationDecision,
    RegulationTable,
    decide,
    min_deployment_distance,
    min_serving_power_dbm,
    power_ceiling_dbm,
    power_floor_approx_dbm,
    power_floor_exact_dbm,
    rb_access_probability,
)

__version__ = "0.1.0"
