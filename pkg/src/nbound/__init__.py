"""Bound-state counting for central potentials, with a catalog of rigorous
upper and lower limits on the count per channel, on the largest binding
channel, and on the spectrum-wide total."""

from __future__ import annotations

from .channel_limits import (
    CHANNEL_LIMIT_IDS,
    ChannelContext,
    LimitValue,
    channel_context,
    comparison_limit,
    evaluate_channel,
    evaluate_known_limit,
    evaluate_nu1_family,
    evaluate_nu2_family,
    implied_integer,
    second_kind_limits,
)
from .counting import (
    PhaseSolution,
    SpectralFunctionals,
    TotalCount,
    count_partial_wave,
    find_L_exact,
    spectral_functionals,
    total_count,
)
from .numerics import NumericalFailure, Tolerances
from .potentials import (
    Potential,
    PotentialError,
    ShapeReport,
    analyze_shape,
    effective_potential,
    make_builtin,
    make_expression,
    negative_part,
    parse_potential_spec,
)
from .total_limits import (
    L_LIMIT_IDS,
    N_LIMIT_IDS,
    TOTAL_LIMIT_IDS,
    TotalLimitValue,
    evaluate_total_limit,
    l_bounds,
    sum_partial_limits,
    total_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "CHANNEL_LIMIT_IDS",
    "ChannelContext",
    "LimitValue",
    "channel_context",
    "comparison_limit",
    "evaluate_channel",
    "evaluate_known_limit",
    "evaluate_nu1_family",
    "evaluate_nu2_family",
    "implied_integer",
    "second_kind_limits",
    "L_LIMIT_IDS",
    "N_LIMIT_IDS",
    "TOTAL_LIMIT_IDS",
    "TotalLimitValue",
    "evaluate_total_limit",
    "l_bounds",
    "sum_partial_limits",
    "total_bounds",
    "PhaseSolution",
    "SpectralFunctionals",
    "TotalCount",
    "count_partial_wave",
    "find_L_exact",
    "spectral_functionals",
    "total_count",
    "NumericalFailure",
    "Tolerances",
    "Potential",
    "PotentialError",
    "ShapeReport",
    "analyze_shape",
    "effective_potential",
    "make_builtin",
    "make_expression",
    "negative_part",
    "parse_potential_spec",
    "__version__",
]
