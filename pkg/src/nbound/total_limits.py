"""Bounds on the angular-momentum reach and on the total number of bound
states.

Two families live here.  The first bounds ``L``, the largest angular
momentum for which any bound state exists, through integral and
peak-strength functionals of the bare potential.  The second bounds the
total count ``N = sum over ell of (2 ell + 1) N_ell``, either through
closed-form expressions obtained by carrying a per-channel bound through
that sum, or literally, by summing the per-channel integer statements
until the summand dies out.

Every value reports the real right-hand side of its inequality together
with the integer it pins down, mirroring the per-channel catalog; the
closed-form totals keep the intermediate quantities (``nu``, ``lambda``,
bracketed integer factors, per-channel term lists) in ``auxiliary`` so
the round-off lost in each step can be audited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .channel_limits import (
    ChannelContext,
    channel_context,
    evaluate_known_limit,
    evaluate_nu2_family,
    implied_integer,
    _segment_integral,
)
from .numerics import NumericalFailure, Tolerances, integrate
from .potentials import Potential, ShapeReport

__all__ = [
    "TOTAL_LIMIT_IDS",
    "L_LIMIT_IDS",
    "N_LIMIT_IDS",
    "TotalLimitValue",
    "l_bounds",
    "total_bounds",
    "sum_partial_limits",
    "evaluate_total_limit",
]

#: bounds on the largest bound angular momentum L
L_LIMIT_IDS = ("BSL", "CMSL", "ULL", "NLL3L", "NLL4L")

#: bounds on the total number of bound states N
N_LIMIT_IDS = (
    "BiScentral", "BSN", "Lieb", "CMSN", "NUL2Nn", "NUL2Nm",
    "improvedBSN", "improvedCMSN", "NLLN3", "NLLN4",
    "SUM_NUL2", "SUM_NLL2",
)

TOTAL_LIMIT_IDS = L_LIMIT_IDS + N_LIMIT_IDS

#: totals inheriting a validity condition on V' at every radius from the
#: per-channel bound they descend from; for potentials with jump
#: discontinuities they are reported inapplicable, like their parents
_EDGE_SENSITIVE_TOTAL = frozenset(
    {"CMSL", "CMSN", "NUL2Nn", "NUL2Nm", "improvedCMSN"}
)

_SUM_SOURCE = {"NUL2l": ("SUM_NUL2", "upper"), "NLL2l": ("SUM_NLL2", "lower")}

#: hard stop for the per-channel summation (never reached for potentials
#: with finite strength functionals; guards against a stuck summand)
_MAX_SUM_ELL = 4096


@dataclass(frozen=True)
class TotalLimitValue:
    """One evaluated bound on ``L`` or on the total count ``N``.

    ``raw`` is the real right-hand side of the inequality and
    ``integer_statement`` the integer it pins down; both are ``None``
    when the bound is not applicable, in which case ``reason`` says why.
    ``auxiliary`` keeps the ingredients (``nu``, ``lambda``, bracketed
    factors, per-channel term lists) used to assemble the bound.
    """

    limit_id: str
    kind: str  # "upper" | "lower"
    applicable: bool
    raw: Optional[float] = None
    integer_statement: Optional[int] = None
    reason: str = ""
    auxiliary: dict = field(default_factory=dict)


def _tvalue(limit_id: str, kind: str, raw: float, floor_stated: bool = False,
            clamp: Optional[int] = 0, **aux) -> TotalLimitValue:
    stmt, warning = implied_integer(kind, raw, floor_stated, clamp)
    if warning:
        aux = {**aux, "warning": warning}
    return TotalLimitValue(
        limit_id=limit_id,
        kind=kind,
        applicable=True,
        raw=raw,
        integer_statement=stmt,
        auxiliary=aux,
    )


def _tna(limit_id: str, kind: str, reason: str, **aux) -> TotalLimitValue:
    return TotalLimitValue(
        limit_id=limit_id,
        kind=kind,
        applicable=False,
        reason=reason,
        auxiliary=aux,
    )


# ----------------------------------------------------------------------
# Shared ingredients


def _weight_integral(ctx: ChannelContext) -> Optional[float]:
    """``I = integral of r |V^-|`` from the s-channel Bargmann bound."""
    bsl = evaluate_known_limit("BSl", ctx.potential, 0, ctx.tol, ctx=ctx)
    return bsl.raw if bsl.applicable else None


def _nu_lambda(ctx: ChannelContext) -> tuple[Optional[float], Optional[float], str]:
    """Phase excess ``nu`` and half-phase log-ratio ``lambda``.

    For profiles without an interior minimum the depth entering ``nu``
    is taken at the inner half-phase radius, which is where the bound's
    derivation places it when the potential is monotonic.
    """
    fun = ctx.functionals
    if fun.p is None:
        return None, None, "S < pi: p undefined"
    v_p = -ctx.potential.v(fun.p)
    v_q = -ctx.potential.v(fun.q)
    if not (v_p > 0.0 and v_q > 0.0):
        return None, None, "degenerate profile depths"
    if ctx.shape.flags.get("monotone_nondecreasing", False) or fun.r_min is None:
        v_m = v_p
    else:
        v_m = -fun.v_at_rmin
        if not v_m > 0.0:
            return None, None, "no attractive depth"
    nu = -1.5 + 0.5 * fun.S - math.log(v_m * v_m / (v_p * v_q)) / (4.0 * math.pi)
    lam = math.log(fun.q / fun.p) / math.pi
    return nu, lam, ""


def _cond_v1(pot: Potential, shape: ShapeReport, ell: int) -> bool:
    """Grid check of ``[V r^(-4 ell)]' >= 0`` away from jump radii."""
    edges = pot.edges
    for r, v, dv in zip(shape.grid_r, shape.grid_v, shape.grid_dv):
        if any(abs(r - e) <= 1e-9 * max(1.0, e) for e in edges):
            continue
        lhs = dv - 4.0 * ell * v / r
        scale = abs(dv) + 4.0 * ell * abs(v) / r + 1e-3 * abs(v) / pot.r_scale
        if lhs < -1e-10 * (scale + 1e-300):
            return False
    return True


def _bare_context(pot: Potential, tol: Optional[Tolerances],
                  ctx: Optional[ChannelContext]) -> ChannelContext:
    if ctx is not None and ctx.ell == 0:
        return ctx
    return channel_context(pot, 0, tol)


# ----------------------------------------------------------------------
# Bounds on the largest bound angular momentum


def _limit_bsl(ctx: ChannelContext) -> TotalLimitValue:
    weight = _weight_integral(ctx)
    if weight is None:
        return _tna("BSL", "upper", "weight integral unavailable")
    return _tvalue("BSL", "upper", -0.5 + 0.5 * weight, clamp=None,
                   weight_integral=weight)


def _limit_cmsl(ctx: ChannelContext) -> TotalLimitValue:
    if ctx.potential.edges:
        return _tna("CMSL", "upper",
                    "potential has jump discontinuities")
    if not ctx.shape.flags.get("monotone_nondecreasing", False):
        return _tna("CMSL", "upper", "potential is not monotone nondecreasing")
    raw = 0.5 * math.pi * ctx.functionals.S - 0.5
    return _tvalue("CMSL", "upper", raw, clamp=None)


def _limit_ull(ctx: ChannelContext) -> TotalLimitValue:
    raw = 0.5 * (math.pi * ctx.functionals.sigma - 1.0)
    return _tvalue("ULL", "upper", raw, floor_stated=True, clamp=None,
                   nonstrict=True)


def _limit_nll3l(ctx: ChannelContext) -> TotalLimitValue:
    nu, lam, why = _nu_lambda(ctx)
    if nu is None:
        return _tna("NLL3L", "lower", why)
    if not lam > 0.0:
        return _tna("NLL3L", "lower", "coincident half-phase radii")
    if not nu > 0.0:
        return _tna("NLL3L", "lower",
                    "phase excess is not positive: no channel is certified",
                    nu=nu, lam=lam)
    return _tvalue("NLL3L", "lower", nu / lam, floor_stated=True, clamp=-1,
                   nu=nu, lam=lam, nonstrict=True)


def _limit_nll4l(ctx: ChannelContext) -> TotalLimitValue:
    raw = 0.5 * (ctx.functionals.sigma - 1.0)
    stmt, _ = implied_integer("lower", raw, floor_stated=True, clamp=-1)
    if stmt is not None and stmt >= 0:
        if not _cond_v1(ctx.potential, ctx.shape, stmt):
            return _tna(
                "NLL4L", "lower",
                "weighted monotonicity condition fails at the asserted "
                "channel", asserted_ell=stmt,
            )
    return _tvalue("NLL4L", "lower", raw, floor_stated=True, clamp=-1,
                   nonstrict=True)


def l_bounds(
    pot: Potential,
    tol: Tolerances | None = None,
    ctx: ChannelContext | None = None,
) -> list[TotalLimitValue]:
    """Evaluate every bound on the largest bound angular momentum.

    Parameters
    ----------
    pot : Potential
        The bare potential (the centrifugal term is the bounds' own
        business).
    tol : Tolerances, optional
        Numerical budgets; defaults used when omitted.
    ctx : ChannelContext, optional
        A precomputed s-channel context to reuse.

    Returns
    -------
    list of TotalLimitValue
        Upper bounds ``BSL``, ``CMSL``, ``ULL`` and lower bounds
        ``NLL3L``, ``NLL4L``, in that order.  An upper statement of
        ``-1`` asserts that no bound state exists at all; lower
        statements are clamped at ``-1``, where they assert nothing.
    """
    ctx = _bare_context(pot, tol, ctx)
    return [
        _limit_bsl(ctx),
        _limit_cmsl(ctx),
        _limit_ull(ctx),
        _limit_nll3l(ctx),
        _limit_nll4l(ctx),
    ]


# ----------------------------------------------------------------------
# Closed-form bounds on the total count


def _limit_biscentral(ctx: ChannelContext) -> TotalLimitValue:
    """Iterated double integral with the logarithmic contact kernel.

    The inner integral is split at the outer radius and each side is
    mapped through ``r2 = r1 -+ u**2``, which turns the integrable
    ``log|r1 - r2|`` endpoint into a bounded ``u log u`` one.
    """
    pot = ctx.potential
    segs = ctx.shape.negative_segments
    if not segs:
        return _tvalue("BiScentral", "upper", 0.0, no_attractive_region=True)

    # a potential gaining 1/r^2 strength at the origin makes the outer
    # integral diverge logarithmically
    r1_probe, r2_probe = 1e-8 * pot.r_scale, 1e-6 * pot.r_scale
    v1, v2 = abs(pot.v(r1_probe)), abs(pot.v(r2_probe))
    if v1 > 1e-280 and v2 > 1e-280:
        expo = math.log(v1 / v2) / math.log(r1_probe / r2_probe)
        if expo <= -2.0 + 1e-9:
            return _tna("BiScentral", "upper",
                        "double integral diverges at the origin",
                        origin_exponent=expo)

    def w(r: float) -> float:
        return r * max(0.0, -pot.v(r))

    b_out = segs[-1][1]
    if math.isfinite(b_out):
        cut_outer = b_out
        cut_inner = b_out
    else:
        start = segs[-1][0]
        cut_outer = start + 70.0 * pot.decay_scale
        cut_inner = cut_outer + 40.0 * pot.decay_scale
    # the clamp to the attractive part kinks the weight at the segment
    # endpoints; feed them to the quadrature alongside any jump radii
    corners = set(pot.edges)
    for a, b in segs:
        corners.add(a)
        if math.isfinite(b):
            corners.add(b)
    edges = sorted(e for e in corners if 0.0 < e < cut_inner)

    def inner(r1: float) -> float:
        if w(r1) == 0.0:
            # kernel weight vanishes: the outer integrand is zero anyway
            return 0.0

        def left(u: float) -> float:
            r2 = r1 - u * u
            if u <= 0.0 or r2 <= 0.0:
                return 0.0
            return 2.0 * u * w(r2) * math.log((r1 + r2) / (u * u))

        def right(u: float) -> float:
            r2 = r1 + u * u
            if u <= 0.0:
                return 0.0
            return 2.0 * u * w(r2) * math.log((r1 + r2) / (u * u))

        total = 0.0
        if r1 > 0.0:
            bks = tuple(sorted(math.sqrt(r1 - e) for e in edges if e < r1))
            total += integrate(left, 0.0, math.sqrt(r1), ctx.tol,
                               breakpoints=bks).value
        if cut_inner > r1:
            bks = tuple(sorted(math.sqrt(e - r1) for e in edges if e > r1))
            total += integrate(right, 0.0, math.sqrt(cut_inner - r1), ctx.tol,
                               breakpoints=bks).value
        return total

    try:
        outer = integrate(
            lambda r1: w(r1) * inner(r1),
            0.0,
            cut_outer,
            ctx.tol,
            breakpoints=tuple(edges),
            singular_left=pot.origin_singular,
        ).value
    except NumericalFailure as exc:
        return _tna("BiScentral", "upper", f"quadrature failed: {exc}")
    return _tvalue("BiScentral", "upper", 0.5 * outer, cutoff=cut_outer)


def _limit_bsn(ctx: ChannelContext) -> TotalLimitValue:
    weight = _weight_integral(ctx)
    if weight is None:
        return _tna("BSN", "upper", "weight integral unavailable")
    f1, _ = implied_integer("upper", weight, floor_stated=True, clamp=None)
    f2, _ = implied_integer("upper", 0.5 * (weight + 1.0), floor_stated=True,
                            clamp=None)
    product = f1 * f2
    return TotalLimitValue(
        limit_id="BSN",
        kind="upper",
        applicable=True,
        raw=0.5 * weight * (weight + 1.0),
        # the stated bound N < {{I}} {{(I+1)/2}} compares integers, so it
        # already concedes one below the bracketed product
        integer_statement=max(0, product - 1),
        auxiliary={"weight_integral": weight, "bracketed_product": product},
    )


def _limit_lieb(ctx: ChannelContext) -> TotalLimitValue:
    pot = ctx.potential
    try:
        moment = _segment_integral(
            pot, ctx.shape.negative_segments,
            lambda r: r * r * abs(pot.v(r)) ** 1.5,
            ctx.tol,
        )
    except NumericalFailure as exc:
        return _tna("Lieb", "upper", f"quadrature failed: {exc}")
    return _tvalue("Lieb", "upper", 1.458 * moment)


def _limit_cmsn(ctx: ChannelContext) -> TotalLimitValue:
    if ctx.potential.edges:
        return _tna("CMSN", "upper", "potential has jump discontinuities")
    if not ctx.shape.flags.get("monotone_nondecreasing", False):
        return _tna("CMSN", "upper", "potential is not monotone nondecreasing")
    S = ctx.functionals.S
    raw = (math.pi ** 2 / 12.0) * (
        S ** 3
        + 3.0 * S ** 2
        + (2.0 / math.pi) * (3.0 - 0.5 / math.pi) * S
        + 3.0 / math.pi ** 2
    )
    return _tvalue("CMSN", "upper", raw)


def _limit_nul2nn(ctx: ChannelContext) -> TotalLimitValue:
    if ctx.potential.edges:
        return _tna("NUL2Nn", "upper", "potential has jump discontinuities")
    if not ctx.shape.flags.get("two_zero_shape", False):
        return _tna("NUL2Nn", "upper",
                    "attractive region is not enclosed by two sign changes")
    fun = ctx.functionals
    if fun.M is None:
        return _tna("NUL2Nn", "upper", "S < pi: p undefined")
    v_min = -fun.v_at_rmin
    if not v_min > 0.0:
        return _tna("NUL2Nn", "upper", "no attractive depth")
    reach = 0.5 * (math.pi * fun.sigma + 1.0)
    raw = 0.5 * reach ** 2 * (
        2.0 + fun.S + math.log(v_min / fun.M) / math.pi
    )
    return _tvalue("NUL2Nn", "upper", raw, reach=reach)


def _limit_nul2nm(ctx: ChannelContext) -> TotalLimitValue:
    if ctx.potential.edges:
        return _tna("NUL2Nm", "upper", "potential has jump discontinuities")
    if not ctx.shape.flags.get("monotone_nondecreasing", False):
        return _tna("NUL2Nm", "upper",
                    "potential is not monotone nondecreasing")
    fun = ctx.functionals
    if fun.p is None:
        return _tna("NUL2Nm", "upper", "S < pi: p undefined")
    v_p = ctx.potential.v(fun.p)
    v_q = ctx.potential.v(fun.q)
    if not (v_p < 0.0 and v_q < 0.0):
        return _tna("NUL2Nm", "upper", "degenerate profile depths")
    reach = 0.5 * (math.pi * fun.sigma + 1.0)
    raw = 0.5 * reach ** 2 * (
        1.0 + fun.S + math.log(v_p / v_q) / (2.0 * math.pi)
    )
    return _tvalue("NUL2Nm", "upper", raw, reach=reach)


def _limit_improved_bsn(ctx: ChannelContext) -> TotalLimitValue:
    weight = _weight_integral(ctx)
    if weight is None:
        return _tna("improvedBSN", "upper", "weight integral unavailable")
    reach = 0.5 * (math.pi * ctx.functionals.sigma + 1.0)
    return _tvalue("improvedBSN", "upper", weight * reach,
                   weight_integral=weight, reach=reach)


def _limit_improved_cmsn(ctx: ChannelContext) -> TotalLimitValue:
    if ctx.potential.edges:
        return _tna("improvedCMSN", "upper",
                    "potential has jump discontinuities")
    if not ctx.shape.flags.get("monotone_nondecreasing", False):
        return _tna("improvedCMSN", "upper",
                    "potential is not monotone nondecreasing")
    S = ctx.functionals.S
    reach = 0.5 * (math.pi * ctx.functionals.sigma + 1.0)
    raw = (
        reach ** 2 * (S + 1.0)
        - reach * (2.0 * reach - 1.0) * (2.0 * reach + 1.0) / (3.0 * math.pi)
    )
    return _tvalue("improvedCMSN", "upper", raw, reach=reach)


def _limit_nlln3(ctx: ChannelContext) -> TotalLimitValue:
    nu, lam, why = _nu_lambda(ctx)
    if nu is None:
        return _tna("NLLN3", "lower", why)
    if not lam > 0.0:
        return _tna("NLLN3", "lower", "coincident half-phase radii")
    if not nu > 0.0:
        return _tna("NLLN3", "lower",
                    "phase excess is not positive: no channel is certified",
                    nu=nu, lam=lam)
    raw = nu * (2.0 * nu + lam) * (nu + lam) / (6.0 * lam * lam)
    return _tvalue("NLLN3", "lower", raw, nu=nu, lam=lam)


def _limit_nlln4(ctx: ChannelContext) -> TotalLimitValue:
    if not ctx.shape.flags.get("cond_monotonicity_4l", False):
        return _tna("NLLN4", "lower",
                    "weighted monotonicity condition fails")
    sigma = ctx.functionals.sigma
    f1, _ = implied_integer("lower", 0.5 * (sigma + 1.0), floor_stated=True,
                            clamp=None)
    f2, _ = implied_integer("lower", 0.5 * (sigma + 3.0), floor_stated=True,
                            clamp=None)
    raw = 0.5 * f1 * f2  # triangular: the bracketed factors are consecutive
    return TotalLimitValue(
        limit_id="NLLN4",
        kind="lower",
        applicable=True,
        raw=raw,
        integer_statement=max(0, math.ceil(raw - 1e-12)),
        auxiliary={"bracketed_low": f1, "bracketed_high": f2,
                   "nonstrict": True},
    )


def sum_partial_limits(
    limit_id: str,
    pot: Potential,
    tol: Tolerances | None = None,
) -> TotalLimitValue:
    """Sum one per-channel bound over all channels, weighted by ``2l+1``.

    Parameters
    ----------
    limit_id : str
        ``"NUL2l"`` (producing the upper total ``SUM_NUL2``) or
        ``"NLL2l"`` (producing the lower total ``SUM_NLL2``).  The
        s-channel variant of the same bound is used for ``l = 0``.
    pot : Potential
        Bare potential.
    tol : Tolerances, optional
        Numerical budgets.

    Returns
    -------
    TotalLimitValue
        ``raw`` equals the integer sum of ``(2l+1)`` times each channel's
        integer statement; the per-channel terms are kept in
        ``auxiliary["terms"]`` as ``(l, channel_raw, statement)`` tuples.
        The sum stops at the first channel whose real bound certifies a
        vanishing summand (upper bound below 1, lower bound below 0),
        when the centrifugal term has erased the attractive region, or
        when the remaining well holds less than half a phase period (the
        source bound is undefined there).  A channel that is inapplicable
        for any other reason makes the whole total inapplicable.
    """
    if limit_id not in _SUM_SOURCE:
        raise ValueError(
            f"sum_partial_limits: unknown source limit {limit_id!r}; "
            f"available: {sorted(_SUM_SOURCE)}"
        )
    total_id, kind = _SUM_SOURCE[limit_id]
    tol = tol or Tolerances()

    bare = channel_context(pot, 0, tol)
    if not bare.shape.negative_segments:
        return _tvalue(total_id, kind, 0.0, terms=(),
                       no_attractive_region=True)

    terms: list[tuple[int, float, int]] = []
    total = 0
    stop = ""
    for ell in range(_MAX_SUM_ELL + 1):
        ctx = bare if ell == 0 else channel_context(pot, ell, tol)
        if not ctx.eff_shape.negative_segments:
            stop = "centrifugal wall has swallowed the well"
            break
        if ell > 0 and ctx.eff_functionals.p is None:
            # the well no longer holds half a phase period; the source
            # bound is undefined there and its tabulation treats such
            # channels as exhausted
            stop = "half-phase radii undefined (S < pi)"
            break
        channel_id = limit_id if ell > 0 else limit_id[:-1]
        value = evaluate_nu2_family(channel_id, pot, ell, tol, ctx=ctx)
        if not value.applicable:
            return _tna(
                total_id, kind,
                f"channel l={ell} is inapplicable: {value.reason}",
                terms=tuple(terms),
            )
        if kind == "upper" and value.raw < 1.0:
            stop = "summand below one state"
            break
        if kind == "lower" and value.raw < 0.0:
            stop = "summand negative"
            break
        terms.append((ell, value.raw, value.integer_statement))
        total += (2 * ell + 1) * value.integer_statement
    else:
        return _tna(total_id, kind, "summation did not terminate",
                    terms=tuple(terms))

    return TotalLimitValue(
        limit_id=total_id,
        kind=kind,
        applicable=True,
        raw=float(total),
        integer_statement=total,
        auxiliary={"terms": tuple(terms), "nonstrict": True,
                   "stopped_because": stop},
    )


def total_bounds(
    pot: Potential,
    tol: Tolerances | None = None,
    ctx: ChannelContext | None = None,
) -> list[TotalLimitValue]:
    """Evaluate every bound on the total number of bound states.

    Parameters
    ----------
    pot : Potential
        Bare potential.
    tol : Tolerances, optional
        Numerical budgets; defaults used when omitted.
    ctx : ChannelContext, optional
        A precomputed s-channel context to reuse.

    Returns
    -------
    list of TotalLimitValue
        The closed-form totals followed by the two literal channel sums,
        in the order of ``N_LIMIT_IDS``.
    """
    ctx = _bare_context(pot, tol, ctx)
    out = [
        _limit_biscentral(ctx),
        _limit_bsn(ctx),
        _limit_lieb(ctx),
        _limit_cmsn(ctx),
        _limit_nul2nn(ctx),
        _limit_nul2nm(ctx),
        _limit_improved_bsn(ctx),
        _limit_improved_cmsn(ctx),
        _limit_nlln3(ctx),
        _limit_nlln4(ctx),
        sum_partial_limits("NUL2l", pot, ctx.tol),
        sum_partial_limits("NLL2l", pot, ctx.tol),
    ]
    return out


_L_DISPATCH = {
    "BSL": _limit_bsl,
    "CMSL": _limit_cmsl,
    "ULL": _limit_ull,
    "NLL3L": _limit_nll3l,
    "NLL4L": _limit_nll4l,
}

_N_DISPATCH = {
    "BiScentral": _limit_biscentral,
    "BSN": _limit_bsn,
    "Lieb": _limit_lieb,
    "CMSN": _limit_cmsn,
    "NUL2Nn": _limit_nul2nn,
    "NUL2Nm": _limit_nul2nm,
    "improvedBSN": _limit_improved_bsn,
    "improvedCMSN": _limit_improved_cmsn,
    "NLLN3": _limit_nlln3,
    "NLLN4": _limit_nlln4,
}


def evaluate_total_limit(
    limit_id: str,
    pot: Potential,
    tol: Tolerances | None = None,
    ctx: ChannelContext | None = None,
) -> TotalLimitValue:
    """Evaluate a single total-count or angular-momentum bound by id."""
    if limit_id == "SUM_NUL2":
        return sum_partial_limits("NUL2l", pot, tol)
    if limit_id == "SUM_NLL2":
        return sum_partial_limits("NLL2l", pot, tol)
    fn = _L_DISPATCH.get(limit_id) or _N_DISPATCH.get(limit_id)
    if fn is None:
        raise ValueError(
            f"evaluate_total_limit: unknown limit {limit_id!r}; "
            f"available: {sorted(TOTAL_LIMIT_IDS)}"
        )
    return fn(_bare_context(pot, tol, ctx))
