"""Catalog of per-channel upper and lower limits on the bound-state count.

Every limit is an inequality ``N_ell < raw`` (upper) or ``N_ell > raw``
(lower) whose right-hand side is an integral, variational, or recursive
functional of the potential.  Each evaluator checks its own applicability
conditions (sign, monotonicity, shape of the attractive region) and returns
a :class:`LimitValue` carrying the raw real bound, the implied integer
statement, and auxiliary data such as optimizer choices.

The integer statement of a strict upper limit ``N < raw`` is ``floor(raw)``;
when raw lands exactly on an integer the statement drops one more, because a
zero-energy state sitting right at the threshold could otherwise evade the
strict inequality.  Lower limits mirror this, and bounds stated directly
through an integer part keep plain floor semantics.  Count statements are
clamped to be nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .counting import SpectralFunctionals, spectral_functionals
from .numerics import (
    NumericalFailure,
    Tolerances,
    find_root,
    integrate,
    integrate_semi_infinite,
    maximize_scalar,
)
from .potentials import (
    Potential,
    ShapeReport,
    analyze_shape,
    effective_potential,
)

__all__ = [
    "CHANNEL_LIMIT_IDS",
    "LimitValue",
    "RecursionTrace",
    "ChannelContext",
    "channel_context",
    "implied_integer",
    "evaluate_known_limit",
    "evaluate_nu1_family",
    "evaluate_nu2_family",
    "comparison_limit",
    "second_kind_limits",
    "evaluate_channel",
]

#: per-channel limit identifiers (stable strings used by the CLI and JSON)
CHANNEL_LIMIT_IDS = (
    "BSl", "CMS", "CMSn", "Ml", "GGMT", "CMS2", "CC", "Cl", "Cln",
    "NUL1", "NUL1l", "NLL1", "NLL1n", "NLL1nl",
    "NUL2", "NLL2", "NUL2l", "NLL2l",
    "NLL3s", "NLL3", "NLL4", "COMPARE_H", "ULSK", "LLSK",
)

#: limits whose validity conditions involve the derivative of V at every
#: radius; for potentials with jump discontinuities these are reported
#: inapplicable rather than inventing distributional derivative values
_EDGE_SENSITIVE = frozenset(
    {"CMS", "CMSn", "CMS2", "NUL2", "NLL2", "NUL2l", "NLL2l"}
)

_KNOWN_IDS = ("BSl", "CMS", "CMSn", "Ml", "GGMT", "CMS2", "CC", "Cl", "Cln")
_NU1_IDS = ("NUL1", "NUL1l", "NLL1", "NLL1n", "NLL1nl")
_NU2_IDS = ("NUL2", "NLL2", "NUL2l", "NLL2l", "NLL3s", "NLL3", "NLL4")

# optimizer search windows (recorded constants; a boundary hit widens the
# window and flags the auxiliary record)
_A_WINDOW = (1e-3, 1e3)     # variational scale a, in units of r_scale
_P_WINDOW_GGMT = (1.0, 6.0)
_P_WINDOW_CMS2 = (0.5, 1.0 - 1e-3)
_N_P_GRID = 97
_N_A_GRID = 64
_N_START_OFFSETS = 32

_NEAR_INTEGER = 1e-9

_THRESHOLD_NOTE = (
    "bound falls exactly on an integer: a zero-energy state could sit at "
    "the threshold"
)


@dataclass(frozen=True)
class LimitValue:
    """One evaluated limit.

    ``raw`` is the real right-hand side of the inequality and
    ``integer_statement`` the integer it pins down for the count;
    both are ``None`` when the limit is not applicable, in which case
    ``reason`` says why.  ``auxiliary`` carries evaluation details
    (chosen optimizer points, boundary flags, recursion counts).
    """

    limit_id: str
    kind: str  # "upper" | "lower"
    applicable: bool
    raw: Optional[float] = None
    integer_statement: Optional[int] = None
    reason: str = ""
    auxiliary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RecursionTrace:
    """Radii visited by one pair of step recursions.

    The increasing sequence climbs from its start point in steps of half a
    local wavelength until it passes its target radius; the decreasing one
    descends likewise.  ``J_incr``/``J_decr`` are the recorded stopping
    indices, and ``theta_term``/``H_term`` the 0/1 corrections entering the
    upper resp. lower count formula.
    """

    radii_incr: tuple[float, ...]
    radii_decr: tuple[float, ...]
    J_incr: int
    J_decr: int
    theta_term: Optional[int] = None
    H_term: Optional[int] = None
    start_points: tuple[float, float] = (0.0, 0.0)


def implied_integer(
    kind: str,
    raw: float,
    floor_stated: bool = False,
    clamp: Optional[int] = 0,
) -> tuple[Optional[int], str]:
    """Integer statement implied by a real bound on an integer count.

    A strict upper bound ``n < raw`` pins ``n <= floor(raw)``, dropping one
    more when raw sits exactly on an integer (a zero-energy state right at
    the threshold could otherwise saturate the strict inequality).  A
    strict lower bound ``n > raw`` pins ``n >= floor(raw) + 1``, weakening
    to ``n >= raw`` at exact integers for the same reason.  Bounds already
    stated through an integer part (``floor_stated``) assert
    ``n <= floor(raw)`` resp. ``n >= floor(raw)`` directly.  ``clamp``
    bounds the statement from below (counts cannot be negative); pass
    ``None`` to disable.

    Returns ``(statement, warning)`` where ``warning`` is non-empty only
    in the exact-integer case.
    """
    if raw is None or math.isnan(raw) or math.isinf(raw):
        return None, ""
    near = abs(raw - round(raw)) <= _NEAR_INTEGER * max(1.0, abs(raw))
    warning = ""
    if floor_stated:
        stmt = int(round(raw)) if near else math.floor(raw)
    elif kind == "upper":
        if near:
            stmt = int(round(raw)) - 1
            warning = _THRESHOLD_NOTE
        else:
            stmt = math.floor(raw)
    else:
        if near:
            stmt = int(round(raw))
            warning = _THRESHOLD_NOTE
        else:
            stmt = math.floor(raw) + 1
    if clamp is not None and stmt < clamp:
        stmt = clamp
        warning = ""
    return stmt, warning


def _value(limit_id: str, kind: str, raw: float, floor_stated: bool = False,
           clamp: Optional[int] = 0, **aux) -> LimitValue:
    stmt, warning = implied_integer(kind, raw, floor_stated, clamp)
    if warning:
        aux = {**aux, "warning": warning}
    return LimitValue(
        limit_id=limit_id,
        kind=kind,
        applicable=True,
        raw=raw,
        integer_statement=stmt,
        auxiliary=aux,
    )


def _na(limit_id: str, kind: str, reason: str, **aux) -> LimitValue:
    return LimitValue(
        limit_id=limit_id,
        kind=kind,
        applicable=False,
        reason=reason,
        auxiliary=aux,
    )


# ----------------------------------------------------------------------
# Shared per-channel context


@dataclass(frozen=True)
class ChannelContext:
    """Shape surveys and strength functionals shared by all limits of one
    channel, computed once.  ``shape``/``functionals`` describe the bare
    potential; the ``eff_*`` fields describe the effective potential with
    the centrifugal term (identical objects for the s channel)."""

    potential: Potential
    ell: int
    tol: Tolerances
    shape: ShapeReport
    functionals: SpectralFunctionals
    eff: Potential
    eff_shape: ShapeReport
    eff_functionals: SpectralFunctionals


def channel_context(
    pot: Potential, ell: int = 0, tol: Tolerances | None = None
) -> ChannelContext:
    if ell < 0:
        raise ValueError(f"channel_context: ell must be >= 0, got {ell}")
    tol = tol or Tolerances()
    shape = analyze_shape(pot, ell=ell, tol=tol)
    fun = spectral_functionals(pot, 0, tol, shape=shape)
    if ell == 0:
        return ChannelContext(pot, 0, tol, shape, fun, pot, shape, fun)
    eff = effective_potential(pot, ell)
    eff_shape = analyze_shape(eff, ell=ell, tol=tol)
    eff_fun = spectral_functionals(pot, ell, tol, shape=eff_shape)
    return ChannelContext(pot, ell, tol, shape, fun, eff, eff_shape, eff_fun)


def _far_radius(shape: ShapeReport) -> float:
    return shape.grid_r[-1]


def _origin_exponent(pot: Potential) -> float:
    """Local power of |V| near the origin, from a two-point log slope."""
    r1 = 1e-8 * pot.r_scale
    r2 = 1e-6 * pot.r_scale
    v1, v2 = abs(pot.v(r1)), abs(pot.v(r2))
    if v1 < 1e-280 or v2 < 1e-280:
        return 0.0
    return math.log(v1 / v2) / math.log(r1 / r2)


def _segment_integral(
    pot: Potential,
    segs: tuple[tuple[float, float], ...],
    f: Callable[[float], float],
    tol: Tolerances,
    upto: Optional[float] = None,
) -> float:
    """Sum of ``f`` over the attractive segments (optionally cut at
    ``upto``); endpoint singularities at an attractive origin are handled
    by quadratic substitution."""
    total = 0.0
    for a, b in segs:
        if upto is not None:
            if a >= upto:
                break
            b = min(b, upto)
        inner = tuple(e for e in pot.edges if a < e < b)
        sing = a == 0.0 and pot.origin_singular
        if math.isinf(b):
            res = integrate_semi_infinite(
                f, a, tol, scale=2.0 * pot.decay_scale,
                breakpoints=inner, singular_left=sing,
            )
        else:
            res = integrate(f, a, b, tol, breakpoints=inner, singular_left=sing)
        total += res.value
    return total


def _maximize_widening(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: Tolerances,
    n_scan: int = _N_A_GRID,
) -> tuple[float, float, bool, tuple[float, float]]:
    """Log-scale scan-and-refine maximization that widens the window by
    three decades whenever the maximum lands on its edge.  Returns
    ``(argmax, max, boundary_hit, final_window)``."""
    hit = False
    for _ in range(4):
        x, val = maximize_scalar(f, lo, hi, tol, n_scan=n_scan, log_scale=True)
        if x <= lo * (1.0 + 1e-9):
            lo /= 1e3
            hit = True
            continue
        if x >= hi * (1.0 - 1e-9):
            hi *= 1e3
            hit = True
            continue
        return x, val, hit, (lo, hi)
    return x, val, True, (lo, hi)


# ----------------------------------------------------------------------
# Integral limits on one channel


def _limit_bsl(ctx: ChannelContext) -> LimitValue:
    m = 2 * ctx.ell + 1
    pot = ctx.potential

    def f(r: float) -> float:
        return r * max(0.0, -pot.v(r))

    try:
        total = _segment_integral(pot, ctx.shape.negative_segments, f, ctx.tol)
    except NumericalFailure as exc:
        return _na("BSl", "upper", f"strength integral failed: {exc}")
    return _value("BSl", "upper", total / m)


def _limit_cms(ctx: ChannelContext, neat: bool) -> LimitValue:
    limit_id = "CMSn" if neat else "CMS"
    if ctx.potential.edges:
        return _na(limit_id, "upper",
                   "discontinuous potential: monotonicity condition "
                   "involves the derivative at the jump")
    if not ctx.shape.flags.get("monotone_nondecreasing", False):
        return _na(limit_id, "upper", "potential is not monotone nondecreasing")
    S = ctx.functionals.S
    ll1 = ctx.ell * (ctx.ell + 1)
    if neat:
        raw = S + 1.0 - (2 * ctx.ell + 1) / math.pi
    else:
        raw = S + 1.0 - math.sqrt(1.0 + (2.0 / math.pi) ** 2 * ll1)
    return _value(limit_id, "upper", raw)


def _limit_ml(ctx: ChannelContext) -> LimitValue:
    W = ctx.eff
    segs = ctx.eff_shape.negative_segments
    if not segs:
        return _value("Ml", "upper", 0.0)
    if (
        ctx.ell == 0
        and segs[0][0] == 0.0
        and ctx.potential.origin_singular
        and _origin_exponent(ctx.potential) <= -1.0 + 1e-9
    ):
        return _na("Ml", "upper",
                   "attractive profile is not integrable at the origin")

    def f0(r: float) -> float:
        return max(0.0, -W.v(r))

    def f2(r: float) -> float:
        return r * r * max(0.0, -W.v(r))

    try:
        B = _segment_integral(W, segs, f0, ctx.tol)
        A = _segment_integral(W, segs, f2, ctx.tol)
    except NumericalFailure as exc:
        return _na("Ml", "upper", f"moment integral failed: {exc}")
    return _value("Ml", "upper", (A * B) ** 0.25)


def _ggmt_coefficient(p_exp: float) -> float:
    # (p-1)^(p-1) -> 1 as p -> 1 (0**0 evaluates to 1 here, as wanted)
    return (
        (p_exp - 1.0) ** (p_exp - 1.0)
        * math.gamma(2.0 * p_exp)
        / (p_exp ** p_exp * math.gamma(p_exp) ** 2)
    )


def _limit_ggmt(ctx: ChannelContext, p_exponent: Optional[float] = None) -> LimitValue:
    m = 2 * ctx.ell + 1
    pot = ctx.potential
    segs = ctx.shape.negative_segments

    def raw_at(p_exp: float) -> float:
        def f(r: float) -> float:
            w = max(0.0, -pot.v(r))
            return (r * r * w) ** p_exp / r

        J = _segment_integral(pot, segs, f, ctx.tol)
        return m ** (1.0 - 2.0 * p_exp) * _ggmt_coefficient(p_exp) * J

    if not segs:
        return _value("GGMT", "upper", 0.0, p=p_exponent or 1.0)
    try:
        if p_exponent is not None:
            if not _P_WINDOW_GGMT[0] <= p_exponent <= _P_WINDOW_GGMT[1]:
                raise ValueError(
                    f"GGMT exponent must lie in {_P_WINDOW_GGMT}, got {p_exponent}"
                )
            return _value("GGMT", "upper", raw_at(p_exponent), p=p_exponent)
        lo, hi = _P_WINDOW_GGMT
        p_best, neg_raw = maximize_scalar(
            lambda p_exp: -raw_at(p_exp), lo, hi, ctx.tol, n_scan=_N_P_GRID
        )
        boundary = p_best <= lo + 1e-9 or p_best >= hi - 1e-9
        return _value("GGMT", "upper", -neg_raw, p=p_best, boundary_hit=boundary)
    except NumericalFailure as exc:
        return _na("GGMT", "upper", f"exponent-weighted integral failed: {exc}")


def _limit_cms2(ctx: ChannelContext, p_exponent: Optional[float] = None) -> LimitValue:
    if ctx.potential.edges:
        return _na("CMS2", "upper",
                   "discontinuous potential: derivative shape condition "
                   "is undefined at the jump")
    if not ctx.shape.flags.get("nonpositive", False):
        return _na("CMS2", "upper", "potential takes positive values")
    m = 2 * ctx.ell + 1
    pot = ctx.potential
    segs = ctx.shape.negative_segments
    if not segs:
        return _value("CMS2", "upper", 0.0, p=p_exponent or 0.5)

    def raw_at(p_exp: float) -> float:
        def f(r: float) -> float:
            w = max(0.0, -pot.v(r))
            return (r * r * w) ** p_exp / r

        J = _segment_integral(pot, segs, f, ctx.tol)
        coeff = p_exp * (1.0 - p_exp) ** (p_exp - 1.0)
        return m ** (1.0 - 2.0 * p_exp) * coeff * J

    try:
        if p_exponent is not None:
            if not ctx.shape.cms2_condition(p_exponent):
                return _na("CMS2", "upper",
                           f"derivative shape condition fails at exponent "
                           f"{p_exponent:g}")
            return _value("CMS2", "upper", raw_at(p_exponent), p=p_exponent)
        lo, hi = _P_WINDOW_CMS2
        step = (hi - lo) / (_N_P_GRID - 1)
        ps = [lo + i * step for i in range(_N_P_GRID)]
        admissible = [p_exp for p_exp in ps if ctx.shape.cms2_condition(p_exp)]
        if not admissible:
            return _na("CMS2", "upper",
                       "derivative shape condition fails for every exponent "
                       f"in [{lo:g}, {hi:g})")
        vals = [raw_at(p_exp) for p_exp in admissible]
        k = min(range(len(vals)), key=vals.__getitem__)
        p_best, raw_best = admissible[k], vals[k]
        # golden refinement only inside an admissible bracket
        if 0 < k < len(vals) - 1 and (
            admissible[k + 1] - admissible[k - 1] < 2.5 * step
        ):
            p_ref, neg = maximize_scalar(
                lambda p_exp: -raw_at(p_exp),
                admissible[k - 1], admissible[k + 1], ctx.tol, n_scan=3,
            )
            if ctx.shape.cms2_condition(p_ref) and -neg < raw_best:
                p_best, raw_best = p_ref, -neg
        boundary = p_best <= lo + 1e-9 or p_best >= hi - 1e-9
        return _value("CMS2", "upper", raw_best, p=p_best, boundary_hit=boundary)
    except NumericalFailure as exc:
        return _na("CMS2", "upper", f"exponent-weighted integral failed: {exc}")


def _limit_cc(ctx: ChannelContext) -> LimitValue:
    if not ctx.shape.flags.get("monotone_nondecreasing", False):
        return _na("CC", "upper", "potential is not monotone nondecreasing")
    return _value("CC", "upper", ctx.functionals.S)


def _limit_cl(ctx: ChannelContext) -> LimitValue:
    pot = ctx.potential
    ell = ctx.ell
    segs = ctx.shape.negative_segments
    if not segs:
        return _value("Cl", "lower", -0.5)
    a0 = segs[0][0]
    if ell > 0 and a0 > 0.0 and pot.v(0.5 * a0) > 0.0:
        return _na("Cl", "lower",
                   "repulsive core: the comparison integrand diverges at "
                   "the origin for this channel")
    r_far = _far_radius(ctx.shape)
    two_ell = 2 * ell

    def T(a: float) -> float:
        def f(r: float) -> float:
            t = r / a
            lead = (t ** two_ell) / a
            tail = -a * pot.v(r) * t ** (-two_ell) if r > 0.0 else 0.0
            return min(lead, tail)

        return integrate(f, 0.0, r_far, ctx.tol, breakpoints=pot.edges).value

    lo = _A_WINDOW[0] * pot.r_scale
    hi = _A_WINDOW[1] * pot.r_scale
    try:
        a_best, t_best, hit, window = _maximize_widening(T, lo, hi, ctx.tol)
    except NumericalFailure as exc:
        return _na("Cl", "lower", f"comparison integral failed: {exc}")
    return _value(
        "Cl", "lower", -0.5 + t_best / math.pi,
        a=a_best, boundary_hit=hit, a_window=list(window),
    )


def _limit_cln(ctx: ChannelContext) -> LimitValue:
    if not ctx.shape.flags.get("cond_monotonicity_4l", False):
        return _na("Cln", "lower",
                   "weighted monotonicity condition fails for this channel")
    pot = ctx.potential
    ell = ctx.ell
    m = 2 * ell + 1
    two_ell = 2 * ell
    r_far = _far_radius(ctx.shape)

    def balance(rho: float) -> float:
        def f(r: float) -> float:
            return (rho / r) ** two_ell * pot.v(r)

        tail = integrate_semi_infinite(
            f, rho, ctx.tol, scale=2.0 * pot.decay_scale,
            breakpoints=tuple(e for e in pot.edges if e > rho),
        ).value
        return rho * pot.v(rho) - m * tail

    lo = 1e-4 * pot.r_scale
    n = 48
    ratio = (r_far / lo) ** (1.0 / (n - 1))
    grid = [lo * ratio ** i for i in range(n)]
    try:
        prev_r, prev_f = grid[0], balance(grid[0])
        root = None
        for r in grid[1:]:
            cur = balance(r)
            if prev_f == 0.0:
                root = prev_r
                break
            if (cur > 0.0) != (prev_f > 0.0):
                root = find_root(balance, prev_r, r, ctx.tol)
                break
            prev_r, prev_f = r, cur
    except NumericalFailure as exc:
        return _na("Cln", "lower", f"balance equation failed: {exc}")
    if root is None:
        return _na("Cln", "lower", "no balance radius found")
    v_root = pot.v(root)
    if v_root >= 0.0:
        return _na("Cln", "lower", "balance radius lies outside the "
                                   "attractive region")
    raw = -0.5 + (2.0 / math.pi) * root * math.sqrt(-v_root) / m
    return _value("Cln", "lower", raw, rho=root)


# ----------------------------------------------------------------------
# Limits built on the two-zero well shape


def _single_segment(ctx: ChannelContext) -> tuple[Optional[tuple[float, float]], str]:
    segs = ctx.eff_shape.negative_segments
    if not segs:
        return None, "no attractive region"
    if len(segs) > 1:
        return None, "more than one attractive region"
    return segs[0], ""


def evaluate_nu1_family(
    limit_id: str,
    pot: Potential,
    ell: int = 0,
    tol: Tolerances | None = None,
    ctx: ChannelContext | None = None,
) -> LimitValue:
    """Width/strength and clipped-comparison limits for a potential whose
    attractive region is a single interval.

    ``NUL1``/``NUL1l`` bound the count by the geometric mean of the well
    width and its integrated depth and need a finite outer zero;
    ``NLL1`` maximizes the clipped pointwise-min comparison over the scale
    ``a``; ``NLL1n``/``NLL1nl`` instead fix ``a`` from the peak depth.
    The ``...l`` variants act on the effective potential of a nonzero
    channel.
    """
    if limit_id not in _NU1_IDS:
        raise ValueError(
            f"unknown limit {limit_id!r}; available: {', '.join(_NU1_IDS)}"
        )
    kind = "upper" if limit_id.startswith("NUL") else "lower"
    wants_ell = limit_id.endswith("l") and limit_id != "NLL1"
    if wants_ell and ell == 0:
        raise ValueError(f"{limit_id} is the nonzero-channel form; got ell=0")
    if limit_id in ("NUL1", "NLL1n") and ell != 0:
        raise ValueError(f"{limit_id} is the s-channel form; got ell={ell}")
    ctx = ctx or channel_context(pot, ell, tol)
    seg, why = _single_segment(ctx)
    if seg is None:
        return _na(limit_id, kind, why)
    a, b = seg
    W = ctx.eff

    if limit_id in ("NUL1", "NUL1l"):
        if math.isinf(b):
            return _na(limit_id, kind, "attractive region extends to infinity")
        try:
            B = _segment_integral(
                W, (seg,), lambda r: max(0.0, -W.v(r)), ctx.tol
            )
        except NumericalFailure as exc:
            return _na(limit_id, kind, f"depth integral failed: {exc}")
        raw = 1.0 + (2.0 / math.pi) * math.sqrt((b - a) * B)
        return _value(limit_id, kind, raw, r_minus=a, r_plus=b)

    if limit_id == "NLL1":
        hi_cut = b if math.isfinite(b) else _far_radius(ctx.eff_shape)

        def F(scale: float) -> float:
            def f(r: float) -> float:
                depth = max(0.0, -W.v(r))
                return min(1.0 / scale, scale * depth)

            return integrate(
                f, a, hi_cut, ctx.tol,
                breakpoints=tuple(e for e in W.edges if a < e < hi_cut),
            ).value

        lo = _A_WINDOW[0] * pot.r_scale
        hi = _A_WINDOW[1] * pot.r_scale
        try:
            a_best, f_best, hit, window = _maximize_widening(F, lo, hi, ctx.tol)
        except NumericalFailure as exc:
            return _na(limit_id, kind, f"clipped integral failed: {exc}")
        return _value(
            limit_id, kind, -1.0 + f_best / math.pi,
            a=a_best, boundary_hit=hit, a_window=list(window),
        )

    # NLL1n / NLL1nl: closed scale choice a = (peak depth)^(-1/2)
    if (
        ctx.ell == 0
        and a == 0.0
        and pot.origin_singular
        and _origin_exponent(pot) < -1e-9
    ):
        return _na(limit_id, kind, "attractive profile unbounded at the origin")
    vmin = -ctx.eff_shape.v_at_rmin
    if not vmin > 0.0:
        return _na(limit_id, kind, "no attractive depth")
    try:
        B = _segment_integral(W, (seg,), lambda r: max(0.0, -W.v(r)), ctx.tol)
    except NumericalFailure as exc:
        return _na(limit_id, kind, f"depth integral failed: {exc}")
    X = B / (math.pi * math.sqrt(vmin))
    # the conventional table quote for this limit keeps the additive one
    # inside the integer part, which can overstate the bound by one; the
    # integer statement stays on the safe side of the strict inequality
    quote = math.floor(X) + 1
    return _value(
        limit_id, kind, -1.0 + X,
        a=1.0 / math.sqrt(vmin), table_quote=quote,
    )


# ----------------------------------------------------------------------
# Limits built on the half-phase radii


def evaluate_nu2_family(
    limit_id: str,
    pot: Potential,
    ell: int = 0,
    tol: Tolerances | None = None,
    ctx: ChannelContext | None = None,
) -> LimitValue:
    """Limits built from the half-phase radii ``p``/``q`` and the profile
    depth, plus the peak-strength lower limit.

    ``NUL2``/``NLL2`` (and their ``...l`` effective-channel forms) need a
    single-minimum well whose minimum lies between ``p`` and ``q``;
    ``NLL3s``/``NLL3`` are their channel-corrected refinements on the bare
    potential (``NLL3s`` optimizes the split radius ``s``); ``NLL4`` turns
    the peak of ``r|V|^(1/2)`` into a lower limit under the weighted
    monotonicity condition.
    """
    if limit_id not in _NU2_IDS:
        raise ValueError(
            f"unknown limit {limit_id!r}; available: {', '.join(_NU2_IDS)}"
        )
    kind = "upper" if limit_id.startswith("NUL") else "lower"
    ctx = ctx or channel_context(pot, ell, tol)

    if limit_id in ("NUL2", "NLL2", "NUL2l", "NLL2l"):
        wants_ell = limit_id.endswith("l")
        if wants_ell and ell == 0:
            raise ValueError(f"{limit_id} is the nonzero-channel form; got ell=0")
        if not wants_ell and ell != 0:
            raise ValueError(f"{limit_id} is the s-channel form; got ell={ell}")
        if pot.edges:
            return _na(limit_id, kind,
                       "discontinuous potential: profile comparison is "
                       "undefined at the jump")
        if not ctx.eff_shape.flags.get("single_minimum_shape", False):
            return _na(limit_id, kind, "attractive region is not a single well")
        fun = ctx.eff_functionals
        if fun.p is None:
            return _na(limit_id, kind, "S < pi: p undefined")
        r_min = fun.r_min
        if r_min is None:
            return _na(limit_id, kind, "no well minimum found")
        vmin = -fun.v_at_rmin
        M = fun.M
        if not (vmin > 0.0 and M is not None and M > 0.0):
            return _na(limit_id, kind, "degenerate profile depths")
        aux = {"p_cut": fun.p, "q_cut": fun.q}
        if not fun.p <= r_min <= fun.q:
            # for weakly binding wells the half-phase radii can straddle the
            # minimum the wrong way; the bound is still evaluated as stated,
            # with the shaky precondition recorded
            aux["condition_p_rmin_q"] = False
            aux["condition_note"] = (
                "well minimum lies outside the half-phase radii"
            )
        shift = math.log(vmin / M) / (2.0 * math.pi)
        if kind == "upper":
            raw = 1.0 + 0.5 * fun.S + shift
        else:
            raw = -1.5 + 0.5 * fun.S - shift
        return _value(limit_id, kind, raw, **aux)

    if limit_id in ("NLL3s", "NLL3"):
        fun = ctx.functionals
        if fun.p is None:
            return _na(limit_id, kind, "S < pi: p undefined")
        p_cut, q_cut = fun.p, fun.q
        v_p = -pot.v(p_cut)
        v_q = -pot.v(q_cut)
        if not (v_p > 0.0 and v_q > 0.0):
            return _na(limit_id, kind, "degenerate profile depths")
        monotone = ctx.shape.flags.get("monotone_nondecreasing", False)
        if monotone:
            v_m = v_p  # no interior minimum: the inner radius plays its part
            r_lo = p_cut
        else:
            if fun.r_min is None or not -fun.v_at_rmin > 0.0:
                return _na(limit_id, kind, "no attractive depth")
            v_m = -fun.v_at_rmin
            r_lo = fun.r_min
        if limit_id == "NLL3":
            nu = -1.5 + 0.5 * fun.S - math.log(v_m * v_m / (v_p * v_q)) / (4 * math.pi)
            raw = nu - (ell / math.pi) * math.log(q_cut / p_cut)
            return _value(limit_id, kind, raw, nu=nu, p_cut=p_cut, q_cut=q_cut)
        # NLL3s: optimal split radius from the stationarity equation
        segs = ctx.shape.negative_segments
        b_out = segs[-1][1]
        hi = b_out if math.isfinite(b_out) else _far_radius(ctx.shape)

        def stationarity(s: float) -> float:
            v, dv, _ = pot.eval3(s)
            return s * dv - 4.0 * s * abs(v) ** 1.5 - 4.0 * ell * v

        s_split = None
        lo = max(r_lo, 1e-6 * pot.r_scale)
        if hi > lo * (1.0 + 1e-12):
            n = 64
            ratio = (hi / lo) ** (1.0 / (n - 1))
            xs = [lo * ratio ** i for i in range(n)]
            prev_x, prev_f = xs[0], stationarity(xs[0])
            for x in xs[1:]:
                cur = stationarity(x)
                if (cur > 0.0) != (prev_f > 0.0):
                    s_split = find_root(stationarity, prev_x, x, ctx.tol)
                    break
                prev_x, prev_f = x, cur
        fell_back = s_split is None or s_split <= p_cut
        if fell_back:
            s_split = q_cut
        v_s = -pot.v(s_split)
        if not v_s > 0.0:
            return _na(limit_id, kind, "split radius outside the attractive "
                                       "region")
        try:
            partial = _segment_integral(
                pot, segs,
                lambda r: math.sqrt(max(0.0, -pot.v(r))),
                ctx.tol, upto=s_split,
            )
        except NumericalFailure as exc:
            return _na(limit_id, kind, f"phase integral failed: {exc}")
        raw = (
            -1.0
            + partial / math.pi
            - math.log(v_m * v_m / (v_p * v_s)) / (4.0 * math.pi)
            - (ell / math.pi) * math.log(s_split / p_cut)
        )
        return _value(limit_id, kind, raw, s=s_split, s_fallback=fell_back)

    # NLL4
    if not ctx.shape.flags.get("cond_monotonicity_4l", False):
        return _na("NLL4", "lower",
                   "weighted monotonicity condition fails for this channel")
    raw = -0.5 + ctx.functionals.sigma / (2.0 * (2 * ell + 1))
    return _value("NLL4", "lower", raw, r_sigma=ctx.functionals.r_sigma)


# ----------------------------------------------------------------------
# Comparison-function limit


def _detect_power_exp_class(pot: Potential, tol: Tolerances) -> Optional[dict]:
    """Recognize profiles  -(g^2/R^2) (r/R)^(alpha-2) exp(-(r/R)^beta)
    from the log-derivative at three doubling radii, verified pointwise."""
    if pot.edges:
        return None
    R0 = pot.r_scale
    try:
        ys = []
        for r in (0.7 * R0, 1.4 * R0, 2.8 * R0):
            v, dv, _ = pot.eval3(r)
            if not v < 0.0:
                return None
            ys.append(r * dv / v)
        d1 = ys[0] - ys[1]
        d2 = ys[1] - ys[2]
        if d1 <= 1e-12 * (1.0 + abs(ys[0])) or d2 <= 0.0:
            return None
        beta = math.log2(d2 / d1)
        if not 1e-6 < beta < 50.0:
            return None
        t1 = d1 / (beta * (2.0 ** beta - 1.0))
        alpha = ys[0] + beta * t1 + 2.0
        if alpha <= 0.0 or t1 <= 0.0:
            return None
        R = 0.7 * R0 / t1 ** (1.0 / beta)
        v1 = pot.v(0.7 * R0)
        g2 = -v1 * R * R * (0.7 * R0 / R) ** (2.0 - alpha) * math.exp(t1)
        if not g2 > 0.0:
            return None
        # verify the reconstruction across the profile
        for k in range(40):
            r = R * (0.05 * 1.2 ** k)
            if r > 30.0 * R:
                break
            model = -(g2 / (R * R)) * (r / R) ** (alpha - 2.0) * math.exp(
                -((r / R) ** beta)
            )
            actual = pot.v(r)
            if abs(model - actual) > 1e-8 * (abs(actual) + abs(v1) * 1e-8):
                return None
        return {"alpha": alpha, "beta": beta, "g": math.sqrt(g2), "R": R}
    except (ValueError, OverflowError, ZeroDivisionError):
        return None


def comparison_limit(
    pot: Potential,
    ell: int = 0,
    lam: float = 0.5,
    tol: Tolerances | None = None,
    ctx: ChannelContext | None = None,
) -> LimitValue:
    """Sign-definite comparison-function limit with strength ``lam``.

    Builds the channel comparison function from the potential and its two
    derivatives; if it is nonnegative everywhere the count is at least the
    integer part of ``lam * S``, if nonpositive everywhere at most that.
    Nonzero channels additionally need the profile to vanish fast enough at
    the origin for the lower form, which the pointwise sign test enforces
    through the centrifugal term.  A recognized power-times-exponential
    profile short-cuts the s-channel ``lam = 1/2`` case through its closed
    strength integral when its exponents satisfy the known sufficient
    condition.
    """
    if lam < 0.0:
        raise ValueError(f"comparison_limit: lam must be >= 0, got {lam}")
    ctx = ctx or channel_context(pot, ell, tol)
    if not ctx.shape.flags.get("nonpositive", False):
        return _na("COMPARE_H", "lower", "potential takes positive values",
                   lam=lam)

    if ell == 0 and abs(lam - 0.5) < 1e-12:
        cls = _detect_power_exp_class(pot, ctx.tol)
        if cls is not None and cls["alpha"] * cls["beta"] >= cls["beta"] ** 2 + 1.0 - 1e-12:
            s_exp = cls["alpha"] / (2.0 * cls["beta"])
            S_closed = (
                2.0 * cls["g"] / (math.pi * cls["beta"])
                * 2.0 ** s_exp * math.gamma(s_exp)
            )
            return _value(
                "COMPARE_H", "lower", lam * S_closed, floor_stated=True,
                lam=lam, fast_path=True,
                class_alpha=cls["alpha"], class_beta=cls["beta"],
            )

    ll1 = float(ell * (ell + 1))
    coeff = 1.0 - 4.0 * lam * lam

    def verdict_on(radii) -> str:
        has_min_viol = has_max_viol = False
        for r in radii:
            try:
                v, dv, d2v = pot.eval3(r)
            except ValueError as exc:
                raise _DerivativeUnavailable(str(exc)) from None
            av = abs(v)
            if av < 1e-280:
                h = -ll1 / (r * r)
                scale = ll1 / (r * r) + 1e-300
            else:
                t1 = -ll1 / (r * r)
                t2 = 0.3125 * (dv / v) ** 2
                t3 = d2v / (4.0 * av)
                t4 = coeff * av
                h = t1 + t2 + t3 + t4
                scale = abs(t1) + abs(t2) + abs(t3) + abs(t4)
            if h < -1e-12 * scale:
                has_min_viol = True
            if h > 1e-12 * scale:
                has_max_viol = True
            if has_min_viol and has_max_viol:
                return "mixed"
        if not has_min_viol:
            return "lower"
        return "upper" if not has_max_viol else "mixed"

    grid = ctx.shape.grid_r
    lo, hi = grid[0], grid[-1]
    n2 = 2 * len(grid)
    ratio = (hi / lo) ** (1.0 / (n2 - 1))
    doubled = [lo * ratio ** i for i in range(n2)]
    try:
        first = verdict_on(grid)
        second = verdict_on(doubled)
    except _DerivativeUnavailable as exc:
        return _na("COMPARE_H", "lower", f"derivative unavailable: {exc}",
                   lam=lam)
    if first != second:
        return _na("COMPARE_H", "lower", "indeterminate", lam=lam)
    if first == "mixed":
        return _na("COMPARE_H", "lower", "comparison function changes sign",
                   lam=lam)
    return _value(
        "COMPARE_H", first, lam * ctx.functionals.S, floor_stated=True,
        lam=lam, fast_path=False,
    )


class _DerivativeUnavailable(Exception):
    pass


# ----------------------------------------------------------------------
# Step-recursion limits


def _half_wave_walk(
    W: Potential,
    r0: float,
    direction: int,
    target: float,
    cap: int = 2_000_000,
) -> tuple[list[float], Optional[float]]:
    """Walk from ``r0`` in half-wavelength steps until passing ``target``.

    Returns the visited radii (including start and the overshooting point)
    and, on failure, the radius where the profile depth underflowed.
    """
    radii = [r0]
    r = r0
    while True:
        v = W.v(r)
        if not v < 0.0 or abs(v) < 1e-300:
            return radii, r
        r = r + direction * (0.5 * math.pi) / math.sqrt(-v)
        radii.append(r)
        if (direction > 0 and r >= target) or (direction < 0 and r <= target):
            return radii, None
        if len(radii) > cap:
            raise NumericalFailure(
                f"step recursion exceeded {cap} steps near r={r!r}"
            )


def second_kind_limits(
    pot: Potential,
    ell: int = 0,
    start_search: bool = True,
    tol: Tolerances | None = None,
    ctx: ChannelContext | None = None,
) -> tuple[LimitValue, LimitValue, tuple[Optional[RecursionTrace], Optional[RecursionTrace]]]:
    """Upper and lower limits from half-wavelength step recursions.

    Both need the (effective) potential to be a single-minimum well with
    finite zeros.  The upper recursion walks outward/inward from the
    minimum until passing the well edges; the lower one walks from free
    start points near the edges toward the minimum, and when
    ``start_search`` is set each start point is scanned over
    32 offsets in the inner/outer half-gaps and the best bound kept.
    """
    ctx = ctx or channel_context(pot, ell, tol)
    seg, why = _single_segment(ctx)
    if seg is None:
        na = why
        return (_na("ULSK", "upper", na), _na("LLSK", "lower", na), (None, None))
    a, b = seg
    W = ctx.eff
    if not ctx.eff_shape.flags.get("single_minimum_shape", False):
        why = "attractive region is not a single well"
        return (_na("ULSK", "upper", why), _na("LLSK", "lower", why), (None, None))
    if math.isinf(b):
        why = "attractive region extends to infinity"
        return (_na("ULSK", "upper", why), _na("LLSK", "lower", why), (None, None))
    r_min = ctx.eff_shape.r_min
    if r_min is None or not a < r_min < b:
        why = "well minimum not strictly inside the attractive region"
        return (_na("ULSK", "upper", why), _na("LLSK", "lower", why), (None, None))

    # upper: both walks start at the minimum and leave the well
    up_inc, fail1 = _half_wave_walk(W, r_min, +1, b)
    up_dec, fail2 = _half_wave_walk(W, r_min, -1, a)
    if fail1 is not None or fail2 is not None:
        where = fail1 if fail1 is not None else fail2
        why = f"profile depth underflowed at r={where:g}"
        return (_na("ULSK", "upper", why), _na("LLSK", "lower", why), (None, None))
    J_up_inc = len(up_inc) - 1
    J_up_dec = len(up_dec) - 1
    theta = 1 if up_dec[-1] >= 0.0 else 0
    ulsk_raw = 0.5 * (J_up_inc + J_up_dec + 1 + theta)
    trace_up = RecursionTrace(
        radii_incr=tuple(up_inc),
        radii_decr=tuple(up_dec),
        J_incr=J_up_inc,
        J_decr=J_up_dec,
        theta_term=theta,
        start_points=(r_min, r_min),
    )
    ulsk = _value(
        "ULSK", "upper", ulsk_raw,
        J_incr=J_up_inc, J_decr=J_up_dec, theta=theta,
        start_points=[r_min, r_min],
    )

    # lower: walks from free starts near the edges toward the minimum
    n_off = _N_START_OFFSETS if start_search else 1
    inc_runs = []
    for i in range(1, n_off + 1):
        frac = i / n_off if start_search else 0.5
        s0 = a + 0.5 * (r_min - a) * frac
        radii, failed = _half_wave_walk(W, s0, +1, r_min)
        if failed is None and len(radii) >= 2:
            inc_runs.append(radii)
    dec_runs = []
    for i in range(1, n_off + 1):
        frac = i / n_off if start_search else 0.5
        s0 = b - 0.5 * (b - r_min) * frac
        radii, failed = _half_wave_walk(W, s0, -1, r_min)
        if failed is None and len(radii) >= 2:
            dec_runs.append(radii)
    if not inc_runs or not dec_runs:
        why = "profile depth underflowed near a well edge"
        return (ulsk, _na("LLSK", "lower", why), (trace_up, None))

    def h_term(inc: list[float], dec: list[float]) -> int:
        v_inc = abs(W.v(inc[-2]))
        v_dec = abs(W.v(dec[-2]))
        if v_inc <= v_dec and inc[-1] <= dec[-2]:
            return 0
        if v_inc >= v_dec and inc[-2] <= dec[-1]:
            return 0
        return 1

    best = None
    for inc in inc_runs:
        for dec in dec_runs:
            H = h_term(inc, dec)
            rhs = 0.5 * ((len(inc) - 1) + (len(dec) - 1) - H) - 1.0
            if best is None or rhs > best[0]:
                best = (rhs, inc, dec, H)
    llsk_raw, inc, dec, H = best
    trace_lo = RecursionTrace(
        radii_incr=tuple(inc),
        radii_decr=tuple(dec),
        J_incr=len(inc) - 1,
        J_decr=len(dec) - 1,
        H_term=H,
        start_points=(inc[0], dec[0]),
    )
    llsk = _value(
        "LLSK", "lower", llsk_raw,
        J_incr=len(inc) - 1, J_decr=len(dec) - 1, H=H,
        start_points=[inc[0], dec[0]],
    )
    return ulsk, llsk, (trace_up, trace_lo)


# ----------------------------------------------------------------------
# Dispatch


def evaluate_known_limit(
    limit_id: str,
    pot: Potential,
    ell: int = 0,
    tol: Tolerances | None = None,
    ctx: ChannelContext | None = None,
    p_exponent: Optional[float] = None,
) -> LimitValue:
    """Evaluate one of the classical integral limits by identifier.

    ``p_exponent`` pins the exponent of the GGMT/CMS2 families instead of
    optimizing it (useful for cross-checks; other ids reject it).
    """
    if limit_id not in _KNOWN_IDS:
        raise ValueError(
            f"unknown limit {limit_id!r}; available: {', '.join(_KNOWN_IDS)}"
        )
    ctx = ctx or channel_context(pot, ell, tol)
    if p_exponent is not None and limit_id not in ("GGMT", "CMS2"):
        raise ValueError(f"{limit_id} takes no exponent parameter")
    if limit_id == "BSl":
        return _limit_bsl(ctx)
    if limit_id == "CMS":
        return _limit_cms(ctx, neat=False)
    if limit_id == "CMSn":
        return _limit_cms(ctx, neat=True)
    if limit_id == "Ml":
        return _limit_ml(ctx)
    if limit_id == "GGMT":
        return _limit_ggmt(ctx, p_exponent)
    if limit_id == "CMS2":
        return _limit_cms2(ctx, p_exponent)
    if limit_id == "CC":
        return _limit_cc(ctx)
    if limit_id == "Cl":
        return _limit_cl(ctx)
    return _limit_cln(ctx)


def evaluate_channel(
    pot: Potential,
    ell: int = 0,
    tol: Tolerances | None = None,
    only: Optional[set] = None,
    lam: float = 0.5,
    start_search: bool = True,
    ctx: ChannelContext | None = None,
) -> list[LimitValue]:
    """Evaluate the full catalog for one channel, in a fixed order.

    The s-channel uses the ids ``NUL1``/``NUL1n``/``NUL2``/``NLL2``;
    nonzero channels their ``...l`` forms.  ``only`` restricts the run to
    a subset of ids; unknown entries raise ``ValueError``.
    """
    if only is not None:
        bad = sorted(set(only) - set(CHANNEL_LIMIT_IDS))
        if bad:
            raise ValueError(
                f"unknown limit ids {', '.join(bad)}; "
                f"available: {', '.join(CHANNEL_LIMIT_IDS)}"
            )
    ctx = ctx or channel_context(pot, ell, tol)
    s_wave = ell == 0
    nul1_id = "NUL1" if s_wave else "NUL1l"
    nll1n_id = "NLL1n" if s_wave else "NLL1nl"
    nul2_id = "NUL2" if s_wave else "NUL2l"
    nll2_id = "NLL2" if s_wave else "NLL2l"

    wanted = lambda limit_id: only is None or limit_id in only
    out: list[LimitValue] = []
    for limit_id in _KNOWN_IDS:
        if limit_id in ("Cl", "Cln"):
            continue  # lower limits are listed after the uppers
        if wanted(limit_id):
            out.append(evaluate_known_limit(limit_id, pot, ell, ctx=ctx))
    if wanted(nul1_id):
        out.append(evaluate_nu1_family(nul1_id, pot, ell, ctx=ctx))
    if wanted(nul2_id):
        out.append(evaluate_nu2_family(nul2_id, pot, ell, ctx=ctx))
    need_ulsk = wanted("ULSK")
    need_llsk = wanted("LLSK")
    if need_ulsk or need_llsk:
        ulsk, llsk, _ = second_kind_limits(
            pot, ell, start_search=start_search, ctx=ctx
        )
        if need_ulsk:
            out.append(ulsk)
    for limit_id in ("Cl", "Cln"):
        if wanted(limit_id):
            out.append(evaluate_known_limit(limit_id, pot, ell, ctx=ctx))
    if wanted("NLL1"):
        out.append(evaluate_nu1_family("NLL1", pot, ell, ctx=ctx))
    if wanted(nll1n_id):
        out.append(evaluate_nu1_family(nll1n_id, pot, ell, ctx=ctx))
    if wanted(nll2_id):
        out.append(evaluate_nu2_family(nll2_id, pot, ell, ctx=ctx))
    for limit_id in ("NLL3s", "NLL3", "NLL4"):
        if wanted(limit_id):
            out.append(evaluate_nu2_family(limit_id, pot, ell, ctx=ctx))
    if need_llsk:
        out.append(llsk)
    if wanted("COMPARE_H"):
        out.append(comparison_limit(pot, ell, lam, ctx=ctx))
    return out
