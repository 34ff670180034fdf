"""Exact bound-state counting via the zero-energy phase equation, plus the
spectral functionals (integrated strength, peak strength, half-phase radii)
that feed the limit formulas.

The count in channel ``ell`` equals the number of nodes of the zero-energy
reduced radial wave function u(r).  Inside attractive regions the nodes are
the upward crossings of multiples of pi by the phase

    eta'(r) = |V(r)|^(1/2) - [ V'(r) / (4 |V(r)|) + ell / r ] sin(2 eta)

defined through |V|^(1/2) cot(eta) = ell / r + u'/u.  Where V >= 0 that
definition degenerates, so the integration switches variables: with
z = ell + r u'/u (exactly 2 ell + 1 at the origin) the same wave function
obeys the Riccati flow

    z'(r) = r V(r) + z (2 ell + 1 - z) / r

and a node is a blow-down of z through -infinity.  Writing
z = (2 ell + 1) cot(psi) compactifies that flow; psi climbs through a
multiple of pi exactly at each node, so the two representations share one
winding count.  At every boundary between regions the pair (eta, psi) is
matched through u'/u, which keeps the count exact for potentials with
repulsive shells, barriers, or truncated supports.  For a wave function
leaving the last point of attraction, one final node exists beyond it
precisely when u'/u has already turned negative enough, i.e. when the
winding variable carries a fractional part above one half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .numerics import (
    NumericalFailure,
    Tolerances,
    find_root,
    integrate,
    integrate_phase_ode,
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
    "PhaseSolution",
    "SpectralFunctionals",
    "TotalCount",
    "count_partial_wave",
    "spectral_functionals",
    "find_L_exact",
    "total_count",
]

#: fractional-part width treated as "dangerously close to a threshold"
GUARD_BAND = 1e-4


@dataclass(frozen=True)
class PhaseSolution:
    """Result of one zero-energy phase integration.

    ``count`` is the number of bound states in the channel.  ``eta_end``
    is the global winding variable at the last integration point (the
    phase inside attractive regions, the matched continuation angle
    elsewhere; nodes accumulate as multiples of pi in either).  For
    attractive tails reaching to infinity it settles onto ``count * pi``
    from above (``approach_from_above``); when the attraction ends at a
    finite radius the count includes one extra exterior node exactly when
    ``eta_end/pi`` has fractional part above one half.
    """

    channel: int
    count: int
    r_start: float
    r_end: float
    eta_end: float
    n_crossings: int
    approach_from_above: bool
    crossing_radii: tuple[float, ...]
    diagnostics: dict
    trace: Optional[list[tuple[float, float]]] = None

    @property
    def frac_end(self) -> float:
        f = self.eta_end / math.pi
        return f - math.floor(f)


def _phase_rhs(p: Potential, ell: int):
    ev = p.evaluator

    def rhs(r: float, y: float) -> float:
        v, dv, _ = ev(r)
        av = -v
        if av <= 0.0:
            # only reachable by a stage evaluation pinned at a support edge
            return 0.0
        w = math.sqrt(av)
        s = math.sin(2.0 * y)
        if s == 0.0:
            return w
        return w - (dv / (4.0 * av) + ell / r) * s

    return rhs


def _gap_rhs(p: Potential, ell: int):
    """Flow of the compact continuation angle psi, z = (2l+1) cot(psi).

    Valid for either sign of V; used across the regions where the phase
    equation itself is not (V >= 0).  At multiples of pi the rate is
    (2l+1)/r > 0, so the angle only ever climbs through them, one per
    node of u.
    """
    ev = p.evaluator
    c = float(2 * ell + 1)

    def rhs(r: float, psi: float) -> float:
        v, _, _ = ev(r)
        s = math.sin(psi)
        co = math.cos(psi)
        return -(r * v / c) * s * s - (c / r) * (s * co - co * co)

    return rhs


def _residual(y: float) -> float:
    """Fractional angle of a winding variable, clamped into (0, pi)."""
    f = y / math.pi - math.floor(y / math.pi)
    return min(max(f * math.pi, 1e-300), math.pi * (1.0 - 1e-16))


def _tail_radius(p: Potential, shape: ShapeReport) -> float:
    depth = abs(shape.v_at_rmin)
    g_eff = math.sqrt(depth) * p.r_scale if depth > 0.0 else 1.0
    return p.r_scale * max(40.0, 8.0 * math.log1p(g_eff))


def _run_count(
    p: Potential,
    ell: int,
    shape: ShapeReport,
    tol: Tolerances,
    eps_scale: float,
    keep_trace: bool,
) -> PhaseSolution:
    segs = shape.negative_segments
    diagnostics: dict = {
        "eps_scale": eps_scale,
        "warnings": [],
        "lower_bound": False,
        "guard": False,
        "segments": [],
    }
    if not segs:
        return PhaseSolution(
            channel=ell,
            count=0,
            r_start=0.0,
            r_end=0.0,
            eta_end=0.0,
            n_crossings=0,
            approach_from_above=False,
            crossing_radii=(),
            diagnostics=diagnostics,
            trace=[] if keep_trace else None,
        )

    eps = eps_scale * p.r_scale
    c = float(2 * ell + 1)
    rhs_well = _phase_rhs(p, ell)
    rhs_gap = _gap_rhs(p, ell)
    edge_set = set(p.edges)

    # Attractive slivers narrower than the startup offset stay with the
    # continuation flow, which is valid for either sign of V.
    wells = [s for s in segs if math.isinf(s[1]) or s[1] - s[0] > 4.0 * eps]
    if len(wells) != len(segs):
        diagnostics["warnings"].append(
            "attractive segment narrower than the startup offset handled "
            "by the continuation flow"
        )

    nodes = 0
    radii: list[float] = []
    trace: list[tuple[float, float]] = []
    r_end = 0.0
    tail = False
    n_steps = n_rejected = 0
    # continuation state: z = ell + r u'/u at r_cursor (exact limit 2l+1
    # at the origin)
    r_cursor = eps
    z = c
    frac = 0.0
    eta = 0.0

    def run_gap(r0: float, r1: float, z0: float) -> float:
        """Carry z across [r0, r1]; returns the updated z, counts nodes."""
        nonlocal nodes, n_steps, n_rejected, r_end
        if r1 <= r0 * (1.0 + 1e-15):
            return z0
        psi0 = nodes * math.pi + math.atan2(c, z0)
        inner = tuple(e for e in p.edges if r0 < e < r1)
        run = integrate_phase_ode(
            rhs_gap,
            r0,
            r1,
            psi0,
            tol,
            breakpoints=inner,
            keep_trace=keep_trace,
            first_step=min(0.25 * (r1 - r0), 0.5 * r0 / c),
        )
        nodes += run.n_crossings
        radii.extend(run.crossing_radii)
        n_steps += run.n_steps
        n_rejected += run.n_rejected
        if keep_trace and run.trace:
            trace.extend(run.trace)
        r_end = run.r_end
        res = _residual(run.y_end)
        diagnostics["segments"].append(
            {
                "a": r0,
                "b": r1,
                "kind": "gap",
                "end_value": run.y_end,
                "frac": res / math.pi,
            }
        )
        return c * math.cos(res) / math.sin(res)

    for idx, (a, b) in enumerate(wells):
        last = idx == len(wells) - 1
        # --- left end: carry z up to the entry point, then match phases
        if a == 0.0:
            r0 = eps
        elif a in edge_set:
            r0 = a * (1.0 + 1e-13)
        else:
            r0 = a + eps
        if r0 > r_cursor * (1.0 + 1e-9):
            z = run_gap(r_cursor, r0, z)
        w0 = math.sqrt(max(-p.v(r0), 1e-300))
        eta = nodes * math.pi + math.atan2(w0, z / r0)
        # --- right end
        if math.isinf(b):
            r1 = max(_tail_radius(p, shape), 2.0 * r0)
            end = "tail"
        elif b in edge_set:
            r1 = b * (1.0 - 1e-13)
            end = "edge"
        else:
            r1 = b - eps
            end = "smooth"

        inner_edges = tuple(e for e in p.edges if r0 < e < r1)
        run = integrate_phase_ode(
            rhs_well, r0, r1, eta, tol, breakpoints=inner_edges,
            keep_trace=keep_trace,
        )
        eta = run.y_end
        nodes += run.n_crossings
        radii.extend(run.crossing_radii)
        n_steps += run.n_steps
        n_rejected += run.n_rejected
        if keep_trace and run.trace:
            trace.extend(run.trace)
        r_end = run.r_end

        if end == "tail":
            # settle check: keep doubling the cutoff until the phase stops
            # moving, so a state binding at a very large radius is not lost
            n_ext = 0
            delta = math.inf
            while n_ext < 12:
                nxt = integrate_phase_ode(rhs_well, r_end, 2.0 * r_end, eta, tol)
                delta = abs(nxt.y_end - eta)
                nodes += nxt.n_crossings
                radii.extend(nxt.crossing_radii)
                eta = nxt.y_end
                r_end = nxt.r_end
                n_steps += nxt.n_steps
                n_ext += 1
                if delta < 1e-6:
                    break
            diagnostics["tail_extensions"] = n_ext
            diagnostics["settle_delta"] = delta
            if delta >= 1e-6:
                diagnostics["warnings"].append(
                    f"phase still moving ({delta:.2e}) at r={r_end:g}"
                )
            tail = True

        frac = eta / math.pi - math.floor(eta / math.pi)
        diagnostics["segments"].append(
            {"a": a, "b": b, "kind": "well", "end": end, "eta": eta,
             "frac": frac}
        )
        if last:
            break
        # match back onto the continuation variable for the gap ahead
        phi = _residual(eta)
        w1 = math.sqrt(max(-p.v(r1), 1e-300))
        z = r1 * w1 * math.cos(phi) / math.sin(phi)
        r_cursor = r1

    if tail:
        # a settled fraction above one half means u'/u has already gone
        # negative; in a purely attractive tail it can never recover, so
        # exactly one node still sits beyond the integration range.  The
        # count is taken from the winding floor rather than the crossing
        # tally: a phase parked at roundoff depth around its limit can
        # jitter across the multiple, but floor + the half-rule lands on
        # the same count from either side.
        count = int(math.floor(eta / math.pi)) + (1 if frac > 0.5 else 0)
        parked = frac > 1.0 - 1e-8
        if abs(frac - 0.5) < GUARD_BAND or (
            frac > 1.0 - GUARD_BAND and not parked
        ):
            diagnostics["guard"] = True
    else:
        # the attraction ends at a finite radius; decide the one possible
        # exterior node from the sign of u'/u carried past the last point
        if wells:
            b_last = wells[-1][1]
            phi = _residual(eta)
            w1 = math.sqrt(max(-p.v(r_end), 1e-300))
            z = r_end * w1 * math.cos(phi) / math.sin(phi)
            r_cursor = r_end
        else:
            b_last = segs[-1][1]
        free_beyond = bool(wells) and (
            p.support_end is not None
            and b_last >= p.support_end * (1.0 - 1e-9)
        )
        if not free_beyond:
            if p.support_end is not None:
                r_stop = p.support_end * (1.0 + 1e-12)
                z = run_gap(r_cursor, r_stop, z)
            else:
                r_stop = max(_tail_radius(p, shape), 2.0 * r_cursor)
                z = run_gap(r_cursor, r_stop, z)
                n_ext = 0
                while n_ext < 12:
                    psi_before = math.atan2(c, z)
                    z = run_gap(r_end, 2.0 * r_end, z)
                    n_ext += 1
                    if abs(math.atan2(c, z) - psi_before) < 1e-6:
                        break
                diagnostics["tail_extensions"] = n_ext
        # beyond this point the free solution gains a node iff z < 0,
        # i.e. iff the winding fraction has passed one half
        frac = math.atan2(c, z) / math.pi
        eta = nodes * math.pi + frac * math.pi
        count = nodes + (1 if frac > 0.5 else 0)
        if abs(frac - 0.5) < GUARD_BAND:
            diagnostics["guard"] = True
    diagnostics["n_steps"] = n_steps
    diagnostics["n_rejected"] = n_rejected
    diagnostics["frac_end"] = frac

    return PhaseSolution(
        channel=ell,
        count=count,
        r_start=eps,
        r_end=r_end,
        eta_end=eta,
        n_crossings=nodes,
        approach_from_above=tail,
        crossing_radii=tuple(radii),
        diagnostics=diagnostics,
        trace=trace if keep_trace else None,
    )


def count_partial_wave(
    p: Potential,
    ell: int = 0,
    tol: Tolerances | None = None,
    eps_scale: float = 1e-8,
    keep_trace: bool = False,
    validate: bool = True,
    shape: ShapeReport | None = None,
) -> PhaseSolution:
    """Exact number of bound states in channel ``ell``.

    Parameters
    ----------
    p : Potential
        The bare potential; the centrifugal term enters through the phase
        equation itself, not through the potential.
    ell : int
        Angular momentum channel.
    eps_scale : float
        Startup offset as a fraction of the length scale; the integration
        starts at ``eps_scale * r_scale`` past each support boundary with
        the small-radius phase value, and the result is re-checked with
        the offset quartered.
    validate : bool
        Re-run with a quartered startup offset and compare; on mismatch
        (or when the final fraction falls in the guard band around a
        counting threshold) re-run once more with halved tolerances.

    Notes
    -----
    Regions where V >= 0 (an inner barrier, shells between attractive
    segments, anything beyond a truncated support) are crossed exactly by
    continuing the logarithmic derivative of the wave function, so the
    count stays exact for sign-changing potentials; each such region can
    contribute at most one node and the continuation decides it.
    """
    if ell < 0:
        raise ValueError(f"count_partial_wave: ell must be >= 0, got {ell}")
    tol = tol or Tolerances()
    if shape is None:
        shape = analyze_shape(p, ell=ell, tol=tol)
    primary = _run_count(p, ell, shape, tol, eps_scale, keep_trace)
    if not validate:
        return primary
    check = _run_count(p, ell, shape, tol, eps_scale / 4.0, False)
    primary.diagnostics["validated_counts"] = (primary.count, check.count)
    result = primary
    if (
        check.count != primary.count
        or primary.diagnostics["guard"]
        or check.diagnostics["guard"]
    ):
        tight = _run_count(p, ell, shape, tol.halved(), eps_scale / 16.0, keep_trace)
        tight.diagnostics["validated_counts"] = (
            primary.count,
            check.count,
            tight.count,
        )
        if check.count != primary.count:
            tight.diagnostics["warnings"].append(
                "count changed under startup refinement; tightened tolerances"
            )
        if tight.diagnostics["guard"]:
            tight.diagnostics["warnings"].append(
                "possible zero-energy state: count sits on a threshold"
            )
        result = tight
    return result


# ----------------------------------------------------------------------
# Spectral functionals


@dataclass(frozen=True)
class SpectralFunctionals:
    """Integral functionals of one channel's attractive profile.

    ``S`` is ``(2/pi)`` times the integrated square-root strength,
    ``sigma`` is ``(2/pi)`` times the peak of ``r |W|^(1/2)``, and ``p``
    (resp. ``q``) marks where a quarter period of phase has accumulated
    from the inside (resp. remains to the outside); both are ``None``
    when less than half a period fits in the well.  ``M`` is the
    shallower of the two profile values at ``p`` and ``q``.
    """

    channel: int
    effective: bool
    S: float
    sigma: float
    r_sigma: Optional[float]
    p: Optional[float]
    q: Optional[float]
    M: Optional[float]
    r_min: Optional[float]
    v_at_rmin: float


def _segment_strength(
    W: Potential, a: float, b: float, tol: Tolerances
) -> float:
    """Integral of |W|^(1/2) over one attractive segment."""
    edge_set = set(W.edges)

    def w(r: float) -> float:
        return math.sqrt(max(0.0, -W.v(r)))

    sing_left = a > 0.0 and a not in edge_set or (a == 0.0 and W.origin_singular)
    inner = tuple(e for e in W.edges if a < e < b)
    if math.isinf(b):
        res = integrate_semi_infinite(
            w,
            a,
            tol,
            scale=2.0 * W.decay_scale,
            breakpoints=inner,
            singular_left=sing_left,
        )
    else:
        sing_right = b not in edge_set
        res = integrate(
            w,
            a,
            b,
            tol,
            breakpoints=inner,
            singular_left=sing_left,
            singular_right=sing_right,
        )
    return res.value


def _cut_radius(
    W: Potential,
    segs: tuple[tuple[float, float], ...],
    seg_strengths: list[float],
    target: float,
    tol: Tolerances,
) -> float:
    """Radius x with integral of |W|^(1/2) from the support start to x
    equal to ``target`` (0 < target < total)."""
    acc = 0.0
    for (a, b), strength in zip(segs, seg_strengths):
        if acc + strength < target:
            acc += strength
            continue
        hi = b
        if math.isinf(b):
            hi = a
            remaining = strength
            while acc + strength - remaining < target or remaining > 1e-3 * target:
                hi = max(2.0 * hi, 2.0 * W.decay_scale + hi)
                remaining = strength - _segment_strength(
                    W, a, hi, tol
                )
                if hi > 1e9 * W.r_scale:
                    break

        def f(x: float, _a=a) -> float:
            return acc + _segment_strength(W, _a, x, tol) - target

        lo = a
        if f(hi) < 0.0:
            return hi
        return find_root(f, lo, hi, tol)
    return segs[-1][1]


def spectral_functionals(
    p: Potential,
    ell: int = 0,
    tol: Tolerances | None = None,
    shape: ShapeReport | None = None,
) -> SpectralFunctionals:
    """Compute the channel's strength functionals on the effective
    potential (which is the bare potential itself for ``ell = 0``)."""
    tol = tol or Tolerances()
    W = effective_potential(p, ell)
    if shape is None:
        shape = analyze_shape(W, ell=ell, tol=tol)
    segs = shape.negative_segments
    if not segs:
        return SpectralFunctionals(
            channel=ell,
            effective=ell > 0,
            S=0.0,
            sigma=0.0,
            r_sigma=None,
            p=None,
            q=None,
            M=None,
            r_min=None,
            v_at_rmin=0.0,
        )

    strengths = [_segment_strength(W, a, b, tol) for a, b in segs]
    total = sum(strengths)
    S = (2.0 / math.pi) * total

    # peak of r |W|^(1/2), segment by segment; support edges compete
    def f(r: float) -> float:
        return r * math.sqrt(max(0.0, -W.v(r)))

    best_x, best_f = None, -1.0
    edge_set = set(W.edges)
    for a, b in segs:
        lo = a if a > 0.0 else 1e-9 * W.r_scale
        if math.isinf(b):
            hi = _tail_radius(W, shape)
        elif b in edge_set:
            hi = b * (1.0 - 1e-12)
        else:
            hi = b
        if hi <= lo:
            continue
        use_log = lo > 0.0 and hi / lo > 100.0
        x, fx = maximize_scalar(f, lo, hi, tol, log_scale=use_log)
        if fx > best_f:
            best_x, best_f = x, fx
    sigma = (2.0 / math.pi) * max(best_f, 0.0)

    if total >= math.pi:
        p_cut = _cut_radius(W, segs, strengths, 0.5 * math.pi, tol)
        q_cut = _cut_radius(W, segs, strengths, total - 0.5 * math.pi, tol)
        M = min(-W.v(p_cut), -W.v(q_cut))
    else:
        p_cut = q_cut = M = None

    return SpectralFunctionals(
        channel=ell,
        effective=ell > 0,
        S=S,
        sigma=sigma,
        r_sigma=best_x,
        p=p_cut,
        q=q_cut,
        M=M,
        r_min=shape.r_min,
        v_at_rmin=shape.v_at_rmin,
    )


# ----------------------------------------------------------------------
# Spectrum-wide counts


@dataclass(frozen=True)
class TotalCount:
    """Counts across channels: ``total`` includes the (2l+1) degeneracy."""

    total: int
    per_channel: tuple[int, ...]
    L: int


def find_L_exact(
    p: Potential,
    tol: Tolerances | None = None,
    validate: bool = True,
) -> int:
    """Largest channel with at least one bound state (-1 when even the
    s-wave holds none).

    Channels are scanned upward until the count reaches zero; the scan is
    capped by the rigorous ceiling floor((pi sigma - 1)/2) computed from
    the peak functional, so it always terminates.
    """
    tol = tol or Tolerances()
    fun = spectral_functionals(p, 0, tol)
    cap = math.floor((math.pi * fun.sigma - 1.0) / 2.0)
    if cap < 0:
        return -1
    ell = 0
    while ell <= cap:
        if count_partial_wave(p, ell, tol, validate=validate).count == 0:
            return ell - 1
        ell += 1
    return cap


def total_count(
    p: Potential,
    tol: Tolerances | None = None,
    validate: bool = True,
) -> TotalCount:
    """Total number of bound states, summing ``(2l+1) * N_l`` over
    channels up to the last one that binds."""
    tol = tol or Tolerances()
    counts: list[int] = []
    fun = spectral_functionals(p, 0, tol)
    cap = math.floor((math.pi * fun.sigma - 1.0) / 2.0)
    ell = 0
    while ell <= cap:
        n = count_partial_wave(p, ell, tol, validate=validate).count
        if n == 0:
            break
        counts.append(n)
        ell += 1
    total = sum((2 * l + 1) * n for l, n in enumerate(counts))
    return TotalCount(total=total, per_channel=tuple(counts), L=len(counts) - 1)
