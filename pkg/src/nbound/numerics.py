"""Numeric kernels: adaptive quadrature, root finding, scalar maximization,
and an embedded Runge-Kutta integrator for phase equations.

Everything is written against plain ``math`` so behaviour is reproducible
bit-for-bit across platforms.  The quadrature is Gauss-Kronrod 15(7) with
global heap refinement (the classic QUADPACK strategy); the initial-value
integrator is the Dormand-Prince 5(4) pair with FSAL.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

__all__ = [
    "NumericalFailure",
    "Tolerances",
    "QuadratureResult",
    "integrate",
    "integrate_semi_infinite",
    "find_root",
    "maximize_scalar",
    "OdeRun",
    "integrate_phase_ode",
]


class NumericalFailure(RuntimeError):
    """A numeric routine could not reach its requested accuracy."""


@dataclass(frozen=True)
class Tolerances:
    """Accuracy knobs shared by the numeric kernels.

    ``halved()`` returns a copy with every tolerance halved and every
    iteration budget doubled, used for convergence self-checks.
    """

    quad_rel: float = 1e-10
    quad_abs: float = 1e-12
    root_tol: float = 1e-12
    ode_rel: float = 1e-9
    tail_tol: float = 1e-10
    max_subdivisions: int = 4000
    max_steps: int = 2_000_000

    def halved(self) -> "Tolerances":
        return replace(
            self,
            quad_rel=self.quad_rel / 2,
            quad_abs=self.quad_abs / 2,
            root_tol=self.root_tol / 2,
            ode_rel=self.ode_rel / 2,
            tail_tol=self.tail_tol / 2,
            max_subdivisions=self.max_subdivisions * 2,
            max_steps=self.max_steps * 2,
        )


# ----------------------------------------------------------------------
# Gauss-Kronrod 15(7) nodes and weights (QUADPACK values).

_XGK = (
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
)

_WGK = (
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
)

_WG = (
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
)


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod 15(7) panel; returns (integral, error estimate)."""
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fc = f(center)
    result_g = _WG[3] * fc
    result_k = _WGK[7] * fc
    for j in range(7):
        x = half * _XGK[j]
        f1 = f(center - x)
        f2 = f(center + x)
        result_k += _WGK[j] * (f1 + f2)
        if j % 2 == 1:  # Kronrod nodes 1,3,5 are the embedded Gauss nodes
            result_g += _WG[j // 2] * (f1 + f2)
    result_k *= half
    result_g *= half
    return result_k, abs(result_k - result_g)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    n_panels: int


def _subst_left(f, a: float, hi: float):
    """Map ``t in (0, sqrt(hi-a))`` to ``r = a + t^2``; tames 1/sqrt(r-a).

    Deep subdivision can round the outermost node onto the far endpoint;
    the guard skips it (the collapsed panel is ulp-wide, so any integrable
    contribution there is far below tolerance) instead of evaluating the
    integrand outside the open interval.
    """

    def g(t: float) -> float:
        r = a + t * t
        if r >= hi:
            return 0.0
        return 2.0 * t * f(r)

    return g


def _subst_right(f, b: float, lo: float):
    def g(t: float) -> float:
        r = b - t * t
        if r <= lo:
            return 0.0
        return 2.0 * t * f(r)

    return g


def _adaptive(f, a: float, b: float, tol: Tolerances) -> QuadratureResult:
    if not (b > a):
        return QuadratureResult(0.0, 0.0, 0)
    val, err = _gk15(f, a, b)
    # heap of (-error, a, b, value, error); refine worst panel first
    heap = [(-err, a, b, val, err)]
    total_val, total_err = val, err
    n = 1
    while total_err > max(tol.quad_abs, tol.quad_rel * abs(total_val)):
        if n >= tol.max_subdivisions:
            neg_err, pa, pb, pval, perr = heap[0]
            raise NumericalFailure(
                f"quadrature did not converge after {n} panels; "
                f"worst panel [{pa!r}, {pb!r}] with error {perr!r}"
            )
        neg_err, pa, pb, pval, perr = heapq.heappop(heap)
        mid = 0.5 * (pa + pb)
        if mid <= pa or mid >= pb:
            # panel has collapsed to machine width; accept its estimate
            heapq.heappush(heap, (0.0, pa, pb, pval, 0.0))
            total_err -= perr
            continue
        lv, le = _gk15(f, pa, mid)
        rv, re = _gk15(f, mid, pb)
        total_val += lv + rv - pval
        total_err += le + re - perr
        heapq.heappush(heap, (-le, pa, mid, lv, le))
        heapq.heappush(heap, (-re, mid, pb, rv, re))
        n += 1
    return QuadratureResult(total_val, total_err, n)


def integrate(
    f,
    a: float,
    b: float,
    tol: Tolerances | None = None,
    breakpoints: tuple[float, ...] = (),
    singular_left: bool = False,
    singular_right: bool = False,
) -> QuadratureResult:
    """Adaptive integral of ``f`` on ``[a, b]``.

    Parameters
    ----------
    f : callable
        Integrand; never evaluated at the interval endpoints (all
        Gauss-Kronrod nodes are interior).
    a, b : float
        Finite limits, ``a <= b``.
    tol : Tolerances, optional
    breakpoints : tuple of float
        Interior points where the integrand is non-smooth; each becomes a
        panel boundary.
    singular_left, singular_right : bool
        Declare an integrable endpoint singularity; the affected panel is
        computed under the substitution ``r = a + t^2`` (resp. ``b - t^2``),
        which removes 1/sqrt-type blowups exactly.

    Returns
    -------
    QuadratureResult
        ``value``, summed ``error`` estimate and the panel count.
    """
    tol = tol or Tolerances()
    if b < a:
        raise ValueError(f"integrate: need a <= b, got [{a}, {b}]")
    if b == a:
        return QuadratureResult(0.0, 0.0, 0)
    pts = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    pieces: list[QuadratureResult] = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        use_left = singular_left and lo == a
        use_right = singular_right and hi == b
        if use_left and use_right:
            mid = 0.5 * (lo + hi)
            pieces.append(_adaptive(_subst_left(f, lo, mid), 0.0, math.sqrt(mid - lo), tol))
            pieces.append(_adaptive(_subst_right(f, hi, mid), 0.0, math.sqrt(hi - mid), tol))
        elif use_left:
            pieces.append(_adaptive(_subst_left(f, lo, hi), 0.0, math.sqrt(hi - lo), tol))
        elif use_right:
            pieces.append(_adaptive(_subst_right(f, hi, lo), 0.0, math.sqrt(hi - lo), tol))
        else:
            pieces.append(_adaptive(f, lo, hi, tol))
    return QuadratureResult(
        sum(p.value for p in pieces),
        sum(p.error for p in pieces),
        sum(p.n_panels for p in pieces),
    )


def integrate_semi_infinite(
    f,
    a: float,
    tol: Tolerances | None = None,
    scale: float = 1.0,
    decay_hint: str = "exp",
    power: float = 2.0,
    breakpoints: tuple[float, ...] = (),
    singular_left: bool = False,
) -> QuadratureResult:
    """Integral of ``f`` on ``[a, infinity)`` by cutoff doubling.

    The cutoff starts at ``a + 8 * scale`` and doubles until the estimated
    tail is below ``tail_tol`` relative to the accumulated value.  The tail
    estimate assumes exponential decay with length ``scale``
    (``decay_hint="exp"``) or a power tail ``|f| ~ C r^-power``
    (``decay_hint="power"``).
    """
    tol = tol or Tolerances()
    if scale <= 0.0:
        raise ValueError("integrate_semi_infinite: scale must be positive")
    cutoff = a + 8.0 * scale
    result = integrate(
        f, a, cutoff, tol, breakpoints=breakpoints, singular_left=singular_left
    )
    total = result.value
    err = result.error
    panels = result.n_panels
    for _ in range(64):
        fb = abs(f(cutoff))
        if decay_hint == "power":
            if power <= 1.0:
                raise ValueError("power tail needs power > 1")
            tail = fb * cutoff / (power - 1.0)
        else:
            tail = fb * scale
        if tail <= max(tol.tail_tol, tol.quad_rel * abs(total)):
            return QuadratureResult(total, err + tail, panels)
        nxt = 2.0 * cutoff
        piece = integrate(f, cutoff, nxt, tol)
        total += piece.value
        err += piece.error
        panels += piece.n_panels
        cutoff = nxt
    raise NumericalFailure(
        f"semi-infinite integral tail did not decay by cutoff {cutoff!r}"
    )


# ----------------------------------------------------------------------
# Root finding


def find_root(f, a: float, b: float, tol: Tolerances | None = None) -> float:
    """Root of ``f`` on a sign-change bracket ``[a, b]`` (Brent's method).

    The bracket is narrowed until its width is below
    ``root_tol * max(1, |root|)``.
    """
    tol = tol or Tolerances()
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise ValueError(f"find_root: no sign change on [{a}, {b}]")
    # Brent: a is kept as the contrapoint, b the current best iterate
    if abs(fa) < abs(fb):
        a, b, fa, fb = b, a, fb, fa
    c, fc = a, fa
    d = e = b - a
    for _ in range(tol.max_steps):
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        eps = tol.root_tol * max(1.0, abs(b))
        m = 0.5 * (c - b)
        if abs(m) <= eps or fb == 0.0:
            return b
        if abs(e) < eps or abs(fa) <= abs(fb):
            d = e = m  # bisect
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                t = fb / fc
                p = s * (2.0 * m * q * (q - t) - (b - a) * (t - 1.0))
                q = (q - 1.0) * (t - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(eps * q), abs(e * q)):
                e, d = d, p / q  # accept interpolation
            else:
                d = e = m
        a, fa = b, fb
        b += d if abs(d) > eps else math.copysign(eps, m)
        fb = f(b)
    raise NumericalFailure(f"find_root: no convergence on [{a}, {b}]")


# ----------------------------------------------------------------------
# Scalar maximization


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def maximize_scalar(
    f,
    lo: float,
    hi: float,
    tol: Tolerances | None = None,
    n_scan: int = 64,
    log_scale: bool = False,
) -> tuple[float, float]:
    """Maximum of ``f`` over ``[lo, hi]``; returns ``(argmax, max)``.

    Strategy: evaluate on a ``n_scan``-point grid (geometric when
    ``log_scale``), then refine the best bracket by golden-section search
    down to a relative width of ``sqrt(root_tol)``.  Endpoints compete as
    candidates, so boundary maxima are reported exactly at the boundary.
    This is a heuristic for the well-behaved single-bump profiles it is
    applied to; it is not a global optimizer.
    """
    tol = tol or Tolerances()
    if hi < lo:
        raise ValueError(f"maximize_scalar: need lo <= hi, got [{lo}, {hi}]")
    if hi == lo:
        return lo, f(lo)
    if log_scale:
        if lo <= 0.0:
            raise ValueError("log_scale scan needs lo > 0")
        ratio = (hi / lo) ** (1.0 / (n_scan - 1))
        xs = [lo * ratio**i for i in range(n_scan)]
        xs[-1] = hi
    else:
        step = (hi - lo) / (n_scan - 1)
        xs = [lo + i * step for i in range(n_scan)]
        xs[-1] = hi
    vals = [f(x) for x in xs]
    k = max(range(n_scan), key=vals.__getitem__)
    a = xs[k - 1] if k > 0 else xs[0]
    b = xs[k + 1] if k < n_scan - 1 else xs[-1]
    # golden-section on [a, b]
    width_goal = math.sqrt(tol.root_tol) * max(1.0, abs(b))
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while (b - a) > width_goal:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    xm = 0.5 * (a + b)
    fm = f(xm)
    # endpoints still compete (maximum may sit on the boundary)
    best_x, best_f = xm, fm
    for x, v in ((xs[0], vals[0]), (xs[-1], vals[-1]), (x1, f1), (x2, f2)):
        if v > best_f:
            best_x, best_f = x, v
    return best_x, best_f


# ----------------------------------------------------------------------
# Dormand-Prince 5(4) with FSAL, specialized to scalar phase equations.

_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@dataclass
class OdeRun:
    """Outcome of a phase integration over one interval."""

    r_end: float
    y_end: float
    n_crossings: int
    crossing_radii: list[float] = field(default_factory=list)
    n_steps: int = 0
    n_rejected: int = 0
    trace: list[tuple[float, float]] | None = None


def integrate_phase_ode(
    rhs,
    r0: float,
    r1: float,
    y0: float,
    tol: Tolerances | None = None,
    crossing_unit: float = math.pi,
    breakpoints: tuple[float, ...] = (),
    keep_trace: bool = False,
    first_step: float | None = None,
) -> OdeRun:
    """Integrate ``y' = rhs(r, y)`` from ``r0`` to ``r1`` (``r1 > r0``).

    Counts upward crossings of integer multiples of ``crossing_unit`` on
    accepted steps (the phase never re-descends through a multiple, so a
    clamped floor difference per step is exact) and records the crossing
    radii by linear interpolation.  ``breakpoints`` force step boundaries
    at non-smooth radii.

    Raises
    ------
    NumericalFailure
        If the adaptive step underflows (message carries the location) or
        the step budget is exhausted.
    """
    tol = tol or Tolerances()
    if not (r1 > r0):
        raise ValueError(f"integrate_phase_ode: need r1 > r0, got [{r0}, {r1}]")
    bounds = sorted({r1, *(p for p in breakpoints if r0 < p < r1)})
    r, y = r0, y0
    k1 = rhs(r, y)
    n_cross = 0
    radii: list[float] = []
    trace: list[tuple[float, float]] | None = [(r, y)] if keep_trace else None
    n_steps = n_rejected = 0
    atol = 1e-12
    seg_idx = 0
    if first_step is not None:
        h = first_step
    else:
        d0 = abs(y) + 1.0
        d1 = abs(k1) + 1e-30
        h = min(0.01 * d0 / d1, (r1 - r0) * 0.1)
    while r < r1:
        seg_end = bounds[seg_idx]
        while r >= seg_end:
            seg_idx += 1
            seg_end = bounds[seg_idx]
        if n_steps + n_rejected >= tol.max_steps:
            raise NumericalFailure(
                f"phase integration exceeded {tol.max_steps} steps near r={r!r}"
            )
        h = min(h, seg_end - r)
        if h <= 1e-14 * max(1.0, abs(r)):
            raise NumericalFailure(f"phase integration step underflow at r={r!r}")
        k2 = rhs(r + _A21 * h, y + h * (_A21 * k1))
        k3 = rhs(r + 0.3 * h, y + h * (_A31 * k1 + _A32 * k2))
        k4 = rhs(r + 0.8 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = rhs(
            r + 8.0 / 9.0 * h,
            y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4),
        )
        k6 = rhs(r + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = rhs(r + h, y_new)
        err = h * (
            _E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7
        )
        scale = atol + tol.ode_rel * max(abs(y), abs(y_new))
        ratio = abs(err) / scale
        if ratio <= 1.0:
            # accepted: count upward multiple crossings within this step
            lo_mult = math.floor(y / crossing_unit)
            hi_mult = math.floor(y_new / crossing_unit)
            if hi_mult > lo_mult:
                for m in range(lo_mult + 1, hi_mult + 1):
                    target = m * crossing_unit
                    if y_new > y:
                        frac = (target - y) / (y_new - y)
                    else:
                        frac = 1.0
                    radii.append(r + frac * h)
                n_cross += hi_mult - lo_mult
            r += h
            y = y_new
            k1 = k7  # FSAL
            if trace is not None:
                trace.append((r, y))
            n_steps += 1
        else:
            n_rejected += 1
        factor = 0.9 * ratio**-0.2 if ratio > 0.0 else 5.0
        h *= min(5.0, max(0.2, factor))
    return OdeRun(
        r_end=r,
        y_end=y,
        n_crossings=n_cross,
        crossing_radii=radii,
        n_steps=n_steps,
        n_rejected=n_rejected,
        trace=trace,
    )
