"""Central potentials: builtin families, expression-defined potentials,
clipping, centrifugal terms, and shape analysis.

A :class:`Potential` bundles an evaluator returning ``(V, V', V'')`` at a
radius with the structural metadata the counting and limit machinery needs
(length scale, discontinuity radii, support cutoff, decay scale).  A
:class:`ShapeReport` is a grid-plus-refinement survey of one potential:
sign-change radii, the minimum, and the shape flags that gate the various
limit formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .expressions import EvalDomainError, eval_with_derivatives, parse, to_text
from .numerics import Tolerances, find_root

__all__ = [
    "PotentialError",
    "Potential",
    "ShapeReport",
    "BUILTIN_KINDS",
    "make_builtin",
    "make_expression",
    "negative_part",
    "effective_potential",
    "analyze_shape",
    "parse_potential_spec",
    "saturating_alpha",
]


class PotentialError(ValueError):
    """Bad potential construction: unknown kind or invalid parameter."""


@dataclass(frozen=True)
class Potential:
    """A central potential V(r) on r > 0.

    Attributes
    ----------
    kind : str
        Family name (``morse``, ``exponential``, ``yukawa``,
        ``square_well``, ``saturating``, ``expression``).
    params : dict
        Construction parameters.
    r_scale : float
        Characteristic length (the range ``R``).
    edges : tuple of float
        Radii where V jumps; derivatives are reported as 0 there.
    support_end : float or None
        Radius beyond which V is identically zero, if any.
    origin_singular : bool
        True when V diverges at the origin (like 1/r).
    decay_scale : float
        Length scale of the large-r decay (used for tail handling).
    ell_term : int
        Centrifugal ``ell(ell+1)/r^2`` already included (0 for bare V).
    clipped : bool
        True when this object is the negative part of another potential.
    label : str
        Human-readable description.
    """

    kind: str
    params: dict
    evaluator: Callable[[float], tuple[float, float, float]] = field(repr=False)
    r_scale: float = 1.0
    edges: tuple[float, ...] = ()
    support_end: Optional[float] = None
    origin_singular: bool = False
    decay_scale: float = 1.0
    ell_term: int = 0
    clipped: bool = False
    label: str = ""

    def eval3(self, r: float) -> tuple[float, float, float]:
        """Value and first two derivatives at radius ``r > 0``."""
        return self.evaluator(r)

    def v(self, r: float) -> float:
        return self.evaluator(r)[0]

    def dv(self, r: float) -> float:
        return self.evaluator(r)[1]

    def d2v(self, r: float) -> float:
        return self.evaluator(r)[2]


def _require(params: dict, key: str, kind: str) -> float:
    try:
        return float(params[key])
    except KeyError:
        raise PotentialError(f"{kind}: missing required parameter {key!r}") from None
    except (TypeError, ValueError):
        raise PotentialError(
            f"{kind}: parameter {key!r} must be a number, got {params[key]!r}"
        ) from None


def _positive(value: float, key: str, kind: str) -> float:
    if not (value > 0.0):
        raise PotentialError(f"{kind}: parameter {key!r} must be positive, got {value}")
    return value


def _make_morse(g: float, R: float, alpha: float) -> Potential:
    c0 = g * g / (R * R)
    c1 = 2.0 * g * g / R**3
    c2 = 2.0 * g * g / R**4

    def ev(r: float) -> tuple[float, float, float]:
        x = r / R - alpha
        e1 = math.exp(-x)
        e2 = e1 * e1
        return (
            -c0 * (2.0 * e1 - e2),
            c1 * (e1 - e2),
            c2 * (-e1 + 2.0 * e2),
        )

    return Potential(
        kind="morse",
        params={"g": g, "R": R, "alpha": alpha},
        evaluator=ev,
        r_scale=R,
        decay_scale=R,
        label=f"morse(g={g:g}, R={R:g}, alpha={alpha:g})",
    )


def _make_exponential(g: float, R: float) -> Potential:
    c = g * g / (R * R)

    def ev(r: float) -> tuple[float, float, float]:
        e = math.exp(-r / R)
        return (-c * e, c * e / R, -c * e / (R * R))

    return Potential(
        kind="exponential",
        params={"g": g, "R": R},
        evaluator=ev,
        r_scale=R,
        decay_scale=R,
        label=f"exponential(g={g:g}, R={R:g})",
    )


def _make_yukawa(g: float, R: float) -> Potential:
    c = g * g / R

    def ev(r: float) -> tuple[float, float, float]:
        e = math.exp(-r / R)
        v = -c * e / r
        dv = c * e * (1.0 / (r * r) + 1.0 / (R * r))
        d2v = -c * e * (2.0 / r**3 + 2.0 / (R * r * r) + 1.0 / (R * R * r))
        return (v, dv, d2v)

    return Potential(
        kind="yukawa",
        params={"g": g, "R": R},
        evaluator=ev,
        r_scale=R,
        origin_singular=True,
        decay_scale=R,
        label=f"yukawa(g={g:g}, R={R:g})",
    )


def _make_square_well(g: float, R: float) -> Potential:
    depth = g * g / (R * R)

    def ev(r: float) -> tuple[float, float, float]:
        if r < R:
            return (-depth, 0.0, 0.0)
        return (0.0, 0.0, 0.0)

    return Potential(
        kind="square_well",
        params={"g": g, "R": R},
        evaluator=ev,
        r_scale=R,
        edges=(R,),
        support_end=R,
        decay_scale=R,
        label=f"square_well(g={g:g}, R={R:g})",
    )


def saturating_alpha(g: float, ell_design: int, delta: float, n_target: int) -> float:
    """Cutoff ratio making the saturating well hold exactly ``n_target``
    states in channel ``ell_design``, with margin ``delta`` below the next
    threshold."""
    m = 2 * ell_design + 1
    return (math.pi * m * (n_target + delta) / g) ** (1.0 / m)


def _make_saturating(
    g: float, R: float, ell_design: int, delta: float, n_target: int
) -> Potential:
    if not 0.0 <= delta < 0.5:
        raise PotentialError(f"saturating: parameter 'delta' must lie in [0, 0.5), got {delta}")
    if n_target < 1:
        raise PotentialError(f"saturating: parameter 'n_target' must be >= 1, got {n_target}")
    if ell_design < 0:
        raise PotentialError(f"saturating: parameter 'ell_design' must be >= 0, got {ell_design}")
    alpha = saturating_alpha(g, ell_design, delta, n_target)
    cutoff = alpha * R
    depth = g * g / (R * R)
    k = 4 * ell_design

    def ev(r: float) -> tuple[float, float, float]:
        if r >= cutoff:
            return (0.0, 0.0, 0.0)
        if k == 0:
            return (-depth, 0.0, 0.0)
        t = r / R
        v = -depth * t**k
        dv = -depth * k * t ** (k - 1) / R
        d2v = -depth * k * (k - 1) * t ** (k - 2) / (R * R) if k >= 2 else 0.0
        return (v, dv, d2v)

    return Potential(
        kind="saturating",
        params={
            "g": g,
            "R": R,
            "ell_design": ell_design,
            "delta": delta,
            "n_target": n_target,
            "alpha": alpha,
        },
        evaluator=ev,
        r_scale=R,
        edges=(cutoff,),
        support_end=cutoff,
        decay_scale=R,
        label=(
            f"saturating(g={g:g}, R={R:g}, ell_design={ell_design}, "
            f"delta={delta:g}, n_target={n_target})"
        ),
    )


_BUILDERS = {
    "morse": lambda p: _make_morse(
        _positive(_require(p, "g", "morse"), "g", "morse"),
        _positive(float(p.get("R", 1.0)), "R", "morse"),
        _require(p, "alpha", "morse"),
    ),
    "exponential": lambda p: _make_exponential(
        _positive(_require(p, "g", "exponential"), "g", "exponential"),
        _positive(float(p.get("R", 1.0)), "R", "exponential"),
    ),
    "yukawa": lambda p: _make_yukawa(
        _positive(_require(p, "g", "yukawa"), "g", "yukawa"),
        _positive(float(p.get("R", 1.0)), "R", "yukawa"),
    ),
    "square_well": lambda p: _make_square_well(
        _positive(_require(p, "g", "square_well"), "g", "square_well"),
        _positive(float(p.get("R", 1.0)), "R", "square_well"),
    ),
    "saturating": lambda p: _make_saturating(
        _positive(_require(p, "g", "saturating"), "g", "saturating"),
        _positive(float(p.get("R", 1.0)), "R", "saturating"),
        int(p.get("ell_design", 0)),
        float(p.get("delta", 0.1)),
        int(p.get("n_target", 1)),
    ),
}

#: builtin family names accepted by :func:`make_builtin`
BUILTIN_KINDS = tuple(sorted(_BUILDERS))


def make_builtin(kind: str, **params) -> Potential:
    """Construct a builtin potential family by name.

    Raises :class:`PotentialError` naming the offending parameter on bad
    input, or listing the available kinds when ``kind`` is unknown.
    """
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise PotentialError(
            f"unknown potential kind {kind!r}; available: {', '.join(BUILTIN_KINDS)}"
        ) from None
    return builder(dict(params))


def make_expression(text: str, **bindings) -> Potential:
    """Potential defined by an expression in ``r`` (other names bound)."""
    ast = parse(text)
    values = {k: float(v) for k, v in bindings.items()}
    r_scale = values.get("R", 1.0)
    if r_scale <= 0.0:
        r_scale = 1.0

    def ev(r: float) -> tuple[float, float, float]:
        return eval_with_derivatives(ast, r, values)

    # expressions carry no structural origin flag, so detect a diverging
    # profile numerically; the quadrature substitutions near r = 0 depend
    # on it
    probe = r_scale * 1e-5
    try:
        v_out = abs(ev(probe)[0])
        v_in = abs(ev(probe / 64.0)[0])
        singular = v_in > 8.0 * v_out + 1e-300
    except (EvalDomainError, ZeroDivisionError, OverflowError):
        singular = True

    shown = ", ".join(f"{k}={v:g}" for k, v in sorted(values.items()))
    return Potential(
        kind="expression",
        params={"text": to_text(ast), **values},
        evaluator=ev,
        r_scale=r_scale,
        origin_singular=singular,
        decay_scale=r_scale,
        label=f"expr({to_text(ast)}" + (f"; {shown})" if shown else ")"),
    )


def negative_part(p: Potential) -> Potential:
    """The attractive part: V where V <= 0, zero elsewhere."""
    if p.clipped:
        return p
    base = p.evaluator

    def ev(r: float) -> tuple[float, float, float]:
        v, dv, d2v = base(r)
        if v <= 0.0:
            return (v, dv, d2v)
        return (0.0, 0.0, 0.0)

    return Potential(
        kind=p.kind,
        params=p.params,
        evaluator=ev,
        r_scale=p.r_scale,
        edges=p.edges,
        support_end=p.support_end,
        origin_singular=p.origin_singular,
        decay_scale=p.decay_scale,
        ell_term=p.ell_term,
        clipped=True,
        label=f"neg[{p.label}]",
    )


def effective_potential(p: Potential, ell: int) -> Potential:
    """V plus the centrifugal term ``ell(ell+1)/r^2``; ``ell=0`` is V itself."""
    if ell < 0:
        raise PotentialError(f"effective_potential: ell must be >= 0, got {ell}")
    if ell == 0:
        return p
    c = float(ell * (ell + 1))
    base = p.evaluator

    def ev(r: float) -> tuple[float, float, float]:
        v, dv, d2v = base(r)
        rr = r * r
        return (v + c / rr, dv - 2.0 * c / (rr * r), d2v + 6.0 * c / (rr * rr))

    return Potential(
        kind=p.kind,
        params=p.params,
        evaluator=ev,
        r_scale=p.r_scale,
        edges=p.edges,
        support_end=None,
        origin_singular=True,
        decay_scale=p.decay_scale,
        ell_term=ell,
        clipped=p.clipped,
        label=f"{p.label} + {ell}({ell}+1)/r^2",
    )


# ----------------------------------------------------------------------
# Shape analysis


@dataclass(frozen=True)
class ShapeReport:
    """Structural survey of one potential (as handed in, centrifugal term
    and all).

    ``r_minus`` is the radius where the potential first turns negative
    (``None`` when it is already negative at the origin); ``r_plus`` is
    where it last stops being negative (``math.inf`` for potentials
    negative all the way out).  ``negative_segments`` lists every maximal
    negative interval.  ``r_min`` locates the potential minimum (plateau
    midpoint for flat-bottomed wells; ``None`` without a negative region).
    """

    channel: int
    r_minus: Optional[float]
    r_plus: float
    r_min: Optional[float]
    v_at_rmin: float
    negative_segments: tuple[tuple[float, float], ...]
    flags: dict
    grid_r: tuple[float, ...] = field(repr=False, default=())
    grid_v: tuple[float, ...] = field(repr=False, default=())
    grid_dv: tuple[float, ...] = field(repr=False, default=())

    def cms2_condition(self, p_exp: float) -> bool:
        """Whether ``(1-2p)(-V) + (1-p) r (-V') <= 0`` holds wherever V < 0.

        This is the sign of the derivative of ``r^(1-2p) (-V)^(1-p)``, the
        shape condition attached to the interpolated one-parameter limit
        family with exponent ``p`` in (1/2, 1).
        """
        if not self.flags.get("nonpositive", False):
            return False
        for r, v, dv in zip(self.grid_r, self.grid_v, self.grid_dv):
            if v >= 0.0:
                continue
            test = (1.0 - 2.0 * p_exp) * (-v) + (1.0 - p_exp) * r * (-dv)
            if test > 1e-10 * abs(v):
                return False
        return True


def _far_cutoff(p: Potential) -> float:
    """Radius beyond which the potential is numerically negligible."""
    if p.support_end is not None:
        return p.support_end
    probe = [p.r_scale * (0.25 * k) for k in range(1, 9)]
    vscale = max(abs(p.v(r)) for r in probe) or 1.0
    r_max = 40.0 * max(p.r_scale, p.decay_scale)
    for _ in range(12):
        if abs(p.v(r_max)) <= 1e-13 * vscale:
            return r_max
        r_max *= 2.0
    return r_max


def _grid(p: Potential, ell: int, n: int) -> list[float]:
    lo = 1e-6 * p.r_scale
    hi = _far_cutoff(p)
    if ell > 0:
        # the centrifugal wall pushes the inner zero well inside r_scale
        lo = min(lo, 1e-9 * p.r_scale * ell * (ell + 1))
        lo = max(lo, 1e-300)
    ratio = (hi / lo) ** (1.0 / (n - 1))
    pts = [lo * ratio**i for i in range(n)]
    pts[-1] = hi
    # sample tight shoulders around each jump so segments stop exactly there
    for e in p.edges:
        if lo < e < hi:
            pts.extend([e * (1.0 - 1e-12), e * (1.0 + 1e-12)])
    return sorted(pts)


def _segments_from_grid(
    p: Potential, rs: list[float], tol: Tolerances
) -> list[tuple[float, float]]:
    """Maximal intervals where V < 0, boundaries refined by root finding."""
    vs = [p.v(r) for r in rs]
    segs: list[tuple[float, float]] = []
    open_start: Optional[float] = None
    if vs[0] < 0.0:
        open_start = 0.0
    edges = set(p.edges)
    for i in range(1, len(rs)):
        a, b = rs[i - 1], rs[i]
        va, vb = vs[i - 1], vs[i]
        if va < 0.0 <= vb:
            z = b if b in edges or a in edges else _refine_zero(p, a, b, tol)
            segs.append((open_start if open_start is not None else 0.0, z))
            open_start = None
        elif vb < 0.0 <= va:
            z = a if a in edges or b in edges else _refine_zero(p, a, b, tol)
            open_start = z
    if open_start is not None:
        end = p.support_end if p.support_end is not None else math.inf
        segs.append((open_start, end))
    return segs


def _refine_zero(p: Potential, a: float, b: float, tol: Tolerances) -> float:
    fa, fb = p.v(a), p.v(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        return 0.5 * (a + b)
    return find_root(p.v, a, b, tol)


def _locate_minimum(
    p: Potential, rs: list[float], vs: list[float], tol: Tolerances
) -> tuple[Optional[float], float]:
    vmin = min(vs)
    if vmin >= 0.0:
        return None, 0.0
    k = vs.index(vmin)
    slack = 1e-12 * abs(vmin)
    i = k
    while i > 0 and vs[i - 1] <= vmin + slack:
        i -= 1
    j = k
    while j < len(vs) - 1 and vs[j + 1] <= vmin + slack:
        j += 1
    if j - i >= 2:
        # flat bottom: report the plateau midpoint
        r_min = 0.5 * (rs[i] + rs[j])
        return r_min, p.v(r_min)
    a = rs[k - 1] if k > 0 else rs[0]
    b = rs[k + 1] if k < len(rs) - 1 else rs[-1]
    da, db = p.dv(a), p.dv(b)
    if da < 0.0 < db:
        r_min = find_root(p.dv, a, b, tol)
        return r_min, p.v(r_min)
    # boundary minimum or cusp: golden refinement on the bracket
    lo, hi = a, b
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv * (hi - lo)
    x2 = lo + inv * (hi - lo)
    f1, f2 = p.v(x1), p.v(x2)
    goal = math.sqrt(tol.root_tol) * max(1.0, hi)
    while hi - lo > goal:
        if f1 > f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv * (hi - lo)
            f2 = p.v(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv * (hi - lo)
            f1 = p.v(x1)
    r_min = 0.5 * (lo + hi)
    v_here = p.v(r_min)
    if vs[0] < v_here and k == 0:
        return rs[0], vs[0]
    return r_min, v_here


def _shape_flags(
    p: Potential,
    ell: int,
    rs: list[float],
    segs: list[tuple[float, float]],
    tol: Tolerances,
) -> dict:
    vs = [p.v(r) for r in rs]
    dvs = [p.dv(r) for r in rs]
    vscale = max(abs(v) for v in vs) or 1.0
    edges = set(p.edges)
    away = [i for i, r in enumerate(rs) if all(abs(r - e) > 1e-9 * max(1.0, e) for e in edges)]

    nonpositive = all(vs[i] <= 1e-12 * vscale for i in away)
    monotone = all(dvs[i] >= -1e-12 * (abs(vs[i]) + 1e-3 * vscale) for i in away)

    # [V r^(-4l)]' >= 0  <=>  V' - 4 l V / r >= 0
    cond_4l = True
    for i in away:
        lhs = dvs[i] - 4.0 * ell * vs[i] / rs[i]
        if lhs < -1e-10 * (abs(vs[i]) / rs[i] + abs(dvs[i]) + 1e-3 * vscale / p.r_scale):
            cond_4l = False
            break

    two_zero = (
        len(segs) == 1
        and segs[0][0] > 0.0
        and math.isfinite(segs[0][1])
    )

    # single minimum: V descends, bottoms out once (point or plateau), ascends
    single_min = False
    if segs:
        signs = []
        for i in away:
            d = dvs[i]
            mag = abs(vs[i]) / max(rs[i], 1e-300) + 1e-3 * vscale / p.r_scale
            if d > 1e-10 * mag:
                signs.append(1)
            elif d < -1e-10 * mag:
                signs.append(-1)
        # collapse runs; a single well reads -..-(0s)..+ with one rise
        collapsed = []
        for s in signs:
            if not collapsed or collapsed[-1] != s:
                collapsed.append(s)
        single_min = collapsed in ([-1, 1], [-1], [1], [])
        if len(segs) != 1:
            single_min = False

    return {
        "nonpositive": nonpositive,
        "monotone_nondecreasing": monotone,
        "cond_monotonicity_4l": cond_4l,
        "two_zero_shape": two_zero,
        "single_minimum_shape": single_min,
    }


def analyze_shape(
    p: Potential,
    ell: int = 0,
    n_grid: int = 2048,
    tol: Tolerances | None = None,
) -> ShapeReport:
    """Survey the sign structure and monotonicity of a potential.

    The potential is sampled on a log-spaced grid (2048 points by default)
    from ``1e-6 r_scale`` out past its decay, sign changes are refined by
    root finding, and the flags are recomputed on a doubled grid until two
    consecutive grids agree.

    Parameters
    ----------
    p : Potential
        Analyzed exactly as handed in; pass the effective potential to
        survey a nonzero channel's shape.
    ell : int
        Channel recorded in the report; also sets the ``4l`` monotonicity
        flag's exponent (meaningful when ``p`` is the bare potential).
    """
    tol = tol or Tolerances()
    n = n_grid
    prev: Optional[dict] = None
    for _ in range(4):
        rs = _grid(p, ell, n)
        segs = _segments_from_grid(p, rs, tol)
        flags = _shape_flags(p, ell, rs, segs, tol)
        if prev is not None and flags == prev:
            break
        prev = flags
        n *= 2
    vs = [p.v(r) for r in rs]
    dvs = [p.dv(r) for r in rs]

    if segs:
        first_start = segs[0][0]
        r_minus = first_start if first_start > 0.0 else None
        r_plus = segs[-1][1]
    else:
        r_minus, r_plus = None, 0.0
    r_min, v_at_rmin = _locate_minimum(p, rs, vs, tol)

    return ShapeReport(
        channel=ell,
        r_minus=r_minus,
        r_plus=r_plus,
        r_min=r_min,
        v_at_rmin=v_at_rmin,
        negative_segments=tuple(segs),
        flags=flags,
        grid_r=tuple(rs),
        grid_v=tuple(vs),
        grid_dv=tuple(dvs),
    )


# ----------------------------------------------------------------------
# CLI spec parsing


def parse_potential_spec(text: str) -> Potential:
    """Build a potential from command-line shorthand.

    Builtin families: ``kind:key=value,key=value`` — for example
    ``morse:g=5,R=1,alpha=0.2``.  Expression potentials:
    ``expr:<expression>:key=value,...`` — for example
    ``expr:-g^2/R^2*exp(-r/R):g=8,R=1`` (quotes around the expression are
    accepted and stripped).
    """
    text = text.strip()
    if not text:
        raise PotentialError("empty potential spec")
    head, _, rest = text.partition(":")
    head = head.strip().lower()
    if head in ("expr", "expression"):
        if not rest:
            raise PotentialError("expression spec needs an expression body")
        body, sep, params_part = rest.rpartition(":")
        if not sep:
            body, params_part = rest, ""
        body = body.strip().strip("'\"")
        bindings = _parse_params(params_part) if params_part else {}
        return make_expression(body, **bindings)
    params = _parse_params(rest) if rest else {}
    return make_builtin(head, **params)


def _parse_params(text: str) -> dict:
    out: dict = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, val = item.partition("=")
        if not sep:
            raise PotentialError(f"expected key=value, got {item!r}")
        key = key.strip()
        val = val.strip()
        try:
            num = float(val)
        except ValueError:
            raise PotentialError(f"parameter {key!r}: not a number: {val!r}") from None
        out[key] = int(num) if key in ("ell_design", "n_target") else num
    return out
