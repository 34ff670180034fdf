"""Helpers shared between the unit tests and the acceptance suite:
seeded random expression sampling, finite-difference derivative checks,
and exact expression twins of the builtin potential families."""

from __future__ import annotations

import math
import random

from nbound.expressions import EvalDomainError, eval_with_derivatives, parse

_SMOOTH_UNARY = ("exp", "log", "sqrt", "sin", "cos")
_BINARY = ("+", "-", "*", "/", "^")


def _term(rng: random.Random, depth: int) -> str:
    roll = rng.random()
    if depth <= 0 or roll < 0.30:
        if rng.random() < 0.45:
            return f"{rng.uniform(0.3, 3.0):.6f}"
        return "r"
    if roll < 0.55:
        fn = rng.choice(_SMOOTH_UNARY)
        return f"{fn}({_term(rng, depth - 1)})"
    if roll < 0.70:
        return f"-({_term(rng, depth - 1)})"
    op = rng.choice(_BINARY)
    lhs, rhs = _term(rng, depth - 1), _term(rng, depth - 1)
    if op == "^":
        # keep powers tame and single-valued
        rhs = f"{rng.uniform(0.5, 2.5):.4f}"
        lhs = f"(1.1 + abs({lhs}))"
    return f"({lhs}) {op} ({rhs})"


def sample_smooth_expressions(seed: int, n_expr: int, points) -> list:
    """``n_expr`` random ASTs built from smooth primitives, each of which
    evaluates to moderate finite values at every sample point.  Candidates
    that leave the evaluation domain or blow up are resampled, so the
    result is deterministic in ``seed``.
    """
    rng = random.Random(seed)
    out = []
    attempts = 0
    while len(out) < n_expr and attempts < 200 * n_expr:
        attempts += 1
        text = _term(rng, 3)
        if "r" not in text:
            continue
        try:
            ast = parse(text)
            for r in points:
                v, dv, d2v = eval_with_derivatives(ast, r)
                if not all(math.isfinite(x) for x in (v, dv, d2v)):
                    raise EvalDomainError("overflow", r)
                if max(abs(v), abs(dv)) > 1e6:
                    raise EvalDomainError("too large", r)
        except (EvalDomainError, OverflowError, ZeroDivisionError):
            continue
        out.append(ast)
    if len(out) < n_expr:
        raise RuntimeError(f"could not sample {n_expr} usable expressions")
    return out


def fd_derivative_agrees(ast, r: float, rel_tol: float = 1e-6) -> bool:
    """Dual-number first derivative versus Richardson-extrapolated central
    differences.  Points where the differences themselves have not
    converged (integrand too rough locally for the step size) are skipped
    by returning True, since finite differences certify nothing there.
    """
    v, dv, _ = eval_with_derivatives(ast, r)
    h = 1e-3 * (1.0 + abs(r))

    def central(step: float) -> float:
        vp = eval_with_derivatives(ast, r + step)[0]
        vm = eval_with_derivatives(ast, r - step)[0]
        return (vp - vm) / (2.0 * step)

    try:
        fd1 = central(h)
        fd2 = central(h / 2.0)
    except (EvalDomainError, OverflowError, ZeroDivisionError):
        return True
    scale = max(1.0, abs(dv))
    if abs(fd1 - fd2) > 1e-5 * scale:
        return True
    richardson = fd2 + (fd2 - fd1) / 3.0
    return abs(richardson - dv) <= rel_tol * scale


#: exact expression twins of the builtin families; the step factor
#: ``1 - min(1, max(0, (r - edge)*1e30))`` is 1 below the edge and 0 above
#: it for every representable float except the edge itself, because the
#: ramp is narrower than the float spacing there
BUILTIN_TWINS = {
    "exponential": (
        "-g^2/R^2*exp(-r/R)",
        {"g": 8.0, "R": 1.0},
    ),
    "yukawa": (
        "-g^2/R*exp(-r/R)/r",
        {"g": 8.0, "R": 1.0},
    ),
    "morse": (
        "-g^2/R^2*(2*exp(-(r/R - alpha)) - exp(-2*(r/R - alpha)))",
        {"g": 5.0, "R": 1.0, "alpha": 1.0},
    ),
    "square_well": (
        "-g^2/R^2*(1 - min(1, max(0, (r - R)*1e30)))",
        {"g": 10.0, "R": 1.0},
    ),
    "saturating": (
        "-g^2/R^2*(1 - min(1, max(0, (r - a)*1e30)))",
        {"g": 25.0, "R": 1.0},  # a is filled in from the calibrated cutoff
    ),
}
