"""Command-line front end: count bound states, evaluate limits, reproduce
the stored reference tables, sweep couplings for plot data, and run the
invariant check suites.

Subcommands
-----------
``count``
    Exact number of bound states in one channel, optionally together with
    any subset of the limit catalog, emitted as text, JSON, or CSV.
``table``
    Recompute reference table 1 (exponential profile) or 2 (Yukawa
    profile) and mark any cell that deviates from the stored integers.
``sweep``
    One CSV row per coupling value with the requested quantities; rows
    are computed in parallel but written in deterministic order.
``check``
    Invariant suites (closed forms, bound sandwiches, saturation,
    scaling, tolerance invariance, optional seeded random profiles);
    failures are reported as JSON lines and exit with status 4.

Record CSV columns (fixed order)
--------------------------------
``potential``    the spec string echoed back
``ell``          channel
``exact``        bound-state count (empty when not computed)
``limits``       semicolon list ``id:kind:raw:integer`` (``NA`` when
                 the limit is inapplicable)
``tolerances``   semicolon list ``name=value``
``wall_time_s``  wall-clock seconds for the computation
``version``      tool version

Exit codes
----------
0 success; 1 invalid input; 2 numerical failure; 3 inapplicable
request; 4 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import multiprocessing
import os
import random
import sys
import time
from dataclasses import dataclass, replace
from importlib import resources
from typing import Optional, Sequence

from . import __version__
from .channel_limits import (
    CHANNEL_LIMIT_IDS,
    channel_context,
    comparison_limit,
    evaluate_channel,
    evaluate_known_limit,
    evaluate_nu1_family,
    evaluate_nu2_family,
    second_kind_limits,
)
from .counting import count_partial_wave, find_L_exact, total_count
from .numerics import NumericalFailure, Tolerances
from .potentials import (
    Potential,
    PotentialError,
    make_builtin,
    make_expression,
    parse_potential_spec,
)
from .total_limits import TOTAL_LIMIT_IDS, evaluate_total_limit, l_bounds, total_bounds

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_INAPPLICABLE = 3
EXIT_VIOLATION = 4

_RECORD_COLUMNS = (
    "potential", "ell", "exact", "limits", "tolerances", "wall_time_s", "version"
)

#: ids of the per-channel columns of the stored reference tables, in
#: display order; ``exact`` sits in the middle like the source layout
_TABLE_COLUMNS = (
    "LLSK", "NLL3", "NLL1nl", "NLL2l", "exact",
    "NUL2l", "BSl", "CMS", "Ml", "GGMT", "NUL1l", "ULSK",
)

_TABLE_FAMILY = {1: "exponential", 2: "yukawa"}


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit status 1."""

    def error(self, message):  # pragma: no cover - thin argparse shim
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _UsageError(ValueError):
    """Bad request detected after argument parsing (still exit 1)."""


# ----------------------------------------------------------------------
# Run records


def _json_safe(obj):
    """Recursively convert a value into JSON-native types (tuples to
    lists, non-finite floats to their reprs, exotic objects to repr)."""
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(x) for x in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if obj is None or isinstance(obj, (str, int, float, bool)):
        return obj
    return repr(obj)


def limit_payload(value) -> dict:
    """Normalize a limit value (channel or total) into a plain dict."""
    return {
        "limit_id": value.limit_id,
        "kind": value.kind,
        "applicable": value.applicable,
        "raw": _json_safe(value.raw),
        "integer_statement": value.integer_statement,
        "reason": value.reason,
        "auxiliary": _json_safe(value.auxiliary),
    }


@dataclass(frozen=True)
class RunRecord:
    """One computation: inputs, outputs, and provenance for replay."""

    potential: str
    ell: int
    tolerances: dict
    exact: Optional[int]
    limits: tuple
    wall_time_s: float
    version: str

    def to_json(self) -> str:
        payload = {
            "potential": self.potential,
            "ell": self.ell,
            "tolerances": self.tolerances,
            "exact": self.exact,
            "limits": list(self.limits),
            "wall_time_s": self.wall_time_s,
            "version": self.version,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        d = json.loads(text)
        return cls(
            potential=d["potential"],
            ell=int(d["ell"]),
            tolerances=d["tolerances"],
            exact=d["exact"],
            limits=tuple(d["limits"]),
            wall_time_s=float(d["wall_time_s"]),
            version=d["version"],
        )

    def csv_row(self) -> list[str]:
        limits_cell = ";".join(
            "{}:{}:{}:{}".format(
                p["limit_id"], p["kind"],
                "NA" if p["raw"] is None else repr(p["raw"]),
                "NA" if p["integer_statement"] is None else p["integer_statement"],
            )
            for p in self.limits
        )
        tol_cell = ";".join(f"{k}={v}" for k, v in sorted(self.tolerances.items()))
        return [
            self.potential,
            str(self.ell),
            "" if self.exact is None else str(self.exact),
            limits_cell,
            tol_cell,
            repr(self.wall_time_s),
            self.version,
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_RECORD_COLUMNS)
        writer.writerow(self.csv_row())
        return buf.getvalue()


def _record(pot_text: str, ell: int, tol: Tolerances, exact: Optional[int],
            values: Sequence, wall: float) -> RunRecord:
    tol_dict = {
        "quad_rel": tol.quad_rel, "quad_abs": tol.quad_abs,
        "root_tol": tol.root_tol, "ode_rel": tol.ode_rel,
        "tail_tol": tol.tail_tol, "max_subdivisions": tol.max_subdivisions,
        "max_steps": tol.max_steps,
    }
    return RunRecord(
        potential=pot_text, ell=ell, tolerances=tol_dict, exact=exact,
        limits=tuple(limit_payload(v) for v in values),
        wall_time_s=wall, version=__version__,
    )


# ----------------------------------------------------------------------
# Shared argument plumbing


def _add_tolerance_flags(parser: argparse.ArgumentParser) -> None:
    grp = parser.add_argument_group("tolerance overrides")
    grp.add_argument("--tol-quad-rel", type=float, default=None, metavar="X")
    grp.add_argument("--tol-quad-abs", type=float, default=None, metavar="X")
    grp.add_argument("--tol-root", type=float, default=None, metavar="X")
    grp.add_argument("--tol-ode-rel", type=float, default=None, metavar="X")
    grp.add_argument("--tol-tail", type=float, default=None, metavar="X")
    grp.add_argument(
        "--eps-scale", type=float, default=1e-8, metavar="X",
        help="inner start offset for the phase integration, as a fraction "
             "of the profile range (default 1e-8)",
    )


def _build_tolerances(args) -> Tolerances:
    tol = Tolerances()
    updates = {}
    if args.tol_quad_rel is not None:
        updates["quad_rel"] = args.tol_quad_rel
    if args.tol_quad_abs is not None:
        updates["quad_abs"] = args.tol_quad_abs
    if args.tol_root is not None:
        updates["root_tol"] = args.tol_root
    if args.tol_ode_rel is not None:
        updates["ode_rel"] = args.tol_ode_rel
    if args.tol_tail is not None:
        updates["tail_tol"] = args.tol_tail
    return replace(tol, **updates) if updates else tol


def _parse_only(text: Optional[str]) -> Optional[list[str]]:
    if text is None:
        return None
    return [item.strip() for item in text.split(",") if item.strip()]


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _evaluate_any(limit_id: str, pot: Potential, ell: int, tol: Tolerances,
                  ctx=None):
    """Evaluate one limit by id, channel or spectrum-wide."""
    if limit_id in TOTAL_LIMIT_IDS:
        return evaluate_total_limit(limit_id, pot, tol=tol)
    if limit_id not in CHANNEL_LIMIT_IDS:
        known = ", ".join(sorted(CHANNEL_LIMIT_IDS + TOTAL_LIMIT_IDS))
        raise _UsageError(f"unknown limit id {limit_id!r}; available: {known}")
    ctx = ctx or channel_context(pot, ell, tol)
    if limit_id in ("BSl", "CMS", "CMSn", "Ml", "GGMT", "CMS2", "CC", "Cl", "Cln"):
        return evaluate_known_limit(limit_id, pot, ell, tol, ctx=ctx)
    if limit_id in ("NUL1", "NUL1l", "NLL1", "NLL1n", "NLL1nl"):
        return evaluate_nu1_family(limit_id, pot, ell, ctx=ctx)
    if limit_id in ("NUL2", "NLL2", "NUL2l", "NLL2l", "NLL3s", "NLL3", "NLL4"):
        return evaluate_nu2_family(limit_id, pot, ell, tol, ctx=ctx)
    if limit_id == "COMPARE_H":
        return comparison_limit(pot, ell, ctx=ctx)
    ulsk, llsk, _ = second_kind_limits(pot, ell, ctx=ctx)
    return ulsk if limit_id == "ULSK" else llsk


# ----------------------------------------------------------------------
# count


def cmd_count(args) -> int:
    try:
        pot = parse_potential_spec(args.potential)
    except PotentialError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    tol = _build_tolerances(args)
    requested = _parse_only(args.only) or []

    t0 = time.perf_counter()
    values = []
    try:
        sol = count_partial_wave(pot, args.ell, tol, eps_scale=args.eps_scale)
        ctx = channel_context(pot, args.ell, tol) if requested else None
        wrong_channel = []
        for limit_id in requested:
            try:
                values.append(_evaluate_any(limit_id, pot, args.ell, tol, ctx))
            except _UsageError:
                raise
            except ValueError as exc:
                # right id, wrong channel variant: the request cannot be
                # honored for this ell
                wrong_channel.append(f"{limit_id}: {exc}")
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    wall = time.perf_counter() - t0

    rec = _record(args.potential, args.ell, tol, sol.count, values, wall)
    if args.format == "json":
        _emit(rec.to_json() + "\n", args.output)
    elif args.format == "csv":
        _emit(rec.to_csv(), args.output)
    else:
        lines = [
            f"potential:  {pot.label or args.potential}",
            f"channel:    ell = {args.ell}",
            f"N_ell = {sol.count}",
            f"winding at cutoff: eta/pi = {sol.eta_end / math.pi:.6f}"
            + (" (settling from above)" if sol.approach_from_above else ""),
        ]
        for p in rec.limits:
            if p["applicable"]:
                lines.append(
                    f"  {p['limit_id']:>10s} ({p['kind']}): raw {p['raw']:.6f}"
                    f" -> {p['kind']} bound {p['integer_statement']}"
                )
            else:
                lines.append(
                    f"  {p['limit_id']:>10s} ({p['kind']}): not applicable"
                    f" ({p['reason']})"
                )
        lines.append(f"wall time: {wall:.3f} s")
        _emit("\n".join(lines) + "\n", args.output)

    if wrong_channel:
        for msg in wrong_channel:
            print(f"inapplicable request: {msg}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    if any(not p["applicable"] for p in rec.limits):
        return EXIT_INAPPLICABLE
    return EXIT_OK


# ----------------------------------------------------------------------
# table


def _load_reference(which: int) -> list[dict]:
    name = f"table{which}.csv"
    with resources.files("nbound.data").joinpath(name).open("r") as fh:
        return [
            {k: int(v) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]


def _table_quote(value) -> int:
    """Integer a reference table quotes for this limit.

    Upper limits are displayed as the floored bound value; when the bound
    falls exactly on an integer the display shows that integer, whereas
    the integer statement stays one below it (a zero-energy state could
    sit at the threshold).  Lower limits quote the integer statement.
    NLL1n(l) carries its own traditional quote, which keeps its additive
    one inside the integer part.
    """
    if "table_quote" in value.auxiliary:
        return value.auxiliary["table_quote"]
    if value.kind == "upper":
        near = round(value.raw)
        if abs(value.raw - near) <= 1e-9 * max(1.0, abs(near)):
            return int(near)
        return math.floor(value.raw)
    return value.integer_statement


def compute_table_row(family: str, g: float, ell: int,
                      tol: Tolerances) -> dict:
    """All twelve reference columns for one (g, ell) cell."""
    pot = make_builtin(family, g=g, R=1.0)
    ctx = channel_context(pot, ell, tol)
    out = {"exact": count_partial_wave(pot, ell, tol).count}
    ulsk, llsk, _ = second_kind_limits(pot, ell, ctx=ctx)
    out["ULSK"] = _table_quote(ulsk)
    out["LLSK"] = _table_quote(llsk)
    out["NLL3"] = _table_quote(evaluate_nu2_family("NLL3", pot, ell, tol, ctx=ctx))
    out["NLL2l"] = _table_quote(evaluate_nu2_family("NLL2l", pot, ell, tol, ctx=ctx))
    out["NUL2l"] = _table_quote(evaluate_nu2_family("NUL2l", pot, ell, tol, ctx=ctx))
    out["NLL1nl"] = _table_quote(evaluate_nu1_family("NLL1nl", pot, ell, ctx=ctx))
    out["NUL1l"] = _table_quote(evaluate_nu1_family("NUL1l", pot, ell, ctx=ctx))
    for limit_id in ("BSl", "CMS", "Ml", "GGMT"):
        out[limit_id] = _table_quote(
            evaluate_known_limit(limit_id, pot, ell, tol, ctx=ctx)
        )
    return out


def _cell_matches(column: str, computed: int, stored: int, exact: int) -> bool:
    if column == "LLSK":
        # start-point optimization differs between implementations by at
        # most one step; the count must still sit below the exact value
        return abs(computed - stored) <= 1 and computed <= exact
    return computed == stored


def cmd_table(args) -> int:
    tol = _build_tolerances(args)
    reference = _load_reference(args.which)
    family = _TABLE_FAMILY[args.which]

    rows = []
    try:
        for ref in reference:
            computed = compute_table_row(family, float(ref["g"]), ref["ell"], tol)
            mismatches = [
                c for c in _TABLE_COLUMNS
                if not _cell_matches(c, computed[c], ref[c], computed["exact"])
            ]
            rows.append((ref, computed, mismatches))
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["g", "ell", *_TABLE_COLUMNS, "mismatches"])
        for ref, computed, mism in rows:
            writer.writerow(
                [ref["g"], ref["ell"]]
                + [computed[c] for c in _TABLE_COLUMNS]
                + [";".join(mism)]
            )
        _emit(buf.getvalue(), args.output)
    elif args.format == "json":
        lines = []
        for ref, computed, mism in rows:
            lines.append(json.dumps({
                "g": ref["g"], "ell": ref["ell"],
                "computed": {c: computed[c] for c in _TABLE_COLUMNS},
                "stored": {c: ref[c] for c in _TABLE_COLUMNS},
                "mismatches": mism,
            }, sort_keys=True))
        _emit("\n".join(lines) + "\n", args.output)
    else:
        _emit(_render_table_text(args.which, rows), args.output)
    return EXIT_OK


def _render_table_text(which: int, rows) -> str:
    headers = ["g", "ell", *_TABLE_COLUMNS]
    cells = []
    for ref, computed, mism in rows:
        cells.append(
            [str(ref["g"]), str(ref["ell"])]
            + [
                str(computed[c]) + ("*" if c in mism else "")
                for c in _TABLE_COLUMNS
            ]
        )
    widths = [len(h) for h in headers]
    for row in cells:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.rjust(widths[i]) for i, h in enumerate(headers))]
    for row in cells:
        lines.append("  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row)))
    total_mism = 0
    for ref, computed, mism in rows:
        for c in mism:
            total_mism += 1
            lines.append(
                f"* g={ref['g']} ell={ref['ell']} {c}: computed {computed[c]}, "
                f"stored {ref[c]}"
            )
    lines.append(
        f"table {which}: {total_mism} mismatched cell(s); LLSK counts as "
        "matching when within one unit of the stored value and not above "
        "the exact count"
    )
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# sweep


def _parse_g_range(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError(f"range must be lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise _UsageError(f"range must be numeric lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise _UsageError(f"need step > 0 and hi >= lo, got {text!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(n)]


def _rebind_g(pot: Potential, g: float) -> Potential:
    if pot.kind == "expression":
        params = {k: v for k, v in pot.params.items() if k != "text"}
        params["g"] = g
        return make_expression(pot.params["text"], **params)
    params = dict(pot.params)
    if pot.kind == "saturating":
        params.pop("alpha", None)  # derived, not a constructor argument
    params["g"] = g
    return make_builtin(pot.kind, **params)


def _sweep_columns(quantities: Sequence[str], ell: int) -> list[str]:
    cols = ["g"]
    for q in quantities:
        if q == "exact":
            cols.append(f"exact_N{ell}")
        elif q == "L":
            cols.append("L_exact")
        elif q == "N":
            cols.append("N_total")
        else:
            cols.extend([f"{q}_raw", f"{q}_int"])
    return cols


def _sweep_eval(task) -> tuple[float, Optional[list[str]], str]:
    """Worker: one sweep row.  Returns (g, cells or None, error)."""
    spec, g, ell, quantities, tol, eps_scale = task
    try:
        pot = _rebind_g(parse_potential_spec(spec), g)
        ctx = None
        cells: list[str] = [repr(g)]
        for q in quantities:
            if q == "exact":
                cells.append(str(count_partial_wave(pot, ell, tol,
                                                    eps_scale=eps_scale).count))
            elif q == "L":
                cells.append(str(find_L_exact(pot, tol)))
            elif q == "N":
                cells.append(str(total_count(pot, tol).total))
            else:
                if ctx is None and q in CHANNEL_LIMIT_IDS:
                    ctx = channel_context(pot, ell, tol)
                value = _evaluate_any(q, pot, ell, tol, ctx)
                if value.applicable:
                    cells.extend([repr(value.raw), str(value.integer_statement)])
                else:
                    cells.extend(["", ""])
    except NumericalFailure as exc:
        return (g, None, f"numerical failure at g={g}: {exc}")
    except (PotentialError, ValueError) as exc:
        return (g, None, f"invalid request at g={g}: {exc}")
    return (g, cells, "")


def cmd_sweep(args) -> int:
    try:
        gs = _parse_g_range(args.g_range)
        pot = parse_potential_spec(args.potential)
        quantities = _parse_only(args.only) or []
        for q in quantities:
            if q not in ("exact", "L", "N") and q not in CHANNEL_LIMIT_IDS \
                    and q not in TOTAL_LIMIT_IDS:
                raise _UsageError(f"unknown sweep quantity {q!r}")
        _rebind_g(pot, gs[0])  # fail fast on non-sweepable potentials
    except (_UsageError, PotentialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    tol = _build_tolerances(args)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_sweep_columns(quantities, args.ell))

    if quantities:
        tasks = [
            (args.potential, g, args.ell, tuple(quantities), tol, args.eps_scale)
            for g in gs
        ]
        jobs = args.jobs if args.jobs > 0 else min(len(tasks), os.cpu_count() or 1)
        if jobs > 1 and len(tasks) > 1:
            with multiprocessing.Pool(processes=jobs) as pool:
                results = pool.map(_sweep_eval, tasks, chunksize=1)
        else:
            results = [_sweep_eval(t) for t in tasks]
        for g, cells, err in results:
            if cells is None:
                print(err, file=sys.stderr)
                return EXIT_NUMERIC
            writer.writerow(cells)

    _emit(buf.getvalue(), args.output)
    return EXIT_OK


# ----------------------------------------------------------------------
# check


def _check_case(results: list, suite: str, case: str, ok: bool, detail: str) -> None:
    results.append({"suite": suite, "case": case, "ok": bool(ok), "detail": detail})


def _suite_closed_forms(results: list, tol: Tolerances) -> None:
    # a profile whose count has an algebraically known value: depth g,
    # shape exp(-2r) - 2 exp(-r) holds floor(g + 1/2) states at ell = 0
    for g in (2.3, 5.0):
        pot = make_builtin("morse", g=g, R=1.0, alpha=1.0)
        try:
            n = count_partial_wave(pot, 0, tol).count
        except NumericalFailure as exc:
            _check_case(results, "closed_form", f"morse g={g}",
                        False, f"numerical failure: {exc}")
            continue
        want = math.floor(g + 0.5)
        _check_case(results, "closed_form", f"morse g={g}", n == want,
                    f"count {n}, closed form {want}")


def _sandwich_channel(results: list, label: str, pot: Potential, ell: int,
                      tol: Tolerances, suite: str = "sandwich") -> None:
    try:
        exact = count_partial_wave(pot, ell, tol).count
        values = evaluate_channel(pot, ell, tol)
    except NumericalFailure as exc:
        _check_case(results, suite, f"{label} ell={ell}",
                    False, f"numerical failure: {exc}")
        return
    bad = []
    for v in values:
        if not v.applicable:
            continue
        if v.kind == "upper" and exact > v.integer_statement:
            bad.append(f"{v.limit_id} upper {v.integer_statement} < exact {exact}")
        if v.kind == "lower" and exact < v.integer_statement:
            bad.append(f"{v.limit_id} lower {v.integer_statement} > exact {exact}")
    _check_case(results, suite, f"{label} ell={ell}", not bad,
                "; ".join(bad) if bad else f"exact {exact} inside all bounds")


def _sandwich_totals(results: list, label: str, pot: Potential,
                     tol: Tolerances) -> None:
    try:
        L = find_L_exact(pot, tol)
        N = total_count(pot, tol).total
        l_values = l_bounds(pot, tol)
        n_values = total_bounds(pot, tol)
    except NumericalFailure as exc:
        _check_case(results, "sandwich", f"{label} totals",
                    False, f"numerical failure: {exc}")
        return
    bad = []
    for v in l_values:
        if not v.applicable:
            continue
        if v.kind == "upper" and L > v.integer_statement:
            bad.append(f"{v.limit_id} {v.integer_statement} < L {L}")
        if v.kind == "lower" and L < v.integer_statement:
            bad.append(f"{v.limit_id} {v.integer_statement} > L {L}")
    for v in n_values:
        if not v.applicable:
            continue
        if v.kind == "upper" and N > v.integer_statement:
            bad.append(f"{v.limit_id} {v.integer_statement} < N {N}")
        if v.kind == "lower" and N < v.integer_statement:
            bad.append(f"{v.limit_id} {v.integer_statement} > N {N}")
    _check_case(results, "sandwich", f"{label} totals", not bad,
                "; ".join(bad) if bad else f"L {L} and N {N} inside all bounds")


def _suite_sandwich(results: list, tol: Tolerances,
                    grid: Sequence[tuple[str, Potential]]) -> None:
    for label, pot in grid:
        try:
            L = find_L_exact(pot, tol)
        except NumericalFailure as exc:
            _check_case(results, "sandwich", f"{label}",
                        False, f"numerical failure: {exc}")
            continue
        for ell in range(max(L, 0) + 1):
            _sandwich_channel(results, label, pot, ell, tol)
        _sandwich_totals(results, label, pot, tol)


def _suite_saturation(results: list, tol: Tolerances) -> None:
    for ell, delta, n_target in ((0, 0.1, 3), (1, 0.4, 2)):
        pot = make_builtin("saturating", g=25.0, ell_design=ell,
                           delta=delta, n_target=n_target)
        try:
            exact = count_partial_wave(pot, ell, tol).count
            nll4 = evaluate_nu2_family("NLL4", pot, ell, tol)
        except NumericalFailure as exc:
            _check_case(results, "saturation", f"ell={ell} delta={delta}",
                        False, f"numerical failure: {exc}")
            continue
        ok = (exact == n_target and nll4.applicable
              and nll4.integer_statement == n_target)
        _check_case(
            results, "saturation", f"ell={ell} delta={delta}", ok,
            f"count {exact}, lower limit "
            f"{nll4.integer_statement if nll4.applicable else 'NA'}, "
            f"designed {n_target}",
        )


def _suite_scaling(results: list, tol: Tolerances) -> None:
    # counts and dimensionless limit values do not change under a common
    # rescaling of range and depth
    base = make_builtin("exponential", g=8.0, R=1.0)
    try:
        n_ref = count_partial_wave(base, 0, tol).count
        raw_ref = evaluate_known_limit("BSl", base, 0, tol).raw
    except NumericalFailure as exc:
        _check_case(results, "scaling", "reference", False, str(exc))
        return
    for R in (0.5, 2.0, 10.0):
        pot = make_builtin("exponential", g=8.0, R=R)
        try:
            n = count_partial_wave(pot, 0, tol).count
            raw = evaluate_known_limit("BSl", pot, 0, tol).raw
        except NumericalFailure as exc:
            _check_case(results, "scaling", f"R={R}", False, str(exc))
            continue
        ok = n == n_ref and abs(raw - raw_ref) <= 1e-8 * abs(raw_ref)
        _check_case(results, "scaling", f"R={R}", ok,
                    f"count {n} vs {n_ref}, weight {raw!r} vs {raw_ref!r}")


def _suite_tolerance(results: list, tol: Tolerances) -> None:
    pot = make_builtin("yukawa", g=8.0, R=1.0)
    half = tol.halved()
    for ell in (0, 1):
        try:
            a = count_partial_wave(pot, ell, tol).count
            b = count_partial_wave(pot, ell, half).count
            c = count_partial_wave(pot, ell, tol, eps_scale=2.5e-9).count
        except NumericalFailure as exc:
            _check_case(results, "tolerance", f"ell={ell}", False, str(exc))
            continue
        ok = a == b == c
        _check_case(results, "tolerance", f"ell={ell}", ok,
                    f"counts {a}/{b}/{c} (base/halved/smaller origin offset)")


def _random_profile(rng: random.Random) -> str:
    c1 = rng.uniform(4.0, 30.0)
    c2 = rng.uniform(0.6, 1.8)
    form = rng.randrange(4)
    if form == 0:
        return f"-{c1:.6f}*exp(-r/{c2:.6f})"
    if form == 1:
        return f"-{c1:.6f}*exp(-r/{c2:.6f})/r"
    if form == 2:
        return f"-{c1:.6f}*r^2*exp(-r/{c2:.6f})"
    return f"-{c1:.6f}*exp(-(r/{c2:.6f})^2)"


def _suite_random(results: list, tol: Tolerances, seed: int) -> None:
    rng = random.Random(seed)
    for i in range(3):
        text = _random_profile(rng)
        pot = make_expression(text)
        try:
            L = find_L_exact(pot, tol)
        except NumericalFailure as exc:
            _check_case(results, "random", f"#{i} {text}", False, str(exc))
            continue
        for ell in range(min(max(L, 0), 2) + 1):
            _sandwich_channel(results, f"#{i} {text}", pot, ell, tol,
                              suite="random")


def cmd_check(args) -> int:
    if args.self_test:
        # deliberately broken accuracy: the suites must catch it
        tol = Tolerances(quad_rel=1e-1, quad_abs=1e-1, ode_rel=1e-1,
                         tail_tol=1e-1)
    else:
        tol = _build_tolerances(args)

    grid = [
        ("exponential g=8", make_builtin("exponential", g=8.0, R=1.0)),
        ("yukawa g=8", make_builtin("yukawa", g=8.0, R=1.0)),
        ("morse g=5", make_builtin("morse", g=5.0, R=1.0, alpha=1.0)),
        ("square_well g=10", make_builtin("square_well", g=10.0, R=1.0)),
    ]

    results: list[dict] = []
    _suite_closed_forms(results, tol)
    _suite_sandwich(results, tol, grid)
    _suite_saturation(results, tol)
    _suite_scaling(results, tol)
    _suite_tolerance(results, tol)
    if args.seed is not None:
        _suite_random(results, tol, args.seed)

    failures = [r for r in results if not r["ok"]]
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["suite", "case", "ok", "detail"])
        for r in results:
            writer.writerow([r["suite"], r["case"], str(r["ok"]).lower(),
                             r["detail"]])
        _emit(buf.getvalue(), args.output)
    else:
        lines = [json.dumps(r, sort_keys=True) for r in results]
        _emit("\n".join(lines) + "\n", args.output)
    print(
        f"check: {len(results)} case(s), {len(failures)} failure(s)"
        + (" [self-test: failures expected]" if args.self_test else ""),
        file=sys.stderr,
    )
    return EXIT_VIOLATION if failures else EXIT_OK


# ----------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="nbound",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p_count = sub.add_parser(
        "count", help="exact bound-state count in one channel",
        description="Exact count plus any requested limits for one channel.",
    )
    p_count.add_argument("--potential", required=True,
                         help="spec, e.g. morse:g=5,R=1,alpha=1 or "
                              "expr:'-g^2*exp(-r)':g=8")
    p_count.add_argument("--ell", type=int, default=0,
                         help="channel (default 0)")
    p_count.add_argument("--only", default=None,
                         help="comma-separated limit ids to evaluate too")
    p_count.add_argument("--format", choices=("csv", "json"), default=None,
                         help="machine format (default: plain text)")
    p_count.add_argument("--output", default=None, help="write here, not stdout")
    _add_tolerance_flags(p_count)
    p_count.set_defaults(func=cmd_count)

    p_table = sub.add_parser(
        "table", help="recompute a stored reference table",
        description="Recompute reference table 1 (exponential) or 2 "
                    "(Yukawa) and mark deviations from the stored integers.",
    )
    p_table.add_argument("which", type=int, choices=(1, 2))
    p_table.add_argument("--format", choices=("csv", "json"), default=None)
    p_table.add_argument("--output", default=None)
    _add_tolerance_flags(p_table)
    p_table.set_defaults(func=cmd_table)

    p_sweep = sub.add_parser(
        "sweep", help="CSV of quantities along a coupling range",
        description="One CSV row per coupling value.  Quantities: 'exact' "
                    "(count at --ell), 'L' (largest binding channel), 'N' "
                    "(total count), or any limit id (two columns, raw and "
                    "integer; empty cells when inapplicable).",
    )
    p_sweep.add_argument("--potential", required=True)
    p_sweep.add_argument("--g-range", required=True, metavar="LO:HI:STEP")
    p_sweep.add_argument("--ell", type=int, default=0)
    p_sweep.add_argument("--only", default=None,
                         help="comma-separated quantities (empty: header only)")
    p_sweep.add_argument("--output", default=None)
    p_sweep.add_argument("--jobs", type=int, default=0,
                         help="worker processes (default: one per core)")
    _add_tolerance_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser(
        "check", help="run the invariant suites",
        description="Closed forms, bound sandwiches, saturation, scaling, "
                    "and tolerance invariance over the builtin grid; JSON "
                    "line per case, exit 4 on any failure.",
    )
    p_check.add_argument("--seed", type=int, default=None,
                         help="also sandwich seeded random profiles")
    p_check.add_argument("--self-test", action="store_true",
                         help="inject a gross-accuracy fault; exit 4 proves "
                              "the suites catch it")
    p_check.add_argument("--format", choices=("csv", "json"), default=None)
    p_check.add_argument("--output", default=None)
    _add_tolerance_flags(p_check)
    p_check.set_defaults(func=cmd_check)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
