"""Command-line entry point producing figure data as CSV and single results as JSON.

Exit codes: 0 on success, 1 on a computation error (a JSON error object is
written to stderr), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import fisher, povm as povm_mod, probes, search
from .fock import ProbeState, state_to_dict
from .mc import crb_experiment, scaled_total_variance

SCHEMA_VERSION = 1


class UsageError(ValueError):
    pass


def parse_range(text: str) -> list[int]:
    """``"4"`` -> [4]; ``"1:16"`` -> [1..16] inclusive; ``"1,3,5"`` -> [1, 3, 5]."""
    try:
        if ":" in text:
            lo, hi = (int(x) for x in text.split(":"))
            values = list(range(lo, hi + 1))
        else:
            values = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad integer range {text!r}") from exc
    if not values:
        raise UsageError(f"empty range {text!r}")
    return values


def _parse_kv(body: str) -> dict[str, str]:
    out = {}
    for item in filter(None, body.split(",")):
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_probe(desc: str) -> ProbeState:
    """Build a probe from ``optimal:d=..,N=..[,alpha=..]``, ``w:..``, ``noon:N=..``, ``hb:n=..,d=..`` or ``@state.json``."""
    if desc.startswith("@"):
        return ProbeState.from_json(Path(desc[1:]).read_text())
    kind, _, body = desc.partition(":")
    kv = _parse_kv(body)
    try:
        if kind == "optimal":
            alpha = float(kv["alpha"]) if "alpha" in kv else None
            return probes.make_optimal_state(int(kv["d"]), int(kv["N"]), alpha)
        if kind == "w":
            return probes.make_balanced_state(int(kv["d"]), int(kv["N"]))
        if kind == "noon":
            return probes.make_noon_state(int(kv["N"]), int(kv.get("mode", 1)), int(kv.get("d", 1)))
        if kind == "hb":
            return probes.make_hb_state(int(kv["n"]), int(kv["d"]))
    except KeyError as exc:
        raise UsageError(f"probe {desc!r} is missing {exc.args[0]!r}") from exc
    raise UsageError(f"unknown probe family {kind!r}")


def parse_povm(desc: str, psi: ProbeState) -> povm_mod.PovmSet:
    """``upsilon[:d=..]``, ``optimal``, ``pnrd:qft``, ``pnrd:identity`` or ``identity`` for the probe's sector."""
    kind, _, body = desc.partition(":")
    d, n = psi.d, psi.n_photons
    if kind == "upsilon":
        kv = _parse_kv(body)
        if int(kv.get("d", d)) != d:
            raise UsageError(f"POVM {desc!r} does not match probe with d={d}")
        return povm_mod.upsilon_projectors(d, n)
    if kind == "optimal":
        return povm_mod.optimal_projectors_for(psi, np.zeros(d))
    if kind == "identity":
        return povm_mod.identity_povm(d, n)
    if kind == "pnrd":
        if body == "qft":
            return povm_mod.pnrd_measurement(probes.MultiportUnitary.qft(d + 1), n)
        if body == "identity":
            return povm_mod.pnrd_measurement(probes.MultiportUnitary.identity(d + 1), n)
    raise UsageError(f"unknown POVM descriptor {desc!r}")


def parse_floats(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad list of numbers {text!r}") from exc


def _pool_map(func, items, jobs: int):
    if jobs <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


# --- row builders (module-level so worker processes can pickle them) ---


def bounds_row(N: int, d: int) -> dict:
    return {
        "d": d,
        "var_psi_s": fisher.psi_s_bound(d, N),
        "var_noon_exact": fisher.noon_individual_bound(N, d, exact=True),
        "var_noon_approx": fisher.noon_individual_bound(N, d, exact=False),
        "var_classical": fisher.classical_bound(N, d),
    }


def hb_sweep_row(args: tuple[int, int]) -> dict:
    d, n = args
    N = n * (d + 1)
    hb = probes.make_hb_state(n, d)
    return {
        "n": n,
        "N": N,
        "var_QCRB_HB": fisher.trace_inverse(fisher.qfi_matrix(hb)),
        "var_noon_equiv": fisher.noon_individual_bound(N, d, exact=True),
        "var_psi_s_equiv": fisher.psi_s_bound(d, N),
    }


def hb_cfi_row(args: tuple[int, int, int, int]) -> dict:
    d, grid, starts, seed = args
    N = d + 1
    hb = probes.make_hb_state(1, d)
    meas = povm_mod.pnrd_measurement(probes.MultiportUnitary.qft(d + 1), N)
    theta, var = search.optimize_cfi_phase(hb, meas, starts=starts, grid=grid, seed=seed)
    row = {
        "d": d,
        "N": N,
        "var_CFI_pnrd": var,
        "var_QCRB_HB": fisher.trace_inverse(fisher.qfi_matrix(hb)),
        "var_noon_equiv": fisher.noon_individual_bound(N, d, exact=True) if N >= d else float("nan"),
        "var_psi_s_equiv": fisher.psi_s_bound(d, N),
    }
    row["theta_opt"] = " ".join(f"{t:.10g}" for t in theta)
    return row


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_rows(rows: list[dict], schema: str, args) -> None:
    if args.format == "json":
        _emit_json({"schema": f"{schema}/{SCHEMA_VERSION}", "rows": rows}, args)
        return
    buf = io.StringIO()
    buf.write(f"# schema: {schema}/{SCHEMA_VERSION}\n")
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    _write(buf.getvalue(), args.out)


def _emit_json(obj, args) -> None:
    _write(json.dumps(obj, indent=2, default=_json_default) + "\n", args.out)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return str(obj)


def cmd_bounds(args) -> None:
    rows = [bounds_row(args.N, d) for d in parse_range(args.d)]
    _emit_rows(sorted(rows, key=lambda r: r["d"]), "bounds", args)


def cmd_hb_sweep(args) -> None:
    (d,) = parse_range(args.d)[:1]
    items = [(d, n) for n in parse_range(args.n)]
    rows = _pool_map(hb_sweep_row, items, args.jobs)
    _emit_rows(sorted(rows, key=lambda r: r["n"]), "hb_sweep", args)


def cmd_hb_cfi(args) -> None:
    items = [(d, args.grid, args.restarts, args.seed) for d in parse_range(args.d)]
    rows = _pool_map(hb_cfi_row, items, args.jobs)
    _emit_rows(sorted(rows, key=lambda r: r["d"]), "hb_cfi", args)


def cmd_qfi(args) -> None:
    psi = parse_probe(args.probe)
    F = fisher.qfi_matrix(psi)
    try:
        report = fisher.qcrb_total_variance(F, psi)
        bound = {"total_variance": report.total_variance, "saturable": report.saturable, "M": report.M}
    except fisher.SingularFisherError as exc:
        bound = {"error": str(exc), "null_direction": exc.null_direction}
    _emit_json({"d": psi.d, "N": psi.n_photons, "qfi": F, "bound": bound}, args)


def cmd_state(args) -> None:
    _emit_json(state_to_dict(parse_probe(args.probe)), args)


def cmd_povm_check(args) -> None:
    probe_desc = args.probe or f"w:d={args.d},N={args.N}"
    psi = parse_probe(probe_desc)
    meas = parse_povm(args.povm, psi)
    theta_s = np.zeros(psi.d)
    cfi = fisher.cfi_matrix(psi, theta_s, meas)
    qfi = fisher.qfi_matrix(psi)
    extrapolated = fisher.cfi_limit_extrapolated(psi, theta_s, meas)
    diff = float(np.max(np.abs(cfi - qfi)))
    passed = diff < 1e-6
    _emit_json(
        {
            "probe": probe_desc,
            "povm": meas.name,
            "cfi": cfi,
            "qfi": qfi,
            "max_abs_diff": diff,
            "max_abs_diff_extrapolated": float(np.max(np.abs(extrapolated - qfi))),
            "pass": passed,
            "summary": f"CFI=QFI at theta_s: {'PASS' if passed else 'FAIL'}, max abs diff {diff:.3g}",
        },
        args,
    )


def cmd_search(args) -> None:
    result = search.search_optimal_probe(args.d, args.N, restarts=args.restarts, seed=args.seed)
    _emit_json(
        {
            "d": args.d,
            "N": args.N,
            "state": state_to_dict(result.state),
            "total_variance": result.total_variance,
            "reference_variance": fisher.psi_s_bound(args.d, args.N),
            "converged": result.converged,
            "matches_optimal_form": result.matches_optimal_form,
            "max_form_deviation": result.max_form_deviation,
            "summary": f"matches optimal single-mode superposition: {'yes' if result.matches_optimal_form else 'no'}",
        },
        args,
    )


def cmd_mle(args) -> None:
    psi = parse_probe(args.probe)
    meas = parse_povm(args.povm, psi)
    theta = parse_floats(args.theta)
    ladder = parse_range(args.trials)
    runs = crb_experiment(psi, meas, theta, ladder, args.replications, seed=args.seed)
    if args.summary:
        rows = []
        cfi_bound = fisher.trace_inverse(fisher.cfi_matrix(psi, theta, meas))
        qfi_bound = fisher.trace_inverse(fisher.qfi_matrix(psi))
        for M in ladder:
            rows.append(
                {
                    "M": M,
                    "scaled_total_variance": scaled_total_variance(runs, M),
                    "cfi_bound": cfi_bound,
                    "qfi_bound": qfi_bound,
                }
            )
        _emit_rows(rows, "mle_summary", args)
        return
    rows = []
    for run in runs:
        row = {"M": run.trials, "replication": run.replication}
        row.update({f"theta_hat_{i + 1}": float(t) for i, t in enumerate(run.theta_hat)})
        row["sq_error"] = run.sq_error
        rows.append(row)
    _emit_rows(rows, "mle", args)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write to this path instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    parser = argparse.ArgumentParser(prog="multiphase", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", parents=[common], help="analytic total-variance curves")
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--d", default="1:16")
    p.set_defaults(func=cmd_bounds, default_format="csv")

    p = sub.add_parser("hb-sweep", parents=[common], help="QCRB of HB(n, d) against n")
    p.add_argument("--d", default="4")
    p.add_argument("--n", default="1:3")
    p.set_defaults(func=cmd_hb_sweep, default_format="csv")

    p = sub.add_parser("hb-cfi", parents=[common], help="optimized PNRD variance of HB(1, d)")
    p.add_argument("--d", default="1:3")
    p.add_argument("--grid", type=int, default=8)
    p.add_argument("--restarts", type=int, default=4)
    p.set_defaults(func=cmd_hb_cfi, default_format="csv")

    p = sub.add_parser("qfi", parents=[common], help="QFI matrix and bound of a probe")
    p.add_argument("--probe", required=True)
    p.set_defaults(func=cmd_qfi, default_format="json")

    p = sub.add_parser("state", parents=[common], help="serialize a probe state")
    p.add_argument("--probe", required=True)
    p.set_defaults(func=cmd_state, default_format="json")

    p = sub.add_parser("povm-check", parents=[common], help="check CFI = QFI at the saturation point")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--probe")
    p.add_argument("--povm", default="upsilon")
    p.set_defaults(func=cmd_povm_check, default_format="json")

    p = sub.add_parser("search", parents=[common], help="numerical probe-state optimization")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--restarts", type=int, default=16)
    p.set_defaults(func=cmd_search, default_format="json")

    p = sub.add_parser("mle", parents=[common], help="Monte-Carlo maximum-likelihood runs")
    p.add_argument("--probe", default="w:d=2,N=2")
    p.add_argument("--povm", default="upsilon")
    p.add_argument("--theta", default="0.1,0.2")
    p.add_argument("--trials", default="1000,10000,100000")
    p.add_argument("--replications", type=int, default=200)
    p.add_argument("--summary", action="store_true", help="one row per M instead of per replication")
    p.set_defaults(func=cmd_mle, default_format="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except Exception as exc:  # noqa: BLE001 - every failure is reported as JSON
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
