"""Command-line front end.

Subcommands cover the whole workflow: validate a model file, solve or
check Gramian families, reduce, simulate, compare original vs reduced
outputs, run the bundled four-mode demonstration end to end, and emit
random test systems. Exit codes are stable for scripting: 0 success,
1 validation/verdict failure, 2 I/O or format error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import fourmode
from .balance import balance, truncate
from .gramian import (
    GramianFileError,
    Infeasible,
    check_gramians,
    export_gramians,
    import_gramians,
    solve_gramians,
    SolveOptions,
)
from .model import TimedEventSequence, validate
from .modelio import ModelFileError, load_model, load_schedule, save_model, schedule_from_dict
from .randgen import random_system
from .signals import make_signal
from .simulate import (
    SimConfig,
    l2_norm_signal,
    l2_output_difference,
    simulate,
    simulate_exact,
    write_comparison_csv,
    write_trajectory_csv,
)

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_IO = 2


def _load_input_spec(spec: str):
    """Input signal from inline JSON or from ``@file.json``."""
    if spec.startswith("@"):
        with open(spec[1:], "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = json.loads(spec)
    return make_signal(doc)


def _load_schedule_spec(spec: str) -> TimedEventSequence:
    if spec.startswith("@"):
        return load_schedule(spec[1:])
    return schedule_from_dict(json.loads(spec))


def _parse_orders(text: str) -> dict[str, int]:
    """Orders as ``q1=2,q2=1`` or as a bare comma list matched to mode order."""
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" in part:
            q, r = part.split("=", 1)
            out[q.strip()] = int(r)
        else:
            out[f"__pos{len(out)}"] = int(part)
    return out


def _positional_orders(orders: dict[str, int], mode_ids) -> dict[str, int]:
    if not any(k.startswith("__pos") for k in orders):
        return orders
    values = [orders[f"__pos{i}"] for i in range(len(orders))]
    if len(values) != len(mode_ids):
        raise ValueError(
            f"{len(values)} order value(s) for {len(mode_ids)} modes; use q=r pairs"
        )
    return dict(zip(mode_ids, values))


def cmd_validate(args) -> int:
    model = load_model(args.model)
    rep = validate(model)
    print(rep)
    return EXIT_OK if rep.ok else EXIT_VERDICT


def cmd_solve(args) -> int:
    model = load_model(args.model)
    try:
        fam = solve_gramians(
            model, args.kind, epsilon=args.epsilon,
            options=SolveOptions(max_iters=args.max_iters),
        )
    except Infeasible as exc:
        print(f"INFEASIBLE: {exc}")
        if exc.report is not None:
            print(exc.report)
        return EXIT_VERDICT
    export_gramians(fam, args.out)
    rep = check_gramians(model, fam, strict_margin=args.epsilon)
    print(f"wrote {args.out}")
    print(rep)
    return EXIT_OK


def cmd_check(args) -> int:
    model = load_model(args.model)
    fam = import_gramians(args.gramians)
    rep = check_gramians(model, fam, strict_margin=args.strict_margin, slack=args.slack)
    print(rep)
    return EXIT_OK if rep.ok else EXIT_VERDICT


def cmd_reduce(args) -> int:
    model = load_model(args.model)
    rep = validate(model)
    if not rep.ok:
        print(rep)
        return EXIT_VERDICT
    try:
        if args.obs:
            obs = import_gramians(args.obs)
            obs_rep = check_gramians(model, obs, slack=args.slack)
            if not obs_rep.ok:
                print(obs_rep)
                return EXIT_VERDICT
        else:
            obs = solve_gramians(model, "observability", epsilon=args.epsilon)
        if args.reach:
            reach = import_gramians(args.reach)
            reach_rep = check_gramians(model, reach, slack=args.slack)
            if not reach_rep.ok:
                print(reach_rep)
                return EXIT_VERDICT
        else:
            reach = solve_gramians(model, "reachability", epsilon=args.epsilon)
    except Infeasible as exc:
        print(f"INFEASIBLE: {exc}")
        return EXIT_VERDICT

    bal = balance(model, reach, obs, slack=args.slack)
    orders = _positional_orders(_parse_orders(args.orders), list(model.modes))
    reduced = truncate(bal, orders)
    save_model(reduced.system, args.out, extra={"provenance": reduced.provenance})
    print(f"wrote {args.out}")
    print(f"orders: {reduced.orders}")
    for q, s in reduced.sigma.items():
        print(f"  sigma[{q}] = {np.array2string(s, precision=4)}  kept {reduced.orders[q]}")
    print(f"error bound factor: {reduced.bound:.6g} (x ||u||_L2)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    u = _load_input_spec(args.input)
    w = _load_schedule_spec(args.schedule)
    cfg = SimConfig(max_step=args.step)
    runner = simulate_exact if args.exact else simulate
    traj = runner(model, u, w, cfg)
    write_trajectory_csv(traj, args.out)
    print(f"wrote {args.out} ({len(traj.grid_times())} samples, "
          f"{len(traj.events)} events)")
    return EXIT_OK


def cmd_compare(args) -> int:
    model = load_model(args.model)
    reduced = load_model(args.reduced)
    with open(args.reduced, "r", encoding="utf-8") as fh:
        bound = json.load(fh).get("provenance", {}).get("bound")
    u = _load_input_spec(args.input)
    w = _load_schedule_spec(args.schedule)
    cfg = SimConfig(max_step=args.step)

    traj = simulate(model, u, w, cfg)
    traj_hat = simulate(reduced, u, w, cfg)
    if traj.grid_discrete_outputs() != traj_hat.grid_discrete_outputs():
        print("FAIL: discrete outputs differ")
        return EXIT_VERDICT

    times = traj.grid_times()
    write_comparison_csv(times, traj.grid_outputs(), traj_hat.grid_outputs(), args.out)
    err = l2_output_difference(traj, traj_hat)
    u_l2 = l2_norm_signal(u, w.horizon, max_step=args.step)
    print(f"wrote {args.out}")
    print(f"||y - y_hat||_L2 = {err.value:.6g}  (quadrature est. {err.error_estimate:.1e})")
    print(f"||u||_L2         = {u_l2.value:.6g}")
    if bound is not None:
        budget = bound * u_l2.value + 1e-3
        ok = err.value <= budget
        print(f"bound check: {err.value:.6g} <= {bound:.6g} * {u_l2.value:.6g} + 1e-3 "
              f"= {budget:.6g}  -> {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_VERDICT
    print("bound check: skipped (no provenance bound in reduced model file)")
    return EXIT_OK


def cmd_example(args) -> int:
    """Run the bundled four-mode demonstration end to end."""
    checks: list[tuple[str, bool, str]] = []

    def record(name: str, ok: bool, detail: str):
        checks.append((name, ok, detail))
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")

    model = fourmode.four_mode_system()
    obs = fourmode.reference_observability()
    reach = fourmode.reference_reachability()
    rep = validate(model)
    record("model validates", rep.ok, f"{len(rep.errors)} error(s)")

    obs_rep = check_gramians(model, obs, slack=1e-6)
    reach_rep = check_gramians(model, reach, slack=1e-6)
    record(
        "reference certificates verify",
        obs_rep.ok and reach_rep.ok,
        f"worst residuals {obs_rep.worst().lambda_max:+.3e} / {reach_rep.worst().lambda_max:+.3e}",
    )

    bal = balance(model, reach, obs, slack=1e-6)
    sig_ref = fourmode.reference_sigma()
    dev = max(
        float(np.max(np.abs(bal.sigma[q] - sig_ref[q]) / sig_ref[q])) for q in sig_ref
    )
    record("balanced values match references", dev <= 5e-3, f"max rel dev {dev:.2e}")

    orders = _positional_orders(_parse_orders(args.orders), list(model.modes))
    reduced = truncate(bal, orders)
    bound = reduced.bound
    ref_bound = 2.0 * sum(float(sig_ref[q][orders.get(q, len(sig_ref[q])):].sum()) for q in sig_ref)
    bound_ok = abs(bound - ref_bound) <= 5e-3 * max(ref_bound, 1.0)
    record("error bound factor", bound_ok, f"2*sum(dropped sigma) = {bound:.6g}")

    u = fourmode.reference_input()
    w = fourmode.reference_schedule()
    cfg = SimConfig(max_step=args.step)
    traj = simulate(model, u, w, cfg)
    traj_hat = simulate(reduced.system, u, w, cfg)
    same_o = traj.grid_discrete_outputs() == traj_hat.grid_discrete_outputs()
    record("discrete outputs preserved", same_o, "o(t) == o_hat(t) at every sample")

    err = l2_output_difference(traj, traj_hat)
    u_l2 = l2_norm_signal(u, w.horizon, max_step=args.step)
    budget = bound * u_l2.value + 1e-3
    record(
        "output error within bound",
        err.value <= budget,
        f"{err.value:.6g} <= {bound:.6g} * {u_l2.value:.6g} + 1e-3",
    )

    if args.outdir:
        import os

        os.makedirs(args.outdir, exist_ok=True)
        save_model(model, os.path.join(args.outdir, "model.json"))
        export_gramians(obs, os.path.join(args.outdir, "observability.json"))
        export_gramians(reach, os.path.join(args.outdir, "reachability.json"))
        save_model(
            reduced.system,
            os.path.join(args.outdir, "reduced.json"),
            extra={"provenance": reduced.provenance},
        )
        write_trajectory_csv(traj, os.path.join(args.outdir, "trajectory.csv"))
        write_comparison_csv(
            traj.grid_times(), traj.grid_outputs(), traj_hat.grid_outputs(),
            os.path.join(args.outdir, "comparison.csv"),
        )
        print(f"artifacts written to {args.outdir}/")

    ok = all(c[1] for c in checks)
    print(f"{sum(c[1] for c in checks)}/{len(checks)} checks passed")
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_random_model(args) -> int:
    rng = np.random.default_rng(args.seed)
    model = random_system(rng, n_modes=args.modes, max_dim=args.max_dim)
    save_model(model, args.out)
    print(f"wrote {args.out} ({args.modes} modes, seed {args.seed})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hybridbt",
        description="Balanced truncation for externally switched linear hybrid systems",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file's structural invariants")
    p.add_argument("model")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("solve", help="solve the Gramian LMIs for a model")
    p.add_argument("model")
    p.add_argument("--kind", choices=("observability", "reachability"), required=True)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("check", help="verify a Gramian file against a model")
    p.add_argument("model")
    p.add_argument("gramians")
    p.add_argument("--strict-margin", type=float, default=None)
    p.add_argument("--slack", type=float, default=1e-8)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("reduce", help="balance and truncate a model")
    p.add_argument("model")
    p.add_argument("--orders", required=True, help="q1=2,q2=1 or a bare list 2,1,...")
    p.add_argument("--obs", help="observability Gramian file (otherwise solved)")
    p.add_argument("--reach", help="reachability Gramian file (otherwise solved)")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--slack", type=float, default=1e-8)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_reduce)

    p = sub.add_parser("simulate", help="simulate a model and write a trajectory CSV")
    p.add_argument("model")
    p.add_argument("--input", required=True, help="signal JSON (inline or @file)")
    p.add_argument("--schedule", required=True, help="schedule JSON (inline or @file)")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--exact", action="store_true",
                   help="use matrix-exponential propagation (piecewise-constant input only)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="simulate original and reduced, write y/y_hat CSV")
    p.add_argument("model")
    p.add_argument("reduced")
    p.add_argument("--input", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("example", help="run the bundled four-mode demonstration")
    p.add_argument("--orders", default="2,2,2,2")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--outdir")
    p.set_defaults(fn=cmd_example)

    p = sub.add_parser("random-model", help="emit a random feasible test model")
    p.add_argument("--seed", type=int, default=0, help="generator seed (reproducible output)")
    p.add_argument("--modes", type=int, default=3)
    p.add_argument("--max-dim", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_random_model)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ModelFileError, GramianFileError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
