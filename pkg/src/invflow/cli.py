"""Command-line entry point: ``invflow <command> [options]``.

Exit codes: 0 success (or Converged), 2 validation error, 3 MaxTimeReached,
4 StepFailure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import io
from .errors import (
    InvflowError,
    LineSearchFailure,
    MaxIterations,
    NotInOmega,
    StepFailure,
    SubsetBudgetExceeded,
    ValidationError,
)
from .flow import FlowConfig, newton_minimize, run_flow
from .obstruction import audit_constant_curvature_candidate, audit_curvature_vector
from .variational import hessian, spectral_report

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MAX_TIME = 3
EXIT_STEP_FAILURE = 4

_STATUS_EXIT = {
    "Converged": EXIT_OK,
    "MaxTimeReached": EXIT_MAX_TIME,
    "StepFailure": EXIT_STEP_FAILURE,
}


def _emit(payload: dict, out: str | None) -> None:
    text = io.dump_json(payload, Path(out) if out else None)
    if not out:
        print(text)


def _instance(args, radii_arg: str | None = None) -> io.ProblemInstance:
    return io.ProblemInstance.load(
        args.mesh, args.inv_dist, radii_arg or args.radii, args.alpha
    )


def cmd_curvature(args) -> int:
    inst = _instance(args)
    report = geo.curvature_report(inst.surface, inst.inv_dist, inst.radii, inst.alpha)
    payload = {**io.header(inst.surface), "provenance": inst.provenance}
    payload["report"] = report.to_dict()
    _emit(payload, args.out)
    return EXIT_OK


def initial_log_radii(radii: np.ndarray, perturb: float, seed: int, unit_product: bool):
    """ln(radii), optionally plus a seeded zero-mean perturbation with sup norm ``perturb``."""
    u0 = np.log(radii)
    if perturb > 0:
        rng = np.random.default_rng(seed)
        p = rng.uniform(-1.0, 1.0, size=u0.shape)
        p -= p.mean()
        p *= perturb / np.max(np.abs(p))
        u0 = u0 + p
    if unit_product:
        u0 = u0 - u0.mean()
    return u0


def cmd_flow(args) -> int:
    inst = _instance(args)
    s = inst.surface
    u0 = initial_log_radii(inst.radii, args.perturb, args.seed, args.unit_product)
    payload = {
        **io.header(s),
        "provenance": {**inst.provenance, "seed": args.seed, "perturb": args.perturb},
        "method": args.method,
        "alpha": inst.alpha,
    }
    if args.method == "newton":
        try:
            res = newton_minimize(s, inst.inv_dist, u0, inst.alpha, tolerance=args.tol)
            status, u = res.status, res.u
        except MaxIterations as exc:
            print(f"newton: {exc}", file=sys.stderr)
            return EXIT_MAX_TIME
        except LineSearchFailure as exc:
            print(f"newton: {exc}", file=sys.stderr)
            return EXIT_STEP_FAILURE
        payload.update(
            iterations=res.iterations,
            gradient_norms=res.gradient_norms,
            step_kinds=res.step_kinds,
            notes=res.notes,
        )
        for k, g in enumerate(res.gradient_norms):
            print(f"newton iteration {k}: |grad|_inf = {g:.3e}", file=sys.stderr)
    else:
        config = FlowConfig(
            alpha=inst.alpha,
            step_size=args.dt,
            max_time=args.max_time,
            residual_tolerance=args.tol,
            normalize_every_step=args.normalize,
            method=args.method,
            keep_snapshots=bool(args.snapshots_out),
        )
        try:
            result = run_flow(s, inst.inv_dist, u0, config)
        except StepFailure as exc:
            print(f"flow: {exc}", file=sys.stderr)
            result = getattr(exc, "result", None)
            if result is not None and args.trace_out:
                io.write_trace_csv(result.trace, Path(args.trace_out), s)
            return EXIT_STEP_FAILURE
        status, u = result.status, result.u
        tr = result.trace
        payload.update(
            steps=tr.steps,
            final_time=tr.times[-1],
            halvings=tr.halvings,
            max_speed=tr.max_speed,
            speed_bound=tr.speed_bound,
            crossings=[list(c) for c in tr.crossings],
        )
        if args.trace_out:
            io.write_trace_csv(tr, Path(args.trace_out), s)
        if args.snapshots_out:
            io.write_snapshots(tr, Path(args.snapshots_out))

    residual = geo.extended_curvature(s, inst.inv_dist, np.exp(u)) - geo.target_curvature(
        s, np.exp(u), inst.alpha
    )
    payload.update(
        status=status,
        residual_inf=float(np.max(np.abs(residual))),
        log_radii=u.tolist(),
        radii=np.exp(u).tolist(),
    )
    if args.final_out:
        final = {**io.header(s), "radii": np.exp(u).tolist(), "log_radii": u.tolist()}
        io.dump_json(final, Path(args.final_out))
    _emit(payload, args.out)
    return _STATUS_EXIT[status]


def cmd_audit(args) -> int:
    if args.curvature_from_radii is None and args.curvature is None:
        raise ValidationError("audit needs --curvature-from-radii or --curvature")
    inst = _instance(args, radii_arg=args.curvature_from_radii or "ones")
    kw = dict(
        mode="sampled" if args.sampled else "exhaustive",
        samples=args.sampled or 0,
        tolerance=args.tol,
        seed=args.seed,
        keep_rows=args.full_table,
    )
    if args.curvature is not None:
        x = io.read_array(args.curvature, inst.surface.vertex_count, "curvatures")
        report = audit_curvature_vector(inst.surface, inst.inv_dist, x, **kw)
    else:
        report = audit_constant_curvature_candidate(
            inst.surface, inst.inv_dist, inst.radii, inst.alpha, **kw
        )
    print(report.summary(), file=sys.stderr)
    payload = {**io.header(inst.surface), "provenance": inst.provenance}
    payload["report"] = report.to_dict(full_table=args.full_table)
    _emit(payload, args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    inst = _instance(args)
    rep = spectral_report(inst.surface, inst.inv_dist, inst.radii, inst.alpha)
    verdict = "yes" if rep.stable else "no"
    print(
        f"lambda_1 > alpha*s_alpha: {verdict} "
        f"(lambda_1={rep.lambda_1:.6g}, alpha*s_alpha={inst.alpha * rep.s_alpha:.6g}, "
        f"margin={rep.stability_margin:.6g})",
        file=sys.stderr,
    )
    payload = {**io.header(inst.surface), "provenance": inst.provenance}
    payload["report"] = {**rep.to_dict(), "verdict": verdict}
    if args.hessian:
        H = hessian(inst.surface, inst.inv_dist, np.log(inst.radii), inst.alpha)
        payload["hessian"] = H.tolist()
    _emit(payload, args.out)
    return EXIT_OK


def _sweep_one(job):
    mesh, inv_dist, radii, alpha, dt, max_time, tol, method = job
    inst = io.ProblemInstance.load(mesh, inv_dist, radii, alpha)
    config = FlowConfig(alpha=alpha, step_size=dt, max_time=max_time,
                        residual_tolerance=tol, method=method)
    try:
        res = run_flow(inst.surface, inst.inv_dist, np.log(inst.radii), config)
    except StepFailure:
        return {"alpha": alpha, "status": "StepFailure"}
    return {
        "alpha": alpha,
        "status": res.status,
        "steps": res.trace.steps,
        "final_residual": res.trace.residuals[-1],
        "radii": res.radii.tolist(),
    }


def cmd_sweep(args) -> int:
    alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    io.ProblemInstance.load(args.mesh, args.inv_dist, args.radii, 0.0)  # validate once
    jobs = [
        (args.mesh, args.inv_dist, args.radii, a, args.dt, args.max_time, args.tol,
         args.method)
        for a in alphas
    ]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            runs = list(pool.map(_sweep_one, jobs))
    else:
        runs = [_sweep_one(j) for j in jobs]
    surface = io.read_mesh(args.mesh)
    _emit({**io.header(surface), "runs": runs}, args.out)
    return max(_STATUS_EXIT[r["status"]] for r in runs)


def _common(p: argparse.ArgumentParser, radii: bool = True) -> None:
    p.add_argument("--mesh", required=True, help="OFF/JSON file or catalogue name")
    p.add_argument("--inv-dist", default="0",
                   help="scalar, or JSON/CSV file in sorted-edge order")
    if radii:
        p.add_argument("--radii", default="ones",
                       help="'ones', scalar, or JSON/CSV file in vertex order")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--out", help="write JSON here instead of stdout")


def _flow_options(p: argparse.ArgumentParser, methods=("rk4", "euler", "newton")) -> None:
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--max-time", type=float, default=500.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--method", choices=methods, default="rk4")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invflow",
        description="Inversive distance circle packings: curvature, flows, audits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", help="extended curvature report")
    _common(p)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("flow", help="run the extended alpha-flow or Newton")
    _common(p)
    _flow_options(p)
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True,
                   help="re-project onto sum(u) = sum(u0) after every step")
    p.add_argument("--trace-out", help="CSV trace path")
    p.add_argument("--snapshots-out", help="JSON-lines file of u snapshots")
    p.add_argument("--final-out", help="JSON file with the terminal radii")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", type=float, default=0.0, metavar="EPS",
                   help="add a seeded zero-mean perturbation with sup norm EPS")
    p.add_argument("--unit-product", action="store_true",
                   help="shift the initial log-radii to zero mean")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("audit", help="obstruction audit of a curvature vector")
    _common(p, radii=False)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--curvature-from-radii", metavar="RADII",
                     help="audit s_alpha r^alpha for these radii")
    src.add_argument("--curvature", metavar="X", help="audit this curvature vector")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true", default=True)
    mode.add_argument("--sampled", type=int, metavar="K")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full-table", action="store_true")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("spectrum", help="alpha-Laplacian spectrum and stability")
    _common(p)
    p.add_argument("--hessian", action="store_true", help="include the Hessian")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="flows for several alpha values")
    _common(p)
    _flow_options(p, methods=("rk4", "euler"))
    p.add_argument("--alphas", required=True,
                   help="comma-separated alpha values (write --alphas=-1,0,1 "
                        "when the list starts with a negative number)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, NotInOmega, SubsetBudgetExceeded) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InvflowError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STEP_FAILURE


if __name__ == "__main__":
    sys.exit(main())
