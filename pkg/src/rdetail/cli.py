"""Command-line pipeline: audit, lyapunov, kappa, regen, tail, and the
composite pipeline subcommand.

Every stage writes machine-readable files (JSON summaries, CSV curves)
carrying the seed and config hash; a fixed seed reproduces every output
byte-for-byte, and the worker count never changes numeric payloads (it
only schedules fixed, independently-seeded chunks).

Exit codes: 0 success; 1 usage or configuration error; 2 assumption-audit
failure (including the negative-Lyapunov gate); 3 numerical failure
(bracketing, non-convergence, drift sign, sampler budgets); 4 consolidated
acceptance-check failure in pipeline mode.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import geometry, regeneration, shifted, tail, transfer
from .config import ConfigError, RunConfig, load_config
from .model import (ModelSpec, RejectionBudgetError, SpecError,
                    audit_assumptions)
from .parallel import sample_R_parallel
from .regeneration import (BaseKernel, MinorizationError, PhiAtoms,
                           ResidualSamplerError, ShiftedKernel,
                           MinorizationSpec, gaussian_floor_preset,
                           run_split_chain, validate_regeneration,
                           whole_sphere_overlap)
from .reports import make_meta, sanitize, sha256_bytes, write_csv, write_json
from .shifted import DriftSignError, ShiftedStepSampler, estimate_pi_alpha
from .transfer import BracketingError, OperatorConfig, PowerIterationError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_AUDIT = 2
EXIT_NUMERICAL = 3
EXIT_CHECKS = 4

# fixed per-stage seed-stream indices (never reorder)
STREAM_AUDIT, STREAM_LYAPUNOV, STREAM_KAPPA, STREAM_CHAIN, STREAM_REGEN, \
    STREAM_TAIL_R, STREAM_TAIL_REPORT, STREAM_DIRECTIONS = range(8)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    p = _Parser(prog="rdetail", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="model config YAML")
        sp.add_argument("--seed", required=True, type=int,
                        help="master seed (mandatory: no silent "
                             "nondeterminism)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("audit", help="assumption audit")
    common(sp)
    sp.add_argument("--samples", type=int, default=None)

    sp = sub.add_parser("lyapunov", help="Lyapunov exponent estimate")
    common(sp)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--chains", type=int, default=None)

    sp = sub.add_parser("kappa", help="tail-index solve")
    common(sp)
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--n-mc", type=int, default=None)
    sp.add_argument("--root-tol", type=float, default=None)

    sp = sub.add_parser("regen", help="split-chain regeneration run")
    common(sp)
    sp.add_argument("--steps", type=int, default=None)

    sp = sub.add_parser("tail", help="stationary-solution tail report")
    common(sp)
    sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--n-pairs", type=int, default=None)
    sp.add_argument("--tmin", type=float, default=None)
    sp.add_argument("--tmax", type=float, default=None)
    sp.add_argument("--tpoints", type=int, default=None)

    sp = sub.add_parser("pipeline", help="all stages plus verdict")
    common(sp)
    sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--n-pairs", type=int, default=None)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
    except (ConfigError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = _Context(cfg=cfg, seed=args.seed, out=out,
                   workers=max(1, args.workers))
    try:
        return _DISPATCH[args.command](ctx, args)
    except (SpecError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BracketingError, PowerIterationError, DriftSignError,
            RejectionBudgetError, ResidualSamplerError, MinorizationError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if isinstance(exc, BracketingError) and len(exc.rho_curve):
            write_csv(ctx.out / "rho_curve_partial.csv", ["varkappa", "rho"],
                      [(float(a), float(b)) for a, b in exc.rho_curve],
                      meta=ctx.meta())
            print(f"rho curve attached: {ctx.out/'rho_curve_partial.csv'}",
                  file=sys.stderr)
        return EXIT_NUMERICAL


class _Context:
    def __init__(self, cfg: RunConfig, seed: int, out: Path, workers: int):
        self.cfg = cfg
        self.seed = seed
        self.out = out
        self.workers = workers
        self.config_hash = sha256_bytes(cfg.raw_bytes)
        self.streams = np.random.SeedSequence(seed).spawn(8)

    def rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng(self.streams[stream])

    def meta(self, inputs: dict | None = None) -> dict:
        return make_meta(self.seed, self.config_hash, inputs)

    def run_opt(self, key: str, cli_value, default):
        if cli_value is not None:
            return cli_value
        return self.cfg.run.get(key, default)


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def _grid_for(spec: ModelSpec, resolution=None):
    if resolution:
        return geometry.make_grid(spec.dimension, resolution)
    return geometry.make_grid(spec.dimension)


def _stage_audit(ctx: _Context, n_samples: int):
    report = audit_assumptions(ctx.cfg.spec, n_samples, ctx.rng(STREAM_AUDIT))
    payload = {"assumptions": sanitize(report.to_dict()),
               "hard_fail": report.hard_fail, "n_samples": n_samples,
               "meta": ctx.meta()}
    write_json(ctx.out / "audit.json", payload)
    return report, payload


def _print_audit(report) -> None:
    width = max(len(k) for k in report.entries)
    for key, e in sorted(report.entries.items()):
        print(f"  {key:<{width}}  {e.verdict:<13} estimate={e.estimate:.6g} "
              f"se={e.se:.2g}")
    beta, se = report.lyapunov_hint
    print(f"  lyapunov hint: beta ~ {beta:.4f} +- {se:.4f}")


def cmd_audit(ctx: _Context, args) -> int:
    n = ctx.run_opt("audit_samples", args.samples, 20000)
    report, _ = _stage_audit(ctx, n)
    _print_audit(report)
    print(f"audit: {'FAIL' if report.hard_fail else 'pass'} "
          f"-> {ctx.out/'audit.json'}")
    return EXIT_AUDIT if report.hard_fail else EXIT_OK


def _stage_lyapunov(ctx: _Context, steps: int, chains: int):
    est = geometry.lyapunov(ctx.cfg.spec, steps, chains,
                            ctx.rng(STREAM_LYAPUNOV))
    payload = {"beta": est.beta, "se": est.se, "n_steps": est.n_steps,
               "n_chains": est.n_chains,
               "per_chain": sanitize(est.per_chain),
               "meta": ctx.meta()}
    write_json(ctx.out / "lyapunov.json", payload)
    return est, payload


def cmd_lyapunov(ctx: _Context, args) -> int:
    steps = ctx.run_opt("lyapunov_steps", args.steps, 5000)
    chains = ctx.run_opt("lyapunov_chains", args.chains, 16)
    est, _ = _stage_lyapunov(ctx, steps, chains)
    print(f"lyapunov: beta = {est.beta:.6f} +- {est.se:.6f} "
          f"-> {ctx.out/'lyapunov.json'}")
    return EXIT_OK


def _operator_config(ctx: _Context, n_mc=None, root_tol=None
                     ) -> OperatorConfig:
    return OperatorConfig(
        n_mc=ctx.run_opt("n_mc", n_mc, 4096),
        root_tol=ctx.run_opt("root_tol", root_tol, 1e-3))


def _stage_kappa(ctx: _Context, grid, opcfg: OperatorConfig):
    sol = transfer.solve_kappa(ctx.cfg.spec, grid, opcfg,
                               ctx.rng(STREAM_KAPPA))
    payload = dict(sol.to_json_dict())
    payload["meta"] = ctx.meta()
    write_json(ctx.out / "kappa.json", payload)
    write_csv(ctx.out / "rho_curve.csv", ["varkappa", "rho"],
              [(float(a), float(b)) for a, b in sol.rho_curve],
              meta=ctx.meta())
    d = grid.dimension
    write_csv(ctx.out / "r.csv",
              [f"x{i+1}" for i in range(d)] + ["value"],
              [tuple(map(float, row)) for row in
               np.column_stack([grid.points, sol.r.values])],
              meta=ctx.meta())
    return sol, payload


def cmd_kappa(ctx: _Context, args) -> int:
    grid = _grid_for(ctx.cfg.spec, ctx.run_opt("grid", args.grid, None))
    opcfg = _operator_config(ctx, args.n_mc, args.root_tol)
    sol, _ = _stage_kappa(ctx, grid, opcfg)
    print(f"kappa: {sol.kappa:.6f} (rho = {sol.rho_at_kappa:.6f}, "
          f"mc_error = {sol.mc_error:.2g}) -> {ctx.out/'kappa.json'}")
    return EXIT_OK


def _stage_shifted(ctx: _Context, sol, steps: int):
    spec = ctx.cfg.spec
    sampler = ShiftedStepSampler.from_solution(
        spec, sol, n_prop=ctx.cfg.run.get("n_prop", 1000))
    pi = estimate_pi_alpha(sampler, steps, ctx.rng(STREAM_CHAIN))
    payload = {"alpha": pi.alpha, "alpha_se": pi.alpha_se, "ess": pi.ess,
               "n_used": pi.n_used, "meta": ctx.meta()}
    write_json(ctx.out / "pi_alpha.json", payload)
    d = pi.grid.dimension
    write_csv(ctx.out / "pi.csv",
              [f"x{i+1}" for i in range(d)] + ["weight"],
              [tuple(map(float, row)) for row in
               np.column_stack([pi.grid.points, pi.weights])],
              meta=ctx.meta())
    return sampler, pi, payload


def _resolve_minorization(ctx: _Context, kernel, spec: ModelSpec):
    rcfg = ctx.cfg.regen or {}
    preset = rcfg.get("preset")
    if preset is None:
        if spec.is_tabulated() and spec.dimension == 1:
            try:
                return whole_sphere_overlap(kernel, p=rcfg.get("p"))
            except MinorizationError:
                preset = "ball_atom"
        elif spec.family == "gaussian_perturbed":
            preset = "gaussian_floor"
        else:
            return None
    if preset == "whole_sphere_overlap":
        return whole_sphere_overlap(kernel, p=rcfg.get("p"))
    if preset == "gaussian_floor":
        return gaussian_floor_preset(
            spec, center=rcfg.get("center"), delta=rcfg.get("delta", 0.2),
            whole_sphere=rcfg.get("whole_sphere", True),
            rng=ctx.rng(STREAM_REGEN))
    if preset == "ball_atom":
        center = np.zeros(spec.dimension)
        center[0] = 1.0
        if rcfg.get("center") is not None:
            center = np.asarray(rcfg["center"], dtype=float)
        out = kernel.atoms(center)
        if out is None:
            raise MinorizationError("ball_atom preset needs a tabulated "
                                    "kernel")
        dirs, _, probs = out
        stay = float(probs[np.linalg.norm(dirs - center, axis=1) < 1e-9]
                     .sum())
        if stay <= 0:
            raise MinorizationError("kernel never stays at the chosen atom")
        p = rcfg.get("p", 0.5 * stay)
        phi = PhiAtoms(points=center[None, :], weights=np.array([1.0]))
        return MinorizationSpec(region=("ball", center, 0.1), p=float(p),
                                phi=phi)
    return None


def _stage_regen(ctx: _Context, steps: int, sol=None):
    spec = ctx.cfg.spec
    kernel_kind = (ctx.cfg.regen or {}).get("kernel", "base")
    if kernel_kind == "shifted":
        if sol is None:
            raise MinorizationError(
                "shifted-kernel regeneration needs a kappa solution")
        kernel = ShiftedKernel(ShiftedStepSampler.from_solution(spec, sol))
    else:
        kernel = BaseKernel(spec)
    minor = _resolve_minorization(ctx, kernel, spec)
    if minor is None:
        return None, {"status": "skipped",
                      "reason": "no minorization preset for this family",
                      "meta": ctx.meta()}
    x0 = np.zeros(spec.dimension)
    x0[0] = 1.0
    trace = run_split_chain(kernel, minor, steps, x0, ctx.rng(STREAM_REGEN))
    rows = []
    epoch_set = set(int(e) for e in trace.epochs)
    for n in range(len(trace.v)):
        rows.append(tuple(float(c) for c in trace.x[n])
                    + (float(trace.v[n]),
                       int(trace.coins[n]) if n < len(trace.coins) else -1,
                       1 if n in epoch_set else 0))
    d = spec.dimension
    write_csv(ctx.out / "regen_trace.csv",
              [f"x{i+1}" for i in range(d)] + ["v", "coin", "cycle_boundary"],
              rows, meta=ctx.meta())
    if trace.n_cycles >= 200:
        diag = validate_regeneration(trace, minor, ctx.rng(STREAM_REGEN))
        diag_dict = sanitize(diag.to_dict())
    else:
        diag, diag_dict = None, {"status": "too few cycles",
                                 "n_cycles": trace.n_cycles}
    payload = {"diagnostics": diag_dict, "p": minor.p,
               "region": minor.region[0], "n_steps": steps,
               "n_cycles": trace.n_cycles, "meta": ctx.meta()}
    write_json(ctx.out / "regen_diagnostics.json", payload)
    return diag, payload


def cmd_regen(ctx: _Context, args) -> int:
    steps = ctx.run_opt("regen_steps", args.steps, 60000)
    sol = None
    if (ctx.cfg.regen or {}).get("kernel") == "shifted":
        grid = _grid_for(ctx.cfg.spec, ctx.cfg.run.get("grid"))
        sol, _ = _stage_kappa(ctx, grid, _operator_config(ctx))
    diag, payload = _stage_regen(ctx, steps, sol)
    if payload.get("status") == "skipped":
        print(f"regen: skipped ({payload['reason']})")
        return EXIT_OK
    ok = diag is not None and diag.all_pass
    print(f"regen: {payload['n_cycles']} cycles, diagnostics "
          f"{'pass' if ok else 'FAIL/insufficient'} "
          f"-> {ctx.out/'regen_diagnostics.json'}")
    return EXIT_OK


def _stage_tail(ctx: _Context, sol, pi, n_samples: int, tol: float,
                n_pairs: int, t_window=None):
    spec = ctx.cfg.spec
    samples = sample_R_parallel(spec, tol, n_samples,
                                ctx.streams[STREAM_TAIL_R],
                                workers=ctx.workers)
    dirs = tail.default_directions(
        sol.r.grid, ctx.rng(STREAM_DIRECTIONS),
        n_random=ctx.cfg.run.get("directions_random", 8))
    report = tail.build_tail_report(
        spec, sol, pi, samples, dirs, ctx.rng(STREAM_TAIL_REPORT),
        n_pairs=n_pairs,
        t_points=ctx.cfg.run.get("t_points", 12),
        hill_fractions=ctx.cfg.run.get(
            "hill_fractions", (0.02, 0.01, 0.005, 0.002)))
    payload = sanitize(report.to_json_dict())
    payload["n_flagged_samples"] = samples.n_flagged
    payload["mean_truncation_depth"] = samples.mean_depth
    payload["meta"] = ctx.meta()
    write_json(ctx.out / "tail_report.json", payload)
    write_csv(ctx.out / "hill.csv", ["k", "kappa_estimate"],
              [(int(k), float(e)) for k, e in
               zip(report.hill_pooled.k_values,
                   report.hill_pooled.estimates)],
              meta=ctx.meta())
    rows = []
    curves = tail.survival_curves(samples, dirs,
                                  np.vstack([np.geomspace(ro.t_low,
                                                          ro.t_high, 12)
                                             for ro in report.readouts]))
    for j in range(len(dirs)):
        for i, t in enumerate(curves.t_grid[j]):
            rows.append((j, float(t), float(curves.p_pos[j, i]),
                         float(curves.p_neg[j, i]),
                         float(curves.p_abs[j, i]),
                         float(curves.wilson_pos[0][j, i]),
                         float(curves.wilson_pos[1][j, i])))
    write_csv(ctx.out / "survival.csv",
              ["direction_index", "t", "p_pos", "p_neg", "p_abs",
               "wilson_low", "wilson_high"], rows, meta=ctx.meta())
    if t_window is not None:
        tmin, tmax, tpoints = t_window
        extra = tail.survival_curves(
            samples, dirs, np.geomspace(tmin, tmax, tpoints))
        rows = []
        for j in range(len(dirs)):
            for i, t in enumerate(extra.t_grid[j]):
                rows.append((j, float(t), float(extra.p_pos[j, i]),
                             float(extra.p_abs[j, i])))
        write_csv(ctx.out / "survival_fixed_grid.csv",
                  ["direction_index", "t", "p_pos", "p_abs"], rows,
                  meta=ctx.meta())
    return samples, report, payload


def _tail_prereqs(ctx: _Context, grid_res=None):
    """kappa and chain artifacts, reused from the out dir when the stored
    config hash, seed and grid match, recomputed in-run otherwise."""
    import json

    spec = ctx.cfg.spec
    grid = _grid_for(spec, ctx.cfg.run.get("grid") if grid_res is None
                     else grid_res)
    sol = None
    kappa_file = ctx.out / "kappa.json"
    r_file = ctx.out / "r.csv"
    if kappa_file.exists() and r_file.exists():
        stored = json.loads(kappa_file.read_text())
        if stored.get("meta", {}).get("config_sha256") == ctx.config_hash \
                and stored.get("meta", {}).get("seed") == ctx.seed \
                and stored.get("grid_resolution") == grid.resolution:
            data = np.genfromtxt(r_file, delimiter=",", comments="#",
                                 names=True)
            r = geometry.GridFunction(grid, np.atleast_1d(data["value"]))
            sol = transfer.KappaSolution(
                kappa=stored["kappa"], rho_at_kappa=stored["rho_at_kappa"],
                rho_curve=np.empty((0, 2)), r=r,
                iterations=stored["iterations"],
                mc_error=stored["mc_error"],
                kappa_slope=stored.get("kappa_slope", 0.0))
    if sol is None:
        sol, _ = _stage_kappa(ctx, grid, _operator_config(ctx))
    steps = ctx.cfg.run.get("steps", 100000)
    sampler, pi, _ = _stage_shifted(ctx, sol, steps)
    return sol, pi


def cmd_tail(ctx: _Context, args) -> int:
    sol, pi = _tail_prereqs(ctx)
    n = ctx.run_opt("samples", args.samples, 200000)
    tol = ctx.run_opt("tol", args.tol, 1e-10)
    n_pairs = ctx.run_opt("n_pairs", args.n_pairs, min(100000, n))
    t_window = None
    if args.tmin is not None and args.tmax is not None:
        t_window = (args.tmin, args.tmax, args.tpoints or 12)
    _, report, _ = _stage_tail(ctx, sol, pi, n, tol, n_pairs, t_window)
    print(f"tail: kappa={report.kappa:.4f} hill={report.hill_registered:.4f}"
          f" slope={report.slope_median:.4f} K0={report.k0.k0:.4g}"
          f" -> {ctx.out/'tail_report.json'}")
    return EXIT_OK


def _tail_verdicts(report) -> dict:
    mass = [ro for ro in report.readouts if ro.has_tail_mass]
    return {
        "tail_triangle": report.triangle_max_diff <= 0.1,
        "tail_flatness": bool(mass) and all(
            ro.flatness <= 0.25 for ro in mass),
        "tail_k0_positive": report.k0.k0 - 2 * report.k0.se_total > 0,
        "tail_k0_agreement": bool(mass) and all(
            ro.k0_agreement is not None and ro.k0_agreement <= 0.25
            for ro in mass),
        "tail_positive_wilson": all(
            ro.wilson_low_at_top > 0 for ro in mass),
        "support_unbounded": report.support.verdict,
    }


def cmd_pipeline(ctx: _Context, args) -> int:
    manifest = {"stages": {}, "meta": ctx.meta()}
    verdicts = {}

    def finish(code: int) -> int:
        manifest["verdicts"] = sanitize(verdicts)
        manifest["overall_pass"] = all(
            v for v in verdicts.values() if v is not None) and code == 0
        write_json(ctx.out / "manifest.json", manifest)
        print(f"pipeline: exit {code} -> {ctx.out/'manifest.json'}")
        return code

    report, _ = _stage_audit(ctx, ctx.cfg.run.get("audit_samples", 20000))
    manifest["stages"]["audit"] = "done"
    verdicts["audit_pass"] = not report.hard_fail
    _print_audit(report)
    if report.hard_fail:
        manifest["stages"]["lyapunov"] = "aborted"
        return finish(EXIT_AUDIT)

    est, _ = _stage_lyapunov(ctx, ctx.cfg.run.get("lyapunov_steps", 5000),
                             ctx.cfg.run.get("lyapunov_chains", 16))
    manifest["stages"]["lyapunov"] = "done"
    verdicts["beta_negative"] = est.beta + 3 * est.se < 0
    print(f"  beta = {est.beta:.5f} +- {est.se:.5f}")
    if not verdicts["beta_negative"]:
        manifest["stages"]["kappa"] = "aborted"
        print("pipeline: Lyapunov exponent not negative, aborting",
              file=sys.stderr)
        return finish(EXIT_AUDIT)

    grid = _grid_for(ctx.cfg.spec, ctx.run_opt("grid", args.grid, None))
    sol, _ = _stage_kappa(ctx, grid, _operator_config(ctx))
    manifest["stages"]["kappa"] = "done"
    verdicts["kappa_root_within_tol"] = \
        abs(sol.rho_at_kappa - 1.0) <= _operator_config(ctx).root_tol
    print(f"  kappa = {sol.kappa:.6f}")

    steps = ctx.run_opt("steps", args.steps, 100000)
    sampler, pi, _ = _stage_shifted(ctx, sol, steps)
    manifest["stages"]["shifted"] = "done"
    verdicts["drift_positive"] = pi.alpha - 3 * pi.alpha_se > 0
    val, se = shifted.drift_integral(ctx.cfg.spec, sol.kappa, sol.r, pi,
                                     20000, ctx.rng(STREAM_CHAIN))
    tol_match = 3 * float(np.hypot(pi.alpha_se, se)) + 1e-9
    verdicts["drift_matches_integral"] = abs(pi.alpha - val) <= tol_match
    print(f"  alpha = {pi.alpha:.5f} +- {pi.alpha_se:.5f} "
          f"(integral {val:.5f})")

    diag, regen_payload = _stage_regen(
        ctx, ctx.cfg.run.get("regen_steps", 60000), sol)
    if regen_payload.get("status") == "skipped":
        manifest["stages"]["regen"] = "skipped"
        verdicts["regen_pass"] = None
    else:
        manifest["stages"]["regen"] = "done"
        verdicts["regen_pass"] = diag is not None and diag.all_pass

    n = ctx.run_opt("samples", args.samples, 200000)
    n_pairs = ctx.run_opt("n_pairs", args.n_pairs, min(100000, n))
    _, report_t, _ = _stage_tail(ctx, sol, pi, n,
                                 ctx.cfg.run.get("tol", 1e-10), n_pairs)
    manifest["stages"]["tail"] = "done"
    verdicts.update(_tail_verdicts(report_t))
    print(f"  tail: hill={report_t.hill_registered:.4f} "
          f"slope={report_t.slope_median:.4f} K0={report_t.k0.k0:.4g}")

    ok = all(v for v in verdicts.values() if v is not None)
    return finish(EXIT_OK if ok else EXIT_CHECKS)


_DISPATCH = {
    "audit": cmd_audit,
    "lyapunov": cmd_lyapunov,
    "kappa": cmd_kappa,
    "regen": cmd_regen,
    "tail": cmd_tail,
    "pipeline": cmd_pipeline,
}


if __name__ == "__main__":
    sys.exit(main())
