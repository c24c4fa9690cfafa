"""Transfer operator on the sphere: f(x) -> E |xM|^k f((xM)~).

Its spectral radius rho(k) is log-convex with rho(0) = 1; the tail index is
the unique positive root of rho(kappa) = 1, found by bisection under frozen
common random numbers so the Monte Carlo curve is deterministic and keeps
the convexity (the frozen sample set defines an empirical-law operator, to
which the same Hoelder argument applies).  Tabulated-atom and similarity
families bypass Monte Carlo with exact finite sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import GridFunction, SphereGrid, constant_function, project_rows
from .model import ModelSpec, sample_pairs


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge (grid too coarse or n_mc too small)."""


class BracketingError(RuntimeError):
    """No root bracket for rho(kappa) = 1 inside (0, kappa0]."""

    def __init__(self, message: str, rho_curve=None):
        super().__init__(message)
        self.rho_curve = rho_curve if rho_curve is not None else []


@dataclass(frozen=True)
class OperatorConfig:
    n_mc: int = 4096
    common_random_numbers: bool = True
    power_iter_tol: float = 1e-4
    power_iter_max: int = 500
    root_tol: float = 1e-3
    force_monte_carlo: bool = False
    n_error_sets: int = 10
    mc_chunk: int = 256

    def __post_init__(self):
        if self.n_mc < 10**3:
            raise ValueError("n_mc must be >= 1e3")
        if min(self.power_iter_tol, self.root_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class FrozenSamples:
    """A matrix sample set reused across grid points, sweeps and kappa
    evaluations (the common-random-numbers contract)."""

    ms: np.ndarray  # (n_mc, d, d)

    @staticmethod
    def draw(spec: ModelSpec, n_mc: int, rng: np.random.Generator
             ) -> "FrozenSamples":
        ms, _ = sample_pairs(spec, n_mc, rng)
        return FrozenSamples(ms=ms)


def _uses_monte_carlo(spec: ModelSpec, cfg: OperatorConfig) -> bool:
    if cfg.force_monte_carlo:
        return True
    return not (spec.is_tabulated() or spec.norm_moment(0.0) is not None)


def apply_T(spec: ModelSpec, grid: SphereGrid, f: GridFunction,
            varkappa: float, cfg: OperatorConfig,
            rng: Optional[np.random.Generator] = None,
            samples: Optional[FrozenSamples] = None) -> GridFunction:
    """One application of the operator to a grid function.

    Monte Carlo path: (1/N) sum_i |x M_i|^k f^((x M_i)~) with one sample set
    for every grid point; exact finite sums for tabulated atoms; the
    direction-free-norm factorization for scalars and similarities.
    """
    if varkappa < 0:
        raise ValueError("varkappa must be >= 0")
    if not cfg.force_monte_carlo:
        if spec.is_tabulated():
            return _apply_exact_tabulated(spec, grid, f, varkappa)
        if spec.norm_moment(0.0) is not None:
            return _apply_direction_free(spec, grid, f, varkappa)
    if samples is None:
        if rng is None:
            raise ValueError("Monte Carlo path needs rng or frozen samples")
        samples = FrozenSamples.draw(spec, cfg.n_mc, rng)
    return _apply_mc(grid, f, varkappa, samples, cfg.mc_chunk)


def _apply_exact_tabulated(spec, grid, f, varkappa) -> GridFunction:
    acc = np.zeros(grid.n_points)
    for m, w in zip(spec.m_atoms, spec.m_weights):
        y = grid.points @ m
        norms = np.linalg.norm(y, axis=1)
        acc += w * norms**varkappa * f.at(y / norms[:, None])
    return GridFunction(grid, acc)


def _apply_direction_free(spec, grid, f, varkappa) -> GridFunction:
    nm = spec.norm_moment(varkappa)
    if spec.family == "scalar_lognormal":
        # positive scalar M keeps the direction
        return GridFunction(grid, nm * f.values)
    rot = spec.rotation
    if rot.kind == "fixed":
        dirs = project_rows(grid.points @ rot.matrix)
        return GridFunction(grid, nm * f.at(dirs))
    # Haar rotation: the image direction is uniform, independent of x
    return GridFunction(grid, np.full(grid.n_points,
                                      nm * float(f.values.mean())))


def _apply_mc(grid, f, varkappa, samples: FrozenSamples, chunk: int
              ) -> GridFunction:
    pts = grid.points
    total = np.zeros(grid.n_points)
    n_mc = len(samples.ms)
    for start in range(0, n_mc, chunk):
        ms = samples.ms[start:start + chunk]
        y = np.einsum("nd,idk->ink", pts, ms)
        norms = np.linalg.norm(y, axis=2)
        dirs = y / norms[:, :, None]
        vals = f.at(dirs.reshape(-1, grid.dimension)).reshape(norms.shape)
        total += (norms**varkappa * vals).sum(axis=0)
    return GridFunction(grid, total / n_mc)


@dataclass
class SpectralResult:
    rho: float
    eigenfunction: GridFunction
    iterations: int


def spectral_radius(spec: ModelSpec, grid: SphereGrid, varkappa: float,
                    cfg: OperatorConfig,
                    rng: Optional[np.random.Generator] = None,
                    samples: Optional[FrozenSamples] = None,
                    f0: Optional[GridFunction] = None) -> SpectralResult:
    """Largest eigenvalue and positive eigenfunction by power iteration.

    Iterates f <- T f / sup(T f) from f0 (default constant one), enforcing
    antipodal symmetry each sweep; rho is the sup at convergence.
    """
    if samples is None and _uses_monte_carlo(spec, cfg) \
            and cfg.common_random_numbers:
        if rng is None:
            raise ValueError("Monte Carlo path needs rng or frozen samples")
        samples = FrozenSamples.draw(spec, cfg.n_mc, rng)
    f = constant_function(grid) if f0 is None else f0.symmetrized()
    sup = float(np.max(np.abs(f.values)))
    f = GridFunction(grid, f.values / sup)
    rho_prev = None
    for it in range(1, cfg.power_iter_max + 1):
        tf = apply_T(spec, grid, f, varkappa, cfg, rng=rng, samples=samples)
        tf = tf.symmetrized()
        rho = float(np.max(np.abs(tf.values)))
        if rho == 0.0:
            raise PowerIterationError("operator annihilated the iterate")
        new_vals = tf.values / rho
        delta_f = float(np.max(np.abs(new_vals - f.values)))
        f = GridFunction(grid, new_vals)
        if rho_prev is not None and \
                abs(rho - rho_prev) <= cfg.power_iter_tol * rho and \
                delta_f <= cfg.power_iter_tol:
            return SpectralResult(rho=rho, eigenfunction=f, iterations=it)
        rho_prev = rho
    raise PowerIterationError(
        f"no convergence in {cfg.power_iter_max} sweeps at varkappa="
        f"{varkappa:g}: grid too coarse or n_mc too small")


@dataclass
class KappaSolution:
    """Root of rho(kappa) = 1 with the evaluated curve and eigenfunction."""

    kappa: float
    rho_at_kappa: float
    rho_curve: np.ndarray       # (k, 2) sorted pairs (varkappa, rho)
    r: GridFunction             # positive, symmetric, sup-normalized to 1
    iterations: int
    mc_error: float
    kappa_slope: float          # d(log rho)/d(varkappa) near kappa
    samples: Optional[FrozenSamples] = None  # the frozen CRN set, if any

    @property
    def kappa_error_hint(self) -> float:
        """Empirical root_tol -> kappa-error mapping via the curve slope."""
        return abs(np.log1p(self.rho_at_kappa - 1.0)) / max(
            self.kappa_slope, 1e-30)

    def to_json_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "rho_at_kappa": self.rho_at_kappa,
            "iterations": self.iterations,
            "mc_error": self.mc_error,
            "grid_resolution": int(self.r.grid.resolution),
            "kappa_slope": self.kappa_slope,
        }


def solve_kappa(spec: ModelSpec, grid: SphereGrid, cfg: OperatorConfig,
                rng: np.random.Generator) -> KappaSolution:
    """Solve rho(kappa) = 1 on (0, kappa0] by bisection.

    Requires a negative Lyapunov exponent (caller-audited) so rho dips below
    one before climbing back to rho(kappa0) >= 1.  All rho evaluations share
    one frozen sample set; the Monte Carlo error of the root-level rho is
    estimated afterwards from independent sample sets.
    """
    kappa0 = spec.kappa0
    mc = _uses_monte_carlo(spec, cfg)
    samples = FrozenSamples.draw(spec, cfg.n_mc, rng) if mc else None
    evals: dict[float, float] = {}
    state = {"iters": 0, "warm": None}

    def rho_at(x: float) -> SpectralResult:
        res = spectral_radius(spec, grid, x, cfg, rng=rng, samples=samples,
                              f0=state["warm"])
        state["warm"] = res.eigenfunction
        state["iters"] += res.iterations
        evals[x] = res.rho
        return res

    def curve() -> np.ndarray:
        return np.array(sorted(evals.items()))

    res_hi = rho_at(kappa0)
    if res_hi.rho < 1.0:
        noise = _subsample_noise(spec, grid, kappa0, cfg, samples,
                                 state["warm"]) if mc else 0.0
        if 1.0 - res_hi.rho > 3 * noise:
            raise BracketingError(
                f"rho(kappa0={kappa0:g}) = {res_hi.rho:.6g} < 1: kappa0 is "
                "not a valid moment bound for this model", curve())
        raise BracketingError(
            f"rho(kappa0={kappa0:g}) = {res_hi.rho:.6g} is below 1 by less "
            f"than 3 x estimated MC noise {noise:.2g}: increase n_mc",
            curve())

    lo = None
    hi = kappa0
    x = kappa0 / 2.0
    for _ in range(60):
        res = rho_at(x)
        if res.rho < 1.0:
            lo = x
            break
        hi = x
        x /= 2.0
        if x < 1e-12:
            break
    if lo is None:
        raise BracketingError(
            "rho never drops below 1 on (0, kappa0]: the Lyapunov exponent "
            "may not be negative, or MC noise dominates", curve())

    kappa, res_k = None, None
    while hi - lo > 1e-13 * kappa0:
        mid = 0.5 * (lo + hi)
        res = rho_at(mid)
        if abs(res.rho - 1.0) <= 0.5 * cfg.root_tol:
            kappa, res_k = mid, res
            break
        if res.rho < 1.0:
            lo = mid
        else:
            hi = mid
    if kappa is None:
        kappa = hi
        res_k = rho_at(kappa)
        if abs(res_k.rho - 1.0) > cfg.root_tol:
            raise BracketingError(
                f"bisection interval collapsed with rho = {res_k.rho:.6g} "
                "still outside tolerance", curve())

    # pad the evaluated curve to >= 8 spread-out points (convexity diagnostics)
    for t in np.linspace(kappa0 / 8.0, kappa0, 8):
        if min(abs(t - u) for u in evals) > 1e-3 * kappa0:
            rho_at(t)

    mc_error = 0.0
    if mc and cfg.n_error_sets > 0:
        reruns = []
        for _ in range(cfg.n_error_sets):
            fresh = FrozenSamples.draw(spec, cfg.n_mc, rng)
            res = spectral_radius(spec, grid, kappa, cfg, rng=rng,
                                  samples=fresh, f0=res_k.eigenfunction)
            reruns.append(res.rho)
        mc_error = float(np.std(reruns, ddof=1))

    r = res_k.eigenfunction
    sup = float(np.max(r.values))
    r = GridFunction(grid, r.values / sup)
    if np.any(r.values <= 0):
        raise PowerIterationError(
            "eigenfunction is not strictly positive on the grid")

    pts = curve()
    slope = _log_slope_near(pts, kappa)
    return KappaSolution(kappa=float(kappa), rho_at_kappa=res_k.rho,
                         rho_curve=pts, r=r, iterations=state["iters"],
                         mc_error=mc_error, kappa_slope=slope,
                         samples=samples)


def _log_slope_near(curve: np.ndarray, kappa: float) -> float:
    ks, rhos = curve[:, 0], np.log(curve[:, 1])
    if len(ks) < 2:
        return 0.0
    i = int(np.argmin(np.abs(ks - kappa)))
    j = i + 1 if i + 1 < len(ks) else i - 1
    if ks[j] == ks[i]:
        return 0.0
    return float((rhos[j] - rhos[i]) / (ks[j] - ks[i]))


def _subsample_noise(spec, grid, varkappa, cfg, samples, warm) -> float:
    """Rough rho noise scale: spread across four quarters of the frozen set."""
    quarters = np.array_split(samples.ms, 4)
    vals = []
    for q in quarters:
        if len(q) == 0:
            continue
        res = spectral_radius(spec, grid, varkappa, cfg,
                              samples=FrozenSamples(ms=q), f0=warm)
        vals.append(res.rho)
    if len(vals) < 2:
        return 0.0
    return float(np.std(vals, ddof=1) / np.sqrt(len(vals)))


def validate_rho_by_products(spec: ModelSpec, varkappa: float, n: int,
                             n_mc: int, rng: np.random.Generator) -> float:
    """(E ||Pi_n||^k)^(1/n) by direct dense products; approaches rho(k)."""
    if n > 30:
        raise ValueError("product moments degrade beyond n = 30 steps")
    d = spec.dimension
    ms, _ = sample_pairs(spec, n_mc * n, rng)
    ms = ms.reshape(n_mc, n, d, d)
    pi = ms[:, 0]
    for k in range(1, n):
        pi = np.einsum("bij,bjk->bik", pi, ms[:, k])
    norms = np.linalg.svd(pi, compute_uv=False)[:, 0]
    vals = norms**varkappa
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError(
            f"||Pi_n||^k overflowed at n={n}: n too large for this family")
    return float(np.mean(vals) ** (1.0 / n))
