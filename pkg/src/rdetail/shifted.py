"""The direction chain under the kappa-shifted (tilted) measure.

One step from x has kernel (1/r(x)) E |xM|^kappa f((xM)~) r((xM)~): the
negative-drift walk V_n = log |x Pi_n| becomes a positive-drift Markov
random walk, whose stationary direction law pi and drift alpha feed the
tail constant.  Sampling is by importance resampling against the base law,
with exact tilted draws for tabulated, scalar, and similarity families.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import GridFunction, SphereGrid, project, project_rows
from .model import ModelSpec, sample_pairs
from .util import batch_means_se, ess_batch_means, wilson_interval


class DriftSignError(RuntimeError):
    """Estimated drift is non-positive beyond noise: kappa and the model
    disagree (wrong root, bad eigenfunction, or invalid assumptions)."""


@dataclass
class ShiftedStepSampler:
    """Transition sampler of the tilted direction chain.

    mode "auto" uses exact tilted draws where the family admits them
    (tabulated atoms, positive scalars, similarities) and importance
    resampling otherwise; mode "resampling" forces resampling everywhere,
    which is what the exactness tests exercise.
    """

    spec: ModelSpec
    kappa: float
    r: GridFunction
    n_prop: int = 1000
    mode: str = "auto"

    def __post_init__(self):
        if self.n_prop < 100:
            raise ValueError("n_prop must be >= 100")
        if self.mode not in ("auto", "resampling"):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if np.any(self.r.values <= 0):
            raise ValueError("eigenfunction must be strictly positive")

    @staticmethod
    def from_solution(spec: ModelSpec, solution, n_prop: int = 1000,
                      mode: str = "auto") -> "ShiftedStepSampler":
        return ShiftedStepSampler(spec=spec, kappa=solution.kappa,
                                  r=solution.r, n_prop=n_prop, mode=mode)

    @property
    def grid(self) -> SphereGrid:
        return self.r.grid

    # -- exact tilted atom law (tabulated families) -------------------------

    def atom_tilt(self, x: np.ndarray):
        """Tilted atom probabilities at x with the image directions and log
        norms; the weights w_k |x m_k|^kappa r((x m_k)~) / r(x) sum to one
        up to the eigen-residual and are renormalized."""
        spec = self.spec
        y = np.einsum("d,kde->ke", x, spec.m_atoms)
        norms = np.linalg.norm(y, axis=1)
        dirs = y / norms[:, None]
        w = spec.m_weights * norms**self.kappa * self.r.at(dirs)
        w = w / w.sum()
        return w, dirs, np.log(norms)

    def step(self, x: np.ndarray, rng: np.random.Generator):
        """One tilted transition from x; returns (x_next, log |xM|)."""
        spec = self.spec
        if self.mode == "auto":
            if spec.is_tabulated():
                probs, dirs, lognorms = self.atom_tilt(x)
                k = rng.choice(len(probs), p=probs)
                return dirs[k], float(lognorms[k])
            if spec.family == "scalar_lognormal":
                u = rng.normal(spec.log_mean + self.kappa * spec.log_sd**2,
                               spec.log_sd)
                return x.copy(), float(u)
            if spec.family == "similarity":
                a = _tilted_scale(spec.scale, self.kappa, 1, rng)[0]
                o = spec.rotation.sample(1, spec.dimension, rng)[0]
                return project(x @ o), float(np.log(a))
        return self._step_resampling(x, rng)

    def _step_resampling(self, x: np.ndarray, rng: np.random.Generator):
        ms, _ = sample_pairs(self.spec, self.n_prop, rng)
        y = np.einsum("d,ide->ie", x, ms)
        norms = np.linalg.norm(y, axis=1)
        dirs = y / norms[:, None]
        w = norms**self.kappa * self.r.at(dirs)
        s = float(w.sum())
        if s <= 0.0 or not np.isfinite(s):
            raise FloatingPointError(
                "all importance weights vanished: numerical corruption")
        k = rng.choice(self.n_prop, p=w / s)
        return dirs[k], float(np.log(norms[k]))

    # -- whole traces --------------------------------------------------------

    def run(self, x0, n_steps: int, rng: np.random.Generator
            ) -> "ShiftedChainTrace":
        """Simulate (X_n, V_n) for n_steps transitions, V_0 = 0."""
        x0 = project(x0)
        spec = self.spec
        d = spec.dimension
        if self.mode == "auto" and spec.is_tabulated() and d == 1:
            # r is symmetric on {-1,+1}, so the tilt is state-free
            probs, _, lognorms = self.atom_tilt(np.array([1.0]))
            idx = rng.choice(len(probs), size=n_steps, p=probs)
            u = lognorms[idx]
            signs = np.sign(spec.m_atoms[idx, 0, 0])
            xs = np.empty((n_steps + 1, 1))
            xs[:, 0] = x0[0] * np.concatenate([[1.0], np.cumprod(signs)])
        elif self.mode == "auto" and spec.family == "scalar_lognormal":
            u = rng.normal(spec.log_mean + self.kappa * spec.log_sd**2,
                           spec.log_sd, size=n_steps)
            xs = np.tile(x0, (n_steps + 1, 1))
        elif self.mode == "auto" and spec.family == "similarity" \
                and spec.rotation.kind == "haar":
            a = _tilted_scale(spec.scale, self.kappa, n_steps, rng)
            u = np.log(a)
            xs = np.empty((n_steps + 1, d))
            xs[0] = x0
            # each Haar step makes the direction exactly uniform
            xs[1:] = project_rows(rng.normal(size=(n_steps, d)))
        else:
            u = np.empty(n_steps)
            xs = np.empty((n_steps + 1, d))
            xs[0] = x0
            x = x0
            for k in range(n_steps):
                x, u[k] = self.step(x, rng)
                xs[k + 1] = x
        v = np.concatenate([[0.0], np.cumsum(u)])
        return ShiftedChainTrace(x=xs, v=v, u=u)


def _tilted_scale(scale, kappa: float, n: int, rng: np.random.Generator
                  ) -> np.ndarray:
    """Draw from the law of A tilted by a^kappa / E A^kappa."""
    if scale.kind == "deterministic":
        return np.full(n, scale.value)
    if scale.kind == "lognormal":
        return np.exp(rng.normal(scale.log_mean + kappa * scale.log_sd**2,
                                 scale.log_sd, size=n))
    w = scale.weights * np.asarray(scale.atoms) ** kappa
    idx = rng.choice(len(w), size=n, p=w / w.sum())
    return np.asarray(scale.atoms)[idx]


@dataclass
class ShiftedChainTrace:
    """Path of the Markov random walk (X_n, V_n), V_0 = 0."""

    x: np.ndarray   # (n+1, d)
    v: np.ndarray   # (n+1,)
    u: np.ndarray   # (n,) increments
    burn_in: int = 0

    @property
    def n_steps(self) -> int:
        return len(self.u)

    @property
    def ess(self) -> float:
        return ess_batch_means(self.u)

    def to_csv(self, path) -> None:
        d = self.x.shape[1]
        header = ",".join(["n"] + [f"x{i+1}" for i in range(d)] + ["v"])
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for n in range(len(self.v)):
                cols = [f"{n}"] + [f"{c:.17g}" for c in self.x[n]] \
                    + [f"{self.v[n]:.17g}"]
                fh.write(",".join(cols) + "\n")


@dataclass
class StationaryEstimate:
    """Histogram of the tilted direction chain and its drift."""

    grid: SphereGrid
    weights: np.ndarray         # (n_points,), sums to 1
    alpha: float
    alpha_se: float
    ess: float
    n_used: int

    def to_csv(self, path) -> None:
        d = self.grid.dimension
        header = ",".join([f"x{i+1}" for i in range(d)] + ["weight"])
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for p, w in zip(self.grid.points, self.weights):
                cols = [f"{c:.17g}" for c in p] + [f"{w:.17g}"]
                fh.write(",".join(cols) + "\n")


def estimate_pi_alpha(sampler: ShiftedStepSampler, n_steps: int,
                      rng: np.random.Generator,
                      burn_in: Optional[int] = None) -> StationaryEstimate:
    """Run the tilted chain and estimate its stationary law and drift.

    pi is the normalized occupation histogram on the grid after burn-in
    (default 10% of the trace, at least 1000 steps); alpha is the V-slope
    over the kept stretch with a batch-means standard error.
    """
    if burn_in is None:
        burn_in = max(1000, n_steps // 10)
    if burn_in >= n_steps:
        raise ValueError("burn_in must be shorter than the trace")
    if n_steps - burn_in < 10**4:
        raise ValueError("need at least 1e4 steps after burn-in")
    trace = sampler.run(sampler.grid.points[-1], n_steps, rng)
    trace.burn_in = burn_in
    grid = sampler.grid
    idx = grid.nearest_index(trace.x[burn_in:])
    counts = np.bincount(idx, minlength=grid.n_points).astype(float)
    weights = counts / counts.sum()
    kept = trace.u[burn_in:]
    alpha = float((trace.v[-1] - trace.v[burn_in]) / len(kept))
    se = batch_means_se(kept)
    if alpha <= 0 and -alpha > 3 * se:
        raise DriftSignError(
            f"drift estimate {alpha:.4g} is negative beyond 3 x se={se:.2g}: "
            "kappa or the eigenfunction is inconsistent with the model")
    return StationaryEstimate(grid=grid, weights=weights, alpha=alpha,
                              alpha_se=se, ess=ess_batch_means(kept),
                              n_used=len(kept))


def drift_integral(spec: ModelSpec, kappa: float, r: GridFunction,
                   pi: StationaryEstimate, n_mc: int,
                   rng: np.random.Generator):
    """Direct one-step drift formula: the pi-average of
    (1/r(x)) E |xM|^kappa log |xM| r((xM)~), with one M sample set shared
    across grid points.  Returns (value, standard error)."""
    grid = r.grid
    support = np.flatnonzero(pi.weights > 0)
    ms, _ = sample_pairs(spec, n_mc, rng)
    per_sample = np.zeros(n_mc)
    for j in support:
        x = grid.points[j]
        y = np.einsum("d,ide->ie", x, ms)
        norms = np.linalg.norm(y, axis=1)
        vals = norms**kappa * np.log(norms) * r.at(y / norms[:, None])
        per_sample += pi.weights[j] / r.values[j] * vals
    value = float(per_sample.mean())
    se = float(per_sample.std(ddof=1) / np.sqrt(n_mc))
    return value, se


@dataclass
class SupTailResult:
    """Survival of sup_{n>=1} |x Pi_n| under the original measure."""

    t_grid: np.ndarray
    survival: np.ndarray
    wilson_low: np.ndarray
    wilson_high: np.ndarray
    scaled: np.ndarray          # t^kappa * survival
    n_paths: int
    censored: int
    log_maxima: np.ndarray

    @property
    def censor_rate(self) -> float:
        return self.censored / self.n_paths


def sup_tail(spec: ModelSpec, kappa: float, x, t_grid, n_paths: int,
             rng: np.random.Generator, zeta: float = 20.0,
             window: int = 200, max_steps: int = 10**5) -> SupTailResult:
    """Estimate P(sup_{n>=1} |x Pi_n| > t) by direct path simulation.

    A path stops once its log-norm walk has dropped zeta below the running
    maximum and no new record occurred for `window` further steps; paths
    still running at max_steps are counted as censored (their maxima are
    kept, so censoring can only understate the tail).
    """
    x = project(x)
    d = spec.dimension
    t_grid = np.asarray(t_grid, dtype=float)
    dirs = np.tile(x, (n_paths, 1))
    logn = np.zeros(n_paths)
    runmax = np.full(n_paths, -np.inf)
    since = np.zeros(n_paths, dtype=int)
    active = np.ones(n_paths, dtype=bool)
    steps = 0
    while active.any() and steps < max_steps:
        steps += 1
        rows = np.flatnonzero(active)
        ms, _ = sample_pairs(spec, len(rows), rng)
        y = np.einsum("bd,bde->be", dirs[rows], ms)
        norms = np.linalg.norm(y, axis=1)
        dirs[rows] = y / norms[:, None]
        logn[rows] += np.log(norms)
        record = logn[rows] > runmax[rows]
        runmax[rows] = np.maximum(runmax[rows], logn[rows])
        since[rows] = np.where(record, 0, since[rows] + 1)
        stop = (runmax[rows] - logn[rows] >= zeta) & (since[rows] >= window)
        active[rows[stop]] = False
    censored = int(active.sum())
    log_t = np.log(t_grid)
    counts = (runmax[None, :] > log_t[:, None]).sum(axis=1)
    survival = counts / n_paths
    lo, hi = wilson_interval(counts, n_paths)
    return SupTailResult(t_grid=t_grid, survival=survival, wilson_low=lo,
                         wilson_high=hi, scaled=t_grid**kappa * survival,
                         n_paths=n_paths, censored=censored,
                         log_maxima=runmax)
