"""Stationary-solution simulation and tail cross-validation.

R = sum_{n>=1} Pi_{n-1} Q_n is sampled with scale-stabilized truncation;
its directional tails t^kappa P(xR > t) are compared on three independent
routes: the operator-solved kappa, a Hill estimate, and a log-log survival
slope, plus the renewal-formula constant
K0 = (1/(alpha kappa)) int (1/r(y)) E[((yR)+)^kappa - ((yMR)+)^kappa] pi(dy)
against the raw empirical tail level, per direction via K(x) = K0 r(x).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import GridFunction
from .model import ModelSpec, sample_pairs
from .util import wilson_interval


def q_scale(spec: ModelSpec) -> float:
    """A magnitude scale for |Q| used by the truncation rule."""
    q = spec.q
    if q.kind == "atoms":
        norms = np.linalg.norm(q.atoms, axis=1)
        if q.dependence == "matched":
            return float(np.sum(spec.m_weights * norms))
        return float(np.sum(q.weights * norms))
    return float(np.linalg.norm(q.mean) + q.sd * np.sqrt(spec.dimension))


@dataclass
class RSampleSet:
    """Independent draws of the stationary solution with truncation
    diagnostics; flagged samples hit the depth cap before the tolerance."""

    samples: np.ndarray          # (n, d)
    depths: np.ndarray           # (n,)
    residual_bounds: np.ndarray  # (n,) scale proxy x q scale at stop
    flagged: np.ndarray          # (n,) bool
    tol: float

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def mean_depth(self) -> float:
        return float(self.depths.mean())

    @property
    def n_flagged(self) -> int:
        return int(self.flagged.sum())


def sample_R(spec: ModelSpec, tol: float, n_samples: int,
             rng: np.random.Generator,
             pair_sampler: Optional[Callable] = None,
             max_depth: int = 20000, chunk: int = 65536) -> RSampleSet:
    """Draw n_samples independent copies of R = sum Pi_{n-1} Q_n.

    The running product is kept as a unit-Frobenius matrix with a separate
    log scale; a path stops once scale * q_scale <= tol * max(|acc|, q_scale)
    (the tail of the series is Pi_n times an independent copy of R, so the
    scale is the residual proxy).  Requires a negative Lyapunov exponent.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    draw = pair_sampler if pair_sampler is not None \
        else (lambda n, r: sample_pairs(spec, n, r))
    d = spec.dimension
    qs_scale = q_scale(spec)
    out = np.empty((n_samples, d))
    depths = np.empty(n_samples, dtype=int)
    bounds = np.empty(n_samples)
    flagged = np.zeros(n_samples, dtype=bool)
    log_tol = np.log(tol)
    for start in range(0, n_samples, chunk):
        b = min(chunk, n_samples - start)
        acc = np.zeros((b, d))
        prod = np.tile(np.eye(d), (b, 1, 1))
        log_s = np.zeros(b)
        active = np.ones(b, dtype=bool)
        depth = np.zeros(b, dtype=int)
        steps = 0
        while active.any():
            steps += 1
            rows = np.flatnonzero(active)
            ms, qv = draw(len(rows), rng)
            acc[rows] += np.exp(log_s[rows])[:, None] * \
                np.einsum("bij,bj->bi", prod[rows], qv)
            nxt = np.einsum("bij,bjk->bik", prod[rows], ms)
            norms = np.sqrt(np.einsum("bij,bij->b", nxt, nxt))
            prod[rows] = nxt / norms[:, None, None]
            log_s[rows] += np.log(norms)
            depth[rows] = steps
            acc_norm = np.linalg.norm(acc[rows], axis=1)
            floor = np.log(np.maximum(acc_norm, qs_scale))
            done = log_s[rows] + np.log(qs_scale) <= log_tol + floor
            if steps >= max_depth:
                flagged[start + rows] = True
                done = np.ones_like(done)
            active[rows[done]] = False
        out[start:start + b] = acc
        depths[start:start + b] = depth
        bounds[start:start + b] = np.exp(log_s) * qs_scale
    return RSampleSet(samples=out, depths=depths, residual_bounds=bounds,
                      flagged=flagged, tol=tol)


# ---------------------------------------------------------------------------
# Survival curves
# ---------------------------------------------------------------------------

@dataclass
class SurvivalCurves:
    directions: np.ndarray       # (k, d)
    t_grid: np.ndarray           # (k, nt) per-direction grids
    p_pos: np.ndarray            # (k, nt) P(xR > t)
    p_neg: np.ndarray            # (k, nt) P(-xR > t)
    p_abs: np.ndarray            # (k, nt) P(|xR| > t)
    wilson_pos: tuple            # (low, high) arrays for p_pos
    wilson_abs: tuple
    n_samples: int


def survival_curves(samples: RSampleSet, directions, t_grid
                    ) -> SurvivalCurves:
    """Empirical survival of xR, -xR and |xR| with Wilson 95% intervals.

    t_grid may be one shared grid (nt,) or per-direction grids (k, nt).
    The positive/negative split doubles as the tail-symmetry diagnostic:
    the limit constants agree when the eigenfunction symmetry argument
    applies, but that is reported, never assumed.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    proj = samples.samples @ dirs.T          # (n, k)
    n = samples.n_samples
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim == 1:
        t_grid = np.tile(t_grid, (len(dirs), 1))
    k, nt = t_grid.shape
    counts_pos = np.empty((k, nt))
    counts_neg = np.empty((k, nt))
    counts_abs = np.empty((k, nt))
    for j in range(k):
        xr = proj[:, j]
        srt_pos = np.sort(xr)
        srt_abs = np.sort(np.abs(xr))
        counts_pos[j] = n - np.searchsorted(srt_pos, t_grid[j], side="right")
        counts_neg[j] = np.searchsorted(srt_pos, -t_grid[j], side="left")
        counts_abs[j] = n - np.searchsorted(srt_abs, t_grid[j], side="right")
    wp = wilson_interval(counts_pos, n)
    wa = wilson_interval(counts_abs, n)
    return SurvivalCurves(directions=dirs, t_grid=t_grid,
                          p_pos=counts_pos / n, p_neg=counts_neg / n,
                          p_abs=counts_abs / n, wilson_pos=wp, wilson_abs=wa,
                          n_samples=n)


# ---------------------------------------------------------------------------
# Hill estimator
# ---------------------------------------------------------------------------

@dataclass
class HillTrace:
    k_values: np.ndarray
    estimates: np.ndarray        # tail-index estimates (reciprocal Hill)

    def at_fraction(self, frac: float, n_total: int) -> float:
        k = max(2, int(frac * n_total))
        i = int(np.argmin(np.abs(self.k_values - k)))
        return float(self.estimates[i])


def hill_estimate(values: np.ndarray, k_fractions) -> HillTrace:
    """Hill tail-index estimates over top-k order statistics, one per
    fraction, for plateau inspection.  values: the positive tail sample
    ((xR)+ for a direction, or |R|)."""
    pos = np.sort(values[values > 0])
    n = len(pos)
    if n < 10**4:
        raise ValueError("hill_estimate needs >= 1e4 positive samples")
    logs = np.log(pos)
    ks, est = [], []
    for frac in np.asarray(k_fractions, dtype=float):
        k = int(frac * len(values))
        if k < 2 or k >= n:
            raise ValueError(f"k fraction {frac} leaves too few exceedances")
        top = logs[n - k:]
        gamma = float(top.mean() - logs[n - k - 1])
        ks.append(k)
        est.append(1.0 / gamma)
    return HillTrace(k_values=np.array(ks), estimates=np.array(est))


# ---------------------------------------------------------------------------
# Renewal-formula constant
# ---------------------------------------------------------------------------

@dataclass
class GoldieEstimate:
    k0: float
    se_mc: float                 # pair-sampling layer
    se_pi: float                 # pi-histogram and drift propagation
    n_pairs: int
    per_point: np.ndarray        # (1/r(y)) E[bracket] over the pi support

    @property
    def se_total(self) -> float:
        return float(np.hypot(self.se_mc, self.se_pi))


def goldie_pair_terms(points: np.ndarray, r_values: np.ndarray,
                      kappa: float, r_samples: np.ndarray,
                      m_samples: np.ndarray, q_samples: np.ndarray
                      ) -> np.ndarray:
    """(n_pairs, n_points) array of
    [((y(M_iR_i+Q_i))+)^kappa - ((yM_iR_i)+)^kappa] / r(y): the renewal
    integrand before pi-averaging.  M_iR_i + Q_i is the recursion-coupled
    copy of R; sharing (M_i, Q_i, R_i) across both powers is what makes the
    difference integrable (each power alone has a tail of index one).
    Exposed separately so the assembly algebra can be unit-checked (e.g.
    with the M term zeroed the bracket collapses to ((yQ)+)^kappa)."""
    mr = np.einsum("bij,bj->bi", m_samples, r_samples)
    yr = (mr + q_samples) @ points.T        # (b, k)
    ymr = mr @ points.T
    bracket = np.maximum(yr, 0.0)**kappa - np.maximum(ymr, 0.0)**kappa
    return bracket / r_values[None, :]


def goldie_constant(samples: RSampleSet, spec: ModelSpec, kappa: float,
                    r: GridFunction, pi_weights: np.ndarray, alpha: float,
                    n_pairs: int, rng: np.random.Generator,
                    alpha_se: float = 0.0, pi_ess: Optional[float] = None,
                    chunk: int = 4096) -> GoldieEstimate:
    """K0 by the renewal formula, with fresh M's paired to independent R's.

    Errors are reported in two layers: the pair Monte Carlo (std of the
    pi-averaged per-pair terms) and the propagation of the pi histogram
    (multinomial delta method at its effective sample size) plus the drift.
    """
    grid = r.grid
    support = np.flatnonzero(pi_weights > 0)
    pts = grid.points[support]
    rv = r.values[support]
    pw = pi_weights[support]
    if n_pairs > samples.n_samples:
        raise ValueError("not enough R samples for the requested pairs")
    r_idx = rng.choice(samples.n_samples, size=n_pairs, replace=False)
    h = np.empty(n_pairs)
    t_sum = np.zeros(len(support))
    for start in range(0, n_pairs, chunk):
        take = r_idx[start:start + chunk]
        ms, qs = sample_pairs(spec, len(take), rng)
        terms = goldie_pair_terms(pts, rv, kappa, samples.samples[take],
                                  ms, qs)
        h[start:start + len(take)] = terms @ pw
        t_sum += terms.sum(axis=0)
    scale = 1.0 / (alpha * kappa)
    k0 = float(h.mean() * scale)
    se_mc = float(h.std(ddof=1) / np.sqrt(n_pairs) * scale)
    a = t_sum / n_pairs * scale
    ess = pi_ess if pi_ess is not None else float(len(h))
    var_pi = max(0.0, float(np.sum(pw * a**2) - np.sum(pw * a) ** 2)) / ess
    var_alpha = (k0 * alpha_se / alpha) ** 2 if alpha > 0 else 0.0
    se_pi = float(np.sqrt(var_pi + var_alpha))
    return GoldieEstimate(k0=k0, se_mc=se_mc, se_pi=se_pi, n_pairs=n_pairs,
                          per_point=a)


# ---------------------------------------------------------------------------
# Support growth
# ---------------------------------------------------------------------------

@dataclass
class SupportCheck:
    directions: np.ndarray
    max_small: np.ndarray
    max_large: np.ndarray
    verdict: bool                # True: consistent with unbounded support

    def to_dict(self) -> dict:
        return {
            "max_at_n": self.max_small.tolist(),
            "max_at_4n": self.max_large.tolist(),
            "consistent_with_unbounded": bool(self.verdict),
        }


def support_unbounded_check(small: np.ndarray, large: np.ndarray,
                            directions) -> SupportCheck:
    """Compare per-direction maxima of xR at sample sizes n and ~4n; strict
    growth along every probed direction is the unbounded-support verdict."""
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if len(large) < 2 * len(small):
        raise ValueError("large sample should be at least twice the small")
    ms = (small @ dirs.T).max(axis=0)
    ml = (large @ dirs.T).max(axis=0)
    return SupportCheck(directions=dirs, max_small=ms, max_large=ml,
                        verdict=bool(np.all(ml > ms)))


# ---------------------------------------------------------------------------
# Assembled report
# ---------------------------------------------------------------------------

@dataclass
class DirectionReadout:
    direction: np.ndarray
    t_low: float
    t_high: float
    has_tail_mass: bool
    level_onesided: float        # median t^k P(xR > t) over the window
    level_abs_half: float        # median t^k P(|xR| > t) / 2
    k_predicted: float           # K0 * r(x)
    flatness: float              # max/min - 1 of t^k P(|xR| > t)
    slope_kappa: float           # -d log P(|xR| > t) / d log t
    wilson_low_at_top: float
    k0_agreement: Optional[float]  # |level - K0 r| / level where defined


@dataclass
class TailReport:
    kappa: float
    directions: np.ndarray
    readouts: list
    hill_fractions: np.ndarray
    hill_pooled: HillTrace
    hill_registered: float       # pooled |R| estimate at the top-1% fraction
    slope_median: float
    k0: GoldieEstimate
    triangle: dict               # pairwise kappa-route differences
    support: SupportCheck
    n_samples: int
    seed_note: str = ""

    @property
    def triangle_max_diff(self) -> float:
        return max(self.triangle.values())

    def to_json_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "n_samples": self.n_samples,
            "hill_registered": self.hill_registered,
            "hill_trace": {
                "k": self.hill_pooled.k_values.tolist(),
                "estimate": self.hill_pooled.estimates.tolist(),
            },
            "slope_median": self.slope_median,
            "k0": {"value": self.k0.k0, "se_mc": self.k0.se_mc,
                   "se_pi": self.k0.se_pi, "n_pairs": self.k0.n_pairs},
            "triangle": self.triangle,
            "support": self.support.to_dict(),
            "directions": [
                {
                    "direction": ro.direction.tolist(),
                    "window": [ro.t_low, ro.t_high],
                    "has_tail_mass": ro.has_tail_mass,
                    "level_onesided": ro.level_onesided,
                    "level_abs_half": ro.level_abs_half,
                    "k_predicted": ro.k_predicted,
                    "flatness": ro.flatness,
                    "slope_kappa": ro.slope_kappa,
                    "wilson_low_at_top": ro.wilson_low_at_top,
                    "k0_agreement": ro.k0_agreement,
                }
                for ro in self.readouts
            ],
        }


def default_directions(grid, rng: np.random.Generator, n_random: int = 8
                       ) -> np.ndarray:
    """The 2d signed coordinate directions plus n_random grid points."""
    d = grid.dimension
    dirs = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        dirs += [e, -e]
    if d > 1 and n_random > 0:
        idx = rng.choice(grid.n_points, size=n_random, replace=False)
        dirs += [grid.points[i] for i in idx]
    uniq = []
    for v in dirs:
        if not any(np.allclose(v, u) for u in uniq):
            uniq.append(v)
    return np.array(uniq)


HILL_REGISTERED_FRACTION = 0.01   # pre-registered top fraction
WINDOW_QUANTILES = (0.99, 0.9999)  # calibrated tail window


def build_tail_report(spec: ModelSpec, solution, pi, samples: RSampleSet,
                      directions, rng: np.random.Generator,
                      n_pairs: int = 100000, t_points: int = 12,
                      hill_fractions=(0.02, 0.01, 0.005, 0.002)
                      ) -> TailReport:
    """Assemble the full tail cross-validation.

    Per direction, the tail window is [q(0.99), q(0.9999)] of |xR| (below
    it pre-asymptotics bite, above it the intervals blow up); levels,
    flatness and slope are read inside the window.  The one-sided level
    t^kappa P(xR > t) is the direct probe of the limit; the |xR|/2 variant
    is reported alongside and coincides when the tail is two-sided
    symmetric.  Directions whose one-sided tail carries no mass in the
    window are excluded from the constant-agreement verdict.
    """
    kappa = solution.kappa
    r = solution.r
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    n = samples.n_samples
    proj = samples.samples @ dirs.T
    k = len(dirs)
    t_grids = np.empty((k, t_points))
    for j in range(k):
        absx = np.abs(proj[:, j])
        lo = np.quantile(absx, WINDOW_QUANTILES[0])
        hi = np.quantile(absx, WINDOW_QUANTILES[1])
        if not 0 < lo < hi:
            raise ValueError("degenerate tail window; need more samples")
        t_grids[j] = np.geomspace(lo, hi, t_points)
    curves = survival_curves(samples, dirs, t_grids)

    k0 = goldie_constant(
        samples, spec, kappa, r, pi.weights, pi.alpha,
        n_pairs=min(n_pairs, n), rng=rng, alpha_se=pi.alpha_se,
        pi_ess=pi.ess)

    readouts = []
    slopes = []
    for j in range(k):
        t = t_grids[j]
        scaled_abs = t**kappa * curves.p_abs[j]
        scaled_pos = t**kappa * curves.p_pos[j]
        has_mass = bool(np.all(curves.p_pos[j] > 0))
        level_one = float(np.median(scaled_pos)) if has_mass else 0.0
        level_half = float(np.median(scaled_abs) / 2.0)
        pred = k0.k0 * float(r.at(dirs[j][None, :])[0])
        flat = float(scaled_abs.max() / scaled_abs.min() - 1.0) \
            if scaled_abs.min() > 0 else float("inf")
        slope = -float(np.polyfit(np.log(t), np.log(curves.p_abs[j]), 1)[0]) \
            if curves.p_abs[j].min() > 0 else float("nan")
        slopes.append(slope)
        agreement = abs(level_one - pred) / level_one if has_mass and \
            level_one > 0 else None
        readouts.append(DirectionReadout(
            direction=dirs[j], t_low=float(t[0]), t_high=float(t[-1]),
            has_tail_mass=has_mass, level_onesided=level_one,
            level_abs_half=level_half, k_predicted=pred, flatness=flat,
            slope_kappa=slope,
            wilson_low_at_top=float(curves.wilson_pos[0][j, -1]),
            k0_agreement=agreement))

    hill_pooled = hill_estimate(np.linalg.norm(samples.samples, axis=1),
                                hill_fractions)
    hill_reg = hill_pooled.at_fraction(HILL_REGISTERED_FRACTION, n)
    slope_med = float(np.nanmedian(slopes))
    triangle = {
        "operator_vs_hill": abs(kappa - hill_reg),
        "operator_vs_slope": abs(kappa - slope_med),
        "hill_vs_slope": abs(hill_reg - slope_med),
    }
    half = len(samples.samples) // 4
    support = support_unbounded_check(samples.samples[:half],
                                      samples.samples, dirs)
    return TailReport(kappa=kappa, directions=dirs, readouts=readouts,
                      hill_fractions=np.asarray(hill_fractions),
                      hill_pooled=hill_pooled, hill_registered=hill_reg,
                      slope_median=slope_med, k0=k0, triangle=triangle,
                      support=support, n_samples=n)
