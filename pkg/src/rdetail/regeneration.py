"""Athreya-Ney split chain for the direction chain on the sphere.

Minorization data (regeneration set, coin probability p, measure phi) is an
input, never inferred: computing it from an arbitrary kernel is out of
numerical reach.  Two presets are built in: the exact two-state overlap for
one-dimensional tabulated kernels, and a conservative density-floor bound
for the gaussian_perturbed base kernel on a ball.  The caller must supply
data valid for the kernel actually run (base or tilted); the diagnostics
here are what certify a configuration empirically.

Coins are i.i.d. Bernoulli(p), tossed at every step and consulted at visits
to the regeneration set: on heads the next state is redrawn from phi, on
tails from the residual kernel (P(x,.) - p phi)/(1-p).  The walk increment
at a redrawn step comes from the original conditional law of log |xM| given
the realized destination, so (X_n, V_n) stays a faithful Markov random walk.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as sps
from scipy.special import erf

from .geometry import GridFunction, SphereGrid, project
from .model import ModelSpec, sample_pairs
from .shifted import ShiftedStepSampler


class MinorizationError(ValueError):
    """Inconsistent or unsupported minorization data."""


class ResidualSamplerError(RuntimeError):
    """Residual accept-reject budget exhausted."""


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

class BaseKernel:
    """One-step direction kernel x -> (x M)~ under the original measure."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec

    def sample(self, x: np.ndarray, rng: np.random.Generator):
        ms, _ = sample_pairs(self.spec, 1, rng)
        y = x @ ms[0]
        norm = float(np.linalg.norm(y))
        return y / norm, float(np.log(norm))

    def atoms(self, x: np.ndarray):
        """(directions, log norms, probabilities) or None."""
        spec = self.spec
        if not spec.is_tabulated():
            return None
        y = np.einsum("d,kde->ke", x, spec.m_atoms)
        norms = np.linalg.norm(y, axis=1)
        return y / norms[:, None], np.log(norms), spec.m_weights.copy()

    def direction_density(self, x: np.ndarray, u: np.ndarray):
        """Density of the next direction w.r.t. the uniform law on S, for
        the unconditioned gaussian_perturbed kernel (closed form via the
        radial integral of the Gaussian of xM)."""
        spec = self.spec
        if spec.family != "gaussian_perturbed":
            return None
        return _gaussian_direction_density(x @ spec.gamma0, spec.sigma,
                                           np.atleast_2d(u))

    def conditional_u(self, x: np.ndarray, y: np.ndarray,
                      rng: np.random.Generator) -> float:
        """Draw log |xM| given that the realized direction is y."""
        spec = self.spec
        if spec.is_tabulated():
            dirs, lognorms, probs = self.atoms(x)
            return _match_atom_u(dirs, lognorms, probs, y, rng)
        if spec.family == "gaussian_perturbed":
            a = float(y @ (x @ spec.gamma0))
            s = _radial_sample(a, spec.sigma, spec.dimension, rng)
            return float(np.log(s))
        raise MinorizationError(
            f"no conditional increment sampler for family {spec.family!r}")


class ShiftedKernel:
    """One-step direction kernel under the kappa-tilted measure."""

    def __init__(self, sampler: ShiftedStepSampler):
        self.sampler = sampler
        self.spec = sampler.spec

    def sample(self, x: np.ndarray, rng: np.random.Generator):
        return self.sampler.step(x, rng)

    def atoms(self, x: np.ndarray):
        if not self.spec.is_tabulated():
            return None
        probs, dirs, lognorms = self.sampler.atom_tilt(x)
        return dirs, lognorms, probs

    def direction_density(self, x, u):
        return None

    def conditional_u(self, x: np.ndarray, y: np.ndarray,
                      rng: np.random.Generator) -> float:
        if self.spec.is_tabulated():
            dirs, lognorms, probs = self.atoms(x)
            return _match_atom_u(dirs, lognorms, probs, y, rng)
        raise MinorizationError(
            "tilted conditional increments are only available for "
            "tabulated families")


def _match_atom_u(dirs, lognorms, probs, y, rng, tol=1e-9) -> float:
    hit = np.flatnonzero(np.linalg.norm(dirs - y, axis=1) < tol)
    if len(hit) == 0:
        raise MinorizationError(
            "phi puts mass on a direction the kernel cannot reach")
    w = probs[hit]
    k = hit[rng.choice(len(hit), p=w / w.sum())] if len(hit) > 1 else hit[0]
    return float(lognorms[k])


def _gaussian_direction_density(m: np.ndarray, sigma: float,
                                u: np.ndarray) -> np.ndarray:
    """|S^{d-1}| * int_0^inf s^{d-1} N(su; m, sigma^2 I) ds for unit rows u."""
    d = len(m)
    a = u @ m
    m2 = float(m @ m)
    i0 = sigma * np.sqrt(np.pi / 2.0) * (1.0 + erf(a / (sigma * np.sqrt(2.0))))
    gauss = np.exp(-(a**2) / (2 * sigma**2))
    if d == 2:
        radial = sigma**2 * gauss + a * i0
        surface = 2 * np.pi
    elif d == 3:
        radial = sigma**2 * a * gauss + (sigma**2 + a**2) * i0
        surface = 4 * np.pi
    else:
        raise MinorizationError("gaussian direction density needs d in {2,3}")
    pref = (2 * np.pi * sigma**2) ** (-d / 2.0) \
        * np.exp(-(m2 - a**2) / (2 * sigma**2))
    return surface * pref * radial


def _radial_sample(a: float, sigma: float, d: int,
                   rng: np.random.Generator, budget: int = 10000) -> float:
    """Draw s > 0 with density ~ s^{d-1} exp(-(s-a)^2 / (2 sigma^2))."""
    s_max = max(a, 0.0) + 8.0 * sigma
    for _ in range(budget):
        s = rng.normal(a, sigma)
        if s <= 0:
            continue
        if rng.random() <= (min(s, s_max) / s_max) ** (d - 1):
            return s
    raise ResidualSamplerError("radial sampler budget exhausted")


# ---------------------------------------------------------------------------
# Minorization data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhiAtoms:
    """Atomic minorizing measure (covers tabulated and whole-grid cases)."""

    points: np.ndarray   # (k, d)
    weights: np.ndarray

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.points[rng.choice(len(self.weights), p=self.weights)]


@dataclass(frozen=True)
class PhiBallUniform:
    """Uniform law on the angular ball of radius delta around center."""

    center: np.ndarray
    delta: float

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        d = len(self.center)
        if d == 2:
            base = np.arctan2(self.center[1], self.center[0])
            ang = base + rng.uniform(-self.delta, self.delta)
            return np.array([np.cos(ang), np.sin(ang)])
        if d == 3:
            cos_t = rng.uniform(np.cos(self.delta), 1.0)
            sin_t = np.sqrt(1.0 - cos_t**2)
            phi = rng.uniform(0.0, 2 * np.pi)
            local = np.array([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t])
            return _rotate_from_pole(local, self.center)
        raise MinorizationError("ball-uniform phi needs d in {2, 3}")

    def density(self, y: np.ndarray) -> float:
        """Density w.r.t. the uniform probability law on the sphere."""
        d = len(self.center)
        ang = _angle(y, self.center)
        if ang > self.delta:
            return 0.0
        return 1.0 / _cap_fraction(d, self.delta)


def _rotate_from_pole(v: np.ndarray, target: np.ndarray) -> np.ndarray:
    pole = np.array([0.0, 0.0, 1.0])
    if np.allclose(target, pole):
        return v
    if np.allclose(target, -pole):
        return -v
    axis = np.cross(pole, target)
    axis /= np.linalg.norm(axis)
    cos_a = float(pole @ target)
    sin_a = np.sqrt(max(0.0, 1.0 - cos_a**2))
    return (v * cos_a + np.cross(axis, v) * sin_a
            + axis * (axis @ v) * (1.0 - cos_a))


def _angle(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.arccos(np.clip(x @ y, -1.0, 1.0)))


def _cap_fraction(d: int, delta: float) -> float:
    """Uniform-measure mass of an angular ball of radius delta."""
    if d == 1:
        return 0.5
    if d == 2:
        return delta / np.pi
    if d == 3:
        return (1.0 - np.cos(delta)) / 2.0
    raise MinorizationError("cap fraction needs d in {1, 2, 3}")


@dataclass(frozen=True)
class MinorizationSpec:
    """Regeneration configuration: inf_{x in region} P(x, .) >= p * phi.

    region: ("sphere",) or ("ball", center, delta); p in (0, 1], with p = 1
    only sensible when phi equals the kernel itself (degenerate Doeblin
    case).  phi must be supported inside the region.
    """

    region: tuple
    p: float
    phi: object  # PhiAtoms | PhiBallUniform
    ar_budget: int = 10000

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise MinorizationError("p must lie in (0, 1]")
        if self.region[0] not in ("sphere", "ball"):
            raise MinorizationError(f"unknown region {self.region[0]!r}")
        if self.region[0] == "ball":
            _, center, delta = self.region
            if not 0 < delta <= np.pi:
                raise MinorizationError("ball radius must lie in (0, pi]")
            if isinstance(self.phi, PhiAtoms):
                for pt in self.phi.points:
                    if _angle(pt, center) > delta + 1e-12:
                        raise MinorizationError(
                            "phi atom outside the regeneration set")
            elif isinstance(self.phi, PhiBallUniform):
                if _angle(self.phi.center, center) + self.phi.delta \
                        > delta + 1e-12:
                    raise MinorizationError(
                        "phi ball is not contained in the regeneration set")

    def contains(self, x: np.ndarray) -> bool:
        if self.region[0] == "sphere":
            return True
        _, center, delta = self.region
        if len(center) == 1:
            return bool(x[0] * center[0] > 0)
        return _angle(x, center) <= delta


def whole_sphere_overlap(kernel, p: Optional[float] = None
                         ) -> MinorizationSpec:
    """Exact Doeblin data for a one-dimensional tabulated kernel: the
    componentwise minimum of the two transition rows."""
    plus, minus = np.array([1.0]), np.array([-1.0])
    rows = []
    for x in (plus, minus):
        out = kernel.atoms(x)
        if out is None:
            raise MinorizationError(
                "whole-sphere overlap needs a tabulated kernel")
        dirs, _, probs = out
        if dirs.shape[1] != 1:
            raise MinorizationError("whole-sphere overlap supports d=1 only")
        stay = float(probs[dirs[:, 0] * x[0] > 0].sum())
        rows.append({1.0 if x[0] > 0 else -1.0: stay,
                     -1.0 if x[0] > 0 else 1.0: 1.0 - stay})
    nu = {s: min(rows[0][s], rows[1][s]) for s in (1.0, -1.0)}
    p_max = nu[1.0] + nu[-1.0]
    if p_max <= 0:
        raise MinorizationError(
            "transition rows do not overlap: no whole-sphere minorization")
    if p is None:
        p = 0.5 * p_max
    if p > p_max + 1e-12:
        raise MinorizationError(
            f"requested p={p:g} exceeds the overlap mass {p_max:g}")
    phi = PhiAtoms(points=np.array([[1.0], [-1.0]]),
                   weights=np.array([nu[1.0], nu[-1.0]]) / p_max)
    return MinorizationSpec(region=("sphere",), p=float(p), phi=phi)


def gaussian_floor_preset(spec: ModelSpec, center=None, delta: float = 0.2,
                          whole_sphere: bool = False, p_scale: float = 0.5,
                          rng=None, rej_probe: int = 20000
                          ) -> MinorizationSpec:
    """Conservative (p, phi) for the gaussian_perturbed base kernel.

    The direction density of x -> (xM)~ is bounded below, uniformly over x
    and the target direction, by a floor computed from the closed-form
    radial integral; p is that floor times the uniform mass of the phi ball
    (scaled by p_scale for safety).  whole_sphere=True uses the same floor
    as a Doeblin bound with phi uniform on all of S, which regenerates much
    more often.  Valid for the unconditioned kernel: the preset refuses
    specs whose condition-number rejection rate is not negligible.
    """
    if spec.family != "gaussian_perturbed":
        raise MinorizationError("preset applies to gaussian_perturbed only")
    d = spec.dimension
    if center is None:
        center = np.zeros(d)
        center[0] = 1.0
    center = project(np.asarray(center, dtype=float))
    if rng is not None:
        from .model import SampleStats

        st = SampleStats()
        sample_pairs(spec, rej_probe, rng, stats=st)
        if st.rejection_rate > 1e-3:
            raise MinorizationError(
                f"condition-cap rejection rate {st.rejection_rate:.2g} is "
                "not negligible: the density-floor bound does not apply")
    svals = np.linalg.svd(spec.gamma0, compute_uv=False)
    t_lo, t_hi = float(svals[-1]), float(svals[0])
    floor = np.inf
    for t in np.linspace(t_lo, t_hi, 64):
        m = np.zeros(d)
        m[0] = t
        uu = np.zeros((64, d))
        ang = np.linspace(0.0, np.pi, 64)
        uu[:, 0] = np.cos(ang)
        uu[:, 1] = np.sin(ang)
        dens = _gaussian_direction_density(m, spec.sigma, uu)
        floor = min(floor, float(dens.min()))
    if not floor > 0:
        raise MinorizationError("density floor is not positive")
    if whole_sphere:
        phi = PhiBallUniform(center=center, delta=float(np.pi))
        return MinorizationSpec(region=("sphere",),
                                p=float(p_scale * floor), phi=phi)
    p = p_scale * floor * _cap_fraction(d, delta)
    phi = PhiBallUniform(center=center, delta=delta)
    return MinorizationSpec(region=("ball", center, delta), p=float(p),
                            phi=phi)


# ---------------------------------------------------------------------------
# Split-chain runner
# ---------------------------------------------------------------------------

@dataclass
class RegenTrace:
    """Split-chain path with its regeneration bookkeeping.

    coins[j] is the Bernoulli(p) outcome J_j (tossed at every step, consulted
    when X_j is in the regeneration set); epoch k means X_{k-1} was in the
    set with J_{k-1} = 1, so X_k was redrawn from phi.
    """

    x: np.ndarray          # (n+1, d)
    v: np.ndarray          # (n+1,)
    u: np.ndarray          # (n,)
    coins: np.ndarray      # (n,) int8
    in_region: np.ndarray  # (n,) bool, at indices 0..n-1
    epochs: np.ndarray     # strictly increasing epoch indices

    @property
    def n_cycles(self) -> int:
        return max(0, len(self.epochs) - 1)

    def cycle_lengths(self) -> np.ndarray:
        return np.diff(self.epochs)

    def cycle_v_increments(self) -> np.ndarray:
        return np.diff(self.v[self.epochs])

    def regeneration_states(self) -> np.ndarray:
        return self.x[self.epochs]

    def regeneration_increments(self) -> np.ndarray:
        """U at the epochs: log |X_{sigma-1} M_sigma|."""
        return self.u[self.epochs - 1]

    def return_times(self) -> np.ndarray:
        visits = np.flatnonzero(self.in_region)
        return np.diff(visits)

    def to_csv(self, path) -> None:
        d = self.x.shape[1]
        epoch_set = set(int(e) for e in self.epochs)
        header = ",".join(["n"] + [f"x{i+1}" for i in range(d)]
                          + ["v", "coin", "cycle_boundary"])
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for n in range(len(self.v)):
                coin = self.coins[n] if n < len(self.coins) else -1
                cols = [f"{n}"] + [f"{c:.17g}" for c in self.x[n]] \
                    + [f"{self.v[n]:.17g}", f"{coin}",
                       "1" if n in epoch_set else "0"]
                fh.write(",".join(cols) + "\n")


def run_split_chain(kernel, minor: MinorizationSpec, n_steps: int, x0,
                    rng: np.random.Generator,
                    split_mode: str = "full") -> RegenTrace:
    """Run the split chain for n_steps transitions from x0.

    split_mode "full" is the Athreya-Ney construction; "broken_no_residual"
    keeps the coin bookkeeping but always advances with the raw kernel (a
    deliberate negative control that must fail the phi diagnostics).
    """
    if split_mode not in ("full", "broken_no_residual"):
        raise ValueError(f"unknown split_mode {split_mode!r}")
    x = project(x0)
    d = len(x)
    xs = np.empty((n_steps + 1, d))
    xs[0] = x
    u = np.empty(n_steps)
    coins = np.full(n_steps, -1, dtype=np.int8)
    in_region = np.zeros(n_steps, dtype=bool)
    epochs = []
    for k in range(n_steps):
        coin = 1 if rng.random() < minor.p else 0
        coins[k] = coin
        if minor.contains(x):
            in_region[k] = True
            if split_mode == "full":
                if coin == 1:
                    y = minor.phi.sample(rng)
                    u_k = kernel.conditional_u(x, y, rng)
                    x, u[k] = y, u_k
                    epochs.append(k + 1)
                else:
                    x, u[k] = _residual_draw(kernel, minor, x, rng)
                xs[k + 1] = x
                continue
            if coin == 1:
                epochs.append(k + 1)
        x, u[k] = kernel.sample(x, rng)
        xs[k + 1] = x
    v = np.concatenate([[0.0], np.cumsum(u)])
    return RegenTrace(x=xs, v=v, u=u, coins=coins, in_region=in_region,
                      epochs=np.array(epochs, dtype=int))


def _residual_draw(kernel, minor: MinorizationSpec, x, rng):
    """One draw from (P(x,.) - p phi) / (1 - p)."""
    p = minor.p
    if p >= 1.0:
        raise MinorizationError("residual kernel is undefined at p = 1")
    out = kernel.atoms(x)
    if out is not None and isinstance(minor.phi, PhiAtoms):
        dirs, lognorms, probs = out
        resid = probs.astype(float).copy()
        for pt, w in zip(minor.phi.points, minor.phi.weights):
            hit = np.flatnonzero(np.linalg.norm(dirs - pt, axis=1) < 1e-9)
            if len(hit) == 0:
                if w > 0:
                    raise MinorizationError(
                        "phi puts mass outside the kernel's atoms")
                continue
            take = p * w
            avail = resid[hit].sum()
            if take > avail + 1e-12:
                raise MinorizationError(
                    f"minorization violated: p*phi mass {take:g} exceeds "
                    f"kernel mass {avail:g} at an atom")
            resid[hit] -= take * resid[hit] / avail
        resid = np.clip(resid, 0.0, None)
        resid /= resid.sum()
        k = rng.choice(len(resid), p=resid)
        return dirs[k], float(lognorms[k])
    if isinstance(minor.phi, PhiBallUniform):
        for _ in range(minor.ar_budget):
            y, u = kernel.sample(x, rng)
            f = kernel.direction_density(x, y)
            if f is None:
                raise MinorizationError(
                    "accept-reject residual needs a kernel density")
            accept = 1.0 - p * minor.phi.density(y) / float(f[0])
            if accept < -1e-9:
                raise MinorizationError(
                    "minorization violated: p*phi exceeds the kernel density")
            if rng.random() <= max(accept, 0.0):
                return y, u
        raise ResidualSamplerError(
            f"residual accept-reject budget {minor.ar_budget} exhausted")
    raise MinorizationError(
        "no residual sampler for this kernel/phi combination")


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass
class RegenDiagnostics:
    n_cycles: int
    ks_halves: float
    ks_halves_critical: float
    lag1_autocorr: float
    lag1_bound: float
    phi_stat: float
    phi_threshold: float
    phi_kind: str
    phi_pass: bool
    return_geom_rate: Optional[float]
    return_geom_r2: Optional[float]

    @property
    def all_pass(self) -> bool:
        return (self.ks_halves < self.ks_halves_critical
                and abs(self.lag1_autocorr) < self.lag1_bound
                and self.phi_pass)

    def to_dict(self) -> dict:
        return {
            "n_cycles": self.n_cycles,
            "cycle_length_ks_halves": {
                "statistic": self.ks_halves,
                "critical_1pct": self.ks_halves_critical},
            "cycle_length_lag1_autocorr": {
                "value": self.lag1_autocorr, "bound": self.lag1_bound},
            "phi_check": {"kind": self.phi_kind, "statistic": self.phi_stat,
                          "threshold_1pct": self.phi_threshold,
                          "pass": self.phi_pass},
            "return_time_geometric_fit": {
                "rate": self.return_geom_rate, "r2": self.return_geom_r2},
            "all_pass": self.all_pass,
        }


def validate_regeneration(trace: RegenTrace, minor: MinorizationSpec,
                          rng: np.random.Generator) -> RegenDiagnostics:
    """Check the regenerative structure of a split-chain trace: cycle
    lengths stationary (first vs second half) and uncorrelated, regeneration
    states distributed like phi, return times geometrically bounded."""
    lengths = trace.cycle_lengths()
    n = len(lengths)
    if n < 200:
        raise ValueError("need at least 200 complete cycles")
    half = n // 2
    ks = sps.ks_2samp(lengths[:half], lengths[half:], method="asymp")
    ks_crit = _ks_crit(half, n - half)
    a, b = lengths[:-1] - lengths.mean(), lengths[1:] - lengths.mean()
    denom = float(np.sum((lengths - lengths.mean()) ** 2))
    rho1 = float(np.sum(a * b) / denom) if denom > 0 else 0.0
    bound = 3.0 / np.sqrt(n)

    states = trace.regeneration_states()[1:]  # zero-delayed: skip the first
    kind, stat, thresh, ok = _phi_check(states, minor.phi, rng)

    rate, r2 = _geometric_fit(trace.return_times())
    return RegenDiagnostics(
        n_cycles=n, ks_halves=float(ks.statistic), ks_halves_critical=ks_crit,
        lag1_autocorr=rho1, lag1_bound=bound, phi_stat=stat,
        phi_threshold=thresh, phi_kind=kind, phi_pass=ok,
        return_geom_rate=rate, return_geom_r2=r2)


def _ks_crit(n: int, m: int, alpha: float = 0.01) -> float:
    c = np.sqrt(-0.5 * np.log(alpha / 2.0))
    return float(c * np.sqrt((n + m) / (n * m)))


def _phi_check(states: np.ndarray, phi, rng: np.random.Generator):
    n = len(states)
    if isinstance(phi, PhiAtoms):
        counts = np.zeros(len(phi.weights))
        miss = 0
        for s in states:
            hit = np.flatnonzero(np.linalg.norm(phi.points - s, axis=1) < 1e-9)
            if len(hit) == 0:
                miss += 1
            else:
                counts[hit[0]] += 1
        live = phi.weights > 0
        if miss or np.any(counts[~live] > 0):
            return "chi_square_atoms", float("inf"), 0.0, False
        expected = phi.weights[live] * n
        dof = int(live.sum()) - 1
        if dof <= 0:
            return "chi_square_atoms", 0.0, 0.0, True
        stat = float(np.sum((counts[live] - expected) ** 2 / expected))
        thresh = float(sps.chi2.ppf(0.99, dof))
        return "chi_square_atoms", stat, thresh, stat < thresh
    if isinstance(phi, PhiBallUniform):
        ang = np.array([_angle(s, phi.center) for s in states])
        if np.any(ang > phi.delta + 1e-9):
            return "ks_cap_radius", float("inf"), 0.0, False
        d = len(phi.center)
        if d == 2:
            uniform = ang / phi.delta
        else:
            uniform = (1.0 - np.cos(ang)) / (1.0 - np.cos(phi.delta))
        res = sps.kstest(uniform, "uniform")
        crit = float(np.sqrt(-0.5 * np.log(0.005)) / np.sqrt(n))
        return "ks_cap_radius", float(res.statistic), crit, \
            float(res.statistic) < crit
    raise MinorizationError("unknown phi kind")


def _geometric_fit(return_times: np.ndarray):
    if len(return_times) < 10:
        return None, None
    vals, counts = np.unique(return_times, return_counts=True)
    surv = 1.0 - np.cumsum(counts) / counts.sum()
    keep = surv > 0
    if keep.sum() < 3:
        return None, None
    xk = vals[keep].astype(float)
    yk = np.log(surv[keep])
    slope, intercept = np.polyfit(xk, yk, 1)
    pred = slope * xk + intercept
    ss_res = float(np.sum((yk - pred) ** 2))
    ss_tot = float(np.sum((yk - yk.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), r2


def regeneration_increment_bounds(trace: RegenTrace):
    """Observed range of the walk increment at regeneration epochs, with the
    running extremes (they must stabilize when the minorization has compact
    support)."""
    if trace.n_cycles < 100:
        raise ValueError("need at least 100 cycles")
    u = trace.regeneration_increments()
    running_min = np.minimum.accumulate(u)
    running_max = np.maximum.accumulate(u)
    return float(u.min()), float(u.max()), running_min, running_max


def occupation_from_cycles(trace: RegenTrace, grid: SphereGrid):
    """Renewal-reward occupation estimate: bin masses as ratio-of-means over
    complete cycles, with delta-method standard errors per bin."""
    n_cyc = trace.n_cycles
    if n_cyc < 2:
        raise ValueError("need at least 2 complete cycles")
    idx = grid.nearest_index(trace.x)
    counts = np.zeros((n_cyc, grid.n_points))
    lengths = trace.cycle_lengths().astype(float)
    for j in range(n_cyc):
        lo, hi = trace.epochs[j], trace.epochs[j + 1]
        counts[j] = np.bincount(idx[lo:hi], minlength=grid.n_points)
    total = lengths.sum()
    weights = counts.sum(axis=0) / total
    resid = counts - np.outer(lengths, weights)
    se = np.sqrt((resid**2).sum(axis=0) / n_cyc) / (total / n_cyc) \
        / np.sqrt(n_cyc)
    return weights, se
