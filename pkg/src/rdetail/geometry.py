"""Unit-sphere discretization, interpolation, and numerically stable
accumulation of log |x M_1 ... M_n| along matrix products.

Grids are antipodally closed by construction: every point list is the
concatenation of a representative half and its exact floating-point
negation, so ``points[antipode[i]] == -points[i]`` bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .model import ModelSpec, sample_pairs

_SNAP = 1e-9  # interpolation snaps to a grid point within this weight


def project(x) -> np.ndarray:
    """x / |x|; rejects the zero vector."""
    x = np.asarray(x, dtype=float)
    n = float(np.linalg.norm(x))
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot project the zero (or non-finite) vector")
    return x / n


def project_rows(xs: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(xs, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot project zero rows")
    return xs / norms


@dataclass(frozen=True)
class SphereGrid:
    """Discretization of S^{d-1} with exact antipodal pairing.

    d=1: the two points {-1, +1}; d=2: uniform angular grid (even count);
    d=3: subdivided icosahedron vertices.
    """

    dimension: int
    points: np.ndarray          # (n, d), unit rows
    antipode: np.ndarray        # (n,) int, exact pairing
    resolution: int
    _tree: Optional[cKDTree] = None

    @property
    def n_points(self) -> int:
        return len(self.points)

    def nearest_index(self, xs: np.ndarray) -> np.ndarray:
        """Nearest grid point (angular = nearest Euclidean on the sphere)."""
        xs = np.atleast_2d(xs)
        if self.dimension == 1:
            return np.where(xs[:, 0] > 0, 1, 0)
        if self.dimension == 2:
            n = self.n_points
            ang = np.arctan2(xs[:, 1], xs[:, 0]) % (2 * np.pi)
            return np.rint(ang / (2 * np.pi / n)).astype(int) % n
        _, idx = self._tree.query(xs)
        return idx

    def angles(self) -> np.ndarray:
        if self.dimension != 2:
            raise ValueError("angles are defined for d=2 grids only")
        n = self.n_points
        return 2 * np.pi * np.arange(n) / n


def make_grid(dimension: int, resolution: int = 0) -> SphereGrid:
    """Build the default grid for dimension d (1, 2 or 3).

    resolution: d=2 number of angles (even, default 256); d=3 icosphere
    subdivision level (default 4, ~2562 vertices); ignored for d=1.
    """
    if dimension == 1:
        pts = np.array([[-1.0], [1.0]])
        return SphereGrid(1, pts, np.array([1, 0]), resolution=2)
    if dimension == 2:
        n = resolution or 256
        if n % 2 or n < 4:
            raise ValueError("d=2 grid resolution must be even and >= 4")
        half = n // 2
        theta = 2 * np.pi * np.arange(half) / n
        top = np.column_stack([np.cos(theta), np.sin(theta)])
        pts = np.vstack([top, -top])
        ant = np.concatenate([np.arange(half) + half, np.arange(half)])
        return SphereGrid(2, pts, ant, resolution=n)
    if dimension == 3:
        level = resolution or 4
        pts = _icosphere(level)
        half = len(pts)
        pts = np.vstack([pts, -pts])
        ant = np.concatenate([np.arange(half) + half, np.arange(half)])
        tree = cKDTree(pts)
        return SphereGrid(3, pts, ant, resolution=level, _tree=tree)
    raise ValueError("grids support d in {1, 2, 3}")


def _icosphere(level: int) -> np.ndarray:
    """Half of the vertex set of a subdivided icosahedron (one point per
    antipodal pair), unit-normalized."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key in cache:
                return cache[key]
            m = verts[i] + verts[j]
            m /= np.linalg.norm(m)
            verts.append(m)
            cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    pts = np.array(verts)
    # Keep one representative per antipodal pair (the icosahedron is
    # centrally symmetric, so pairs match exactly up to rounding).
    tree = cKDTree(pts)
    _, partner = tree.query(-pts)
    keep = np.arange(len(pts)) < partner
    return pts[keep]


@dataclass
class GridFunction:
    """Real values attached to the points of a SphereGrid."""

    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise ValueError("value count must match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")

    def __call__(self, x) -> float:
        return float(self.at(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def at(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized interpolation at unit rows xs."""
        return interpolate_many(self, xs)

    def symmetrized(self) -> "GridFunction":
        v = 0.5 * (self.values + self.values[self.grid.antipode])
        return GridFunction(self.grid, v)

    def to_csv(self, path) -> None:
        d = self.grid.dimension
        header = ",".join([f"x{i+1}" for i in range(d)] + ["value"])
        rows = np.column_stack([self.grid.points, self.values])
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @staticmethod
    def from_csv(path, grid: SphereGrid) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        pts, vals = data[:, :-1], data[:, -1]
        if pts.shape != grid.points.shape or not np.array_equal(
                pts, grid.points):
            raise ValueError("CSV points do not match the grid")
        return GridFunction(grid, vals)


def constant_function(grid: SphereGrid, value: float = 1.0) -> GridFunction:
    return GridFunction(grid, np.full(grid.n_points, float(value)))


def interpolate(f: GridFunction, x) -> float:
    """Evaluate f off-grid: exact lookup (d=1), linear in angle (d=2),
    inverse-angular-distance over the 3 nearest vertices (d=3).  Exact on
    grid points and on constants."""
    return f(x)


def interpolate_many(f: GridFunction, xs: np.ndarray) -> np.ndarray:
    xs = np.atleast_2d(xs)
    grid, vals = f.grid, f.values
    if grid.dimension == 1:
        return vals[np.where(xs[:, 0] > 0, 1, 0)]
    if grid.dimension == 2:
        n = grid.n_points
        step = 2 * np.pi / n
        ang = np.arctan2(xs[:, 1], xs[:, 0]) % (2 * np.pi)
        i = np.floor(ang / step).astype(int) % n
        frac = ang / step - i
        # snap to the nearer knot so grid points evaluate exactly
        roll = frac > 1 - _SNAP
        i = np.where(roll, (i + 1) % n, i)
        frac = np.where(roll | (frac < _SNAP), 0.0, frac)
        j = (i + 1) % n
        return vals[i] + frac * (vals[j] - vals[i])
    # d=3: weights 1/angle over the 3 nearest vertices
    dist, idx = grid._tree.query(xs, k=3)
    ang = 2.0 * np.arcsin(np.clip(dist / 2.0, 0.0, 1.0))
    exact = ang[:, 0] < _SNAP
    with np.errstate(divide="ignore"):
        w = 1.0 / ang
    w[exact] = 0.0
    w[exact, 0] = 1.0
    base = vals[idx[:, 0]]
    wsum = w.sum(axis=1)
    corr = ((vals[idx] - base[:, None]) * w).sum(axis=1) / wsum
    out = base + corr
    out[exact] = vals[idx[exact, 0]]
    return out


# ---------------------------------------------------------------------------
# Stabilized product accumulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductAccumulator:
    """Running direction and log |x Pi_n| of a left-multiplied matrix
    product, never forming the raw product."""

    direction: np.ndarray
    log_norm: float = 0.0
    steps: int = 0

    @staticmethod
    def start(x) -> "ProductAccumulator":
        return ProductAccumulator(direction=project(x))


def advance(acc: ProductAccumulator, m: np.ndarray) -> ProductAccumulator:
    """One step: direction <- (direction @ m)~, log_norm += log |direction @ m|."""
    y = acc.direction @ m
    norm = float(np.linalg.norm(y))
    if norm == 0.0 or not np.isfinite(norm):
        raise FloatingPointError(
            "|x M| vanished for an invertible M: numerical corruption")
    return ProductAccumulator(direction=y / norm,
                              log_norm=acc.log_norm + float(np.log(norm)),
                              steps=acc.steps + 1)


@dataclass(frozen=True)
class LyapunovEstimate:
    beta: float
    se: float
    n_steps: int
    n_chains: int
    per_chain: np.ndarray


def lyapunov(spec: ModelSpec, n_steps: int, n_chains: int,
             rng: np.random.Generator) -> LyapunovEstimate:
    """Estimate the top Lyapunov exponent as the mean slope of
    log |x Pi_n| over independent chains started at a fixed direction.

    |x Pi_n| and ||Pi_n|| differ by an n-independent factor under the
    standing assumptions, so the slopes share the same limit; the reported
    standard error is the across-chain spread only.
    """
    if n_steps < 10**3:
        raise ValueError("lyapunov needs n_steps >= 1e3")
    d = spec.dimension
    dirs = np.zeros((n_chains, d))
    dirs[:, 0] = 1.0
    logs = np.zeros(n_chains)
    block = 256
    done = 0
    while done < n_steps:
        todo = min(block, n_steps - done)
        ms, _ = sample_pairs(spec, n_chains * todo, rng)
        ms = ms.reshape(n_chains, todo, d, d)
        for t in range(todo):
            y = np.einsum("cd,cde->ce", dirs, ms[:, t])
            norms = np.linalg.norm(y, axis=1)
            logs += np.log(norms)
            dirs = y / norms[:, None]
        done += todo
    per_chain = logs / n_steps
    beta = float(per_chain.mean())
    se = float(per_chain.std(ddof=1) / np.sqrt(n_chains)) if n_chains > 1 else 0.0
    return LyapunovEstimate(beta=beta, se=se, n_steps=n_steps,
                            n_chains=n_chains, per_chain=per_chain)
