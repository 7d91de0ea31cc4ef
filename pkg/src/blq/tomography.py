"""X-ray and k-plane transforms on grids, with reverse L^p lower bounds.

The Grassmannian of lines (or k-planes) is parametrized by a direction (or
orthonormal frame) and an offset in its orthogonal complement, carrying the
product of a probability measure on directions with Lebesgue measure on
offsets.  With that normalization the transform of an L^1 function keeps its
total integral, which anchors all the lower-bound checks.

Line integrals use equispaced sampling with trapezoid weights at step half
the grid cell (multilinear interpolation of the cell-center samples);
codimension-one plane averages use exact mass-deposit binning instead, since
a full quadrature grid over 2-planes is an order of magnitude more work for
no accuracy gain.  Directions are deterministic quadratures (uniform angles
in the plane, Fibonacci points on the sphere); Haar frames come from QR
factors of seeded gaussian matrices.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .errors import MassError, ParameterDomainError
from .grid import GridFunction, InequalityMargin, lp_norm


def _n_threads():
    try:
        return max(1, int(os.environ.get("BLQ_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class DirectionSet:
    """Unit vectors with a probability quadrature weight per direction."""

    vectors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        w = np.array(self.weights, dtype=float)
        if v.ndim != 2 or len(w) != len(v):
            raise ValueError("need (n, d) vectors and n weights")
        norms = np.linalg.norm(v, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise ValueError("direction vectors must be unit length")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        total = w.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError("weights must sum to one")
        w = w / total
        v.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    @property
    def dim(self):
        return self.vectors.shape[1]

    @classmethod
    def uniform_circle(cls, n, offset=0.0):
        angles = offset + 2.0 * math.pi * np.arange(n) / n
        v = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        return cls(v, np.full(n, 1.0 / n))

    @classmethod
    def fibonacci_sphere(cls, n):
        j = np.arange(n)
        z = 1.0 - (2.0 * j + 1.0) / n
        phi = j * math.pi * (3.0 - math.sqrt(5.0))
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        v = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return cls(v, np.full(n, 1.0 / n))

    @classmethod
    def great_circle(cls, n, normal=(0.0, 0.0, 1.0)):
        """Directions confined to the great circle orthogonal to ``normal``."""
        normal = np.asarray(normal, dtype=float)
        normal = normal / np.linalg.norm(normal)
        h = np.eye(3)[int(np.argmin(np.abs(normal)))]
        u = h - (h @ normal) * normal
        u /= np.linalg.norm(u)
        w = np.cross(normal, u)
        angles = 2.0 * math.pi * np.arange(n) / n
        v = np.outer(np.cos(angles), u) + np.outer(np.sin(angles), w)
        return cls(v, np.full(n, 1.0 / n))

    @classmethod
    def from_vectors(cls, vectors, weights=None):
        vectors = np.asarray(vectors, dtype=float)
        if weights is None:
            weights = np.full(len(vectors), 1.0 / len(vectors))
        return cls(vectors, weights)


def interp_grid(f: GridFunction, pts):
    """Multilinear interpolation of cell-center samples, zero outside.

    The sample array is zero-padded by one ring so the interpolant ramps to
    zero over the half-cell skirt beyond the outermost centers (keeping the
    interpolant's integral equal to the grid mass).
    """
    from scipy import ndimage

    pts = np.asarray(pts, dtype=float)
    cells = np.array(f.cell_sizes)
    lo = np.array([b[0] for b in f.box])
    u = (pts - lo) / cells + 0.5
    return ndimage.map_coordinates(
        np.pad(f.values, 1), u.T, order=1, mode="constant", cval=0.0, prefilter=False
    )


@dataclass(frozen=True)
class TomogramSamples:
    """Transform values on a product grid of directions/frames and offsets."""

    k: int
    directions: np.ndarray
    weights: np.ndarray
    frames: np.ndarray
    offsets_axes: tuple
    values: np.ndarray
    offset_cell_volume: float

    @property
    def dim(self):
        return self.directions.shape[1]

    def lq(self, q) -> float:
        if q == math.inf:
            return float(self.values.max())
        q = float(q)
        per_dir = np.sum(
            self.values.reshape(len(self.weights), -1) ** q, axis=1
        ) * self.offset_cell_volume
        return float(np.sum(self.weights * per_dir)) ** (1.0 / q)

    def l1(self) -> float:
        return self.lq(1.0)

    def sup_dirs_lq(self, r) -> float:
        """Mixed norm: sup over directions of the offset L^r norm."""
        per_dir = (
            np.sum(self.values.reshape(len(self.weights), -1) ** float(r), axis=1)
            * self.offset_cell_volume
        ) ** (1.0 / float(r))
        return float(per_dir.max())

    def entropy(self) -> float:
        v = self.values.reshape(len(self.weights), -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(v > 0, -v * np.log(v), 0.0)
        per_dir = np.sum(t, axis=1) * self.offset_cell_volume
        return float(np.sum(self.weights * per_dir))

    def to_csv(self, path):
        """Columns: direction_index, offset coordinates, value."""
        grids = np.meshgrid(*self.offsets_axes, indexing="ij")
        coords = np.stack([g.ravel() for g in grids], axis=1)
        with open(path, "w") as fh:
            cols = ",".join(f"offset_{a}" for a in range(coords.shape[1]))
            fh.write(f"direction_index,{cols},value\n")
            for i in range(len(self.weights)):
                vals = self.values[i].ravel()
                for row, v in zip(coords, vals):
                    cs = ",".join("%.12g" % c for c in row)
                    fh.write(f"{i},{cs},{'%.12g' % v}\n")


def _orthonormal_complement(omega):
    """Deterministic orthonormal basis of the hyperplane orthogonal to omega."""
    d = len(omega)
    if d == 2:
        return np.array([[-omega[1]], [omega[0]]])
    h = np.eye(d)[int(np.argmin(np.abs(omega)))]
    u = h - (h @ omega) * omega
    u /= np.linalg.norm(u)
    if d == 3:
        w = np.cross(omega, u)
        return np.stack([u, w], axis=1)
    raise ValueError("line transforms are implemented for d <= 3")


def _corner_radius(box):
    return math.sqrt(sum(max(abs(lo), abs(hi)) ** 2 for lo, hi in box))


def _linear_deposit(y, masses, radius, cell, n_v):
    """Cloud-in-cell mass assignment onto a centered offset grid.

    Linear splitting between the two nearest cells per axis suppresses the
    aliasing combs a nearest-cell deposit produces when a projected lattice
    beats against the offset grid; total mass is preserved exactly.
    """
    y = np.atleast_2d(y.T).T
    m = y.shape[1]
    pos = (y + radius) / cell - 0.5
    base = np.floor(pos).astype(np.int64)
    frac = pos - base
    out = np.zeros(n_v**m)
    for corner in range(1 << m):
        idx = base.copy()
        w = masses.copy()
        for a in range(m):
            bit = (corner >> a) & 1
            idx[:, a] = np.clip(base[:, a] + bit, 0, n_v - 1)
            w = w * (frac[:, a] if bit else 1.0 - frac[:, a])
        flat = idx[:, 0]
        for a in range(1, m):
            flat = flat * n_v + idx[:, a]
        out += np.bincount(flat, weights=w, minlength=n_v**m)
    return out.reshape((n_v,) * m)


def xray_transform(
    f: GridFunction,
    dirs: Optional[DirectionSet] = None,
    t_resolution: Optional[int] = None,
    line_step: Optional[float] = None,
    method: str = "sample",
) -> TomogramSamples:
    """Line integrals over every direction.

    ``method="sample"`` (default) integrates along equispaced line samples
    with trapezoid weights at step half the smallest grid cell (override with
    ``line_step``).  ``method="deposit"`` bins each cell's mass onto the
    offset grid instead, which preserves ||Xf||_1 = ||f||_1 exactly and is
    preferred for entropy work.  ``t_resolution`` is the tomogram resolution
    per offset axis.
    """
    d = f.dim
    if d < 2:
        raise ValueError("the line transform needs dimension >= 2")
    if dirs is None:
        dirs = DirectionSet.uniform_circle(360) if d == 2 else DirectionSet.fibonacci_sphere(128)
    if len(dirs) == 0:
        raise ValueError("direction set is empty")
    if dirs.dim != d:
        raise ValueError("direction dimension does not match the grid")
    radius = _corner_radius(f.box)
    if t_resolution is None:
        t_resolution = 2 * max(f.resolution) if (d == 2 or method == "deposit") else max(f.resolution)
    n_v = t_resolution
    cell = 2.0 * radius / n_v
    axis = (np.arange(n_v) + 0.5) * cell - radius
    offsets_axes = tuple([axis] * (d - 1))
    values = np.zeros((len(dirs),) + (n_v,) * (d - 1))
    frames = np.zeros((len(dirs), d, d - 1))
    if method == "deposit":
        mesh_src = np.meshgrid(*f.centers(), indexing="ij")
        pts_src = np.stack([m.ravel() for m in mesh_src], axis=1)
        masses = f.values.ravel() * f.cell_volume

        def work(i):
            omega = dirs.vectors[i]
            frame = _orthonormal_complement(omega)
            frames[i] = frame
            y = pts_src @ frame
            acc = _linear_deposit(y, masses, radius, cell, n_v)
            values[i] = acc / cell ** (d - 1)

    elif method == "sample":
        step = line_step or (min(f.cell_sizes) / 2.0)
        n_t = int(math.ceil(2.0 * radius / step))
        t_nodes = np.linspace(-radius, radius, n_t + 1)
        t_w = np.full(n_t + 1, t_nodes[1] - t_nodes[0])
        t_w[0] *= 0.5
        t_w[-1] *= 0.5
        mesh = np.meshgrid(*offsets_axes, indexing="ij")
        offs = np.stack([m.ravel() for m in mesh], axis=1)

        def work(i):
            omega = dirs.vectors[i]
            frame = _orthonormal_complement(omega)
            frames[i] = frame
            base = offs @ frame.T
            acc = np.zeros(len(offs))
            chunk = max(1, int(4_000_000 // max(1, n_t + 1)))
            for s in range(0, len(offs), chunk):
                blk = base[s : s + chunk]
                pts = blk[:, None, :] + t_nodes[None, :, None] * omega[None, None, :]
                vals = interp_grid(f, pts.reshape(-1, d)).reshape(len(blk), n_t + 1)
                acc[s : s + chunk] = vals @ t_w
            values[i] = acc.reshape((n_v,) * (d - 1))

    else:
        raise ValueError("method must be 'sample' or 'deposit'")

    n_threads = _n_threads()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as ex:
            list(ex.map(work, range(len(dirs))))
    else:
        for i in range(len(dirs)):
            work(i)
    return TomogramSamples(
        k=1,
        directions=dirs.vectors.copy(),
        weights=dirs.weights.copy(),
        frames=frames,
        offsets_axes=offsets_axes,
        values=values,
        offset_cell_volume=float(cell ** (d - 1)),
    )


def haar_planes(d, k, n, seed):
    """Seeded Haar-distributed k-frames in R^d via QR of gaussian matrices."""
    rng = np.random.default_rng(seed)
    frames = []
    for _ in range(n):
        g = rng.standard_normal((d, k))
        q, r = np.linalg.qr(g)
        q = q * np.sign(np.diag(r))
        frames.append(q)
    return frames


def kplane_transform(
    f: GridFunction,
    k: int,
    plane_samples,
    seed: int = 0,
    t_resolution: Optional[int] = None,
) -> TomogramSamples:
    """Averages over affine k-planes; d <= 3 by scope.

    ``plane_samples``: an integer count of Haar frames (seeded), an explicit
    sequence of d x k frame matrices, or a DirectionSet when k = 1.
    Codimension-one planes use exact mass-deposit binning onto the offset
    axis; k = 1 delegates to the line transform.
    """
    d = f.dim
    if d > 3:
        raise ValueError("k-plane transforms are implemented for d <= 3")
    if not (1 <= k <= d - 1):
        raise ValueError("need 1 <= k <= d-1")
    if isinstance(plane_samples, DirectionSet):
        if k != 1:
            raise ValueError("a DirectionSet parametrizes lines (k = 1)")
        return xray_transform(f, plane_samples, t_resolution=t_resolution)
    if isinstance(plane_samples, (int, np.integer)):
        frames = haar_planes(d, k, int(plane_samples), seed)
    else:
        frames = [np.asarray(q, dtype=float) for q in plane_samples]
    if k == 1:
        dirs = DirectionSet.from_vectors(np.stack([q[:, 0] for q in frames]))
        return xray_transform(f, dirs, t_resolution=t_resolution)
    # k = d-1 = 2, d = 3: bin mass onto the normal coordinate
    radius = _corner_radius(f.box)
    n_v = t_resolution or 2 * max(f.resolution)
    cell = 2.0 * radius / n_v
    axis = (np.arange(n_v) + 0.5) * cell - radius
    axes = f.centers()
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    masses = f.values.ravel() * f.cell_volume
    values = np.zeros((len(frames), n_v))
    normals = np.zeros((len(frames), d))
    out_frames = np.zeros((len(frames), d, 1))
    for i, q in enumerate(frames):
        normal = np.cross(q[:, 0], q[:, 1])
        normal /= np.linalg.norm(normal)
        normals[i] = normal
        out_frames[i, :, 0] = normal
        y = pts @ normal
        values[i] = _linear_deposit(y, masses, radius, cell, n_v) / cell
    return TomogramSamples(
        k=k,
        directions=normals,
        weights=np.full(len(frames), 1.0 / len(frames)),
        frames=out_frames,
        offsets_axes=(axis,),
        values=values,
        offset_cell_volume=cell,
    )


def scaling_exponent_q(p, d, k=1):
    """Solve (1/d)(1 - 1/q) = (1/(d-k))(1 - 1/p) for q."""
    s = 0.0 if math.isinf(p) else 1.0 / p
    denom = 1.0 - (d / (d - k)) * (1.0 - s)
    if denom <= 0:
        raise ParameterDomainError("no admissible q on the scaling line for this p")
    return 1.0 / denom


def _check_scaling_line(p, q, d, k):
    lhs = (1.0 / d) * (1.0 - 1.0 / q)
    rhs = (1.0 / (d - k)) * (1.0 - 1.0 / p)
    if abs(lhs - rhs) > 1e-12 * max(1.0, abs(lhs), abs(rhs)):
        raise ParameterDomainError(
            f"exponents off the scaling line: (1/d)(1-1/q) = {lhs!r} "
            f"but (1/(d-k))(1-1/p) = {rhs!r}"
        )


def lower_bound_margin_from_tomograms(
    tom: TomogramSamples, tom_half: TomogramSamples, f: GridFunction, p: float, q: float, k: int = 1
) -> InequalityMargin:
    """Margin of ||T_k f||_q >= ||f||_p from precomputed transforms.

    ``tom_half`` is the same transform at halved direction count and offset
    resolution; the drift between the two is the quadrature estimate.
    """
    _check_scaling_line(p, q, f.dim, k)
    lhs = tom.lq(q)
    lhs_half = tom_half.lq(q)
    rhs = lp_norm(f, p)
    margin = lhs - rhs
    scale = max(1.0, abs(lhs), abs(rhs))
    estimate = abs(lhs - lhs_half) + 1e-12 * scale
    return InequalityMargin(
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        relative_margin=margin / scale,
        quadrature_estimate=estimate,
        mode="reverse",
    )


def tomography_lower_bound_margin(
    f: GridFunction,
    p: float,
    q: float,
    k: int = 1,
    dirs=None,
    seed: int = 0,
) -> InequalityMargin:
    """Margin of ||T_k f||_q >= ||f||_p on the scaling line (constant 1).

    The quadrature estimate halves both the direction count and the offset
    resolution and takes the drift.
    """
    d = f.dim
    _check_scaling_line(p, q, d, k)
    n_v = 2 * max(f.resolution) if d == 2 else max(f.resolution)
    if k == 1:
        if dirs is None:
            dirs = DirectionSet.uniform_circle(360) if d == 2 else DirectionSet.fibonacci_sphere(128)
        tom = xray_transform(f, dirs, t_resolution=n_v)
        half = DirectionSet.from_vectors(dirs.vectors[::2], None)
        tom_half = xray_transform(f, half, t_resolution=max(2, n_v // 2))
    else:
        n_planes = dirs if isinstance(dirs, int) else 64
        tom = kplane_transform(f, k, n_planes, seed=seed, t_resolution=n_v)
        tom_half = kplane_transform(f, k, max(2, n_planes // 2), seed=seed + 1, t_resolution=max(2, n_v // 2))
    return lower_bound_margin_from_tomograms(tom, tom_half, f, p, q, k)


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    n_samples: int
    mean: float
    mean_stderr: float

    def __float__(self):
        return self.value


def restricted_xray_constant(
    mu_samples: DirectionSet, p: float, q: float, d: int, n_mc: int, seed: int
) -> MonteCarloEstimate:
    """Monte Carlo estimate of the restricted-direction constant.

    C(mu) = (E |w_1 ^ ... ^ w_d|^{dq(1/p-1)/(d-1)})^{1/(dq)} with the w_j
    drawn independently from mu; the wedge modulus is |det| of the stacked
    direction matrix.
    """
    _check_scaling_line(p, q, d, 1)
    if n_mc < 1:
        raise ValueError("need at least one sample")
    if mu_samples.dim != d:
        raise ValueError("direction dimension mismatch")
    a = d * q * (1.0 / p - 1.0) / (d - 1)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(mu_samples), size=(n_mc, d), p=mu_samples.weights)
    mats = mu_samples.vectors[idx]
    dets = np.abs(np.linalg.det(mats))
    if a == 0.0:
        vals = np.ones(n_mc)
    else:
        vals = dets**a
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
    expo = 1.0 / (d * q)
    value = mean**expo if mean > 0 else 0.0
    stderr = se * expo * mean ** (expo - 1.0) if mean > 0 else 0.0
    return MonteCarloEstimate(value=value, stderr=stderr, n_samples=n_mc, mean=mean, mean_stderr=se)


def wedge_moment(d, q) -> float:
    """E over independent uniform sphere directions of |w_1 ^...^ w_d|^{1-q},
    evaluated as a product of Gamma ratios via log-Gamma."""
    log_m = 0.0
    for ell in range(d):
        log_m += (
            gammaln(d / 2.0)
            + gammaln((d - ell + 1.0 - q) / 2.0)
            - gammaln((d + 1.0 - q) / 2.0)
            - gammaln((d - ell) / 2.0)
        )
    return float(np.exp(log_m))


def xx_gamma_constant(d, p, q) -> float:
    """Closed-form constant of the three-norm line-transform inequality."""
    if not (d >= 2 and 1.0 < p < math.inf and 0.0 < q < 1.0):
        raise ParameterDomainError("need d >= 2, 1 < p < inf, 0 < q < 1")
    expo = (1.0 - 1.0 / p) / ((d - 1) * q)
    return wedge_moment(d, q) ** expo


def radial_moment_factor(d, a) -> float:
    """E |X|^a for X with density e^{-pi |x|^2} on R^d."""
    return float(np.exp(gammaln((d + a) / 2.0) - gammaln(d / 2.0) - (a / 2.0) * math.log(math.pi)))


def gauss_wedge_integral_mc(d, a, n_mc, seed) -> MonteCarloEstimate:
    """Monte Carlo oracle for the gaussian wedge-power integral
    E |x_1 ^ ... ^ x_d|^a over d independent e^{-pi|x|^2} vectors."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_mc, d, d)) / math.sqrt(2.0 * math.pi)
    dets = np.abs(np.linalg.det(x))
    vals = dets ** float(a)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
    return MonteCarloEstimate(value=mean, stderr=se, n_samples=n_mc, mean=mean, mean_stderr=se)


def xx_constant_via_mc(d, p, q, n_mc, seed) -> MonteCarloEstimate:
    """Derive the three-norm constant from the gaussian wedge integral."""
    a = 1.0 - q
    est = gauss_wedge_integral_mc(d, a, n_mc, seed)
    factor = radial_moment_factor(d, a) ** d
    moment = est.mean / factor
    expo = (1.0 - 1.0 / p) / ((d - 1) * q)
    value = moment**expo
    stderr = (est.mean_stderr / factor) * expo * moment ** (expo - 1.0) if moment > 0 else 0.0
    return MonteCarloEstimate(
        value=value, stderr=stderr, n_samples=n_mc, mean=moment, mean_stderr=est.mean_stderr / factor
    )


def xx_r_exponent(d, p, q) -> float:
    """Solve (1/q - 1/p)(1 - 1/r) = (1/(d-1))(1 - 1/p)(1/q - 1) for r."""
    lhs_coeff = 1.0 / q - 1.0 / p
    rhs = (1.0 / (d - 1)) * (1.0 - 1.0 / p) * (1.0 / q - 1.0)
    one_minus = rhs / lhs_coeff
    if not (0.0 < one_minus < 1.0):
        raise ParameterDomainError("no admissible r for these (d, p, q)")
    return 1.0 / (1.0 - one_minus)


def xx_inequality_margin(f: GridFunction, p, q, dirs: Optional[DirectionSet] = None) -> InequalityMargin:
    """Three-norm inequality for the line transform:
    C ||Xf||_{sup_dir, L^r}^{1/q - 1/p} <= ||f||_p^{1/q - 1} ||Xf||_q^{1 - 1/p}."""
    d = f.dim
    r = xx_r_exponent(d, p, q)
    C = xx_gamma_constant(d, p, q)
    if dirs is None:
        dirs = DirectionSet.uniform_circle(180)

    def both(dirset, t_res):
        tom = xray_transform(f, dirset, t_resolution=t_res)
        lhs = C * tom.sup_dirs_lq(r) ** (1.0 / q - 1.0 / p)
        rhs = lp_norm(f, p) ** (1.0 / q - 1.0) * tom.lq(q) ** (1.0 - 1.0 / p)
        return lhs, rhs

    n_v = 2 * max(f.resolution)
    lhs, rhs = both(dirs, n_v)
    lhs2, rhs2 = both(DirectionSet.from_vectors(dirs.vectors[::2]), max(2, n_v // 2))
    margin = rhs - lhs
    scale = max(1.0, abs(lhs), abs(rhs))
    estimate = abs(margin - (rhs2 - lhs2)) + 1e-12 * scale
    return InequalityMargin(
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        relative_margin=margin / scale,
        quadrature_estimate=estimate,
        mode="forward",
    )


def grid_entropy(f: GridFunction) -> float:
    v = f.values
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(v > 0, -v * np.log(v), 0.0)
    return float(t.sum() * f.cell_volume)


def kplane_entropy_sequence(
    f: GridFunction, n_planes: int = 64, seed: int = 0, dirs=None, method: str = "deposit"
):
    """Normalized entropies H(T_k f)/(d-k) for k = 0..d-1 (k = 0 is f itself).

    Uses the mass-exact deposit transform by default so the entropies carry
    only offset-binning error.
    """
    d = f.dim
    if d > 3:
        raise ValueError("entropy sequences are implemented for d <= 3")
    if f.mass <= 0:
        raise MassError("entropy sequence needs positive mass")
    f = f.normalized()
    out = [grid_entropy(f) / d]
    if d >= 2:
        if dirs is None:
            dirs = DirectionSet.uniform_circle(180) if d == 2 else DirectionSet.fibonacci_sphere(96)
        tom = xray_transform(f, dirs, method=method)
        out.append(tom.entropy() / (d - 1))
    if d == 3:
        tom2 = kplane_transform(f, 2, n_planes, seed=seed)
        out.append(tom2.entropy() / (d - 2))
    return out


def projection_shadow_measure(f: GridFunction, omega) -> float:
    """Exact measure of the shadow of the occupied cells on the line
    orthogonal to omega (dimension 2 only)."""
    if f.dim != 2:
        raise ValueError("shadows are implemented for d = 2")
    omega = np.asarray(omega, dtype=float)
    v = np.array([-omega[1], omega[0]])
    v /= np.linalg.norm(v)
    occupied = f.values > 0
    if not occupied.any():
        return 0.0
    axes = f.centers()
    cx, cy = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([cx[occupied], cy[occupied]], axis=1)
    t = centers @ v
    hx, hy = f.cell_sizes
    half = 0.5 * (hx * abs(v[0]) + hy * abs(v[1]))
    starts = t - half
    ends = t + half
    order = np.argsort(starts)
    s = starts[order]
    e = ends[order]
    cm = np.maximum.accumulate(e)
    prev = np.concatenate([[-np.inf], cm[:-1]])
    return float(np.sum(np.maximum(0.0, cm - np.maximum(s, prev))))


def averaged_projection_margin(f: GridFunction, dirs: Optional[DirectionSet] = None) -> InequalityMargin:
    """Averaged projection inequality |O|^{(d-1)/d} <= avg_dir |shadow|."""
    if f.dim != 2:
        raise ValueError("implemented for d = 2")
    if dirs is None:
        dirs = DirectionSet.uniform_circle(360)
    volume = float(np.count_nonzero(f.values > 0)) * f.cell_volume
    rhs_all = np.array([projection_shadow_measure(f, w) for w in dirs.vectors])
    rhs = float(np.sum(dirs.weights * rhs_all))
    rhs_half = float(np.mean(rhs_all[::2]))
    lhs = volume ** ((f.dim - 1) / f.dim)
    margin = rhs - lhs
    scale = max(1.0, abs(lhs), abs(rhs))
    return InequalityMargin(
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        relative_margin=margin / scale,
        quadrature_estimate=abs(rhs - rhs_half) + 1e-12 * scale,
        mode="forward",
    )
