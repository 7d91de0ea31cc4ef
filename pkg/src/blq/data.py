"""Brascamp-Lieb data and adjoint exponent algebra.

A datum is a family of surjective linear maps B_i: R^d -> R^{d_i} together
with positive exponents c_i.  The adjoint side adds weights theta_i summing
to one and a Lebesgue exponent p; the coupled exponents p_i solve

    c_i * (1 - 1/p) = theta_i * (1 - 1/p_i).

Everything here is pure datum/exponent bookkeeping: feasibility screening,
exponent derivation and the gaussian prefactor.  The optimizers live in
:mod:`blq.gaussian`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from .errors import DatumError, ParameterDomainError

RANK_TOL = 1e-10
THETA_SUM_TOL = 1e-12
SCALING_TOL = 1e-9


def _as_fraction(x):
    """Parse 'p/q' strings and ints to Fraction; plain floats return None."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float) and x == int(x):
        return Fraction(int(x))
    return None


@dataclass(frozen=True)
class BLDatum:
    """Surjective maps B_i (shape d_i x d) with exponents c_i > 0.

    ``exact_exponents`` keeps Fraction values when the c_i were given as
    rationals, so the scaling condition can be checked exactly.
    """

    maps: tuple
    exponents: tuple
    ambient_dim: int
    exact_exponents: Optional[tuple] = None

    def __post_init__(self):
        if len(self.maps) < 1:
            raise DatumError("a datum needs at least one map")
        if len(self.maps) != len(self.exponents):
            raise DatumError("number of maps and exponents differ")
        maps = []
        for i, b in enumerate(self.maps):
            b = np.array(b, dtype=float)
            if b.ndim != 2 or b.shape[1] != self.ambient_dim:
                raise DatumError(f"map {i} is not a d_i x {self.ambient_dim} matrix")
            if b.shape[0] > self.ambient_dim:
                raise DatumError(f"map {i} has more rows than the ambient dimension")
            sv = np.linalg.svd(b, compute_uv=False)
            if sv[-1] <= RANK_TOL * sv[0]:
                raise DatumError(f"map {i} is not surjective (rank-deficient rows)")
            b.flags.writeable = False
            maps.append(b)
        object.__setattr__(self, "maps", tuple(maps))
        exps = tuple(float(c) for c in self.exponents)
        if any(c <= 0 for c in exps):
            raise DatumError("all exponents c_i must be positive")
        object.__setattr__(self, "exponents", exps)
        if self.exact_exponents is not None:
            ee = tuple(Fraction(c) for c in self.exact_exponents)
            if len(ee) != len(exps):
                raise DatumError("exact exponents length mismatch")
            object.__setattr__(self, "exact_exponents", ee)

    @property
    def k(self):
        return len(self.maps)

    @property
    def dims(self):
        return tuple(b.shape[0] for b in self.maps)

    def scaling_defect(self):
        """d - sum(c_i d_i); a Fraction when exact exponents are available."""
        if self.exact_exponents is not None:
            return Fraction(self.ambient_dim) - sum(
                c * di for c, di in zip(self.exact_exponents, self.dims)
            )
        return self.ambient_dim - sum(c * di for c, di in zip(self.exponents, self.dims))

    def to_json_dict(self):
        c = (
            [str(c) for c in self.exact_exponents]
            if self.exact_exponents is not None
            else list(self.exponents)
        )
        return {"maps": [b.tolist() for b in self.maps], "c": c}

    @classmethod
    def from_json_dict(cls, obj):
        maps = obj["maps"]
        raw_c = obj["c"]
        fracs = [_as_fraction(c) for c in raw_c]
        exact = tuple(fracs) if all(f is not None for f in fracs) else None
        exponents = tuple(float(f) if f is not None else float(c) for f, c in zip(fracs, raw_c))
        ambient = len(maps[0][0])
        return cls(maps=tuple(maps), exponents=exponents, ambient_dim=ambient, exact_exponents=exact)


@dataclass(frozen=True)
class AdjointParams:
    """Weights theta_i, exponent p and the derived exponents p_i.

    Forward mode: 0 < p <= 1 and every theta_i > 0.
    Reverse mode: p >= 1 (math.inf allowed) and exactly one theta_i > 0.
    """

    theta: tuple
    p: float
    p_i: tuple
    mode: str

    def residuals(self, exponents):
        """Defect of c_i(1 - 1/p) - theta_i(1 - 1/p_i) for each i."""
        s = 0.0 if math.isinf(self.p) else 1.0 / self.p
        return tuple(
            c * (1.0 - s) - t * (1.0 - 1.0 / q)
            for c, t, q in zip(exponents, self.theta, self.p_i)
        )


@dataclass(frozen=True)
class SubspaceCheck:
    dimension: int
    weighted_image_dim: float
    passed: bool
    label: str = ""


@dataclass(frozen=True)
class FeasibilityReport:
    scaling_ok: bool
    tested_subspaces: tuple
    verdict: str

    @property
    def feasible(self):
        return self.verdict.startswith("feasible")


def _rank(m, tol=RANK_TOL):
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def _subspace_family(datum, n_random, seed):
    """Deterministic test family: kernels, their pairwise intersections,
    coordinate subspaces, and seeded random subspaces of each dimension."""
    d = datum.ambient_dim
    family = [("zero", np.zeros((d, 0))), ("full", np.eye(d))]
    kernels = []
    for i, b in enumerate(datum.maps):
        ker = null_space(b)
        kernels.append(ker)
        if ker.shape[1] > 0:
            family.append((f"ker B_{i}", ker))
    for i in range(len(kernels)):
        for j in range(i + 1, len(kernels)):
            stacked = np.vstack([datum.maps[i], datum.maps[j]])
            inter = null_space(stacked)
            if 0 < inter.shape[1] < d:
                family.append((f"ker B_{i} & ker B_{j}", inter))
    if d <= 8:
        import itertools

        for r in range(1, d):
            for subset in itertools.combinations(range(d), r):
                basis = np.eye(d)[:, list(subset)]
                family.append((f"coords {subset}", basis))
    else:
        for a in range(d):
            family.append((f"coords ({a},)", np.eye(d)[:, [a]]))
    rng = np.random.default_rng(seed)
    for dim in range(1, d):
        for t in range(n_random):
            g = rng.standard_normal((d, dim))
            q, _ = np.linalg.qr(g)
            family.append((f"random dim {dim} #{t}", q))
    return family


def validate_datum(datum: BLDatum, n_random: int = 20, seed: int = 0) -> FeasibilityReport:
    """Screen the finiteness conditions on a deterministic subspace family.

    The scaling condition d = sum(c_i d_i) is decided exactly for rational
    exponents and to 1e-9 otherwise.  The subspace dimension criterion
    dim(V) <= sum(c_i dim(B_i V)) is sampled, not decided, so the positive
    verdict is reported as "feasible(heuristic)".
    """
    defect = datum.scaling_defect()
    if isinstance(defect, Fraction):
        scaling_ok = defect == 0
    else:
        scaling_ok = abs(defect) <= SCALING_TOL
    checks = []
    all_pass = True
    for label, basis in _subspace_family(datum, n_random, seed):
        dim_v = basis.shape[1]
        weighted = sum(
            c * _rank(b @ basis) for c, b in zip(datum.exponents, datum.maps)
        )
        ok = dim_v <= weighted + SCALING_TOL
        all_pass = all_pass and ok
        checks.append(SubspaceCheck(dim_v, float(weighted), bool(ok), label))
    verdict = "feasible(heuristic)" if (scaling_ok and all_pass) else "infeasible"
    return FeasibilityReport(bool(scaling_ok), tuple(checks), verdict)


def derive_adjoint_exponents(datum: BLDatum, theta: Sequence, p) -> AdjointParams:
    """Solve c_i(1 - 1/p) = theta_i(1 - 1/p_i) for the p_i.

    Closed form: p_i = 1 / (1 + (c_i/theta_i) * (1/p - 1)).
    """
    theta = tuple(float(t) for t in theta)
    if len(theta) != datum.k:
        raise ParameterDomainError("theta length must match the number of maps")
    if abs(sum(theta) - 1.0) > 1e3 * THETA_SUM_TOL * max(1.0, max(abs(t) for t in theta)):
        raise ParameterDomainError(f"theta must sum to 1, got {sum(theta)!r}")
    p = float(p)
    n_pos = sum(1 for t in theta if t > 0)
    if any(t == 0 for t in theta):
        raise ParameterDomainError("theta entries must be nonzero")
    if n_pos == len(theta) and 0 < p <= 1:
        mode = "forward"
    elif n_pos == 1 and p >= 1:
        mode = "reverse"
    else:
        raise ParameterDomainError(
            "sign pattern/exponent mismatch: forward needs all theta_i>0 and 0<p<=1, "
            "reverse needs exactly one theta_i>0 and p>=1"
        )
    s = 0.0 if math.isinf(p) else 1.0 / p
    p_i = []
    for i, (c, t) in enumerate(zip(datum.exponents, theta)):
        denom = 1.0 + (c / t) * (s - 1.0)
        if denom <= 0 or not math.isfinite(denom):
            raise ParameterDomainError(f"derived exponent p_{i} undefined (1/p_i = {denom})")
        q = 1.0 / denom
        if mode == "forward" and not (0.0 < q <= 1.0 + 1e-12):
            raise ParameterDomainError(f"derived exponent p_{i}={q} outside (0,1] in forward mode")
        p_i.append(min(q, 1.0) if mode == "forward" else q)
    return AdjointParams(theta=theta, p=p, p_i=tuple(p_i), mode=mode)


def adjoint_gaussian_prefactor(params: AdjointParams, dims: Sequence[int], d: int) -> float:
    """Evaluate p^{-d/2p} * prod p_i^{theta_i d_i / 2 p_i} in log space.

    A factor with zero exponent contributes 1 regardless of its base
    (the 0^0 = inf^0 = 1 convention at degenerate edges).
    """
    if len(dims) != len(params.theta):
        raise ParameterDomainError("dims length must match theta length")
    log_c = 0.0
    if not math.isinf(params.p):
        e0 = -d / (2.0 * params.p)
        if e0 != 0.0:
            log_c += e0 * math.log(params.p)
    for t, di, q in zip(params.theta, dims, params.p_i):
        e = t * di / (2.0 * q)
        if e != 0.0:
            log_c += e * math.log(q)
    return math.exp(log_c)
