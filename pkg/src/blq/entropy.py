"""Shannon/Renyi entropy machinery and entropic inequality margins.

Entropies are taken of normalized densities against the natural reference
measure (cell volume for grids, atom weights for discrete densities) with
the 0 log 0 = 0 convention.  The Renyi entropy of order p is
(p/(1-p)) log ||f||_p; it tends to the Shannon entropy as p -> 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .data import AdjointParams, BLDatum, derive_adjoint_exponents
from .errors import MassError
from .grid import GridFunction, grid_pushforward

__all__ = [
    "DiscreteDensity",
    "shannon_entropy",
    "renyi_entropy",
    "entropy_power",
    "entropic_bl_margin",
    "renyi_bl_margin",
    "p_entropy_probe",
    "log_lambda",
    "default_theta",
    "power_curvature_fd",
    "power_curvature_exact",
]


@dataclass(frozen=True)
class DiscreteDensity:
    """Non-negative weights on a finite index set with a reference measure."""

    values: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("values must be finite and non-negative")
        w = (
            np.ones_like(v)
            if self.weights is None
            else np.array(self.weights, dtype=float)
        )
        if w.shape != v.shape or np.any(w <= 0):
            raise ValueError("weights must be positive and match the values")
        v.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @property
    def mass(self):
        return float(np.sum(self.values * self.weights))


def _values_measure(f):
    if isinstance(f, GridFunction):
        return f.values.ravel(), np.full(f.values.size, f.cell_volume)
    if isinstance(f, DiscreteDensity):
        return f.values.ravel(), f.weights.ravel()
    arr = np.asarray(f, dtype=float)
    return arr.ravel(), np.ones(arr.size)


def shannon_entropy(f) -> float:
    """Entropy of the normalized density: integral of -g log g."""
    v, w = _values_measure(f)
    mass = float(np.sum(v * w))
    if mass <= 0 or not math.isfinite(mass):
        raise MassError("entropy needs positive finite mass")
    g = v / mass
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(g > 0, -g * np.log(g), 0.0)
    return float(np.sum(t * w))


def renyi_entropy(f, p) -> float:
    """(p/(1-p)) log ||g||_p for the normalized density g; p = 1 is Shannon."""
    p = float(p)
    if p <= 0:
        raise ValueError("order p must be positive")
    if p == 1.0:
        return shannon_entropy(f)
    v, w = _values_measure(f)
    mass = float(np.sum(v * w))
    if mass <= 0 or not math.isfinite(mass):
        raise MassError("entropy needs positive finite mass")
    g = v / mass
    norm_p = float(np.sum(g**p * w)) ** (1.0 / p)
    return (p / (1.0 - p)) * math.log(norm_p)


def entropy_power(f, p) -> float:
    """Entropy of the tilted density f^p / ||f||_p^p."""
    v, w = _values_measure(f)
    return shannon_entropy(DiscreteDensity(v**float(p), w))


def default_theta(datum: BLDatum):
    """theta_i proportional to c_i d_i; sums to one under the scaling condition."""
    raw = np.array([c * di for c, di in zip(datum.exponents, datum.dims)], dtype=float)
    return tuple(raw / raw.sum())


def entropic_bl_margin(f: GridFunction, datum: BLDatum, bl_value: float) -> float:
    """sum c_i H((B_i)_* f) + log(bl) - H(f) for the normalized density f.

    Non-negative whenever bl is (an upper bound for) the Brascamp-Lieb
    constant of the datum.
    """
    f = f.normalized()
    margin = math.log(bl_value) - shannon_entropy(f)
    for c, b in zip(datum.exponents, datum.maps):
        margin += c * shannon_entropy(grid_pushforward(f, b))
    return margin


def renyi_bl_margin(f: GridFunction, datum: BLDatum, params: AdjointParams, bl_value: float) -> float:
    """sum c_i H_{p_i}((B_i)_* f) + log(bl) - H_p(f); converges to the
    Shannon margin as p -> 1."""
    f = f.normalized()
    margin = math.log(bl_value) - renyi_entropy(f, params.p)
    for c, b, q in zip(datum.exponents, datum.maps, params.p_i):
        margin += c * renyi_entropy(grid_pushforward(f, b), q)
    return margin


def p_entropy_probe(
    f: GridFunction,
    p: float,
    datum: BLDatum,
    theta: Optional[Sequence] = None,
    bl_value: Optional[float] = None,
) -> float:
    """H(f^p/||f||_p^p) - sum c_i H(f_i^{p_i}/||f_i||_{p_i}^{p_i}) - log(bl).

    Guaranteed non-positive for indicator inputs; sign-indefinite in general
    (the value is returned unasserted).
    """
    if bl_value is None:
        from .gaussian import bl_gaussian_constant

        bl_value = bl_gaussian_constant(datum).value
    if theta is None:
        theta = default_theta(datum)
    params = derive_adjoint_exponents(datum, theta, p)
    probe = entropy_power(f, p) - math.log(bl_value)
    for c, b, q in zip(datum.exponents, datum.maps, params.p_i):
        probe -= c * entropy_power(grid_pushforward(f, b), q)
    return probe


def log_lambda(f: GridFunction, datum: BLDatum, params: AdjointParams, bl_value: float) -> float:
    """log of ||f||_p / (bl^{1/p-1} prod ||f_i||_{p_i}^{theta_i}).

    Its p-derivative scaled by p^2 matches
    log(bl) - H(f^p/||f||_p^p) + sum c_i H(f_i^{p_i}/||f_i||_{p_i}^{p_i}).
    """
    from .grid import lp_norm

    val = math.log(lp_norm(f, params.p)) - (1.0 / params.p - 1.0) * math.log(bl_value)
    for b, t, q in zip(datum.maps, params.theta, params.p_i):
        val -= t * math.log(lp_norm(grid_pushforward(f, b), q))
    return val


def _phi(q: Fraction) -> Fraction:
    return q * q / ((1 + q) * (1 + q))


def power_curvature_fd(q, h=Fraction(1, 2048)) -> float:
    """Second derivative of q -> q^2/(1+q)^2 by exact-rational central
    differences with one Richardson step (truncation O(h^4), no roundoff)."""
    q = Fraction(q)
    h = Fraction(h)

    def second(hh):
        return (_phi(q + hh) - 2 * _phi(q) + _phi(q - hh)) / (hh * hh)

    d1 = second(h)
    d2 = second(h / 2)
    return float((4 * d2 - d1) / 3)


def power_curvature_exact(q) -> float:
    """(2 - 4q) / (1 + q)^4, the closed-form second derivative."""
    q = Fraction(q)
    return float((2 - 4 * q) / (1 + q) ** 4)
