"""Gowers uniformity norms of non-negative functions on Z_N.

||f||_{U^d} is the 2^d-th root of the average of all multiplicative
derivatives over (d+1)-tuples, with counting measure by default.  The box
sum is computed through the lower-order tensor

    F(h_1..h_{d-1}) = sum_x D_{h_1}..D_{h_{d-1}} f(x),

whose squared l^2 mass equals the U^d box sum; F is streamed row by row so
the memory stays O(N^2) even for U^4.  U^1 equals the l^1 mass, and U^2
admits an independent Fourier route (fourth moment of the DFT).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CapExceededError

U_CAPS = {1: 65536, 2: 4096, 3: 256, 4: 64}


def _check_cap(n, d, cap):
    limit = cap if cap is not None else U_CAPS.get(d)
    if limit is None:
        raise CapExceededError(f"uniformity order {d} is out of scope")
    if n > limit:
        raise CapExceededError(f"N = {n} exceeds the U^{d} cap {limit}")


def _shift_matrix(f):
    n = len(f)
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    return f[idx]


def _box_sum(f, d):
    """sum over x, h_1..h_d of the product of f over all 2^d shifts."""
    n = len(f)
    if d == 1:
        return float(f.sum()) ** 2
    if d == 2:
        corr = f @ _shift_matrix(f)
        return float(np.sum(corr**2))
    if d == 3:
        shifts = _shift_matrix(f)
        total = 0.0
        for h1 in range(n):
            g = f * shifts[:, h1]
            rows = g @ _shift_matrix(g)
            total += float(np.sum(rows**2))
        return total
    if d == 4:
        total = 0.0
        for h1 in range(n):
            g1 = f * np.roll(f, -h1)
            for h2 in range(n):
                g12 = g1 * np.roll(g1, -h2)
                rows = g12 @ _shift_matrix(g12)
                total += float(np.sum(rows**2))
        return total
    raise CapExceededError(f"uniformity order {d} is out of scope")


def gowers_norm(f, d, measure_weight=1.0, cap=None) -> float:
    """||f||_{U^d(Z_N)} with counting measure scaled by ``measure_weight``."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 1:
        raise ValueError("f must be a vector on Z_N")
    if np.any(f < 0):
        raise ValueError("f must be non-negative")
    if d < 1:
        raise ValueError("d must be at least 1")
    _check_cap(len(f), d, cap)
    s = _box_sum(f, d)
    lam = float(measure_weight) ** (d + 1)
    return (lam * s) ** (1.0 / (1 << d))


def u2_via_fourier(f) -> float:
    """U^2 norm as the fourth moment of the DFT: (sum |f^|^4 / N)^{1/4}."""
    f = np.asarray(f, dtype=float)
    fhat = np.fft.fft(f)
    return float((np.sum(np.abs(fhat) ** 4) / len(f)) ** 0.25)


def parallelogram_count(f) -> float:
    """Number (with multiplicity) of quadruples x, x+h, x+k, x+h+k in supp."""
    return _box_sum(np.asarray(f, dtype=float), 2)


def parallelepiped_count(f) -> float:
    """Number of combinatorial boxes on triples of shifts."""
    return _box_sum(np.asarray(f, dtype=float), 3)


def logconvexity_theta(d) -> Fraction:
    """Interpolation weight with (d+1)/2^d = theta d/2^{d-1} + (1-theta)(d+2)/2^{d+1}."""
    return Fraction(d, 3 * d - 2)


def gowers_logconvexity_margin(f, d, measure_weight=1.0) -> float:
    """||f||_{U^{d-1}}^theta ||f||_{U^{d+1}}^{1-theta} - ||f||_{U^d} >= 0."""
    if d < 2:
        raise ValueError("log-convexity needs d >= 2")
    theta = float(logconvexity_theta(d))
    lo = gowers_norm(f, d - 1, measure_weight)
    mid = gowers_norm(f, d, measure_weight)
    hi = gowers_norm(f, d + 1, measure_weight)
    return lo**theta * hi ** (1.0 - theta) - mid


@dataclass(frozen=True)
class GowersProfile:
    """Norms ||f||_{U^d} for d = 1..D with abscissae (d+1)/2^d."""

    orders: tuple
    abscissae: tuple
    norms: tuple

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["d", "abscissa", "norm", "log_norm"])
        for d, a, v in zip(self.orders, self.abscissae, self.norms):
            writer.writerow([d, "%.12g" % a, "%.12g" % v, "%.12g" % math.log(v)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text_or_path):
        if "\n" in str(text_or_path):
            text = text_or_path
        else:
            with open(text_or_path) as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        body = rows[1:]
        return cls(
            orders=tuple(int(r[0]) for r in body),
            abscissae=tuple(float(r[1]) for r in body),
            norms=tuple(float(r[2]) for r in body),
        )


def gowers_profile(f, max_order, measure_weight=1.0) -> GowersProfile:
    orders = tuple(range(1, max_order + 1))
    norms = tuple(gowers_norm(f, d, measure_weight) for d in orders)
    abscissae = tuple((d + 1) / (1 << d) for d in orders)
    return GowersProfile(orders=orders, abscissae=abscissae, norms=norms)


def real_line_u2_ratio(samples, spacing, pad_factor=4):
    """||f||_{U^2} / (||f||_{U^1}^{1/2} ||f||_{U^3}^{1/2}) for a compactly
    supported sampled function on the real line.

    The samples are zero-padded so the cyclic box sums equal the real-line
    integrals, and each sum carries the grid spacing as measure weight.  The
    ratio is at most 1 by log-convexity; how far below 1 it can stay over
    rich families is open, so scans report values without asserting a gap.
    """
    f = np.asarray(samples, dtype=float)
    support = len(f)
    padded = np.zeros(pad_factor * support)
    padded[:support] = f
    u1 = gowers_norm(padded, 1, measure_weight=spacing)
    u2 = gowers_norm(padded, 2, measure_weight=spacing)
    u3 = gowers_norm(padded, 3, measure_weight=spacing, cap=len(padded))
    return u2 / math.sqrt(u1 * u3)


def u2_ratio_scan(functions, spacing):
    """Ratios over a caller-supplied family of sampled real-line functions."""
    return [real_line_u2_ratio(f, spacing) for f in functions]
