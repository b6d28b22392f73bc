"""Scalar lattice-Gaussian machinery.

One-dimensional Gaussian weights over the integers, the per-layer
conditional distribution used by Klein-style backward decoding, the theta
series controlling Gaussian mass, width policies, and a small-n exact
mass oracle.  Products over layers are accumulated in natural-log space
and exponentiated only at comparison boundaries, so nothing here
underflows before n = 32.

Ordering conventions shared with the decoding kernels:

* nearest integer to c is ceil(c - 1/2); an exact half-integer resolves
  to the smaller integer,
* the j-th closest integer sequence walks outward from there, preferring
  the smaller integer on distance ties,
* truncated integer Gaussian sums cover ceil(c - rad) .. floor(c + rad)
  with rad = ceil(sigma * sqrt(2 ln(1/tol))) + 2, summed left to right.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooLargeError, InvalidConfigError
from .lattice import QrFactors, min_diag

RHO_TOL = 1e-15

# 1 / (2 sqrt(pi)); the width that makes the visited-node bound provable.
PAPER_SIGMA_SCALE = 1.0 / (2.0 * math.sqrt(math.pi))


@dataclass(frozen=True)
class SigmaPolicy:
    """Width policy: a fixed value, or min_i |r_ii| / (2 sqrt(pi))."""

    mode: str  # "fixed" | "paper_default"
    value: float | None = None

    @staticmethod
    def fixed(value: float) -> "SigmaPolicy":
        return SigmaPolicy(mode="fixed", value=float(value))

    @staticmethod
    def paper() -> "SigmaPolicy":
        return SigmaPolicy(mode="paper_default")


@dataclass(frozen=True)
class LayerContext:
    """One decoding layer: index, conditional center, and width sigma_i."""

    layer: int
    center: float
    sigma_i: float


def resolve_sigma(policy: SigmaPolicy, r: QrFactors) -> float:
    """Concrete sigma for a policy against the given triangular factor."""
    if policy.mode == "fixed":
        if policy.value is None or not policy.value > 0.0:
            raise InvalidConfigError(f"fixed sigma must be positive, got {policy.value}")
        return float(policy.value)
    if policy.mode == "paper_default":
        return min_diag(r) * PAPER_SIGMA_SCALE
    raise InvalidConfigError(f"unknown sigma policy {policy.mode!r}")


def layer_center(y: np.ndarray, r: QrFactors, partial, i: int) -> float:
    """Conditional center of layer i given x_{i+1}..x_n (1-indexed layers).

    partial lists the fixed coordinates in ascending layer order,
    (x_{i+1}, ..., x_n).
    """
    n = r.n
    partial = list(partial)
    if len(partial) != n - i:
        raise ValueError(f"partial must cover layers {i + 1}..{n}")
    rm = r.r
    acc = 0.0
    for k, xj in enumerate(partial):
        acc += rm[i - 1, i + k] * xj
    return (float(y[i - 1]) - acc) / rm[i - 1, i - 1]


def make_layer_context(r: QrFactors, y: np.ndarray, sigma: float, i: int,
                       partial) -> LayerContext:
    return LayerContext(layer=i,
                        center=layer_center(y, r, partial, i),
                        sigma_i=sigma / abs(float(r.r[i - 1, i - 1])))


def f_weight(x_hat: float, ctx: LayerContext) -> float:
    """Unnormalized Gaussian weight exp(-(x - center)^2 / (2 sigma_i^2))."""
    d = x_hat - ctx.center
    return math.exp(-(d * d) / (2.0 * ctx.sigma_i * ctx.sigma_i))


def nearest_int(c: float) -> int:
    """Closest integer to c; an exact tie resolves to the smaller integer."""
    return int(math.ceil(c - 0.5))


def closest_integers(c: float, count: int) -> list[int]:
    """The count closest integers to c, closest first, smaller-on-tie."""
    out = [nearest_int(c)]
    lo = out[0] - 1
    hi = out[0] + 1
    while len(out) < count:
        if c - lo <= hi - c:  # tie prefers the smaller integer
            out.append(lo)
            lo -= 1
        else:
            out.append(hi)
            hi += 1
    return out


def _trunc_window(center: float, sigma_i: float, tol: float) -> tuple[int, int]:
    rad = math.ceil(sigma_i * math.sqrt(2.0 * math.log(1.0 / tol))) + 2
    return math.ceil(center - rad), math.floor(center + rad)


def rho_z(ctx: LayerContext, tol: float = RHO_TOL) -> float:
    """Gaussian mass of the integers around the layer center.

    Truncated to integers within ceil(sigma_i * sqrt(2 ln(1/tol))) + 2 of
    the center; the neglected tail is below tol by the Gaussian tail bound.
    The plain sum underflows to 0.0 below sigma_i ~ 0.013; ratio and log
    consumers should go through klein_layer_pmf / log_rho_z, which rescale
    by the dominant term first.
    """
    lo, hi = _trunc_window(ctx.center, ctx.sigma_i, tol)
    inv2s2 = 1.0 / (2.0 * ctx.sigma_i * ctx.sigma_i)
    total = 0.0
    for z in range(lo, hi + 1):
        d = z - ctx.center
        total += math.exp(-(d * d) * inv2s2)
    return total


def _rescaled_mass(ctx: LayerContext, tol: float) -> tuple[float, float, float]:
    """(mass * exp(e0), e0, inv2s2) with e0 the dominant-term exponent."""
    lo, hi = _trunc_window(ctx.center, ctx.sigma_i, tol)
    inv2s2 = 1.0 / (2.0 * ctx.sigma_i * ctx.sigma_i)
    d0 = nearest_int(ctx.center) - ctx.center
    e0 = d0 * d0 * inv2s2
    total = 0.0
    for z in range(lo, hi + 1):
        d = z - ctx.center
        total += math.exp(e0 - (d * d) * inv2s2)
    return total, e0, inv2s2


def log_rho_z(ctx: LayerContext, tol: float = RHO_TOL) -> float:
    """log of the truncated integer Gaussian mass, stable at tiny widths."""
    total, e0, _ = _rescaled_mass(ctx, tol)
    return math.log(total) - e0


def klein_layer_pmf(ctx: LayerContext, j_max: int = 3) -> list[tuple[int, float]]:
    """The j_max most probable integers of the layer distribution.

    Entries are (integer, probability) in closest-first order; each
    probability is the Gaussian weight normalized by the full integer mass,
    so the returned list sums to at most 1.
    """
    if j_max < 1:
        raise ValueError("j_max must be at least 1")
    total, e0, inv2s2 = _rescaled_mass(ctx, RHO_TOL)
    out = []
    for z in closest_integers(ctx.center, j_max):
        d = z - ctx.center
        out.append((z, math.exp(e0 - (d * d) * inv2s2) / total))
    return out


def log_klein_prob(x, r: QrFactors, y: np.ndarray, sigma: float) -> float:
    """log of the backward per-layer probability product along x's path."""
    x = np.asarray(x)
    n = r.n
    logp = 0.0
    for i in range(n, 0, -1):
        ctx = make_layer_context(r, y, sigma, i, x[i:n])
        d = float(x[i - 1]) - ctx.center
        logp += -(d * d) / (2.0 * ctx.sigma_i * ctx.sigma_i) - log_rho_z(ctx)
    return logp


def klein_prob(x, r: QrFactors, y: np.ndarray, sigma: float) -> float:
    """Probability that backward layer-by-layer sampling returns exactly x.

    Equals the product over layers of the conditional integer-Gaussian
    probabilities evaluated along x's own path.
    """
    return math.exp(log_klein_prob(x, r, y, sigma))


def klein_prob_box(r: QrFactors, y: np.ndarray, sigma: float,
                   pts: np.ndarray) -> np.ndarray:
    """Vectorized klein_prob over rows of pts (box-scan oracle helper)."""
    pts = np.asarray(pts, dtype=np.float64)
    rm = r.r
    n = r.n
    logp = np.zeros(len(pts))
    for i in range(n, 0, -1):
        sig = sigma / abs(float(rm[i - 1, i - 1]))
        inv2s2 = 1.0 / (2.0 * sig * sig)
        centers = (float(y[i - 1]) - pts[:, i:n] @ rm[i - 1, i:n]) / rm[i - 1, i - 1]
        rad = math.ceil(sig * math.sqrt(2.0 * math.log(1.0 / RHO_TOL))) + 2
        base = np.ceil(centers - rad)
        offs = np.arange(0, 2 * rad + 1)
        zs = base[:, None] + offs[None, :]
        d0 = np.ceil(centers - 0.5) - centers
        e0 = d0 * d0 * inv2s2
        mass = np.exp(e0[:, None] - ((zs - centers[:, None]) ** 2) * inv2s2).sum(axis=1)
        d = pts[:, i - 1] - centers
        logp += -(d * d) * inv2s2 - (np.log(mass) - e0)
    return np.exp(logp)


def jacobi_theta3(nu: float, tol: float = 1e-12) -> float:
    """Theta series 1 + 2 sum_{k>=1} exp(-pi nu k^2), truncated below tol."""
    if not nu > 0.0:
        raise ValueError(f"nu must be positive, got {nu}")
    total = 1.0
    k = 1
    while True:
        term = 2.0 * math.exp(-math.pi * nu * k * k)
        if term < tol:
            break
        total += term
        k += 1
    return total


def lattice_gauss_mass(r: QrFactors, y: np.ndarray, sigma: float,
                       box_halfwidth: int = 3,
                       ) -> tuple[float, dict[tuple[int, ...], float]]:
    """Box-sum Gaussian mass over the lattice and per-point probabilities.

    Small-n oracle only (n <= 8): the denominator of the lattice-Gaussian
    distribution has no closed form, so it is approximated by summing
    exp(-||Rx - y||^2 / 2 sigma^2) over the integer box centered on the
    nearest-plane point.  Probabilities are normalized over the box.
    """
    if r.n > 8:
        raise DimensionTooLargeError(f"mass oracle limited to n <= 8, got {r.n}")
    from .lattice import _babai_point, _box_points

    y = np.asarray(y, dtype=np.float64)
    pts = _box_points(_babai_point(r, y), box_halfwidth)
    d2 = ((pts @ r.r.T - y) ** 2).sum(axis=1)
    w = np.exp(-d2 / (2.0 * sigma * sigma))
    total = float(w.sum())
    probs = {tuple(int(v) for v in p): float(wi / total) for p, wi in zip(pts, w)}
    return total, probs
