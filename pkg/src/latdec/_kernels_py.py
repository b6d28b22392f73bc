"""Pure-Python decoding kernels.

Reference twin of the compiled extension in ``_kernels.pyx``: identical
arithmetic, identical traversal order, identical outputs.  Selected at
import time by ``_backend`` when the extension is unavailable (or forced
via LATDEC_PURE_PYTHON=1).  This twin additionally supports trace
collection, which the dispatch layer always routes here.

Layer indexing inside kernels is 0-based; a node that has just assigned
coordinate i has i unassigned coordinates left below it, which equals
its 0-based trace layer.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ResourceLimitError, SingularBasisError

BACKEND = "python"

# Relative guard on pruning-threshold comparisons: keeps exact set
# equality between the budget test (kappa >= 1) and the squared-radius
# interval test robust at interval boundaries.
THRESH = 1.0 - 1e-12
D2_EPS = 1e-12

RHO_TOL = 1e-15


def _nearest(c: float) -> int:
    # closest integer, exact tie resolves to the smaller integer
    return math.ceil(c - 0.5)


def _rows(a) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(a, dtype=np.float64)]


def babai_kernel(R, y) -> np.ndarray:
    """Nearest-plane rounding from the last layer down."""
    Rl = _rows(R)
    yl = [float(v) for v in np.asarray(y, dtype=np.float64)]
    n = len(yl)
    x = [0] * n
    for i in range(n - 1, -1, -1):
        acc = 0.0
        for j in range(i + 1, n):
            acc += Rl[i][j] * x[j]
        x[i] = _nearest((yl[i] - acc) / Rl[i][i])
    return np.array(x, dtype=np.int64)


def _sic_fill(Rl, yl, n, i_from, x) -> float:
    """Round coordinates i_from..0; returns the added squared distance."""
    add = 0.0
    for m in range(i_from, -1, -1):
        acc = 0.0
        for j in range(m + 1, n):
            acc += Rl[m][j] * x[j]
        center = (yl[m] - acc) / Rl[m][m]
        x[m] = _nearest(center)
        d = Rl[m][m] * (x[m] - center)
        add += d * d
    return add


def enum_kernel(R, y, d2_limit: float, node_cap: int, j_limit: int = 0,
                trace=None, trace_k: float = 0.0, trace_sigma: float = 0.0):
    """DFS enumeration of {x : ||Rx - y||^2 <= d2_limit (1 + eps)}.

    Children of each node are exactly the integers of the closed per-layer
    interval, walked closest-first.  Returns (candidates, squared
    distances, visited count); every saved partial assignment counts as
    one visited node.
    """
    Rl = _rows(R)
    yl = [float(v) for v in np.asarray(y, dtype=np.float64)]
    n = len(yl)
    d2_eff = d2_limit * (1.0 + D2_EPS)
    x = [0] * n
    cands: list[tuple[int, ...]] = []
    d2s: list[float] = []
    state = [0]  # visited

    def rec(i: int, ssq: float):
        acc = 0.0
        for j in range(i + 1, n):
            acc += Rl[i][j] * x[j]
        rii = Rl[i][i]
        center = (yl[i] - acc) / rii
        rem = d2_eff - ssq
        if rem < 0.0:
            return
        t = math.sqrt(rem) / rii
        lo = math.ceil(center - t)
        hi = math.floor(center + t)
        if hi < lo:
            return
        z = _nearest(center)
        if z < lo:
            z = lo
        elif z > hi:
            z = hi
        a = z - 1
        b = z + 1
        count = 0
        while True:
            d = rii * (z - center)
            ssq_c = ssq + d * d
            x[i] = z
            state[0] += 1
            if state[0] > node_cap:
                raise ResourceLimitError(f"node cap {node_cap} exceeded")
            if trace is not None:
                ksize = trace_k * math.exp(-ssq_c / (2.0 * trace_sigma * trace_sigma)) \
                    if trace_sigma > 0.0 else float("nan")
                trace.append((i, tuple(x[i:]), ksize, ssq_c))
            if i == 0:
                cands.append(tuple(x))
                d2s.append(ssq_c)
            else:
                rec(i - 1, ssq_c)
            count += 1
            if j_limit > 0 and count >= j_limit:
                break
            if a >= lo and (b > hi or center - a <= b - center):
                z = a
                a -= 1
            elif b <= hi:
                z = b
                b += 1
            else:
                break

    rec(n - 1, 0.0)
    return cands, d2s, state[0]


def esd_protect_kernel(R, y, sigma: float, k: float, node_cap: int,
                       j_limit: int = 0, trace=None):
    """Budget-pruned enumeration with candidate protection.

    Same search region as enum_kernel at squared radius 2 sigma^2 ln k,
    but a saved node whose remaining budget k exp(-ssq / 2 sigma^2) falls
    in [1, 2) is completed by nearest-plane rounding (one visited node per
    completed layer) instead of branching.  The root counts as a saved
    node for this rule, so k < 2 degenerates to plain nearest-plane.
    """
    Rl = _rows(R)
    yl = [float(v) for v in np.asarray(y, dtype=np.float64)]
    n = len(yl)
    cands: list[tuple[int, ...]] = []
    d2s: list[float] = []
    state = [0, 0]  # visited, protected

    if k < 2.0:
        x = [0] * n
        ssq = _sic_fill(Rl, yl, n, n - 1, x)
        state[0] = n
        state[1] = 1
        cands.append(tuple(x))
        d2s.append(ssq)
        return cands, d2s, state[0], state[1]

    dr = sigma * math.sqrt(2.0 * math.log(k))
    d2_eff = (dr * dr) * (1.0 + D2_EPS)
    d2_half = 2.0 * sigma * sigma * math.log(k / 2.0)
    x = [0] * n

    def rec(i: int, ssq: float):
        acc = 0.0
        for j in range(i + 1, n):
            acc += Rl[i][j] * x[j]
        rii = Rl[i][i]
        center = (yl[i] - acc) / rii
        rem = d2_eff - ssq
        if rem < 0.0:
            return
        t = math.sqrt(rem) / rii
        lo = math.ceil(center - t)
        hi = math.floor(center + t)
        if hi < lo:
            return
        z = _nearest(center)
        if z < lo:
            z = lo
        elif z > hi:
            z = hi
        a = z - 1
        b = z + 1
        count = 0
        while True:
            d = rii * (z - center)
            ssq_c = ssq + d * d
            x[i] = z
            state[0] += 1
            if state[0] > node_cap:
                raise ResourceLimitError(f"node cap {node_cap} exceeded")
            if trace is not None:
                trace.append((i, tuple(x[i:]),
                              k * math.exp(-ssq_c / (2.0 * sigma * sigma)), ssq_c))
            if i == 0:
                cands.append(tuple(x))
                d2s.append(ssq_c)
            elif ssq_c <= d2_half:
                rec(i - 1, ssq_c)
            else:
                add = _sic_fill(Rl, yl, n, i - 1, x)
                state[0] += i
                if state[0] > node_cap:
                    raise ResourceLimitError(f"node cap {node_cap} exceeded")
                state[1] += 1
                cands.append(tuple(x))
                d2s.append(ssq_c + add)
            count += 1
            if j_limit > 0 and count >= j_limit:
                break
            if a >= lo and (b > hi or center - a <= b - center):
                z = a
                a -= 1
            elif b <= hi:
                z = b
                b += 1
            else:
                break

    rec(n - 1, 0.0)
    return cands, d2s, state[0], state[1]


def rsd_kernel(R, y, sigma: float, k: float, j_max: int, protection: bool,
               node_cap: int, trace=None):
    """Klein-probability pruned tree search.

    Each node's budget multiplies down the path by the conditional
    integer-Gaussian probability of the chosen child (weight normalized by
    the truncated integer mass).  Children are the j_max closest integers,
    probed closest-first; a child survives while budget * p >= 1.  With
    protection on, a surviving child with budget in [1, 2) is completed by
    nearest-plane rounding; the root itself obeys the same rule.

    Returns (candidates, squared distances, visited, protected, probed).
    """
    Rl = _rows(R)
    yl = [float(v) for v in np.asarray(y, dtype=np.float64)]
    n = len(yl)
    cands: list[tuple[int, ...]] = []
    d2s: list[float] = []
    state = [0, 0, 0]  # visited, protected, probed

    if protection and k < 2.0:
        x = [0] * n
        ssq = _sic_fill(Rl, yl, n, n - 1, x)
        state[0] = n
        state[1] = 1
        cands.append(tuple(x))
        d2s.append(ssq)
        return cands, d2s, state[0], state[1], state[2]

    rad_scale = math.sqrt(2.0 * math.log(1.0 / RHO_TOL))
    x = [0] * n

    def rec(i: int, kappa: float, ssq: float):
        acc = 0.0
        for j in range(i + 1, n):
            acc += Rl[i][j] * x[j]
        rii = Rl[i][i]
        center = (yl[i] - acc) / rii
        sig = sigma / rii
        inv2s2 = 1.0 / (2.0 * sig * sig)
        rad = math.ceil(sig * rad_scale) + 2
        z = _nearest(center)
        d0 = z - center
        e0 = d0 * d0 * inv2s2  # rescale by the dominant term; tiny sig_i
        rho = 0.0              # would otherwise underflow the whole mass
        for zz in range(math.ceil(center - rad), math.floor(center + rad) + 1):
            dz = zz - center
            rho += math.exp(e0 - dz * dz * inv2s2)
        a = z - 1
        b = z + 1
        count = 0
        while count < j_max:
            d = z - center
            p = math.exp(e0 - d * d * inv2s2) / rho
            kc = kappa * p
            if kc < THRESH:
                state[2] += 1
                break  # children are probed closest-first; the rest only shrink
            x[i] = z
            state[0] += 1
            if state[0] > node_cap:
                raise ResourceLimitError(f"node cap {node_cap} exceeded")
            dd = rii * d
            ssq_c = ssq + dd * dd
            if trace is not None:
                trace.append((i, tuple(x[i:]), kc, ssq_c))
            if i == 0:
                cands.append(tuple(x))
                d2s.append(ssq_c)
            elif protection and kc < 2.0:
                add = _sic_fill(Rl, yl, n, i - 1, x)
                state[0] += i
                if state[0] > node_cap:
                    raise ResourceLimitError(f"node cap {node_cap} exceeded")
                state[1] += 1
                cands.append(tuple(x))
                d2s.append(ssq_c + add)
            else:
                rec(i - 1, kc, ssq_c)
            count += 1
            # two-pointer outward walk, smaller integer wins distance ties
            if center - a <= b - center:
                z = a
                a -= 1
            else:
                z = b
                b += 1

    rec(n - 1, k, 0.0)
    return cands, d2s, state[0], state[1], state[2]


def klein_sample_kernel(R, y, sigma: float, num_samples: int, seed: int):
    """num_samples i.i.d. draws of the backward per-layer sampler.

    Each coordinate is drawn by inverse CDF over the truncated per-layer
    pmf (same truncation window as the mass sums).  Deterministic for a
    given seed.  Returns (samples as tuples, squared distances, visited).
    """
    Rl = _rows(R)
    yl = [float(v) for v in np.asarray(y, dtype=np.float64)]
    n = len(yl)
    rng = np.random.default_rng(seed)
    rad_scale = math.sqrt(2.0 * math.log(1.0 / RHO_TOL))
    samples: list[tuple[int, ...]] = []
    d2s: list[float] = []
    x = [0] * n
    for _ in range(num_samples):
        ssq = 0.0
        for i in range(n - 1, -1, -1):
            acc = 0.0
            for j in range(i + 1, n):
                acc += Rl[i][j] * x[j]
            rii = Rl[i][i]
            center = (yl[i] - acc) / rii
            sig = sigma / rii
            inv2s2 = 1.0 / (2.0 * sig * sig)
            rad = math.ceil(sig * rad_scale) + 2
            lo = math.ceil(center - rad)
            d0 = _nearest(center) - center
            e0 = d0 * d0 * inv2s2
            weights = []
            total = 0.0
            for zz in range(lo, math.floor(center + rad) + 1):
                dz = zz - center
                w = math.exp(e0 - dz * dz * inv2s2)
                total += w
                weights.append(total)
            u = rng.random() * total
            pick = lo + len(weights) - 1
            for idx, cum in enumerate(weights):
                if u <= cum:
                    pick = lo + idx
                    break
            x[i] = pick
            d = rii * (pick - center)
            ssq += d * d
        samples.append(tuple(x))
        d2s.append(ssq)
    return samples, d2s, n * num_samples


def lll_kernel(B, delta: float) -> np.ndarray:
    """Floating-point LLL with exact integer transform tracking.

    Works on a column-major copy; Gram-Schmidt data is recomputed from
    scratch after every swap (simple and bit-stable across backends).
    Returns the unimodular transform U with input @ U reduced.
    """
    Bm = np.asarray(B, dtype=np.float64)
    n = Bm.shape[0]
    # cols[j][t] is entry (t, j)
    cols = [[float(Bm[t, j]) for t in range(n)] for j in range(n)]
    ucols = [[1 if t == j else 0 for t in range(n)] for j in range(n)]
    bstar = [[0.0] * n for _ in range(n)]
    mu = [[0.0] * n for _ in range(n)]
    norm2 = [0.0] * n

    def gs():
        for i in range(n):
            v = list(cols[i])
            for j in range(i):
                num = 0.0
                for t in range(n):
                    num += v[t] * bstar[j][t]
                m = num / norm2[j]
                mu[i][j] = m
                for t in range(n):
                    v[t] -= m * bstar[j][t]
            s = 0.0
            for t in range(n):
                s += v[t] * v[t]
            if s <= 1e-24:
                raise SingularBasisError("basis is numerically rank deficient")
            bstar[i] = v
            norm2[i] = s

    gs()
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 1_000_000:
            raise RuntimeError("LLL failed to converge")
        for j in range(k - 1, -1, -1):
            q = _nearest(mu[k][j])
            if q != 0:
                for t in range(n):
                    cols[k][t] -= q * cols[j][t]
                    ucols[k][t] -= q * ucols[j][t]
                for t in range(j):
                    mu[k][t] -= q * mu[j][t]
                mu[k][j] -= q
        if norm2[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norm2[k - 1]:
            k += 1
        else:
            cols[k - 1], cols[k] = cols[k], cols[k - 1]
            ucols[k - 1], ucols[k] = ucols[k], ucols[k - 1]
            gs()
            k = max(k - 1, 1)

    u = np.empty((n, n), dtype=np.int64)
    for j in range(n):
        for t in range(n):
            u[t, j] = ucols[j][t]
    return u
