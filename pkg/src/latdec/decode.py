"""The decoder family.

Nearest-plane rounding, fixed-radius enumeration, the budget-pruned
search (esd) equivalent to fixed-radius enumeration at squared radius
2 sigma^2 ln K, the Klein-probability pruned search (rsd) with candidate
protection, and the randomized backward sampler.  All decoders are pure
functions of (factors, target, options) and count every saved node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import _backend
from .errors import InvalidConfigError, RadiusUndefinedError
from .gaussian import SigmaPolicy, log_rho_z, make_layer_context, resolve_sigma
from .lattice import QrFactors

DEFAULT_NODE_CAP = 10_000_000

# exp() overflow guard for pruning budgets derived from a target radius
_MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class SearchNode:
    """One saved node: trace record of the tree search.

    layer 0 means a complete assignment; the assignment tuple covers
    layers layer+1 .. n (deepest-first storage order is ascending layer).
    """

    layer: int
    assignment: tuple[int, ...]
    pruning_size: float
    partial_sq_dist: float


@dataclass(frozen=True)
class DecodeOptions:
    """Knobs shared by the pruned decoders.

    candidate_protection defaults to the decoder's own convention (on for
    rsd, off for esd) when left as None.  j_max limits rsd children; esd
    enumerates its full interval unless esd_j_limit is set (> 0).
    """

    initial_k: float = 1.0
    sigma_policy: SigmaPolicy = field(default_factory=SigmaPolicy.paper)
    j_max: int = 3
    candidate_protection: Optional[bool] = None
    use_lll: bool = False
    node_cap: int = DEFAULT_NODE_CAP
    esd_j_limit: int = 0  # 0 = full interval

    def validate(self):
        if not self.initial_k >= 1.0:
            raise InvalidConfigError(f"initial_k must be >= 1, got {self.initial_k}")
        if self.j_max < 1:
            raise InvalidConfigError(f"j_max must be >= 1, got {self.j_max}")
        if self.node_cap < 1:
            raise InvalidConfigError(f"node_cap must be >= 1, got {self.node_cap}")
        if self.esd_j_limit < 0:
            raise InvalidConfigError(
                f"esd_j_limit must be >= 0, got {self.esd_j_limit}")


@dataclass(frozen=True)
class DecodeOutcome:
    """Candidate list plus instrumentation counters.

    candidates are distinct, in emission order; best is the minimum
    distance candidate (first on ties) or None when the list is empty.
    visited_nodes counts saved nodes across all layers, probe_count the
    children examined but pruned.
    """

    best: Optional[np.ndarray]
    best_dist: float
    candidates: list[tuple[np.ndarray, float]]
    visited_nodes: int
    candidate_count: int
    protected_count: int = 0
    probe_count: int = 0

    @property
    def empty(self) -> bool:
        return self.best is None


def _outcome(cands, d2s, visited, protected=0, probed=0) -> DecodeOutcome:
    seen = {}
    for tup, d2 in zip(cands, d2s):
        if tup not in seen:
            seen[tup] = d2
    pairs = [(np.array(t, dtype=np.int64), math.sqrt(d2)) for t, d2 in seen.items()]
    best = None
    best_dist = math.inf
    for vec, dist in pairs:
        if dist < best_dist:
            best = vec
            best_dist = dist
    return DecodeOutcome(best=best, best_dist=best_dist, candidates=pairs,
                         visited_nodes=int(visited), candidate_count=len(pairs),
                         protected_count=int(protected), probe_count=int(probed))


def _as_vec(y) -> np.ndarray:
    return np.ascontiguousarray(y, dtype=np.float64)


def babai_sic(r: QrFactors, y) -> np.ndarray:
    """Successive nearest-plane rounding from layer n down to 1."""
    return np.asarray(_backend.kernels.babai_kernel(r.r, _as_vec(y)))


def fincke_pohst(r: QrFactors, y, d_radius: float,
                 node_cap: int = DEFAULT_NODE_CAP) -> DecodeOutcome:
    """Enumerate every lattice point within d_radius of the target.

    An empty candidate list is a valid outcome (radius smaller than the
    lattice distance), not an error.
    """
    if d_radius < 0.0:
        raise InvalidConfigError(f"d_radius must be >= 0, got {d_radius}")
    cands, d2s, visited = _backend.kernels.enum_kernel(
        r.r, _as_vec(y), d_radius * d_radius, node_cap)
    return _outcome(cands, d2s, visited)


def _fill_trace(sink: list, raw: list):
    for layer, suffix, ksize, ssq in raw:
        sink.append(SearchNode(layer=layer, assignment=suffix,
                               pruning_size=ksize, partial_sq_dist=ssq))


def esd(r: QrFactors, y, opts: DecodeOptions,
        trace: Optional[list] = None) -> DecodeOutcome:
    """Budget-pruned sphere decoding.

    A node's budget is the initial K times the Gaussian layer weights
    down its path; children survive while the budget stays >= 1, which
    makes the search region exactly the fixed-radius ball of radius
    sigma sqrt(2 ln K).  Protection (off by default here) completes
    low-budget branches by nearest-plane rounding instead of dropping
    them.
    """
    opts.validate()
    y = _as_vec(y)
    sigma = resolve_sigma(opts.sigma_policy, r)
    protection = opts.candidate_protection if opts.candidate_protection is not None else False
    j_limit = opts.esd_j_limit
    if protection:
        if trace is not None:
            raw: list = []
            from . import _kernels_py
            cands, d2s, visited, protected = _kernels_py.esd_protect_kernel(
                r.r, y, sigma, opts.initial_k, opts.node_cap, j_limit, trace=raw)
            _fill_trace(trace, raw)
        else:
            cands, d2s, visited, protected = _backend.kernels.esd_protect_kernel(
                r.r, y, sigma, opts.initial_k, opts.node_cap, j_limit)
        return _outcome(cands, d2s, visited, protected)
    dr = sigma * math.sqrt(2.0 * math.log(opts.initial_k))
    if trace is not None:
        raw = []
        from . import _kernels_py
        cands, d2s, visited = _kernels_py.enum_kernel(
            r.r, y, dr * dr, opts.node_cap, j_limit,
            trace=raw, trace_k=opts.initial_k, trace_sigma=sigma)
        _fill_trace(trace, raw)
    else:
        cands, d2s, visited = _backend.kernels.enum_kernel(
            r.r, y, dr * dr, opts.node_cap, j_limit)
    return _outcome(cands, d2s, visited)


def rsd(r: QrFactors, y, opts: DecodeOptions,
        trace: Optional[list] = None) -> DecodeOutcome:
    """Klein-probability pruned sphere decoding with candidate protection.

    Children are the j_max closest integers per layer; budgets multiply
    by the conditional integer-Gaussian probability instead of the bare
    weight, which buys each path an extra mass-normalization factor of
    search radius.  With protection on (the default), any saved node with
    budget in [1, 2), the root included, is completed by nearest-plane
    rounding, so the outcome is never empty and K = 1 degenerates to the
    nearest-plane decoder at exactly n visited nodes.
    """
    opts.validate()
    y = _as_vec(y)
    sigma = resolve_sigma(opts.sigma_policy, r)
    protection = opts.candidate_protection if opts.candidate_protection is not None else True
    if trace is not None:
        raw: list = []
        from . import _kernels_py
        cands, d2s, visited, protected, probed = _kernels_py.rsd_kernel(
            r.r, y, sigma, opts.initial_k, opts.j_max, protection,
            opts.node_cap, trace=raw)
        _fill_trace(trace, raw)
    else:
        cands, d2s, visited, protected, probed = _backend.kernels.rsd_kernel(
            r.r, y, sigma, opts.initial_k, opts.j_max, protection, opts.node_cap)
    return _outcome(cands, d2s, visited, protected, probed)


def klein_sampler_decode(r: QrFactors, y, sigma: float, num_samples: int,
                         rng_seed: int) -> DecodeOutcome:
    """Randomized baseline: i.i.d. backward layer-by-layer sampling.

    Distinct samples become the candidate list; deterministic for a fixed
    seed.  Each sample walks n layers, so visited_nodes = n * num_samples.
    """
    if num_samples < 1:
        raise InvalidConfigError(f"num_samples must be >= 1, got {num_samples}")
    samples, d2s, visited = _backend.kernels.klein_sample_kernel(
        r.r, _as_vec(y), float(sigma), int(num_samples), int(rng_seed))
    return _outcome(samples, d2s, visited)


class KBudget(NamedTuple):
    """Pruning budget for a target radius, with an overflow flag."""

    value: float
    capped: bool


def k_for_radius(r: QrFactors, d_target: float, sigma: Optional[float] = None) -> KBudget:
    """Initial budget K whose search radius sigma sqrt(2 ln K) = d_target.

    K = exp(d_target^2 / (2 sigma^2)); sigma defaults to the min-diagonal
    policy of the given factors.  Exponents above 700 are capped and
    flagged rather than overflowing.
    """
    if d_target < 0.0:
        raise InvalidConfigError(f"d_target must be >= 0, got {d_target}")
    if sigma is None:
        sigma = resolve_sigma(SigmaPolicy.paper(), r)
    if not sigma > 0.0:
        raise InvalidConfigError(f"sigma must be positive, got {sigma}")
    exponent = (d_target * d_target) / (2.0 * sigma * sigma)
    if exponent > _MAX_EXPONENT:
        return KBudget(value=math.exp(_MAX_EXPONENT), capped=True)
    return KBudget(value=math.exp(exponent), capped=False)


def regularized_radius_along_path(x, r: QrFactors, y, sigma: float,
                                  k: float) -> float:
    """Per-path search radius sigma sqrt(2 ln(K / prod_i rho_i)).

    rho_i is the integer Gaussian mass at the layer-i center computed
    along x's own path.  Raises RadiusUndefinedError when K is below the
    mass product (negative squared radius).  Diagnostic quantity; the
    decoders never evaluate it.
    """
    x = np.asarray(x)
    y = _as_vec(y)
    log_rho_sum = 0.0
    for i in range(r.n, 0, -1):
        ctx = make_layer_context(r, y, sigma, i, x[i:r.n])
        log_rho_sum += log_rho_z(ctx)
    val = math.log(k) - log_rho_sum
    if val < 0.0:
        raise RadiusUndefinedError(
            f"budget {k} is below the path mass product exp({log_rho_sum})")
    return sigma * math.sqrt(2.0 * val)
