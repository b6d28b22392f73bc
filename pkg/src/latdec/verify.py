"""Property-verification suites.

Each suite draws randomized instances from a seed, checks one of the
library's exactness or bound guarantees against an independent oracle,
and reports instance counts plus worst-case margins.  The CLI `verify`
subcommand and the acceptance tests both run these functions, so the
gate logic lives in exactly one place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decode import DecodeOptions, babai_sic, fincke_pohst, esd, rsd, \
    k_for_radius, regularized_radius_along_path
from .gaussian import LayerContext, SigmaPolicy, jacobi_theta3, \
    klein_layer_pmf, klein_prob_box, resolve_sigma
from .lattice import LatticeBasis, QrFactors, brute_force_cvp, qr_decompose
from .lattice import _babai_point, _box_points  # box-scan oracle plumbing


@dataclass
class SuiteResult:
    name: str
    passed: bool
    instances: int
    worst_margin: float
    details: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"suite {self.name}: {status} instances={self.instances} "
                f"worst_margin={self.worst_margin:.6g}")


def _random_factors(rng, n: int) -> tuple[QrFactors, float]:
    f = qr_decompose(LatticeBasis(rng.standard_normal((n, n))))
    return f, resolve_sigma(SigmaPolicy.paper(), f)


def _random_target(rng, f: QrFactors, noise_scale: float) -> np.ndarray:
    x0 = rng.integers(-4, 5, f.n)
    return f.r @ x0 + rng.standard_normal(f.n) * noise_scale


def suite_esd_enum_equivalence(seed: int, instances: int = 200) -> SuiteResult:
    """Budget-pruned search vs fixed-radius enumeration: exact set equality.

    Radius sigma sqrt(2 ln K) must reproduce the candidate set and the
    visited-node count, instance by instance, with zero tolerance.
    """
    rng = np.random.default_rng(seed)
    ks = (2.0, 10.0, 100.0)
    mismatches = 0
    for t in range(instances):
        n = 2 + t % 7  # n in 2..8
        f, sigma = _random_factors(rng, n)
        k = ks[t % len(ks)]
        y = _random_target(rng, f, sigma)
        a = esd(f, y, DecodeOptions(initial_k=k))
        b = fincke_pohst(f, y, sigma * math.sqrt(2.0 * math.log(k)))
        set_a = {tuple(v) for v, _ in a.candidates}
        set_b = {tuple(v) for v, _ in b.candidates}
        if set_a != set_b or a.visited_nodes != b.visited_nodes:
            mismatches += 1
    return SuiteResult(
        name="theorem1", passed=mismatches == 0, instances=instances,
        worst_margin=float(mismatches),
        details=[f"{instances - mismatches}/{instances} exact set matches"])


def suite_rsd_superset(seed: int, instances: int = 100) -> SuiteResult:
    """Every box point with path probability >= 1/K appears in the rsd list."""
    rng = np.random.default_rng(seed)
    ks = (2.0, 5.0, 10.0, 50.0)
    missing_total = 0
    checked = 0
    for t in range(instances):
        n = 2 + t % 5  # n in 2..6
        f, sigma = _random_factors(rng, n)
        k = ks[t % len(ks)]
        y = _random_target(rng, f, sigma)
        pts = _box_points(_babai_point(f, y), 3)
        probs = klein_prob_box(f, y, sigma, pts)
        required = {tuple(int(v) for v in p) for p in pts[probs >= 1.0 / k]}
        out = rsd(f, y, DecodeOptions(initial_k=k))
        got = {tuple(v) for v, _ in out.candidates}
        missing_total += len(required - got)
        checked += len(required)
    return SuiteResult(
        name="theorem5", passed=missing_total == 0, instances=instances,
        worst_margin=float(missing_total),
        details=[f"{checked} required points checked, {missing_total} missing"])


def suite_bounds(seed: int, instances: int = 400, n_max: int = 16,
                 k_max: float = 1000.0) -> SuiteResult:
    """Visited nodes <= n K and candidates <= max(1, K) for esd and rsd."""
    rng = np.random.default_rng(seed)
    ns = [n for n in (2, 4, 8, 16) if n <= n_max] or [n_max]
    ks = [k for k in (2.0, 10.0, 100.0, 1000.0) if k <= k_max] or [k_max]
    worst_s = 0.0
    worst_l = 0.0
    violations = 0
    count = 0
    for t in range(instances):
        n = ns[t % len(ns)]
        k = ks[(t // len(ns)) % len(ks)]
        f, sigma = _random_factors(rng, n)
        y = _random_target(rng, f, sigma)
        for name, protect in (("esd", False), ("esd", True),
                              ("rsd", False), ("rsd", True)):
            opts = DecodeOptions(initial_k=k, candidate_protection=protect)
            out = esd(f, y, opts) if name == "esd" else rsd(f, y, opts)
            s_ratio = out.visited_nodes / (n * k)
            l_ratio = out.candidate_count / max(1.0, k)
            worst_s = max(worst_s, s_ratio)
            worst_l = max(worst_l, l_ratio)
            if s_ratio > 1.0 or l_ratio > 1.0:
                violations += 1
            count += 1
    return SuiteResult(
        name="bounds", passed=violations == 0, instances=count,
        worst_margin=max(worst_s, worst_l),
        details=[f"worst |S|/(nK)={worst_s:.4f}, worst |L|/max(1,K)={worst_l:.4f}"])


def suite_k1_babai(seed: int, instances: int = 10_000) -> SuiteResult:
    """Budget 1 with protection degenerates to nearest-plane at n nodes."""
    rng = np.random.default_rng(seed)
    bad = 0
    for t in range(instances):
        n = 2 + t % 7
        f, sigma = _random_factors(rng, n)
        y = _random_target(rng, f, sigma * 2.0)
        out = rsd(f, y, DecodeOptions(initial_k=1.0))
        if (out.visited_nodes != n or out.candidate_count != 1
                or not np.array_equal(out.best, babai_sic(f, y))):
            bad += 1
    return SuiteResult(
        name="k1-babai", passed=bad == 0, instances=instances,
        worst_margin=float(bad),
        details=[f"{instances - bad}/{instances} exact nearest-plane matches"])


def suite_theta(seed: int = 0) -> SuiteResult:
    """Theta value checks.

    The quoted reference constant 1.0039 for theta3(2) is less precise
    than its own series: 1 + 2 e^{-2 pi} + 2 e^{-8 pi} + ... = 1.0037349.
    The first check pins the quoted constant at 1e-4 and therefore fails
    by design, documenting the discrepancy; the companion check pins the
    independently summed series value at 1e-12.
    """
    val = jacobi_theta3(2.0)
    quoted = abs(val - 1.0039)
    series = 1.0 + 2.0 * math.exp(-2.0 * math.pi) \
        + 2.0 * math.exp(-8.0 * math.pi) + 2.0 * math.exp(-18.0 * math.pi)
    exact = abs(val - series)
    quoted_ok = quoted <= 1e-4
    exact_ok = exact <= 1e-12
    return SuiteResult(
        name="theta", passed=quoted_ok and exact_ok, instances=1,
        worst_margin=quoted,
        details=[
            f"theta3(2) = {val!r}",
            f"|theta3(2) - 1.0039| = {quoted:.6g} (tolerance 1e-4): "
            + ("PASS" if quoted_ok else "FAIL (quoted constant is imprecise)"),
            f"|theta3(2) - series| = {exact:.3g} (tolerance 1e-12): "
            + ("PASS" if exact_ok else "FAIL"),
        ])


def suite_tail(seed: int, instances: int = 100) -> SuiteResult:
    """Three closest children carry >= 0.999 of each layer distribution.

    Checked at the default width policy over every layer of random bases
    and a grid of fractional centers in [0, 0.5]; also tracks the
    complementary tail against 5e-6.
    """
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 0.5, 51)
    worst_sum3 = 1.0
    worst_tail = 0.0
    for t in range(instances):
        n = 2 + t % 7
        f, sigma = _random_factors(rng, n)
        for i in range(1, n + 1):
            sig_i = sigma / abs(float(f.r[i - 1, i - 1]))
            for c in grid:
                ctx = LayerContext(layer=i, center=float(c), sigma_i=sig_i)
                pmf = klein_layer_pmf(ctx, j_max=3)
                s3 = sum(p for _, p in pmf)
                worst_sum3 = min(worst_sum3, s3)
                worst_tail = max(worst_tail, 1.0 - s3)
    passed = worst_sum3 >= 0.999 and worst_tail <= 5e-6
    return SuiteResult(
        name="tail", passed=passed, instances=instances,
        worst_margin=1.0 - worst_sum3,
        details=[f"worst sum over 3 closest = {worst_sum3:.9f}",
                 f"worst tail beyond 3 = {worst_tail:.3g} (bound 5e-6)"])


def suite_gain(seed: int, min_candidates: int = 1000) -> SuiteResult:
    """Per-path radius guarantee and gain bracket for rsd candidates.

    For threshold-collected candidates (protection off) at K in {10, 100}:
    ||Rx - y|| <= per-path radius, and the gain G over the fixed radius
    sigma sqrt(2 ln K) lies in [0.99, sqrt(1 + sum_i (r_ii / min r)^2 *
    pi / (2 ln K))].  The squared diagonal ratio is what the mass
    inequality rho_{s,c}(Z) >= exp(-d(Z,c)^2 / 2 s^2) actually yields
    (-ln rho_i <= d_i^2 r_ii^2 / (2 sigma^2), d_i <= 1/2); a linear-ratio
    variant of the bound is refuted by random instances and is reported
    here only as an informational count.
    """
    rng = np.random.default_rng(seed)
    ks = (10.0, 100.0)
    checked = 0
    violations = 0
    linear_form_exceeded = 0
    min_gain = math.inf
    max_gain_slack = math.inf  # upper_bound - G, minimized
    max_dist_ratio = 0.0
    t = 0
    while checked < min_candidates and t < 50 * min_candidates:
        n = 2 + t % 7
        k = ks[t % 2]
        f, sigma = _random_factors(rng, n)
        y = _random_target(rng, f, sigma * 1.5)
        out = rsd(f, y, DecodeOptions(initial_k=k, candidate_protection=False))
        d_eq = sigma * math.sqrt(2.0 * math.log(k))
        ratios = np.abs(np.diag(f.r))
        ratios = ratios / ratios.min()
        upper = math.sqrt(1.0 + float(np.sum(ratios ** 2))
                          * math.pi / (2.0 * math.log(k)))
        upper_linear = math.sqrt(1.0 + float(np.sum(ratios))
                                 * math.pi / (2.0 * math.log(k)))
        for vec, dist in out.candidates:
            d_reg = regularized_radius_along_path(vec, f, y, sigma, k)
            gain = d_reg / d_eq
            ratio = dist / d_reg if d_reg > 0 else math.inf
            max_dist_ratio = max(max_dist_ratio, ratio)
            min_gain = min(min_gain, gain)
            max_gain_slack = min(max_gain_slack, upper - gain)
            if ratio > 1.0 + 1e-9 or gain < 0.99 or gain > upper:
                violations += 1
            if gain > upper_linear:
                linear_form_exceeded += 1
            checked += 1
        t += 1
    return SuiteResult(
        name="gain", passed=violations == 0 and checked >= min_candidates,
        instances=checked, worst_margin=float(violations),
        details=[f"{checked} candidates checked, {violations} violations",
                 f"min gain = {min_gain:.6f} (floor 0.99)",
                 f"tightest upper-bound slack = {max_gain_slack:.6f}",
                 f"max dist / per-path radius = {max_dist_ratio:.9f}",
                 f"linear-ratio bound variant exceeded on "
                 f"{linear_form_exceeded} candidates (informational)"])


def suite_cvp_budget(seed: int, instances: int = 50) -> SuiteResult:
    """Oracle distance converted to a budget recovers the true optimum.

    K = exp(d^2 / 2 sigma^2) (1 + 1e-9) makes the pruned search radius
    cover the oracle distance, so the best candidate must equal the
    brute-force argmin exactly.
    """
    rng = np.random.default_rng(seed)
    bad = 0
    for t in range(instances):
        n = 2 + t % 5  # n in 2..6
        f, sigma = _random_factors(rng, n)
        noise = 0.05 * float(np.abs(np.diag(f.r)).min())
        y = _random_target(rng, f, noise)
        x_star, d_star = brute_force_cvp(f, y)
        budget = k_for_radius(f, d_star, sigma)
        out = esd(f, y, DecodeOptions(initial_k=budget.value * (1.0 + 1e-9)))
        if out.best is None or not np.array_equal(out.best, x_star):
            bad += 1
    return SuiteResult(
        name="cvp-budget", passed=bad == 0, instances=instances,
        worst_margin=float(bad),
        details=[f"{instances - bad}/{instances} exact optimum recoveries"])


SUITES = {
    "theorem1": suite_esd_enum_equivalence,
    "theorem5": suite_rsd_superset,
    "bounds": suite_bounds,
    "tail": suite_tail,
    "gain": suite_gain,
    "k1-babai": suite_k1_babai,
    "theta": suite_theta,
    "cvp-budget": suite_cvp_budget,
}
