"""MIMO detection Monte-Carlo harness.

Square QAM with per-rail Gray mapping, uncorrelated complex Gaussian
channels, SNR-calibrated noise, optional LLL and MMSE-extension
preprocessing, and BER/complexity accumulation.  Every trial derives its
own RNG stream from (seed, snr index, trial index), so sweeps are
bit-reproducible regardless of worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decode import (
    DEFAULT_NODE_CAP,
    DecodeOptions,
    babai_sic,
    esd,
    fincke_pohst,
    klein_sampler_decode,
    rsd,
)
from .errors import InvalidConfigError, SingularBasisError
from .gaussian import SigmaPolicy, resolve_sigma
from .lattice import LatticeBasis, complex_to_real, lll_reduce, qr_decompose

QAM_ORDERS = (4, 16, 64)

DECODER_NAMES = ("babai", "esd", "rsd", "ml", "klein")


@dataclass(frozen=True)
class DecoderSpec:
    """A decoder selection for sweeps: name plus its budget.

    k is the pruning budget for esd/rsd and the sample count for klein;
    it is ignored (0) for babai and the ml reference.
    """

    name: str
    k: float = 0.0
    j_max: int = 3

    @staticmethod
    def parse(text: str) -> "DecoderSpec":
        parts = text.strip().split(":")
        name = parts[0].strip().lower()
        if name not in DECODER_NAMES:
            raise InvalidConfigError(f"unknown decoder {name!r}; pick from {DECODER_NAMES}")
        k = 0.0
        if len(parts) > 1:
            k = float(parts[1])
        elif name in ("esd", "rsd", "klein"):
            raise InvalidConfigError(f"decoder {name!r} needs a budget, e.g. {name}:10")
        if len(parts) > 2:
            raise InvalidConfigError(f"bad decoder spec {text!r}")
        if name in ("esd", "rsd") and k < 1.0:
            raise InvalidConfigError(f"{name} budget must be >= 1, got {k}")
        if name == "klein" and (k < 1 or k != int(k)):
            raise InvalidConfigError(f"klein sample count must be a positive integer, got {k}")
        return DecoderSpec(name=name, k=k)

    def label(self) -> str:
        return self.name


@dataclass(frozen=True)
class MimoConfig:
    n_tx: int
    qam_order: int
    snr_db_grid: tuple[float, ...]
    trials: int
    seed: int
    use_lll: bool = False
    use_mmse: bool = False
    decoders: tuple[DecoderSpec, ...] = (DecoderSpec("babai"),)
    node_cap: int = DEFAULT_NODE_CAP
    measure_time: bool = False
    sigma_policy: SigmaPolicy = field(default_factory=SigmaPolicy.paper)

    def validate(self):
        if self.n_tx < 1:
            raise InvalidConfigError(f"n_tx must be >= 1, got {self.n_tx}")
        if self.qam_order not in QAM_ORDERS:
            raise InvalidConfigError(
                f"qam_order must be one of {QAM_ORDERS}, got {self.qam_order}")
        if self.trials < 1:
            raise InvalidConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.snr_db_grid:
            raise InvalidConfigError("snr_db_grid must be nonempty")
        if not self.decoders:
            raise InvalidConfigError("at least one decoder is required")


@dataclass
class TrialRecord:
    bit_errors: int
    bits: int
    visited_nodes: int
    candidate_count: int
    elapsed_ns: int


@dataclass
class CellAggregate:
    """Per-(snr, decoder) accumulator; all sums are integers so merging
    partial results is exactly order-independent."""

    snr_db: float
    decoder: DecoderSpec
    trials: int = 0
    bit_errors: int = 0
    bits: int = 0
    visited_sum: int = 0
    visited_max: int = 0
    cand_sum: int = 0
    cand_max: int = 0
    elapsed_sum: int = 0

    def add(self, rec: TrialRecord):
        self.trials += 1
        self.bit_errors += rec.bit_errors
        self.bits += rec.bits
        self.visited_sum += rec.visited_nodes
        self.visited_max = max(self.visited_max, rec.visited_nodes)
        self.cand_sum += rec.candidate_count
        self.cand_max = max(self.cand_max, rec.candidate_count)
        self.elapsed_sum += rec.elapsed_ns

    def merge(self, other: "CellAggregate"):
        self.trials += other.trials
        self.bit_errors += other.bit_errors
        self.bits += other.bits
        self.visited_sum += other.visited_sum
        self.visited_max = max(self.visited_max, other.visited_max)
        self.cand_sum += other.cand_sum
        self.cand_max = max(self.cand_max, other.cand_max)
        self.elapsed_sum += other.elapsed_sum

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0


# ---------------------------------------------------------------------------
# QAM mapping.  Per rail (real or imaginary axis) the level alphabet is the
# odd integers -(sqrt(M)-1) .. +(sqrt(M)-1).  Rails with 2 or 3 bits use the
# binary-reflected Gray walk from the lowest level upward:
#   16-QAM rail: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3        (normative)
#   64-QAM rail: 000,001,011,010,110,111,101,100 -> -7..+7
# The 1-bit rail of 4-QAM maps 0 -> +1 and 1 -> -1.
# ---------------------------------------------------------------------------

def _gray_decode(g: int) -> int:
    b = 0
    while g:
        b ^= g
        g >>= 1
    return b


def _bits_to_index(bval: int, nbits: int) -> int:
    if nbits == 1:
        return 1 - bval
    return _gray_decode(bval)


def _index_to_bits(idx: int, nbits: int) -> int:
    if nbits == 1:
        return 1 - idx
    return idx ^ (idx >> 1)


def qam_map(bits, m_order: int) -> np.ndarray:
    """Gray-map a bit vector to complex QAM symbols (unnormalized levels).

    Each symbol consumes log2(M) bits, the first half selecting the real
    rail, the second half the imaginary rail.  Constellation energy is
    left unnormalized; SNR calibration happens in noise_sigma.
    """
    bits = np.asarray(bits, dtype=np.int64)
    kb = int(math.log2(m_order))
    if bits.ndim != 1 or len(bits) % kb != 0:
        raise InvalidConfigError(f"bit count must be a multiple of {kb}")
    half = kb // 2
    m = int(math.isqrt(m_order)) - 1  # top level
    nsym = len(bits) // kb
    out = np.empty(nsym, dtype=np.complex128)
    for t in range(nsym):
        chunk = bits[t * kb:(t + 1) * kb]
        re_val = 0
        im_val = 0
        for b in chunk[:half]:
            re_val = (re_val << 1) | int(b)
        for b in chunk[half:]:
            im_val = (im_val << 1) | int(b)
        re_lvl = 2 * _bits_to_index(re_val, half) - m
        im_lvl = 2 * _bits_to_index(im_val, half) - m
        out[t] = complex(re_lvl, im_lvl)
    return out


def qam_demap(symbols, m_order: int) -> np.ndarray:
    """Invert qam_map, quantizing each rail to the nearest alphabet level."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    kb = int(math.log2(m_order))
    half = kb // 2
    nlev = int(math.isqrt(m_order))
    m = nlev - 1
    bits = np.empty(len(symbols) * kb, dtype=np.int64)
    pos = 0
    for s in symbols:
        for val in (s.real, s.imag):
            idx = int(min(max(round((val + m) / 2.0), 0), nlev - 1))
            g = _index_to_bits(idx, half)
            for shift in range(half - 1, -1, -1):
                bits[pos] = (g >> shift) & 1
                pos += 1
    return bits


def symbols_to_lattice(symbols, m_order: int) -> np.ndarray:
    """Stacked [Re; Im] levels mapped affinely onto 0..sqrt(M)-1 integers."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    m = int(math.isqrt(m_order)) - 1
    s_real = np.concatenate([symbols.real, symbols.imag])
    return np.round((s_real + m) / 2.0).astype(np.int64)


def lattice_to_symbols(u, m_order: int) -> np.ndarray:
    """Inverse of symbols_to_lattice (no clipping)."""
    u = np.asarray(u, dtype=np.float64)
    m = int(math.isqrt(m_order)) - 1
    s_real = 2.0 * u - m
    half = len(u) // 2
    return s_real[:half] + 1j * s_real[half:]


def sample_channel(rng: np.random.Generator, n: int) -> np.ndarray:
    """n x n uncorrelated complex Gaussian gains with unit entry variance."""
    scale = 1.0 / math.sqrt(2.0)
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * scale


def noise_sigma(snr_db: float, n: int, m_order: int) -> float:
    """Per-complex-dimension noise std from Eb/N0 in dB.

    sigma_w^2 = n / (log2(M) * 10^(snr/10)); the real and imaginary parts
    carry sigma_w^2 / 2 each.
    """
    var = n / (math.log2(m_order) * 10.0 ** (snr_db / 10.0))
    return math.sqrt(var)


def mmse_augment(h: np.ndarray, sigma_w: float) -> np.ndarray:
    """Real-model matrix stacked over sigma_w * I (the extended system).

    The matching extended target is the real target with 2n zeros
    appended.  Always full column rank for sigma_w > 0, singular channels
    included.
    """
    if not sigma_w > 0.0:
        raise InvalidConfigError(f"sigma_w must be positive, got {sigma_w}")
    basis, _ = complex_to_real(np.asarray(h, dtype=np.complex128),
                               np.zeros(h.shape[0], dtype=np.complex128))
    n2 = basis.n
    return np.vstack([basis.matrix, sigma_w * np.eye(n2)])


def square_reduce(ext_b: np.ndarray, ext_y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project a tall full-rank system onto square triangular form.

    Thin QR of the extended matrix; distances within the column span are
    preserved, so decoding (R, Q^T y) is equivalent to decoding the tall
    system up to an additive constant.
    """
    q, r = np.linalg.qr(ext_b)
    d = np.diag(r)
    if np.abs(d).min() <= 1e-12:
        raise SingularBasisError("extended system is rank deficient")
    flip = np.where(d < 0.0, -1.0, 1.0)
    return r * flip[:, np.newaxis], (q * flip[np.newaxis, :]).T @ ext_y


def wilson_interval(errors: int, total: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total == 0:
        return 0.0, 1.0
    p = errors / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (p + z2 / (2 * total)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / total + z2 / (4 * total * total))
    return max(0.0, center - half), min(1.0, center + half)


def _trial_rng(seed: int, snr_idx: int, trial_idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(
        entropy=seed, spawn_key=(snr_idx, trial_idx)))


def _preprocess(cfg: MimoConfig, h: np.ndarray, c: np.ndarray, sigma_w: float):
    """complex_to_real -> optional mmse extension -> optional LLL -> QR.

    Returns (factors, rotated target, transform-to-original or None).
    The integer unknowns are the level indices u in 0..sqrt(M)-1 per real
    dimension, so the basis is scaled by 2 and the target shifted.

    The extension ridge is sigma_w,real / sigma_s,real: the constellation
    is unnormalized (per-rail symbol variance (M-1)/3, per-rail noise
    variance sigma_w^2/2), and a plain sigma_w block over-regularizes by
    sqrt(2(M-1)/3) and measurably degrades nearest-plane BER.
    """
    basis, y_r = complex_to_real(h, c)
    n2 = basis.n
    m = int(math.isqrt(cfg.qam_order)) - 1
    shift = np.full(n2, float(m))
    if cfg.use_mmse and sigma_w > 0.0:
        ridge = sigma_w * math.sqrt(3.0 / (2.0 * (cfg.qam_order - 1)))
        ext_b = mmse_augment(h, ridge)
        ext_y = np.concatenate([y_r, np.zeros(n2)])
        b_u = 2.0 * ext_b
        t_u = ext_y + ext_b @ shift
        r0, y0 = square_reduce(b_u, t_u)
        work = LatticeBasis(r0)
    else:
        work = LatticeBasis(2.0 * basis.matrix)
        y0 = y_r + basis.matrix @ shift
    u_to_orig = None
    if cfg.use_lll:
        work, transform = lll_reduce(work)
        u_to_orig = transform.matrix
    f = qr_decompose(work)
    return f, f.q.T @ y0, u_to_orig


def _run_decoder(spec: DecoderSpec, f, yq, cfg: MimoConfig, trial_seed: int):
    """Returns (decided integer vector in work coords, visited, |L|)."""
    n = f.n
    if spec.name == "babai":
        return babai_sic(f, yq), n, 1
    if spec.name == "ml":
        xb = babai_sic(f, yq)
        rad = float(np.linalg.norm(f.r @ xb - yq))
        out = fincke_pohst(f, yq, rad, node_cap=cfg.node_cap)
        return out.best, out.visited_nodes + n, out.candidate_count
    if spec.name == "klein":
        sigma = resolve_sigma(cfg.sigma_policy, f)
        out = klein_sampler_decode(f, yq, sigma, int(spec.k), trial_seed)
        return out.best, out.visited_nodes, out.candidate_count
    opts = DecodeOptions(initial_k=spec.k, j_max=spec.j_max,
                         sigma_policy=cfg.sigma_policy,
                         candidate_protection=True, node_cap=cfg.node_cap)
    out = esd(f, yq, opts) if spec.name == "esd" else rsd(f, yq, opts)
    if out.best is None:
        # esd can come up empty even with protection (all first-layer
        # children outside the radius); decide by nearest-plane then.
        return babai_sic(f, yq), out.visited_nodes, 0
    return out.best, out.visited_nodes, out.candidate_count


def run_trial(cfg: MimoConfig, snr_idx: int, trial_idx: int) -> dict[DecoderSpec, TrialRecord]:
    """One channel use, decoded by every configured decoder (paired)."""
    snr_db = cfg.snr_db_grid[snr_idx]
    rng = _trial_rng(cfg.seed, snr_idx, trial_idx)
    kb = int(math.log2(cfg.qam_order))
    nbits = cfg.n_tx * kb
    bits = rng.integers(0, 2, nbits, dtype=np.int64)
    h = sample_channel(rng, cfg.n_tx)
    sigma_w = noise_sigma(snr_db, cfg.n_tx, cfg.qam_order)
    w = (rng.standard_normal(cfg.n_tx) + 1j * rng.standard_normal(cfg.n_tx)) \
        * (sigma_w / math.sqrt(2.0))
    s = qam_map(bits, cfg.qam_order)
    c = h @ s + w
    f, yq, u_to_orig = _preprocess(cfg, h, c, sigma_w)
    nlev = int(math.isqrt(cfg.qam_order))
    trial_seed = int(rng.integers(0, 2 ** 62))
    records: dict[DecoderSpec, TrialRecord] = {}
    for spec in cfg.decoders:
        t0 = time.perf_counter_ns() if cfg.measure_time else 0
        xhat, visited, cand = _run_decoder(spec, f, yq, cfg, trial_seed)
        elapsed = time.perf_counter_ns() - t0 if cfg.measure_time else 0
        u = u_to_orig @ xhat if u_to_orig is not None else xhat
        u = np.clip(u, 0, nlev - 1)
        bhat = qam_demap(lattice_to_symbols(u, cfg.qam_order), cfg.qam_order)
        errs = int(np.count_nonzero(bhat != bits))
        records[spec] = TrialRecord(bit_errors=errs, bits=nbits,
                                    visited_nodes=int(visited),
                                    candidate_count=int(cand),
                                    elapsed_ns=int(elapsed))
    return records


def _sweep_chunk(cfg: MimoConfig, snr_idx: int, lo: int, hi: int) -> dict:
    partial = {spec: CellAggregate(cfg.snr_db_grid[snr_idx], spec)
               for spec in cfg.decoders}
    for t in range(lo, hi):
        for spec, rec in run_trial(cfg, snr_idx, t).items():
            partial[spec].add(rec)
    return partial


def run_ber_sweep(cfg: MimoConfig, threads: int = 1) -> list[CellAggregate]:
    """Full sweep over the SNR grid; rows sorted by (snr, decoder, k).

    Integer accumulators merge commutatively, so the aggregate table is
    identical for any worker count.
    """
    cfg.validate()
    cells: dict[tuple[int, DecoderSpec], CellAggregate] = {}
    for snr_idx, snr_db in enumerate(cfg.snr_db_grid):
        for spec in cfg.decoders:
            cells[(snr_idx, spec)] = CellAggregate(snr_db, spec)
        if threads <= 1:
            partial = _sweep_chunk(cfg, snr_idx, 0, cfg.trials)
            for spec, agg in partial.items():
                cells[(snr_idx, spec)].merge(agg)
        else:
            step = max(1, (cfg.trials + threads - 1) // threads)
            bounds = [(lo, min(lo + step, cfg.trials))
                      for lo in range(0, cfg.trials, step)]
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_sweep_chunk, cfg, snr_idx, lo, hi)
                           for lo, hi in bounds]
                for fut in futures:
                    for spec, agg in fut.result().items():
                        cells[(snr_idx, spec)].merge(agg)
    rows = list(cells.values())
    rows.sort(key=lambda a: (a.snr_db, a.decoder.name, a.decoder.k))
    return rows
