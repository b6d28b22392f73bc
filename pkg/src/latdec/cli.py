"""Command-line front end.

Subcommands: decode (single system from matrix files), ber (Monte-Carlo
sweep to CSV), nodes (complexity statistics vs budget to CSV), verify
(property suites).  Exit codes: 0 success, 1 usage or config error,
2 empty decode outcome, 3 verification failure, 4 node-cap exceeded.

All floating CSV fields use repr() (shortest round-trip), and all
randomness flows from --seed, so repeated runs are byte-identical for
any --threads value (timing is opt-in because wall clocks are not
reproducible).
"""

from __future__ import annotations

import argparse
import configparser
import sys

import numpy as np

from .decode import DEFAULT_NODE_CAP, DecodeOptions, babai_sic, esd, \
    fincke_pohst, klein_sampler_decode, rsd
from .errors import InvalidConfigError, LatdecError, ResourceLimitError
from .gaussian import SigmaPolicy, resolve_sigma
from .lattice import LatticeBasis, lll_reduce, qr_decompose
from .mimo import CellAggregate, DecoderSpec, MimoConfig, run_ber_sweep
from .verify import SUITES

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_EMPTY = 2
EXIT_VERIFY = 3
EXIT_RESOURCE = 4

BER_HEADER = "snr_db,decoder,k,trials,bit_errors,bits,ber,avg_s,avg_l,avg_time_ns"
NODES_HEADER = "snr_db,decoder,k,trials,avg_s,max_s,avg_l,max_l"


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems with exit code 1."""

    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_text(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_matrix(path: str) -> np.ndarray:
    try:
        m = np.loadtxt(path, ndmin=2, dtype=np.float64)
    except Exception as exc:
        raise InvalidConfigError(f"could not parse {path}: {exc}") from exc
    return m


def _load_vector(path: str) -> np.ndarray:
    try:
        v = np.loadtxt(path, dtype=np.float64).reshape(-1)
    except Exception as exc:
        raise InvalidConfigError(f"could not parse {path}: {exc}") from exc
    return v


# ---------------------------------------------------------------------------
# config file: flat key = value with section headers; flags override;
# unknown sections or keys are rejected.
# ---------------------------------------------------------------------------

_SCHEMA = {
    "system": {"n_tx", "qam", "snr_db", "trials", "k_grid"},
    "preprocess": {"lll", "mmse"},
    "decoders": {"spec"},
    "run": {"seed", "threads", "out", "timing", "node_cap"},
}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise InvalidConfigError(f"expected a boolean, got {text!r}")


def _load_config(path: str) -> dict:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise InvalidConfigError(f"config file {path} not found")
    out: dict = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise InvalidConfigError(f"unknown config section [{section}]")
        for key, value in cp.items(section):
            if key not in _SCHEMA[section]:
                raise InvalidConfigError(f"unknown config key {section}.{key}")
            out[f"{section}.{key}"] = value.strip()
    return out


def _cfg_get(cfg: dict, key: str, flag_value, parse):
    """Flag wins when present; otherwise the config file; otherwise None."""
    if flag_value is not None:
        return flag_value
    if key in cfg:
        return parse(cfg[key])
    return None


def _floats_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _specs_list(text: str) -> tuple[DecoderSpec, ...]:
    return tuple(DecoderSpec.parse(tok) for tok in text.split(",") if tok.strip())


def _build_mimo_config(args, need_k_grid: bool = False):
    cfg = _load_config(args.config) if args.config else {}
    n_tx = _cfg_get(cfg, "system.n_tx", args.ntx, int)
    qam = _cfg_get(cfg, "system.qam", args.qam, int)
    snr = _cfg_get(cfg, "system.snr_db", args.snr, str)
    snr = _floats_list(snr) if snr is not None else None
    trials = _cfg_get(cfg, "system.trials", args.trials, int)
    seed = _cfg_get(cfg, "run.seed", args.seed, int)
    threads = _cfg_get(cfg, "run.threads", args.threads, int) or 1
    out = _cfg_get(cfg, "run.out", args.out, str)
    timing = _cfg_get(cfg, "run.timing", True if args.timing else None, _parse_bool) or False
    node_cap = _cfg_get(cfg, "run.node_cap", args.node_cap, int) or DEFAULT_NODE_CAP
    use_lll = _cfg_get(cfg, "preprocess.lll", True if args.lll else None, _parse_bool) or False
    use_mmse = _cfg_get(cfg, "preprocess.mmse", True if args.mmse else None, _parse_bool) or False
    decoders = _cfg_get(cfg, "decoders.spec", args.decoders, str)
    k_grid = _cfg_get(cfg, "system.k_grid", getattr(args, "k_grid", None), str)
    k_grid = _floats_list(k_grid) if k_grid is not None else None

    if seed is None:
        raise InvalidConfigError("--seed is required (reproducibility by default)")
    for name, val in (("n_tx", n_tx), ("qam", qam), ("snr_db", snr), ("trials", trials)):
        if val is None:
            raise InvalidConfigError(f"missing required setting {name}")
    if need_k_grid:
        if k_grid is None:
            raise InvalidConfigError("missing required setting k_grid")
        if len(snr) != 1:
            raise InvalidConfigError("nodes sweeps use a single fixed snr_db")
        names = tuple(s.strip() for s in (decoders or "rsd").split(",") if s.strip())
        specs = []
        for k in k_grid:
            for nm in names:
                if nm not in ("esd", "rsd"):
                    raise InvalidConfigError(
                        f"nodes sweeps take esd/rsd decoders, got {nm!r}")
                specs.append(DecoderSpec(nm, float(k)))
        spec_tuple = tuple(specs)
    else:
        spec_tuple = _specs_list(decoders) if decoders else (DecoderSpec("babai"),)

    policy = SigmaPolicy.fixed(args.sigma) if args.sigma is not None else SigmaPolicy.paper()
    mimo = MimoConfig(n_tx=n_tx, qam_order=qam, snr_db_grid=tuple(snr),
                      trials=trials, seed=seed, use_lll=use_lll,
                      use_mmse=use_mmse, decoders=spec_tuple,
                      node_cap=node_cap, measure_time=timing,
                      sigma_policy=policy)
    mimo.validate()
    return mimo, threads, out


def _ber_rows(rows: list[CellAggregate]) -> str:
    lines = [BER_HEADER]
    for a in rows:
        avg_s = a.visited_sum / a.trials
        avg_l = a.cand_sum / a.trials
        avg_t = a.elapsed_sum / a.trials
        lines.append(",".join([
            _fmt(float(a.snr_db)), a.decoder.name, _fmt(float(a.decoder.k)),
            str(a.trials), str(a.bit_errors), str(a.bits), _fmt(a.ber),
            _fmt(avg_s), _fmt(avg_l), _fmt(avg_t)]))
    return "\n".join(lines) + "\n"


def _nodes_rows(rows: list[CellAggregate]) -> str:
    lines = [NODES_HEADER]
    for a in rows:
        lines.append(",".join([
            _fmt(float(a.snr_db)), a.decoder.name, _fmt(float(a.decoder.k)),
            str(a.trials), _fmt(a.visited_sum / a.trials), str(a.visited_max),
            _fmt(a.cand_sum / a.trials), str(a.cand_max)]))
    return "\n".join(lines) + "\n"


def cmd_ber(args) -> int:
    mimo, threads, out = _build_mimo_config(args)
    rows = run_ber_sweep(mimo, threads=threads)
    _write_text(out, _ber_rows(rows))
    return EXIT_OK


def cmd_nodes(args) -> int:
    mimo, threads, out = _build_mimo_config(args, need_k_grid=True)
    rows = run_ber_sweep(mimo, threads=threads)
    _write_text(out, _nodes_rows(rows))
    return EXIT_OK


def cmd_decode(args) -> int:
    b = _load_matrix(args.matrix)
    c = _load_vector(args.target)
    if b.shape[0] != b.shape[1]:
        raise InvalidConfigError(f"matrix must be square, got {b.shape}")
    if len(c) != b.shape[0]:
        raise InvalidConfigError(
            f"target length {len(c)} does not match dimension {b.shape[0]}")
    basis = LatticeBasis(b)
    to_original = None
    if args.lll:
        basis, transform = lll_reduce(basis)
        to_original = transform.matrix
    f = qr_decompose(basis)
    y = f.q.T @ c

    policy = SigmaPolicy.fixed(args.sigma) if args.sigma is not None else SigmaPolicy.paper()
    protection = None
    if args.protect:
        protection = True
    elif args.no_protect:
        protection = False
    opts = DecodeOptions(initial_k=args.k, sigma_policy=policy, j_max=args.jmax,
                         candidate_protection=protection, node_cap=args.node_cap)

    trace: list | None = [] if args.trace else None
    name = args.decoder
    if name == "babai":
        x = babai_sic(f, y)
        out = None
        best, dist, visited, cand, prot = x, float(np.linalg.norm(f.r @ x - y)), f.n, 1, 0
    else:
        if name == "fp":
            if args.radius is None:
                raise InvalidConfigError("fp needs --radius")
            out = fincke_pohst(f, y, args.radius, node_cap=args.node_cap)
        elif name == "esd":
            out = esd(f, y, opts, trace=trace)
        elif name == "rsd":
            out = rsd(f, y, opts, trace=trace)
        elif name == "ml":
            xb = babai_sic(f, y)
            out = fincke_pohst(f, y, float(np.linalg.norm(f.r @ xb - y)),
                               node_cap=args.node_cap)
        elif name == "klein":
            if args.seed is None:
                raise InvalidConfigError("klein needs --seed")
            sigma = resolve_sigma(policy, f)
            out = klein_sampler_decode(f, y, sigma, args.samples, args.seed)
        else:
            raise InvalidConfigError(f"unknown decoder {name!r}")
        best, dist = out.best, out.best_dist
        visited, cand, prot = out.visited_nodes, out.candidate_count, out.protected_count

    if trace is not None and args.trace:
        with open(args.trace, "w") as fh:
            for node in trace:
                suffix = ",".join(str(v) for v in node.assignment)
                fh.write(f"{node.layer}\t{suffix}\t{_fmt(node.pruning_size)}"
                         f"\t{_fmt(node.partial_sq_dist)}\n")

    lines = [f"decoder: {name}"]
    if best is None:
        lines += ["best: none", "distance: inf"]
    else:
        shown = to_original @ best if to_original is not None else best
        lines += [f"best: {' '.join(str(int(v)) for v in shown)}",
                  f"distance: {_fmt(float(dist))}"]
    lines += [f"visited_nodes: {visited}", f"candidates: {cand}"]
    if name == "rsd":
        lines.append(f"protected: {prot}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK if best is not None else EXIT_EMPTY


def cmd_verify(args) -> int:
    if args.seed is None:
        raise InvalidConfigError("--seed is required (reproducibility by default)")
    names = list(SUITES) if args.suite == "all" else [args.suite]
    lines = []
    all_passed = True
    for name in names:
        fn = SUITES[name]
        kwargs = {"seed": args.seed}
        if name == "theta":
            kwargs = {"seed": args.seed}
        elif name == "gain":
            if args.instances is not None:
                kwargs["min_candidates"] = args.instances
        elif name == "bounds":
            if args.instances is not None:
                kwargs["instances"] = args.instances
            if args.n is not None:
                kwargs["n_max"] = args.n
            if args.k is not None:
                kwargs["k_max"] = args.k
        else:
            if args.instances is not None:
                kwargs["instances"] = args.instances
        result = fn(**kwargs)
        lines.append(result.line())
        lines.extend(f"  {d}" for d in result.details)
        all_passed = all_passed and result.passed
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK if all_passed else EXIT_VERIFY


def build_parser() -> _Parser:
    p = _Parser(prog="latdec",
                description="Lattice decoding benchmarks: pruned sphere "
                            "decoders, oracles, and MIMO Monte-Carlo sweeps.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_shared(sp):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--lll", action="store_true", default=False)
        sp.add_argument("--mmse", action="store_true", default=False)
        sp.add_argument("--sigma", type=float, default=None,
                        help="fixed Gaussian width (default: min-diagonal policy)")
        sp.add_argument("--sigma-policy", choices=["paper"], default="paper",
                        help="named width policy (min_i r_ii / (2 sqrt(pi)))")

    d = sub.add_parser("decode", help="decode one system from matrix files")
    add_shared(d)
    d.add_argument("matrix", help="basis matrix file (rows of decimals)")
    d.add_argument("target", help="target vector file")
    d.add_argument("decoder",
                   choices=["babai", "fp", "esd", "rsd", "ml", "klein"])
    d.add_argument("--k", type=float, default=1.0, help="initial pruning budget")
    d.add_argument("--radius", type=float, default=None, help="fp sphere radius")
    d.add_argument("--samples", type=int, default=30, help="klein sample count")
    d.add_argument("--jmax", type=int, default=3)
    d.add_argument("--protect", action="store_true", default=False)
    d.add_argument("--no-protect", action="store_true", default=False)
    d.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP)
    d.add_argument("--trace", default=None, help="write saved-node trace TSV here")
    d.set_defaults(fn=cmd_decode)

    def add_sweep_flags(sp):
        add_shared(sp)
        sp.add_argument("--config", default=None, help="ini-style config file")
        sp.add_argument("--ntx", type=int, default=None)
        sp.add_argument("--qam", type=int, default=None)
        sp.add_argument("--snr", default=None, help="comma-separated dB values")
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--decoders", default=None,
                        help="comma list, e.g. babai,rsd:10,esd:10,ml")
        sp.add_argument("--timing", action="store_true", default=False,
                        help="measure wall time (breaks byte-reproducibility)")
        sp.add_argument("--node-cap", type=int, default=None)

    b = sub.add_parser("ber", help="Monte-Carlo BER sweep to CSV")
    add_sweep_flags(b)
    b.set_defaults(fn=cmd_ber)

    nd = sub.add_parser("nodes", help="visited/candidate statistics vs budget")
    add_sweep_flags(nd)
    nd.add_argument("--k-grid", dest="k_grid", default=None,
                    help="comma-separated budgets, e.g. 1,5,10,50,100")
    nd.set_defaults(fn=cmd_nodes)

    v = sub.add_parser("verify", help="run property-verification suites")
    add_shared(v)
    v.add_argument("suite", choices=sorted(SUITES) + ["all"])
    v.add_argument("--instances", type=int, default=None)
    v.add_argument("--n", type=int, default=None, help="max dimension (bounds)")
    v.add_argument("--k", type=float, default=None, help="max budget (bounds)")
    v.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ResourceLimitError as exc:
        print(f"latdec: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except LatdecError as exc:
        print(f"latdec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"latdec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
