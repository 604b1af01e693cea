"""Command line interface.

Numeric results are printed as JSON on standard output; diagnostics go to
standard error.  Exit codes: 0 success, 1 gating verification failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .cbnorm import CbOptions, NormEstimate, cb_norm, level_norm
from .exceptions import OpnormError
from .factornorms import GammaOptions, gamma2_linf, gamma_rc, split_norm
from .haagerup import (
    HaagerupOptions,
    haagerup3_upper,
    haagerup_upper,
    three_tensor_from_json,
)
from .harness import SuiteConfig, gating_failures, report_json, report_markdown, run_suite
from .munorm import MuOptions, mu_lower, mu_of_space, mu_upper, mu_window
from .opspace import (
    map_from_json,
    min_norm,
    resolve_space,
    tensor_from_json,
    _pairs_to_complex,
)


def _default_seed() -> int:
    env = os.environ.get("OPNORM_SEED", "")
    try:
        return int(env) if env else 0
    except ValueError:
        return 0


def _load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_matrix(path) -> np.ndarray:
    obj = _load(path)
    coeffs = obj["coeffs"] if isinstance(obj, dict) else obj
    arr = np.asarray(coeffs)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return _pairs_to_complex(arr)
    return arr.astype(complex)


def _emit(payload):
    print(json.dumps(payload, indent=2, sort_keys=True, default=_np_default))


def _estimate_payload(est: NormEstimate, seed: int, cert_path=None):
    payload = {
        "value": est.value if np.isfinite(est.value) else repr(est.value),
        "bound_kind": est.bound_kind,
        "seed": seed,
        "certificate_path": cert_path,
        "trace": {k: v for k, v in est.trace.items() if not isinstance(v, np.ndarray)},
    }
    return payload


def _maybe_write_certificate(est, path):
    if not path:
        return None
    payload = _certificate_json(est.certificate)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, default=_np_default)
    return path


def _np_default(obj):
    if isinstance(obj, np.ndarray):
        return np.stack([obj.real, obj.imag], axis=-1).tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return repr(obj)


def _certificate_json(cert):
    from .factornorms import Factorization
    from .haagerup import Decomposition
    from .munorm import CommutingPairSample
    from .opspace import map_to_json

    if cert is None:
        return None
    if isinstance(cert, Decomposition):
        return {"kind": "decomposition",
                "left": cert.left, "right": cert.right}
    if isinstance(cert, Factorization):
        return {"kind": "factorization", "through": cert.through_kind,
                "first_leg": map_to_json(cert.first_leg),
                "second_leg": map_to_json(cert.second_leg)}
    if isinstance(cert, CommutingPairSample):
        return {"kind": "commuting_pair", "provenance": cert.provenance,
                "k": cert.k,
                "sigma1": map_to_json(cert.sigma1),
                "sigma2": map_to_json(cert.sigma2)}
    if isinstance(cert, dict):
        return {k: _certificate_json(v) if isinstance(
            v, (Decomposition, Factorization, CommutingPairSample, dict))
            else v for k, v in cert.items()}
    return cert


def _add_budget_flags(p, restarts, iters):
    p.add_argument("--restarts", type=int, default=restarts)
    p.add_argument("--iters", type=int, default=iters)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--certificate-out", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="opnorm",
                                 description="tensor norms on operator spaces")
    sub = ap.add_subparsers(dest="command", required=True)

    norm = sub.add_parser("norm", help="tensor and map norms")
    norm_sub = norm.add_subparsers(dest="which", required=True)
    p = norm_sub.add_parser("min", help="minimal (spatial) tensor norm")
    p.add_argument("tensor")
    p = norm_sub.add_parser("h", help="two-fold decomposition upper bound")
    p.add_argument("tensor")
    p.add_argument("--rank-slack", type=int, default=0)
    _add_budget_flags(p, 24, 800)
    p = norm_sub.add_parser("h3", help="three-fold decomposition upper bound")
    p.add_argument("tensor")
    _add_budget_flags(p, 24, 800)
    p = norm_sub.add_parser("cb", help="completely bounded norm of a map")
    p.add_argument("map")
    p.add_argument("--level", type=int, default=None,
                   help="explicit amplification level")
    _add_budget_flags(p, 16, 500)

    mu = sub.add_parser("mu", help="commuting-pair norm estimates")
    mu_sub = mu.add_subparsers(dest="which", required=True)
    for name in ("upper", "lower", "window"):
        p = mu_sub.add_parser(name)
        p.add_argument("tensor")
        _add_budget_flags(p, 16, 400)
        p.add_argument("--samples", type=int, default=None,
                       help="commutant samples for the lower oracle")
    p = mu_sub.add_parser("space", help="window for the identity tensor of a space")
    p.add_argument("space", help="space reference like rowcap:2 or a JSON file")
    _add_budget_flags(p, 16, 400)
    p.add_argument("--samples", type=int, default=None)

    gamma = sub.add_parser("gamma", help="factorization norms")
    gamma_sub = gamma.add_subparsers(dest="which", required=True)
    for name in ("row", "column", "split"):
        p = gamma_sub.add_parser(name)
        p.add_argument("map")
        p.add_argument("--rank-slack", type=int, default=0)
        _add_budget_flags(p, 8, 300)

    p = sub.add_parser("gamma2", help="Hilbert-space factorization norm")
    p.add_argument("matrix")
    _add_budget_flags(p, 8, 300)

    thm2 = sub.add_parser("thm2", help="block construction for commuting pairs")
    thm2_sub = thm2.add_subparsers(dest="which", required=True)
    p = thm2_sub.add_parser("build")
    p.add_argument("quadruple", help="JSON with alpha1, alpha2, beta1, beta2 maps")

    verify = sub.add_parser("verify", help="verification suite")
    verify_sub = verify.add_subparsers(dest="which", required=True)
    p = verify_sub.add_parser("run")
    p.add_argument("--dims", default="2,3")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--samples", type=int, default=40)
    p.add_argument("--block-samples", type=int, default=12)
    p.add_argument("--corpus", type=int, default=50)
    p.add_argument("--parallel", action="store_true",
                   help="run checks on a thread pool (report order is fixed)")
    return ap


def _seed_of(args) -> int:
    return args.seed if getattr(args, "seed", None) is not None else _default_seed()


def _cmd_norm(args) -> int:
    seed = _seed_of(args)
    if args.which == "min":
        t = tensor_from_json(_load(args.tensor))
        _emit({"value": min_norm(t), "bound_kind": "exact", "seed": seed,
               "certificate_path": None})
        return 0
    if args.which == "h":
        t = tensor_from_json(_load(args.tensor))
        est = haagerup_upper(t, HaagerupOptions(
            restarts=args.restarts, iters=args.iters, seed=seed, tol=args.tol,
            rank_slack=args.rank_slack))
    elif args.which == "h3":
        t3 = three_tensor_from_json(_load(args.tensor))
        est = haagerup3_upper(t3, HaagerupOptions(
            restarts=args.restarts, iters=args.iters, seed=seed, tol=args.tol))
    else:  # cb
        u = map_from_json(_load(args.map))
        opts = CbOptions(restarts=args.restarts, iters=args.iters, seed=seed,
                         tol=args.tol)
        est = (level_norm(u, args.level, opts) if args.level
               else cb_norm(u, opts))
    cert = _maybe_write_certificate(est, args.certificate_out)
    _emit(_estimate_payload(est, seed, cert))
    return 0


def _cmd_mu(args) -> int:
    seed = _seed_of(args)
    opts = MuOptions(restarts=args.restarts, iters=args.iters, seed=seed,
                     tol=args.tol)
    if getattr(args, "samples", None):
        opts = MuOptions(restarts=args.restarts, iters=args.iters, seed=seed,
                         tol=args.tol, samples_commutant=args.samples)
    if args.which == "space":
        space = resolve_space(args.space if ":" in args.space or args.space == "scalar"
                              else _load(args.space))
        win = mu_of_space(space, opts)
        _emit({"space": space.label,
               "lower": _estimate_payload(win.lower, seed),
               "upper": _estimate_payload(win.upper, seed)})
        return 0
    t = tensor_from_json(_load(args.tensor))
    if args.which == "upper":
        est = mu_upper(t, opts)
    elif args.which == "lower":
        est = mu_lower(t, opts)
    else:
        win = mu_window(t, opts)
        _emit({"lower": _estimate_payload(win.lower, seed),
               "upper": _estimate_payload(win.upper, seed)})
        return 0
    cert = _maybe_write_certificate(est, args.certificate_out)
    _emit(_estimate_payload(est, seed, cert))
    return 0


def _cmd_gamma(args) -> int:
    seed = _seed_of(args)
    u = map_from_json(_load(args.map))
    opts = GammaOptions(restarts=args.restarts, iters=args.iters, seed=seed,
                        tol=args.tol, rank_slack=args.rank_slack)
    if args.which == "split":
        est = split_norm(u, opts)
    else:
        est = gamma_rc(u, args.which, opts)
    cert = _maybe_write_certificate(est, args.certificate_out)
    _emit(_estimate_payload(est, seed, cert))
    return 0


def _cmd_gamma2(args) -> int:
    seed = _seed_of(args)
    m = _load_matrix(args.matrix)
    est = gamma2_linf(m, GammaOptions(restarts=args.restarts, iters=args.iters,
                                      seed=seed, tol=args.tol))
    cert = _maybe_write_certificate(est, args.certificate_out)
    _emit(_estimate_payload(est, seed, cert))
    return 0


def _cmd_thm2(args) -> int:
    from .munorm import theorem2_blocks
    from .opspace import map_to_json

    obj = _load(args.quadruple)
    maps = [map_from_json(obj[k]) for k in ("alpha1", "alpha2", "beta1", "beta2")]
    sigma1, sigma2, v, w = theorem2_blocks(*maps)
    _emit({
        "sigma1": map_to_json(sigma1),
        "sigma2": map_to_json(sigma2),
        "v": np.stack([v.real, v.imag], axis=-1).tolist(),
        "w": np.stack([w.real, w.imag], axis=-1).tolist(),
        "k": sigma1.codomain.ambient_rows,
    })
    return 0


def _cmd_verify(args) -> int:
    seed = _seed_of(args)
    dims = tuple(int(x) for x in str(args.dims).split(",") if x)
    config = SuiteConfig(
        seed=seed, dims=dims, restarts=args.restarts, iters=args.iters,
        samples_commutant=args.samples, samples_block=args.block_samples,
        corpus_size=args.corpus, out=args.out, format=args.format,
        parallel=args.parallel,
    )
    results = run_suite(config)
    for r in results:
        print(f"{r.status:13s} {r.check_id}", file=sys.stderr)
    if config.format == "markdown":
        print(report_markdown(results, config))
    else:
        _emit(report_json(results, config))
    return 1 if gating_failures(results) else 0


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "norm":
            return _cmd_norm(args)
        if args.command == "mu":
            return _cmd_mu(args)
        if args.command == "gamma":
            return _cmd_gamma(args)
        if args.command == "gamma2":
            return _cmd_gamma2(args)
        if args.command == "thm2":
            return _cmd_thm2(args)
        if args.command == "verify":
            return _cmd_verify(args)
    except OpnormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
