"""Command-line front end.

Exit codes: 0 when every pass flag holds, 1 when a tolerance fails, 2 on
configuration, hypothesis or numerical errors (a JSON error document is
written to standard error).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import ConfigurationError, MLRDError
from .hermite import HermiteCoefficients
from .model import ProcessSpec, check_conditions, gamma_sequence, limiting_R, validate_spec
from .montecarlo import ExperimentConfig, run_experiment
from .normalize import (
    AsymptoticNormalization,
    asymptotic_normalizer,
    exact_normalization,
    operator_normalizer,
)
from .selftest import run_selftest
from .simulate import DEFAULT_EXACT_CAP, path_to_bytes, path_to_csv, simulate_path

SPEC_KEYS = """process keys:
  dimension        number of coordinates d
  kind             linear_lrd | gaussian_diagonal | white_noise
  memory.values    memory parameters d_1 > ... > d_d, each in (0, 1/2)
  a_plus, a_minus  d x d prefactor matrices (linear_lrd)
  j0               centre coefficient: zeta (default) | a_plus | d x d matrix
  innovation       standard_normal | rademacher | uniform_scaled
  r_diag           per-component constants R_ii (gaussian_diagonal)
  seed             unsigned 64-bit seed"""

SUBCOMMAND_KEYS = {
    "simulate": "  n                path length\n  truncation       filter truncation M (default 10 n)\n"
                "  exact_cap        dense factorization cap on n*d (default 8192)",
    "gamma": "  max_lag          largest lag K (default 10)\n  truncation       filter truncation M (default 10^5)",
    "normalize": "  n                sample size\n  truncation       filter truncation M (default 10 n)\n"
                 "  tau              Hermite rank for the asymptotic normalizer (default 1)",
    "hermite": "  subordination    named function (identity, hermite2, square, abs, cube, hermite3),\n"
               "                   a {degree: coefficient} map, or a list of those per coordinate\n"
               "  max_degree       largest degree L_max (default 8)\n  quad_order       quadrature nodes (default 128)",
}
EXPERIMENT_KEYS = """experiment keys:
  experiment       clt | fclt | subordination | autocov (implied by the subcommand)
  n                sample size (autocov: list of sizes)
  replications     Monte Carlo replications (>= 100)
  truncation       filter truncation M (default 10 n)
  grid             fclt times in [0, 1]
  lags             autocov lags
  subordination    subordination functions (see the hermite subcommand)
  tolerances       overrides: cov_max_abs, se_multiplier, ks_alpha, ratio_low, ratio_high,
                   moment_factor, stability_max_abs, tail_ratio, residual
  threads          worker threads (default 1; env MLRD_THREADS)
  chunk_size       replications per work unit (default 50)
  exact_cap        dense factorization cap on n*d
  max_degree, quad_order  Hermite expansion settings"""

VERIFY = {
    "verify-clt": "clt",
    "verify-fclt": "fclt",
    "verify-subordination": "subordination",
    "verify-autocov": "autocov",
}


def _read_config(path):
    if path is None:
        raise ConfigurationError("--config is required")
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file {path} does not exist")
    try:
        cfg = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config {path} does not parse: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigurationError("config must be a mapping")
    return cfg


SPEC_FIELDS = ("dimension", "kind", "memory", "a_plus", "a_minus", "j0", "innovation", "r_diag")


def _spec(cfg):
    spec = ProcessSpec.from_dict({k: cfg[k] for k in SPEC_FIELDS if k in cfg})
    validate_spec(spec)
    return spec


def _threads(args, cfg):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("MLRD_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"MLRD_THREADS must be an integer, got {env!r}") from None
    return int(cfg.get("threads", 1))


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _matrix_csv(named):
    lines = ["name,row,col,value"]
    for name, M in named.items():
        M = np.atleast_2d(np.asarray(M, dtype=float))
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                lines.append(f"{name},{i + 1},{j + 1},{M[i, j]!r}")
    return "\n".join(lines) + "\n"


def _emit(out, stem, payload, matrices, fmt):
    written = []
    if fmt in ("json", "both"):
        (out / f"{stem}.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
        written.append(f"{stem}.json")
    if fmt in ("csv", "both"):
        (out / f"{stem}.csv").write_text(_matrix_csv(matrices))
        written.append(f"{stem}.csv")
    return written


def cmd_simulate(args, cfg):
    spec = _spec(cfg)
    n = int(cfg.get("n", 1024))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    path = simulate_path(spec, n, seed, M=cfg.get("truncation"), cap=int(cfg.get("exact_cap", DEFAULT_EXACT_CAP)))
    out = _out_dir(args)
    meta = {
        "n": path.n,
        "d": path.d,
        "seed": path.seed,
        "truncation": path.truncation,
        "spec_digest": path.spec_digest,
        "generator": path.generator,
        "metadata": path.metadata,
        "version": __version__,
    }
    if args.format in ("json", "both"):
        (out / "path.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
        (out / "path.mlrdpath").write_bytes(path_to_bytes(path))
    if args.format in ("csv", "both"):
        (out / "path.csv").write_text(path_to_csv(path))
    print(f"simulated {path.n} x {path.d} path ({path.generator}) into {out}")
    return 0


def cmd_gamma(args, cfg):
    spec = _spec(cfg)
    K = int(cfg.get("max_lag", 10))
    M = int(cfg.get("truncation", 10 ** 5)) if spec.kind == "linear_lrd" else None
    g = gamma_sequence(spec, K, M)
    rep = check_conditions(spec)
    payload = {"max_lag": K, "truncation": M, "gamma": g.tolist(), "admissibility": rep.to_dict(),
               "spec_digest": spec.digest(), "version": __version__}
    mats = {f"gamma_{k}": g[k] for k in range(K + 1)}
    if spec.kind != "white_noise":
        R = limiting_R(spec).entries
        payload["R"] = R.tolist()
        mats["R"] = R
    _emit(_out_dir(args), "gamma", payload, mats, args.format)
    print(f"autocovariances up to lag {K}; admissible: {rep.ok}")
    return 0


def cmd_normalize(args, cfg):
    spec = _spec(cfg)
    n = int(cfg.get("n", 1024))
    tau = int(cfg.get("tau", 1))
    payload = {"n": n, "spec_digest": spec.digest(), "version": __version__}
    mats = {}
    if spec.kind in ("linear_lrd", "white_noise"):
        M = int(cfg.get("truncation", 10 * n)) if spec.kind == "linear_lrd" else None
        ex = exact_normalization(spec, n, M)
        payload.update(sigma_sq=ex.sigma_sq.tolist(), exact_normalizer=ex.inv_sqrt.tolist())
        mats.update(sigma_sq=ex.sigma_sq, exact_normalizer=ex.inv_sqrt)
    if spec.kind in ("linear_lrd", "gaussian_diagonal"):
        norm = AsymptoticNormalization.from_R(limiting_R(spec).entries, spec.memory, tau)
        A = asymptotic_normalizer(norm, n)
        B = operator_normalizer(spec.memory, n)
        payload.update(tau=tau, x_matrix=norm.x_matrix.tolist(), a_factor=norm.a_factor.tolist(),
                       asymptotic_normalizer=A.tolist(), operator_normalizer=B.tolist())
        mats.update(x_matrix=norm.x_matrix, a_factor=norm.a_factor, asymptotic_normalizer=A, operator_normalizer=B)
    _emit(_out_dir(args), "normalize", payload, mats, args.format)
    print(f"normalizations for n={n} written")
    return 0


def cmd_hermite(args, cfg):
    d = int(cfg.get("dimension", 1))
    G = cfg.get("subordination", "hermite2")
    Gs = [G] * d if isinstance(G, (str, dict)) else list(G)
    hc = HermiteCoefficients.from_functions(Gs, int(cfg.get("max_degree", 8)), int(cfg.get("quad_order", 128)))
    payload = {"coefficients": hc.coeffs.tolist(), "rank": hc.rank, "quad_order": hc.quad_order, "tol": hc.tol}
    _emit(_out_dir(args), "hermite", payload, {"coefficients": hc.coeffs}, args.format)
    print(f"Hermite rank {hc.rank}")
    return 0


def cmd_verify(args, cfg, experiment):
    cfg = dict(cfg)
    given = cfg.get("experiment", experiment)
    if given != experiment:
        raise ConfigurationError(f"config is for experiment {given!r}, not {experiment!r}")
    cfg["experiment"] = experiment
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg["threads"] = _threads(args, cfg)
    ecfg = ExperimentConfig.from_dict(cfg)
    validate_spec(ecfg.spec)
    report = run_experiment(ecfg)
    out = _out_dir(args)
    stem = f"report_{experiment}"
    if args.format in ("json", "both"):
        (out / f"{stem}.json").write_text(report.to_json())
        (out / f"{stem}.sidecar.json").write_text(json.dumps(report.sidecar, indent=2, sort_keys=True))
    if args.format in ("csv", "both"):
        (out / f"{stem}.csv").write_text(report.summary_csv())
    for c in report.comparisons + report.normality:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    print(f"{experiment}: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def cmd_selftest(args, cfg):
    results = run_selftest()
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return 0 if all(ok for _, ok in results) else 1


def build_parser():
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(prog="mlrd", description=__doc__, formatter_class=fmt)
    p.add_argument("--version", action="version", version=f"mlrd {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_config=True):
        sp.add_argument("--config", required=needs_config, help="YAML configuration file")
        sp.add_argument("--out", default=".", help="output directory (default: current directory)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed (unsigned 64-bit)")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (fallback: MLRD_THREADS)")
        sp.add_argument("--format", choices=("json", "csv", "both"), default="json")

    for name, keys in SUBCOMMAND_KEYS.items():
        common(sub.add_parser(name, help=f"{name} utility", formatter_class=fmt,
                              epilog=SPEC_KEYS + "\n" + keys))
    for name in VERIFY:
        common(sub.add_parser(name, help=f"run the {VERIFY[name]} experiment", formatter_class=fmt,
                              epilog=SPEC_KEYS + "\n" + EXPERIMENT_KEYS))
    common(sub.add_parser("selftest", help="closed-form library checks", formatter_class=fmt,
                          epilog="selftest takes no config keys"), needs_config=False)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigurationError("--seed must be an unsigned 64-bit integer")
        if args.threads is not None and args.threads < 1:
            raise ConfigurationError("--threads must be positive")
        if args.command == "selftest":
            return cmd_selftest(args, {})
        cfg = _read_config(args.config)
        if args.command in VERIFY:
            return cmd_verify(args, cfg, VERIFY[args.command])
        handler = {"simulate": cmd_simulate, "gamma": cmd_gamma, "normalize": cmd_normalize, "hermite": cmd_hermite}
        return handler[args.command](args, cfg)
    except MLRDError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
