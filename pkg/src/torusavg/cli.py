"""Command-line entry point: simulate, estimate, verify, sweep.

Configuration comes from a TOML file with sections [params], [couplings],
[grid], [scheme], [ensemble] and [output]; every key has a default, unknown
keys are rejected, and a handful of flags override scalar fields.  The
effective merged configuration is echoed into every output JSON together
with its fingerprint.  Exit codes: 0 success, 1 configuration or usage
error, 2 verification failure, 3 runtime (abort budget) failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import ergodics, experiments
from .experiments import ExperimentError, _dump_json, _jsonable, config_fingerprint
from .integrators import PathAborted, StepScheme, normalize_scheme_kind
from .model import (
    LEMMA_IDS,
    AssumptionError,
    CouplingSpec,
    ModelParams,
    check_lemma,
    default_couplings,
    validate,
)
from .spectral import Field, SpectralGrid, make_grid

OUTPUT_DIR_ENV = "TORUSAVG_OUTPUT_DIR"

_DEFAULTS = {
    "params": {
        "alpha": 0.75,
        "rho": 0.75,
        "beta": 3.0,
        "gamma": 0.5,
        "lam": 6.0,
        "eps": 1e-2,
        "nu": 0.0,
        "T": 1.0,
    },
    "couplings": {"kind": "norm_based"},
    "grid": {"n_modes": 64},
    # the fast cap keeps the fast chain's step small in fast-time units for
    # every eps in the default sweeps, not just the largest
    "scheme": {"kind": "exponential_euler", "dt_slow": 1e-3, "dt_fast": 5e-5},
    "ensemble": {
        "n_paths": 8,
        "seed": 0,
        "threads": 1,
        "experiment": "cli",
        "n_checkpoints": 17,
        "checkpoints": None,
        "initial": "smooth",
        "fast_initial": "zero",
        "t_base": 0.5,
    },
    "output": {"dir": None, "name": None},
}

#: frozen-fast sampling used by averaged drifts in CLI runs; dt is kept a few
#: times finer than the mixing time so the sampled invariant law is not the
#: bottleneck of eps sweeps
_PROVIDER_CONFIG = ergodics.FrozenFastConfig(dt=5e-3, horizon=4.0)

_SWEEP_DEFAULT_VALUES = {
    "eps": [1e-1, 3e-2, 1e-2, 3e-3],
    "nu": [1e-2, 3e-3, 1e-3],
    "holder": [1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
    "khasminskii": None,  # multiples of dt_slow, resolved against the scheme
}


class ConfigError(Exception):
    """Anything wrong with the configuration or usage (exit code 1)."""


def _load_config(path) -> dict:
    merged = {section: dict(values) for section, values in _DEFAULTS.items()}
    if path is None:
        return merged
    try:
        text = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    try:
        doc = tomllib.loads(text.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError("cannot parse config %s: %s" % (path, exc))
    for section, values in doc.items():
        if section not in merged:
            raise ConfigError("unknown config section [%s]" % section)
        if not isinstance(values, dict):
            raise ConfigError("config section [%s] must be a table" % section)
        for key, val in values.items():
            if key not in merged[section]:
                raise ConfigError("unknown key %r in section [%s]" % (key, section))
            merged[section][key] = val
    return merged


def _build(cfg: dict):
    """Grid, params, couplings and scheme from a merged config."""
    p = cfg["params"]
    try:
        params = ModelParams(
            alpha=float(p["alpha"]),
            rho=float(p["rho"]),
            beta=float(p["beta"]),
            gamma=float(p["gamma"]),
            lam=float(p["lam"]),
            eps=float(p["eps"]),
            nu=float(p["nu"]),
            T=float(p["T"]),
        )
        couplings = default_couplings(str(cfg["couplings"]["kind"]))
        grid = make_grid(int(cfg["grid"]["n_modes"]))
        s = cfg["scheme"]
        scheme = StepScheme(
            kind=normalize_scheme_kind(str(s["kind"])),
            dt_slow=float(s["dt_slow"]),
            dt_fast=None if s["dt_fast"] is None else float(s["dt_fast"]),
        )
        validate(params, couplings)
    except (AssumptionError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc))
    return grid, params, couplings, scheme


def _initial_fields(cfg: dict, grid: SpectralGrid):
    ens = cfg["ensemble"]
    u_kind = str(ens["initial"]).lower()
    if u_kind == "smooth":
        u0 = experiments.smooth_initial_slow(grid)
    elif u_kind == "rough":
        u0 = experiments.rough_initial_slow(grid)
    else:
        raise ConfigError("ensemble.initial must be 'smooth' or 'rough', got %r" % (ens["initial"],))
    v_kind = str(ens["fast_initial"]).lower()
    if v_kind == "zero":
        v0 = Field.zero(grid)
    elif v_kind == "rough":
        v0 = experiments.rough_initial_slow(grid, seed=7, amplitude=0.2)
    else:
        raise ConfigError("ensemble.fast_initial must be 'zero' or 'rough', got %r" % (ens["fast_initial"],))
    return u0, v0


def _checkpoints(cfg: dict, T: float) -> np.ndarray:
    ens = cfg["ensemble"]
    if ens["checkpoints"] is not None:
        chk = np.asarray([float(t) for t in ens["checkpoints"]], dtype=float)
        if chk.size < 2:
            raise ConfigError("ensemble.checkpoints needs at least 2 times")
        return chk
    return experiments.default_checkpoints(T, int(ens["n_checkpoints"]))


def _out_dir(cfg: dict, flag_value) -> Path:
    if flag_value is not None:
        return Path(flag_value)
    if cfg["output"]["dir"] is not None:
        return Path(cfg["output"]["dir"])
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    return Path("torusavg-results")


def _echo_config(cfg: dict) -> dict:
    """The effective merged config, as it goes into output JSON.

    The thread count is omitted: it cannot affect results, and recording it
    would break byte-identity of outputs across thread counts.
    """
    echo = {}
    for section, values in cfg.items():
        echo[section] = {
            k: (v if not isinstance(v, np.ndarray) else list(v))
            for k, v in values.items()
            if (section, k) != ("ensemble", "threads")
        }
    return echo


def _apply_overrides(cfg: dict, args, pairs):
    """Write flag values over config fields; pairs is ((section, key, attr), ...)."""
    for section, key, attr in pairs:
        val = getattr(args, attr, None)
        if val is not None:
            cfg[section][key] = val


def _write_json(payload: dict, out: Path, name: str, echo: dict) -> Path:
    payload = dict(payload)
    payload["config"] = _jsonable(echo)
    payload["config_sha256"] = config_fingerprint(echo)
    out.mkdir(parents=True, exist_ok=True)
    path = out / (name + ".json")
    path.write_text(_dump_json(_jsonable(payload)) + "\n")
    return path


def cmd_verify_lemmas(args) -> int:
    cfg = _load_config(args.config)
    _apply_overrides(cfg, args, [("params", "beta", "beta"), ("params", "gamma", "gamma"), ("ensemble", "seed", "seed")])
    if args.samples is not None and args.samples <= 0:
        raise ConfigError("--samples must be positive, got %r" % (args.samples,))
    samples = args.samples if args.samples is not None else 100_000
    grid, params, couplings, scheme = _build(cfg)
    reports = [
        check_lemma(lemma_id, beta=params.beta, gamma=params.gamma, samples=samples, seed=int(cfg["ensemble"]["seed"]))
        for lemma_id in LEMMA_IDS
    ]
    total = sum(r.violations for r in reports)
    worst = min(r.worst_margin for r in reports)
    payload = {
        "reports": [_jsonable(r) for r in reports],
        "violations_total": int(total),
        "worst_margin": float(worst),
    }
    path = _write_json(payload, _out_dir(cfg, args.out), cfg["output"]["name"] or "lemmas", _echo_config(cfg))
    for r in reports:
        print("%-18s beta=%-4g gamma=%-8g violations=%d worst_margin=%.3e" % (r.lemma_id, r.beta, r.gamma, r.violations, r.worst_margin))
    print("report: %s" % path)
    if total > 0:
        return 2
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    _apply_overrides(
        cfg,
        args,
        [
            ("params", "eps", "eps"),
            ("params", "nu", "nu"),
            ("ensemble", "n_paths", "paths"),
            ("ensemble", "seed", "seed"),
            ("ensemble", "threads", "threads"),
        ],
    )
    grid, params, couplings, scheme = _build(cfg)
    u0, v0 = _initial_fields(cfg, grid)
    chk = _checkpoints(cfg, params.T)
    ens = cfg["ensemble"]
    stats = experiments.run_coupled_ensemble(
        grid,
        params,
        couplings,
        scheme,
        u0,
        v0,
        chk,
        int(ens["n_paths"]),
        int(ens["seed"]),
        str(ens["experiment"]),
        threads=int(ens["threads"]),
    )
    name = cfg["output"]["name"] or "simulate"
    written = experiments.write_results(stats, _out_dir(cfg, args.out), name, extra_meta=_echo_config(cfg))
    for p in written:
        print("wrote %s" % p)
    return 0


def _fbar_config_for_tol(tol, lam: float) -> ergodics.FrozenFastConfig:
    """Scale replicas and averaging window so the standard error tracks tol.

    Both grow linearly in the inverse tolerance relative to the default
    setup, which is calibrated near 2e-2, so halving the tolerance quadruples
    the sample budget and halves the error bar.  The one-shot estimate runs
    many more replicas than the cached provider so its error bar is itself
    well resolved.
    """
    base = ergodics.FrozenFastConfig(dt=_PROVIDER_CONFIG.dt, horizon=_PROVIDER_CONFIG.horizon, n_replicas=32)
    if tol is None:
        return base
    if tol <= 0.0:
        raise ConfigError("--tol must be positive, got %r" % (tol,))
    factor = 2e-2 / tol
    burn = base.burn_in_for(lam)
    base_window = base.horizon - burn
    window = max(base_window * factor, 10 * base.dt)
    replicas = max(2, int(round(base.n_replicas * factor)))
    return ergodics.FrozenFastConfig(
        dt=base.dt, horizon=burn + window, burn_in=base.burn_in, n_replicas=replicas, seed=base.seed
    )


def cmd_fbar(args) -> int:
    cfg = _load_config(args.config)
    _apply_overrides(cfg, args, [("ensemble", "seed", "seed")])
    grid, params, couplings, scheme = _build(cfg)
    if args.u_from == "zero":
        u = Field.zero(grid)
    else:
        if args.u_file is None:
            raise ConfigError("--u-from file requires --u-file")
        try:
            coeffs = np.load(args.u_file)
        except OSError as exc:
            raise ConfigError("cannot read %s: %s" % (args.u_file, exc))
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape != (grid.n_modes,):
            raise ConfigError(
                "u coefficients have shape %r, expected (%d,)" % (coeffs.shape, grid.n_modes)
            )
        u = Field(grid, coeffs)
    fcfg = _fbar_config_for_tol(args.tol, params.lam)
    fcfg = ergodics.FrozenFastConfig(
        dt=fcfg.dt, horizon=fcfg.horizon, burn_in=fcfg.burn_in, n_replicas=fcfg.n_replicas, seed=int(cfg["ensemble"]["seed"])
    )
    est = ergodics.estimate_fbar(grid, params, couplings, u, config=fcfg)
    path = _write_json(_jsonable(est), _out_dir(cfg, args.out), cfg["output"]["name"] or "fbar", _echo_config(cfg))
    print("fbar = %.17g (se %.3g, method %s)" % (est.value, est.se, est.method))
    print("report: %s" % path)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    _apply_overrides(
        cfg,
        args,
        [("ensemble", "n_paths", "paths"), ("ensemble", "seed", "seed"), ("ensemble", "threads", "threads")],
    )
    grid, params, couplings, scheme = _build(cfg)
    u0, v0 = _initial_fields(cfg, grid)
    chk = _checkpoints(cfg, params.T)
    ens = cfg["ensemble"]
    n_paths = int(ens["n_paths"])
    seed = int(ens["seed"])
    threads = int(ens["threads"])
    experiment = str(ens["experiment"])
    if args.values is not None:
        values = [float(v) for v in args.values]
    elif _SWEEP_DEFAULT_VALUES[args.kind] is not None:
        values = list(_SWEEP_DEFAULT_VALUES[args.kind])
    else:  # khasminskii block lengths, tied to the step size
        values = [4 * scheme.dt_slow, 16 * scheme.dt_slow, 64 * scheme.dt_slow, params.T]
    if len(values) < 3:
        raise ConfigError("a sweep needs at least 3 values, got %d" % len(values))
    out = _out_dir(cfg, args.out)
    echo = _echo_config(cfg)
    name = cfg["output"]["name"] or ("sweep_" + args.kind)
    if args.kind == "eps":
        fbar = ergodics.fbar_provider(grid, params, couplings, config=_PROVIDER_CONFIG)
        result = experiments.eps_sweep(
            grid, params, couplings, scheme, u0, v0, chk, values, n_paths, seed, experiment, threads, fbar=fbar
        )
    elif args.kind == "nu":
        result = experiments.viscosity_sweep(
            grid, params, couplings, scheme, u0, v0, chk, values, n_paths, seed, experiment, threads
        )
    elif args.kind == "holder":
        result = experiments.holder_study(
            grid, params, couplings, scheme, u0, v0, float(ens["t_base"]), values, n_paths, seed, experiment, threads
        )
    else:
        res_u, res_v = experiments.khasminskii_study(
            grid, params, couplings, scheme, u0, v0, values, n_paths, seed, experiment, threads
        )
        written = experiments.write_results(res_u, out, name + "_u", extra_meta=echo)
        written += experiments.write_results(res_v, out, name + "_v", extra_meta=echo)
        for p in written:
            print("wrote %s" % p)
        return 0
    written = experiments.write_results(result, out, name, extra_meta=echo)
    print("slope = %.4g  residual = %.4g  monotone_2se = %s" % (result.slope, result.residual, result.monotone_2se))
    for p in written:
        print("wrote %s" % p)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torusavg", description="slow-fast spectral simulator on the torus")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML configuration file")
        sp.add_argument("--out", help="output directory (default: $%s or ./torusavg-results)" % OUTPUT_DIR_ENV)
        sp.add_argument("--seed", type=int, help="override ensemble.seed")

    sp = sub.add_parser("verify-lemmas", help="run the inequality oracles")
    common(sp)
    sp.add_argument("--beta", type=float, help="override params.beta")
    sp.add_argument("--gamma", type=float, help="override params.gamma")
    sp.add_argument("--samples", type=int, help="samples per oracle (default 100000)")
    sp.set_defaults(func=cmd_verify_lemmas)

    sp = sub.add_parser("simulate", help="run a coupled ensemble and write its statistics")
    common(sp)
    sp.add_argument("--eps", type=float, help="override params.eps")
    sp.add_argument("--nu", type=float, help="override params.nu")
    sp.add_argument("--paths", type=int, help="override ensemble.n_paths")
    sp.add_argument("--threads", type=int, help="override ensemble.threads")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fbar", help="estimate the averaged drift at a frozen slow state")
    common(sp)
    sp.add_argument("--u-from", choices=["zero", "file"], default="zero", help="frozen slow state source")
    sp.add_argument("--u-file", help="npy file with n_modes complex coefficients")
    sp.add_argument("--tol", type=float, help="target standard error (scales the averaging window)")
    sp.set_defaults(func=cmd_fbar)

    sp = sub.add_parser("sweep", help="error sweeps against eps, nu, lag or block length")
    common(sp)
    sp.add_argument("--kind", choices=["eps", "nu", "holder", "khasminskii"], required=True)
    sp.add_argument("--values", nargs="+", type=float, help="swept values (at least 3)")
    sp.add_argument("--paths", type=int, help="override ensemble.n_paths")
    sp.add_argument("--threads", type=int, help="override ensemble.threads")
    sp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, but 2 means verification failure
        # here; keep 0 for --help and fold usage problems into 1
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (AssumptionError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (ExperimentError, PathAborted) as exc:
        print("runtime failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
