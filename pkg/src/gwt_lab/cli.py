"""Command-line front end: gwt-lab bnn | estimate | closure.

Experiments are described by a JSON config (one schema for all commands,
unknown keys rejected) and emit a result bundle: a machine-readable
summary.json plus a plot-ready curves.csv holding the log-log points
every reported estimate was fitted on. Files are written atomically
(write-then-rename); nothing is left behind on failure.

Exit codes: 0 ok, 1 closure verdict failed, 2 config/parse error,
3 overflow abort, 4 insufficient data or empty input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from .bnn_sampler import (
    LayerPrior,
    NetworkConfig,
    run_prior_monte_carlo,
)
from .closure_lab import (
    check_power_rule,
    check_product_rule,
    check_sum_rule,
    closure_tolerance,
    estimate_pd_constant,
    feasible_z_quantiles,
    negative_control_truncation,
    weight_unit_product_samples,
)
from .errors import (
    ConfigError,
    DegenerateTailError,
    DomainError,
    InsufficientDataError,
    OverflowAbortError,
    ParameterError,
)
from .rng import RngStream
from .tail_distributions import DistributionSpec, sample_iid
from .tail_estimation import (
    EmpiricalTail,
    FitWindow,
    check_subweibull_envelope,
    estimate_tail_index,
    loglog_points,
)

DESK_SCALE_N = 10**5
FULL_SCALE_N = 10**6
DEFAULT_OUT_DIR = "gwt-lab-out"

SUITES = ("sum", "product", "power", "pd", "negatives", "all")

_TOP_KEYS = {"command", "seed", "n_samples", "network", "fit_window", "suite", "out_dir", "distribution"}
_NETWORK_KEYS = {"input_dim", "widths", "activation", "priors"}
_PRIOR_KEYS = {"family", "beta_w", "scale_policy"}
_WINDOW_KEYS = {"q_lo", "q_hi", "grid_size", "min_points"}
_DISTRIBUTION_KEYS = {"family", "params"}


# ----------------------------- config ---------------------------------


def _reject_unknown(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(cfg, _TOP_KEYS, "config")
    return cfg


def _positive_int(cfg: dict, key: str, default=None):
    v = cfg.get(key, default)
    if v is None:
        return None
    if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
        raise ConfigError(f"'{key}' must be a positive integer, got {v!r}")
    return v


def resolve_seed(cfg: dict, override) -> int:
    seed = override if override is not None else cfg.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (config 'seed' or --seed)")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    return seed


def resolve_n_samples(cfg: dict, full: bool) -> int:
    if full:
        return FULL_SCALE_N
    return _positive_int(cfg, "n_samples") or DESK_SCALE_N


def parse_fit_window(cfg: dict) -> FitWindow:
    raw = cfg.get("fit_window", {})
    if not isinstance(raw, dict):
        raise ConfigError("'fit_window' must be an object")
    _reject_unknown(raw, _WINDOW_KEYS, "fit_window")
    try:
        return FitWindow(
            q_lo=raw.get("q_lo", FitWindow.q_lo),
            q_hi=raw.get("q_hi", FitWindow.q_hi),
            grid_size=raw.get("grid_size", FitWindow.grid_size),
            min_points=raw.get("min_points", FitWindow.min_points),
        )
    except ParameterError as exc:
        raise ConfigError(f"bad fit_window: {exc}") from exc


def parse_network(cfg: dict, seed: int, n_samples: int) -> NetworkConfig:
    raw = cfg.get("network")
    if raw is None:
        raise ConfigError("bnn command needs a 'network' section")
    _reject_unknown(raw, _NETWORK_KEYS, "network")
    priors_raw = raw.get("priors")
    if not isinstance(priors_raw, list) or not priors_raw:
        raise ConfigError("'network.priors' must be a nonempty list")
    priors = []
    for i, p in enumerate(priors_raw):
        _reject_unknown(p, _PRIOR_KEYS, f"network.priors[{i}]")
        try:
            priors.append(
                LayerPrior(
                    family=p.get("family", "gaussian"),
                    tail_beta_w=float(p.get("beta_w", 2.0)),
                    scale_policy=p.get("scale_policy", "inv_sqrt_fan_in"),
                )
            )
        except ParameterError as exc:
            raise ConfigError(f"bad prior [{i}]: {exc}") from exc
    try:
        return NetworkConfig(
            input_dim=raw.get("input_dim", 0),
            widths=tuple(raw.get("widths", ())),
            layer_priors=tuple(priors),
            activation=raw.get("activation", "relu"),
            n_samples=n_samples,
            seed=seed,
        )
    except ParameterError as exc:
        raise ConfigError(f"bad network: {exc}") from exc


def parse_distribution(cfg: dict) -> DistributionSpec | None:
    raw = cfg.get("distribution")
    if raw is None:
        return None
    _reject_unknown(raw, _DISTRIBUTION_KEYS, "distribution")
    family = raw.get("family")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'distribution.params' must be an object")
    try:
        return DistributionSpec(family, {k: float(v) for k, v in params.items()})
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad distribution: {exc}") from exc


# ----------------------------- output ---------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_bundle(out_dir: str, summary: dict, curve_rows) -> None:
    """Atomically write summary.json and curves.csv into out_dir.

    curve_rows is an iterable of (label, log_x, log_neg_log_survival).
    """
    os.makedirs(out_dir, exist_ok=True)
    payloads = {
        "summary.json": json.dumps(summary, indent=2) + "\n",
        "curves.csv": "label,log_x,log_neg_log_survival\n"
        + "".join(f"{label},{_fmt(lx)},{_fmt(ly)}\n" for label, lx, ly in curve_rows),
    }
    staged = []
    try:
        for name, text in payloads.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
        # rename only after every payload is staged: no partial bundles
        for tmp, final in staged:
            os.replace(tmp, final)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def _estimate_to_dict(est) -> dict:
    return {
        "beta_hat": est.beta_hat,
        "intercept": est.intercept,
        "stderr_slope": est.stderr_slope,
        "fit_points": est.fit_points,
        "x_range": list(est.x_range),
    }


def _points_rows(label: str, points: np.ndarray):
    return [(label, float(p[0]), float(p[1])) for p in points]


# ----------------------------- commands --------------------------------


def cmd_bnn_experiment(cfg: dict, out_dir: str, seed: int, n_samples: int) -> int:
    window = parse_fit_window(cfg)
    netcfg = parse_network(cfg, seed, n_samples)
    trace = run_prior_monte_carlo(netcfg)
    layers = []
    rows = []
    for l in range(netcfg.depth):
        predicted = 1.0 / sum(1.0 / p.tail_beta_w for p in netcfg.layer_priors[: l + 1])
        samples = trace.g[l]
        if trace.overflow_replicates.size:
            samples = samples[np.isfinite(samples)]
        tail = EmpiricalTail.from_samples(samples, side="right")
        pts = loglog_points(tail, window)
        est = estimate_tail_index(tail, window)
        tol = closure_tolerance(predicted, est.stderr_slope)
        layers.append(
            {
                "layer": l + 1,
                "predicted_beta": predicted,
                **_estimate_to_dict(est),
                "tolerance": tol,
                "within_tolerance": bool(abs(est.beta_hat - predicted) <= tol),
            }
        )
        rows.extend(_points_rows(f"layer{l + 1}", pts))
    summary = {
        "command": "bnn",
        "seed": seed,
        "n_samples": n_samples,
        "network": {
            "input_dim": netcfg.input_dim,
            "widths": list(netcfg.widths),
            "activation": netcfg.activation,
            "priors": [
                {"family": p.family, "beta_w": p.tail_beta_w, "scale_policy": p.scale_policy}
                for p in netcfg.layer_priors
            ],
        },
        "fit_window": {
            "q_lo": window.q_lo,
            "q_hi": window.q_hi,
            "grid_size": window.grid_size,
            "min_points": window.min_points,
        },
        "degenerate_input": trace.degenerate_input,
        "overflow_count": int(trace.overflow_replicates.size),
        "layers": layers,
    }
    write_bundle(out_dir, summary, rows)
    print(f"{'layer':>5} {'predicted':>10} {'estimated':>10} {'stderr':>8}  in-band")
    for rec in layers:
        print(
            f"{rec['layer']:>5} {rec['predicted_beta']:>10.4f} {rec['beta_hat']:>10.4f} "
            f"{rec['stderr_slope']:>8.4f}  {'yes' if rec['within_tolerance'] else 'NO'}"
        )
    return 0


def _read_stdin_samples(stream) -> np.ndarray:
    values = []
    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError:
            raise ConfigError(f"unparseable sample on line {lineno}: {text!r}")
    return np.asarray(values, dtype=np.float64)


def cmd_estimate_tail(cfg: dict, out_dir: str, seed: int, n_samples: int, stdin=None) -> int:
    window = parse_fit_window(cfg)
    spec = parse_distribution(cfg)
    if spec is not None:
        samples = sample_iid(spec, n_samples, RngStream(seed))
        label = spec.family
    else:
        samples = _read_stdin_samples(stdin if stdin is not None else sys.stdin)
        label = "samples"
    if samples.size == 0:
        raise InsufficientDataError("no samples supplied")
    tail = EmpiricalTail.from_samples(samples, side="right")
    pts = loglog_points(tail, window)
    est = estimate_tail_index(tail, window)
    summary = {
        "command": "estimate",
        "seed": seed,
        "n": int(samples.size),
        "label": label,
        **_estimate_to_dict(est),
    }
    write_bundle(out_dir, summary, _points_rows(label, pts))
    print(f"beta_hat = {est.beta_hat:.4f} (stderr {est.stderr_slope:.4f}, {est.fit_points} points)")
    return 0


def _closure_suite_checks(suite: str, seed: int, n: int, window: FitWindow):
    """Canned closure checks; yields (name, runner) pairs."""
    base = RngStream(seed)
    gauss = DistributionSpec.gaussian()
    laplace = DistributionSpec.laplace()

    def rule_entry(name, kind, run):
        return {"name": name, "kind": kind, "run": run}

    checks = {"sum": [], "product": [], "power": [], "pd": [], "negatives": []}
    checks["sum"] = [
        rule_entry(
            "sum_gauss_laplace",
            "closure",
            lambda: check_sum_rule([gauss, laplace], n, window, base.child(1)),
        ),
        rule_entry(
            "sum_identity_point_mass",
            "closure",
            lambda: check_sum_rule([gauss, DistributionSpec.point_mass(0.0)], n, window, base.child(2)),
        ),
        rule_entry(
            "sum_three_generalized_gaussians",
            "closure",
            lambda: check_sum_rule(
                [
                    DistributionSpec.generalized_gaussian(2.0),
                    DistributionSpec.generalized_gaussian(1.5),
                    DistributionSpec.generalized_gaussian(3.0),
                ],
                n,
                window,
                base.child(3),
            ),
        ),
    ]
    checks["product"] = [
        rule_entry("product_gauss_gauss", "closure",
                   lambda: check_product_rule(gauss, gauss, n, window, base.child(4))),
        rule_entry("product_gauss_laplace", "closure",
                   lambda: check_product_rule(gauss, laplace, n, window, base.child(5))),
        rule_entry("product_identity_point_mass", "closure",
                   lambda: check_product_rule(gauss, DistributionSpec.point_mass(1.0), n, window, base.child(6))),
    ]
    checks["power"] = [
        rule_entry("power_gauss_squared", "closure",
                   lambda: check_power_rule(gauss, 1.0, 2.0, n, window, base.child(7))),
        rule_entry("power_gauss_rescaled", "closure",
                   lambda: check_power_rule(gauss, 3.0, 1.0, n, window, base.child(8))),
        rule_entry("power_laplace_sqrt", "closure",
                   lambda: check_power_rule(laplace, 1.0, 0.5, n, window, base.child(9))),
    ]

    def pd_independent(n_coords, stream_k, expected):
        # c_hat is a minimum over noisy cells; the +-0.05 verdict band needs
        # >= 1000 conditioning events per cell to be binomially meaningful
        def run():
            n_eff = max(n, 10**5)
            gen = base.child(stream_k).generator()
            joint = gen.standard_normal((n_eff, n_coords))
            zq = feasible_z_quantiles(n_eff, min_cell_count=1000)
            pd = estimate_pd_constant(joint, z_quantiles=zq)
            return {"pd": pd, "pass": abs(pd.c_hat - expected) <= 0.05}
        return run

    def pd_lemma(n_units, stream_k):
        def run():
            n_eff = max(n, 10**5)
            joint = weight_unit_product_samples(n_eff, n_units, base.child(stream_k))
            floor = 1.0 / 2 ** (n_units - 1) - 0.05
            zq = feasible_z_quantiles(n_eff)
            right = estimate_pd_constant(joint, side="right", z_quantiles=zq)
            left = estimate_pd_constant(joint, side="left", z_quantiles=zq)
            return {
                "pd": right,
                "pd_left": left,
                "pass": right.c_hat >= floor and left.c_hat >= floor,
            }
        return run

    def pd_counter_monotone():
        n_eff = max(n, 10**5)
        gen = base.child(12).generator()
        x = gen.standard_normal(n_eff)
        pd = estimate_pd_constant(np.column_stack([x, -x]), z_quantiles=feasible_z_quantiles(n_eff))
        # PD is expected to fail here; the control passes when c_hat is tiny
        return {"pd": pd, "pass": pd.c_hat <= 0.05, "expected_fail_of_pd": True}

    checks["pd"] = [
        rule_entry("pd_independent_pair", "pd", pd_independent(2, 10, 0.5)),
        rule_entry("pd_independent_triple", "pd", pd_independent(3, 11, 0.25)),
        rule_entry("pd_counter_monotone_control", "pd", pd_counter_monotone),
        rule_entry("pd_lemma_products_2", "pd", pd_lemma(2, 13)),
        rule_entry("pd_lemma_products_3", "pd", pd_lemma(3, 14)),
        rule_entry("pd_lemma_products_4", "pd", pd_lemma(4, 15)),
    ]

    def truncation_tight():
        rep = negative_control_truncation(gauss, 1.0, n, base.child(16), window)
        ok = rep.within_bound and rep.survival_beyond_bound == 0.0 and rep.pd.c_hat <= 0.05
        return {"truncation": rep, "pass": ok, "expected_fail_of_pd": True}

    def truncation_loose():
        rep = negative_control_truncation(gauss, 10.0, n, base.child(17), window)
        ok = rep.within_bound
        if rep.tail_estimate is not None:
            tol = closure_tolerance(2.0, rep.tail_estimate.stderr_slope)
            ok = ok and abs(rep.tail_estimate.beta_hat - 2.0) <= tol
        return {"truncation": rep, "pass": ok}

    def student_t_envelopes():
        samples = sample_iid(DistributionSpec.student_t(3.0), n, base.child(18))
        tail = EmpiricalTail.from_samples(samples, side="right")
        results = {}
        all_fail = True
        for beta in (0.5, 1.0, 2.0):
            chk = check_subweibull_envelope(tail, 1.0 / beta, window)
            results[f"beta_{beta}"] = chk.holds
            all_fail = all_fail and not chk.holds
        return {"envelope_holds": results, "pass": all_fail, "expected_fail_of_envelopes": True}

    checks["negatives"] = [
        rule_entry("truncation_gaussian_m1", "negative", truncation_tight),
        rule_entry("truncation_gaussian_m10", "negative", truncation_loose),
        rule_entry("student_t_weibull_envelopes", "negative", student_t_envelopes),
    ]

    if suite == "all":
        return [c for group in checks.values() for c in group]
    return checks[suite]


def cmd_closure_suite(cfg: dict, out_dir: str, seed: int, n_samples: int) -> int:
    suite = cfg.get("suite", "all")
    if suite not in SUITES:
        raise ConfigError(f"suite must be one of {SUITES}, got {suite!r}")
    window = parse_fit_window(cfg)
    reports = []
    rows = []
    any_fail = False
    for entry in _closure_suite_checks(suite, seed, n_samples, window):
        result = entry["run"]()
        rec = {"name": entry["name"], "kind": entry["kind"]}
        if hasattr(result, "rule"):  # ClosureReport
            rec.update(
                {
                    "rule": result.rule,
                    "predicted_beta": result.predicted_beta,
                    **_estimate_to_dict(result.estimated),
                    "verdict": result.verdict,
                }
            )
            rows.extend(_points_rows(entry["name"], result.points))
            passed = result.passed
        else:
            passed = bool(result.pop("pass"))
            rec["verdict"] = "pass" if passed else "fail"
            for key, value in result.items():
                if key == "pd" or key == "pd_left":
                    rec[key] = {
                        "c_hat": value.c_hat,
                        "side": value.side,
                        "z_grid": [float(z) for z in value.z_grid],
                        "per_z_conditional": [float(p) for p in value.per_z_conditional],
                    }
                elif key == "truncation":
                    if value.points is not None and value.tail_estimate is not None:
                        rows.extend(_points_rows(entry["name"], value.points))
                    rec["truncation"] = {
                        "m": value.m,
                        "bound": value.bound,
                        "max_abs_sum": value.max_abs_sum,
                        "within_bound": value.within_bound,
                        "survival_beyond_bound": value.survival_beyond_bound,
                        "tail_outcome": value.tail_outcome,
                    }
                    rec["pd"] = {"c_hat": value.pd.c_hat, "side": value.pd.side}
                    if value.tail_estimate is not None:
                        rec["tail_estimate"] = _estimate_to_dict(value.tail_estimate)
                else:
                    rec[key] = value
        any_fail = any_fail or not passed
        reports.append(rec)
        print(f"{rec['name']:<34} {rec['verdict']}")
    summary = {
        "command": "closure",
        "suite": suite,
        "seed": seed,
        "n_samples": n_samples,
        "reports": reports,
    }
    write_bundle(out_dir, summary, rows)
    return 1 if any_fail else 0


# ----------------------------- entry point -----------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gwt-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_config in (("bnn", True), ("estimate", False), ("closure", True)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config, help="JSON experiment config")
        p.add_argument("--out", help="output directory for the result bundle")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--full", action="store_true", help="run at full scale (n = 1e6)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        declared = cfg.get("command")
        if declared is not None and declared != args.command:
            raise ConfigError(f"config declares command {declared!r}, invoked {args.command!r}")
        stdin_mode = args.command == "estimate" and "distribution" not in cfg
        if stdin_mode and args.seed is None and "seed" not in cfg:
            seed = 0  # no randomness consumed when samples come from stdin
        else:
            seed = resolve_seed(cfg, args.seed)
        n_samples = resolve_n_samples(cfg, args.full)
        out_dir = args.out or cfg.get("out_dir") or DEFAULT_OUT_DIR
        if args.command == "bnn":
            return cmd_bnn_experiment(cfg, out_dir, seed, n_samples)
        if args.command == "estimate":
            return cmd_estimate_tail(cfg, out_dir, seed, n_samples)
        return cmd_closure_suite(cfg, out_dir, seed, n_samples)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OverflowAbortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InsufficientDataError, DegenerateTailError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
