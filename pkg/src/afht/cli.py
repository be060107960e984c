"""Command-line surface: region computation, test design, exact evaluation,
simulation, n-sweeps, and figure-data emission (CSV/JSON only).

Exit codes: 0 success, 2 configuration error, 3 state-space guard exceeded,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from .exact import (
    ErrorReport,
    GuardExceeded,
    exact_fixed,
    exact_rejection,
    exact_sprt_truncated,
    exact_two_phase,
)
from .exponents import (
    RegionBoundary,
    TwoPhaseDesign,
    chernoff,
    fd_boundary,
    gamma_region,
    kstar,
    seq_corner,
    two_phase_design,
    two_phase_region,
)
from .mc import SeedSpec, SimReport, simulate, sweep
from .pmf import HypothesisPair, kl, make_pmf
from .procedures import FixedTest, RejectionTest, SprtConfig, SprtTest, TestSpec, TwoPhaseTest

SCHEMA_VERSION = 1
LN2 = math.log(2.0)

_KNOWN_KEYS = {
    "p1", "p2", "gamma", "k", "n", "n_values", "trials", "seed",
    "lambda_grid", "units", "out", "test", "alpha", "beta", "delta",
    "max_samples", "phase2_lambda", "truth", "workers",
}

TEST_KINDS = ("fixed", "rejection", "two_phase", "sprt")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def _float_list(raw: Any, key: str) -> list[float]:
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return [float(raw)]
    if isinstance(raw, str):
        parts = [p for p in raw.split(",") if p != ""]
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {raw!r} as numbers") from None
    if isinstance(raw, list):
        try:
            return [float(v) for v in raw]
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: cannot parse {raw!r} as numbers") from None
    raise ConfigError(f"{key}: expected a number, list, or comma string, got {raw!r}")


def _int_list(raw: Any, key: str) -> list[int]:
    vals = _float_list(raw, key)
    out = []
    for v in vals:
        if v != int(v):
            raise ConfigError(f"{key}: {v!r} is not an integer")
        out.append(int(v))
    return out


class Experiment:
    """Merged file+flag configuration with unknown keys rejected up front."""

    def __init__(self, values: dict[str, Any]):
        unknown = set(values) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        self.values = values

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "Experiment":
        merged: dict[str, Any] = {}
        config_path = getattr(args, "config", None)
        if config_path:
            try:
                loaded = json.loads(Path(config_path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"config file {config_path}: {exc}") from None
            if not isinstance(loaded, dict):
                raise ConfigError("config file must hold a JSON object")
            merged.update(loaded)
        for key in _KNOWN_KEYS:
            flag = getattr(args, key, None)
            if flag is not None:
                merged[key] = flag
        return cls(merged)

    def has(self, key: str) -> bool:
        return self.values.get(key) is not None

    def raw(self, key: str) -> Any:
        if not self.has(key):
            raise ConfigError(f"missing required field: {key}")
        return self.values[key]

    def floats(self, key: str) -> list[float]:
        return _float_list(self.raw(key), key)

    def float(self, key: str, default: float | None = None) -> float:
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required field: {key}")
            return default
        vals = self.floats(key)
        if len(vals) != 1:
            raise ConfigError(f"{key}: expected a single number")
        return vals[0]

    def int(self, key: str, default: int | None = None) -> int:
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required field: {key}")
            return default
        vals = _int_list(self.raw(key), key)
        if len(vals) != 1:
            raise ConfigError(f"{key}: expected a single integer")
        return vals[0]

    def ints(self, key: str) -> list[int]:
        return _int_list(self.raw(key), key)

    def str(self, key: str, default: str | None = None) -> str:
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required field: {key}")
            return default
        return str(self.raw(key))

    def units(self) -> str:
        units = self.str("units", "nats")
        if units not in ("nats", "bits"):
            raise ConfigError(f"units must be 'nats' or 'bits', got {units!r}")
        return units

    def outdir(self) -> Path:
        return Path(self.str("out"))

    def pair(self) -> HypothesisPair:
        try:
            p1 = make_pmf(self.floats("p1"))
        except ValueError as exc:
            raise ConfigError(f"p1: {exc}") from None
        try:
            p2 = make_pmf(self.floats("p2"))
        except ValueError as exc:
            raise ConfigError(f"p2: {exc}") from None
        try:
            return HypothesisPair(p1, p2)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def nondegenerate_pair(self) -> HypothesisPair:
        pair = self.pair()
        if kl(pair.p1, pair.p2) == 0.0 and kl(pair.p2, pair.p1) == 0.0:
            raise ConfigError(
                "p1 and p2 are identical: every exponent region degenerates to the origin"
            )
        return pair

    def test_spec(self, pair: HypothesisPair) -> TestSpec:
        kind = self.str("test")
        if kind not in TEST_KINDS:
            raise ConfigError(f"test must be one of {TEST_KINDS}, got {kind!r}")
        try:
            if kind == "fixed":
                return FixedTest(self.int("n"), self.float("alpha"))
            if kind == "rejection":
                alpha = self.float("alpha")
                beta = self.float("beta")
                if alpha < beta:
                    raise ConfigError("alpha must be >= beta for the rejection test")
                return RejectionTest(self.int("n"), alpha, beta)
            if kind == "two_phase":
                design = self.design(pair)
                return TwoPhaseTest(self.int("n"), design)
            cfg = SprtConfig(self.int("n"), self.float("delta"), self.int("max_samples"))
            cfg.thresholds(pair)  # validates delta against the KLs
            return SprtTest(cfg)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def design(self, pair: HypothesisPair) -> TwoPhaseDesign:
        gamma = self.float("gamma")
        k = self.int("k")
        phase2 = self.float("phase2_lambda", -1.0)
        try:
            return two_phase_design(
                pair, gamma, k, None if phase2 < 0.0 else phase2
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def seed_spec(self) -> SeedSpec:
        try:
            return SeedSpec(self.int("seed"))
        except ValueError as exc:
            raise ConfigError(f"seed: {exc}") from None


def _scaled(value: float, units: str) -> float:
    return value / LN2 if units == "bits" else value


def _dump_json(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _boundary_rows(boundary: RegionBoundary) -> list[str]:
    rows = []
    for point, lam in zip(boundary.points, boundary.lambdas):
        lam_text = "" if lam is None else repr(lam)
        rows.append(f"{lam_text},{point.e1!r},{point.e2!r},{boundary.kind}")
    return rows


def _write_boundary_csv(path: Path, boundary: RegionBoundary) -> None:
    lines = ["lambda,e1_nats,e2_nats,kind"] + _boundary_rows(boundary)
    path.write_text("\n".join(lines) + "\n")


def _error_report_payload(report: ErrorReport, n: int) -> dict[str, Any]:
    def entry(p: float) -> dict[str, Any]:
        return {
            "probability": p,
            "exponent_nats_per_sample": None if p == 0.0 else -math.log(p) / n,
        }

    return {
        "p1_err": entry(report.p1_err),
        "p2_err": entry(report.p2_err),
        "p1_continue": entry(report.p1_continue),
        "p2_continue": entry(report.p2_continue),
        "p1_reject": entry(report.p1_reject),
        "p2_reject": entry(report.p2_reject),
    }


def _sim_report_payload(report: SimReport) -> dict[str, Any]:
    return {
        "trials": report.trials,
        "decisions": dict(report.decisions),
        "err_estimate": report.err_estimate,
        "err_ci_low": report.err_ci_low,
        "err_ci_high": report.err_ci_high,
        "tau_mean": report.tau_mean,
        "tau_var": report.tau_var,
        "tau_scaled_moments": {str(k): v for k, v in report.tau_scaled_moments.items()},
        "truncated_count": report.truncated_count,
    }


def _exact_for_spec(pair: HypothesisPair, spec: TestSpec) -> ErrorReport:
    if isinstance(spec, FixedTest):
        return exact_fixed(pair, spec.n, spec.alpha)
    if isinstance(spec, RejectionTest):
        return exact_rejection(pair, spec.n, spec.alpha, spec.beta)
    if isinstance(spec, TwoPhaseTest):
        return exact_two_phase(pair, spec.design, spec.n)
    return exact_sprt_truncated(pair, spec.config)


def _spec_n(spec: TestSpec) -> int:
    return spec.config.n if isinstance(spec, SprtTest) else spec.n


# ---------------------------------------------------------------- commands


def cmd_region(exp: Experiment) -> int:
    pair = exp.nondegenerate_pair()
    grid = exp.int("lambda_grid", 512)
    gammas = exp.floats("gamma") if exp.has("gamma") else []
    for g in gammas:
        if g <= 0.0:
            raise ConfigError(f"gamma: {g!r} must be positive")
    k = exp.int("k", 0)
    if exp.has("k") and k < 1:
        raise ConfigError("k: must be a positive integer")
    outdir = exp.outdir()
    units = exp.units()

    cp = chernoff(pair)
    corner = seq_corner(pair)
    raw, k_min = kstar(pair)
    fd = fd_boundary(pair, grid)
    gamma_bounds = [(g, gamma_region(pair, g, grid)) for g in gammas]
    two_phase_bounds = []
    if exp.has("k"):
        for g in gammas:
            if g > cp.d_star:
                print(
                    f"note: skipping two-phase region for gamma={g:g} "
                    f"(> crossing divergence {cp.d_star:.6f})",
                    file=sys.stderr,
                )
                continue
            two_phase_bounds.append((g, two_phase_region(pair, g, k, grid)))

    outdir.mkdir(parents=True, exist_ok=True)
    _write_boundary_csv(outdir / "fd_boundary.csv", fd)
    _write_boundary_csv(
        outdir / "seq_corner.csv",
        RegionBoundary((corner,), "box_corner", (None,)),
    )
    for g, bound in gamma_bounds:
        _write_boundary_csv(outdir / f"gamma_region_{g:g}.csv", bound)
    for g, bound in two_phase_bounds:
        _write_boundary_csv(outdir / f"two_phase_region_{g:g}_k{k}.csv", bound)
    _dump_json(
        outdir / "summary.json",
        {
            "schema_version": SCHEMA_VERSION,
            "units": units,
            "p1": list(pair.p1.probs),
            "p2": list(pair.p2.probs),
            "lambda_star": cp.lambda_star,
            "d_star": _scaled(cp.d_star, units),
            "kl_p1_p2": _scaled(kl(pair.p1, pair.p2), units),
            "kl_p2_p1": _scaled(kl(pair.p2, pair.p1), units),
            "seq_corner": [_scaled(corner.e1, units), _scaled(corner.e2, units)],
            "kstar_raw": raw,
            "k_min": k_min,
            "gammas": gammas,
        },
    )
    print(f"wrote region data to {outdir}")
    return 0


def cmd_design(exp: Experiment) -> int:
    pair = exp.nondegenerate_pair()
    units = exp.units()
    design = exp.design(pair)
    cp = chernoff(pair)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "units": units,
        "gamma": _scaled(design.gamma, units),
        "k": design.k,
        "lambda_a": design.lambda_a,
        "lambda_b": design.lambda_b,
        "alpha1": _scaled(design.alpha1, units),
        "beta1": _scaled(design.beta1, units),
        "phase2_lambda": design.phase2_lambda,
        "alpha2": _scaled(design.alpha2, units),
        "e1_target": _scaled(design.e1_target, units),
        "e2_target": _scaled(design.e2_target, units),
        "d_star": _scaled(cp.d_star, units),
    }
    if abs(design.alpha1 - design.beta1) <= 1e-9:
        payload["warning"] = (
            "alpha1 == beta1: the continuation band is empty and the test "
            "degenerates to a fixed-length test"
        )
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_exact(exp: Experiment) -> int:
    pair = exp.pair()
    spec = exp.test_spec(pair)
    outdir = exp.outdir()
    report = _exact_for_spec(pair, spec)
    n = _spec_n(spec)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "test": exp.str("test"),
        "n": n,
        "report": _error_report_payload(report, n),
    }
    if isinstance(spec, TwoPhaseTest):
        payload["continuation_bound"] = math.exp(-spec.design.gamma * n)
    outdir.mkdir(parents=True, exist_ok=True)
    _dump_json(outdir / "exact.json", payload)
    print(f"wrote {outdir / 'exact.json'}")
    return 0


def cmd_simulate(exp: Experiment) -> int:
    pair = exp.pair()
    spec = exp.test_spec(pair)
    truth = exp.int("truth", 1)
    if truth not in (1, 2):
        raise ConfigError("truth must be 1 or 2")
    trials = exp.int("trials")
    if trials < 1:
        raise ConfigError("trials must be positive")
    workers = exp.int("workers", 1)
    seed = exp.seed_spec()
    outdir = exp.outdir()

    report = simulate(pair, truth, spec, trials, seed, workers=workers)
    payload: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "test": exp.str("test"),
        "truth": truth,
        "seed": seed.master_seed,
        "report": _sim_report_payload(report),
    }
    try:
        exact = _exact_for_spec(pair, spec)
        exact_err = exact.p1_err if truth == 1 else exact.p2_err
        se = math.sqrt(exact_err * (1.0 - exact_err) / trials)
        z = None if se == 0.0 else (report.err_estimate - exact_err) / se
        payload["comparison"] = {
            "err_exact": exact_err,
            "err_estimate": report.err_estimate,
            "standard_error": se,
            "z_score": z,
        }
    except GuardExceeded:
        payload["comparison"] = None
    outdir.mkdir(parents=True, exist_ok=True)
    _dump_json(outdir / "simulate.json", payload)
    print(f"wrote {outdir / 'simulate.json'}")
    return 0


def cmd_sweep(exp: Experiment) -> int:
    pair = exp.pair()
    kind = exp.str("test")
    truth = exp.int("truth", 1)
    if truth not in (1, 2):
        raise ConfigError("truth must be 1 or 2")
    trials = exp.int("trials")
    workers = exp.int("workers", 1)
    seed = exp.seed_spec()
    n_values = exp.ints("n_values")
    outdir = exp.outdir()

    if kind == "fixed":
        alpha = exp.float("alpha")

        def family(n: int) -> TestSpec:
            return FixedTest(n, alpha)

    elif kind == "rejection":
        alpha = exp.float("alpha")
        beta = exp.float("beta")
        if alpha < beta:
            raise ConfigError("alpha must be >= beta for the rejection test")

        def family(n: int) -> TestSpec:
            return RejectionTest(n, alpha, beta)

    elif kind == "two_phase":
        design = exp.design(pair)

        def family(n: int) -> TestSpec:
            return TwoPhaseTest(n, design)

    else:
        raise ConfigError("sweep supports test kinds: fixed, rejection, two_phase")

    try:
        result = sweep(pair, truth, family, n_values, trials, seed, workers=workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    exact_points = []
    try:
        for n in n_values:
            rep = _exact_for_spec(pair, family(n))
            exact_points.append((n, rep.p1_err if truth == 1 else rep.p2_err))
    except GuardExceeded:
        exact_points = []

    lines = [
        "n,hypothesis,trials,err_estimate,err_ci_low,err_ci_high,"
        "tau_mean,tau_var,truncated_count"
    ]
    for n, rep in result.entries:
        lines.append(
            f"{n},{truth},{rep.trials},{rep.err_estimate!r},{rep.err_ci_low!r},"
            f"{rep.err_ci_high!r},{rep.tau_mean!r},{rep.tau_var!r},{rep.truncated_count}"
        )
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "sweep.csv").write_text("\n".join(lines) + "\n")

    summary: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "test": kind,
        "truth": truth,
        "fit": {
            "slope_nats_per_sample": result.fit.slope,
            "intercept": result.fit.intercept,
            "r2": result.fit.r2,
        },
        "skipped_n": list(result.skipped_n),
    }
    if exact_points and all(p > 0.0 for _, p in exact_points):
        from .exact import exponent_fit

        fit = exponent_fit(exact_points)
        summary["exact_fit"] = {
            "slope_nats_per_sample": fit.slope,
            "intercept": fit.intercept,
            "r2": fit.r2,
        }
    _dump_json(outdir / "sweep_summary.json", summary)
    print(f"wrote sweep outputs to {outdir}")
    return 0


FIG2_GAMMAS = (0.05, 0.1, 0.2, 0.3)
FIG3_GAMMAS = (0.02, 0.05, 0.08)


def cmd_figures(exp: Experiment) -> int:
    values = dict(exp.values)
    values.setdefault("p1", [0.9, 0.1])
    values.setdefault("p2", [0.2, 0.8])
    exp = Experiment(values)
    pair = exp.nondegenerate_pair()
    grid = exp.int("lambda_grid", 512)
    outdir = exp.outdir()

    cp = chernoff(pair)
    corner = seq_corner(pair)
    raw, k_min = kstar(pair)
    fig2_gammas = [g for g in FIG2_GAMMAS if g > 0]
    fig3_gammas = [g for g in FIG3_GAMMAS if g < cp.d_star]
    if not fig3_gammas:
        raise ConfigError(
            "no default two-phase gamma lies below the crossing divergence "
            f"{cp.d_star:.6f} for this pair"
        )

    fd = fd_boundary(pair, grid)
    fig1_lines = ["lambda,e1_nats,e2_nats,kind"]
    fig1_lines += _boundary_rows(fd)
    fig1_lines += _boundary_rows(RegionBoundary((corner,), "box_corner", (None,)))

    fig2_lines = ["gamma,lambda,e1_nats,e2_nats,kind"]
    for g in fig2_gammas:
        bound = gamma_region(pair, g, grid)
        fig2_lines += [f"{g!r},{row}" for row in _boundary_rows(bound)]

    fig3_lines = ["gamma,k,lambda,e1_nats,e2_nats,kind"]
    for g in fig3_gammas:
        for k in (2, k_min):
            bound = two_phase_region(pair, g, k, grid)
            fig3_lines += [f"{g!r},{k},{row}" for row in _boundary_rows(bound)]

    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "fig1.csv").write_text("\n".join(fig1_lines) + "\n")
    (outdir / "fig2.csv").write_text("\n".join(fig2_lines) + "\n")
    (outdir / "fig3.csv").write_text("\n".join(fig3_lines) + "\n")
    _dump_json(
        outdir / "figures_summary.json",
        {
            "schema_version": SCHEMA_VERSION,
            "p1": list(pair.p1.probs),
            "p2": list(pair.p2.probs),
            "lambda_star": cp.lambda_star,
            "d_star": cp.d_star,
            "kstar_raw": raw,
            "k_min": k_min,
            "fig2_gammas": list(fig2_gammas),
            "fig3_gammas": list(fig3_gammas),
            "fig3_ks": [2, k_min],
        },
    )
    print(f"wrote fig1.csv, fig2.csv, fig3.csv to {outdir}")
    return 0


# ------------------------------------------------------------------ driver


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--p1", help="probability vector, e.g. 0.9,0.1")
    parser.add_argument("--p2", help="probability vector, e.g. 0.2,0.8")
    parser.add_argument("--units", choices=["nats", "bits"])
    parser.add_argument("--out", help="output directory")


def _add_test_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--test", choices=list(TEST_KINDS))
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--max-samples", dest="max_samples", type=int)
    parser.add_argument("--gamma")
    parser.add_argument("--k", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--phase2-lambda", dest="phase2_lambda", type=float)


def _add_sim_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--truth", type=int, choices=[1, 2])
    parser.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afht",
        description=(
            "Error-exponent geometry and runnable binary hypothesis tests "
            "on finite alphabets"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("region", help="write region boundary CSVs and a summary")
    _add_common(p)
    p.add_argument("--gamma", help="gamma value or comma list")
    p.add_argument("--k", type=int, help="also emit two-phase regions at this k")
    p.add_argument("--lambda-grid", dest="lambda_grid", type=int)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("design", help="print the two-phase design for (gamma, k)")
    _add_common(p)
    p.add_argument("--gamma")
    p.add_argument("--k", type=int)
    p.add_argument("--phase2-lambda", dest="phase2_lambda", type=float)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("exact", help="exact error probabilities of a test")
    _add_common(p)
    _add_test_options(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("simulate", help="Monte Carlo error estimate of a test")
    _add_common(p)
    _add_test_options(p)
    _add_sim_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="simulate over an n grid and fit exponents")
    _add_common(p)
    _add_test_options(p)
    _add_sim_options(p)
    p.add_argument("--n-values", dest="n_values", help="comma list, e.g. 40,80,120")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figures", help="regenerate the three figure datasets")
    _add_common(p)
    p.add_argument("--lambda-grid", dest="lambda_grid", type=int)
    p.set_defaults(func=cmd_figures)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        exp = Experiment.from_args(args)
        return args.func(exp)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GuardExceeded as exc:
        print(f"guard exceeded: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
