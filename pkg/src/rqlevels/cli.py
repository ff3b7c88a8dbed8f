"""Command-line front end.

    rqlevels SUBCOMMAND --config PATH [--out PATH] [--format csv|json]

Exit status is 0 on success, 2 for an invalid configuration and 3 when a
numerical routine misses its accuracy contract. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels, q1, r2q2, sim, transship
from .config import ConfigError, ScenarioConfig, expand_rates, parse_config
from .errors import ModelError, NotQ1, NumericalError
from .rate_model import Policy, RateProfile, validate_profile

COMMANDS = {
    "solve-q1": "q1",
    "solve-r2q2": "r2q2",
    "transship": "transship",
    "simulate": "simulate",
    "kernel": "kernel",
    "residuals": "residuals",
}

# columns printed at reduced precision
_CI_COLUMNS = {"ci_half_width"}


def _num(x, digits=12):
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(format(float(x), f".{digits}g"))


def _text(x, digits=12):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), f".{digits}g")


class Result:
    """Per-row table plus scalars; rendered as CSV or as the JSON envelope."""

    def __init__(self, columns, rows, scalars=None, provenance=None):
        self.columns = list(columns)
        self.rows = rows
        self.scalars = scalars or {}
        self.provenance = provenance or {}

    def csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(
                ",".join(_text(v, 4 if c in _CI_COLUMNS else 12) for c, v in zip(self.columns, row))
            )
        return "\n".join(lines) + "\n"

    def json(self, command: str, cfg: ScenarioConfig) -> str:
        doc = {
            "command": command,
            "version": __version__,
            "config": cfg.echo(),
            "provenance": self.provenance,
            "columns": self.columns,
            "table": [
                {c: _num(v, 4 if c in _CI_COLUMNS else 12) for c, v in zip(self.columns, row)}
                for row in self.rows
            ],
            "scalars": {k: _num(v) for k, v in self.scalars.items()},
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# config -> model objects


def _system(cfg: ScenarioConfig):
    p = cfg.policy
    try:
        policy = Policy(p.r, p.q, p.tau)
    except ModelError as exc:
        raise ConfigError("/policy", str(exc)) from exc
    table = expand_rates(cfg.rates, policy.top_level)
    try:
        return validate_profile(policy, table)
    except ModelError as exc:
        raise ConfigError("/rates", str(exc)) from exc


def _scenario(cfg: ScenarioConfig) -> transship.TransshipScenario:
    t = cfg.transship
    stores = []
    for name, block in (("store_a", t.store_a), ("store_b", t.store_b)):
        try:
            stores.append(transship.StoreSpec(block.r, block.c, block.gamma))
        except ModelError as exc:
            raise ConfigError(f"/transship/{name}", str(exc)) from exc
    return transship.TransshipScenario(stores[0], stores[1], t.tau)


def _sim_config(cfg: ScenarioConfig) -> sim.SimConfig:
    s = cfg.sim
    try:
        return sim.SimConfig(s.seed, s.measured_events, s.warmup_events, s.batches, s.replications)
    except ModelError as exc:
        raise ConfigError("/sim", str(exc)) from exc


def _level_rows(dist, extra=None):
    rows = []
    for i, level in enumerate(dist.levels):
        row = [int(level), float(dist.probabilities[i])]
        if extra is not None:
            row.append(float(extra[i]))
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# commands


def cmd_q1(cfg):
    spec = _system(cfg)
    if spec.policy.order_quantity != 1:
        raise ConfigError("/policy/q", f"solve-q1 needs q = 1, got {spec.policy.order_quantity}")
    dist = q1.solve_q1(spec)
    return Result(
        ["level", "a"],
        _level_rows(dist),
        {"N_0": spec.max_outstanding, "floor_level": spec.floor_level},
        {"solver": "q1_product_form"},
    )


def cmd_r2q2(cfg):
    b = cfg.r2q2
    sol = r2q2.z_constants(b.lam, b.tau)
    w = r2q2.r2q2_weights(b.lam, b.tau, b.quad_tol)
    dist = r2q2.solve_r2q2(b.lam, b.tau, b.quad_tol)
    return Result(
        ["level", "a"],
        _level_rows(dist),
        {"N_0": 2, "A": sol.A, "B": sol.B, "C": sol.C, "D": sol.D, "arrival_balance": w.arrival_balance},
        {"solver": "r2q2_quadrature", "quad_tol": b.quad_tol},
    )


def cmd_simulate(cfg):
    spec = _system(cfg)
    res = sim.simulate(spec, _sim_config(cfg), workers=cfg.sim.workers)
    return Result(
        ["level", "a", "ci_half_width"],
        _level_rows(res.empirical, res.half_widths),
        {
            "N_0": spec.max_outstanding,
            "demand_events": res.demand_events,
            "orders_placed": res.orders_placed,
            "max_pending": res.max_pending,
        },
        {"solver": "discrete_event_simulation", "seed": cfg.sim.seed, "confidence": sim.CONFIDENCE},
    )


def cmd_transship(cfg):
    t = cfg.transship
    scenario = _scenario(cfg)
    report = transship.iterate_fixed_point(scenario, t.tolerance, t.max_iterations, t.damping)
    scalars = {
        "beta_a": report.beta.beta_a,
        "beta_b": report.beta.beta_b,
        "fixed_point_residual": report.residual,
        "iterations": report.iterations,
    }
    if t.multistart:
        _, _, gap = transship.multistart_fixed_point(scenario, t.tolerance, t.max_iterations, t.damping)
        scalars["multistart_gap"] = gap
    dist_a, dist_b = transship.store_distributions(scenario, report.beta)
    rows = [["a"] + r for r in _level_rows(dist_a)] + [["b"] + r for r in _level_rows(dist_b)]
    provenance = {"solver": "damped_successive_substitution", "tolerance": t.tolerance}
    if cfg.sim is not None:
        res = sim.simulate_transshipment(scenario, _sim_config(cfg), workers=cfg.sim.workers)
        scalars.update(
            beta_a_sim=res.beta.beta_a,
            beta_b_sim=res.beta.beta_b,
            beta_a_ci_half_width=res.store_a.half_width(0),
            beta_b_ci_half_width=res.store_b.half_width(0),
        )
        provenance["seed"] = cfg.sim.seed
    return Result(["store", "level", "a"], rows, scalars, provenance)


def _kernel_strategy(k):
    return kernels.EvalStrategy(
        mode=k.mode,
        distinctness_tolerance=k.distinctness_tolerance,
        inversion_accuracy=k.inversion_accuracy,
        inversion_terms=k.inversion_terms,
    )


def _real(value) -> float:
    return float(complex(value).real)  # transforms at real s are real


def cmd_kernel(cfg):
    """f, g and h for a chain read as levels ``n, n-1, ..., 1`` above a floor at 0."""
    k = cfg.kernel
    chain = [float(x) for x in k.chain]
    for i, lam in enumerate(chain):
        if not (lam > 0 and math.isfinite(lam)):
            raise ConfigError(f"/kernel/chain/{i}", f"rate must be positive and finite, got {lam!r}")
    n = len(chain)
    profile = RateProfile(0, (0.0,) + tuple(reversed(chain)))
    strategy = _kernel_strategy(k)
    rows = []
    for i, t in enumerate(k.t):
        if t < 0:
            raise ConfigError(f"/kernel/t/{i}", "times must be non-negative")
        rows.append(["f", "", t, kernels.hypo_density(chain, t, strategy)])
        for d in range(n + 1):
            rows.append(["g", d, t, kernels.decrease_probability(profile, n, d, t, strategy)])
        for level in range(n, -1, -1):
            rows.append(["h", level, t, kernels.expected_level_time(profile, n, level, t, strategy)])
    for i, s in enumerate(k.s):
        if not s > 0:
            raise ConfigError(f"/kernel/s/{i}", "transform arguments must be positive")
        rows.append(["f_transform", "", s, _real(kernels.hypo_density_transform(chain, s))])
        for d in range(n + 1):
            rows.append(["g_transform", d, s, _real(kernels.decrease_probability_transform(profile, n, d, s))])
        for level in range(n, -1, -1):
            rows.append(
                ["h_transform", level, s, _real(kernels.expected_level_time_transform(profile, n, level, s))]
            )
    return Result(
        ["quantity", "index", "point", "value"],
        rows,
        {"chain_length": n},
        {"solver": k.mode or "auto", "inversion_accuracy": k.inversion_accuracy},
    )


def cmd_residuals(cfg):
    b = cfg.residuals
    if b.target == "q1":
        spec = _system(cfg)
        if spec.policy.order_quantity != 1:
            raise ConfigError("/policy/q", f"q1 residuals need q = 1, got {spec.policy.order_quantity}")
        solution = q1.embedded_solution_q1(spec)
        vectors = q1.random_time_vectors(spec, b.samples, b.seed)
        table = q1.equilibrium_residuals_q1(spec, solution, vectors, b.quad_tol)
        rows = [[label, value] for label, value in sorted(table.items())]
        scalars = {"max_residual": max(table.values()), "N_0": spec.max_outstanding}
    else:
        z = r2q2.z_constants(cfg.r2q2.lam, cfg.r2q2.tau)
        grid = np.linspace(0.0, cfg.r2q2.tau, b.grid_points)
        rows = [
            ["integral_equation", r2q2.integral_equation_residual(z, grid, b.quad_tol)],
            ["ode", r2q2.ode_residual(z, grid)],
            ["arrival_balance", abs(r2q2.r2q2_weights(z.lam, z.tau, cfg.r2q2.quad_tol).arrival_balance)],
        ]
        scalars = {"max_residual": max(r[1] for r in rows)}
    return Result(["equation", "residual"], rows, scalars, {"solver": f"{b.target}_residual_check", "seed": b.seed})


HANDLERS = {
    "solve-q1": cmd_q1,
    "solve-r2q2": cmd_r2q2,
    "transship": cmd_transship,
    "simulate": cmd_simulate,
    "kernel": cmd_kernel,
    "residuals": cmd_residuals,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rqlevels", description="Equilibrium level distributions of (r,q) systems.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON scenario file")
        p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = args.config.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=stderr)
        return 2
    try:
        cfg = parse_config(text)
        if cfg.kind != COMMANDS[args.command]:
            raise ConfigError("/kind", f"{args.command} expects kind {COMMANDS[args.command]!r}, got {cfg.kind!r}")
        result = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error at {exc.pointer}: {exc.detail}", file=stderr)
        return 2
    except NotQ1 as exc:
        print(f"config error at /policy/q: {exc}", file=stderr)
        return 2
    except ModelError as exc:
        print(f"config error: {exc}", file=stderr)
        return 2
    except NumericalError as exc:
        residual = "unknown" if exc.residual is None else format(exc.residual, ".6g")
        print(f"numerical failure: {exc} (last residual {residual})", file=stderr)
        return 3
    body = result.csv() if args.format == "csv" else result.json(args.command, cfg)
    if args.out is None:
        stdout.write(body)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(body)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
