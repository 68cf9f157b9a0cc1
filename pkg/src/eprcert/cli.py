"""Command-line experiment runner.

Every subcommand reads an optional YAML/JSON config file, applies flag
overrides (flags win), validates the merged config and only then computes.
Output goes to ``--output`` or stdout; floats are printed with 17 significant
digits so that identical configs give byte-identical files.

Exit codes: 0 success, 2 invalid config, 3 budget refusal, 4 optimizer
non-convergence (the report is still written).
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import jsonschema
import yaml

from .protocol import OMEGA_OPT, acceptance_breakdown, exact_acceptance, run_transcripts
from .rigidity import BudgetError, MAX_RIGIDITY_N, fit_power_law, pointwise_constant, rigidity_pipeline
from .strategies import (
    approx_commuting_family,
    attack_strategy,
    dump_family,
    honest_strategy,
    lazy_strategy,
    load_family,
    perturbed_honest,
    trivial_strategy,
    validate_family,
)
from .tilted import (
    MAX_TILTED_N,
    TiltedBudgetError,
    TiltedParams,
    bell_value,
    game_win_probability,
    optimal_tilted_strategy,
    resolve_hat_variant,
    schmidt_angle,
    self_test_observables,
    tilted_conditions_residuals,
    tilted_honest,
    tilted_pipeline,
    variant_label,
)

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_NONCONVERGED = 0, 2, 3, 4
SEED_ENV = "ENTANGLE_SEED"

DEFAULTS = {
    "n": 2,
    "format": "json",
    "output": None,
    "count": 10000,
    "pipeline": False,
    "strategy": {"kind": "honest", "eta": 0.1, "perturb": "X", "dimension": 8,
                 "eps_target": 2.0, "restarts": 6, "family_file": None},
    "tilted": {"alpha": 1.0, "n": 2},
    "sweep": {"parameter": "eta", "grid": [0.05, 0.1, 0.2, 0.3], "mode": "exact"},
}

RUN_COLUMNS = ["strategy", "n", "exact_acceptance", "omega_opt", "delta", "branch1", "branch2", "branch3"]
SWEEP_COLUMNS = {
    "exact": ["index", "parameter", "value", "n", "strategy", "exact_acceptance", "delta",
              "branch1", "branch2", "branch3"],
    "rigidity": ["index", "parameter", "value", "n", "strategy", "delta", "epsilon", "swap_input_epsilon",
                 "distance", "max_swap_residual", "primed_commutator_max", "raw_stabilizer_max",
                 "stabilizer_bound"],
    "tilted": ["index", "parameter", "value", "alpha", "theta", "schmidt_angle", "bell_value",
               "optimum", "optimum_gap", "hat_max"],
}


class ConfigError(ValueError):
    pass


class NonConvergence(RuntimeError):
    pass


# -- formatting -------------------------------------------------------------------------


def fmt_float(x: float) -> str:
    return "%.17g" % x


def to_json(obj, indent: int | None = 2, _level: int = 0) -> str:
    """JSON text with every float written as ``%.17g``; non-finite floats become ``null``.

    ``indent=None`` gives a single line.
    """
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if hasattr(obj, "item") and not isinstance(obj, (dict, list, tuple)):  # numpy scalar
        return to_json(obj.item(), indent, _level)
    if isinstance(obj, dict):
        items = [f"{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return _wrap(items, "{", "}", indent, _level)
    if isinstance(obj, (list, tuple)):
        return _wrap([to_json(v, indent, _level + 1) for v in obj], "[", "]", indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _wrap(items: list[str], open_: str, close: str, indent: int | None, level: int) -> str:
    if not items:
        return open_ + close
    if indent is None:
        return open_ + ", ".join(items) + close
    pad = " " * (indent * (level + 1))
    return open_ + "\n" + ",\n".join(pad + i for i in items) + "\n" + " " * (indent * level) + close


def to_json_line(obj) -> str:
    return to_json(obj, indent=None)


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt_float(v) if isinstance(v, float) else v for v in (row.get(c, "") for c in columns)])
    return buf.getvalue()


def load_schema(name: str) -> dict:
    text = resources.files("eprcert").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(obj, name: str) -> None:
    jsonschema.validate(json.loads(to_json(obj)), load_schema(name))


# -- configuration ------------------------------------------------------------------------


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _flag_overrides(args: argparse.Namespace) -> dict:
    o: dict = {}
    for key in ("n", "seed", "jobs", "output", "format", "count", "transcripts"):
        v = getattr(args, key, None)
        if v is not None:
            o[key] = v
    if getattr(args, "pipeline", False):
        o["pipeline"] = True
    strat = {k: getattr(args, a) for k, a in (("kind", "strategy"), ("eta", "eta"), ("perturb", "perturb"),
                                               ("dimension", "dimension"), ("eps_target", "eps_target"),
                                               ("restarts", "restarts"), ("family_file", "family_file"))
             if getattr(args, a, None) is not None}
    if getattr(args, "family_seed", None) is not None:
        strat["seed"] = args.family_seed
    if strat:
        o["strategy"] = strat
    if getattr(args, "alpha", None) is not None:
        o["tilted"] = {"alpha": args.alpha}
    sweep = {k: getattr(args, a) for k, a in (("parameter", "parameter"), ("grid", "grid"), ("mode", "mode"))
             if getattr(args, a, None) is not None}
    if sweep:
        o["sweep"] = sweep
    return o


def _read_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a mapping")
    return data


def build_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then flags; validated against the config schema."""
    file_cfg = _read_config_file(args.config) if getattr(args, "config", None) else {}
    try:
        jsonschema.validate(file_cfg, load_schema("config"))
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    cfg = _merge(DEFAULTS, file_cfg)
    cfg = _merge(cfg, _flag_overrides(args))
    if "seed" not in cfg:
        env = os.environ.get(SEED_ENV)
        try:
            cfg["seed"] = int(env) if env is not None else 0
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    cfg.setdefault("jobs", os.cpu_count() or 1)
    cfg["strategy"].setdefault("seed", cfg["seed"])
    try:
        jsonschema.validate(cfg, load_schema("config"))
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    _check_semantics(args.command, cfg)
    return cfg


def _check_semantics(command: str, cfg: dict) -> None:
    n = cfg["n"]
    kind = cfg["strategy"]["kind"]
    if command in ("run", "sample", "rigidity", "attack") and n < 2:
        raise ConfigError(f"n must be at least 2 for protocol commands, got {n}")
    if kind == "attack" and cfg["strategy"]["dimension"] % 2:
        raise ConfigError("attack dimension must be even")
    if command == "sample" and cfg.get("format") == "csv":
        raise ConfigError("sample writes JSON; use --transcripts for the per-round JSON lines")
    if command == "rigidity" and n > MAX_RIGIDITY_N:
        raise BudgetError(f"rigidity analysis of the extended state is limited to n <= {MAX_RIGIDITY_N} "
                          f"(requested n = {n})")
    if command == "tilted":
        if cfg["pipeline"] and cfg["tilted"]["n"] > MAX_TILTED_N:
            raise TiltedBudgetError(f"tilted pipeline is limited to n <= {MAX_TILTED_N}")
    if command == "sweep":
        sw = cfg["sweep"]
        if sw["mode"] == "tilted" and sw["parameter"] != "alpha":
            raise ConfigError("tilted sweeps take the alpha parameter")
        if sw["parameter"] == "alpha" and sw["mode"] != "tilted":
            raise ConfigError("alpha sweeps need mode tilted")
        for v in sw["grid"]:
            if sw["parameter"] in ("n", "dimension") and v != int(v):
                raise ConfigError(f"{sw['parameter']} grid values must be integers")
            if sw["parameter"] == "n" and v < 2:
                raise ConfigError("n grid values must be at least 2")
            if sw["parameter"] == "n" and sw["mode"] == "rigidity" and v > MAX_RIGIDITY_N:
                raise BudgetError(f"rigidity sweep point n = {int(v)} exceeds n <= {MAX_RIGIDITY_N}")
            if sw["parameter"] == "alpha" and not 0 < v < 2:
                raise ConfigError("alpha grid values must lie in (0, 2)")
        if sw["mode"] == "rigidity" and cfg["n"] > MAX_RIGIDITY_N and sw["parameter"] != "n":
            raise BudgetError(f"rigidity sweeps are limited to n <= {MAX_RIGIDITY_N}")


# -- strategy construction -------------------------------------------------------------------


def strategy_label(spec: dict) -> str:
    kind = spec["kind"]
    if kind == "perturbed":
        return f"perturbed[{spec['perturb']}](eta={fmt_float(float(spec['eta']))})"
    if kind == "attack":
        return f"attack(dim={spec['dimension']})"
    return kind


def make_family(n: int, spec: dict):
    if spec.get("family_file"):
        with open(spec["family_file"]) as fh:
            family = load_family(fh.read())
        if family.n != n:
            raise ConfigError(f"family file holds {family.n} pairs, config asks for n = {n}")
        return family
    return approx_commuting_family(n, int(spec["dimension"]), float(spec["eps_target"]), int(spec["seed"]),
                                   restarts=int(spec["restarts"]))


def make_strategy(n: int, spec: dict):
    kind = spec["kind"]
    if kind == "honest":
        return honest_strategy(n)
    if kind == "perturbed":
        return perturbed_honest(n, float(spec["eta"]), kind=spec["perturb"])
    if kind == "lazy":
        return lazy_strategy(n)
    if kind == "trivial":
        return trivial_strategy(n)
    if kind == "attack":
        return attack_strategy(make_family(n, spec))
    raise ConfigError(f"unknown strategy kind {kind!r}")


# -- computations ------------------------------------------------------------------------------


def acceptance_record(n: int, spec: dict) -> dict:
    strategy = make_strategy(n, spec)
    br = acceptance_breakdown(strategy)
    return {"strategy": strategy_label(spec), "n": n, "exact_acceptance": br["total"], "omega_opt": OMEGA_OPT,
            "delta": OMEGA_OPT - br["total"], "branch1": br["branch1"], "branch2": br["branch2"],
            "branch3": br["branch3"]}


def rigidity_record(n: int, spec: dict) -> dict:
    report = rigidity_pipeline(make_strategy(n, spec))
    return {"strategy": strategy_label(spec), **report.to_dict()}


def tilted_record(alpha: float, n: int, pipeline: bool) -> dict:
    params = TiltedParams.from_alpha(alpha)
    strategy = optimal_tilted_strategy(alpha)
    value = bell_value(strategy, alpha)
    s = schmidt_angle(strategy)
    ops = self_test_observables(strategy)
    honest_psi, honest_ops = tilted_honest(n, s)
    conditions = tilted_conditions_residuals(honest_ops, honest_psi, s)
    selected, results = resolve_hat_variant(ops, strategy.psi, s)
    out = {
        "params": params.to_dict(),
        "measured_schmidt_angle": s,
        "bell_value": value,
        "optimum_gap": abs(value - params.optimum),
        "win_probability": game_win_probability(value, alpha),
        "conditions": conditions.to_dict(),
        "hat_variants": [{**r.to_dict(), "resolved": v in selected} for v, r in results.items()],
        "resolved": [variant_label(v) for v in selected],
        "pipeline": None,
    }
    if pipeline:
        out["pipeline"] = tilted_pipeline(honest_psi, honest_ops, s).to_dict()
    return out


def _sweep_point(task: tuple) -> dict:
    index, parameter, value, cfg = task
    n = int(value) if parameter == "n" else cfg["n"]
    spec = dict(cfg["strategy"])
    if parameter == "eta":
        spec["kind"] = "perturbed" if spec["kind"] == "honest" else spec["kind"]
        spec["eta"] = float(value)
    elif parameter == "dimension":
        spec["kind"] = "attack"
        spec["dimension"] = int(value)
    head = {"index": index, "parameter": parameter, "value": float(value)}
    mode = cfg["sweep"]["mode"]
    if mode == "exact":
        return {**head, **acceptance_record(n, spec)}
    if mode == "rigidity":
        rep = rigidity_record(n, spec)
        sound = rep["soundness"]
        raw_max = max((r["value"] for r in sound["raw_stabilizer_residuals"]), default=0.0)
        delta = rep["delta"]
        return {**head, "n": n, "strategy": rep["strategy"], "delta": delta, "epsilon": rep["epsilon"],
                "swap_input_epsilon": sound["swap_input_epsilon"], "distance": rep["distance"],
                "max_swap_residual": rep["swaps"]["max_residual"],
                "primed_commutator_max": rep["swaps"]["primed_commutator_max"],
                "raw_stabilizer_max": raw_max, "stabilizer_bound": 2 * math.sqrt(3 * n * max(delta, 0.0))}
    rec = tilted_record(float(value), cfg["tilted"]["n"], False)
    p = rec["params"]
    return {**head, "alpha": p["alpha"], "theta": p["theta"], "schmidt_angle": rec["measured_schmidt_angle"],
            "bell_value": rec["bell_value"], "optimum": p["optimum"], "optimum_gap": rec["optimum_gap"],
            "hat_max": min(v["max"] for v in rec["hat_variants"])}


def rigidity_fits(rows: list[dict]) -> dict:
    """Pointwise constants and free-exponent log-log fits over the rows with positive values."""
    pts = [r for r in rows if r["delta"] > 0 and r["epsilon"] > 0]
    out: dict = {"points": len(pts)}
    if not pts:
        return out
    n = [r["n"] for r in pts]
    delta = [r["delta"] for r in pts]
    eps = [r["epsilon"] for r in pts]
    out["epsilon_vs_n_sqrt_delta"] = pointwise_constant(eps, [k * math.sqrt(d) for k, d in zip(n, delta)])
    dist_pts = [r for r in pts if r["distance"] > 0]
    if dist_pts:
        out["distance_vs_n32_epsilon"] = pointwise_constant(
            [r["distance"] for r in dist_pts], [r["n"] ** 1.5 * r["epsilon"] for r in dist_pts])
        out["distance_vs_n52_sqrt_delta"] = pointwise_constant(
            [r["distance"] for r in dist_pts], [r["n"] ** 2.5 * math.sqrt(r["delta"]) for r in dist_pts])
    features = {"sqrt_delta": [math.sqrt(d) for d in delta]}
    if len(set(n)) > 1:
        features["n"] = n
    if len(pts) > len(features) + 1:
        out["epsilon_fit"] = fit_power_law(eps, features).to_dict()
        if len(dist_pts) > len(features) + 1:
            dfeat = {"epsilon": [r["epsilon"] for r in dist_pts]}
            if len(set(r["n"] for r in dist_pts)) > 1:
                dfeat["n"] = [r["n"] for r in dist_pts]
            out["distance_fit"] = fit_power_law([r["distance"] for r in dist_pts], dfeat).to_dict()
    return out


# -- commands -----------------------------------------------------------------------------------


def _emit(text: str, cfg: dict) -> None:
    if cfg.get("output"):
        with open(cfg["output"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(cfg: dict) -> int:
    rec = acceptance_record(cfg["n"], cfg["strategy"])
    validate(rec, "run")
    _emit(to_csv([rec], RUN_COLUMNS) if cfg["format"] == "csv" else to_json(rec) + "\n", cfg)
    return EXIT_OK


def cmd_sample(cfg: dict) -> int:
    n, count, seed = cfg["n"], cfg["count"], cfg["seed"]
    strategy = make_strategy(n, cfg["strategy"])
    transcripts, empirical = run_transcripts(strategy, seed, count)
    exact = exact_acceptance(strategy)
    if cfg.get("transcripts"):
        schema = load_schema("transcript")
        with open(cfg["transcripts"], "w") as fh:
            for t in transcripts:
                rec = t.to_record()
                jsonschema.validate(rec, schema)
                fh.write(to_json_line(rec) + "\n")
    rec = {"strategy": strategy_label(cfg["strategy"]), "n": n, "count": count, "seed": seed,
           "empirical_acceptance": empirical, "exact_acceptance": exact,
           "three_sigma": 3 * math.sqrt(exact * (1 - exact) / count)}
    validate(rec, "sample")
    _emit(to_json(rec) + "\n", cfg)
    return EXIT_OK


def cmd_rigidity(cfg: dict) -> int:
    rec = rigidity_record(cfg["n"], cfg["strategy"])
    validate(rec, "rigidity")
    if cfg["format"] == "csv":
        row = {k: rec[k] for k in ("strategy", "n", "delta", "epsilon", "distance")}
        _emit(to_csv([row], list(row)), cfg)
    else:
        _emit(to_json(rec) + "\n", cfg)
    return EXIT_OK


def cmd_attack(cfg: dict) -> int:
    n, spec = cfg["n"], dict(cfg["strategy"], kind="attack")
    family = make_family(n, spec)
    metrics = validate_family(family)
    strategy = attack_strategy(family)
    br = acceptance_breakdown(strategy)
    bound = OMEGA_OPT - 2 * metrics.commutator_metric
    rec = {"n": n, "dimension": family.dimension, "honest_dimension": 2 ** n, "converged": bool(family.converged),
           "eps_target": float(spec["eps_target"]), "optimizer_metric": family.metric,
           "commutator_metric": metrics.commutator_metric, "anticommutator_max": metrics.anticommutator_max,
           "exact_acceptance": br["total"], "omega_opt": OMEGA_OPT, "delta": OMEGA_OPT - br["total"],
           "branch1": br["branch1"], "branch2": br["branch2"], "branch3": br["branch3"],
           "bound": bound, "above_bound": bool(br["total"] >= bound)}
    validate(rec, "attack")
    if cfg["format"] == "csv":
        _emit(to_csv([rec], list(rec)), cfg)
    else:
        _emit(to_json(rec) + "\n", cfg)
    if cfg.get("save_family"):
        with open(cfg["save_family"], "w") as fh:
            fh.write(dump_family(family))
    if not family.converged:
        raise NonConvergence(f"optimizer stopped at metric {fmt_float(metrics.commutator_metric)} "
                             f"above target {fmt_float(float(spec['eps_target']))}")
    return EXIT_OK


def cmd_tilted(cfg: dict) -> int:
    rec = tilted_record(float(cfg["tilted"]["alpha"]), int(cfg["tilted"]["n"]), bool(cfg["pipeline"]))
    validate(rec, "tilted")
    if cfg["format"] == "csv":
        rows = [{"variant": v["variant"], "max": v["max"], "resolved": v["resolved"]} for v in rec["hat_variants"]]
        _emit(to_csv(rows, ["variant", "max", "resolved"]), cfg)
    else:
        _emit(to_json(rec) + "\n", cfg)
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    sw = cfg["sweep"]
    tasks = [(k, sw["parameter"], v, cfg) for k, v in enumerate(sw["grid"])]
    jobs = min(int(cfg["jobs"]), len(tasks))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))  # map preserves grid order
    else:
        rows = [_sweep_point(t) for t in tasks]
    columns = SWEEP_COLUMNS[sw["mode"]]
    if cfg["format"] == "csv":
        _emit(to_csv(rows, columns), cfg)
    else:
        rec = {"parameter": sw["parameter"], "mode": sw["mode"], "columns": columns, "rows": rows,
               "fits": rigidity_fits(rows) if sw["mode"] == "rigidity" else None}
        validate(rec, "sweep")
        _emit(to_json(rec) + "\n", cfg)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sample": cmd_sample, "rigidity": cmd_rigidity, "attack": cmd_attack,
            "tilted": cmd_tilted, "sweep": cmd_sweep}


# -- argument parsing ------------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON config file; flags override its values")
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--jobs", type=int, help="worker processes (default: number of processors)")


def _strategy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-n", type=int, help="number of tested qubits")
    p.add_argument("--strategy", choices=["honest", "perturbed", "lazy", "trivial", "attack"])
    p.add_argument("--eta", type=float, help="perturbation angle for the perturbed strategy")
    p.add_argument("--perturb", choices=["X", "Z"], help="which of Alice's observables is rotated")
    p.add_argument("--dimension", type=int, help="attack family dimension")
    p.add_argument("--eps-target", dest="eps_target", type=float, help="attack commutator-metric target")
    p.add_argument("--family-seed", dest="family_seed", type=int, help="attack optimizer seed")
    p.add_argument("--restarts", type=int, help="attack optimizer restarts")
    p.add_argument("--family-file", dest="family_file", help="load the attack family from JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eprcert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="exact acceptance probability of a strategy")
    _common(p)
    _strategy_flags(p)
    p = sub.add_parser("sample", help="Monte Carlo transcripts and empirical acceptance")
    _common(p)
    _strategy_flags(p)
    p.add_argument("--count", type=int, help="number of rounds")
    p.add_argument("--transcripts", help="write one JSON line per round to this file")
    p = sub.add_parser("rigidity", help="soundness residuals, swap construction and distance to n EPR pairs")
    _common(p)
    _strategy_flags(p)
    p = sub.add_parser("attack", help="low-dimensional attack from approximately commuting reflections")
    _common(p)
    _strategy_flags(p)
    p.add_argument("--save-family", dest="save_family", help="write the family to this JSON file")
    p = sub.add_parser("tilted", help="tilted Bell inequality optimum, conditions and hat-operator variants")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--pipeline", action="store_true", help="also run the controlled-swap pipeline")
    p = sub.add_parser("sweep", help="parameter sweep with plot-ready rows")
    _common(p)
    _strategy_flags(p)
    p.add_argument("--parameter", choices=["eta", "n", "alpha", "dimension"])
    p.add_argument("--grid", type=float, nargs="+", help="parameter values")
    p.add_argument("--mode", choices=["exact", "rigidity", "tilted"])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if getattr(args, "save_family", None):
            cfg["save_family"] = args.save_family
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"eprcert: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetError, TiltedBudgetError) as exc:
        print(f"eprcert: budget refusal: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NonConvergence as exc:
        print(f"eprcert: warning: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (OSError, ValueError) as exc:
        print(f"eprcert: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
