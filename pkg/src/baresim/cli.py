"""Config-driven command line runner.

A run is described by one JSON document (see README for the schema). Tasks:
  estimate -- run one estimator and write its result as JSON
  oracle   -- brute-force grid reference for the same objective/constraint
  check    -- self-verification suites (legendre, transforms, bounds,
              coincide, oracle)
All randomness flows from the single top-level seed; the worker count must
not change any output byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


from . import constraints as cons
from . import divergences as divs
from . import estimators as est
from . import generators as gens
from . import checks
from . import oracle as oracle_mod


class ConfigError(ValueError):
    pass


def _require_keys(obj: dict, allowed: set, context: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {context}: {sorted(unknown)}")


def _load_vector(value, base_dir: str) -> list[float]:
    if isinstance(value, dict):
        _require_keys(value, {"csv"}, "vector reference")
        path = os.path.join(base_dir, value["csv"])
        with open(path, encoding="utf-8") as fh:
            row = fh.readline()
        return [float(tok) for tok in row.strip().split(",") if tok]
    return [float(v) for v in value]


def _load_matrix(value, base_dir: str) -> list[list[float]]:
    if isinstance(value, dict):
        _require_keys(value, {"csv"}, "matrix reference")
        path = os.path.join(base_dir, value["csv"])
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append([float(tok) for tok in line.split(",")])
        return rows
    return [[float(v) for v in row] for row in value]


def _parse_atom(obj: dict, base_dir: str) -> cons.Atom:
    kind = obj.get("type")
    if kind == "box":
        _require_keys(obj, {"type", "lo", "hi"}, "box atom")
        return cons.box(_load_vector(obj["lo"], base_dir), _load_vector(obj["hi"], base_dir))
    if kind == "halfspace":
        _require_keys(obj, {"type", "a", "b", "sense"}, "halfspace atom")
        return cons.halfspace(_load_vector(obj["a"], base_dir), obj["b"], obj.get("sense", ">="))
    if kind == "l2_ball":
        _require_keys(obj, {"type", "center", "radius"}, "l2_ball atom")
        return cons.l2_ball(_load_vector(obj["center"], base_dir), obj["radius"])
    if kind == "regression_ball":
        _require_keys(obj, {"type", "y", "X", "eps"}, "regression_ball atom")
        return cons.regression_ball(
            _load_vector(obj["y"], base_dir), _load_matrix(obj["X"], base_dir), obj["eps"]
        )
    raise ConfigError(f"unknown constraint atom type {kind!r}")


def _parse_constraint(obj: dict, base_dir: str) -> cons.ConstraintSpec:
    _require_keys(obj, {"atoms", "simplex_scale", "interior_point", "dim"}, "constraint")
    atoms = [_parse_atom(a, base_dir) for a in obj.get("atoms", [])]
    return cons.make(
        atoms,
        simplex_scale=obj.get("simplex_scale"),
        interior_point=obj.get("interior_point"),
        dim=obj.get("dim"),
    )


def _parse_objective(obj: dict, base_dir: str) -> divs.Objective:
    allowed = {"kind", "generator", "P", "Qss", "gamma", "c", "r", "M",
               "Amat", "beta", "h", "M1", "M2", "M3"}
    _require_keys(obj, allowed, "objective")
    kw = {}
    for key in ("P", "Qss", "M", "M1", "M2", "M3"):
        if key in obj:
            kw[key] = _load_vector(obj[key], base_dir)
    if "Amat" in obj:
        kw["Amat"] = _load_matrix(obj["Amat"], base_dir)
    if "generator" in obj:
        kw["generator"] = gens.from_config(obj["generator"])
    for key in ("gamma", "c", "r", "beta"):
        if key in obj:
            kw[key] = float(obj[key])
    if "h" in obj:
        kw["h"] = obj["h"] if isinstance(obj["h"], str) else tuple(obj["h"])
    return divs.make_objective(obj["kind"], **kw)


def _parse_sample(obj: dict, base_dir: str):
    _require_keys(obj, {"path", "categories"}, "sample")
    path = os.path.join(base_dir, obj["path"])
    if not os.path.exists(path):
        raise ConfigError(f"sample file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        labels = [line.strip() for line in fh if line.strip()]
    return tuple(labels), tuple(obj["categories"]) if "categories" in obj else None


_EST_KEYS = {
    "mode", "direction", "method", "n", "L", "m", "base", "objective",
    "constraint", "sample", "contract", "c1", "lattice_exact",
}
_BASE_KEYS = {"generator", "P", "A", "Qss", "Qstar", "C"}


def build_request(cfg: dict, base_dir: str, seed: int, workers: int) -> est.EstimateRequest:
    _require_keys(cfg, _EST_KEYS, "estimate section")
    base_obj = cfg.get("base", {})
    _require_keys(base_obj, _BASE_KEYS, "base section")
    if "generator" not in base_obj:
        raise ConfigError("base section needs a generator")
    base = est.BaseSpec(
        generator=gens.from_config(base_obj["generator"]),
        P=tuple(_load_vector(base_obj["P"], base_dir)) if "P" in base_obj else (),
        A=float(base_obj.get("A", 1.0)),
        Qss=tuple(_load_vector(base_obj["Qss"], base_dir)) if "Qss" in base_obj else None,
        Qstar=tuple(_load_vector(base_obj["Qstar"], base_dir)) if "Qstar" in base_obj else None,
        C=base_obj.get("C"),
    )
    sample, categories = (None, None)
    if "sample" in cfg:
        sample, categories = _parse_sample(cfg["sample"], base_dir)
    objective = _parse_objective(cfg["objective"], base_dir) if "objective" in cfg else None
    return est.EstimateRequest(
        direction=cfg.get("direction", "min"),
        method=cfg["method"],
        mode=cfg["mode"],
        base=base,
        constraint=_parse_constraint(cfg["constraint"], base_dir),
        n=int(cfg["n"]),
        L=int(cfg["L"]),
        seed=seed,
        objective=objective,
        m=int(cfg["m"]) if "m" in cfg else None,
        sample=sample,
        categories=categories,
        lattice_exact=bool(cfg.get("lattice_exact", False)),
        contract=cfg.get("contract"),
        c1=cfg.get("c1"),
        workers=workers,
    )


def run_estimate(cfg: dict, base_dir: str, seed: int, workers: int) -> dict:
    req = build_request(cfg, base_dir, seed, workers)
    result = est.estimate(req)
    return result.to_jsonable()


def run_oracle(cfg: dict, base_dir: str) -> dict:
    allowed = {"objective", "constraint", "resolution", "direction"}
    _require_keys(cfg, allowed, "oracle section")
    objective = _parse_objective(cfg["objective"], base_dir)
    constraint = _parse_constraint(cfg["constraint"], base_dir)
    res = oracle_mod.grid_optimize(
        objective,
        constraint,
        resolution=float(cfg.get("resolution", 1e-3)),
        direction=cfg.get("direction", "min"),
    )
    return {
        "value": res.value,
        "arg": list(res.arg),
        "method": res.method,
        "resolution": res.resolution,
    }


def run_check(suites, seed: int = 20240207, perturb_transforms: float = 0.0) -> dict:
    """Run the named self-verification suites and report per-suite status."""
    available = {
        "legendre": checks.check_legendre,
        "transforms": lambda s: checks.check_transforms(s, perturb=perturb_transforms),
        "bounds": checks.check_bounds,
        "coincide": checks.check_coincide,
        "oracle": checks.check_oracle,
    }
    unknown = [s for s in suites if s not in available]
    if unknown:
        raise ConfigError(f"unknown check suites: {unknown}")
    report = {}
    for name in suites:
        report[name] = available[name](seed)
    report["passed"] = all(report[name]["passed"] for name in suites)
    return report


_TOP_KEYS = {"task", "seed", "workers", "estimate", "oracle", "check"}


def run_config(path: str, seed_override=None, workers_override=None) -> tuple[int, dict]:
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    _require_keys(cfg, _TOP_KEYS, "config")
    task = cfg.get("task", "estimate")
    seed = int(cfg.get("seed", 0)) if seed_override is None else int(seed_override)
    workers = int(cfg.get("workers", _default_workers()))
    if workers_override is not None:
        workers = int(workers_override)
    base_dir = os.path.dirname(os.path.abspath(path))
    if task == "estimate":
        if "estimate" not in cfg:
            raise ConfigError("task 'estimate' needs an 'estimate' section")
        return 0, run_estimate(cfg["estimate"], base_dir, seed, workers)
    if task == "oracle":
        if "oracle" not in cfg:
            raise ConfigError("task 'oracle' needs an 'oracle' section")
        return 0, run_oracle(cfg["oracle"], base_dir)
    if task == "check":
        section = cfg.get("check", {})
        _require_keys(section, {"suites"}, "check section")
        suites = section.get("suites", ["legendre", "transforms", "bounds", "coincide", "oracle"])
        report = run_check(suites, seed)
        return (0 if report["passed"] else 1), report
    raise ConfigError(f"unknown task {task!r}")


def _default_workers() -> int:
    env = os.environ.get("BARESIM_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="baresim",
        description="Simulation-based constrained optimization of divergences",
    )
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", default=None, help="output path (default: stdout)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker count (must not affect the output)")
    parser.add_argument("--seed-override", type=int, default=None,
                        help="replace the config seed")
    args = parser.parse_args(argv)
    try:
        code, doc = run_config(args.config, args.seed_override, args.workers)
    except (ConfigError, est.ConfigurationError, gens.ParameterError,
            cons.ConstraintError, divs.PreconditionError,
            oracle_mod.OracleError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = dump_json(doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
