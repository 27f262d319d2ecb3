"""Monte-Carlo estimators of constrained divergence optima and optimizers.

Five methods (narrow_sense, method1_naive, method2_naive, speedup,
importance_sampling) across three modes (full_space, simplex, risk). All
weighted methods reduce per-replication terms with a max-shifted
log-mean-exp; replications run in fixed-size chunks reduced in index order,
so results are independent of the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import constraints as cons
from . import distributions as dists
from . import divergences as divs
from . import engine
from . import generators as gens
from . import transforms
from .divergences import Objective

MODES = ("full_space", "simplex", "risk")
METHODS = (
    "narrow_sense",
    "method1_naive",
    "method2_naive",
    "speedup",
    "importance_sampling",
)
CONTRACTS = ("compact", "lower_bound", "upper_bound")


class ConfigurationError(ValueError):
    pass


def log_mean_exp(terms) -> float:
    """log of the mean of exp(terms), max-shifted; exact on singletons."""
    arr = np.asarray(terms, dtype=float)
    if arr.size == 0:
        return -math.inf
    if arr.size == 1:
        return float(arr[0])
    hi = float(np.max(arr))
    if not math.isfinite(hi):
        return hi
    return hi + math.log(float(np.mean(np.exp(arr - hi))))


@dataclass(frozen=True)
class BaseSpec:
    """Base-divergence data: generator, reference vector and companions."""

    generator: gens.GeneratorSpec
    P: tuple[float, ...]
    A: float = 1.0
    Qss: tuple[float, ...] | None = None
    Qstar: tuple[float, ...] | None = None
    C: float | None = None

    def p_vec(self) -> np.ndarray:
        return np.asarray(self.P, dtype=float)


@dataclass(frozen=True)
class EstimateRequest:
    direction: str
    method: str
    mode: str
    base: BaseSpec
    constraint: cons.ConstraintSpec
    n: int
    L: int
    seed: int
    objective: Objective | None = None
    m: int | None = None
    sample: tuple | None = None
    categories: tuple | None = None
    lattice_exact: bool = False
    contract: str | None = None
    c1: float | None = None
    workers: int = 1
    keep_terms: bool = False

    def __post_init__(self):
        if self.direction not in ("min", "max"):
            raise ConfigurationError("direction must be 'min' or 'max'")
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.contract is not None and self.contract not in CONTRACTS:
            raise ConfigurationError(f"unknown contract {self.contract!r}")
        if self.L < 1 or self.n < 1:
            raise ConfigurationError("n and L must be >= 1")


@dataclass
class EstimateResult:
    value: float
    arg_candidate: np.ndarray | None
    hit_count: int
    replications: int
    n: int
    method: str
    mode: str
    seed: int
    diagnostics: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        def num(x):
            if x is None or isinstance(x, str):
                return x
            x = float(x)
            if math.isnan(x):
                return "nan"
            if math.isinf(x):
                return "inf" if x > 0 else "-inf"
            return x

        diag = {}
        for key, val in sorted(self.diagnostics.items()):
            if isinstance(val, np.ndarray):
                diag[key] = [num(v) for v in val]
            elif isinstance(val, (list, tuple)):
                diag[key] = [num(v) for v in val]
            else:
                diag[key] = num(val)
        return {
            "value": num(self.value),
            "arg_candidate": None if self.arg_candidate is None
            else [num(v) for v in self.arg_candidate],
            "hit_count": int(self.hit_count),
            "replications": int(self.replications),
            "n": int(self.n),
            "method": self.method,
            "mode": self.mode,
            "seed": int(self.seed),
            "diagnostics": diag,
        }


# ---------------------------------------------------------------------------
# chunked Monte-Carlo core


@dataclass
class _ChunkStats:
    count: int
    hits: int
    shift: float  # per-chunk max of the weighted terms
    sumexp: float  # sum of exp(term - shift) over hits
    best_metric: float
    best_row: np.ndarray | None
    terms: np.ndarray | None


def _run_chunk(plan, chunk_index: int, count: int) -> _ChunkStats:
    sums = engine.block_sum_matrix(
        plan["partition"], plan["zeta"], plan["taus"], plan["seed"], chunk_index, count
    )
    vals, finite = engine.candidates_from_sums(sums, plan["level"], plan["normalized"])
    cand = plan["scale"] * vals
    mask = finite.copy()
    mask[finite] = cons.contains_batch(plan["constraint"], cand[finite], plan["tol"])
    hits = int(mask.sum())
    terms_full = None
    if plan["keep_terms"]:
        terms_full = np.full(count, -math.inf)
    shift, sumexp = -math.inf, 0.0
    best_metric, best_row = math.inf, None
    if hits:
        rows = cand[mask]
        if plan["weight_fn"] is not None:
            x = plan["weight_fn"](rows, sums[mask])
            if terms_full is not None:
                terms_full[mask] = x
            shift = float(np.max(x))
            if math.isfinite(shift):
                sumexp = float(np.sum(np.exp(x - shift)))
            elif shift == math.inf:
                sumexp = math.inf
            else:
                shift, sumexp = -math.inf, 0.0
        metric = plan["arg_metric_fn"](rows)
        metric = np.where(np.isnan(metric), math.inf, metric)
        signed = metric if plan["arg_sign"] > 0 else -metric
        idx = int(np.argmin(signed))
        best_metric = float(signed[idx])
        best_row = rows[idx].copy()
    return _ChunkStats(count, hits, shift, sumexp, best_metric, best_row, terms_full)


def _mc_run(plan) -> dict:
    L = plan["L"]
    chunk = engine.CHUNK
    n_chunks = (L + chunk - 1) // chunk
    counts = [min(chunk, L - c * chunk) for c in range(n_chunks)]
    workers = max(1, plan["workers"])
    if workers == 1 or n_chunks == 1:
        stats = [_run_chunk(plan, c, counts[c]) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, plan, c, counts[c]) for c in range(n_chunks)]
            stats = [f.result() for f in futures]
    hits = 0
    shift, sumexp = -math.inf, 0.0
    best_metric, best_row = math.inf, None
    terms = [] if plan["keep_terms"] else None
    for st in stats:  # fixed chunk order: worker-count invariant
        hits += st.hits
        if st.shift > shift:
            sumexp = sumexp * math.exp(shift - st.shift) + st.sumexp
            shift = st.shift
        elif math.isfinite(st.shift):
            sumexp += st.sumexp * math.exp(st.shift - shift)
        if st.best_row is not None and st.best_metric < best_metric:
            best_metric, best_row = st.best_metric, st.best_row
        if terms is not None:
            terms.append(st.terms)
    lse = shift + math.log(sumexp) if (math.isfinite(shift) and sumexp > 0) else (
        math.inf if shift == math.inf else -math.inf
    )
    return {
        "hits": hits,
        "log_sum_exp": lse,
        "best_row": best_row,
        "terms": None if terms is None else np.concatenate(terms),
    }


# ---------------------------------------------------------------------------
# request planning


def _representable_zeta(gen: gens.GeneratorSpec, total_mass: float) -> dists.ZetaSpec:
    zeta = dists.zeta_for_generator(gen, total_mass)
    if zeta.family in dists.EVAL_ONLY_FAMILIES:
        raise dists.UnsupportedSamplingError(
            f"base generator {gen.family} (zeta family {zeta.family}) is "
            "evaluation-only; simulation requires a samplable law"
        )
    return zeta


def _power_params(gen: gens.GeneratorSpec, what: str) -> tuple[float, float]:
    if gen.family != "power":
        raise ConfigurationError(
            f"{what} requires a power-family base generator (got {gen.family})"
        )
    return gen.param("gamma"), gen.c


def _tilts_for(gen, P, target) -> np.ndarray:
    P = np.asarray(P, float)
    target = np.asarray(target, float)
    mp = float(P.sum())
    return np.array([dists.tilt_param(gen, mp, t) for t in target / P])


def _interior_warning(constraint, qstar) -> str | None:
    strict = cons.contains_batch(constraint, np.asarray(qstar, float)[None, :], -1e-9)[0]
    if not strict:
        return "recentering point is not strictly inside the constraint set"
    return None


def _recentering_point(req: EstimateRequest, method: str) -> np.ndarray:
    """Supplied Qstar, else an interior hint derived from the constraint."""
    if req.base.Qstar is not None:
        return np.asarray(req.base.Qstar, float)
    hint = cons.interior_hint(req.constraint)
    if hint is None:
        raise ConfigurationError(
            f"{method} needs an interior recentering point: supply base.Qstar "
            "or a constraint with a derivable center"
        )
    return hint


def _plan_common(req: EstimateRequest, partition, level, zeta, taus, scale,
                 normalized) -> dict:
    return {
        "partition": partition,
        "zeta": zeta,
        "taus": taus,
        "scale": scale,
        "normalized": normalized,
        "level": level,
        "constraint": req.constraint,
        "tol": cons.DEFAULT_TOL,
        "seed": req.seed,
        "L": req.L,
        "workers": req.workers,
        "keep_terms": req.keep_terms,
        "arg_sign": -1.0 if req.direction == "max" else 1.0,
    }


def _full_space_plan(req: EstimateRequest) -> tuple[dict, dict]:
    base = req.base
    gen = base.generator
    P = base.p_vec()
    mp = float(P.sum())
    partition = engine.make_partition(P, req.n)
    zeta = _representable_zeta(gen, mp)
    diag: dict = {"zeta_family": zeta.family}
    dir_sign = 1.0 if req.direction == "max" else -1.0
    method = req.method

    recenter = None
    if method == "method2_naive":
        if base.Qss is None:
            raise ConfigurationError("method2_naive needs base.Qss")
        recenter = np.asarray(base.Qss, float)
    elif method in ("speedup", "importance_sampling"):
        recenter = _recentering_point(req, method)
        warn = _interior_warning(req.constraint, recenter)
        if warn:
            diag["warning"] = warn

    if method == "narrow_sense":
        if base.Qss is not None:
            recenter = np.asarray(base.Qss, float)
            taus = _tilts_for(gen, P, recenter)
        else:
            taus = np.zeros(partition.k)
        plan = _plan_common(req, partition, req.n, zeta, taus, mp, False)
        plan["weight_fn"] = None
        if recenter is None:
            metric = lambda rows: divs.casm_batch(gen, rows, P)
        else:
            qss = recenter
            metric = lambda rows: divs.sbd_batch(gen, P, rows, qss)
        plan["arg_metric_fn"] = metric
        diag["target"] = "base_divergence"
        return plan, diag

    if req.objective is None:
        raise ConfigurationError(f"{method} needs an objective")
    phi = req.objective
    n_level = req.n

    if method == "method1_naive":
        taus = np.zeros(partition.k)

        def weight(rows, sums):
            return n_level * (divs.casm_batch(gen, rows, P)
                              + dir_sign * phi.batch(rows))

    elif method in ("method2_naive", "speedup"):
        taus = _tilts_for(gen, P, recenter)
        qss = recenter

        def weight(rows, sums):
            return n_level * (divs.sbd_batch(gen, P, rows, qss)
                              + dir_sign * phi.batch(rows))

    else:  # importance_sampling
        taus = _tilts_for(gen, P, recenter)
        log_norms = np.array(
            [size * dists.cumulant(zeta, tau)
             for size, tau in zip(partition.sizes, taus)]
        )

        def weight(rows, sums):
            is_log = np.sum(log_norms - taus * sums, axis=1)
            return n_level * (divs.casm_batch(gen, rows, P)
                              + dir_sign * phi.batch(rows)) + is_log

    plan = _plan_common(req, partition, n_level, zeta, taus, mp, False)
    plan["weight_fn"] = weight
    plan["arg_metric_fn"] = phi.batch
    return plan, diag


def _simplex_plan(req: EstimateRequest, P: np.ndarray, level: int) -> tuple[dict, dict]:
    base = req.base
    gen = base.generator
    A = float(base.A)
    if A <= 0:
        raise ConfigurationError("simplex mode needs a component-sum A > 0")
    partition = engine.make_partition(P, level)
    gamma, c = _power_params(gen, f"{req.method} in {req.mode} mode")
    if 1 < gamma < 2:
        raise ConfigurationError(
            "simplex and risk modes require a power base with gamma outside (1,2); "
            "dominate the objective by an admissible base instead"
        )
    mp = float(P.sum())
    zeta = _representable_zeta(gen, mp)
    diag: dict = {"zeta_family": zeta.family, "component_sum": A}
    dir_sign = 1.0 if req.direction == "max" else -1.0
    method = req.method
    c_eff, a_eff = c * mp, A / mp

    recenter = None
    if method == "method2_naive":
        if base.Qss is None:
            raise ConfigurationError("method2_naive needs base.Qss")
        recenter = np.asarray(base.Qss, float)
    elif method == "speedup":
        recenter = _recentering_point(req, method)
        warn = _interior_warning(req.constraint, recenter)
        if warn:
            diag["warning"] = warn
    elif method == "importance_sampling":
        raise ConfigurationError(
            "importance_sampling is a full-space method; use speedup in "
            "simplex and risk modes"
        )

    if method == "narrow_sense":
        qss_in = base.Qss
        if qss_in is None and base.C is not None:
            qss_in = tuple(float(base.C) * P)  # reference proportional to the scaling
        if qss_in is None:
            taus = np.zeros(partition.k)
            tspec = transforms.TransformSpec("F", gamma=gamma, c=c_eff, A=a_eff)
            target = lambda rows: divs.casm_batch(gen, rows, P)
        else:
            qss = np.asarray(qss_in, float)
            if np.any(qss <= 0):
                raise ConfigurationError("narrow-sense Bregman target needs Qss > 0")
            taus = _tilts_for(gen, P, qss)
            if gamma == 1:
                tspec = transforms.TransformSpec(
                    "Fbreve1", c=c, A=A, MQss=float(qss.sum())
                )
            else:
                ratios = qss / P
                C = float(ratios[0])
                if np.max(np.abs(ratios - C)) > 1e-9 * max(1.0, abs(C)):
                    raise ConfigurationError(
                        "narrow-sense Bregman targets with gamma != 1 need "
                        "Qss proportional to P (Qss = C*P)"
                    )
                tspec = transforms.TransformSpec(
                    "Fbreve", gamma=gamma, c=c, A=A, MP=mp, C=C
                )
            target = lambda rows: divs.sbd_batch(gen, P, rows, qss)
        plan = _plan_common(req, partition, level, zeta, taus, A, True)
        plan["weight_fn"] = None
        plan["arg_metric_fn"] = target
        diag["transform"] = tspec.kind
        return plan, {**diag, "_tspec": tspec}

    if req.objective is None:
        raise ConfigurationError(f"{method} needs an objective")
    phi = req.objective

    if method == "method1_naive":
        taus = np.zeros(partition.k)
        tspec = transforms.TransformSpec("F", gamma=gamma, c=c_eff, A=a_eff)
        gen_eff, p_prob = gen.scaled(mp), P / mp

        def weight(rows, sums):
            # base functional at the probability-normalized scale
            d = divs.casm_batch(gen_eff, rows / mp, p_prob)
            return level * (_f_apply_batch(tspec, d) + dir_sign * phi.batch(rows))

    else:  # method2_naive / speedup: scale-minimized Bregman base
        qss = recenter
        if np.any(qss <= 0) and gamma != 2:
            raise ConfigurationError("method 2 recentering needs a positive reference")
        taus = _tilts_for(gen, P, qss)

        def weight(rows, sums):
            return level * (divs.innmin_sbd_batch(gamma, c, P, rows, qss)
                            + dir_sign * phi.batch(rows))

    plan = _plan_common(req, partition, level, zeta, taus, A, True)
    plan["weight_fn"] = weight
    plan["arg_metric_fn"] = phi.batch
    return plan, diag


def _f_apply_batch(tspec: transforms.TransformSpec, x: np.ndarray) -> np.ndarray:
    """Vectorized forward transform (F kind only) for the weighted paths."""
    g, c, A = tspec.gamma, tspec.c, tspec.A
    if g == 0:
        return c * (1.0 - A + math.log(A)) + x
    if g == 1:
        return c * (1.0 - A * np.exp(1.0 / A - 1.0 - x / (A * c)))
    base = 1.0 + g * (A - 1.0) + g * (g - 1.0) * x / c
    apow = A * A if g == 2 else A ** (g / (g - 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (c / g) * (1.0 - apow * base ** (-1.0 / (g - 1.0)))
    bad = base <= 0 if g >= 2 else base < 0
    return np.where(bad, np.inf, val)


def estimate(req: EstimateRequest) -> EstimateResult:
    """Run the estimator described by the request."""
    if req.mode == "full_space":
        plan, diag = _full_space_plan(req)
        level = req.n
    elif req.mode == "simplex":
        plan, diag = _simplex_plan(req, req.base.p_vec(), req.n)
        level = req.n
    else:
        plan, diag, level = _risk_plan(req)
    tspec = diag.pop("_tspec", None)

    out = _mc_run(plan)
    hits = out["hits"]
    diag["hit_rate"] = hits / req.L
    value: float
    if plan["weight_fn"] is None:  # narrow sense
        if hits == 0:
            value = math.inf
            diag["zero_hits"] = "no candidate hit the constraint set"
            diag["suggested_n"] = max(1, level // 2)
        else:
            raw = -math.log(hits / req.L) / level
            diag["raw_rate"] = raw
            if req.mode == "full_space" and tspec is None:
                value = raw
            else:
                try:
                    value = transforms.F_invert(tspec, raw)
                except transforms.TransformDomainError as exc:
                    value = math.inf
                    diag["transform_domain"] = str(exc)
    else:
        lse = out["log_sum_exp"]
        diag["log_mean_exp"] = lse - math.log(req.L) if math.isfinite(lse) else lse
        dir_sign = 1.0 if req.direction == "max" else -1.0
        if hits == 0:
            value = math.inf if req.direction == "min" else -math.inf
            diag["zero_hits"] = "no candidate hit the constraint set"
            diag["suggested_n"] = max(1, level // 2)
        else:
            value = dir_sign * (lse - math.log(req.L)) / level
    if req.keep_terms and out["terms"] is not None:
        diag["terms"] = out["terms"]
    return EstimateResult(
        value=value,
        arg_candidate=out["best_row"],
        hit_count=hits,
        replications=req.L,
        n=level,
        method=req.method,
        mode=req.mode,
        seed=req.seed,
        diagnostics=diag,
    )


def _risk_plan(req: EstimateRequest):
    if req.sample is None:
        raise ConfigurationError("risk mode needs a sample of category labels")
    if req.m is None:
        raise ConfigurationError("risk mode needs the inner approximation level m")
    partition = engine.risk_partition(req.sample, req.categories)
    p_emp = engine.empirical_weights(partition)
    base = req.base
    if len(base.P) == 0:
        p_aux = p_emp
    else:
        if len(base.P) != partition.k:
            raise ConfigurationError(
                "explicit auxiliary vector length must match the category count"
            )
        if req.lattice_exact:
            raise ConfigurationError(
                "lattice_exact blocks are defined by the empirical histogram; "
                "drop the explicit auxiliary vector"
            )
        p_aux = base.p_vec()
        p_aux = p_aux / p_aux.sum()
    level = req.m * partition.n if req.lattice_exact else req.m
    inner = EstimateRequest(
        direction=req.direction,
        method=req.method,
        mode="simplex",
        base=BaseSpec(
            generator=base.generator,
            P=tuple(p_aux),
            A=1.0,
            Qss=base.Qss,
            Qstar=base.Qstar,
            C=base.C,
        ),
        constraint=req.constraint,
        n=level,
        L=req.L,
        seed=req.seed,
        objective=req.objective,
        contract=req.contract,
        c1=req.c1,
        workers=req.workers,
        keep_terms=req.keep_terms,
    )
    plan, diag = _simplex_plan(inner, np.asarray(p_aux), level)
    if req.lattice_exact:
        plan["partition"] = engine.blow_up(partition, req.m)
    diag["sample_size"] = partition.n
    diag["p_emp"] = list(p_emp)
    diag["level_m"] = req.m
    return plan, diag, level


# ---------------------------------------------------------------------------
# named entry points mirroring the operation table


def estimate_min_method1(req: EstimateRequest) -> EstimateResult:
    return estimate(_retag(req, direction="min", method="method1_naive"))


def estimate_max_method1(req: EstimateRequest) -> EstimateResult:
    return estimate(_retag(req, direction="max", method="method1_naive"))


def estimate_method2(req: EstimateRequest) -> EstimateResult:
    return estimate(_retag(req, method="method2_naive"))


def estimate_speedup(req: EstimateRequest) -> EstimateResult:
    return estimate(_retag(req, method="speedup"))


def estimate_importance_sampling(req: EstimateRequest) -> EstimateResult:
    return estimate(_retag(req, method="importance_sampling"))


def estimate_simplex_narrow(req: EstimateRequest) -> EstimateResult:
    return estimate(_retag(req, mode="simplex", method="narrow_sense"))


def estimate_simplex_general(req: EstimateRequest) -> EstimateResult:
    return estimate(_retag(req, mode="simplex"))


def estimate_risk(req: EstimateRequest) -> EstimateResult:
    return estimate(_retag(req, mode="risk"))


def _retag(req: EstimateRequest, **overrides) -> EstimateRequest:
    fields = {name: getattr(req, name) for name in req.__dataclass_fields__}
    fields.update(overrides)
    return EstimateRequest(**fields)
