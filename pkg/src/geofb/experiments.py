"""Built-in experiments and config-driven runs.

Every run produces a :class:`RunResult` holding the trace, the predicted
envelope and a JSON report; :func:`write_artifacts` puts them on disk as
``trace.csv``, ``report.json``, ``plot.svg`` and, when a Lojasiewicz
constant is known, ``prediction.json`` with the descent parameters
``(a, b, c, p)`` accepted by ``geofb certify``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import domains as dom
from .export import loglog_svg, write_json, write_svg, write_trace_csv
from .funcs import (
    AffineArgmin,
    CompositeProblem,
    ConfigurationError,
    PointArgmin,
    make_counterexample_neg,
    make_l1,
    make_lasso,
    make_norm_pow,
    make_quadratic,
    problem_from_dict,
)
from .geometry import (
    GeometryCertificate,
    certificate_from_dict,
    estimate_lojasiewicz,
    exact_cert_counterexample,
    exact_cert_l1,
    exact_cert_least_squares,
    exact_cert_norm_pow,
    exact_cert_strongly_convex,
    to_lojasiewicz,
)
from .invprob import (
    SourceSpec,
    landweber_rate_experiment,
    loja_constant,
    sparse_recovery_experiment,
)
from .linops import DenseOperator, min_eig
from .rates import (
    RatePrediction,
    certify_general_descent,
    certify_trace,
    fit_loglog,
    kappa,
    power_tail_lower_constant,
    predict,
    predict_from_certificate,
    regime_table,
    superlinear_bounds_check,
    superlinear_order,
    tail_qfactor,
)
from .solver import (
    SolveConfig,
    Trace,
    check_fb_estimates,
    check_fejer,
    check_monotone,
    check_worst_case,
    detect_support_identification,
    run_fb,
    worst_case_constant,
)

__all__ = [
    "RunResult",
    "BUILTINS",
    "list_builtins",
    "run_builtin",
    "run_config",
    "load_config",
    "validate_config",
    "write_artifacts",
    "descent_parameters",
    "render_table",
    "classical_factors",
]

FEJER_TOL = 1e-12


@dataclass
class RunResult:
    name: str
    params: dict
    seed: int
    trace: Trace | None
    envelope: np.ndarray | None
    report: dict
    descent: dict | None = None
    extra_files: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.report["pass"])


def _chk(rep) -> dict:
    """Normalize a CheckReport / CertReport / bool into a JSON check entry."""
    if isinstance(rep, bool) or isinstance(rep, np.bool_):
        return {"pass": bool(rep), "first_violation": None}
    return {"pass": bool(rep.passed), "first_violation": rep.first_violation,
            "detail": getattr(rep, "detail", "")}


def descent_parameters(lam: float, L: float, c: float, p: float) -> dict:
    """``(a, b, c, p)`` of the general descent scheme realized by FB with step ``lam``."""
    return {"a": (2.0 - lam * L) / (2.0 * lam), "b": 1.0 / lam, "c": float(c), "p": float(p)}


def _fejer(trace: Trace, problem: CompositeProblem):
    """Fejer monotonicity against the reference minimizer.

    Uses recorded iterates when present, otherwise the distance series,
    which for a single minimizer is the same quantity.
    """
    if not problem.has_argmin:
        return None
    if trace.iterates is not None:
        return check_fejer(trace, problem.argmin.xbar, tol=FEJER_TOL)
    if isinstance(problem.argmin, PointArgmin) and trace.dist is not None:
        d = trace.dist
        bad = np.flatnonzero(d[1:] > d[:-1] + FEJER_TOL)
        if bad.size:
            return _Fail("fejer", int(bad[0]) + 1)
        return True
    return None


@dataclass
class _Fail:
    name: str
    first_violation: int
    passed: bool = False
    detail: str = ""


def _assemble(name, params, seed, trace, pred, cert, checks: dict, descent=None,
              extra=None, problem=None) -> RunResult:
    checks = {k: _chk(v) for k, v in checks.items() if v is not None}
    report = {
        "name": name, "params": params, "seed": seed,
        "certification": None if cert is None else cert.to_dict(),
        "prediction": None if pred is None else pred.to_dict(),
        "checks": checks,
    }
    if trace is not None:
        report["meta"] = trace.meta
        try:
            report["measured_slope"] = fit_loglog(trace.gap).slope
        except ValueError:
            report["measured_slope"] = None
    if problem is not None:
        report["problem"] = {"name": problem.name, "spec_hash": problem.spec_hash()}
    if descent is not None and trace is not None:
        drep, hyp = certify_general_descent(trace.gap, trace.step, trace.resid, **descent)
        report["descent_certification"] = {**drep.to_dict(), "hypotheses": hyp}
        checks["descent"] = {"pass": drep.passed, "first_violation": drep.first_violation,
                             "detail": drep.detail}
    if extra:
        report.update(extra)
    failed = [k for k, v in checks.items() if not v["pass"]]
    if cert is not None and not cert.passed:
        failed.insert(0, "certification")
    firsts = [v["first_violation"] for k, v in checks.items() if not v["pass"]
              and v["first_violation"] is not None]
    if cert is not None and not cert.passed and cert.first_violation is not None:
        firsts.append(cert.first_violation)
    report["failed"] = failed
    report["pass"] = not failed
    report["first_violation"] = min(firsts) if firsts else None
    env = None
    if pred is not None and trace is not None:
        env = np.asarray(pred.envelope(np.arange(trace.gap.size)), dtype=float)
    return RunResult(name, params, seed, trace, env, report, descent)


def _slope_check(series, expected, width, stop=None, start=1):
    fit = fit_loglog(series, 0.5, start=start, stop=stop)
    return abs(fit.slope - expected) <= width, fit.slope


# -- built-ins --------------------------------------------------------------------


def _norm_pow_p(params, seed):
    p = float(params["p"])
    if p == 1:
        # the l1 norm reaches its minimizer in finitely many prox steps
        dim = 2
        problem = make_l1(1.0, dim)
        x0 = np.array(params.get("x0") or [1.0, -0.3])
        lam = params["lam"] or 0.25
        iters = params["iters"] or 20
        loja = exact_cert_l1(1.0, dim)[1]
    else:
        problem = make_norm_pow(p, 1)
        x0 = np.array(params.get("x0") or [1.0])
        lam = params["lam"] or 1.0
        iters = params["iters"] or (40 if p < 2 else 60 if p == 2 else 20_000)
        cond, loja = exact_cert_norm_pow(p, 1.0, 1)
    cfg = SolveConfig(lam=lam, max_iters=int(iters), record_iterates=x0.size * iters <= 10**6)
    trace = run_fb(problem, cfg, x0, seed=seed)
    r0 = float(trace.gap[0])
    L = problem.lipschitz
    pred = predict_from_certificate(p, loja.constant, lam, L, r0)
    cert = certify_trace(trace, pred)
    checks = {
        "fb_estimates": check_fb_estimates(trace, problem, cfg),
        "monotone": check_monotone(trace),
        "worst_case": check_worst_case(trace),
        "fejer": _fejer(trace, problem),
    }
    extra = {}
    if p == 1:
        hit = np.flatnonzero(trace.gap <= 1e-13)
        extra["termination_n"] = int(hit[0]) if hit.size else None
        extra["finite_bound_n"] = pred.constants["finite_bound_n"]
        checks["finite_termination"] = (hit.size > 0
                                        and int(hit[0]) <= pred.constants["finite_bound_n"])
    elif p < 2:
        orders = superlinear_order(trace.dist)
        target = 1.0 / (p - 1.0)
        extra["superlinear_orders"] = orders.tolist()
        extra["superlinear_order_target"] = target
        checks["superlinear_order"] = bool(orders.size) and bool(np.any(np.abs(orders - target) <= 0.1))
        # the subgradient norm is exactly p w dist^(p-1), the sharp subregularity constant
        fv = superlinear_bounds_check(trace.dist, trace.gap, p, lam, gamma_sub=p,
                                      gamma_cond=cond.constant)
        extra["error_bounds"] = fv
        checks["error_bounds"] = all(v is None for v in fv.values())
    elif p == 2:
        floor = 1e-12 * r0
        q = tail_qfactor(trace.gap, floor=floor)
        extra["qfactor_bound"] = pred.constants["epsilon"]
        extra["measured_qfactor"] = q
        checks["qfactor"] = q <= pred.constants["epsilon"] + 1e-10
    else:
        ok_g, sg = _slope_check(trace.gap, -p / (p - 2.0), 0.2)
        ok_d, sd = _slope_check(trace.dist, -1.0 / (p - 2.0), 0.1)
        extra["slopes"] = {"gap": sg, "gap_expected": -p / (p - 2.0),
                           "dist": sd, "dist_expected": -1.0 / (p - 2.0)}
        checks["gap_slope"] = ok_g
        checks["dist_slope"] = ok_d
        # lower-bound order: the distance cannot decay faster than n^(-1/(p-2))
        checks["lower_bound_order"] = sd >= -1.0 / (p - 2.0) - 0.05
    descent = descent_parameters(lam, L, loja.constant, p)
    return _assemble("norm_pow_p", params, seed, trace, pred, cert, checks, descent, extra, problem)


def classical_factors(kap):
    """Linear factors ``(1 - kappa, sqrt((1-kappa)/(1+kappa)), 1/sqrt(1+kappa))``."""
    kap = np.asarray(kap, dtype=float)
    return 1.0 - kap, np.sqrt((1.0 - kap) / (1.0 + kap)), 1.0 / np.sqrt(1.0 + kap)


def _rotation(rng, n):
    Qm, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Qm * np.sign(np.diag(R))


def _strongly_convex_quadratic(params, seed):
    rng = np.random.default_rng(seed)
    n = int(params["dim"])
    gam = float(params["kappa"])
    if not 0 < gam <= 1:
        raise ConfigurationError("kappa must lie in ]0, 1]")
    eig = np.linspace(gam, 1.0, n)
    U = _rotation(rng, n)
    Q = (U * eig) @ U.T
    Q = 0.5 * (Q + Q.T)
    problem = make_quadratic(Q, name="strongly_convex_quadratic")
    L = problem.lipschitz
    gmin = min_eig(Q)
    lam = 1.0 / L
    x0 = rng.standard_normal(n)
    cfg = SolveConfig(lam=lam, max_iters=int(params["iters"]), record_iterates=True)
    trace = run_fb(problem, cfg, x0, seed=seed)
    loja = exact_cert_strongly_convex(gmin, n)[1]
    r0 = float(trace.gap[0])
    pred = predict_from_certificate(2.0, loja.constant, lam, L, r0)
    floor = 1e-12 * r0
    cert = certify_trace(trace, pred, gap_floor=floor)
    q = tail_qfactor(trace.gap, floor=floor)
    grid = np.linspace(0.0, 1.0, 201)
    f1, f2, f3 = classical_factors(grid)
    checks = {
        "fb_estimates": check_fb_estimates(trace, problem, cfg),
        "monotone": check_monotone(trace),
        "worst_case": check_worst_case(trace),
        "fejer": _fejer(trace, problem),
        "qfactor": q <= pred.constants["epsilon"] + 1e-10,
        "factor_comparison": bool(np.all(f1 <= f2 + 1e-15) and np.all(f2 <= f3 + 1e-15)),
    }
    extra = {"kappa": pred.kappa, "gamma_over_L": gmin / L, "measured_qfactor": q,
             "qfactor_bound": pred.constants["epsilon"]}
    descent = descent_parameters(lam, L, loja.constant, 2.0)
    return _assemble("strongly_convex_quadratic", params, seed, trace, pred, cert, checks,
                     descent, extra, problem)


def _lasso_small(params, seed):
    rng = np.random.default_rng(seed)
    m, n = int(params["rows"]), int(params["cols"])
    A = DenseOperator(rng.standard_normal((m, n)) / math.sqrt(m))
    y = rng.standard_normal(m)
    problem = make_lasso(A, y, float(params["alpha"]), name="lasso_small")
    L = problem.lipschitz
    lam = 1.0 / L
    cfg = SolveConfig(lam=lam, max_iters=int(params["iters"]), record_iterates=True)
    trace = run_fb(problem, cfg, np.zeros(n), seed=seed)
    d0 = float(trace.dist[0])
    pred = RatePrediction("worstcase", math.inf, 1.0, float(trace.gap[0]),
                          {"C": worst_case_constant(lam, L), "d0": d0, "lam": lam})
    floor = 1e-12 * (1.0 + abs(problem.inf_value))
    cert = certify_trace(trace, pred, gap_floor=floor)
    n0 = detect_support_identification(trace)
    checks = {
        "fb_estimates": check_fb_estimates(trace, problem, cfg),
        "monotone": check_monotone(trace),
        "worst_case": check_worst_case(trace),
        "fejer": _fejer_dist(trace, slack=2e-9 * max(1.0, float(trace.dist[0]))),
        "support_identification": n0 is not None,
    }
    extra = {"support_identified_at": n0,
             "support": None if n0 is None else np.flatnonzero(trace.support[-1]).tolist()}
    return _assemble("lasso_small", params, seed, trace, pred, cert, checks, None, extra, problem)


def _landweber_source(params, seed):
    mu = float(params["mu"])
    spec = SourceSpec(mu, float(params["delta"]))
    res = landweber_rate_experiment(params["family"], int(params["N"]), spec, lam="auto",
                                    iters=int(params["iters"]), seed=seed, q=float(params["q"]),
                                    rho=float(params["rho"]))
    trace = res.trace
    checks = dict(res.checks)
    checks["fejer"] = _fejer_dist(trace)
    width = float(params["slope_tolerance"])
    checks["gap_slope"] = abs(res.slopes["gap"] - res.slopes["gap_expected"]) <= width
    if "dist" in res.slopes:
        checks["dist_slope"] = abs(res.slopes["dist"] - res.slopes["dist_expected"]) <= width
    extra = {"slopes": res.slopes, "truncation_limited": res.truncation_limited,
             "window": list(res.window)}
    descent = None
    if mu != 0:
        p = 2.0 + 1.0 / mu
        descent = descent_parameters(trace.meta["lambda"], trace.meta["L"],
                                     loja_constant(mu, spec.delta), p)
    return _assemble("landweber_source", params, seed, trace, res.prediction, res.cert, checks,
                     descent, extra)


def _fejer_dist(trace, slack=0.0):
    """Fejer check on the distance series; ``slack`` absorbs the accuracy
    of a numerically computed reference minimizer."""
    d = trace.dist
    bad = np.flatnonzero(d[1:] > d[:-1] + slack + FEJER_TOL)
    return _Fail("fejer", int(bad[0]) + 1) if bad.size else True


def _counterexample_neg_alpha(params, seed):
    a = float(params["alpha"])
    problem = make_counterexample_neg(a)
    L = problem.lipschitz
    lam = params["lam"] or 1.0 / L
    x0 = float(params["x0"])
    cfg = SolveConfig(lam=lam, max_iters=int(params["iters"]))
    trace = run_fb(problem, cfg, [x0], seed=seed)
    loja = exact_cert_counterexample(a)
    r0 = float(trace.gap[0])
    pred = predict(-a, kappa(lam, L, loja.constant), r0)
    cert = certify_trace(trace, pred)
    expected = -a / (2.0 + a)
    ok, slope = _slope_check(trace.gap, expected, 0.1)
    C = power_tail_lower_constant(a, lam, x0)
    n = np.arange(1, trace.gap.size)
    lower = C ** (-a) * n ** expected
    below = np.flatnonzero(trace.gap[1:] < lower * (1.0 - 1e-9))
    checks = {
        "fb_estimates": check_fb_estimates(trace, problem, cfg),
        "monotone": check_monotone(trace),
        "slope": ok,
        "lower_bound": _Fail("lower_bound", int(below[0]) + 1) if below.size else True,
    }
    extra = {"slopes": {"gap": slope, "gap_expected": expected}, "lower_constant": C}
    descent = descent_parameters(lam, L, loja.constant, -a)
    return _assemble("counterexample_neg_alpha", params, seed, trace, pred, cert, checks,
                     descent, extra, problem)


def _sparse_recovery(params, seed):
    rng = np.random.default_rng(seed)
    m, n = int(params["rows"]), int(params["cols"])
    A = DenseOperator(rng.standard_normal((m, n)) / math.sqrt(m))
    xtrue = np.zeros(n)
    supp = [int(i) for i in params["support"]]
    vals = [float(v) for v in params["values"]]
    if len(supp) != len(vals):
        raise ConfigurationError("support and values must have the same length")
    xtrue[supp] = vals
    rep = sparse_recovery_experiment(A, xtrue, alpha=float(params["alpha"]),
                                     iters=int(params["iters"]), seed=seed)
    trace = rep.trace
    checks = dict(rep.checks)
    checks["precondition"] = rep.precondition_ok
    checks["identified"] = rep.identified
    checks["support_matches"] = rep.support_matches
    checks["envelope"] = rep.envelope_ok
    if trace is not None:
        checks["fejer"] = _fejer_dist(trace, slack=2e-9 * max(1.0, float(trace.dist[0])))
    extra = {"sparse": rep.to_dict()}
    return _assemble("sparse_recovery", params, seed, trace, None, None, checks, None, extra)


def render_table() -> str:
    rows = regime_table()
    head = ("assumption", "values", "iterates", "experiment")
    widths = [max(len(h), *(len(r[h]) for r in rows)) for h in head]
    line = " | ".join(h.ljust(w) for h, w in zip(head, widths))
    out = [line, "-+-".join("-" * w for w in widths)]
    for r in rows:
        out.append(" | ".join(r[h].ljust(w) for h, w in zip(head, widths)))
    return "\n".join(out) + "\n"


def _figure1_table(params, seed):
    rows = regime_table()
    unknown = [r["experiment"] for r in rows if r["experiment"] not in BUILTINS]
    checks = {"rows_map_to_builtins": not unknown}
    res = _assemble("figure1_table", params, seed, None, None, None, checks,
                    extra={"rows": rows})
    res.extra_files["table.txt"] = render_table()
    return res


@dataclass(frozen=True)
class Builtin:
    name: str
    summary: str
    runner: object
    defaults: dict
    grid: tuple = ()


BUILTINS = {
    b.name: b for b in [
        Builtin("norm_pow_p", "prox iterations on ||x||^p (l1 norm at p=1)", _norm_pow_p,
                {"p": 4.0, "iters": None, "lam": None, "x0": None},
                ("p", (1.0, 1.5, 2.0, 4.0, 6.0))),
        Builtin("strongly_convex_quadratic", "gradient descent at 1/L on a rotated quadratic",
                _strongly_convex_quadratic, {"dim": 6, "kappa": 0.1, "iters": 400}),
        Builtin("lasso_small", "ISTA on a small l1-regularized least squares", _lasso_small,
                {"rows": 8, "cols": 12, "alpha": 0.1, "iters": 3000}),
        Builtin("landweber_source", "Landweber on a diagonal problem started in a source set",
                _landweber_source,
                {"mu": 0.5, "delta": 1.0, "N": 2000, "iters": 10_000, "family": "poly",
                 "q": 1.0, "rho": 0.9, "slope_tolerance": 0.15},
                ("mu", (-0.25, 0.0, 0.25, 0.5, 1.0))),
        Builtin("counterexample_neg_alpha", "gradient descent on x^-alpha, no minimizer",
                _counterexample_neg_alpha, {"alpha": 1.0, "iters": 20_000, "lam": None, "x0": 1.0},
                ("alpha", (0.5, 1.0, 2.0))),
        Builtin("sparse_recovery", "ISTA support identification and local linear rate",
                _sparse_recovery,
                {"rows": 10, "cols": 16, "support": [2, 7, 11], "values": [1.0, -0.7, 0.5],
                 "alpha": 0.01, "iters": 5000}),
        Builtin("figure1_table", "regime table with the experiment instantiating each row",
                _figure1_table, {}),
    ]
}


def list_builtins():
    return [(b.name, b.summary, b.grid) for b in BUILTINS.values()]


def run_builtin(name: str, seed: int = 0, overrides: dict | None = None) -> RunResult:
    if name not in BUILTINS:
        raise ConfigurationError(f"unknown experiment {name!r}")
    b = BUILTINS[name]
    params = dict(b.defaults)
    for k, v in (overrides or {}).items():
        if k not in params:
            raise ConfigurationError(f"{name} has no parameter {k!r} (known: {sorted(params)})")
        params[k] = v
    return b.runner(params, int(seed))


# -- config files --------------------------------------------------------------------


def _schema():
    text = resources.files("geofb").joinpath("data/experiment.schema.json").read_text()
    return json.loads(text)


def validate_config(cfg: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        raise ConfigurationError(f"invalid experiment config: {exc.message}") from None


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    validate_config(cfg)
    return cfg


def _exact_loja(problem: CompositeProblem, dim: int) -> GeometryCertificate:
    g, h = problem.g, problem.h
    if h.kind == "zero" and g.kind == "norm_pow":
        return exact_cert_norm_pow(g.p, g.weight, dim)[1]
    if h.kind == "zero" and g.kind == "l1":
        return exact_cert_l1(g.alpha, dim)[1]
    if g.kind == "zero" and h.kind == "quadratic":
        gmin = min_eig(h.Q)
        if gmin <= 0:
            raise ConfigurationError("no exact certificate: quadratic is not positive definite")
        return exact_cert_strongly_convex(gmin, dim)[1]
    if g.kind == "zero" and h.kind == "least_squares":
        cond = exact_cert_least_squares(h.A)
        if cond is None:
            raise ConfigurationError("no exact certificate for the zero operator")
        return to_lojasiewicz(cond)
    if h.kind == "scalar_power_tail":
        return exact_cert_counterexample(h.alpha)
    raise ConfigurationError(f"no exact certificate for g={g.kind}, h={h.kind}")


def run_config(cfg: dict, seed: int | None = None, overrides: dict | None = None) -> RunResult:
    """Run a validated config: a built-in with parameters, a source-set
    family run or a generic problem/solver/certificate description."""
    seed = int(cfg["seed"] if seed is None else seed)
    if "experiment" in cfg:
        params = dict(cfg.get("params", {}))
        params.update(overrides or {})
        res = run_builtin(cfg["experiment"], seed, params)
        res.name = cfg.get("name", res.name)
        res.report["name"] = res.name
        return res
    if "family" in cfg:
        params = {k: cfg[k] for k in ("mu", "delta", "N", "iters", "q", "rho") if k in cfg}
        params["family"] = cfg["family"]
        params.update(overrides or {})
        res = run_builtin("landweber_source", seed, params)
        res.name = cfg["name"]
        res.report["name"] = res.name
        return res
    return _run_generic(cfg, seed, overrides or {})


def _run_generic(cfg, seed, overrides):
    try:
        problem = problem_from_dict(cfg["problem"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad problem description: {exc}") from None
    sol = {**cfg["solver"], **overrides}
    x0 = np.asarray(cfg["x0"], dtype=float)
    dim = x0.size
    L = problem.lipschitz
    lam = sol.get("lambda", "auto")
    if lam == "auto":
        if L == 0:
            raise ConfigurationError("lambda='auto' needs a smooth part with L > 0")
        lam = 1.0 / L
    scfg = SolveConfig(lam=float(lam), max_iters=int(sol.get("max_iters", 1000)),
                       step_tol=float(sol.get("step_tol", 0.0)),
                       record_iterates=dim * int(sol.get("max_iters", 1000)) <= 10**6)
    problem.check_step(scfg.lam)
    if not np.all(problem.in_domain(x0[None, :])):
        raise ConfigurationError("x0 lies outside dom g")
    trace = run_fb(problem, scfg, x0, seed=seed)

    src = cfg.get("certificate", {"source": "none"})
    kind = src.get("source", "none")
    loja = None
    if kind == "exact":
        loja = _exact_loja(problem, dim)
    elif kind == "provided":
        try:
            loja = to_lojasiewicz(certificate_from_dict(src["certificate"]))
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"bad certificate: {exc}") from None
    elif kind == "estimated":
        p = float(src["p"])
        center = problem.argmin.xbar if problem.has_argmin else np.zeros(dim)
        radius = max(float(np.linalg.norm(x0 - center)), 1e-12)
        est = estimate_lojasiewicz(problem, p, dom.ball(center, radius),
                                   n_samples=int(src.get("samples", 10_000)), seed=seed)
        if est.value <= 0:
            raise ConfigurationError("estimation produced no usable samples")
        loja = GeometryCertificate("lojasiewicz", p, est.value, provenance="estimated")

    checks = {
        "fb_estimates": check_fb_estimates(trace, problem, scfg),
        "monotone": check_monotone(trace),
        "worst_case": check_worst_case(trace),
        "fejer": _fejer(trace, problem) if isinstance(problem.argmin, PointArgmin)
        and not isinstance(problem.argmin, AffineArgmin) else None,
    }
    r0 = float(trace.gap[0])
    pred = cert = descent = None
    if loja is not None and r0 > 0:
        pred = predict_from_certificate(loja.p, loja.constant, scfg.lam, L, r0)
        cert = certify_trace(trace, pred, gap_floor=1e-13 * (1.0 + r0))
        descent = descent_parameters(scfg.lam, L, loja.constant, loja.p)
    elif problem.has_argmin:
        d0 = float(trace.dist[0])
        pred = RatePrediction("worstcase", math.inf, 1.0, r0,
                              {"C": worst_case_constant(scfg.lam, L), "d0": d0, "lam": scfg.lam})
        cert = certify_trace(trace, pred)
    extra = {"certificate_source": kind,
             "certificate": None if loja is None else loja.to_dict()}
    return _assemble(cfg["name"], {"solver": sol, "x0": x0.tolist()}, seed, trace, pred, cert,
                     checks, descent, extra, problem)


# -- artifacts ----------------------------------------------------------------------


def write_artifacts(res: RunResult, out_dir, outputs=("csv", "json", "svg")) -> Path:
    """Write the run into ``out_dir/<name>/`` and return that directory."""
    d = Path(out_dir) / res.name
    d.mkdir(parents=True, exist_ok=True)
    if res.trace is not None:
        if "csv" in outputs:
            write_trace_csv(res.trace, d / "trace.csv")
        if "svg" in outputs:
            series = {"gap": res.trace.gap}
            if res.trace.dist is not None:
                series["dist"] = res.trace.dist
            write_svg(loglog_svg(series, res.envelope, title=res.name), d / "plot.svg")
    if res.descent is not None:
        write_json(res.descent, d / "prediction.json")
    if "json" in outputs:
        write_json(res.report, d / "report.json")
    for fname, text in res.extra_files.items():
        with open(d / fname, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    return d
