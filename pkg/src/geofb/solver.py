"""Forward-backward iterations with fully instrumented traces, and checks of
the per-iteration inequalities every FB orbit satisfies.

The inner loop only applies the FB map.  Gap, residual, distance and
support are evaluated afterwards on blocks of buffered iterates, which
keeps long runs (1e5 steps) fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domains import DomainDesc, SamplerError
from .funcs import (
    L1,
    CompositeProblem,
    ConfigurationError,
    DomainError,
    make_least_squares,
)

__all__ = [
    "SolveConfig",
    "Trace",
    "CheckReport",
    "run_fb",
    "run_landweber",
    "check_fb_estimates",
    "check_monotone",
    "check_fejer",
    "check_worst_case",
    "worst_case_constant",
    "check_fb_invariance",
    "detect_support_identification",
    "support_threshold",
    "TOL",
]

TOL = 1e-10
_CHUNK = 4096


@dataclass(frozen=True)
class SolveConfig:
    """Solver parameters.

    ``record_every`` thins only the stored iterates; scalar series are
    always recorded at every step.
    """

    lam: float
    max_iters: int = 1000
    step_tol: float = 0.0
    record_iterates: bool = False
    record_every: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigurationError("step size must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be positive")
        if self.step_tol < 0:
            raise ConfigurationError("step_tol must be nonnegative")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be positive")

    def to_dict(self):
        return {
            "lambda": self.lam, "max_iters": self.max_iters, "step_tol": self.step_tol,
            "record_iterates": self.record_iterates, "record_every": self.record_every,
        }


@dataclass
class Trace:
    """Per-iteration record of a run, indexed by ``n = 0 .. len-1``.

    ``step[0]`` is 0 by convention.  ``dist`` is None when the argmin is
    unavailable and ``support`` (a boolean matrix) is None unless ``g`` is
    an l1 term.
    """

    gap: np.ndarray
    step: np.ndarray
    resid: np.ndarray
    dist: np.ndarray | None = None
    support: np.ndarray | None = None
    iterates: np.ndarray | None = None
    iterate_index: np.ndarray | None = None
    x_final: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.gap.size

    @property
    def n_iters(self) -> int:
        return self.gap.size - 1

    @property
    def support_size(self):
        return None if self.support is None else self.support.sum(axis=1)

    def iterate(self, n: int):
        """Recorded iterate ``x_n`` (requires ``record_iterates``)."""
        if self.iterates is None:
            raise ValueError("iterates were not recorded")
        pos = np.searchsorted(self.iterate_index, n)
        if pos >= self.iterate_index.size or self.iterate_index[pos] != n:
            raise KeyError(f"iterate {n} not recorded (record_every)")
        return self.iterates[pos]

    def truncated(self, n_last: int) -> "Trace":
        """Copy restricted to ``n <= n_last``."""
        k = n_last + 1
        keep_it = None if self.iterate_index is None else self.iterate_index <= n_last
        return Trace(
            self.gap[:k].copy(), self.step[:k].copy(), self.resid[:k].copy(),
            None if self.dist is None else self.dist[:k].copy(),
            None if self.support is None else self.support[:k].copy(),
            None if self.iterates is None else self.iterates[keep_it].copy(),
            None if self.iterate_index is None else self.iterate_index[keep_it].copy(),
            None, dict(self.meta),
        )


@dataclass
class CheckReport:
    """Outcome of an inequality check along a trace."""

    name: str
    passed: bool
    first_violation: int | None = None
    detail: str = ""
    worst_margin: float = 0.0

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return {
            "name": self.name, "pass": self.passed,
            "first_violation": self.first_violation, "detail": self.detail,
            "worst_margin": self.worst_margin,
        }


def support_threshold(x):
    """Activity threshold ``1e-12 max(1, ||x||_inf)`` per row."""
    x = np.asarray(x, dtype=float)
    return 1e-12 * np.maximum(1.0, np.max(np.abs(x), axis=-1, keepdims=True))


def _block_stats(problem, xs, want_dist, want_support):
    gap = problem.gap(xs)
    resid = problem.min_norm_subgrad(xs)
    dist = problem.dist(xs) if want_dist else None
    sup = np.abs(xs) > support_threshold(xs) if want_support else None
    return gap, resid, dist, sup


def run_fb(problem: CompositeProblem, cfg: SolveConfig, x0, seed: int | None = None) -> Trace:
    """Iterate ``x_{n+1} = T_lam x_n`` from ``x0`` and record the orbit.

    Stops after ``cfg.max_iters`` steps, or as soon as the step just taken
    is below ``cfg.step_tol`` (that last iterate is recorded).
    """
    problem.check_step(cfg.lam)
    x = np.array(x0, dtype=float).reshape(-1)
    if not bool(np.all(problem.in_domain(x))):
        raise DomainError("x0 is outside dom g")
    lam = cfg.lam
    want_dist = problem.has_argmin
    want_support = isinstance(problem.g, L1)

    gaps, resids, dists, sups, steps = [], [], [], [], [np.zeros(1)]
    its, it_idx = [], []
    buf = [x]
    n = 0
    step_buf = []

    def flush():
        xs = np.asarray(buf)
        g, r, d, s = _block_stats(problem, xs, want_dist, want_support)
        gaps.append(g)
        resids.append(r)
        if want_dist:
            dists.append(d)
        if want_support:
            sups.append(s)
        steps.append(np.asarray(step_buf))
        if cfg.record_iterates:
            first = n - len(buf) + 1
            idx = np.arange(first, n + 1)
            keep = idx % cfg.record_every == 0
            its.append(xs[keep])
            it_idx.append(idx[keep])
        buf.clear()
        step_buf.clear()

    fbmap = problem.fb_map
    while n < cfg.max_iters:
        nx = fbmap(lam, x)
        st = math.sqrt(float(np.dot(nx - x, nx - x)))
        x = nx
        n += 1
        buf.append(x)
        step_buf.append(st)
        if len(buf) >= _CHUNK:
            flush()
        if st < cfg.step_tol:
            break
    if buf:
        flush()

    return Trace(
        gap=np.concatenate(gaps),
        step=np.concatenate(steps),
        resid=np.concatenate(resids),
        dist=np.concatenate(dists) if want_dist else None,
        support=np.concatenate(sups) if want_support else None,
        iterates=np.concatenate(its) if cfg.record_iterates else None,
        iterate_index=np.concatenate(it_idx) if cfg.record_iterates else None,
        x_final=x.copy(),
        meta={
            "lambda": lam, "L": problem.lipschitz, "problem": problem.name,
            "spec_hash": problem.spec_hash(), "seed": seed,
            "inf_value": problem.inf_value, "n_iters": n,
        },
    )


def run_landweber(A, y, cfg: SolveConfig, x0, seed: int | None = None) -> Trace:
    """Gradient descent on ``0.5 ||A x - y||**2`` (FB with ``g = 0``)."""
    return run_fb(make_least_squares(A, y, name="landweber"), cfg, x0, seed=seed)


# -- per-iteration inequalities ------------------------------------------------


def _first(mask):
    idx = np.flatnonzero(mask)
    return int(idx[0]) if idx.size else None


def check_fb_estimates(trace: Trace, problem: CompositeProblem | None = None,
                       cfg: SolveConfig | None = None, lam: float | None = None,
                       L: float | None = None) -> CheckReport:
    """Sufficient decrease and subgradient sandwich along an FB trace.

    For every ``n`` checks ``a step_{n+1}^2 <= gap_n - gap_{n+1}`` with
    ``a = (2 - lam L)/(2 lam)``, and
    ``resid_{n+1} <= step_{n+1}/lam <= resid_n``, each up to an additive
    ``1e-10 (1 + magnitude)``.  The reported index is the ``n+1`` whose
    step breaks an inequality.
    """
    for name in ("gap", "step", "resid"):
        if getattr(trace, name, None) is None:
            raise ValueError(f"trace has no {name} array")
    if lam is None:
        lam = cfg.lam if cfg is not None else trace.meta["lambda"]
    if L is None:
        L = problem.lipschitz if problem is not None else trace.meta["L"]
    a = (2.0 - lam * L) / (2.0 * lam)
    g, s, r = trace.gap, trace.step, trace.resid
    if g.size < 2:
        return CheckReport("fb_estimates", True)
    decrease = g[:-1] - g[1:]
    tol_i = TOL * (1.0 + np.abs(g[:-1]))
    viol_i = a * s[1:] ** 2 > decrease + tol_i
    ratio = s[1:] / lam
    viol_ii = (r[1:] > ratio + TOL * (1.0 + ratio)) | (ratio > r[:-1] + TOL * (1.0 + r[:-1]))
    bad = viol_i | viol_ii
    k = _first(bad)
    margin = float(np.max(a * s[1:] ** 2 - decrease - tol_i))
    if k is None:
        return CheckReport("fb_estimates", True, worst_margin=margin)
    which = "sufficient decrease" if viol_i[k] else "subgradient sandwich"
    return CheckReport("fb_estimates", False, k + 1, f"{which} fails at n={k + 1}", margin)


def check_monotone(trace: Trace) -> CheckReport:
    """Gap, residual and distance to argmin are nonincreasing."""
    series = [("gap", trace.gap), ("resid", trace.resid)]
    if trace.dist is not None:
        series.append(("dist", trace.dist))
    first, what = None, ""
    for name, v in series:
        k = _first(v[1:] > v[:-1] + TOL * (1.0 + np.abs(v[:-1])))
        if k is not None and (first is None or k + 1 < first):
            first, what = k + 1, name
    if first is None:
        return CheckReport("monotone", True)
    return CheckReport("monotone", False, first, f"{what} increases at n={first}")


def check_fejer(trace: Trace, xbar, problem: CompositeProblem | None = None,
                tol: float = 1e-12) -> CheckReport:
    """``||x_{n+1} - xbar|| <= ||x_n - xbar|| + tol`` over recorded iterates.

    ``xbar`` must be a minimizer (``||df(xbar)||_- <= 1e-8``) when the
    problem is given.
    """
    if trace.iterates is None:
        raise ValueError("Fejer check needs recorded iterates")
    xbar = np.asarray(xbar, dtype=float)
    if problem is not None:
        res = float(problem.min_norm_subgrad(xbar))
        if res > 1e-8:
            raise ValueError(f"xbar is not a minimizer (residual {res:.3e})")
    d = np.linalg.norm(trace.iterates - xbar, axis=1)
    k = _first(d[1:] > d[:-1] + tol)
    if k is None:
        return CheckReport("fejer", True)
    n = int(trace.iterate_index[k + 1])
    return CheckReport("fejer", False, n, f"distance to xbar increases at n={n}")


def worst_case_constant(lam: float, L: float) -> float:
    """``C = 1`` for ``lam <= 1/L``, else ``1 + 2(lam L - 1)/(2 - lam L)``."""
    if lam * L <= 1.0:
        return 1.0
    return 1.0 + 2.0 * (lam * L - 1.0) / (2.0 - lam * L)


def check_worst_case(trace: Trace, lam: float | None = None, L: float | None = None,
                     d0: float | None = None, rtol: float = 1e-9) -> CheckReport:
    """``gap_n <= C d0^2 / (2 lam n)`` for ``n >= 1``.

    ``d0`` defaults to the recorded ``dist[0]``.  An absolute slack of
    ``1e-14 (1 + |inf f|)`` absorbs the rounding in ``f - inf f``.
    """
    lam = trace.meta["lambda"] if lam is None else lam
    L = trace.meta["L"] if L is None else L
    if d0 is None:
        if trace.dist is None:
            return CheckReport("worst_case", True, detail="skipped: no argmin oracle")
        d0 = float(trace.dist[0])
    C = worst_case_constant(lam, L)
    n = np.arange(1, trace.gap.size)
    bound = C * d0 * d0 / (2.0 * lam * n)
    slack = 1e-14 * (1.0 + abs(trace.meta.get("inf_value", 0.0)))
    bad = trace.gap[1:] > bound * (1.0 + rtol) + slack
    k = _first(bad)
    if k is None:
        return CheckReport("worst_case", True)
    return CheckReport("worst_case", False, k + 1, f"gap above C d0^2/(2 lam n) at n={k + 1}")


# -- invariance and support identification ----------------------------------------


def check_fb_invariance(setdesc: DomainDesc, problem: CompositeProblem, lambdas,
                        samples: int = 200, seed: int = 0, tol: float = 1e-10) -> CheckReport:
    """Sample members of a set and check their FB images stay inside.

    Returns a failing report carrying the first counterexample (point and
    stepsize) in ``detail``.
    """
    try:
        pts = setdesc.sample(samples, seed=seed)
    except SamplerError:
        raise
    for lam in lambdas:
        problem.check_step(lam)
        img = problem.fb_map(lam, pts)
        inside = setdesc.contains(img, tol=tol)
        bad = np.flatnonzero(~inside)
        if bad.size:
            i = int(bad[0])
            return CheckReport(
                "fb_invariance", False, i,
                f"lambda={lam!r} maps {pts[i].tolist()} to {img[i].tolist()} outside the set",
            )
    return CheckReport("fb_invariance", True, detail=f"{samples} samples x {len(lambdas)} stepsizes")


def detect_support_identification(trace: Trace) -> int | None:
    """First ``n0`` after which the support never changes again.

    Returns None when the support still moves during the last 10% of the
    run, in which case identification has not been observed.
    """
    if trace.support is None:
        raise ValueError("trace has no support record")
    S = trace.support
    N = S.shape[0]
    same = np.all(S == S[-1], axis=1)
    changed = np.flatnonzero(~same)
    n0 = 0 if changed.size == 0 else int(changed[-1]) + 1
    tail_start = N - max(1, int(math.ceil(0.1 * N)))
    if n0 > tail_start:
        return None
    return n0
