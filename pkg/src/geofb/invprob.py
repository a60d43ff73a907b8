"""Linear inverse problems on diagonal operators: source sets, their
Lojasiewicz constants and optimality witnesses, Landweber rate
experiments, and the sparse-recovery (ISTA) experiment.

Everything is finite dimensional.  Infinite-dimensional phenomena (no
minimizer, arbitrarily slow rates) show up as truncation effects, which
the experiments audit explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import domains as dom
from .funcs import make_lasso, make_least_squares
from .geometry import GeometryCertificate, convert_forward, to_lojasiewicz
from .linops import (
    DenseOperator,
    DiagonalOperator,
    SupportSet,
    gram_norm,
    pinv_apply,
    restricted_min_eig,
    spectral_power,
    support_min_eig,
)
from .rates import (
    RatePrediction,
    certify_trace,
    fit_loglog,
    kappa,
    linear_backward,
    predict,
)
from .solver import (
    SolveConfig,
    Trace,
    check_fb_estimates,
    check_monotone,
    check_worst_case,
    detect_support_identification,
    run_fb,
    worst_case_constant,
)

__all__ = [
    "SourceSpec",
    "DiagonalInverseProblem",
    "SourcePoint",
    "Membership",
    "construct_source_point",
    "membership_check",
    "loja_constant",
    "loja_on_source_set",
    "optimality_witness",
    "source_invariance_check",
    "make_sigmas",
    "spectral_profile",
    "landweber_rate_experiment",
    "interpolation_check",
    "sqrt_range_pair",
    "sparse_recovery_experiment",
    "OVERFLOW",
]

OVERFLOW = 1e150


@dataclass(frozen=True)
class SourceSpec:
    """Source-condition exponent ``mu > -1/2`` and radius ``delta > 0``."""

    mu: float
    delta: float

    def __post_init__(self):
        if not self.mu > -0.5:
            raise ValueError("mu must exceed -1/2")
        if not self.delta > 0:
            raise ValueError("delta must be positive")


class DiagonalInverseProblem:
    """``A x = y`` with ``A = diag(sigmas)``."""

    def __init__(self, A, y):
        if not isinstance(A, DiagonalOperator):
            A = DiagonalOperator(A)
        self.A = A
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != (A.cols,):
            raise ValueError("data dimension mismatch")

    @property
    def sigmas(self):
        return self.A.sigmas

    @property
    def ybar(self):
        """Projection of ``y`` onto the closure of the range of ``A``."""
        return np.where(self.A.positive, self.y, 0.0)

    @property
    def xdagger(self):
        return pinv_apply(self.A, self.y)

    def problem(self):
        return make_least_squares(self.A, self.y, name="landweber")


@dataclass
class SourcePoint:
    x0: np.ndarray
    w: np.ndarray
    norm: float


@dataclass(frozen=True)
class Membership:
    member: bool
    delta_min: float
    overflow: bool = False


def construct_source_point(P: DiagonalInverseProblem, spec: SourceSpec, w) -> SourcePoint:
    """Point ``A^+ y + (A* A)^mu w`` of the source set.

    For ``mu < 0`` the same coordinates solve ``A x0 = ybar + (A A*)^(mu+1/2) w``
    on the positive singular values, so one formula covers both cases.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (P.A.cols,):
        raise ValueError("w has the wrong dimension")
    pos = P.A.positive
    if np.any(w[~pos] != 0):
        raise ValueError("w must lie in the orthogonal of Ker A")
    nw = float(np.linalg.norm(w))
    if nw > spec.delta * (1 + 1e-12):
        raise ValueError(f"||w|| = {nw} exceeds delta = {spec.delta}")
    x0 = P.xdagger + spectral_power(P.A, spec.mu).apply(w)
    return SourcePoint(x0, w.copy(), nw)


def membership_check(x, P: DiagonalInverseProblem, mu: float) -> Membership:
    """Smallest ``delta`` with ``x`` in the source set of exponent ``mu``.

    ``omega_k = (A x - ybar)_k / sigma_k^(2 mu + 1)`` on positive
    ``sigma_k``; ``delta_min = ||omega||``.  Values above ``1e150`` are
    reported as overflow.
    """
    x = np.asarray(x, dtype=float)
    r = P.A.apply(x) - P.ybar
    pos = P.A.positive
    scale = max(1.0, float(np.max(np.abs(P.y), initial=0.0)))
    if np.any(np.abs(r[~pos]) > 1e-14 * scale):
        return Membership(False, math.inf)
    s = P.sigmas[pos]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        omega = r[pos] / s ** (2.0 * mu + 1.0)
        d = float(np.linalg.norm(omega))
    if not math.isfinite(d) or d > OVERFLOW:
        return Membership(True, math.inf, True)
    return Membership(True, d)


def loja_constant(mu: float, delta: float) -> float:
    """``2^(-(mu+1)/(2mu+1)) delta^(1/(1+2mu))``."""
    return 2.0 ** (-(mu + 1.0) / (2.0 * mu + 1.0)) * delta ** (1.0 / (1.0 + 2.0 * mu))


def loja_on_source_set(spec: SourceSpec, P: DiagonalInverseProblem | None = None
                       ) -> GeometryCertificate:
    """Lojasiewicz certificate of least squares on a source set:
    exponent ``2 + 1/mu`` (negative for ``mu < 0``)."""
    if spec.mu == 0:
        raise ValueError("mu = 0 gives no Lojasiewicz exponent")
    p = 2.0 + 1.0 / spec.mu
    D = None if P is None else dom.source_set(P, spec.mu, spec.delta)
    return GeometryCertificate("lojasiewicz", p, loja_constant(spec.mu, spec.delta), D)


@dataclass
class WitnessReport:
    ratios: np.ndarray
    c: float
    p: float
    sound: bool
    sharp: bool

    def to_dict(self):
        return {"ratios": self.ratios.tolist(), "c": self.c, "p": self.p,
                "sound": self.sound, "sharp": self.sharp}


def _witness_ratio(sig, mu, delta, p):
    # f(v) = delta^2 sigma^(4mu+2) / 2 and ||grad f(v)|| = delta sigma^(2+2mu),
    # evaluated in logs so tiny sigmas neither underflow nor lose digits
    ls = np.log(sig)
    log_f = 2 * math.log(delta) + (4 * mu + 2) * ls - math.log(2.0)
    log_g = math.log(delta) + (2 + 2 * mu) * ls
    return np.exp((1.0 - 1.0 / p) * log_f - log_g)


def optimality_witness(sigmas, mu: float, delta: float, k=None, p: float | None = None,
                       direct: bool = False) -> WitnessReport:
    """Ratios ``f(v^k)^(1-1/p) / ||grad f(v^k)||`` at ``v^k = delta sigma_k^(2mu) e_k``.

    With ``p = 2 + 1/mu`` (default) every ratio equals the constant of
    :func:`loja_constant`.  ``direct=True`` builds each ``v^k`` and
    evaluates the least-squares objective with ``y = 0`` explicitly
    (limited to sigmas that do not underflow).
    """
    if mu <= 0:
        raise ValueError("witnesses need mu > 0")
    sig = np.asarray(sigmas, dtype=float)
    if np.any(sig <= 0):
        raise ValueError("witnesses need sigma_k > 0")
    idx = np.arange(sig.size) if k is None else np.atleast_1d(k)
    p_star = 2.0 + 1.0 / mu
    p = p_star if p is None else p
    if direct:
        A = DiagonalOperator(sig)
        prob = make_least_squares(A, np.zeros(sig.size))
        V = np.zeros((idx.size, sig.size))
        V[np.arange(idx.size), idx] = delta * sig[idx] ** (2 * mu)
        ratios = np.maximum(prob.gap(V), 0.0) ** (1 - 1 / p) / prob.min_norm_subgrad(V)
    else:
        ratios = _witness_ratio(sig[idx], mu, delta, p)
    c = loja_constant(mu, delta)
    sound = bool(np.all(ratios <= c * (1 + 1e-12)))
    sharp = bool(abs(float(np.max(ratios)) - c) < 1e-6)
    return WitnessReport(ratios, c, p, sound, sharp)


@dataclass
class InvarianceReport:
    passed: bool
    delta_series: dict = field(default_factory=dict)
    first_violation: tuple | None = None

    def to_dict(self):
        return {"pass": self.passed, "first_violation": self.first_violation,
                "delta_max": {str(k): float(np.max(v)) for k, v in self.delta_series.items()}}


def source_invariance_check(P: DiagonalInverseProblem, spec: SourceSpec, lambdas, x0,
                            n_steps: int = 100) -> InvarianceReport:
    """Landweber from a member of the source set stays inside it, with a
    nonincreasing ``||omega_n||``, for every stepsize in ``lambdas``."""
    m0 = membership_check(x0, P, spec.mu)
    if not m0.member or m0.delta_min > spec.delta * (1 + 1e-12) + 1e-10:
        raise ValueError("x0 is not in the source set")
    series = {}
    first = None
    L = gram_norm(P.A)
    for lam in lambdas:
        if not 0 < lam < 2.0 / L:
            raise ValueError(f"stepsize {lam} outside ]0, 2/L[")
        x = np.array(x0, dtype=float)
        d = np.empty(n_steps + 1)
        d[0] = m0.delta_min
        for n in range(1, n_steps + 1):
            x = x - lam * P.A.adjoint_apply(P.A.apply(x) - P.y)
            d[n] = membership_check(x, P, spec.mu).delta_min
        series[lam] = d
        bad = np.flatnonzero((d > spec.delta + 1e-10) | np.r_[False, d[1:] > d[:-1] * (1 + 1e-12) + 1e-15])
        if bad.size and first is None:
            first = (lam, int(bad[0]))
    return InvarianceReport(first is None, series, first)


# -- Landweber rate experiments ---------------------------------------------------


def make_sigmas(family: str, N: int, q: float = 1.0, rho: float = 0.9) -> np.ndarray:
    """``poly``: ``k^-q``; ``geo``: ``rho^k``, for ``k = 1..N``."""
    k = np.arange(1, N + 1, dtype=float)
    if family == "poly":
        return k**-q
    if family == "geo":
        return rho**k
    raise ValueError(f"unknown spectrum family {family!r}")


def spectral_profile(sigmas, delta: float, rng) -> np.ndarray:
    """Source element with equal mass per logarithmic band of the spectrum.

    ``w_k^2`` is proportional to the gap ``|log sigma_k - log sigma_{k+1}|``
    (``1/k`` for polynomial decay, flat for geometric decay), with random
    signs and ``||w|| = delta``.  This is the profile for which Landweber
    shows the extremal rate at every scale; a flat profile over-weights the
    fast modes of a polynomial spectrum.
    """
    ls = np.log(np.asarray(sigmas, dtype=float))
    gaps = np.abs(np.diff(ls))
    wt = np.append(gaps, gaps[-1] if gaps.size else 1.0)
    w = np.sqrt(wt) * rng.choice([-1.0, 1.0], size=ls.size)
    return delta * w / np.linalg.norm(w)


@dataclass
class LandweberResult:
    trace: Trace
    cert: object
    slopes: dict
    checks: dict
    truncation_limited: bool
    window: tuple
    prediction: object = None
    x_bar: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return bool(self.cert.passed) and all(self.checks.values())

    def to_dict(self):
        return {
            "certification": self.cert.to_dict(), "slopes": self.slopes,
            "checks": self.checks, "truncation_limited": self.truncation_limited,
            "window": list(self.window),
            "prediction": None if self.prediction is None else self.prediction.to_dict(),
        }


def landweber_rate_experiment(family: str = "poly", N: int = 2000, spec: SourceSpec | None = None,
                              lam="auto", iters: int = 10_000, seed: int = 0, q: float = 1.0,
                              rho: float = 0.9) -> LandweberResult:
    """Landweber on a diagonal problem started in a source set.

    ``y = A u`` with a seeded Gaussian ``u``; ``x0 = A^+ y + (A*A)^mu w``
    with :func:`spectral_profile` ``w`` of norm ``delta``.  The trace is
    certified against the envelope of the source-set certificate (or the
    worst-case bound when ``mu = 0``), and log-log slopes of the gap and of
    ``||x_n - A^+ y||`` are fitted over the last half of the unpolluted
    window.

    The truncation audit compares the gap with the share of the smallest
    retained singular value; once that share exceeds 1% the run is marked
    truncation-limited and the window ends there.
    """
    spec = SourceSpec(0.5, 1.0) if spec is None else spec
    rng = np.random.default_rng(seed)
    sig = make_sigmas(family, N, q=q, rho=rho)
    A = DiagonalOperator(sig)
    u = rng.standard_normal(N) / math.sqrt(N)
    P = DiagonalInverseProblem(A, A.apply(u))
    w = spectral_profile(sig, spec.delta, rng)
    sp = construct_source_point(P, spec, w)
    problem = P.problem()
    L = problem.lipschitz
    lam = 1.0 / L if lam in ("auto", None) else float(lam)
    cfg = SolveConfig(lam=lam, max_iters=iters)
    trace = run_fb(problem, cfg, sp.x0, seed=seed)
    trace.meta["family"] = family
    xbar = P.xdagger

    # the error evolves mode by mode: e_k(n) = (1 - lam s_k^2)^n e_k(0)
    e0 = sp.x0 - xbar
    n = np.arange(trace.gap.size)
    last = (1.0 - lam * sig[-1] ** 2) ** n * e0[-1]
    contrib = 0.5 * (sig[-1] * last) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        share = np.where(trace.gap > 0, contrib / trace.gap, 0.0)
    polluted = np.flatnonzero((share > 0.01) & (n >= 1))
    limited = bool(polluted.size)
    stop = int(polluted[0]) if limited else trace.gap.size
    stop = max(stop, 10)

    slopes = {"gap": fit_loglog(trace.gap, 0.5, stop=stop).slope,
              "gap_expected": -(1.0 + 2.0 * spec.mu)}
    if spec.mu > 0:
        slopes["dist"] = fit_loglog(trace.dist, 0.5, stop=stop).slope
        slopes["dist_expected"] = -spec.mu

    r0 = float(trace.gap[0])
    checks = {
        "fb_estimates": bool(check_fb_estimates(trace, problem, cfg)),
        "monotone": bool(check_monotone(trace)),
        "worst_case": bool(check_worst_case(trace)),
    }
    if spec.mu != 0:
        cert = loja_on_source_set(spec)
        pred = predict(cert.p, kappa(lam, L, cert.constant), r0)
        # the certificate inequality itself, at every iterate
        res = trace.resid
        lhs = np.where(trace.gap > 0, np.maximum(trace.gap, 0) ** (1 - 1 / cert.p), 0.0)
        checks["lojasiewicz_inline"] = bool(np.all(lhs <= cert.constant * res * (1 + 1e-9) + 1e-300))
    else:
        d0 = float(trace.dist[0])
        pred = RatePrediction("worstcase", math.inf, 1.0, r0,
                              {"C": worst_case_constant(lam, L), "d0": d0, "lam": lam})
    rep = certify_trace(trace, pred)
    return LandweberResult(trace, rep, slopes, checks, limited, (1, stop), pred, xbar)


# -- operator identities -----------------------------------------------------------------


def interpolation_check(D: DiagonalOperator, x, alpha: float, beta: float) -> bool:
    """``||(AA*)^alpha x|| <= ||(AA*)^beta x||^(alpha/beta) ||x||^(1-alpha/beta)``."""
    if not 0 <= alpha < beta:
        raise ValueError("need 0 <= alpha < beta")
    x = np.asarray(x, dtype=float)
    lhs = np.linalg.norm(spectral_power(D, alpha).apply(x)) if alpha > 0 else np.linalg.norm(x)
    rhs = (np.linalg.norm(spectral_power(D, beta).apply(x)) ** (alpha / beta)
           * np.linalg.norm(x) ** (1.0 - alpha / beta))
    return bool(lhs <= rhs * (1 + 1e-12))


def sqrt_range_pair(D: DiagonalOperator, x):
    """For ``x`` orthogonal to ``Ker A``, ``y = (sqrt(AA*))^+ A x``; then
    ``A x = sqrt(AA*) y`` and ``||y|| = ||x||``."""
    x = np.asarray(x, dtype=float)
    root = spectral_power(D, 0.5)
    return pinv_apply(root, D.apply(x))


# -- sparse recovery -----------------------------------------------------------------------


@dataclass
class SparseReport:
    precondition_ok: bool
    gamma_s: float
    s: int
    identified: bool = False
    n0: int | None = None
    support: list | None = None
    reference_support: list | None = None
    support_matches: bool = False
    gamma_I: float | None = None
    epsilon_I: float | None = None
    kappa: float | None = None
    predicted_qfactor: float | None = None
    measured_qfactor: float | None = None
    measured_dist_qfactor: float | None = None
    envelope_ok: bool = False
    checks: dict = field(default_factory=dict)
    trace: Trace | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return (self.precondition_ok and self.identified and self.envelope_ok
                and all(self.checks.values()))

    def to_dict(self):
        keys = ("precondition_ok", "gamma_s", "s", "identified", "n0", "support",
                "reference_support", "support_matches", "gamma_I", "epsilon_I", "kappa",
                "predicted_qfactor", "measured_qfactor", "measured_dist_qfactor",
                "envelope_ok", "checks", "detail")
        out = {k: getattr(self, k) for k in keys}
        out["pass"] = self.passed
        return out


def sparse_recovery_experiment(A, xtrue, alpha: float = 0.01, lam=None, iters: int = 5000,
                               seed: int = 0, noise: float = 0.0) -> SparseReport:
    """ISTA on ``alpha ||x||_1 + 0.5 ||A x - y||^2`` with ``y = A xtrue (+ noise)``.

    After the support settles at ``n0``, the problem restricted to the
    support ``I`` is 2-conditioned with ``gamma_I``, the smallest eigenvalue
    of ``A_I* A_I``.  The tail of the gap must then contract at least by
    ``1/(1 + kappa)`` per step, with kappa from the converted Lojasiewicz
    constant, and the distance to the minimizer at least by
    ``(1 + lam gamma_I)^(-1/2)``.
    """
    if not isinstance(A, (DenseOperator, DiagonalOperator)):
        A = DenseOperator(A)
    xtrue = np.asarray(xtrue, dtype=float)
    s = int(np.count_nonzero(xtrue))
    gs = restricted_min_eig(A, s)
    L = gram_norm(A)
    if gs <= 1e-12 * max(L, 1.0):
        return SparseReport(False, gs, s, detail="restricted injectivity fails: gamma_s = 0")
    rng = np.random.default_rng(seed)
    y = A.apply(xtrue)
    if noise > 0:
        y = y + noise * rng.standard_normal(y.size)
    problem = make_lasso(A, y, alpha)
    lam = 1.0 / L if lam is None else float(lam)
    cfg = SolveConfig(lam=lam, max_iters=iters)
    trace = run_fb(problem, cfg, np.zeros(A.cols), seed=seed)
    rep = SparseReport(True, gs, s, trace=trace)
    rep.checks = {
        "fb_estimates": bool(check_fb_estimates(trace, problem, cfg)),
        "monotone": bool(check_monotone(trace)),
        "worst_case": bool(check_worst_case(trace)),
    }
    n0 = detect_support_identification(trace)
    xbar = problem.argmin.xbar
    ref = SupportSet.of(xbar, 1e-9 * max(1.0, float(np.max(np.abs(xbar)))))
    rep.reference_support = list(ref.indices)
    if n0 is None:
        rep.detail = "support identification not detected"
        return rep
    rep.identified = True
    rep.n0 = n0
    I = np.flatnonzero(trace.support[-1])
    rep.support = I.tolist()
    rep.support_matches = rep.support == rep.reference_support
    if I.size == 0:
        rep.detail = "identified support is empty"
        return rep
    gI = support_min_eig(A, I)
    rep.gamma_I = gI
    cond = GeometryCertificate("conditioned", 2.0, gI, dom.support_subspace(I, A.cols, center=xbar))
    c = to_lojasiewicz(cond).constant
    k = kappa(lam, L, c)
    rep.kappa = k
    rep.predicted_qfactor = 1.0 / (1.0 + k)
    if lam <= 1.0 / L * (1 + 1e-15):
        rep.epsilon_I = linear_backward(gI, lam, L)
    floor = 1e-10 * (1.0 + abs(problem.inf_value))
    tail = trace.gap[n0:]
    live = tail > floor
    tail = tail[: int(np.argmin(live)) if not live.all() else tail.size]
    if tail.size >= 2:
        rep.measured_qfactor = float(np.max(tail[1:] / tail[:-1]))
        pred = predict(2.0, k, float(tail[0]))
        cert = certify_trace(tail, pred, gap_floor=floor)
        rep.envelope_ok = bool(cert.passed) and rep.measured_qfactor <= rep.predicted_qfactor + 1e-10
    else:
        rep.envelope_ok = True
        rep.detail = "gap reached the rounding floor at identification"
    dtail = trace.dist[n0:]
    dlive = dtail > 1e-8 * max(1.0, float(np.linalg.norm(xbar)))
    dtail = dtail[: int(np.argmin(dlive)) if not dlive.all() else dtail.size]
    if dtail.size >= 2:
        rep.measured_dist_qfactor = float(np.max(dtail[1:] / dtail[:-1]))
        if rep.epsilon_I is not None:
            rep.checks["dist_qfactor"] = rep.measured_dist_qfactor <= rep.epsilon_I + 1e-10
    rep.checks["convert_chain"] = convert_forward(cond).constant == gI / 2.0
    return rep
