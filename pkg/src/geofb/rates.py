"""Rate constants, predicted envelopes and trace certification.

Conventions: ``r_n = f(x_n) - inf f`` is the gap sequence and
``alpha = 2(p - 1)/p`` the exponent of the scalar recursion
``r_n - r_{n+1} >= kappa r_{n+1}**alpha`` that every regime reduces to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .funcs import ConfigurationError

__all__ = [
    "kappa",
    "kappa_general",
    "alpha_from_p",
    "kappa_tilde",
    "lemma_delta",
    "sublinear_lemma_bound",
    "uniform_sequence_bound",
    "cprime",
    "cp_const",
    "RatePrediction",
    "CertReport",
    "SlopeFit",
    "predict",
    "predict_from_certificate",
    "certify_trace",
    "certify_general_descent",
    "linear_forward",
    "linear_backward",
    "superlinear_bounds_check",
    "superlinear_order",
    "loglog_slope",
    "fit_loglog",
    "tail_qfactor",
    "regime_of",
    "regime_table",
    "power_tail_lower_constant",
]


# -- constants -----------------------------------------------------------------


def kappa(lam: float, L: float, c: float) -> float:
    """``lam (2 - lam L) / (2 c^2)``.

    With ``L = 0`` any positive stepsize is admissible and the formula
    reduces to ``lam / c^2``.
    """
    if c <= 0:
        raise ConfigurationError("Lojasiewicz constant must be positive")
    if not lam > 0 or (L > 0 and not lam < 2.0 / L):
        raise ConfigurationError(f"stepsize {lam} outside ]0, 2/L[ with L={L}")
    return lam * (2.0 - lam * L) / (2.0 * c * c)


def kappa_general(a: float, b: float, c: float) -> float:
    """``a / (b^2 c^2)`` for a descent method with sufficient-decrease
    constant ``a`` and relative-error constant ``b``."""
    if a <= 0 or b <= 0 or c <= 0:
        raise ConfigurationError("a, b, c must be positive")
    return a / (b * b * c * c)


def alpha_from_p(p: float) -> float:
    if p == 0:
        raise ValueError("p must be nonzero")
    return 2.0 * (p - 1.0) / p


def kappa_tilde(alpha: float, kap: float) -> float:
    return min(kap, kap ** ((alpha - 1.0) / alpha))


def _bisect_crossing(dec, inc) -> float:
    """``max_{s>=1} min{dec(s), inc(s)}`` for ``dec`` decreasing and ``inc``
    increasing from ``inc(1) = 0``: the max sits at their crossing, which is
    bracketed by doubling and bisected."""
    lo, hi = 1.0, 2.0
    while dec(hi) > inc(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise OverflowError("crossing not bracketed")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if dec(mid) > inc(mid):
            lo = mid
        else:
            hi = mid
    # both terms agree to rounding at the crossing; take the min at each end
    return max(min(dec(lo), inc(lo)), min(dec(hi), inc(hi)))


def _check_lemma_args(alpha, kap, r0):
    if kap <= 0 or r0 <= 0:
        raise ValueError("kappa and r0 must be positive")
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")


def _crossing_max(alpha: float, kap: float, r0: float) -> float:
    """``max_{s>=1} min{(alpha-1)/s, K (1 - s^{-beta})}`` with
    ``beta = (alpha-1)/alpha`` and ``K = kap^beta r0^(alpha-1)``."""
    _check_lemma_args(alpha, kap, r0)
    a1 = alpha - 1.0
    beta = a1 / alpha
    K = kap**beta * r0**a1
    return _bisect_crossing(lambda s: a1 / s,
                            lambda s: K * -math.expm1(-beta * math.log(s)))


def lemma_delta(alpha: float, kap: float, r0: float) -> float:
    """The constant ``delta`` of the sublinear sequence estimate."""
    return _crossing_max(alpha, kap, r0)


def sublinear_lemma_bound(alpha: float, kap: float, r0: float, n):
    """``(kappa_tilde delta n)^(-1/(alpha-1))`` for positive sequences with
    ``r_n - r_{n+1} >= kap r_{n+1}^alpha`` and initial value ``r0``.

    ``delta`` grows with ``r0``, so the bound is only reliable for moderate
    ``r0`` (roughly ``kap^beta r0^(alpha-1)`` of order one); large initial
    values can exceed it at small ``n``.  See :func:`uniform_sequence_bound`.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    kt = kappa_tilde(alpha, kap)
    d = lemma_delta(alpha, kap, r0)
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore"):
        out = (kt * d * n) ** (-1.0 / (alpha - 1.0))
    return float(out) if out.ndim == 0 else out


def uniform_sequence_bound(alpha: float, kap: float, r0: float, n):
    """``(r0^(1-alpha) + D n)^(-1/(alpha-1))`` with
    ``D = max_{s>=1} min{(alpha-1) kap/s, (s^beta - 1) r0^(1-alpha)}``,
    ``beta = (alpha-1)/alpha``.

    Bounds every positive sequence with ``r_n - r_{n+1} >= kap r_{n+1}^alpha``
    for all ``r0``.  Per step, either ``r_n^alpha <= s r_{n+1}^alpha`` and
    then ``r_{n+1}^(1-alpha) - r_n^(1-alpha) >= (alpha-1) kap / s`` (mean
    value bound on ``t^(-alpha)``), or ``r_{n+1} < s^(-1/alpha) r_n`` and the
    same difference exceeds ``(s^beta - 1) r_n^(1-alpha) >= (s^beta - 1)
    r0^(1-alpha)``.  Summing gives the bound.

    Unlike :func:`sublinear_lemma_bound`, whose constant grows with ``r0``
    and fails at small ``n`` once ``r0`` is large, this one is valid
    uniformly; the two agree in order ``n^(-1/(alpha-1))``.
    """
    _check_lemma_args(alpha, kap, r0)
    a1 = alpha - 1.0
    beta = a1 / alpha
    w = r0 ** -a1
    D = _bisect_crossing(lambda s: a1 * kap / s,
                         lambda s: w * math.expm1(beta * math.log(s)))
    n = np.asarray(n, dtype=float)
    out = (w + D * n) ** (-1.0 / a1)
    return float(out) if out.ndim == 0 else out


def cprime(p: float, kap: float, r0: float) -> float:
    """``C_p'`` of the sublinear regimes (``p > 2`` or ``p < 0``).

    Equal to ``1/(kappa_tilde delta)`` of the sequence estimate with
    ``alpha = 2(p-1)/p``.
    """
    if not (p > 2 or p < 0):
        raise ValueError("C_p' is defined for p > 2 or p < 0")
    if kap <= 0 or r0 <= 0:
        raise ValueError("kappa and r0 must be positive")
    alpha = alpha_from_p(p)
    return 1.0 / (kappa_tilde(alpha, kap) * lemma_delta(alpha, kap, r0))


def cp_const(p: float, lam: float, L: float, c: float, r0: float) -> float:
    """Iterate constant ``C_p`` (two branches meeting at ``p = 2``)."""
    if p < 1:
        raise ValueError("C_p is defined for p >= 1")
    if not lam > 0 or (L > 0 and not lam < 2.0 / L):
        raise ConfigurationError("stepsize outside ]0, 2/L[")
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    m = 2.0 - lam * L
    if p >= 2:
        return 2 * p * c / m + math.sqrt(2 * lam * r0) / math.sqrt(m) * r0 ** (-1.0 / p)
    return 2 * p * c * r0 ** (1.0 / p) / m * r0**-0.5 + math.sqrt(2 * lam) / math.sqrt(m)


def linear_forward(eps: float, lam: float, L: float) -> float:
    """2-conditioning constant implied by a linear rate ``eps`` of the
    distance to the minimizers: ``(2 - lam L)(1 - eps)^2 / lam``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in ]0, 1[")
    if not lam > 0 or (L > 0 and not lam < 2.0 / L):
        raise ConfigurationError("stepsize outside ]0, 2/L[")
    return (2.0 - lam * L) * (1.0 - eps) ** 2 / lam


def linear_backward(gamma: float, lam: float, L: float = 0.0) -> float:
    """Linear rate ``(1 + lam gamma)^(-1/2)`` of the distance to the
    minimizers for a 2-conditioned function, valid for ``lam <= 1/L``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not lam > 0 or (L > 0 and lam > 1.0 / L * (1 + 1e-15)):
        raise ConfigurationError("linear_backward needs 0 < lam <= 1/L")
    return (1.0 + lam * gamma) ** -0.5


# -- predictions -----------------------------------------------------------------


def regime_of(p: float) -> str:
    if p < 0:
        return "sublinear_neg"
    if 0 <= p < 1:
        raise ValueError("p in [0, 1[ is not a Lojasiewicz exponent")
    if p == 1:
        return "finite"
    if p < 2:
        return "superlinear"
    if p == 2:
        return "qlinear"
    return "sublinear_pos"


@dataclass
class RatePrediction:
    """Predicted gap (and iterate) envelopes for one regime.

    ``envelope(n)`` bounds ``f(x_n) - inf f``; ``iterate_envelope(n)``
    bounds ``||x_n - x_inf||`` (so also ``dist(x_n, argmin f)``) where the
    theory provides one.
    """

    regime: str
    p: float
    kappa: float
    r0: float
    constants: dict = field(default_factory=dict)

    def envelope(self, n):
        n_arr = np.asarray(n, dtype=float)
        k, r0, p = self.kappa, self.r0, self.p
        if self.regime == "finite":
            out = np.where(n_arr >= self.constants["finite_bound_n"], 0.0, r0)
        elif self.regime == "qlinear":
            out = r0 * (1.0 + k) ** -n_arr
        elif self.regime == "superlinear":
            seq = self._superlinear_seq(int(np.max(n_arr)) if n_arr.size else 0)
            out = seq[n_arr.astype(int)]
        elif self.regime in ("sublinear_pos", "sublinear_neg"):
            cpp = self.constants["C_p_prime"]
            with np.errstate(divide="ignore"):
                out = np.where(n_arr >= 1, cpp ** (p / (p - 2)) * n_arr ** (-p / (p - 2)), r0)
            out = np.minimum(out, r0)
        elif self.regime == "worstcase":
            C, d0, lam = (self.constants[x] for x in ("C", "d0", "lam"))
            with np.errstate(divide="ignore"):
                out = np.where(n_arr >= 1, C * d0 * d0 / (2 * lam * np.maximum(n_arr, 1)), r0)
        else:
            raise ValueError(self.regime)
        return float(out) if np.ndim(out) == 0 else out

    def _superlinear_seq(self, n_max: int):
        # e_{n+1} = min(e_n, (e_n/kappa)^(p/(2(p-1)))); the min keeps it nonincreasing
        e = np.empty(n_max + 1)
        e[0] = self.r0
        expo = self.p / (2.0 * (self.p - 1.0))
        for i in range(n_max):
            e[i + 1] = min(e[i], (e[i] / self.kappa) ** expo)
        return e

    def iterate_envelope(self, n):
        """Bound on ``||x_n - x_inf||``; None if the regime has none."""
        Cp = self.constants.get("C_p")
        if Cp is None or self.regime in ("sublinear_neg", "worstcase"):
            return None
        n_arr = np.asarray(n, dtype=float)
        p = self.p
        if self.regime == "finite":
            out = np.where(n_arr >= self.constants["finite_bound_n"], 0.0, np.inf)
        elif self.regime == "qlinear":
            out = Cp * math.sqrt(self.r0) * (1.0 + self.kappa) ** (-(n_arr - 1) / 2.0)
            out = np.where(n_arr >= 1, out, np.inf)
        elif self.regime == "superlinear":
            seq = self._superlinear_seq(int(np.max(n_arr)) if n_arr.size else 0)
            prev = seq[np.maximum(n_arr.astype(int) - 1, 0)]
            out = np.where(n_arr >= 1, Cp * np.sqrt(prev), np.inf)
        else:
            cpp = self.constants["C_p_prime"]
            m = np.maximum(n_arr - 1, 1.0)
            out = np.where(n_arr >= 2, Cp * cpp ** (1.0 / (p - 2)) * m ** (-1.0 / (p - 2)), np.inf)
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self):
        return {"regime": self.regime, "p": self.p, "kappa": self.kappa, "r0": self.r0,
                "constants": dict(self.constants)}


def predict(p: float, kap: float, r0: float, cp: float | None = None,
            cp_prime: float | None = None) -> RatePrediction:
    """Regime and envelopes for a ``p``-Lojasiewicz function.

    ``cp_prime`` defaults to :func:`cprime` in the sublinear regimes; ``cp``
    (the iterate constant) is optional.
    """
    regime = regime_of(p)
    if kap <= 0:
        raise ValueError("kappa must be positive")
    if r0 < 0:
        raise ValueError("r0 must be nonnegative")
    consts: dict = {}
    if cp is not None:
        consts["C_p"] = cp
    if regime == "finite":
        consts["finite_bound_n"] = int(math.ceil(r0 / kap))
    elif regime == "superlinear":
        consts["superlinear_order"] = p / (2.0 * (p - 1.0))
    elif regime == "qlinear":
        consts["epsilon"] = 1.0 / (1.0 + kap)
    else:
        if r0 == 0:
            consts["C_p_prime"] = 0.0
        else:
            consts["C_p_prime"] = cprime(p, kap, r0) if cp_prime is None else cp_prime
    return RatePrediction(regime, p, kap, r0, consts)


def predict_from_certificate(p: float, c: float, lam: float, L: float, r0: float,
                             with_iterates: bool = True) -> RatePrediction:
    """Prediction for FB with stepsize ``lam`` from a ``(p, c)`` certificate."""
    k = kappa(lam, L, c)
    cp = cp_const(p, lam, L, c, r0) if (with_iterates and p >= 1 and r0 > 0) else None
    return predict(p, k, r0, cp=cp)


# -- fitting -------------------------------------------------------------------------


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    npoints: int
    superpolynomial: bool = False


def fit_loglog(series, window_fraction: float = 0.5, start: int = 1,
               stop: int | None = None) -> SlopeFit:
    """Least-squares fit of ``log series_n`` against ``log n``.

    Uses indices in the last ``window_fraction`` of ``[start, stop)`` and
    ignores nonpositive entries.  ``superpolynomial`` flags series whose
    slope keeps steepening along the window (geometric decay).
    """
    v = np.asarray(series, dtype=float)
    stop = v.size if stop is None else min(stop, v.size)
    n = np.arange(v.size, dtype=float)
    first = max(start, stop - int(math.floor(window_fraction * (stop - start))))
    sel = np.arange(first, stop)
    sel = sel[(v[sel] > 0) & (n[sel] > 0) & np.isfinite(v[sel])]
    if sel.size < 5:
        raise ValueError(f"only {sel.size} usable points for a log-log fit")
    x, y = np.log(n[sel]), np.log(v[sel])
    slope, icpt = np.polyfit(x, y, 1)
    # compare the fit on both halves of the window
    half = sel.size // 2
    flag = False
    if half >= 5:
        s1 = np.polyfit(x[:half], y[:half], 1)[0]
        s2 = np.polyfit(x[half:], y[half:], 1)[0]
        flag = bool(s2 < -3 and s2 < 1.25 * s1)
    return SlopeFit(float(slope), float(icpt), int(sel.size), flag)


def loglog_slope(series, window_fraction: float = 0.5) -> float:
    """Log-log slope over the last ``window_fraction`` of the series."""
    return fit_loglog(series, window_fraction).slope


def tail_qfactor(series, fraction: float = 0.25, floor: float = 0.0) -> float:
    """``max gap_{n+1}/gap_n`` over the last ``fraction`` of the ratios
    before the series first drops to ``floor`` or below."""
    v = np.asarray(series, dtype=float)
    dead = np.flatnonzero(v <= floor)
    if dead.size:
        v = v[: dead[0]]
    if v.size < 2:
        return float("nan")
    first = max(0, v.size - 1 - int(math.ceil(fraction * (v.size - 1))))
    a, b = v[first:-1], v[first + 1:]
    ok = (a > floor) & (b > floor)
    if not np.any(ok):
        return float("nan")
    return float(np.max(b[ok] / a[ok]))


def superlinear_order(series, floor: float = 1e-300):
    """Successive ratios ``log s_{n+1} / log s_n`` (entries ``< 1``,
    above ``floor``); they approach the Q-order of convergence."""
    v = np.asarray(series, dtype=float)
    ok = (v[:-1] > floor) & (v[1:] > floor) & (v[:-1] < 1) & (v[1:] < 1)
    return np.log(v[1:][ok]) / np.log(v[:-1][ok])


# -- certification --------------------------------------------------------------------


@dataclass
class CertReport:
    """Verdict of a trace against a prediction.

    ``q_check`` concerns the one-step ratio, ``r_check`` the closed
    envelope.
    """

    passed: bool
    first_violation: int | None = None
    regime: str = ""
    measured_slope: float | None = None
    measured_qfactor: float | None = None
    q_check: bool | None = None
    r_check: bool | None = None
    iterate_check: bool | None = None
    checkpoints: dict = field(default_factory=dict)
    detail: str = ""

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return {
            "pass": self.passed, "first_violation": self.first_violation,
            "regime": self.regime, "measured_slope": self.measured_slope,
            "measured_qfactor": self.measured_qfactor, "q_check": self.q_check,
            "r_check": self.r_check, "iterate_check": self.iterate_check,
            "checkpoints": self.checkpoints, "detail": self.detail,
        }


def _first(mask, offset=0):
    idx = np.flatnonzero(mask)
    return None if idx.size == 0 else int(idx[0]) + offset


def _checkpoints(n_max: int):
    pts = sorted({int(v) for v in np.unique(np.round(np.logspace(0, math.log10(max(n_max, 1)), 9)))})
    return [k for k in pts if 1 <= k <= n_max]


def certify_trace(trace, prediction: RatePrediction, tol: float = 1e-10,
                  gap_floor: float = 0.0) -> CertReport:
    """Check a trace against a predicted regime.

    ``finite``: ``gap_n <= 1e-13 r0`` for ``n >= finite_bound_n``.
    ``qlinear``: one-step ratio (Q) and closed envelope (R).
    ``superlinear``: ``gap_{n+1} <= (gap_n/kappa)^(p/(2(p-1)))``.
    sublinear: ``gap_n <= envelope(n) (1 + 1e-9)`` for ``n >= 1``.
    Iterate envelopes are checked against ``dist`` when both exist.
    ``gap_floor`` excludes gaps that have reached rounding level from the
    Q-check.
    """
    gap = np.asarray(trace.gap if hasattr(trace, "gap") else trace, dtype=float)
    dist = getattr(trace, "dist", None)
    pr = prediction
    N = gap.size - 1
    rep = CertReport(True, regime=pr.regime)
    n = np.arange(gap.size)
    r0 = pr.r0
    if abs(gap[0] - r0) > 1e-9 * (1 + abs(r0)) and pr.regime != "worstcase":
        raise ValueError(f"prediction r0={r0} does not match trace gap[0]={gap[0]}")

    if pr.regime == "finite":
        nb = pr.constants["finite_bound_n"]
        bad = (n >= nb) & (gap > 1e-13 * r0)
        rep.first_violation = _first(bad)
        rep.r_check = rep.first_violation is None
    elif pr.regime == "qlinear":
        eps = 1.0 / (1.0 + pr.kappa)
        live = gap[:-1] > gap_floor
        qbad = live & (gap[1:] > eps * gap[:-1] + tol * (1.0 + gap[:-1]) * eps)
        env = pr.envelope(n)
        rbad = (gap > gap_floor) & (gap > env * (1 + 1e-9))
        rep.q_check = not np.any(qbad)
        rep.r_check = not np.any(rbad)
        cands = [k for k in (_first(qbad, 1), _first(rbad)) if k is not None]
        rep.first_violation = min(cands) if cands else None
    elif pr.regime == "superlinear":
        expo = pr.p / (2.0 * (pr.p - 1.0))
        with np.errstate(over="ignore"):
            rhs = (np.maximum(gap[:-1], 0.0) / pr.kappa) ** expo
        qbad = gap[1:] > rhs + tol * (1.0 + rhs)
        rep.q_check = not np.any(qbad)
        rep.first_violation = _first(qbad, 1)
    elif pr.regime in ("sublinear_pos", "sublinear_neg", "worstcase"):
        env = pr.envelope(n)
        bad = (n >= 1) & (gap > gap_floor) & (gap > env * (1.0 + 1e-9))
        rep.r_check = not np.any(bad)
        rep.first_violation = _first(bad)
    else:
        raise ValueError(f"unknown regime {pr.regime!r}")

    if dist is not None and pr.regime not in ("worstcase",):
        ienv = pr.iterate_envelope(n)
        if ienv is not None:
            ibad = dist > ienv * (1.0 + 1e-9) + 1e-12
            rep.iterate_check = not np.any(ibad)
            k = _first(ibad)
            if k is not None and (rep.first_violation is None or k < rep.first_violation):
                rep.first_violation = k
                rep.detail = f"iterate envelope exceeded at n={k}"

    rep.passed = rep.first_violation is None
    if not rep.passed and not rep.detail:
        rep.detail = f"{pr.regime} envelope exceeded at n={rep.first_violation}"
    try:
        rep.measured_slope = fit_loglog(gap).slope
    except ValueError:
        rep.measured_slope = None
    q = tail_qfactor(gap, floor=gap_floor)
    rep.measured_qfactor = None if math.isnan(q) else q
    rep.checkpoints = {
        str(k): {"gap": float(gap[k]), "envelope": float(pr.envelope(k))} for k in _checkpoints(N)
    }
    return rep


def certify_general_descent(gap, step, resid, a: float, b: float, c: float, p: float,
                            tol: float = 1e-10):
    """Certify an externally produced descent trace.

    Checks sufficient decrease ``a step_{n+1}^2 <= gap_n - gap_{n+1}`` and
    relative error ``resid_{n+1} <= b step_{n+1}``, then the rate predicted
    with ``kappa = a/(b^2 c^2)`` and ``r0 = gap_0``.

    Returns ``(CertReport, hypotheses)`` where ``hypotheses`` maps each
    assumption to its first violating index (or None).
    """
    gap = np.asarray(gap, dtype=float)
    step = np.asarray(step, dtype=float)
    resid = np.asarray(resid, dtype=float)
    dec = gap[:-1] - gap[1:]
    h1 = _first(a * step[1:] ** 2 > dec + tol * (1.0 + np.abs(gap[:-1])), 1)
    h2 = _first(resid[1:] > b * step[1:] + tol * (1.0 + b * step[1:]), 1)
    pred = predict(p, kappa_general(a, b, c), float(gap[0]))
    rep = certify_trace(gap, pred, tol=tol)
    hyp = {"sufficient_decrease": h1, "relative_error": h2}
    viol = [k for k in (h1, h2, rep.first_violation) if k is not None]
    if h1 is not None or h2 is not None:
        rep.passed = False
        rep.first_violation = min(viol)
        which = "sufficient decrease" if h1 == rep.first_violation else "relative error"
        rep.detail = f"descent hypothesis ({which}) violated at n={rep.first_violation}"
    return rep, hyp


def superlinear_bounds_check(dist=None, gap=None, p: float = 1.5, lam: float = 1.0,
                             gamma_sub: float | None = None, gamma_cond: float | None = None,
                             tol: float = 1e-12):
    """Error-bound inequalities of the superlinear regime along a sequence.

    With ``gamma_sub``: ``gamma_sub dist_{n+1}^(p-1) <= (2/lam) dist_n``.
    With ``gamma_cond``:
    ``gap_{n+1}^(p-1) <= (p/gamma_cond)^2 (2/lam)^p gap_n``.
    Returns a dict of first violating indices (None when they hold).
    """
    if not 1 < p < 2:
        raise ValueError("superlinear bounds need p in ]1, 2[")
    out = {}
    if gamma_sub is not None:
        if dist is None:
            raise ValueError("distance series required")
        d = np.asarray(dist, dtype=float)
        lhs = gamma_sub * np.maximum(d[1:], 0.0) ** (p - 1.0)
        rhs = (2.0 / lam) * d[:-1]
        out["subregular"] = _first(lhs > rhs + tol * (1.0 + rhs), 1)
    if gamma_cond is not None:
        if gap is None:
            raise ValueError("gap series required")
        g = np.asarray(gap, dtype=float)
        lhs = np.maximum(g[1:], 0.0) ** (p - 1.0)
        rhs = (p / gamma_cond) ** 2 * (2.0 / lam) ** p * g[:-1]
        out["conditioned"] = _first(lhs > rhs + tol * (1.0 + rhs), 1)
    return out


def power_tail_lower_constant(alpha: float, lam: float, x0: float) -> float:
    """Constant ``C`` with ``gap_n >= C^(-alpha) n^(-alpha/(2+alpha))`` for
    gradient descent on the power-tail example started at ``x0 >= 1``.

    Along the orbit ``x_{n+1} = x_n (1 + e_n)`` with
    ``e_n = lam alpha x_n^(-alpha-2) <= e_0``; convexity of
    ``t -> (1+t)^(alpha+2)`` gives ``x_{n+1}^(alpha+2) <= x_n^(alpha+2) + lam alpha K``
    with ``K = ((1+e_0)^(alpha+2) - 1)/e_0``, hence
    ``C = (x0^(alpha+2) + lam alpha K)^(1/(alpha+2))`` for ``n >= 1``.
    """
    if x0 < 1:
        raise ValueError("the orbit must start on the power branch (x0 >= 1)")
    e0 = lam * alpha * x0 ** (-alpha - 2.0)
    K = ((1.0 + e0) ** (alpha + 2.0) - 1.0) / e0
    return (x0 ** (alpha + 2.0) + lam * alpha * K) ** (1.0 / (alpha + 2.0))


# -- regime table -------------------------------------------------------------------------

_TABLE = [
    ("inf f > -inf", "o(1)", "---", "counterexample_neg_alpha"),
    ("p in ]-inf,0[", "O(n^(p/(2-p)))", "---", "counterexample_neg_alpha"),
    ("argmin f nonempty", "o(1/n)", "decreasing, o(1) in finite dimension", "lasso_small"),
    ("p in ]2,+inf[", "O(n^(-p/(p-2)))", "O(n^(-1/(p-2)))", "landweber_source"),
    ("p = 2", "Q-linear with eps=1/(1+kappa)", "R-linear with eps=1/(1+kappa)",
     "strongly_convex_quadratic"),
    ("p in ]1,2[", "Q-superlinear of order 1/(p-1)", "R-superlinear of order 1/(p-1)",
     "norm_pow_p"),
    ("p = 1", "finite", "finite", "norm_pow_p"),
]


def regime_table():
    """Rows ``(assumption, gap rate, iterate rate, experiment)``, from the
    weakest assumption to the strongest."""
    return [dict(zip(("assumption", "values", "iterates", "experiment"), r)) for r in _TABLE]
