"""Geometric certificates: growth (conditioning), metric subregularity and
Lojasiewicz inequalities with explicit constants over explicit sets.

A certificate claims, on its domain ``Omega``, one of

* ``conditioned``:  ``(gamma/p) dist(x, S)^p <= f(x) - inf f``
* ``subregular``:   ``gamma dist(x, S)^(p-1) <= ||df(x)||_-``
* ``lojasiewicz``:  ``(f(x) - inf f)^(1-1/p) <= c ||df(x)||_-``

with ``S = argmin f``.  Only the Lojasiewicz form accepts ``p < 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import domains as dom
from .domains import DomainDesc
from .funcs import CompositeProblem
from .linops import (
    iter_supports,
    min_eig,
    smallest_positive_eig,
)
from .solver import check_fb_invariance

__all__ = [
    "KINDS",
    "GeometryCertificate",
    "Estimate",
    "InvarianceAttestation",
    "ValidationResult",
    "EllipticityReport",
    "convert_forward",
    "to_lojasiewicz",
    "attest_invariance",
    "convert_reverse_on_invariant",
    "exact_cert_strongly_convex",
    "exact_cert_least_squares",
    "exact_cert_norm_pow",
    "exact_cert_l1",
    "exact_cert_counterexample",
    "estimate_conditioning",
    "estimate_subregularity",
    "estimate_lojasiewicz",
    "check_certificate",
    "hierarchy_restrict",
    "validate_smoothness_consistency",
    "ellipticity_check",
    "conditioning_from_ellipticity",
    "certificate_from_dict",
]

KINDS = ("conditioned", "subregular", "lojasiewicz")
PROVENANCE = ("exact", "estimated", "converted")


@dataclass(frozen=True)
class GeometryCertificate:
    """A claimed inequality with exponent ``p`` and constant on a domain."""

    kind: str
    p: float
    constant: float
    domain: DomainDesc | None = None
    provenance: str = "exact"
    note: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        if self.provenance not in PROVENANCE:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        p = self.p
        if p < 0:
            if self.kind != "lojasiewicz":
                raise ValueError("negative exponents are only meaningful for lojasiewicz")
        elif p < 1:
            raise ValueError("exponent must lie in ]-inf, 0[ or [1, +inf[")
        if not self.constant > 0:
            raise ValueError("constant must be positive")

    def holds_at(self, problem: CompositeProblem, xs, tol: float = 1e-10):
        """Boolean mask: does the defining inequality hold at each point?"""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        gap = np.maximum(problem.gap(xs), 0.0)
        p, k = self.p, self.constant
        if self.kind == "conditioned":
            d = problem.dist(xs)
            lhs, rhs = (k / p) * d**p, gap
        elif self.kind == "subregular":
            d = problem.dist(xs)
            lhs, rhs = k * d ** (p - 1.0), problem.min_norm_subgrad(xs)
        else:
            # at p = 1 the left side is 1 off the minimizers and 0 on them
            lhs = np.where(gap > 0, gap ** (1.0 - 1.0 / p), 0.0)
            rhs = k * problem.min_norm_subgrad(xs)
        return lhs <= rhs + tol * (1.0 + np.abs(rhs))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "p": self.p, "constant": self.constant,
            "domain": None if self.domain is None else self.domain.to_dict(),
            "provenance": self.provenance,
        }


def certificate_from_dict(d: dict, domain: DomainDesc | None = None) -> GeometryCertificate:
    """Rebuild a certificate; the domain sampler cannot round-trip through
    JSON, so a live descriptor may be passed in."""
    return GeometryCertificate(d["kind"], float(d["p"]), float(d["constant"]), domain,
                               d.get("provenance", "exact"))


# -- conversions ------------------------------------------------------------------


def convert_forward(cert: GeometryCertificate) -> GeometryCertificate:
    """One step down the chain conditioned -> subregular -> lojasiewicz."""
    if cert.p < 1:
        raise ValueError("conversions need p >= 1")
    if cert.kind == "conditioned":
        return replace(cert, kind="subregular", constant=cert.constant / cert.p,
                       provenance="converted")
    if cert.kind == "subregular":
        return replace(cert, kind="lojasiewicz", constant=cert.constant ** (-1.0 / cert.p),
                       provenance="converted")
    raise ValueError("a lojasiewicz certificate has no forward conversion")


def to_lojasiewicz(cert: GeometryCertificate) -> GeometryCertificate:
    while cert.kind != "lojasiewicz":
        cert = convert_forward(cert)
    return cert


@dataclass(frozen=True)
class InvarianceAttestation:
    """Record that a domain passed the sampled FB-invariance test.

    FB-invariance stands in for invariance under the subgradient flow,
    which is what the reverse conversion formally needs; ``assumption``
    states this explicitly.
    """

    domain: dict
    passed: bool
    samples: int
    lambdas: tuple
    seed: int
    assumption: str = "FB-invariance used as a proxy for invariance under the subgradient flow"


def attest_invariance(domain: DomainDesc, problem: CompositeProblem, lambdas,
                      samples: int = 200, seed: int = 0) -> InvarianceAttestation:
    rep = check_fb_invariance(domain, problem, lambdas, samples=samples, seed=seed)
    return InvarianceAttestation(domain.to_dict(), rep.passed, samples, tuple(lambdas), seed)


def convert_reverse_on_invariant(cert: GeometryCertificate,
                                 attestation: InvarianceAttestation | None) -> GeometryCertificate:
    """Lojasiewicz -> conditioning with ``gamma = c^(-p) p^(1-p)``, allowed
    only on an attested invariant domain."""
    if cert.kind != "lojasiewicz" or cert.p < 1:
        raise ValueError("reverse conversion needs a lojasiewicz certificate with p >= 1")
    if attestation is None or not attestation.passed:
        raise ValueError("reverse conversion needs a passing invariance attestation")
    p, c = cert.p, cert.constant
    return replace(cert, kind="conditioned", constant=c ** (-p) * p ** (1.0 - p),
                   provenance="converted", note=attestation.assumption)


# -- exact certificates ------------------------------------------------------------


def exact_cert_strongly_convex(gamma: float, dim: int = 1):
    """2-conditioning ``gamma`` and the sharp 2-Lojasiewicz constant
    ``1/sqrt(2 gamma)`` of a ``gamma``-strongly convex function."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    W = dom.whole_space(dim)
    return (GeometryCertificate("conditioned", 2.0, gamma, W),
            GeometryCertificate("lojasiewicz", 2.0, 1.0 / math.sqrt(2.0 * gamma), W))


def exact_cert_least_squares(A) -> GeometryCertificate | None:
    """2-conditioning of ``0.5 ||A x - y||^2`` on the whole space with the
    smallest positive eigenvalue of ``A* A``; None for ``A = 0``."""
    if A.is_zero():
        return None
    gam = smallest_positive_eig(A)
    if gam <= 0:
        return None
    return GeometryCertificate("conditioned", 2.0, gam, dom.whole_space(A.cols))


def exact_cert_norm_pow(p: float, weight: float = 1.0, dim: int = 1):
    """Certificates of ``weight ||x||^p``: the growth ratio is constant, so
    ``gamma = p weight`` and ``c = weight^(-1/p) / p``."""
    W = dom.whole_space(dim)
    return (GeometryCertificate("conditioned", p, p * weight, W),
            GeometryCertificate("lojasiewicz", p, weight ** (-1.0 / p) / p, W))


def exact_cert_l1(alpha: float, dim: int = 1):
    """``alpha ||x||_1`` is 1-conditioned with ``gamma = alpha`` and
    1-Lojasiewicz with ``c = 1/alpha``."""
    W = dom.whole_space(dim)
    return (GeometryCertificate("conditioned", 1.0, alpha, W),
            GeometryCertificate("lojasiewicz", 1.0, 1.0 / alpha, W))


def exact_cert_counterexample(alpha: float, upper: float = 1e3) -> GeometryCertificate:
    """``(-alpha)``-Lojasiewicz certificate with ``c = 1/alpha`` on
    ``[1, +inf[`` for the power-tail example (the ratio is constant there).

    Sampling is restricted to ``[1, upper]``.
    """
    D = dom.half_space([1.0], 1.0, center=[0.5 * (1.0 + upper)], radius=0.5 * (upper - 1.0))
    return GeometryCertificate("lojasiewicz", -alpha, 1.0 / alpha, D)


# -- estimators ----------------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    """Sampled constant.

    A sampled ``gamma`` (min of the ratio) can only be larger than the best
    constant on the whole set, and a sampled ``c`` (max) only smaller;
    ``side`` says which.
    """

    value: float
    samples: int
    used: int
    seed: int
    side: str
    all_minimizers: bool = False

    def __float__(self):
        return float(self.value)


def _samples(problem, domain, n_samples, seed):
    xs = domain.sample(n_samples, seed=seed)
    ok = np.asarray(problem.in_domain(xs), dtype=bool)
    return xs[ok]


def estimate_conditioning(problem: CompositeProblem, p: float, domain: DomainDesc,
                          n_samples: int = 10_000, seed: int = 0) -> Estimate:
    """``p min (f - inf f)/dist^p`` over samples with ``dist > 1e-9``."""
    if not problem.has_argmin:
        raise ValueError("conditioning needs an argmin oracle")
    xs = _samples(problem, domain, n_samples, seed)
    d = problem.dist(xs)
    keep = d > 1e-9
    if not np.any(keep):
        return Estimate(math.inf, n_samples, 0, seed, "at least the best gamma", True)
    ratio = np.maximum(problem.gap(xs[keep]), 0.0) / d[keep] ** p
    return Estimate(float(p * ratio.min()), n_samples, int(keep.sum()), seed,
                    "at least the best gamma")


def estimate_subregularity(problem: CompositeProblem, p: float, domain: DomainDesc,
                           n_samples: int = 10_000, seed: int = 0) -> Estimate:
    """``min ||df||_- / dist^(p-1)`` over samples with ``dist > 1e-9``."""
    if not problem.has_argmin:
        raise ValueError("subregularity needs an argmin oracle")
    xs = _samples(problem, domain, n_samples, seed)
    d = problem.dist(xs)
    keep = d > 1e-9
    if not np.any(keep):
        return Estimate(math.inf, n_samples, 0, seed, "at least the best gamma", True)
    ratio = problem.min_norm_subgrad(xs[keep]) / d[keep] ** (p - 1.0)
    return Estimate(float(ratio.min()), n_samples, int(keep.sum()), seed,
                    "at least the best gamma")


def estimate_lojasiewicz(problem: CompositeProblem, p: float, domain: DomainDesc,
                         n_samples: int = 10_000, seed: int = 0) -> Estimate:
    """``max (f - inf f)^(1-1/p) / ||df||_-`` over samples with
    ``||df||_- > 1e-12``."""
    if 0 <= p < 1:
        raise ValueError("exponent must lie in ]-inf, 0[ or [1, +inf[")
    xs = _samples(problem, domain, n_samples, seed)
    r = problem.min_norm_subgrad(xs)
    gap = np.maximum(problem.gap(xs), 0.0)
    keep = (r > 1e-12) & (gap > 0)
    if not np.any(keep):
        return Estimate(0.0, n_samples, 0, seed, "at most the best c", True)
    ratio = gap[keep] ** (1.0 - 1.0 / p) / r[keep]
    return Estimate(float(ratio.max()), n_samples, int(keep.sum()), seed, "at most the best c")


def check_certificate(cert: GeometryCertificate, problem: CompositeProblem,
                      n_samples: int = 10_000, seed: int = 0, tol: float = 1e-10):
    """Sample the certificate domain and test the inequality.

    Returns ``(passed, worst_point_or_None)``.
    """
    if cert.kind in ("conditioned", "subregular") and not problem.has_argmin:
        raise ValueError(f"{cert.kind} certificates need a nonempty argmin oracle")
    if cert.p < 0 and not math.isfinite(problem.inf_value):
        raise ValueError("negative exponents need inf f > -inf")
    if cert.domain is None:
        raise ValueError("certificate has no domain to sample")
    xs = _samples(problem, cert.domain, n_samples, seed)
    ok = cert.holds_at(problem, xs, tol=tol)
    if np.all(ok):
        return True, None
    return False, xs[int(np.flatnonzero(~ok)[0])]


# -- hierarchy and smoothness ---------------------------------------------------------


def hierarchy_restrict(cert: GeometryCertificate, p_prime: float, delta: float | None = None,
                       r: float | None = None) -> GeometryCertificate:
    """Raise the exponent to ``p_prime >= p`` on a bounded piece of the domain.

    ``delta`` bounds the distance to the minimizers (conditioned and
    subregular); ``r`` bounds the gap (lojasiewicz).  Constants:
    ``gamma (p'/p) delta^(p-p')`` for conditioning, ``gamma delta^(p-p')``
    for subregularity and ``c r^(1/p - 1/p')`` for Lojasiewicz.
    """
    p = cert.p
    if not p_prime >= p >= 1:
        raise ValueError("need p_prime >= p >= 1")
    if p_prime == p:
        return cert
    if cert.kind == "lojasiewicz":
        if r is None or r <= 0:
            raise ValueError("a gap bound r is required")
        k = cert.constant * r ** (1.0 / p - 1.0 / p_prime)
        bound = {"r": r}
    else:
        if delta is None or delta <= 0:
            raise ValueError("a distance bound delta is required")
        k = cert.constant * delta ** (p - p_prime)
        if cert.kind == "conditioned":
            k *= p_prime / p
        bound = {"delta": delta}
    D = cert.domain
    if D is not None:
        D = replace(D, params={**D.params, "restricted": bound})
    return GeometryCertificate(cert.kind, p_prime, k, D, "converted")


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_smoothness_consistency(cert: GeometryCertificate, alpha: float,
                                    L_holder: float) -> ValidationResult:
    """Reject growth claims incompatible with an ``alpha``-Holder gradient.

    A function with ``L``-Holder gradient cannot grow faster than
    ``dist^(alpha+1)``, so ``p >= alpha + 1``, and at ``p = alpha + 1`` the
    constant cannot exceed ``L``.
    """
    if cert.kind != "conditioned":
        raise ValueError("smoothness consistency concerns conditioning certificates")
    p, g = cert.p, cert.constant
    edge = alpha + 1.0
    if p < edge - 1e-12:
        return ValidationResult(False, f"p={p:g} < alpha+1={edge:g}")
    if abs(p - edge) <= 1e-12 and g > L_holder * (1 + 1e-12):
        return ValidationResult(False, f"gamma={g:g} exceeds L={L_holder:g} at p=alpha+1")
    return ValidationResult(True)


# -- ellipticity --------------------------------------------------------------------------


@dataclass
class EllipticityReport:
    ok: bool
    min_value: float
    counterexample: np.ndarray | None = None
    exact: bool = False

    def __bool__(self):
        return self.ok


def _restricted_min(S, supports):
    best, arg = math.inf, None
    for I in supports:
        v = min_eig(S[np.ix_(I, I)])
        if v < best:
            best, arg = v, I
    return best, arg


def _eigvec_on(S, I):
    sub = S[np.ix_(I, I)]
    w, V = np.linalg.eigh(sub)
    d = np.zeros(S.shape[0])
    d[list(I)] = V[:, 0]
    return d


def ellipticity_check(S, cone: DomainDesc, gamma: float, n_samples: int = 2000,
                      seed: int = 0, tol: float = 1e-10) -> EllipticityReport:
    """Is ``<S d, d> >= gamma ||d||^2`` on the cone?

    Exact (restricted eigenvalues) for support subspaces and the s-sparse
    cone; sampled unit directions otherwise.
    """
    S = np.asarray(S, dtype=float)
    if cone.kind == "support_subspace":
        I = tuple(cone.params["indices"])
        if not I:
            raise ValueError("empty support")
        v, arg = _restricted_min(S, [I])
        exact = True
    elif cone.kind == "cone_s_sparse":
        v, arg = _restricted_min(S, iter_supports(S.shape[0], cone.params["s"]))
        exact = True
    else:
        d = cone.sample(n_samples, seed=seed)
        nrm = np.linalg.norm(d, axis=1)
        d = d[nrm > 0] / nrm[nrm > 0, None]
        q = np.sum((d @ S) * d, axis=1)
        i = int(np.argmin(q))
        if q[i] >= gamma - tol:
            return EllipticityReport(True, float(q[i]))
        return EllipticityReport(False, float(q[i]), d[i])
    if v >= gamma - tol:
        return EllipticityReport(True, float(v), exact=exact)
    return EllipticityReport(False, float(v), _eigvec_on(S, arg), exact=exact)


def conditioning_from_ellipticity(gamma: float, gamma_prime: float | None = None,
                                  L_hess: float | None = None,
                                  cone: DomainDesc | None = None, center=None):
    """2-conditioning on ``center + (K intersected with a delta-ball)`` from
    ``gamma``-ellipticity of the Hessian at a minimizer on the cone ``K``.

    Returns ``(certificate, delta)``.  With a constant Hessian
    (``L_hess=None``) the full constant and an unbounded radius are kept;
    otherwise ``delta = (gamma - gamma')/L_hess``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if L_hess is None:
        gp, delta = gamma, math.inf
    else:
        if gamma_prime is None or not 0 < gamma_prime < gamma:
            raise ValueError("need 0 < gamma' < gamma")
        if L_hess <= 0:
            raise ValueError("Hessian Lipschitz constant must be positive")
        gp, delta = gamma_prime, (gamma - gamma_prime) / L_hess
    D = cone
    if cone is not None and center is not None:
        if cone.kind == "support_subspace":
            D = dom.support_subspace(cone.params["indices"], cone.dim, center=center)
        if math.isfinite(delta):
            D = D.intersect(dom.ball(center, delta))
    return GeometryCertificate("conditioned", 2.0, gp, D), delta
