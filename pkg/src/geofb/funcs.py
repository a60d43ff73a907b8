"""Smooth terms, prox-friendly terms and composite problems ``f = g + h``.

Every oracle works on the last axis of its argument, so ``value`` on an
array of shape ``(m, d)`` returns ``m`` values.  That is what lets the
solver and the estimators evaluate whole blocks of points at once.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .linops import (
    DenseOperator,
    DiagonalOperator,
    gram_norm,
    operator_from_dict,
    pinv_apply,
)

__all__ = [
    "DomainError",
    "ConfigurationError",
    "LeastSquares",
    "Quadratic",
    "ScalarPowerTail",
    "ZeroSmooth",
    "L1",
    "NormPow",
    "IndicatorBall",
    "ZeroProx",
    "PointArgmin",
    "AffineArgmin",
    "NumericArgmin",
    "EmptyArgmin",
    "CompositeProblem",
    "prox_l1",
    "prox_norm_pow",
    "radial_root",
    "min_norm_subgrad",
    "fb_map",
    "make_least_squares",
    "make_lasso",
    "make_norm_pow",
    "make_l1",
    "make_quadratic",
    "make_counterexample_neg",
    "problem_from_dict",
    "reference_solve",
]


class DomainError(ValueError):
    """A point lies outside ``dom g``."""


class ConfigurationError(ValueError):
    """Invalid solver or problem parameters (for instance a step size)."""


def _norm(x):
    return np.linalg.norm(x, axis=-1)


# -- scalar radial prox equation ---------------------------------------------


def radial_root(r: float, t: float, p: float, tol: float = 1e-14) -> float:
    """Root ``s >= 0`` of ``s + t p s**(p-1) = r``.

    The left-hand side is strictly increasing on ``[0, r]``, so the root is
    bracketed.  Newton steps start from the side where they are monotone
    (the upper bound for ``p >= 2``, a lower bound for ``p < 2``) and fall
    back to bisection whenever a step leaves the bracket.
    """
    if r <= 0.0:
        return 0.0
    if p == 1.0:
        return max(r - t, 0.0)
    if p == 2.0:
        return r / (1.0 + 2.0 * t)
    tp = t * p
    q = p - 1.0
    hi = min(r, (r / tp) ** (1.0 / q))
    lo = min(0.5 * r, (0.5 * r / tp) ** (1.0 / q))
    if hi == 0.0:
        return 0.0
    s = hi if p > 2.0 else lo
    if s == 0.0:
        s = hi
    for _ in range(200):
        phi = s + tp * s**q - r
        if phi == 0.0:
            return s
        if phi > 0.0:
            hi = s
        else:
            lo = s
        dphi = 1.0 + tp * q * s ** (q - 1.0) if s > 0.0 else math.inf
        step = phi / dphi
        new = s - step
        if not lo <= new <= hi or not math.isfinite(new):
            new = 0.5 * (lo + hi)
        if abs(new - s) <= tol * max(new, 1e-300):
            return new
        s = new
    return s


# -- prox operators -------------------------------------------------------


def prox_l1(x, t):
    """Soft thresholding: prox of ``t ||.||_1``."""
    if t <= 0:
        raise ConfigurationError("threshold must be positive")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def prox_norm_pow(x, t, p):
    """Prox of ``t ||.||**p`` (Euclidean norm), ``p >= 1``.

    The prox is radial: the output is ``s x / ||x||`` where ``s`` solves
    :func:`radial_root`.
    """
    if t <= 0:
        raise ConfigurationError("prox parameter must be positive")
    if p < 1:
        raise ConfigurationError("exponent must be >= 1")
    x = np.asarray(x, dtype=float)
    if p == 2.0:
        return x / (1.0 + 2.0 * t)
    r = _norm(x)
    if r.ndim == 0:
        r = float(r)
        if r == 0.0:
            return np.zeros_like(x)
        return x * (radial_root(r, t, p) / r)
    s = np.array([radial_root(float(ri), t, p) for ri in r.ravel()]).reshape(r.shape)
    scale = np.divide(s, r, out=np.zeros_like(r), where=r > 0)
    return x * scale[..., None]


# -- smooth terms -------------------------------------------------------------


class SmoothFn:
    """Differentiable convex term with Lipschitz gradient."""

    kind = "abstract"
    lipschitz: float = 0.0

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class ZeroSmooth(SmoothFn):
    kind = "zero"
    lipschitz = 0.0

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1])

    def grad(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def to_dict(self):
        return {"kind": "zero"}


class LeastSquares(SmoothFn):
    """``h(x) = 0.5 ||A x - y||**2``."""

    kind = "least_squares"

    def __init__(self, A, y):
        self.A = A
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != (A.rows,):
            raise ValueError(f"data has shape {self.y.shape}, operator has {A.rows} rows")
        self.lipschitz = gram_norm(A)

    def residual(self, x):
        return self.A.apply(x) - self.y

    def value(self, x):
        r = self.residual(x)
        return 0.5 * np.sum(r * r, axis=-1)

    def grad(self, x):
        return self.A.adjoint_apply(self.residual(x))

    def to_dict(self):
        return {"kind": "least_squares", "A": self.A.to_dict(), "y": self.y.tolist()}


class Quadratic(SmoothFn):
    """``h(x) = 0.5 <Q x, x> - <b, x>`` with ``Q`` symmetric positive semidefinite."""

    kind = "quadratic"

    def __init__(self, Q, b=None):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-14 * max(1.0, np.abs(Q).max())):
            raise ValueError("Q must be symmetric")
        self.Q = Q
        self.b = np.zeros(Q.shape[0]) if b is None else np.asarray(b, dtype=float)
        ev = np.linalg.eigvalsh(Q)
        if ev[0] < -1e-12 * max(1.0, ev[-1]):
            raise ValueError("Q must be positive semidefinite")
        self.lipschitz = float(max(ev[-1], 0.0))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum((x @ self.Q) * x, axis=-1) - x @ self.b

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.Q - self.b

    def to_dict(self):
        return {"kind": "quadratic", "Q": self.Q.tolist(), "b": self.b.tolist()}


class ScalarPowerTail(SmoothFn):
    """One-dimensional ``x**-alpha`` for ``x >= 1``, linear continuation below.

    Convex, bounded below by 0 and without minimizer; its derivative is
    ``alpha (1 + alpha)``-Lipschitz.
    """

    kind = "scalar_power_tail"

    def __init__(self, alpha: float):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = float(alpha)
        self.lipschitz = self.alpha * (1.0 + self.alpha)

    def value(self, x):
        x = np.asarray(x, dtype=float)[..., 0]
        a = self.alpha
        safe = np.maximum(x, 1.0)
        return np.where(x >= 1.0, safe**-a, -a * x + 1.0 + a)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        a = self.alpha
        safe = np.maximum(x, 1.0)
        return np.where(x >= 1.0, -a * safe ** (-a - 1.0), -a)

    def to_dict(self):
        return {"kind": "scalar_power_tail", "alpha": self.alpha}


# -- prox-friendly terms ------------------------------------------------------


class ProxFn:
    """Closed convex term with a computable prox.

    ``subgrad_residual(x, v)`` returns ``dist(-v, dg(x))``, the norm of the
    least-norm element of ``dg(x) + v``.
    """

    kind = "abstract"

    def value(self, x):
        raise NotImplementedError

    def prox(self, lam, x):
        raise NotImplementedError

    def subgrad_residual(self, x, v):
        raise NotImplementedError

    def in_domain(self, x):
        x = np.asarray(x, dtype=float)
        return np.ones(x.shape[:-1], dtype=bool)

    def to_dict(self) -> dict:
        raise NotImplementedError


class ZeroProx(ProxFn):
    kind = "zero"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1])

    def prox(self, lam, x):
        return np.array(x, dtype=float)

    def subgrad_residual(self, x, v):
        return _norm(np.asarray(v, dtype=float))

    def to_dict(self):
        return {"kind": "zero"}


class L1(ProxFn):
    """``g(x) = alpha ||x||_1``."""

    kind = "l1"

    def __init__(self, alpha: float = 1.0):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = float(alpha)

    def value(self, x):
        return self.alpha * np.sum(np.abs(np.asarray(x, dtype=float)), axis=-1)

    def prox(self, lam, x):
        return prox_l1(x, lam * self.alpha)

    def subgrad_residual(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        a = self.alpha
        # sign(0) never enters: zero coordinates use the interval distance
        r = np.where(x != 0.0, v + a * np.sign(x), np.maximum(np.abs(v) - a, 0.0))
        return _norm(r)

    def to_dict(self):
        return {"kind": "l1", "alpha": self.alpha}


class NormPow(ProxFn):
    """``g(x) = weight ||x||**p`` with ``p >= 1``."""

    kind = "norm_pow"

    def __init__(self, p: float, weight: float = 1.0):
        if p < 1:
            raise ValueError("exponent must be >= 1")
        if weight <= 0:
            raise ValueError("weight must be positive")
        self.p = float(p)
        self.weight = float(weight)

    def value(self, x):
        return self.weight * _norm(np.asarray(x, dtype=float)) ** self.p

    def prox(self, lam, x):
        return prox_norm_pow(x, lam * self.weight, self.p)

    def subgrad_residual(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        r = _norm(x)
        w, p = self.weight, self.p
        scale = np.divide(
            w * p * r ** (p - 1.0), r, out=np.zeros_like(r), where=r > 0
        )
        smooth = _norm(v + scale[..., None] * x)
        at_zero = np.maximum(_norm(v) - w, 0.0) if p == 1.0 else _norm(v)
        return np.where(r > 0, smooth, at_zero)

    def to_dict(self):
        return {"kind": "norm_pow", "p": self.p, "weight": self.weight}


class IndicatorBall(ProxFn):
    """Indicator of the closed Euclidean ball of radius ``radius`` at 0.

    Points with norm within a relative ``1e-12`` of the radius count as on
    the boundary, so projections are accepted despite round-off.
    """

    kind = "indicator_ball"
    boundary_rtol = 1e-12

    def __init__(self, radius: float):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def in_domain(self, x):
        return _norm(np.asarray(x, dtype=float)) <= self.radius * (1.0 + self.boundary_rtol)

    def value(self, x):
        return np.where(self.in_domain(x), 0.0, np.inf)

    def prox(self, lam, x):
        x = np.asarray(x, dtype=float)
        r = _norm(x)
        scale = np.where(r > self.radius, self.radius / np.where(r > 0, r, 1.0), 1.0)
        return x * np.asarray(scale)[..., None]

    def subgrad_residual(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        r = _norm(x)
        on_boundary = r >= self.radius * (1.0 - self.boundary_rtol)
        # normal cone {t x : t >= 0}; distance from -v
        u = np.divide(x, r[..., None], out=np.zeros_like(x), where=r[..., None] > 0)
        t = np.maximum(-np.sum(v * u, axis=-1), 0.0)
        cone = _norm(v + t[..., None] * u)
        res = np.where(on_boundary, cone, _norm(v))
        return np.where(self.in_domain(x), res, np.inf)

    def to_dict(self):
        return {"kind": "indicator_ball", "radius": self.radius}


# -- argmin oracles -----------------------------------------------------------


class ArgminOracle:
    kind = "abstract"
    available = True

    def dist(self, x):
        raise NotImplementedError

    def project(self, x):
        raise NotImplementedError


@dataclass
class PointArgmin(ArgminOracle):
    """``argmin f = {xbar}``."""

    xbar: np.ndarray
    kind: str = field(default="point", init=False)

    def __post_init__(self):
        self.xbar = np.asarray(self.xbar, dtype=float)

    def dist(self, x):
        return _norm(np.asarray(x, dtype=float) - self.xbar)

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.xbar, x.shape).copy()


@dataclass
class AffineArgmin(ArgminOracle):
    """``argmin f = xbar + span(kernel_basis)``; the basis is orthonormal columns."""

    xbar: np.ndarray
    kernel_basis: np.ndarray
    kind: str = field(default="affine", init=False)

    def __post_init__(self):
        self.xbar = np.asarray(self.xbar, dtype=float)
        K = np.asarray(self.kernel_basis, dtype=float)
        self.kernel_basis = K.reshape(self.xbar.size, -1)

    def project(self, x):
        d = np.asarray(x, dtype=float) - self.xbar
        K = self.kernel_basis
        return self.xbar + (d @ K) @ K.T

    def dist(self, x):
        return _norm(np.asarray(x, dtype=float) - self.project(x))


@dataclass
class NumericArgmin(PointArgmin):
    """Unique minimizer known only through a converged reference run."""

    iterations: int = 0

    def __post_init__(self):
        super().__post_init__()
        self.kind = "numeric"


class EmptyArgmin(ArgminOracle):
    kind = "empty"
    available = False

    def dist(self, x):
        raise ValueError("argmin is empty")

    def project(self, x):
        raise ValueError("argmin is empty")


# -- composite problem ----------------------------------------------------------


class CompositeProblem:
    """``f = g + h`` together with ``inf f`` and an ``argmin f`` oracle."""

    def __init__(self, g: ProxFn, h: SmoothFn, inf_value: float, argmin: ArgminOracle,
                 name: str = ""):
        self.g = g
        self.h = h
        self.inf_value = float(inf_value)
        self.argmin = argmin
        self.name = name

    @property
    def lipschitz(self) -> float:
        return self.h.lipschitz

    @property
    def has_argmin(self) -> bool:
        return self.argmin.available

    def value(self, x):
        return self.g.value(x) + self.h.value(x)

    def gap(self, x):
        return self.value(x) - self.inf_value

    def in_domain(self, x):
        return self.g.in_domain(x)

    def check_step(self, lam: float):
        L = self.lipschitz
        if not lam > 0 or not math.isfinite(lam):
            raise ConfigurationError(f"step size must be positive, got {lam}")
        if L > 0 and not lam < 2.0 / L:
            raise ConfigurationError(f"step size {lam} outside ]0, 2/L[ with L={L}")

    def fb_map(self, lam: float, x):
        return self.g.prox(lam, np.asarray(x, dtype=float) - lam * self.h.grad(x))

    def min_norm_subgrad(self, x):
        x = np.asarray(x, dtype=float)
        return self.g.subgrad_residual(x, self.h.grad(x))

    def dist(self, x):
        return self.argmin.dist(x)

    def to_dict(self) -> dict:
        return {"g": self.g.to_dict(), "h": self.h.to_dict()}

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __repr__(self):
        return f"CompositeProblem(g={self.g.kind}, h={self.h.kind}, inf={self.inf_value:.6g})"


def min_norm_subgrad(problem: CompositeProblem, x):
    """``||df(x)||_-``, the distance from 0 to the subdifferential of ``f`` at ``x``."""
    x = np.asarray(x, dtype=float)
    if not np.all(problem.in_domain(x)):
        raise DomainError("point outside dom g")
    return problem.min_norm_subgrad(x)


def fb_map(problem: CompositeProblem, lam: float, x):
    """Forward-backward map ``prox_{lam g}(x - lam grad h(x))``."""
    problem.check_step(lam)
    return problem.fb_map(lam, x)


# -- reference solves -----------------------------------------------------------


def reference_solve(g: ProxFn, h: SmoothFn, x0, max_iters: int = 1_000_000,
                    step_tol: float = 1e-14):
    """High-precision FB run at ``lam = 1/L``; returns ``(x, iterations)``."""
    L = h.lipschitz
    lam = 1.0 / L if L > 0 else 1.0
    x = np.array(x0, dtype=float)
    for it in range(1, max_iters + 1):
        nx = g.prox(lam, x - lam * h.grad(x))
        step = np.linalg.norm(nx - x)
        x = nx
        if step < step_tol * max(1.0, np.linalg.norm(x)):
            return x, it
    return x, max_iters


@functools.lru_cache(maxsize=64)
def _cached_lasso_reference(key: bytes, rows: int, cols: int, alpha: float):
    n = rows * cols
    buf = np.frombuffer(key, dtype=float)
    A = DenseOperator(buf[:n].reshape(rows, cols))
    y = buf[n:]
    g, h = L1(alpha), LeastSquares(A, y)
    x1, it1 = reference_solve(g, h, np.zeros(cols))
    rng = np.random.default_rng(12345)
    x2, _ = reference_solve(g, h, rng.standard_normal(cols))
    if np.linalg.norm(x1 - x2) > 1e-8 * max(1.0, np.linalg.norm(x1)):
        raise ValueError("lasso reference solution is not unique (two starts disagree)")
    return x1, it1


# -- constructors ------------------------------------------------------------------


def _kernel_basis_dense(M: np.ndarray) -> np.ndarray:
    u, s, vt = np.linalg.svd(M)
    tol = max(M.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return vt[rank:].T


def make_least_squares(A, y, name: str = "least_squares") -> CompositeProblem:
    """``f(x) = 0.5 ||A x - y||**2`` with exact ``inf f`` and affine argmin."""
    y = np.asarray(y, dtype=float)
    h = LeastSquares(A, y)
    if isinstance(A, DiagonalOperator):
        pos = A.positive
        xbar = pinv_apply(A, y)
        inf = 0.5 * float(np.sum(y[~pos] ** 2))
        basis = np.eye(A.cols)[:, ~pos]
    else:
        M = A.to_dense()
        xbar = np.linalg.pinv(M) @ y
        res = M @ xbar - y
        inf = 0.5 * float(res @ res)
        basis = _kernel_basis_dense(M)
    if basis.shape[1] == 0:
        argmin = PointArgmin(xbar)
    else:
        argmin = AffineArgmin(xbar, basis)
    return CompositeProblem(ZeroProx(), h, inf, argmin, name=name)


def make_lasso(A, y, alpha: float, name: str = "lasso") -> CompositeProblem:
    """``f(x) = alpha ||x||_1 + 0.5 ||A x - y||**2``.

    ``inf f`` and the minimizer come from a cached high-precision reference
    run (FB at ``1/L``), after checking that two different starts agree.
    """
    y = np.asarray(y, dtype=float)
    M = A.to_dense() if not isinstance(A, np.ndarray) else A
    if not isinstance(A, (DenseOperator, DiagonalOperator)):
        A = DenseOperator(M)
    key = np.concatenate([np.asarray(M, dtype=float).ravel(), y]).tobytes()
    xref, its = _cached_lasso_reference(key, M.shape[0], M.shape[1], float(alpha))
    g, h = L1(alpha), LeastSquares(A, y)
    inf = float(g.value(xref) + h.value(xref))
    return CompositeProblem(g, h, inf, NumericArgmin(xref, iterations=its), name=name)


def make_norm_pow(p: float, dim: int = 1, weight: float = 1.0,
                  name: str = "norm_pow") -> CompositeProblem:
    """``f(x) = weight ||x||**p`` handled purely through its prox (``h = 0``)."""
    return CompositeProblem(NormPow(p, weight), ZeroSmooth(), 0.0,
                            PointArgmin(np.zeros(dim)), name=name)


def make_l1(alpha: float = 1.0, dim: int = 1, name: str = "l1") -> CompositeProblem:
    """``f(x) = alpha ||x||_1`` with minimizer 0."""
    return CompositeProblem(L1(alpha), ZeroSmooth(), 0.0, PointArgmin(np.zeros(dim)), name=name)


def make_quadratic(Q, name: str = "quadratic") -> CompositeProblem:
    """``f(x) = 0.5 <Q x, x>`` with minimizer set ``Ker Q``."""
    Q = np.asarray(Q, dtype=float)
    h = Quadratic(Q)
    basis = _kernel_basis_dense(Q)
    n = Q.shape[0]
    argmin = PointArgmin(np.zeros(n)) if basis.shape[1] == 0 else AffineArgmin(np.zeros(n), basis)
    return CompositeProblem(ZeroProx(), h, 0.0, argmin, name=name)


def make_counterexample_neg(alpha: float) -> CompositeProblem:
    """Smooth 1-D problem with ``inf f = 0`` and no minimizer."""
    return CompositeProblem(ZeroProx(), ScalarPowerTail(alpha), 0.0, EmptyArgmin(),
                            name=f"counterexample_neg_alpha={alpha:g}")


def problem_from_dict(d: dict) -> CompositeProblem:
    """Build a problem from its JSON description (``{"g": ..., "h": ...}``)."""
    gd = d.get("g", {"kind": "zero"})
    hd = d.get("h", {"kind": "zero"})
    gk, hk = gd.get("kind"), hd.get("kind")
    if hk == "least_squares":
        A = operator_from_dict(hd["A"])
        y = hd["y"]
        if gk in (None, "zero"):
            return make_least_squares(A, y)
        if gk == "l1":
            return make_lasso(A, y, float(gd["alpha"]))
        raise ValueError(f"unsupported combination g={gk!r} with least squares")
    if hk == "quadratic":
        if gk not in (None, "zero") or np.any(hd.get("b", [0.0])):
            raise ValueError("only pure quadratics 0.5<Qx,x> are supported")
        return make_quadratic(hd["Q"])
    if hk == "scalar_power_tail":
        return make_counterexample_neg(float(hd["alpha"]))
    if hk in (None, "zero"):
        if gk == "norm_pow":
            return make_norm_pow(float(gd["p"]), dim=int(d.get("dim", 1)),
                                 weight=float(gd.get("weight", 1.0)))
        if gk == "l1":
            return make_l1(float(gd["alpha"]), int(d.get("dim", 1)))
        if gk == "indicator_ball":
            n = int(d.get("dim", 1))
            g = IndicatorBall(float(gd["radius"]))
            return CompositeProblem(g, ZeroSmooth(), 0.0,
                                    AffineArgmin(np.zeros(n), np.eye(n)), name="ball")
    raise ValueError(f"unsupported problem description {d!r}")
