"""Set descriptors with a membership test and a seeded sampler.

Descriptors that depend on the objective (sublevel sets, subgradient
level sets) hold a reference to the problem they were built from.  All
samplers draw from a ``numpy.random.Generator`` handed in by the caller,
so a fixed seed gives the same points on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "SamplerError",
    "DomainDesc",
    "whole_space",
    "ball",
    "annulus",
    "box",
    "half_space",
    "sublevel",
    "ball_and_sublevel",
    "resid_level",
    "support_subspace",
    "cone_s_sparse",
    "source_set",
    "custom_sampler",
    "uniform_ball",
    "MAX_PROPOSALS",
]

MAX_PROPOSALS = 100_000


class SamplerError(RuntimeError):
    """Rejection sampling found no member of the set."""


def uniform_ball(rng, n: int, dim: int, radius: float = 1.0, center=None):
    """``n`` points uniform in a Euclidean ball."""
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / dim)
    pts = g * r[:, None]
    if center is not None:
        pts += np.asarray(center, dtype=float)
    return pts


@dataclass
class DomainDesc:
    """A subset of R^dim.

    Parameters
    ----------
    kind : str
        Descriptor tag, e.g. ``"ball"`` or ``"sublevel"``.
    dim : int
        Ambient dimension.
    params : dict
        JSON-friendly parameters, used by :meth:`to_dict`.
    contains_fn, sample_fn : callable
        Membership test on a batch ``(m, dim)`` and sampler ``(rng, n)``.
    bounded : bool
    cone : bool
        True for cones (samples are directions, not points).
    """

    kind: str
    dim: int
    params: dict = field(default_factory=dict)
    contains_fn: Callable | None = field(default=None, repr=False)
    sample_fn: Callable | None = field(default=None, repr=False)
    bounded: bool = False
    cone: bool = False

    def contains(self, x, tol: float = 0.0):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xs = np.atleast_2d(x)
        out = np.asarray(self.contains_fn(xs, tol), dtype=bool)
        return bool(out[0]) if single else out

    def sample(self, n: int, seed=None, rng=None):
        """``n`` seeded members; raises :class:`SamplerError` on failure."""
        if rng is None:
            rng = np.random.default_rng(seed)
        if self.sample_fn is None:
            raise SamplerError(f"no sampler for domain kind {self.kind!r}")
        return self.sample_fn(rng, int(n))

    def intersect(self, other: "DomainDesc") -> "DomainDesc":
        """Intersection; samples come from ``self`` filtered by ``other``."""
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        a, b = self, other

        def contains(xs, tol):
            return a.contains_fn(xs, tol) & b.contains_fn(xs, tol)

        def sample(rng, n):
            return _reject(rng, n, lambda r, m: a.sample_fn(r, m), b.contains_fn)

        return DomainDesc(
            "intersection", self.dim, {"parts": [a.to_dict(), b.to_dict()]},
            contains, sample, a.bounded or b.bounded, a.cone and b.cone,
        )

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, **self.params}


def _reject(rng, n, propose, contains, batch: int = 1024):
    """Rejection sampling with the global proposal cap."""
    out, got, tried = [], 0, 0
    while got < n:
        if tried >= MAX_PROPOSALS and got == 0:
            raise SamplerError(f"no member found in {MAX_PROPOSALS} proposals")
        if tried >= 50 * MAX_PROPOSALS:
            raise SamplerError("acceptance rate too low")
        cand = propose(rng, batch)
        tried += batch
        keep = cand[contains(cand, 0.0)]
        if keep.size:
            out.append(keep)
            got += keep.shape[0]
    return np.concatenate(out)[:n]


def _covering_radius(rng, dim, center, contains, r0: float = 1.0, max_doublings: int = 30):
    """Radius of a ball around ``center`` that covers the set, found by
    doubling until the outer half-shell holds no member."""
    R = r0
    for _ in range(max_doublings):
        pts = uniform_ball(rng, 2048, dim, R, center)
        rad = np.linalg.norm(pts - center, axis=1)
        shell = pts[rad > 0.5 * R]
        if not np.any(contains(shell, 0.0)):
            if np.any(contains(pts, 0.0)):
                return R
        R *= 2.0
    return R


def whole_space(dim: int, scale: float = 1.0) -> DomainDesc:
    """R^dim; samples are Gaussian with standard deviation ``scale``."""
    return DomainDesc(
        "whole_space", dim, {"scale": scale},
        lambda xs, tol: np.ones(xs.shape[0], dtype=bool),
        lambda rng, n: scale * rng.standard_normal((n, dim)),
    )


def ball(center, radius: float) -> DomainDesc:
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if radius <= 0:
        raise ValueError("radius must be positive")

    def contains(xs, tol):
        return np.linalg.norm(xs - c, axis=1) <= radius * (1 + tol) + tol

    return DomainDesc(
        "ball", c.size, {"center": c.tolist(), "radius": radius}, contains,
        lambda rng, n: uniform_ball(rng, n, c.size, radius, c), bounded=True,
    )


def annulus(center, r_in: float, r_out: float) -> DomainDesc:
    """``{r_in <= ||x - center|| <= r_out}``, sampled uniformly in radius."""
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if not 0 <= r_in < r_out:
        raise ValueError("need 0 <= r_in < r_out")
    d = c.size

    def contains(xs, tol):
        r = np.linalg.norm(xs - c, axis=1)
        return (r >= r_in * (1 - tol) - tol) & (r <= r_out * (1 + tol) + tol)

    def sample(rng, n):
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return c + g * rng.uniform(r_in, r_out, n)[:, None]

    return DomainDesc("annulus", d, {"center": c.tolist(), "r_in": r_in, "r_out": r_out},
                      contains, sample, bounded=True)


def box(lo, hi) -> DomainDesc:
    """Axis-aligned box ``[lo, hi]`` (a segment in 1-D)."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if np.any(hi < lo):
        raise ValueError("empty box")

    def contains(xs, tol):
        span = tol * (1 + np.abs(hi - lo))
        return np.all((xs >= lo - span) & (xs <= hi + span), axis=1)

    return DomainDesc(
        "box", lo.size, {"lo": lo.tolist(), "hi": hi.tolist()}, contains,
        lambda rng, n: lo + (hi - lo) * rng.random((n, lo.size)), bounded=True,
    )


def half_space(normal, offset: float, center=None, radius: float = 10.0) -> DomainDesc:
    """``{x : <normal, x> >= offset}``; sampled inside ``ball(center, radius)``."""
    a = np.atleast_1d(np.asarray(normal, dtype=float))
    c = np.zeros_like(a) if center is None else np.asarray(center, dtype=float)

    def contains(xs, tol):
        return xs @ a >= offset - tol * (1 + abs(offset))

    return DomainDesc(
        "half_space", a.size, {"normal": a.tolist(), "offset": offset}, contains,
        lambda rng, n: _reject(rng, n, lambda r, m: uniform_ball(r, m, a.size, radius, c),
                               contains),
    )


def _problem_center(problem, dim):
    if problem.has_argmin:
        return np.asarray(problem.argmin.project(np.zeros(dim)), dtype=float)
    return np.zeros(dim)


def _level_set(kind, problem, dim, params, member, center):
    c = _problem_center(problem, dim) if center is None else np.asarray(center, dtype=float)
    cache = {}

    def sample(rng, n):
        if "R" not in cache:
            cache["R"] = _covering_radius(rng, dim, c, member)
        R = cache["R"]
        return _reject(rng, n, lambda r, m: uniform_ball(r, m, dim, R, c), member)

    return DomainDesc(kind, dim, params, member, sample)


def sublevel(problem, r: float, dim: int, center=None) -> DomainDesc:
    """``S_f(r) = {x : f(x) - inf f <= r}``."""
    if r <= 0:
        raise ValueError("level must be positive")

    def member(xs, tol):
        ok = np.asarray(problem.in_domain(xs), dtype=bool)
        gap = np.where(ok, problem.gap(np.where(ok[:, None], xs, 0.0)), np.inf)
        return ok & (gap <= r + tol * (1 + r))

    return _level_set("sublevel", problem, dim, {"r": r}, member, center)


def resid_level(problem, M: float, dim: int, center=None) -> DomainDesc:
    """``{x : ||df(x)||_- <= M}``."""

    def member(xs, tol):
        ok = np.asarray(problem.in_domain(xs), dtype=bool)
        res = np.where(ok, problem.min_norm_subgrad(np.where(ok[:, None], xs, 0.0)), np.inf)
        return ok & (res <= M + tol * (1 + M))

    return _level_set("resid_level", problem, dim, {"M": M}, member, center)


def ball_and_sublevel(problem, center, delta: float, r: float) -> DomainDesc:
    b = ball(center, delta)
    s = sublevel(problem, r, b.dim, center=center)

    def sample(rng, n):
        return _reject(rng, n, b.sample_fn, s.contains_fn)

    return DomainDesc(
        "ball_and_sublevel", b.dim,
        {"center": b.params["center"], "radius": delta, "r": r},
        lambda xs, tol: b.contains_fn(xs, tol) & s.contains_fn(xs, tol),
        sample, bounded=True,
    )


def support_subspace(indices, dim: int, center=None, scale: float = 1.0) -> DomainDesc:
    """``center + X_I`` where ``X_I = {x : supp(x) in I}``.

    Samples are Gaussian on the coordinates of ``I``; as a cone (center 0)
    they serve as directions.
    """
    idx = np.asarray(sorted(int(i) for i in indices), dtype=int)
    if idx.size and (idx[0] < 0 or idx[-1] >= dim):
        raise ValueError("support index out of range")
    mask = np.zeros(dim, dtype=bool)
    mask[idx] = True
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def contains(xs, tol):
        off = np.abs(xs - c)[:, ~mask]
        return np.all(off <= tol, axis=1) if off.size else np.ones(xs.shape[0], dtype=bool)

    def sample(rng, n):
        pts = np.tile(c, (n, 1))
        pts[:, mask] += scale * rng.standard_normal((n, idx.size))
        return pts

    return DomainDesc("support_subspace", dim, {"indices": idx.tolist()}, contains, sample,
                      cone=center is None)


def cone_s_sparse(s: int, dim: int) -> DomainDesc:
    """Vectors with at most ``s`` nonzero coordinates."""
    if not 1 <= s <= dim:
        raise ValueError("need 1 <= s <= dim")

    def contains(xs, tol):
        scale = np.maximum(1.0, np.max(np.abs(xs), axis=1, keepdims=True))
        return np.sum(np.abs(xs) > tol * scale, axis=1) <= s

    def sample(rng, n):
        pts = np.zeros((n, dim))
        for i in range(n):
            sup = rng.choice(dim, size=s, replace=False)
            pts[i, sup] = rng.standard_normal(s)
        return pts

    return DomainDesc("cone_s_sparse", dim, {"s": s}, contains, sample, cone=True)


def source_set(P, mu: float, delta: float) -> DomainDesc:
    """Source set ``A^+y + Ker A + (A*A)^mu {w in Ker A^perp : ||w|| <= delta}``.

    ``P`` is a :class:`geofb.invprob.DiagonalInverseProblem`.  Samples put
    ``w`` uniformly in the ball and add a standard Gaussian kernel part.
    """
    from .invprob import SourceSpec, construct_source_point, membership_check  # avoids a cycle

    dim = P.A.cols
    pos = P.A.positive
    spec = SourceSpec(mu, delta)

    def contains(xs, tol):
        out = np.empty(xs.shape[0], dtype=bool)
        for i, x in enumerate(xs):
            m = membership_check(x, P, mu)
            out[i] = m.member and m.delta_min <= delta * (1 + tol) + tol
        return out

    def sample(rng, n):
        k = int(pos.sum())
        w = np.zeros((n, dim))
        w[:, pos] = uniform_ball(rng, n, k, delta)
        ker = np.zeros((n, dim))
        ker[:, ~pos] = rng.standard_normal((n, dim - k))
        return np.array([construct_source_point(P, spec, wi).x0 for wi in w]) + ker

    return DomainDesc("source_set", dim, {"mu": mu, "delta": delta}, contains, sample,
                      bounded=bool(np.all(pos)))


def custom_sampler(dim: int, sampler: Callable, contains: Callable | None = None,
                   name: str = "custom", bounded: bool = False) -> DomainDesc:
    """Wrap a user sampler ``sampler(rng, n) -> (n, dim)``.

    Without a membership test every point counts as a member.
    """
    if contains is None:
        def test(xs, tol):
            return np.ones(xs.shape[0], dtype=bool)
    else:
        def test(xs, tol):
            return np.asarray(contains(xs), dtype=bool)
    return DomainDesc("custom_sampler", dim, {"name": name}, test, sampler, bounded)

