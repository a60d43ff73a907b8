"""Finite-dimensional linear operators and spectral utilities.

Two operator kinds are supported: dense rectangular matrices and square
diagonal operators.  Both act on the last axis of their input, so a stack
of vectors with shape ``(m, cols)`` can be mapped in one call.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

__all__ = [
    "DenseOperator",
    "DiagonalOperator",
    "SupportSet",
    "CapacityError",
    "ZeroOperatorWarning",
    "PowerResult",
    "apply",
    "adjoint_apply",
    "gram",
    "gram_norm",
    "power_iteration",
    "jacobi_eigvalsh",
    "small_eigvalsh",
    "min_eig",
    "spectral_power",
    "pinv_apply",
    "restricted_min_eig",
    "support_min_eig",
    "smallest_positive_eig",
    "operator_from_dict",
]

#: Largest column count accepted by the brute-force restricted eigenvalue search.
MAX_BRUTE_FORCE_COLS = 20


class CapacityError(ValueError):
    """Raised when a brute-force routine is asked to exceed its size guard."""


class ZeroOperatorWarning(RuntimeWarning):
    """Emitted when a spectral routine is handed the zero operator."""


class DenseOperator:
    """Dense ``rows x cols`` real matrix.

    Parameters
    ----------
    entries : array_like
        Either a 2-D array or a flat row-major sequence; in the latter case
        ``rows`` and ``cols`` must be given.
    """

    kind = "dense"

    def __init__(self, entries, rows: int | None = None, cols: int | None = None):
        arr = np.asarray(entries, dtype=float)
        if arr.ndim == 1:
            if rows is None or cols is None:
                raise ValueError("flat entries need explicit rows and cols")
            if arr.size != rows * cols:
                raise ValueError(
                    f"entries length {arr.size} does not match {rows}x{cols}"
                )
            arr = arr.reshape(rows, cols)
        elif arr.ndim != 2:
            raise ValueError("dense operator entries must be 1-D or 2-D")
        if rows is not None and arr.shape[0] != rows:
            raise ValueError("row count mismatch")
        if cols is not None and arr.shape[1] != cols:
            raise ValueError("column count mismatch")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("operator dimensions must be positive")
        self.matrix = arr
        self.matrix.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.cols:
            raise ValueError(f"expected last dimension {self.cols}, got {x.shape[-1]}")
        return x @ self.matrix.T

    def adjoint_apply(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.rows:
            raise ValueError(f"expected last dimension {self.rows}, got {y.shape[-1]}")
        return y @ self.matrix

    def adjoint(self) -> "DenseOperator":
        return DenseOperator(self.matrix.T.copy())

    def to_dense(self) -> np.ndarray:
        return np.array(self.matrix)

    def gram(self) -> np.ndarray:
        return self.matrix.T @ self.matrix

    def is_zero(self) -> bool:
        return not np.any(self.matrix)

    def to_dict(self) -> dict:
        return {
            "kind": "dense",
            "rows": self.rows,
            "cols": self.cols,
            "entries": self.matrix.ravel().tolist(),
        }

    def __eq__(self, other):
        return isinstance(other, DenseOperator) and np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return f"DenseOperator(rows={self.rows}, cols={self.cols})"


class DiagonalOperator:
    """Square diagonal operator ``x -> sigma * x`` with ``sigma >= 0``."""

    kind = "diagonal"

    def __init__(self, sigmas):
        s = np.asarray(sigmas, dtype=float).ravel()
        if s.size < 1:
            raise ValueError("diagonal operator needs at least one entry")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError("diagonal entries must be finite and nonnegative")
        self.sigmas = s
        self.sigmas.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.sigmas.size

    cols = rows

    @property
    def shape(self) -> tuple[int, int]:
        return (self.sigmas.size, self.sigmas.size)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sigmas.size:
            raise ValueError(
                f"expected last dimension {self.sigmas.size}, got {x.shape[-1]}"
            )
        return self.sigmas * x

    adjoint_apply = apply

    def adjoint(self) -> "DiagonalOperator":
        return self

    def to_dense(self) -> np.ndarray:
        return np.diag(self.sigmas)

    def gram(self) -> np.ndarray:
        return np.diag(self.sigmas**2)

    def is_zero(self) -> bool:
        return not np.any(self.sigmas)

    @property
    def positive(self) -> np.ndarray:
        """Boolean mask of the coordinates outside the kernel."""
        return self.sigmas > 0

    def to_dict(self) -> dict:
        return {"kind": "diagonal", "sigmas": self.sigmas.tolist()}

    def __eq__(self, other):
        return isinstance(other, DiagonalOperator) and np.array_equal(self.sigmas, other.sigmas)

    def __repr__(self):
        return f"DiagonalOperator(N={self.sigmas.size})"


Operator = Union[DenseOperator, DiagonalOperator]


def operator_from_dict(d: dict) -> Operator:
    """Inverse of ``op.to_dict()``."""
    kind = d.get("kind")
    if kind == "dense":
        return DenseOperator(d["entries"], rows=int(d["rows"]), cols=int(d["cols"]))
    if kind == "diagonal":
        return DiagonalOperator(d["sigmas"])
    raise ValueError(f"unknown operator kind {kind!r}")


@dataclass(frozen=True)
class SupportSet:
    """Sorted set of coordinate indices in ``{0, ..., n - 1}``."""

    indices: tuple[int, ...]
    n: int | None = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("support indices must be strictly increasing")
        if idx and idx[0] < 0:
            raise ValueError("support indices must be nonnegative")
        if self.n is not None and idx and idx[-1] >= self.n:
            raise ValueError(f"support index {idx[-1]} out of range for n={self.n}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, x, threshold: float = 0.0) -> "SupportSet":
        x = np.asarray(x, dtype=float)
        return cls(tuple(np.flatnonzero(np.abs(x) > threshold)), n=x.size)

    def mask(self, n: int | None = None) -> np.ndarray:
        n = self.n if n is None else n
        m = np.zeros(n, dtype=bool)
        m[list(self.indices)] = True
        return m

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


def apply(A: Operator, x):
    return A.apply(x)


def adjoint_apply(A: Operator, y):
    return A.adjoint_apply(y)


def gram(A: Operator) -> np.ndarray:
    """Dense ``A* A``."""
    return A.gram()


class PowerResult(NamedTuple):
    value: float
    iterations: int
    converged: bool
    zero: bool


def power_iteration(S, rtol: float = 1e-12, max_iter: int = 100_000) -> PowerResult:
    """Largest eigenvalue of a symmetric positive semidefinite matrix.

    The start vector is the normalized all-ones vector, so the result is
    reproducible bit for bit.  Iteration stops once two successive Rayleigh
    quotients agree to ``rtol`` (relative).
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    v = np.full(n, 1.0 / math.sqrt(n))
    w = S @ v
    rho = float(v @ w)
    if not np.any(S):
        return PowerResult(0.0, 0, True, True)
    for it in range(1, max_iter + 1):
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the kernel; fall back to the first basis vector
            # that is not annihilated
            j = int(np.argmax(np.linalg.norm(S, axis=0)))
            w = S[:, j].copy()
            nw = np.linalg.norm(w)
        v = w / nw
        w = S @ v
        new = float(v @ w)
        if abs(new - rho) <= rtol * abs(new):
            return PowerResult(new, it, True, False)
        rho = new
    return PowerResult(rho, max_iter, False, False)


def gram_norm(A: Operator) -> float:
    """``||A* A||``, the Lipschitz constant of the least-squares gradient.

    Diagonal operators return ``max sigma_k**2`` exactly; dense operators use
    :func:`power_iteration` on ``A* A``.  The zero operator yields ``0.0``
    together with a :class:`ZeroOperatorWarning`.
    """
    if A.is_zero():
        warnings.warn("gram_norm of the zero operator", ZeroOperatorWarning, stacklevel=2)
        return 0.0
    if isinstance(A, DiagonalOperator):
        return float(np.max(A.sigmas) ** 2)
    return power_iteration(A.gram()).value


# -- symmetric eigenvalues -------------------------------------------------


def small_eigvalsh(S) -> np.ndarray:
    """Closed-form ascending eigenvalues of a symmetric matrix of size <= 3."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if n == 1:
        return np.array([S[0, 0]])
    if n == 2:
        a, b, d = S[0, 0], S[0, 1], S[1, 1]
        m = 0.5 * (a + d)
        r = math.hypot(0.5 * (a - d), b)
        return np.array([m - r, m + r])
    if n == 3:
        # trigonometric solution of the characteristic cubic
        p1 = S[0, 1] ** 2 + S[0, 2] ** 2 + S[1, 2] ** 2
        q = np.trace(S) / 3.0
        if p1 == 0.0:
            return np.sort(np.diag(S).copy())
        p2 = (S[0, 0] - q) ** 2 + (S[1, 1] - q) ** 2 + (S[2, 2] - q) ** 2 + 2.0 * p1
        p = math.sqrt(p2 / 6.0)
        B = (S - q * np.eye(3)) / p
        r = np.linalg.det(B) / 2.0
        r = min(1.0, max(-1.0, r))
        phi = math.acos(r) / 3.0
        e1 = q + 2.0 * p * math.cos(phi)
        e3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
        e2 = 3.0 * q - e1 - e3
        return np.sort(np.array([e1, e2, e3]))
    raise ValueError("closed form only for size <= 3")


def jacobi_eigvalsh(S, tol: float = 1e-13, max_sweeps: int = 100) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps continue until the off-diagonal Frobenius norm drops below
    ``tol * ||S||_F``.
    """
    a = np.array(S, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(a * a) - np.sum(a.diagonal() ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    # theta would overflow; t ~ 1/(2 theta) to full precision
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
    return np.sort(a.diagonal().copy())


def min_eig(S) -> float:
    """Smallest eigenvalue of a symmetric matrix (closed form up to size 3)."""
    S = np.asarray(S, dtype=float)
    if S.shape[0] <= 3:
        return float(small_eigvalsh(S)[0])
    return float(jacobi_eigvalsh(S)[0])


def smallest_positive_eig(A: Operator, rel: float = 1e-12) -> float:
    """Smallest eigenvalue of ``A* A`` exceeding ``rel * ||A* A||``; 0 if none."""
    if isinstance(A, DiagonalOperator):
        s2 = A.sigmas**2
        top = s2.max()
        pos = s2[s2 > rel * top]
        return float(pos.min()) if pos.size else 0.0
    ev = jacobi_eigvalsh(A.gram())
    top = ev[-1]
    pos = ev[ev > rel * top]
    return float(pos.min()) if pos.size else 0.0


# -- diagonal spectral calculus ---------------------------------------------


def spectral_power(D: DiagonalOperator, nu: float) -> DiagonalOperator:
    """``(A* A)**nu`` for diagonal ``A``, with ``0**(2 nu) := 0`` for every nu."""
    s = D.sigmas
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = s[pos] ** (2.0 * nu)
    return DiagonalOperator(out)


def pinv_apply(D: DiagonalOperator, y):
    """Moore-Penrose pseudo-inverse of a diagonal operator applied to ``y``."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != D.sigmas.size:
        raise ValueError("dimension mismatch")
    out = np.zeros(np.broadcast_shapes(y.shape, D.sigmas.shape))
    pos = D.sigmas > 0
    out[..., pos] = y[..., pos] / D.sigmas[pos]
    return out


# -- restricted injectivity --------------------------------------------------


def _as_dense(A) -> np.ndarray:
    if isinstance(A, (DenseOperator, DiagonalOperator)):
        return A.to_dense()
    return np.asarray(A, dtype=float)


def support_min_eig(A, I: SupportSet | Sequence[int]) -> float:
    """Smallest eigenvalue of ``A_I* A_I`` for the column restriction ``A_I``."""
    idx = list(I.indices if isinstance(I, SupportSet) else I)
    if not idx:
        raise ValueError("support must be nonempty")
    M = _as_dense(A)
    G = M[:, idx].T @ M[:, idx]
    return max(min_eig(G), 0.0)


def restricted_min_eig(A, s: int) -> float:
    """``gamma_s``: minimum of :func:`support_min_eig` over supports of size ``s``.

    Exhaustive over all ``C(cols, s)`` supports; refuses ``cols > 20``.
    """
    M = _as_dense(A)
    n = M.shape[1]
    if n > MAX_BRUTE_FORCE_COLS:
        raise CapacityError(f"{n} columns exceeds the brute-force cap of {MAX_BRUTE_FORCE_COLS}")
    if not 1 <= s <= n:
        raise ValueError(f"sparsity level must lie in [1, {n}]")
    G = M.T @ M
    best = math.inf
    for I in itertools.combinations(range(n), s):
        v = min_eig(G[np.ix_(I, I)])
        if v < best:
            best = v
            if best <= 0.0:
                break
    return max(best, 0.0)


def restricted_argmin_support(A, s: int) -> tuple[SupportSet, float]:
    """Like :func:`restricted_min_eig` but also returns a minimizing support."""
    M = _as_dense(A)
    n = M.shape[1]
    if n > MAX_BRUTE_FORCE_COLS:
        raise CapacityError(f"{n} columns exceeds the brute-force cap of {MAX_BRUTE_FORCE_COLS}")
    G = M.T @ M
    best, arg = math.inf, None
    for I in itertools.combinations(range(n), s):
        v = min_eig(G[np.ix_(I, I)])
        if v < best:
            best, arg = v, I
    return SupportSet(arg, n=n), max(best, 0.0)


def iter_supports(n: int, s: int) -> Iterable[tuple[int, ...]]:
    return itertools.combinations(range(n), s)
