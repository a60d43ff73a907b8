"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script.
"""
import itertools
import json
import math
import sys
import time

import numpy as np
import pytest

from geofb import domains as dom
from geofb.cli import certify_files, main
from geofb.experiments import BUILTINS, classical_factors, run_builtin
from geofb.funcs import make_least_squares, make_norm_pow, make_quadratic
from geofb.geometry import (
    GeometryCertificate,
    attest_invariance,
    convert_forward,
    convert_reverse_on_invariant,
    estimate_lojasiewicz,
    exact_cert_l1,
    exact_cert_least_squares,
    exact_cert_norm_pow,
    exact_cert_strongly_convex,
    to_lojasiewicz,
    validate_smoothness_consistency,
)
from geofb.invprob import SourceSpec, landweber_rate_experiment, optimality_witness
from geofb.linops import DenseOperator, restricted_min_eig
from geofb.rates import (
    alpha_from_p,
    cprime,
    kappa,
    lemma_delta,
    power_tail_lower_constant,
    sublinear_lemma_bound,
)

TOL = 1e-10


@pytest.fixture
def report(capsys):
    """Print ``AC<k> PASS|FAIL`` to the terminal, then assert."""
    def _report(ac, failures, detail=""):
        ok = not failures
        with capsys.disabled():
            line = f"AC{ac:<2} {'PASS' if ok else 'FAIL'}  {detail}"
            if failures:
                line += "  failures: " + "; ".join(failures)
            print("\n" + line)
        assert ok, failures
    return _report


def loglog_slope(series, start, stop):
    """Independent slope oracle: polyfit of log series on log n over [start, stop)."""
    n = np.arange(start, stop)
    v = np.asarray(series[start:stop], dtype=float)
    keep = v > 0
    return float(np.polyfit(np.log(n[keep]), np.log(v[keep]), 1)[0])


def tail_fit(series, stop=None):
    stop = len(series) if stop is None else stop
    return loglog_slope(series, max(1, stop // 2), stop)


# -- AC1 ---------------------------------------------------------------------------------


def per_iteration_failures(name, tr):
    lam, L = tr.meta["lambda"], tr.meta["L"]
    g, s, r = tr.gap, tr.step, tr.resid
    a = (2.0 - lam * L) / (2.0 * lam)
    out = []

    def first(mask):
        idx = np.flatnonzero(mask)
        return int(idx[0]) + 1 if idx.size else None

    dec = g[:-1] - g[1:]
    checks = {
        "sufficient decrease": a * s[1:] ** 2 > dec + TOL * (1 + np.abs(g[:-1])),
        "resid <= step/lam": r[1:] > s[1:] / lam + TOL * (1 + s[1:] / lam),
        "step/lam <= previous resid": s[1:] / lam > r[:-1] + TOL * (1 + r[:-1]),
        "gap monotone": g[1:] > g[:-1] + TOL * (1 + np.abs(g[:-1])),
        "resid monotone": r[1:] > r[:-1] + TOL * (1 + r[:-1]),
    }
    if tr.dist is not None:
        d = tr.dist
        checks["fejer"] = d[1:] > d[:-1] + TOL * (1 + d[:-1])
        C = 1.0 if lam * L <= 1 else 1.0 + 2.0 * (lam * L - 1.0) / (2.0 - lam * L)
        n = np.arange(1, g.size)
        bound = C * d[0] ** 2 / (2 * lam * n)
        checks["worst case"] = g[1:] > bound + TOL * (1 + bound)
    for what, mask in checks.items():
        k = first(mask)
        if k is not None:
            out.append(f"{name}: {what} at n={k}")
    return out


def test_ac1_per_iteration_inequalities(report):
    t0 = time.perf_counter()
    runs = []
    for p in (1, 1.5, 2, 4, 6):
        runs.append((f"norm_pow_p[p={p}]", run_builtin("norm_pow_p", 0, {"p": p})))
    for a in (0.5, 1, 2):
        runs.append((f"counterexample_neg_alpha[alpha={a}]",
                     run_builtin("counterexample_neg_alpha", 0, {"alpha": a})))
    for name in ("strongly_convex_quadratic", "lasso_small", "landweber_source", "sparse_recovery"):
        runs.append((name, run_builtin(name, 0)))
    failures = []
    for name, res in runs:
        failures += per_iteration_failures(name, res.trace)
    elapsed = time.perf_counter() - t0
    if elapsed >= 10:
        failures.append(f"runtime {elapsed:.1f}s >= 10s")
    report(1, failures, f"{len(runs)} built-in traces, {elapsed:.2f}s")


# -- AC2 ---------------------------------------------------------------------------------


def test_ac2_finite_termination(report):
    res = run_builtin("norm_pow_p", 0, {"p": 1})
    g = res.trace.gap
    failures = []
    hit = int(np.flatnonzero(g <= 1e-13)[0])
    if hit != 4:
        failures.append(f"terminates at n={hit}, expected 4")
    if res.trace.meta["lambda"] != 0.25:
        failures.append("wrong stepsize")
    if not np.array_equal(res.trace.iterate(0), [1.0, -0.3]):
        failures.append("wrong start")
    bound = math.ceil(g[0] / kappa(0.25, 0.0, 1.0))
    if res.report["finite_bound_n"] != bound:
        failures.append(f"finite_bound_n {res.report['finite_bound_n']} != {bound}")
    if not 4 <= bound:
        failures.append(f"bound {bound} < 4")
    if exact_cert_l1(1.0, 2)[1].constant != 1.0:
        failures.append("l1 constant is not 1")
    report(2, failures, f"gap hits 0 at n={hit}, bound ceil(r0/kappa)={bound}")


# -- AC3 ---------------------------------------------------------------------------------


def test_ac3_superlinear(report):
    res = run_builtin("norm_pow_p", 0, {"p": 1.5})
    d = res.trace.dist
    live = d[(d > 1e-300) & (d < 1)]
    orders = np.log(live[1:]) / np.log(live[:-1])
    failures = []
    if not orders.size or abs(orders[-1] - 2.0) > 0.1:
        failures.append(f"final order {orders[-1] if orders.size else None}")
    # error bounds: gamma_sub dist_{n+1}^(p-1) <= (2/lam) dist_n with gamma_sub = p,
    # and gap_{n+1}^(p-1) <= (p/gamma_cond)^2 (2/lam)^p gap_n with gamma_cond = 1
    lam, p = res.trace.meta["lambda"], 1.5
    g = res.trace.gap
    sub = p * d[1:] ** (p - 1) > (2 / lam) * d[:-1] * (1 + 1e-12)
    cond = g[1:] ** (p - 1) > (p / 1.0) ** 2 * (2 / lam) ** p * g[:-1] * (1 + 1e-12)
    if sub.any():
        failures.append(f"subregular bound at n={int(np.flatnonzero(sub)[0]) + 1}")
    if cond.any():
        failures.append(f"conditioned bound at n={int(np.flatnonzero(cond)[0]) + 1}")
    if not res.passed:
        failures.append(f"built-in checks {res.report['failed']}")
    report(3, failures, f"orders {np.round(orders, 3).tolist()}")


# -- AC4 ---------------------------------------------------------------------------------


def test_ac4_linear_regime(report):
    failures = []
    worst = []
    for gam in (0.01, 0.1, 0.3, 0.7):
        res = run_builtin("strongly_convex_quadratic", 0, {"kappa": gam, "iters": 3000})
        tr = res.trace
        kap = tr.meta["lambda"] * (2 - tr.meta["lambda"] * tr.meta["L"]) * gam * tr.meta["L"]
        g = tr.gap
        floor = 1e-12 * g[0]
        live = np.flatnonzero(g <= floor)
        end = int(live[0]) if live.size else g.size
        ratios = g[1:end] / g[: end - 1]
        tail = ratios[int(0.75 * ratios.size):]
        q = float(tail.max())
        worst.append(round(q * (1 + kap), 6))
        if q > 1 / (1 + kap) + 1e-10:
            failures.append(f"gamma/L={gam}: Q={q} > {1 / (1 + kap)}")
        if abs(kap - res.report["kappa"]) > 1e-12:
            failures.append(f"kappa mismatch {kap} vs {res.report['kappa']}")
    grid = np.linspace(0, 1, 1001)
    f1, f2, f3 = classical_factors(grid)
    if not (np.all(f1 <= f2 + 1e-15) and np.all(f2 <= f3 + 1e-15)):
        failures.append("classical factor ordering")
    report(4, failures, f"Q(1+kappa) per grid point {worst}")


# -- AC5 ---------------------------------------------------------------------------------


def test_ac5_polynomial_regime(report):
    t0 = time.perf_counter()
    res = run_builtin("norm_pow_p", 0, {"p": 4, "iters": 100_000})
    elapsed = time.perf_counter() - t0
    tr = res.trace
    sg = tail_fit(tr.gap)
    sd = tail_fit(tr.dist)
    failures = []
    if not -2.2 <= sg <= -1.8:
        failures.append(f"gap slope {sg}")
    if not -0.6 <= sd <= -0.4:
        failures.append(f"dist slope {sd}")
    # lower bound: with u = x^-2, u_{n+1} <= u_n + 8 lam + 16 lam^2 x0^2,
    # so |x_n| >= (x0^-2 + n (8 lam + 16 lam^2 x0^2))^(-1/2)
    lam, x0 = tr.meta["lambda"], 1.0
    n = np.arange(tr.dist.size)
    lower = (x0**-2 + n * (8 * lam + 16 * lam**2 * x0**2)) ** -0.5
    below = np.flatnonzero(tr.dist < lower * (1 - 1e-12))
    if below.size:
        failures.append(f"lower bound fails at n={int(below[0])}")
    if not res.report["checks"]["lower_bound_order"]["pass"]:
        failures.append("built-in lower-bound order check")
    if not res.passed:
        failures.append(f"built-in checks {res.report['failed']}")
    if elapsed >= 5:
        failures.append(f"runtime {elapsed:.2f}s >= 5s")
    report(5, failures, f"gap slope {sg:.4f}, dist slope {sd:.4f}, {elapsed:.2f}s at 1e5 iterations")


# -- AC6 ---------------------------------------------------------------------------------


def test_ac6_negative_exponent(report):
    failures, slopes = [], []
    for a in (0.5, 1.0, 2.0):
        res = run_builtin("counterexample_neg_alpha", 0, {"alpha": a})
        tr = res.trace
        s = tail_fit(tr.gap)
        slopes.append(round(s, 4))
        if abs(s + a / (2 + a)) > 0.1:
            failures.append(f"alpha={a}: slope {s}")
        if not res.report["certification"]["pass"]:
            failures.append(f"alpha={a}: upper envelope")
        C = power_tail_lower_constant(a, tr.meta["lambda"], 1.0)
        n = np.arange(1, tr.gap.size)
        if np.any(tr.gap[1:] < C ** -a * n ** (-a / (2 + a)) * (1 - 1e-12)):
            failures.append(f"alpha={a}: lower bound")
    report(6, failures, f"slopes {slopes} vs {[round(-a / (2 + a), 4) for a in (0.5, 1, 2)]}")


# -- AC7 ---------------------------------------------------------------------------------


@pytest.mark.parametrize("mu", [0.25, 0.5, 1.0])
def test_ac7_source_conditions(report, mu):
    t0 = time.perf_counter()
    res = landweber_rate_experiment("poly", 2000, SourceSpec(mu, 1.0), lam="auto",
                                    iters=10_000, seed=0, q=1.0)
    elapsed = time.perf_counter() - t0
    stop = res.window[1]
    sg = tail_fit(res.trace.gap, stop)
    sd = tail_fit(res.trace.dist, stop)
    failures = []
    if abs(sg + (1 + 2 * mu)) > 0.15:
        failures.append(f"gap slope {sg}")
    if abs(sd + mu) > 0.15:
        failures.append(f"dist slope {sd}")
    # the library fits on log-spaced points, this oracle on every index
    if abs(sg - res.slopes["gap"]) > 0.05 or abs(sd - res.slopes["dist"]) > 0.05:
        failures.append(f"library fit {res.slopes} disagrees with polyfit")
    if not res.passed:
        failures.append(f"checks {res.checks}, certification {res.cert.passed}")
    if elapsed >= 60:
        failures.append(f"runtime {elapsed:.1f}s")
    report(7, failures, f"mu={mu}: gap slope {sg:.3f} (-{1 + 2 * mu}), dist slope {sd:.3f} "
                        f"(-{mu}), library {res.slopes['gap']:.3f}/{res.slopes['dist']:.3f}, "
                        f"window {res.window}, {elapsed:.2f}s")


# -- AC8 ---------------------------------------------------------------------------------


def test_ac8_source_set_constants(report):
    k = np.arange(1, 41, dtype=float)
    sig = 2.0**-k
    failures = []
    for mu in (0.5, 1.0):
        for delta in (1.0, 0.3):
            rep = optimality_witness(sig, mu, delta)
            c = 2.0 ** (-(mu + 1) / (2 * mu + 1)) * delta ** (1 / (1 + 2 * mu))
            if abs(rep.c - c) > 1e-15 * c:
                failures.append(f"mu={mu}: constant {rep.c} != {c}")
            if np.any(np.abs(rep.ratios - c) >= 1e-6):
                failures.append(f"mu={mu}, delta={delta}: ratio off the constant")
            # direct evaluation of f(v)^(1-1/p)/||grad f(v)|| at v = delta sigma^(2mu) e_k
            p = 2 + 1 / mu
            f = delta**2 * sig ** (4 * mu + 2) / 2
            grad = delta * sig ** (2 + 2 * mu)
            if np.any(np.abs(f ** (1 - 1 / p) / grad - c) >= 1e-6):
                failures.append(f"mu={mu}: direct ratio")
            for pp in (p - 0.5, p - 0.1, 2.0):
                # rho_k = const * sigma_k^e with e = (1-1/p')(4mu+2) - (2+2mu) < 0:
                # log rho_k grows linearly in k without bound
                r = optimality_witness(sig, mu, delta, p=pp).ratios
                e = (1 - 1 / pp) * (4 * mu + 2) - (2 + 2 * mu)
                growth = np.diff(np.log(r))
                if not (e < 0 and np.all(growth > 0)
                        and np.allclose(growth, -e * math.log(2), rtol=1e-9)):
                    failures.append(f"mu={mu}: exponent {pp} not refuted")
    report(8, failures, "rho_k = c on k <= 40; smaller exponents diverge")


# -- AC9 ---------------------------------------------------------------------------------


def exact_fixtures():
    A = DenseOperator([[1.0, 0.5, 0.0], [0.0, 1.0, 2.0]])
    out = [(make_quadratic(0.7 * np.eye(2)), exact_cert_strongly_convex(0.7, 2)[0])]
    for p in (1.5, 2.0, 4.0):
        out.append((make_norm_pow(p, dim=2, weight=1.3), exact_cert_norm_pow(p, 1.3, 2)[0]))
    out.append((make_least_squares(A, [1.0, -1.0]), exact_cert_least_squares(A)))
    return out


def test_ac9_certificate_algebra(report):
    failures = []
    for P, cert in exact_fixtures():
        center = P.argmin.project(np.zeros(cert.domain.dim))
        att = attest_invariance(dom.ball(center, 1.0), P, [0.5 / max(P.lipschitz, 1.0)],
                                samples=50)
        back = convert_reverse_on_invariant(to_lojasiewicz(cert), att)
        sub = convert_forward(cert)
        if back.constant > cert.constant * (1 + 1e-12):
            failures.append(f"{P.name}: round trip {back.constant} > {cert.constant}")
        if sub.constant != cert.constant / cert.p:
            failures.append(f"{P.name}: forward gamma/p")
    estimates = []
    for gam in (0.5, 1.0, 2.0):
        P = make_quadratic(gam * np.eye(3))
        e = estimate_lojasiewicz(P, 2.0, dom.ball(np.zeros(3), 1.0), 100_000, seed=0)
        target = 1 / math.sqrt(2 * gam)
        estimates.append(abs(e.value - target))
        if abs(e.value - target) > 1e-4:
            failures.append(f"gamma={gam}: estimate {e.value} vs {target}")
    W = dom.whole_space(1)
    for p, alpha in ((1.0, 1.0), (1.5, 1.0), (1.2, 0.5), (1.4, 0.5)):
        if validate_smoothness_consistency(GeometryCertificate("conditioned", p, 0.1, W), alpha, 1.0):
            failures.append(f"accepted p={p} < alpha+1={alpha + 1}")
    shipped = [
        (exact_cert_strongly_convex(0.7)[0], 1.0, 0.7),
        (exact_cert_least_squares(DenseOperator([[1.0, 0.5], [0.0, 1.0]])), 1.0,
         make_least_squares(DenseOperator([[1.0, 0.5], [0.0, 1.0]]), [0, 0]).lipschitz),
        (exact_cert_norm_pow(1.5, 1.3)[0], 0.5, 1.5 * 1.3 * 2**0.5),
        (exact_cert_norm_pow(2.0, 1.3)[0], 1.0, 2.6),
        (exact_cert_norm_pow(4.0, 1.3)[0], 1.0, 100.0),
    ]
    for cert, alpha, L in shipped:
        v = validate_smoothness_consistency(cert, alpha, L)
        if not v:
            failures.append(f"rejected shipped certificate p={cert.p}: {v.reason}")
    report(9, failures, f"max estimate error {max(estimates):.2e} at 1e5 samples")


# -- AC10 --------------------------------------------------------------------------------


def exhaustive_gamma_s(M, s):
    G = M.T @ M
    return min(np.linalg.eigvalsh(G[np.ix_(I, I)])[0]
               for I in itertools.combinations(range(M.shape[1]), s))


def test_ac10_sparse_recovery(report):
    res = run_builtin("sparse_recovery", 7)
    sp = res.report["sparse"]
    failures = []
    if not sp["identified"]:
        failures.append("support not identified")
    if sp["support"] != sp["reference_support"]:
        failures.append(f"support {sp['support']} != reference {sp['reference_support']}")
    if sp["s"] != 3:
        failures.append("instance is not 3-sparse")
    rng = np.random.default_rng(7)
    A = rng.standard_normal((10, 16)) / math.sqrt(10)
    I = sp["support"]
    gI = float(np.linalg.eigvalsh(A[:, I].T @ A[:, I])[0])
    if abs(gI - sp["gamma_I"]) > 1e-12 * gI:
        failures.append(f"gamma_I {sp['gamma_I']} != {gI}")
    L = float(np.linalg.eigvalsh(A.T @ A)[-1])
    lam = res.trace.meta["lambda"]
    # 2-conditioning gamma_I -> subregularity gamma_I/2 -> Lojasiewicz c = (gamma_I/2)^(-1/2)
    c = (gI / 2) ** -0.5
    kap = lam * (2 - lam * L) / (2 * c * c)
    pred = 1.0 / (1.0 + kap)
    if abs(pred - sp["predicted_qfactor"]) > 1e-12:
        failures.append(f"predicted factor {sp['predicted_qfactor']} != {pred}")
    if sp["measured_qfactor"] is None or sp["measured_qfactor"] > pred + 1e-10:
        failures.append(f"measured Q {sp['measured_qfactor']} > {pred}")
    if not res.passed:
        failures.append(f"built-in checks {res.report['failed']}")
    # restricted eigenvalue against the exhaustive oracle
    n_fix = 0
    for N in range(2, 13):
        for trial in range(2):
            M = np.random.default_rng(100 * N + trial).standard_normal((max(2, N - 2 + trial), N))
            for s in range(1, min(N, 4) + 1):
                got = restricted_min_eig(DenseOperator(M), s)
                want = max(exhaustive_gamma_s(M, s), 0.0)
                n_fix += 1
                if abs(got - want) > 1e-12 * max(1.0, float(np.linalg.norm(M, 2)) ** 2):
                    failures.append(f"N={N}, s={s}: {got} vs {want}")
    report(10, failures, f"n0={sp['n0']}, support {I}, Q {sp['measured_qfactor']:.4f} <= "
                         f"{pred:.4f}; gamma_s oracle on {n_fix} fixtures")


# -- AC11 --------------------------------------------------------------------------------


def equality_sequences(alpha, kap, r0, n):
    """Solve r + kap r^alpha = r_prev by monotone Newton, vectorized over the grid."""
    r = np.empty((n + 1, r0.size))
    r[0] = r0
    for k in range(n):
        prev = r[k]
        x = prev.copy()
        for _ in range(100):
            fx = x + kap * x**alpha - prev
            nx = x - fx / (1 + kap * alpha * x ** (alpha - 1))
            nx = np.maximum(nx, 0.0)
            if np.array_equal(nx, x):
                break
            x = nx
        r[k + 1] = x
    return r


def grid_delta(p, kap, r0, n=10**6, zooms=3):
    b = (p - 2.0) / (2.0 * p - 2.0)
    K = kap**b * r0 ** ((p - 2.0) / p)
    lo, hi = 0.0, 4.0
    for _ in range(zooms + 1):
        t = np.linspace(lo, hi, n)
        s = 10.0**t
        v = np.minimum((p - 2.0) / (p * s), K * -np.expm1(-b * np.log(s)))
        i = int(np.argmax(v))
        best = v[i]
        h = t[1] - t[0]
        lo, hi = max(0.0, t[i] - 2 * h), t[i] + 2 * h
    return best


def test_ac11_sequence_lemma(report):
    N = 10_000
    failures = []
    grid = list(itertools.product((3.0, 4.0, 6.0), (0.1, 1.0, 10.0), (0.5, 1.0, 2.0)))
    worst = 0.0
    for p in (3.0, 4.0, 6.0):
        alpha = alpha_from_p(p)
        for kap in (0.1, 1.0, 10.0):
            r0 = np.array([0.5, 1.0, 2.0])
            r = equality_sequences(alpha, kap, r0, N)
            n = np.arange(1, N + 1)
            for j, x0 in enumerate(r0):
                bound = sublinear_lemma_bound(alpha, kap, x0, n)
                ratio = float(np.max(r[1:, j] / bound))
                worst = max(worst, ratio)
                if ratio > 1 + 1e-12:
                    failures.append(f"p={p}, kappa={kap}, r0={x0}: ratio {ratio}")
    rel = 0.0
    for p, kap, r0 in grid:
        d = grid_delta(p, kap, r0)
        alpha = alpha_from_p(p)
        kt = min(kap, kap ** ((p - 2) / (2 * p - 2)))
        e1 = abs(lemma_delta(alpha, kap, r0) - d) / d
        e2 = abs(cprime(p, kap, r0) - 1 / (kt * d)) * kt * d
        rel = max(rel, e1, e2)
        if e1 > 1e-9 or e2 > 1e-9:
            failures.append(f"p={p}, kappa={kap}, r0={r0}: delta rel {e1:.2e}, C' rel {e2:.2e}")
    report(11, failures, f"max r_n/bound {worst:.4f} over n <= 1e4 on 27 points; "
                         f"max oracle rel error {rel:.1e}")


# -- AC12 --------------------------------------------------------------------------------


def test_ac12_determinism_and_certify(report, tmp_path, capsys):
    failures = []
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        code = main(["run", "all", "--out", str(out), "--seed", "11"])
        if code != 0:
            failures.append(f"run all exited {code}")
    csvs = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.csv"))
    if len(csvs) != sum(1 for n in BUILTINS if n != "figure1_table"):
        failures.append(f"expected one trace per run, got {len(csvs)}")
    for f in sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file()):
        if (outs[0] / f).read_bytes() != (outs[1] / f).read_bytes():
            failures.append(f"{f} differs")
    checked = 0
    for pred in sorted(outs[0].rglob("prediction.json")):
        d = pred.parent
        inline = json.loads((d / "report.json").read_text())["descent_certification"]
        ext = certify_files(d / "trace.csv", pred)
        for key in ("pass", "first_violation", "hypotheses", "checkpoints"):
            if ext[key] != inline[key]:
                failures.append(f"{d.name}: certify {key} {ext[key]} != inline {inline[key]}")
        checked += 1
    capsys.readouterr()
    report(12, failures, f"{len(csvs)} CSVs byte-identical; certify matches inline on {checked} runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
