import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from geofb import domains as dom
from geofb.funcs import (
    make_counterexample_neg,
    make_l1,
    make_lasso,
    make_least_squares,
    make_norm_pow,
    make_quadratic,
)
from geofb.geometry import (
    GeometryCertificate,
    attest_invariance,
    certificate_from_dict,
    check_certificate,
    conditioning_from_ellipticity,
    convert_forward,
    convert_reverse_on_invariant,
    ellipticity_check,
    estimate_conditioning,
    estimate_lojasiewicz,
    estimate_subregularity,
    exact_cert_counterexample,
    exact_cert_l1,
    exact_cert_least_squares,
    exact_cert_norm_pow,
    exact_cert_strongly_convex,
    hierarchy_restrict,
    to_lojasiewicz,
    validate_smoothness_consistency,
)
from geofb.linops import DenseOperator, DiagonalOperator, restricted_min_eig

W1 = dom.whole_space(1)


def _sc_quadratic(gamma, dim=2):
    return make_quadratic(gamma * np.eye(dim))


def exact_fixtures():
    """(problem, certificate) pairs for every exact constructor."""
    out = []
    P = _sc_quadratic(0.7)
    for c in exact_cert_strongly_convex(0.7, dim=2):
        out.append((P, c))
    for p in (1.5, 2.0, 4.0):
        P = make_norm_pow(p, dim=2, weight=1.3)
        out.extend((P, c) for c in exact_cert_norm_pow(p, weight=1.3, dim=2))
    P = make_l1(0.6, dim=3)
    out.extend((P, c) for c in exact_cert_l1(0.6, dim=3))
    A = DenseOperator([[1.0, 0.5, 0.0], [0.0, 1.0, 2.0]])
    out.append((make_least_squares(A, [1.0, -1.0]), exact_cert_least_squares(A)))
    out.append((make_counterexample_neg(1.0), exact_cert_counterexample(1.0)))
    return out


# -- certificate type ---------------------------------------------------------------------


def test_certificate_validation():
    with pytest.raises(ValueError):
        GeometryCertificate("conditioned", -1.0, 1.0, W1)
    with pytest.raises(ValueError):
        GeometryCertificate("lojasiewicz", 0.5, 1.0, W1)
    with pytest.raises(ValueError):
        GeometryCertificate("lojasiewicz", 2.0, 0.0, W1)
    with pytest.raises(ValueError):
        GeometryCertificate("sharp", 2.0, 1.0, W1)
    GeometryCertificate("lojasiewicz", -1.0, 1.0, W1)


def test_certificate_json_round_trip():
    c = GeometryCertificate("lojasiewicz", 2.0, 0.7071, W1)
    d = c.to_dict()
    assert d["kind"] == "lojasiewicz" and d["provenance"] == "exact"
    assert d["domain"]["kind"] == "whole_space"
    back = certificate_from_dict(d, W1)
    assert (back.kind, back.p, back.constant) == (c.kind, c.p, c.constant)


def test_conditioned_needs_argmin():
    cert = GeometryCertificate("conditioned", 2.0, 1.0, dom.ball([2.0], 0.5))
    with pytest.raises(ValueError):
        check_certificate(cert, make_counterexample_neg(1.0))


# -- conversions ----------------------------------------------------------------------------


def test_convert_forward_examples():
    s = convert_forward(GeometryCertificate("conditioned", 2.0, 2.0, W1))
    assert (s.kind, s.constant, s.provenance) == ("subregular", 1.0, "converted")
    l = convert_forward(GeometryCertificate("subregular", 2.0, 1.0, W1))
    assert (l.kind, l.constant) == ("lojasiewicz", 1.0)
    g = 0.37
    l1 = to_lojasiewicz(GeometryCertificate("conditioned", 1.0, g, W1))
    assert l1.constant == pytest.approx(1 / g, rel=1e-15)
    with pytest.raises(ValueError):
        convert_forward(l1)


def _attest(problem, dim):
    return attest_invariance(dom.ball(np.zeros(dim), 1.0), problem,
                             [0.5 / max(problem.lipschitz, 1.0)], samples=50)


def test_convert_reverse_examples():
    P = _sc_quadratic(1.0, 1)
    att = _attest(P, 1)
    assert att.passed and "proxy" in att.assumption
    c = convert_reverse_on_invariant(GeometryCertificate("lojasiewicz", 2.0, 1.0, W1), att)
    assert (c.kind, c.constant) == ("conditioned", 0.5)
    c1 = convert_reverse_on_invariant(GeometryCertificate("lojasiewicz", 1.0, 1.0, W1), att)
    assert c1.constant == 1.0
    with pytest.raises(ValueError):
        convert_reverse_on_invariant(GeometryCertificate("lojasiewicz", 2.0, 1.0, W1), None)


@pytest.mark.parametrize("P,cert", [f for f in exact_fixtures() if f[1].kind == "conditioned"])
def test_round_trip_never_improves(P, cert):
    att = attest_invariance(dom.ball(P.argmin.project(np.zeros(cert.domain.dim)), 1.0), P,
                            [0.5 / max(P.lipschitz, 1.0)], samples=50)
    back = convert_reverse_on_invariant(to_lojasiewicz(cert), att)
    assert back.constant <= cert.constant * (1 + 1e-12)


@given(st.floats(1.0, 8.0), st.floats(0.01, 100.0))
def test_round_trip_factor(p, g):
    cert = GeometryCertificate("conditioned", p, g, W1)
    att = attest_invariance(dom.ball([0.0], 1.0), _sc_quadratic(1.0, 1), [0.5], samples=5)
    back = convert_reverse_on_invariant(to_lojasiewicz(cert), att)
    # c = (gamma/p)^(-1/p), so gamma' = c^-p p^(1-p) = gamma p^-p
    assert back.constant == pytest.approx(g * p ** -p, rel=1e-9)
    assert back.constant <= g * (1 + 1e-12)


# -- exact certificates ----------------------------------------------------------------------


def test_strongly_convex_examples():
    assert exact_cert_strongly_convex(0.5)[1].constant == 1.0
    assert exact_cert_strongly_convex(2.0)[1].constant == 0.5
    gam = 1.7
    P = _sc_quadratic(gam, 3)
    c = exact_cert_strongly_convex(gam, 3)[1].constant
    x = np.random.default_rng(0).standard_normal((100, 3))
    assert np.allclose(np.sqrt(P.gap(x)), c * P.min_norm_subgrad(x), rtol=1e-12)


def test_least_squares_examples():
    assert exact_cert_least_squares(DiagonalOperator([2.0, 0.0])).constant == 4.0
    assert exact_cert_least_squares(DenseOperator(np.eye(3))).constant == pytest.approx(1.0)
    assert exact_cert_least_squares(DenseOperator(np.zeros((2, 2)))) is None
    M = np.random.default_rng(4).standard_normal((4, 4))
    ev = np.linalg.eigvalsh(M.T @ M)
    assert exact_cert_least_squares(DenseOperator(M)).constant == pytest.approx(ev[0], rel=1e-9)


@pytest.mark.parametrize("P,cert", exact_fixtures(), ids=lambda v: getattr(v, "kind", "P"))
def test_exact_certificates_sound(P, cert):
    ok, worst = check_certificate(cert, P, n_samples=10_000, seed=3)
    assert ok, worst


@pytest.mark.parametrize("P,cert", [f for f in exact_fixtures() if f[1].p >= 1])
def test_forward_conversion_sound(P, cert):
    while cert.kind != "lojasiewicz":
        cert = convert_forward(cert)
        ok, worst = check_certificate(cert, P, n_samples=5000, seed=4)
        assert ok, worst


def smooth_exact_claims():
    """(conditioning certificate, Holder exponent, Holder constant) for every
    shipped exact certificate of a differentiable function."""
    out = [(exact_cert_strongly_convex(0.7)[0], 1.0, 0.7)]
    A = DenseOperator([[1.0, 0.5, 0.0], [0.0, 1.0, 2.0]])
    out.append((exact_cert_least_squares(A), 1.0, make_least_squares(A, [0, 0]).lipschitz))
    w = 1.3
    # grad of w|x|^p: p w |x|^(p-1) sign x; its Holder constant for p < 2 is
    # attained at y = -x and equals p w 2^(2-p)
    out.append((exact_cert_norm_pow(1.5, w)[0], 0.5, 1.5 * w * 2**0.5))
    out.append((exact_cert_norm_pow(2.0, w)[0], 1.0, 2.0 * w))
    out.append((exact_cert_norm_pow(4.0, w)[0], 1.0, 100.0))
    return out


@pytest.mark.parametrize("cert,alpha,L", smooth_exact_claims())
def test_exact_certificates_pass_smoothness_validation(cert, alpha, L):
    assert validate_smoothness_consistency(cert, alpha, L).ok


def test_holder_constant_of_three_halves_power():
    w = 1.3
    x = np.linspace(-2, 2, 801)
    g = 1.5 * w * np.sign(x) * np.abs(x) ** 0.5
    dx = np.abs(x[:, None] - x[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(g[:, None] - g[None, :]) / dx**0.5
    assert np.nanmax(ratio) == pytest.approx(1.5 * w * 2**0.5, rel=1e-9)


# -- estimators -------------------------------------------------------------------------------


def test_estimate_conditioning_examples():
    P = make_norm_pow(2.0, dim=2)
    e = estimate_conditioning(P, 2.0, dom.ball([0.0, 0.0], 1.0), 10_000, seed=1)
    assert 1.999 <= e.value <= 2.001
    assert e.side == "at least the best gamma"
    e4 = estimate_conditioning(make_norm_pow(4.0), 4.0, dom.ball([0.0], 1.0), 2000, seed=1)
    assert e4.value == pytest.approx(4.0, rel=1e-12)


def test_estimate_conditioning_away_from_argmin():
    # any exponent works on a compact set that avoids the minimizers
    P = make_quadratic(np.diag([1.0, 0.0]))  # argmin is the second axis
    A = dom.annulus([0.0, 0.0], 1.0, 2.0).intersect(dom.half_space([1.0, 0.0], 0.5))
    for p in (1.0, 2.0, 5.0):
        e = estimate_conditioning(P, p, A, 2000, seed=2)
        assert 0 < e.value < math.inf


def test_estimate_conditioning_all_minimizers():
    P = make_quadratic(np.diag([1.0, 0.0]))
    S = dom.support_subspace([1], 2)
    assert estimate_conditioning(P, 2.0, S, 100, seed=0).all_minimizers


def test_estimate_lojasiewicz_examples():
    e = estimate_lojasiewicz(make_quadratic([[1.0]]), 2.0, dom.ball([0.0], 1.0), 1000, seed=0)
    assert e.value == pytest.approx(1 / math.sqrt(2), rel=1e-9)
    assert e.side == "at most the best c"
    e1 = estimate_lojasiewicz(make_l1(1.0), 1.0, dom.ball([0.0], 1.0), 1000, seed=0)
    assert e1.value == pytest.approx(1.0, rel=1e-12)


def test_estimate_lojasiewicz_power_tail():
    alpha = 1.0
    P = make_counterexample_neg(alpha)
    D = exact_cert_counterexample(alpha).domain
    e = estimate_lojasiewicz(P, -alpha, D, 5000, seed=1)
    p = -alpha
    x = np.linspace(1.0, 1e3, 100_001)
    analytic = np.max(x ** (-alpha * (1 - 1 / p)) / (alpha * x ** (-alpha - 1)))
    assert e.value == pytest.approx(analytic, rel=1e-9)


def test_estimate_subregularity():
    e = estimate_subregularity(make_norm_pow(3.0, dim=2), 3.0, dom.ball([0.0, 0.0], 2.0), 2000)
    assert e.value == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("gamma", [0.5, 2.0])
def test_strong_convexity_sharpness(gamma):
    P = _sc_quadratic(gamma, 3)
    target = 1 / math.sqrt(2 * gamma)
    e = estimate_lojasiewicz(P, 2.0, dom.ball(np.zeros(3), 1.0), 20_000, seed=5)
    assert abs(e.value - target) <= 1e-6


def test_sum_rule_fixture_positive():
    A = DenseOperator([[1.0, 0.2], [0.1, 0.8], [0.3, -0.4]])
    P = make_lasso(A, [1.0, 0.5, -0.2], 0.1)
    S = dom.ball_and_sublevel(P, P.argmin.xbar, 1.0, 0.5)
    e = estimate_conditioning(P, 2.0, S, 5000, seed=0)
    assert e.value > 1e-6


def test_estimators_deterministic():
    P = make_norm_pow(1.5, dim=2)
    D = dom.ball([0.0, 0.0], 1.0)
    assert estimate_lojasiewicz(P, 1.5, D, 500, seed=9) == estimate_lojasiewicz(P, 1.5, D, 500, 9)


# -- hierarchy and smoothness --------------------------------------------------------------------


def test_hierarchy_examples():
    c = hierarchy_restrict(GeometryCertificate("conditioned", 2.0, 2.0, W1), 4.0, delta=1.0)
    assert c.constant == 4.0
    d = np.linspace(0, 1, 10_001)
    assert np.all((4.0 / 4) * d**4 <= (2.0 / 2) * d**2 + 1e-15)
    l = hierarchy_restrict(GeometryCertificate("lojasiewicz", 2.0, 1.0, W1), 3.0, r=1.0)
    assert l.constant == 1.0
    same = GeometryCertificate("subregular", 2.0, 1.5, W1)
    assert hierarchy_restrict(same, 2.0, delta=0.3) is same
    with pytest.raises(ValueError):
        hierarchy_restrict(same, 3.0)


@pytest.mark.parametrize("kind", ["conditioned", "subregular", "lojasiewicz"])
def test_hierarchy_sound_on_norm_pow(kind):
    p, pp = 2.0, 3.5
    P = make_norm_pow(p, dim=2)
    cond, loja = exact_cert_norm_pow(p, dim=2)
    base = {"conditioned": cond, "subregular": convert_forward(cond), "lojasiewicz": loja}[kind]
    delta = r = 0.8
    new = hierarchy_restrict(base, pp, delta=delta, r=r)
    # domain: ball of radius 0.8 is inside both the delta-ball and the r-sublevel set
    xs = dom.ball([0.0, 0.0], 0.8).sample(5000, seed=1)
    assert np.all(new.holds_at(P, xs))


def test_smoothness_examples():
    assert not validate_smoothness_consistency(GeometryCertificate("conditioned", 1.0, 1.0, W1),
                                               1.0, 1.0)
    assert validate_smoothness_consistency(GeometryCertificate("conditioned", 2.0, 0.5, W1),
                                           1.0, 1.0)
    r = validate_smoothness_consistency(GeometryCertificate("conditioned", 2.0, 2.0, W1), 1.0, 1.0)
    assert not r and "exceeds" in r.reason
    # p < alpha + 1 for Holder exponent 0.5
    assert not validate_smoothness_consistency(
        GeometryCertificate("conditioned", 1.2, 1.0, W1), 0.5, 1.0)


# -- ellipticity -------------------------------------------------------------------------------


def test_ellipticity_examples():
    assert ellipticity_check(np.eye(3), dom.support_subspace([0, 2], 3), 1.0)
    assert ellipticity_check(np.eye(3), dom.ball(np.zeros(3), 1.0), 1.0)
    A = np.array([[1.0, 0.0], [1.0, 0.0]])
    rep = ellipticity_check(A.T @ A, dom.support_subspace([1], 2), 0.1)
    assert not rep and rep.exact
    assert rep.counterexample @ (A.T @ A) @ rep.counterexample == pytest.approx(0.0)


def test_ellipticity_sparse_cone_threshold():
    M = np.random.default_rng(8).standard_normal((5, 7))
    g = restricted_min_eig(DenseOperator(M), 3)
    cone = dom.cone_s_sparse(3, 7)
    assert ellipticity_check(M.T @ M, cone, g)
    assert not ellipticity_check(M.T @ M, cone, g + 1e-6)


def test_conditioning_from_ellipticity():
    c, d = conditioning_from_ellipticity(1.0, 0.5, 1.0)
    assert d == 0.5 and c.constant == 0.5
    c, d = conditioning_from_ellipticity(2.0)
    assert d == math.inf and c.constant == 2.0
    _, d = conditioning_from_ellipticity(1.0, 1.0 - 1e-9, 3.0)
    assert d < 1e-9
    with pytest.raises(ValueError):
        conditioning_from_ellipticity(1.0, 1.0, 1.0)


def test_least_squares_on_support_subspace():
    M = np.random.default_rng(2).standard_normal((6, 8))
    I = [1, 4, 5]
    gI = float(np.linalg.eigvalsh(M[:, I].T @ M[:, I])[0])
    cone = dom.support_subspace(I, 8)
    assert ellipticity_check(M.T @ M, cone, gI - 1e-12)
    y = M[:, I] @ np.array([1.0, -2.0, 0.5])
    P = make_least_squares(DenseOperator(M), y)
    xbar = np.zeros(8)
    xbar[I] = [1.0, -2.0, 0.5]
    cert, _ = conditioning_from_ellipticity(gI, cone=cone, center=xbar)
    xs = cert.domain.sample(2000, seed=0)
    # on xbar + X_I the growth is governed by the restricted eigenvalue
    d = np.linalg.norm(xs - xbar, axis=1)
    assert np.all(P.value(xs) + 1e-10 >= 0.5 * gI * d**2)
