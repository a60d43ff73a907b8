"""
Three ways to say "the function grows away from its minimizers"
===============================================================

Conditioning (growth of f), subregularity (growth of the subgradient)
and the Lojasiewicz inequality are linked by explicit conversions.  Here
we compare exact certificates with sampled estimates, walk the
conversion chain, and watch the constant degrade on a round trip.
"""
import math

import numpy as np

from geofb import domains as dom
from geofb.funcs import make_lasso, make_quadratic
from geofb.geometry import (
    attest_invariance,
    check_certificate,
    convert_forward,
    convert_reverse_on_invariant,
    estimate_conditioning,
    estimate_lojasiewicz,
    exact_cert_strongly_convex,
    to_lojasiewicz,
)
from geofb.linops import DenseOperator

gamma = 0.5
P = make_quadratic(gamma * np.eye(3))
cond, loja = exact_cert_strongly_convex(gamma, dim=3)
print("exact:", cond.kind, cond.p, cond.constant, "|", loja.kind, loja.p, round(loja.constant, 6))

# sampled constants: the largest gamma with f >= (gamma/p) dist^p on the
# samples, and the largest Lojasiewicz ratio; sampling can only err on the
# optimistic side
B = dom.ball(np.zeros(3), 1.0)
e_cond = estimate_conditioning(P, 2.0, B, 20_000, seed=0)
e_loja = estimate_lojasiewicz(P, 2.0, B, 20_000, seed=0)
print(f"sampled gamma {e_cond.value:.6f} ({e_cond.side})")
print(f"sampled c     {e_loja.value:.6f} ({e_loja.side}), 1/sqrt(2 gamma) = {1 / math.sqrt(2 * gamma):.6f}")

# conversions: conditioned -> subregular -> Lojasiewicz
sub = convert_forward(cond)
conv = to_lojasiewicz(cond)
print(f"\nsubregular gamma/p = {sub.constant}, converted c = {conv.constant:.4f}"
      f" (sharp c = {loja.constant:.4f})")
ok, worst = check_certificate(conv, P, n_samples=5000, seed=1)
print("converted certificate holds on samples:", ok)

# back to conditioning needs an invariant set; the factor lost is p^-p
att = attest_invariance(dom.ball(np.zeros(3), 1.0), P, [1.0], samples=200)
back = convert_reverse_on_invariant(conv, att)
print(f"round trip gamma' = {back.constant} = gamma * 2^-2 = {gamma / 4}")

# a lasso has no closed-form constant but sampling still gives a number
rng = np.random.default_rng(2)
A = DenseOperator(rng.standard_normal((5, 3)))
L = make_lasso(A, rng.standard_normal(5), 0.2)
S = dom.ball_and_sublevel(L, L.argmin.xbar, 1.0, 0.5)
print(f"\nlasso: sampled 2-conditioning near the minimizer {estimate_conditioning(L, 2.0, S, 5000, seed=0).value:.4f}")
