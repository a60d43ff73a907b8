"""
Landweber, source conditions and rates that depend on the start
===============================================================

On an ill-posed diagonal problem the speed of Landweber is decided by
how smooth the initial error is relative to the operator.  Source sets
turn that smoothness into a Lojasiewicz certificate with exponent
``2 + 1/mu``, and the certificate gives back the classical rates.
"""
import numpy as np

from geofb.invprob import (
    DiagonalInverseProblem,
    SourceSpec,
    construct_source_point,
    landweber_rate_experiment,
    loja_on_source_set,
    make_sigmas,
    membership_check,
    optimality_witness,
)
from geofb.linops import DiagonalOperator

# the constants of the certificate
for mu in (0.25, 0.5, 1.0, -0.25):
    c = loja_on_source_set(SourceSpec(mu, 1.0))
    print(f"mu={mu:5}: p = {c.p:6.2f}, c = {c.constant:.4f}")

# rates: gap ~ n^-(1+2mu), error ~ n^-mu
print("\n  mu   gap slope (theory)   dist slope (theory)   truncation-limited")
for mu in (0.25, 0.5, 1.0):
    r = landweber_rate_experiment("poly", 2000, SourceSpec(mu, 1.0), iters=10_000)
    print(f"{mu:5}   {r.slopes['gap']:7.3f} ({-(1 + 2 * mu):5.2f})"
          f"      {r.slopes['dist']:7.3f} ({-mu:5.2f})        {r.truncation_limited}")

# negative mu: no minimizer in the limit, yet f still decays like n^(p/(2-p))
r = landweber_rate_experiment("poly", 2000, SourceSpec(-0.25, 1.0), iters=10_000)
print(f"\nmu=-0.25: gap slope {r.slopes['gap']:.3f} (theory -0.5), certified: {r.cert.passed}")

# a short spectrum runs out of slow modes; the audit cuts the fit window
r = landweber_rate_experiment("poly", 50, SourceSpec(0.5, 1.0), iters=10_000)
print(f"N=50: truncation-limited={r.truncation_limited}, fit window {r.window}")

# the same point sits in every source set, at very different radii
sig = make_sigmas("poly", 1000)
P = DiagonalInverseProblem(DiagonalOperator(sig), sig / np.sqrt(1000))
x0 = construct_source_point(P, SourceSpec(-0.25, 1.0), np.ones(1000) / np.sqrt(1000)).x0
for mu in (-0.25, 0.0, 0.5):
    m = membership_check(x0, P, mu)
    print(f"radius of x0 in the mu={mu} source set: {m.delta_min:.3g}")

# the constant cannot be improved: along v = delta sigma_k^(2mu) e_k the
# Lojasiewicz ratio is exactly c, and any smaller exponent blows up
sig = 2.0 ** -np.arange(1, 41)
w = optimality_witness(sig, 1.0, 1.0)
print(f"\nwitness ratios at p=3: min {w.ratios.min():.10f}, max {w.ratios.max():.10f}, c = {w.c:.10f}")
w = optimality_witness(sig, 1.0, 1.0, p=2.5)
print("at p=2.5 they grow:", np.array2string(w.ratios[::10], precision=3))
