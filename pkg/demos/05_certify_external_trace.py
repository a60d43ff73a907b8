"""
Certifying a solver the library did not write
=============================================

Any descent method with sufficient decrease ``a |x+ - x|^2 <= f(x) - f(x+)``
and a relative-error bound ``|subgrad f(x+)| <= b |x+ - x|`` inherits the
rates of a Lojasiewicz certificate with ``kappa = a/(b^2 c^2)``.  Here a
hand-written gradient method on a quartic writes its own trace CSV, and
``geofb certify`` checks it.
"""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

# f(x) = sum x_i^4 / 4 has inf 0, gradient x^3 and Lojasiewicz exponent 4.
# With u = x^2, f^(3/4) / |grad f| = 4^(-3/4) |u|_2^(3/2) / |u|_3^(3/2), which
# is largest when all coordinates are equal: c = 4^(-3/4) d^(1/4)
def f(x):
    return 0.25 * np.sum(x**4)


def grad(x):
    return x**3


x = np.array([0.9, -0.5, 0.3])
lam = 0.5                 # below 2/L with L = 3 max x_i^2 on this sublevel set
L = 3 * 0.9**2
rows = [(0, f(x), 0.0, np.linalg.norm(grad(x)))]
for n in range(1, 5001):
    x_new = x - lam * grad(x)
    rows.append((n, f(x_new), np.linalg.norm(x_new - x), np.linalg.norm(grad(x_new))))
    x = x_new

out = Path(tempfile.mkdtemp())
with open(out / "trace.csv", "w", newline="\n") as fh:
    fh.write("n,gap,step,resid\n")
    for n, g, s, r in rows:
        fh.write(f"{n},{g:.17g},{s:.17g},{r:.17g}\n")

# gradient descent with step lam: a = (2 - lam L)/(2 lam), b = 1/lam + L
pred = {"a": (2 - lam * L) / (2 * lam), "b": 1 / lam + L, "c": 4 ** -0.75 * 3 ** 0.25, "p": 4.0}
(out / "prediction.json").write_text(json.dumps(pred))

cmd = [sys.executable, "-m", "geofb.cli", "certify",
       "--trace", str(out / "trace.csv"), "--prediction", str(out / "prediction.json")]
proc = subprocess.run(cmd, capture_output=True, text=True)
verdict = json.loads(proc.stdout)
print("exit code:", proc.returncode)
print("hypotheses (first violation):", verdict["hypotheses"])
print(f"kappa = {verdict['kappa']:.4f}, regime {verdict['regime']}, slope {verdict['measured_slope']:.3f}")
print("pass:", verdict["pass"])

# a trace that stalls at n=7 breaks sufficient decrease and is caught there
lines = (out / "trace.csv").read_text().splitlines()
g6 = lines[7].split(",")[1]
parts = lines[8].split(",")
parts[1] = g6
lines[8] = ",".join(parts)
(out / "bad.csv").write_text("\n".join(lines) + "\n")
cmd[cmd.index("--trace") + 1] = str(out / "bad.csv")
proc = subprocess.run(cmd, capture_output=True, text=True)
print("\nstalled trace: exit", proc.returncode, "-", json.loads(proc.stdout)["detail"])
