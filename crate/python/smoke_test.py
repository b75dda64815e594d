"""Smoke test for the dpnls extension module.

Build and install first, e.g.
    pip install maturin
    pip install --no-build-isolation -e crates/dpnls-py
then run `python python/smoke_test.py`.
"""

import cmath
import json
import math

import dpnls


def check(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")
    return ok


def main():
    results = []

    # double pole at z = i, (c0, c1) = (0, 1): mass 8 = 4 * order * Im z
    dp = [(1j, 2, 0j, 1 + 0j)]
    h = 0.01
    xs = [-20 + h * j for j in range(4001)]
    mass = sum(abs(q) ** 2 for q in dpnls.soliton_field(dp, xs, 0.3)) * h
    results.append(check("double-pole mass", abs(mass - 8.0) < 1e-6, f"{mass:.10f}"))

    # simple pole at 0.25 + 0.75i: peak |q| = 2 Im z
    peak = max(abs(dpnls.solve_soliton([(0.25 + 0.75j, 1, 0.9 + 0.1j, 0j)], x, 0.3)) for x in xs[1000:3000])
    results.append(check("simple-pole amplitude", abs(peak - 1.5) < 1e-3, f"{peak:.6f}"))

    # 2 sech: unitary, reflectionless, zeros at i/2 and 3i/2
    px = [-25 + 0.02 * j for j in range(2501)]
    pq = [complex(2 / math.cosh(x)) for x in px]
    s11, s21 = dpnls.transmission(px, pq, 0.4)
    results.append(check("2 sech unitarity", abs(abs(s11) ** 2 + abs(s21) ** 2 - 1) < 1e-8))
    zeros = dpnls.locate_zeros(px, pq, (-1.0, 1.0, 0.05, 2.5))
    ok = len(zeros) == 2 and abs(zeros[0][0] - 0.5j) < 1e-8 and abs(zeros[1][0] - 1.5j) < 1e-8
    results.append(check("2 sech zeros", ok, str(zeros)))

    # reflectionless data: the long-time formula is the soliton itself
    doc = json.dumps({"z_grid": [], "r": [], "discrete": [{"z": [0.0, 1.0], "order": 2, "c0": [0.0, 0.0], "c1": [1.0, 0.0]}]})
    v = dpnls.q_asymptotic(doc, 0.5, 10.0)
    results.append(check("asymptotic formula, r = 0", v["f"] == 0 and v["q_total"] == dpnls.solve_soliton(dp, 0.5, 10.0)))
    try:
        dpnls.q_asymptotic(doc, 0.5, 1.0)
        results.append(check("time guard raises", False))
    except ValueError as e:
        results.append(check("time guard raises", "guard" in str(e)))

    # split-step keeps the sech soliton: q = sech(x) e^{it/2}
    n = 1024
    grid = [-40 + 80 * j / n for j in range(n)]
    q0 = [complex(1 / math.cosh(x)) for x in grid]
    out = dpnls.split_step(-40.0, 40.0, n, 1e-3, q0, [1.0])[0]
    err = max(abs(q - cmath.exp(0.5j) / math.cosh(x)) for x, q in zip(grid, out))
    results.append(check("split-step sech soliton", err < 1e-5, f"{err:.2e}"))

    g = dpnls.complex_gamma(0.3j)
    results.append(check("complex gamma", abs(g - (-0.50283075294296199 - 3.0609100779704617j)) < 1e-13))

    if not all(results):
        raise SystemExit(1)
    print("smoke test passed")


if __name__ == "__main__":
    main()
