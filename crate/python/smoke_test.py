"""Smoke test for the pysyzygy extension.

Build and install first:  pip install --no-build-isolation ./crates/py
Then run:                 python3 python/smoke_test.py
"""

import math

import pysyzygy as sz


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
    return ok


def main():
    results = []
    equal = sz.Masses(1, 1, 1)
    unequal = sz.Masses(1, 2, 3)

    right = sz.State([(0, 0), (4, 0), (0, 3)], [(0, 0)] * 3)
    inv = sz.triangle_invariants(equal, right)
    results.append(check("heron 3-4-5", sz.heron(inv["s"], inv["delta"]) == 0 and 16 * inv["delta"] ** 2 == 576))
    w = sz.cone_vector(right)
    results.append(check("cone", abs(w[0] ** 2 - w[1] ** 2 - w[2] ** 2 - w[3] ** 2) < 1e-12 * w[0] ** 2))

    traj = sz.simulate_lagrange_circular(unequal, 1.0, 20.0)
    results.append(check("lagrange circle", traj.sequence() == "(none)", traj.sequence()))

    collapse = sz.simulate(equal, sz.lagrange_homothety(equal, 1.0), 10.0)
    results.append(check("homothety collapse", collapse.termination == "triple-collision", collapse.termination))

    loop, report, start = sz.find_eight()
    period = loop["period"]
    eight = sz.simulate(equal, start, 3 * period)
    results.append(check("eight sequence", eight.sequence() == "123123 x3", eight.sequence()))
    residual = eight.ode_residual()
    results.append(check("oscillation residual", residual["tolerance_pass"], f"{residual['max_residual']:.2e}"))
    verdicts = eight.verify()
    results.append(check("trajectory checks", all(v["pass"] for v in verdicts.values())))
    negated = eight.ode_residual(negate_q=True)
    results.append(check("negated q is rejected", not negated["tolerance_pass"], f"{negated['max_residual']:.2e}"))

    _, summary = sz.inequality_scan(unequal, 40)
    results.append(check("inequality minima", summary["min_ineq1"]["value"] > 0 and summary["min_ineq2"]["value"] > 0))

    state = sz.random_zero_j(unequal, 7)
    terms = sz.oscillation_terms(unequal, state)
    results.append(check("q terms", terms["kinetic"] >= 0 and terms["potential"] >= 0 and math.isfinite(terms["f"])))

    raise SystemExit(0 if all(results) else 1)


if __name__ == "__main__":
    main()
