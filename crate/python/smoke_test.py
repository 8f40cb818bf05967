"""Smoke test for the zscond Python bindings.

Build and install first:

    pip install maturin
    pip install --no-build-isolation -e crates/zscond-py

then run `python python/smoke_test.py`.
"""

import os
import sys
import tempfile

import zscond_py as z


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    failures = []

    s = z.solve([1j])
    if not close(s["intensity"], 0.5, 1e-6):
        failures.append(f"solve E={{i}}: intensity {s['intensity']}")
    if max(abs(c) for c in s["coeffs"]) > 1e-9:
        failures.append(f"solve E={{i}}: coeffs {s['coeffs']}")

    s2 = z.solve([1 + 2j])
    if not close(s2["intensity"], 2.0, 1e-6):
        failures.append(f"solve E={{1+2i}}: intensity {s2['intensity']}")

    e = z.energy([[0j, 1j]])
    if not close(e["i_measure"], 0.5, 1e-6):
        failures.append(f"energy [0,i]: {e['i_measure']}")

    v = z.verify([1j], samples=8)
    if not (v["s_residual"] < 1e-5 and v["schiffer_residual"] < 1e-5 and v["jenkins"]):
        failures.append(f"verify E={{i}}: {v}")

    try:
        z.solve([-1j])
        failures.append("anchor below the axis was accepted")
    except ValueError as err:
        if "anchor below real axis" not in str(err):
            failures.append(f"unexpected message: {err}")

    with tempfile.TemporaryDirectory() as d:
        cfg = os.path.join(d, "job.toml")
        with open(cfg, "w") as f:
            f.write("anchors = [[0.0, 1.0]]\ngrid_res = 128\n")
        code = z.run_cli(["solve", "--config", cfg, "--out", os.path.join(d, "out"), "--no-svg"])
        if code != 0 or not os.path.exists(os.path.join(d, "out", "manifest.json")):
            failures.append(f"cli solve exit {code}")

    for msg in failures:
        print("FAIL", msg)
    if not failures:
        print("ok", z.__version__, f"I(E={{i}}) = {s['intensity']:.15f}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
