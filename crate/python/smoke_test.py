"""Smoke test for the msem_flow Python extension.

Build and install first:

    pip install maturin
    cd crates/python && maturin build --release
    pip install ../../target/wheels/msem_flow-*.whl
"""

import math
import sys
import tempfile
from pathlib import Path

import msem_flow


def check(cond, msg):
    if not cond:
        print(f"FAIL {msg}")
        sys.exit(1)
    print(f"ok   {msg}")


def main():
    nodes, weights = msem_flow.gll_rule(4)
    check(abs(nodes[1] + math.sqrt(3 / 7)) < 1e-14, "GLL order 4 interior node")
    check(abs(sum(weights) - 2.0) < 1e-14, "GLL weights sum to 2")

    check(all(msem_flow.verify_complex(n, nt) for n in range(1, 4) for nt in range(1, 3)),
          "discrete complex")

    b = msem_flow.Basis1D(3)
    check(abs(sum(b.eval_nodal(i, 0.37) for i in range(4)) - 1.0) < 1e-14, "partition of unity")

    law = msem_flow.MaterialLaw(0.85)
    check(abs(law.pressure_pw(1.0) - 1.0) < 1e-15, "P_W(1) = P_ref")
    try:
        law.pressure_pw(-1.0)
        check(False, "negative J rejected")
    except ArithmeticError:
        check(True, "negative J rejected")
    try:
        msem_flow.MaterialLaw(1.0, rho0=-1.0)
        check(False, "invalid density rejected")
    except ValueError:
        check(True, "invalid density rejected")

    sim = msem_flow.Simulation(3, 0.85)
    r0 = sim.record()
    rows = sim.run(10)
    check(len(rows) == 10 and abs(sim.t - 0.1) < 1e-15, "ten slabs advance to t = 0.1")
    drift = max(abs(r.e_tot - r0.e_tot) for r in rows) / r0.e_tot
    check(drift < 1e-11, f"energy drift {drift:.2e}")
    check(max(abs(r.px) + abs(r.py) + abs(r.angular) for r in rows) < 1e-13, "momenta stay zero")
    check(rows[-1].e_kin > 0.0, "body starts moving")

    with tempfile.TemporaryDirectory() as d:
        cfg = Path(d) / "run.cfg"
        cfg.write_text("alpha=1.15\norder=2\ndt=0.01\nt_final=0.03\n")
        out = Path(d) / "out"
        recs = msem_flow.run_config(str(cfg), str(out))
        check(len(recs) == 4 and (out / "invariants.csv").is_file(), "run_config writes outputs")

    print("smoke test passed")


if __name__ == "__main__":
    main()
