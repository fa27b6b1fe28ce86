"""How each controller gain shapes a 0.3 rad step response.

One gain moves at a time; the others stay at c=10, rho=3, k1=1, k2=5.
Run: python demos/gain_effects.py [--jobs 4]
"""

import argparse

from seajoint import SimConfig, gain_sweep
from seajoint.reference import ReferenceSpec

PLAN = {"c": [5, 10, 20], "rho": [1, 3, 30], "k1": [0.5, 1, 5], "k2": [5, 15, 50]}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    base = SimConfig(reference=ReferenceSpec("step", step_size=0.3))
    print(f"{'gain':>5} {'value':>6} {'status':>8} {'overshoot':>10} {'sse [rad]':>10} {'sigma_rms':>10}")
    for axis, values in PLAN.items():
        for row in gain_sweep(base, axis, values, jobs=args.jobs):
            if row.metrics is None:
                print(f"{axis:>5} {row.value:6g} {row.status:>8}  {row.error}")
                continue
            m = row.metrics
            print(f"{axis:>5} {row.value:6g} {row.status:>8} {m.overshoot_fraction:10.3g} "
                  f"{m.steady_state_error:10.3g} {m.sigma_rms_steady:10.3g}")
    print("rho sets the switching amplitude, so sigma_rms grows with it;")
    print("the steady-state error sits near 1e-6 rad for every c, a floor set by sampled switching.")


if __name__ == "__main__":
    main()
