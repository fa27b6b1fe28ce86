"""Run the invariant suite on defaults, then break things on purpose.

Run: python demos/validation_report.py [--full]
"""

import argparse

from seajoint import run_validation_suite
from seajoint.geometry import LinkGeometry, default_geometry


def show(title, report):
    print(f"--- {title}: {'all green' if report.ok else 'FAILURES'}")
    for line in report.lines():
        print("  " + line)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--full", action="store_true", help="include the 8 s closed-loop checks")
    args = parser.parse_args()

    show("shipped defaults", run_validation_suite(full=args.full))

    g = default_geometry()
    bent = LinkGeometry(*g.measured, g.d6 * 1.001, g.d7, g.alpha, g.sigma)
    show("d6 off by 0.1%", run_validation_suite(geom=bent, full=False))

    show("plant step 0.1 s", run_validation_suite(dt_plant=0.1, full=False))


if __name__ == "__main__":
    main()
