"""Collapse the motor/ball-screw drive to a first-order velocity model.

Run: python demos/motor_reduction.py
"""

from seajoint.plant import MotorParams, reduce_motor_model

IDENTIFIED_POLE = 47.535

red = reduce_motor_model(MotorParams())
print("characteristic polynomial A2 s^2 + A1 s + A0:")
print(f"  A2 = {red.A2:.4g}   A1 = {red.A1:.4g}   A0 = {red.A0:.4g}")
print(f"velocity pole c_v = A0/A1 = {red.c_v:.4f} 1/s "
      f"(identified value {IDENTIFIED_POLE}, {red.pole_deviation():+.3%})")
print(f"electrical time constant L/R = {red.electrical_time_constant * 1e3:.3f} ms")
for rate in (1, 10, 47.6, 100):
    print(f"  dropping the A2 term costs {red.neglect_ratio(rate):7.3%} at s = {rate:g} 1/s")
