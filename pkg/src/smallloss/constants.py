"""Calibrated constants hidden behind asymptotic sample-size statements.

Both are produced by `smallloss calibrate` (see calibration.py) and are the
smallest powers of two meeting the success threshold on the reference family.
"""

C_M = 0.25
C_m = 0.5

# Additive slack for the oracle guarantee, in units of loss over the full horizon.
SLACK = 1.0
