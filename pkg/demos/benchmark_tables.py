"""Run both analytic benchmark reconstructions with both schemes.

Prints the final max-norm errors against the known target and initial
datum together with the iteration budgets, one row per (case, scheme).
"""

import warnings

import fraginv as fi

warnings.simplefilter("ignore")  # the quadratic rate trips the step-size warning

print(f"{'case':6s} {'scheme':6s} {'E(target)':>12s} {'E(initial)':>12s} "
      f"{'iters':>6s} {'J final':>12s} {'time':>7s}")
for case_id in ("test1", "test2"):
    for scheme in ("fvs", "wfvs"):
        report, ctx = fi.run_benchmark(case_id, scheme)
        print(f"{case_id:6s} {scheme:6s} "
              f"{report.target_error_history[-1]:12.4e} "
              f"{report.initial_error_history[-1]:12.4e} "
              f"{report.iterations:6d} "
              f"{report.cost_history[-1]:12.4e} "
              f"{report.wall_time:6.2f}s")

print()
print("The width-weighted cost falls steadily in every run; the max-norm")
print("errors are dominated by the smallest size classes, which the cost")
print("weights by their tiny cell widths and therefore corrects slowly.")
