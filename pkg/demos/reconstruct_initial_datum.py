"""Recover an initial size distribution from a final-time snapshot.

The target is the closed-form solution of the linear-rate benchmark at
t = 2.  Starting from a deliberately wrong ramp-shaped guess, fixed-step
adjoint descent pulls the final-state mismatch back to t = 0 and walks the
initial datum toward the profile that produced the target.
"""

import fraginv as fi

report, ctx = fi.run_benchmark("test1", "wfvs")
grid = ctx["grid"]

print("descent on the linear-rate benchmark (wfvs forward, continuous adjoint)")
print(f"learning rate {ctx['config'].step_size}, {report.iterations} iterations, "
      f"{report.wall_time:.2f}s")
print()
print("  iter        J          E(target)    E(initial)")
for k in (0, 1, 2, 5, 10, 20, 50):
    if k < len(report.cost_history):
        print(f"  {k:4d}  {report.cost_history[k]:.6e}  "
              f"{report.target_error_history[k]:.6e}  "
              f"{report.initial_error_history[k]:.6e}")
print()

print("reconstruction against the exact initial datum exp(-x):")
print("     x       guess      reconstructed   exact")
for k in (0, 10, 20, 25, 30, 34):
    print(f"  {grid.centers[k]:8.4f}  {ctx['guess'][k]:9.5f}  "
          f"{report.reconstructed[k]:13.5f}  {ctx['exact_initial'][k]:9.5f}")
print()
print("The mismatch seen at t = T keeps shrinking, while the smallest size")
print("classes recover slowly: breakage forgets where fragments came from,")
print("so the backward problem is genuinely ill posed there.")
