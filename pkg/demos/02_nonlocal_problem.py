"""A nonlocal hybrid differential problem (case Ex1).

The chain x_{p} = T_p(x_{p-1}) is compared with the trapezoid Picard
oracle, and the two node layouts are shown side by side.
"""

from hybridfp import bench_examples as bench
from hybridfp.hybrid_core import picard_iterate, sup_norm

case = bench.load_case("Ex1")
print("parameters:", case.params)

cert = bench.certificate(case)
print("certificate:", cert.to_dict())

F, G = bench.operators(case)
for m in (1, 2, 3, 4):
    std = bench.chain(case, m, 33, "standard")[-1]
    lag = bench.chain(case, m, 33, "lagged")[-1]
    oracle = picard_iterate(F, G, case.x0, m, 4096)
    print(f"m = {m}:  |x_m - x*| standard {sup_norm(std - case.exact):.3e}"
          f"  lagged {sup_norm(lag - case.exact):.3e}"
          f"  oracle {sup_norm(oracle - case.exact):.3e}")

# The lagged layout reproduces the reference column; the standard one converges faster.
rep = bench.run_case(case, 4, 33, "lagged")
print(f"reference comparison, max deviation {rep.max_deviation:.2e}, error norm {rep.error_norm:.6e}"
      f" vs {rep.expected_error_norm:.6e}")
print("t      x_4(t)")
for t, v in zip(rep.t, rep.values):
    print(f"{t:.1f}  {v:.17g}")
