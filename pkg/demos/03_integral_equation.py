"""A hybrid Volterra equation (case Ex3) and its contraction certificate.

At the ball radius 3 the certificate fails; a smaller radius certifies the
same problem, and the chain converges either way.
"""

from hybridfp import bench_examples as bench
from hybridfp.hybrid_core import sup_norm

for R in (3.0, 1.0):
    cert = bench.certificate(bench.load_case("Ex3", R=R))
    print(f"r = {R}: M_F M_G = {cert.M_F * cert.M_G:.3f}, max Theta(t)/t = {cert.worst_ratio():.3f},"
          f" ball {cert.ball_condition}, contraction {cert.contraction_condition}")

case = bench.load_case("Ex3")
for n in (9, 33):
    errs = [sup_norm(x - case.exact) for x in bench.chain(case, 4, n, "standard")]
    print(f"n = {n}: errors by step", " ".join(f"{e:.2e}" for e in errs))

rep = bench.run_case(case, 2, 9, "lagged")
print("value at t = 0.5:", rep.value_at(0.5))
