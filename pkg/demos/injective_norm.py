"""The injective norm of a discrete two-point correlation.

Second moments of W^{1,p}-valued random fields live in an injective tensor
product.  On a P1 mesh the norm is a maximum of a bilinear form over two unit
balls, computed by alternating maximization.  For rank-one tensors the value
factors into a product of discrete dual norms.
"""
import numpy as np

from banachmc import experiments as ex
from banachmc.function_spaces import make_partition
from banachmc.tensor_norms import assemble_dual, injective_norm_bruteforce, injective_norm_multistart


def main() -> None:
    rows = ex.injective_norm_check(1.5, 16, count=5, restarts=8, seed=0)
    for r in rows:
        print(f"rank one #{r['index']}: gap to discrete product {r['rel_gap_discrete']:.1e}, "
              f"gap to seminorm product {r['rel_gap_seminorm']:.2f}")

    rng = np.random.default_rng(1)
    dual = assemble_dual(make_partition(3), 2.5)
    U = rng.standard_normal((4, 4))
    a = injective_norm_multistart(U, dual, restarts=20, seed=0).value
    b = injective_norm_bruteforce(U, dual)
    print(f"random 4x4: alternating {a:.6f}, brute force {b:.6f}")


if __name__ == "__main__":
    main()
