"""Monte Carlo error decay for the mean of a random function measured in L^p.

The first study is the random boundary value problem, whose solutions have a
derivative singularity at a uniformly distributed point.  The mean-square
intuition (rate 1/2) fails in W^{1,p} for p < 2: the fitted rate sits near
1 - 1/p.  The second study is the singular function x -> (x + y)^(-eta)
measured in L^q(Omega; L^p(0,1)), where the outer exponent q takes over.
"""
from banachmc import experiments as ex


def main(K: int = 20) -> None:
    print("boundary value problem, W^{1,p} error")
    for p in (1.1, 1.5, 2.0):
        st = ex.bvp_rates(p, ex.TABLE_M, K=K, seed=0)
        print(f"  p={p:<4} fitted {st.fitted_rate:.3f}  predicted {st.theory_rate:.3f}")

    print("singular function, L^q(L^p) error")
    for p, q in ((1.0, 1.5), (2.0, 1.5), (1.0, 2.0)):
        st = ex.fa_rates(p, q, Ms=ex.TABLE_M, K=10 * K, seed=0)
        print(f"  p={p:<4} q={q:<4} fitted {st.fitted_rate:.3f}  predicted {st.theory_rate:.3f}")
    # the same p gives different rates for different q, and vice versa


if __name__ == "__main__":
    main()
