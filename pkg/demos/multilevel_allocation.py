"""Choosing levels and sample sizes when the variance is not the right measure.

In a Banach space of type r the sampling error of M samples decays like
M^(1/r - 1), so the classic allocation M_l ~ sqrt(V_l / C_l) is replaced by a
family indexed by the conjugate exponent r'.  The allocator picks the r' with
the smallest predicted cost exponent; a fixed r' = 3 is shown for contrast.
"""
from banachmc import experiments as ex
from banachmc.models import FaModel


def main() -> None:
    model = FaModel(1.0, 1.5, 1.1)
    C_alpha, _ = ex.fa_bias_fit(1.0, 1.5, 1.1, alpha=model.alpha)
    rate = ex.fa_rate_model(model, C_alpha)
    print(f"bias constant {C_alpha:.3f} at rate {model.alpha:.3f}")

    for rc in (None, 3.0):
        plans = ex.mlmc_cost_sweep(rate, 1.5, model.q_hat, range(8, 14), r_conj=rc)
        label = "optimized" if rc is None else "r'=3"
        print(label)
        for pl in plans:
            print(f"  eps={pl.eps:.2e} L={pl.L:<3} r'={pl.r_conj:.3f} cost={pl.predicted_cost:.3e} "
                  f"case={pl.cost_case}")
        deep = ex.mlmc_cost_sweep(rate, 1.5, model.q_hat, range(30, 37), r_conj=rc)
        slope = ex.fit_cost_slope([p.eps for p in deep], [p.predicted_cost for p in deep])
        print(f"  cost slope at small eps: {slope:.3f}")

    res = ex.mlmc_fa_sweep(1.0, 1.5, [2.0 ** -k for k in range(2, 6)], K=10, seed=0, C_alpha=C_alpha)
    print("sampled estimator")
    for row in res.rows:
        print(f"  eps={row.eps:.4f} measured error {row.err_measured:.4f}")


if __name__ == "__main__":
    main()
