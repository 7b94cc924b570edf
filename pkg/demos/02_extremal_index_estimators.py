"""The four extremal index estimators on a simulated clustered series.

The extremal index theta is the reciprocal mean cluster size of extremes;
the max-autoregressive model used here has theta = 1 - alpha exactly, so
we can watch all four estimators land near the truth.
"""

from exindex import (
    ModelSpec,
    default_block_length,
    simulate,
    theta_disjoint,
    theta_runs,
    theta_sliding,
    theta_sliding_random_u,
)

spec = ModelSpec.armax(0.5)
n, k = 50_000, 1_000
x = simulate(spec, n, seed=12)
print(f"model: {spec.label()}, true theta = {spec.theta_true}")

u = spec.marginal_quantile(1 - k / n)  # exact 98% quantile of the margin
s = default_block_length(n, k)
print(f"n={n}, threshold u={u:.2f} (~{k} exceedances), block length s={s}\n")

for est in (theta_disjoint, theta_sliding, theta_runs):
    res = est(x, u, s)
    print(f"{res.method:>16}: theta_hat={res.theta_hat:.4f} (n_exceed={res.n_exceed})")

res = theta_sliding_random_u(x, k, s)
print(f"{res.method:>16}: theta_hat={res.theta_hat:.4f} "
      f"(rank threshold u_hat={res.u_used:.2f}, n_exceed={res.n_exceed})")

# -- sensitivity to the block length ----------------------------------------
print("\nblock-length sweep (sliding estimator):")
for s_try in (2, 4, 8, 16, 32, 64):
    print(f"  s={s_try:3d}: {theta_sliding(x, u, s_try).theta_hat:.4f}")
print("small s under-declusters; very large s costs resolution.")

# -- raw vs clipped ----------------------------------------------------------
# disjoint/sliding estimates may exceed 1 in small samples; values are
# reported raw so variance studies see the actual statistic
tiny = [5.0, 1.0, 6.0, 2.0, 0.0, 7.0]
print("\ntiny series disjoint estimate (exceeds 1, reported raw):",
      theta_disjoint(tiny, 4.0, 2).theta_hat)
