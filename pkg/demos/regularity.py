"""The rough side of the path: variation, modulus, nowhere-differentiability.

Level m has total variation exactly 2^m on [0,1], so the limit path has
none; its increments still obey a square-root modulus of continuity,
and difference quotients over the embedded partitions blow up at the
2^(m/2) rate.  The statistical suites wrap these into pass/fail checks.
"""

from walkwise import (
    clt_suite,
    marginals_suite,
    modulus_suite,
    nondiff_suite,
    variation_suite,
)

# total variation doubles with every level, with no randomness in the
# statement at all: each level moves by one lattice unit per grid cell
rep = variation_suite(seed=5, n=10)
print("total variation of level m on [0,1]:")
for m in (2, 4, 6, 8, 10):
    row = rep.detail["per_level"][str(m)]
    print(f"  m={m:>2}: {row['variation']:>8.1f}  (2^m = {row['expected']:.1f},"
          f" exact={row['exact']})")

# increments over windows of width h reach u with probability at most
# 7 exp(-u^2 (1 - delta) / (2h)) once h is small enough; wide windows
# sit above that regime, and the report says so rather than hiding it
rep = modulus_suite(seed=0, paths=200, n=9)
print("\nmodulus of continuity, u=1 (bound applies for small h):")
for h, row in rep.detail["per_h"].items():
    state = "within" if row["frequency"] <= row["allowed"] else "above"
    print(f"  h={h}: frequency {row['frequency']:.3f}, allowed "
          f"{row['allowed']:.3f} ({state} the bound)")

# difference quotients over the bracketing passage pair exceed
# (1/58) 2^(m/2) at nearly every probe time
rep = nondiff_suite(seed=0, paths=5, m_values=(6, 8), n=11, probes=500)
print("\ndifference-quotient blowup:")
for m, row in rep.detail["per_m"].items():
    print(f"  m={m}: fraction {row['fraction']:.4f} of probes clear "
          f"threshold {row['threshold']:.2f}")

# the marginal laws come out right: KS against the normal for W(1),
# variance 1/2 at t=1/2, independent increments
rep = marginals_suite(seed=0, paths=800, n=9)
d = rep.detail
print(f"\nmarginals over 800 paths at level 9: KS p={d['ks_p']:.3f}, "
      f"Var(W(1/2))={d['var_half']:.3f}, increment corr "
      f"{d['increment_corr']:+.3f}, passed={rep.passed}")

# and the raw walk scalings behind everything: S_n / sqrt(n) and the
# centered waiting sums both look normal
rep = clt_suite(seed=0, paths=2000, n=1024, k=2000)
print(f"walk and waiting-time CLT: min KS p={rep.statistic:.3f}, "
      f"passed={rep.passed}")
