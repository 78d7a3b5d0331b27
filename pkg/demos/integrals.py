"""Stochastic integrals as exact discrete identities, then as limits.

For a +-1 walk the trapezoidal sum along the path telescopes into a
closed form at the endpoint; that single algebraic fact is the discrete
Ito formula.  Refining over the embedded partitions turns the same sums
into the Ito and Stratonovich integrals of a real integrand.
"""

from fractions import Fraction

from walkwise import (
    build_to_level,
    discrete_ito,
    get_integrand,
    ito_formula_residual,
    ito_integral,
    stratonovich_integral,
)

# a short walk checked by hand: the identity is exact, not approximate
steps = [1, 1, -1, 1, 1, -1, 1, 1]
f = lambda j: j * j
trap, ito, corr, strat = discrete_ito(f, steps)
print("walk", steps)
print(f"trapezoid {trap}  =  ito {ito} + correction {corr}  =  strat {strat}")
assert trap == ito + corr == strat

# for f(x) = x the closed forms of the two sums are visible directly
f = lambda j: j
trap, ito, corr, strat = discrete_ito(f, steps)
s, n = sum(steps), len(steps)
print(f"\nf(x)=x: ito = {ito} = S_n^2/2 - n/2 = {Fraction(s * s - n, 2)}")
print(f"        strat = {strat} = S_n^2/2 = {Fraction(s * s, 2)}")

# the same identity per level of a Brownian grid, exactly
seed, n = 11, 12
grid = build_to_level(seed, n, 1.0 + 0.4, lean=True)
est = ito_integral(grid, get_integrand("x"), 1.0, range(4, 9))
print("\nintegral of W dW over [0,1], per level (exact closed form):")
for m in est.levels:
    b = est.endpoint_per_level[m]
    km = est.K_m_per_level[m]
    print(f"  m={m}: {est.per_level[m]:+.6f} = B^2/2 - K_m/2 "
          f"with B={b:+.6f}, K_m={km:.6f}  "
          f"exact={est.identity_exact_per_level[m]}")

strat_est = stratonovich_integral(grid, get_integrand("x"), 1.0, range(4, 9))
print("Stratonovich value at m=8:", f"{strat_est.per_level[8]:+.6f}",
      "= B^2/2 =", f"{est.endpoint_per_level[8]**2 / 2:+.6f}")

# a smooth integrand: the ito sum plus half the ds-term lands on the
# classical antiderivative, and the residual shrinks with the level
g = get_integrand("sin")
est = ito_integral(grid, g, 1.0, (6, 8, 10))
res = ito_formula_residual(est, g, grid, 1.0)
print("\nintegral of sin(W) dW, residual of the Ito formula:")
for m in est.levels:
    print(f"  m={m}: value {est.per_level[m]:+.6f}, residual {res[m]:.6f}")
