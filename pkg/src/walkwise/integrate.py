"""Trapezoidal sums, discrete Ito and Stratonovich identities, integrals.

Everything here rests on one piece of algebra: for a +-1 step sequence
with partial sums S_r, the trapezoidal sum

    T f = sum_r (f(S_{r-1}) + f(S_r)) / 2 * X_r

telescopes to a function of the endpoint alone.  Up-down excursions
cancel term by term, so T f equals the straight-run trapezoid from 0 to
S_n.  The identity is exact for every value table f, which is why the
checks below run in integer coefficient space or Fractions, never with
a tolerance.  Floating point enters only in the pathwise estimators,
where a limit is being approximated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import integrate as _sq

from .embed import embedding_family
from .wiener import WienerGrid


class IntegrandError(ValueError):
    """Unknown integrand name or an operation the integrand cannot support."""


@dataclass
class Integrand:
    """A real integrand with optional exact and analytic extras.

    f evaluates vectorized on floats.  f_prime feeds the ds-term of the
    Ito formula; when absent the symmetric difference quotient along
    the path is used instead.  integral_0_to gives the classical
    int_0^a f in closed form when known.  f_lattice is an exact
    integer-domain table for the discrete suites.  lattice_only marks
    table integrands that have no continuous evaluation.
    """

    name: str
    f: object = None
    f_prime: object = None
    integral_0_to: object = None
    f_lattice: object = None
    lattice_only: bool = False

    def classical_integral(self, a: float) -> float:
        if self.integral_0_to is not None:
            return float(self.integral_0_to(a))
        if self.lattice_only or self.f is None:
            raise IntegrandError(f"{self.name}: no classical integral available")
        val, err = _sq.quad(self.f, 0.0, a, epsabs=1e-10, epsrel=1e-10, limit=200)
        if err > 1e-8 * max(1.0, abs(val)):
            raise IntegrandError(f"{self.name}: quadrature error {err:.2e} too large")
        return float(val)


def _poly_integrand(coeffs: list[Fraction]) -> Integrand:
    cf = np.array([float(c) for c in coeffs])
    dcf = np.array([float(i * c) for i, c in enumerate(coeffs)][1:] or [0.0])
    icf = [c / (i + 1) for i, c in enumerate(coeffs)]

    def f(x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), cf)

    def fp(x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), dcf)

    def F(a):
        return a * np.polynomial.polynomial.polyval(a, np.array([float(c) for c in icf]))

    def lat(j):
        return sum(c * Fraction(j) ** i for i, c in enumerate(coeffs))

    name = "poly:" + ",".join(str(c) for c in coeffs)
    return Integrand(name, f=f, f_prime=fp, integral_0_to=F, f_lattice=lat)


def _table_integrand(path: str) -> Integrand:
    p = Path(path)
    if not p.is_file():
        raise IntegrandError(f"table file not found: {path}")
    table: dict[int, Fraction] = {}
    with open(p, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                j = int(row[0])
            except ValueError:
                if not table:
                    continue  # a single header line is fine
                raise IntegrandError(f"bad table row {row!r} in {path}") from None
            if len(row) < 2:
                raise IntegrandError(f"bad table row {row!r} in {path}")
            try:
                table[j] = Fraction(row[1])
            except (ValueError, ZeroDivisionError):
                raise IntegrandError(f"bad table value {row[1]!r} in {path}") from None
    if not table:
        raise IntegrandError(f"table file has no rows: {path}")

    def lat(j):
        try:
            return table[int(j)]
        except KeyError:
            raise IntegrandError(f"table {path} has no entry for {j}") from None

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.array([float(lat(round(v))) for v in np.atleast_1d(x)]).reshape(x.shape)

    return Integrand(f"table:{path}", f=f, f_lattice=lat, lattice_only=True)


_FIXED = {
    "x": Integrand("x", f=lambda x: np.asarray(x, dtype=float),
                   f_prime=lambda x: np.ones_like(np.asarray(x, dtype=float)),
                   integral_0_to=lambda a: a * a / 2.0,
                   f_lattice=lambda j: j),
    "x2": Integrand("x2", f=lambda x: np.square(np.asarray(x, dtype=float)),
                    f_prime=lambda x: 2.0 * np.asarray(x, dtype=float),
                    integral_0_to=lambda a: a**3 / 3.0,
                    f_lattice=lambda j: j * j),
    "x3": Integrand("x3", f=lambda x: np.asarray(x, dtype=float) ** 3,
                    f_prime=lambda x: 3.0 * np.square(np.asarray(x, dtype=float)),
                    integral_0_to=lambda a: a**4 / 4.0,
                    f_lattice=lambda j: j**3),
    "sin": Integrand("sin", f=np.sin, f_prime=np.cos,
                     integral_0_to=lambda a: 1.0 - math.cos(a)),
    "cos": Integrand("cos", f=np.cos, f_prime=lambda x: -np.sin(np.asarray(x, dtype=float)),
                     integral_0_to=lambda a: math.sin(a)),
    "exp": Integrand("exp", f=np.exp, f_prime=np.exp,
                     integral_0_to=lambda a: math.expm1(a)),
}

REGISTRY_HELP = "x, x2, x3, sin, cos, exp, poly:<c0,c1,...>, table:<csv-file>"


def get_integrand(spec: str) -> Integrand:
    """Resolve an integrand name: fixed registry, poly:..., or table:..."""
    if spec in _FIXED:
        return _FIXED[spec]
    if spec.startswith("poly:"):
        body = spec[len("poly:"):]
        try:
            coeffs = [Fraction(tok) for tok in body.split(",") if tok.strip()]
        except (ValueError, ZeroDivisionError) as exc:
            raise IntegrandError(f"bad poly coefficients {body!r}: {exc}") from None
        if not coeffs:
            raise IntegrandError("poly: needs at least one coefficient")
        return _poly_integrand(coeffs)
    if spec.startswith("table:"):
        return _table_integrand(spec[len("table:"):])
    raise IntegrandError(f"unknown integrand {spec!r}; known: {REGISTRY_HELP}")


def derivative_probe(g: Integrand, points, h: float = 1e-4) -> float:
    """Max gap between f_prime and central differences on a probe grid."""
    if g.f_prime is None or g.f is None:
        raise IntegrandError(f"{g.name}: no derivative to probe")
    pts = np.asarray(points, dtype=float)
    cd = (np.asarray(g.f(pts + h), dtype=float) - np.asarray(g.f(pts - h), dtype=float)) / (2 * h)
    return float(np.max(np.abs(cd - np.asarray(g.f_prime(pts), dtype=float))))


# ---------------------------------------------------------------------------
# exact discrete layer


def trapezoid_lattice(f_lattice, k: int) -> Fraction:
    """Straight-run trapezoid eps_k (f(0)/2 + sum f(eps_k j) + f(k)/2)."""
    k = int(k)
    if k == 0:
        return Fraction(0)
    eps = 1 if k > 0 else -1
    total = Fraction(f_lattice(0)) + Fraction(f_lattice(k))
    total /= 2
    for j in range(1, abs(k)):
        total += Fraction(f_lattice(eps * j))
    return eps * total


def discrete_ito(f_lattice, steps):
    """(trapezoid_LHS, ito_sum, correction, strat_sum) as exact Fractions.

    trapezoid_LHS is computed from the endpoint alone via the
    straight-run formula; the other three are direct path sums.  Their
    agreement is the discrete Ito formula, checked by the caller.
    """
    arr = [int(x) for x in steps]
    if any(x not in (-1, 1) for x in arr):
        raise ValueError("steps must be +-1")
    s = 0
    ito = Fraction(0)
    corr = Fraction(0)
    strat = Fraction(0)
    f_here = Fraction(f_lattice(0))
    for x in arr:
        f_prev = f_here
        s += x
        f_here = Fraction(f_lattice(s))
        ito += f_prev * x
        corr += (f_here - f_prev) * x / 2  # 1/x = x for unit steps
        strat += (f_prev + f_here) * x / 2
    trap = trapezoid_lattice(f_lattice, s)
    return trap, ito, corr, strat


def path_coefficients(nums) -> tuple[np.ndarray, int, int]:
    """Doubled trapezoid coefficients of a unit-step integer path.

    Returns (coeffs, lo, endpoint): sum_r (f(s_{r-1}) + f(s_r)) ds_r
    equals sum_j coeffs[j - lo] f(j) for every table f.  Counts stay
    far below 2**53, so the float accumulation in bincount is exact.
    """
    s = np.ascontiguousarray(nums, dtype=np.int64)
    if s.size == 0 or s[0] != 0:
        raise ValueError("path must start at 0")
    ds = np.diff(s)
    lo = int(s.min())
    width = int(s.max()) - lo + 1
    w = ds.astype(np.float64)
    c = np.bincount((s[:-1] - lo).astype(np.intp), weights=w, minlength=width)
    c += np.bincount((s[1:] - lo).astype(np.intp), weights=w, minlength=width)
    return np.rint(c).astype(np.int64), lo, int(s[-1])


def straight_run_coefficients(endpoint: int, lo: int, width: int) -> np.ndarray:
    """Doubled trapezoid coefficients of the monotone run 0 -> endpoint."""
    c = np.zeros(width, dtype=np.int64)
    e = int(endpoint)
    if e == 0:
        return c
    eps = 1 if e > 0 else -1
    a, b = (0, e) if e > 0 else (e, 0)
    c[a - lo : b - lo + 1] = 2 * eps
    c[0 - lo] -= eps
    c[e - lo] -= eps
    return c


def level_identity_check(nums) -> bool:
    """Exact endpoint-only identity for the path, uniformly over all f.

    Equal coefficient vectors mean the trapezoidal sum equals the
    straight-run trapezoid for every integrand table at once; this is
    the discrete Ito formula in its strongest form.
    """
    c, lo, end = path_coefficients(nums)
    return bool(np.array_equal(c, straight_run_coefficients(end, lo, c.size)))


def exact_strat_value(nums, scale: int, g: Integrand) -> Fraction:
    """Stratonovich sum at one level as an exact Fraction.

    Aggregates by lattice point first, then sums the per-point float
    values as exact rationals; every float is a rational, so the result
    is the exact value of the sum the float estimator approximates.
    """
    c, lo, _end = path_coefficients(nums)
    dq = Fraction(1, 2**scale)
    pts = np.arange(lo, lo + c.size, dtype=np.int64)
    if g.lattice_only:
        fv = [Fraction(g.f_lattice(int(j))) for j in pts]
    else:
        fv = [Fraction(float(v)) for v in np.asarray(g.f(pts * float(dq)), dtype=float)]
    nz = np.flatnonzero(c)
    return sum((int(c[i]) * fv[i] for i in nz), Fraction(0)) * dq / 2


# ---------------------------------------------------------------------------
# dyadic trapezoid and pathwise estimators


def trapezoid_dyadic(f, a, m: int) -> float:
    """Trapezoid of f from 0 to a (a multiple of 2**-m) with step 2**-m."""
    num = _lattice_numerator(a, m)
    if num == 0:
        return 0.0
    eps = 1 if num > 0 else -1
    dx = 2.0**-m
    grid = np.arange(abs(num) + 1) * (eps * dx)
    fv = np.asarray(f(grid), dtype=float)
    return eps * dx * (fv.sum() - 0.5 * (fv[0] + fv[-1]))


def _lattice_numerator(a, m: int) -> int:
    """a as an integer multiple of 2**-m, or a domain error."""
    from .dyadic import DyadicValue

    if isinstance(a, DyadicValue):
        num, scale = a.num, a.scale
    else:
        fr = Fraction(a)
        num, scale = fr.numerator, (fr.denominator.bit_length() - 1)
        if fr.denominator != 1 << scale:
            raise ValueError(f"{a} is not dyadic")
    if scale <= m:
        return num << (m - scale)
    excess = scale - m
    if num & ((1 << excess) - 1):
        raise ValueError(f"{a} is not a multiple of 2**-{m}")
    return num >> excess


@dataclass
class IntegralEstimate:
    """Per-level pathwise integral values with their exact-identity flags."""

    mode: str
    f_name: str
    seed: int
    n: int
    K: float
    levels: list[int]
    per_level: dict[int, float]
    correction_per_level: dict[int, float]
    identity_exact_per_level: dict[int, bool]
    endpoint_per_level: dict[int, float]
    K_m_per_level: dict[int, float]
    residual_per_level: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "f": self.f_name,
            "seed": self.seed,
            "n": self.n,
            "K": self.K,
            "levels": self.levels,
            "per_level": {str(m): self.per_level[m] for m in self.levels},
            "correction_per_level": {str(m): self.correction_per_level[m] for m in self.levels},
            "identity_exact_per_level": {str(m): self.identity_exact_per_level[m] for m in self.levels},
            "endpoint_per_level": {str(m): self.endpoint_per_level[m] for m in self.levels},
            "K_m_per_level": {str(m): self.K_m_per_level[m] for m in self.levels},
            "residual_per_level": {str(m): v for m, v in sorted(self.residual_per_level.items())},
        }


def _estimate(grid: WienerGrid, g: Integrand, K: float, m_range, mode: str,
              family=None) -> IntegralEstimate:
    levels = sorted(int(m) for m in m_range)
    if levels and levels[-1] > grid.n:
        raise ValueError(f"level {levels[-1]} exceeds grid level {grid.n}")
    if K > grid.K:
        raise ValueError(f"horizon {K} exceeds grid horizon {grid.K}")
    R_map = {m: int(K * 4.0**m) for m in levels}
    fam = family if family is not None else embedding_family(grid, levels, R_map)
    per, corr, ident, endp, km = {}, {}, {}, {}, {}
    for m in levels:
        emb = fam[m]
        nums = emb.nums
        dqs = np.diff(nums)  # +-1 in 2**-m units
        scale = 2.0**-m
        if g.lattice_only:
            fv = np.asarray([float(g.f_lattice(int(j))) for j in nums], dtype=float)
        else:
            fv = np.asarray(g.f(nums * scale), dtype=float)
        ito_val = float(np.dot(fv[:-1], dqs)) * scale
        half_corr = 0.5 * float(np.dot(np.diff(fv), dqs)) * scale
        per[m] = ito_val + half_corr if mode == "strat" else ito_val
        corr[m] = half_corr
        ident[m] = level_identity_check(nums)
        endp[m] = float(nums[-1]) * scale
        km[m] = R_map[m] * 4.0**-m
    return IntegralEstimate(mode=mode, f_name=g.name, seed=grid.seed, n=grid.n,
                            K=K, levels=levels, per_level=per,
                            correction_per_level=corr, identity_exact_per_level=ident,
                            endpoint_per_level=endp, K_m_per_level=km)


def ito_integral(grid: WienerGrid, g: Integrand, K: float, m_range,
                 family=None) -> IntegralEstimate:
    """Left-endpoint sums over the level-m embedded partitions."""
    return _estimate(grid, g, K, m_range, "ito", family)


def stratonovich_integral(grid: WienerGrid, g: Integrand, K: float, m_range,
                          family=None) -> IntegralEstimate:
    """Midpoint-average sums; per level exactly the trapezoid at the endpoint."""
    return _estimate(grid, g, K, m_range, "strat", family)


def ito_formula_residual(est: IntegralEstimate, g: Integrand, grid: WienerGrid,
                         K: float, family=None) -> dict[int, float]:
    """Per-level |int_0^W(K) f - (ito value + ds-term / 2)|.

    The ds-term is the Riemann sum of f'(W) over the level-m partition
    when f' is known, else the difference-quotient form, which equals
    twice the recorded correction.
    """
    if est.mode != "ito":
        raise ValueError("residual is defined for the ito mode")
    WK = float(grid.values_at(K))
    target = g.classical_integral(WK)
    if family is None:
        family = embedding_family(grid, est.levels, {m: int(K * 4.0**m) for m in est.levels})
    fam = family
    out: dict[int, float] = {}
    for m in est.levels:
        if g.f_prime is not None:
            q = fam[m].nums[:-1] * 2.0**-m
            ds_term = float(np.sum(np.asarray(g.f_prime(q), dtype=float))) * 4.0**-m
        else:
            ds_term = 2.0 * est.correction_per_level[m]
        out[m] = abs(target - (est.per_level[m] + 0.5 * ds_term))
    est.residual_per_level.update(out)
    return out


def partition_sum_crosscheck(grid: WienerGrid, g: Integrand, K: float,
                             partition_count: int) -> float:
    """Left-endpoint sum over a uniform time partition of [0, K]."""
    if g.lattice_only:
        raise IntegrandError(f"{g.name}: uniform partitions need a real integrand")
    t = np.linspace(0.0, K, partition_count + 1)
    w = grid.values_at(t)
    return float(np.dot(np.asarray(g.f(w[:-1]), dtype=float), np.diff(w)))
