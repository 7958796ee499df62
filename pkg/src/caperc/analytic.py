"""Closed-form engine: Lambert W, survival probabilities, the p_I system,
generating functions, the Borel law, exact two-color friend-count
probabilities, and the near-critical constant C(k).

Conventions used throughout:
  * color subsets I of [k] are k-bit integer masks (bit i = color i in I)
  * extended type vectors gamma are k-bit masks as well (bit i = "i-avoiding
    connected to infinity")
  * theta_i denotes the survival probability of the Poisson branching process
    whose mean is the total intensity of all colors except i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

from .params import LambdaVector, as_lambda

_INV_E = math.exp(-1.0)


# ---------------------------------------------------------------------------
# Lambert W, principal branch
# ---------------------------------------------------------------------------

def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function on [-1/e, inf).

    Halley iteration; initial guess from the branch-point series for x near
    -1/e, from w=x for small x, and from log asymptotics for large x.
    Values slightly below -1/e (within 1e-12) are clamped to the branch point.
    """
    if math.isnan(x):
        raise ValueError("lambert_w0: nan input")
    if x < -_INV_E:
        if x < -_INV_E - 1e-12:
            raise ValueError(f"lambert_w0: {x} below -1/e")
        x = -_INV_E
    if x == 0.0:
        return 0.0

    # initial guess
    if x < -0.25:
        # branch-point series in p = sqrt(2(e x + 1))
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif x < 1.0:
        w = x * (1.0 - x + 1.5 * x * x) if abs(x) < 0.5 else 0.5
    else:
        lx = math.log(x)
        llx = math.log(lx) if lx > 1.0 else 0.0
        w = lx - llx

    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        # Halley step
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if abs(step) <= 1e-16 * max(1.0, abs(w)):
            break
    if w < -1.0:
        w = -1.0
    return w


# ---------------------------------------------------------------------------
# Survival probability and fixed-point helpers
# ---------------------------------------------------------------------------

def _polish_fixed_point(p: float, c: float, mu: float) -> float:
    """Newton-polish a root of p = -expm1(-c - mu p).

    The closed-form W solution loses roughly half the significant digits near
    the branch point (near-critical mu); the implicit form evaluated with
    expm1 is conditioned at machine precision, so a few Newton steps restore
    full accuracy.
    """
    for _ in range(60):
        e = math.exp(-c - mu * p)
        f = -math.expm1(-c - mu * p) - p
        fp = mu * e - 1.0
        if fp == 0.0:
            break
        step = f / fp
        p -= step
        if abs(step) <= 1e-16 * max(1e-300, abs(p)):
            break
    if p < 0.0:
        p = 0.0
    return p


def survival_theta(mu: float) -> float:
    """Survival probability of a Poisson(mu) branching process.

    0 for mu <= 1; otherwise the unique root in (0,1) of
    theta = 1 - exp(-mu theta), computed as 1 + W(-mu e^{-mu})/mu and
    Newton-polished on the expm1 form.
    """
    if mu <= 0.0:
        raise ValueError("survival_theta: mu must be positive")
    if mu <= 1.0:
        return 0.0
    theta = 1.0 + lambert_w0(-mu * math.exp(-mu)) / mu
    if theta <= 0.0:
        theta = min(1.0, 2.0 * (mu - 1.0))  # fallback start near criticality
    return _polish_fixed_point(theta, 0.0, mu)


# ---------------------------------------------------------------------------
# Regime classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegimeReport:
    fully_supercritical: bool
    fully_critical_subcritical: bool
    assumption_holds: bool
    supercritical_indices: frozenset[int]


def classify_lambda(lam) -> RegimeReport:
    """Exact threshold comparisons for the regime of a LambdaVector.

    * fully supercritical: lambda^{\\i} > 1 for every color i
    * fully critical-subcritical: lambda^{\\i} <= 1 for every color i
    * assumption: lambda_I < 1 for every subset I with |I| <= k-2
      (needs k >= 2; reported False for k = 1)
    """
    lam = as_lambda(lam)
    k = lam.k
    sup = frozenset(i for i in range(k) if lam.lambda_without(i) > 1.0)
    fully_super = len(sup) == k
    fully_cs = len(sup) == 0
    if k < 2:
        assumption = False
    else:
        assumption = True
        for mask in range(1 << k):
            if 1 <= bin(mask).count("1") <= k - 2:
                if lam.lambda_mask(mask) >= 1.0:
                    assumption = False
                    break
    return RegimeReport(fully_super, fully_cs, assumption, sup)


# ---------------------------------------------------------------------------
# The p_I system
# ---------------------------------------------------------------------------

class PSystemError(Exception):
    """Numerical-consistency failure while solving the p_I system."""


@dataclass(frozen=True)
class PTable:
    """Solved p_I table: p[mask] = P(root is i-avoiding connected to infinity
    for at least one i in I), for every subset mask I of [k]."""

    lam: LambdaVector
    p: dict[int, float]
    relevant: bool
    max_residual: float

    @property
    def k(self) -> int:
        return self.lam.k

    def residual(self, mask: int) -> float:
        """|p_I - (1 - exp(-sum_{j in I} lam_j p_{I\\{j}} - p_I lam_{[k]\\I}))|."""
        lam = self.lam
        k = lam.k
        full = (1 << k) - 1
        c = sum(
            lam[j] * self.p[mask & ~(1 << j)]
            for j in range(k)
            if (mask >> j) & 1
        )
        mu = lam.lambda_mask(full & ~mask)
        return abs(self.p[mask] - (-math.expm1(-c - mu * self.p[mask])))


def solve_p_system(lam, residual_tol: float = 1e-8) -> PTable:
    """Solve the p_I fixed-point system for all subsets, in nondecreasing |I|.

    Each strict subset uses the principal-branch Lambert W closed form with a
    Newton polish; the full set uses the closed exponential form. The table is
    produced for any positive lambda; `relevant` records whether all nonempty
    p_I lie in (0,1), which holds exactly in the fully supercritical regime.
    """
    lam = as_lambda(lam)
    k = lam.k
    full = (1 << k) - 1
    p: dict[int, float] = {0: 0.0}
    masks = sorted(range(1, 1 << k), key=lambda m: bin(m).count("1"))
    for mask in masks:
        c = sum(lam[j] * p[mask & ~(1 << j)] for j in range(k) if (mask >> j) & 1)
        if mask == full:
            p[mask] = -math.expm1(-c)
            continue
        mu = lam.lambda_mask(full & ~mask)
        if c == 0.0:
            # reduces to the survival fixed point; the subset sum
            # lambda_{[k]\I} never exceeds lambda^{\i} for i in I, so the
            # zero solution is the probabilistically correct one when
            # mu <= 1 and the positive root is correct otherwise
            p[mask] = survival_theta(mu)
            continue
        w = lambert_w0(-mu * math.exp(-c - mu))
        p[mask] = _polish_fixed_point(1.0 + w / mu, c, mu)

    table = PTable(lam, p, relevant=False, max_residual=0.0)
    max_res = max(table.residual(m) for m in range(1 << k))
    if max_res > residual_tol:
        raise PSystemError(f"p_I residual {max_res:.3e} exceeds {residual_tol:.1e}")
    relevant = all(0.0 < p[m] < 1.0 for m in range(1, 1 << k))
    return PTable(lam, p, relevant=relevant, max_residual=max_res)


def f_infinity_inclusion_exclusion(lam) -> float:
    """Density of the infinite friend class via the alternating-subset sum.

    Mathematically sum_I (-1)^{|I|} (1 - p_I); evaluated as
    -sum_I (-1)^{|I|} p_I since the constant parts cancel exactly (this keeps
    full precision near criticality where the result is ~eps^k).
    Returns exactly 0 outside the fully supercritical regime.
    """
    lam = as_lambda(lam)
    if not classify_lambda(lam).fully_supercritical:
        return 0.0
    table = solve_p_system(lam)
    total = 0.0
    for mask in range(1 << lam.k):
        sign = -1.0 if bin(mask).count("1") % 2 == 0 else 1.0
        total += sign * table.p[mask]
    return max(0.0, total)


def extended_type_distribution(lam, table: PTable | None = None,
                               clamp_tol: float = 1e-10) -> dict[int, float]:
    """Joint law of the extended type vector: map gamma-mask -> p_hat*(gamma).

    p_hat*(alive exactly on A) = sum_{B subseteq A} (-1)^{|B|}
    (1 - p_{([k]\\A) u B}).  Tiny negative round-off is clamped at 0.
    """
    lam = as_lambda(lam)
    if table is None:
        table = solve_p_system(lam)
    k = lam.k
    full = (1 << k) - 1
    out: dict[int, float] = {}
    for a in range(1 << k):
        comp = full & ~a
        val = 0.0
        b = a
        while True:  # iterate over submasks of a
            sign = -1.0 if bin(b).count("1") % 2 else 1.0
            val += sign * (1.0 - table.p[comp | b])
            if b == 0:
                break
            b = (b - 1) & a
        if val < 0.0:
            if val < -clamp_tol:
                raise PSystemError(
                    f"extended type inversion gave {val:.3e} for mask {a:b}")
            val = 0.0
        out[a] = val
    return out


def g_product(gamma, beta, x) -> float:
    """Product over coordinates of
    (1 - (1-x_i)^{beta_i}) gamma_i + (1-x_i)^{beta_i} (1 - gamma_i)."""
    if not (len(gamma) == len(beta) == len(x)):
        raise ValueError("g_product: dimension mismatch")
    out = 1.0
    for g, b, xi in zip(gamma, beta, x):
        miss = (1.0 - xi) ** b
        out *= (1.0 - miss) if g else miss
    return out


# ---------------------------------------------------------------------------
# Borel law and total-progeny generating function
# ---------------------------------------------------------------------------

def borel_log_pmf(mu: float, m: int) -> float:
    """log of the Borel(mu) pmf e^{-mu m}(mu m)^{m-1}/m!."""
    if m < 1:
        raise ValueError("borel: m must be >= 1")
    if not 0.0 <= mu <= 1.0:
        raise ValueError("borel: mu must lie in [0, 1]")
    if mu == 0.0:
        return 0.0 if m == 1 else -math.inf
    return -mu * m + (m - 1) * math.log(mu * m) - math.lgamma(m + 1)


def borel_pmf(mu: float, m: int) -> float:
    """Borel(mu) pmf: total-progeny law of a Poisson(mu) branching process."""
    return math.exp(borel_log_pmf(mu, m))


def total_progeny_gf(mu: float, z: float) -> float:
    """Generating function of the Borel(mu) total-progeny law:
    -W(-mu e^{-mu} z)/mu.

    z = 1.0 is treated as the one-sided limit at 1: exactly 1 for mu <= 1 and
    the extinction probability 1 - theta(mu) otherwise.
    """
    if mu <= 0.0:
        raise ValueError("total_progeny_gf: mu must be positive")
    if not 0.0 <= z <= 1.0:
        raise ValueError("total_progeny_gf: z must lie in [0, 1]")
    if z == 1.0:
        return 1.0 - survival_theta(mu) if mu > 1.0 else 1.0
    return -lambert_w0(-mu * math.exp(-mu) * z) / mu


# ---------------------------------------------------------------------------
# Chronology-string generating functions Phi_h
# ---------------------------------------------------------------------------

def color_strings(k: int, h: int) -> list[tuple[int, ...]]:
    """All length-h color strings without repetition, lexicographic order."""
    if h < 0 or h > k:
        raise ValueError("color_strings: need 0 <= h <= k")
    return sorted(permutations(range(k), h))


def phi_eval(lam, h: int, z: dict[tuple[int, ...], float]) -> float:
    """Evaluate Phi_h at the point z (indexed by exactly the length-h strings).

    Phi_0(z) = z; each level substitutes
    z_s <- prod_{i not in set(s)} exp(lambda_i (F_{s i}(z_{s i}) - 1))
    where F uses the total intensity of set(s i).  Arguments exactly equal to
    1.0 are one-sided limits handled analytically by total_progeny_gf.
    """
    lam = as_lambda(lam)
    k = lam.k
    if not 0 <= h <= max(k - 2, 0):
        raise ValueError("phi_eval: need 0 <= h <= k-2")
    expected = set(color_strings(k, h))
    if set(z.keys()) != expected:
        raise ValueError("phi_eval: z must be indexed by exactly S_h")
    for v in z.values():
        if not 0.0 <= v <= 1.0:
            raise ValueError("phi_eval: z values must lie in [0, 1]")
    cur = dict(z)
    for level in range(h, 0, -1):
        nxt: dict[tuple[int, ...], float] = {}
        for s in color_strings(k, level - 1):
            used = set(s)
            val = 1.0
            for i in range(k):
                if i in used:
                    continue
                si = s + (i,)
                mu = lam.lambda_subset(si)
                val *= math.exp(lam[i] * (total_progeny_gf(mu, cur[si]) - 1.0))
            nxt[s] = val
        cur = nxt
    return cur[()]


def f_infinity_generating_function(lam) -> float:
    """Density of the infinite friend class via the Phi_{k-2} route.

    Alternating sum over color subsets J of Phi_{k-2} evaluated at arguments
    prod_{i not in set(s)} q_{L_J, s i}, where q_{L, s i} is
    exp(lambda_i (F_{s i}(1-) - 1)) when set(s i) misses exactly one color
    belonging to J, and 1 otherwise.
    """
    lam = as_lambda(lam)
    k = lam.k
    regime = classify_lambda(lam)
    if not regime.fully_supercritical:
        raise ValueError("generating-function route requires fully supercritical lambda")
    if not regime.assumption_holds:
        raise ValueError("generating-function route requires the small-subset assumption")
    full_set = frozenset(range(k))
    total = 0.0
    for jmask in range(1 << k):
        in_j = {j for j in range(k) if (jmask >> j) & 1}
        z: dict[tuple[int, ...], float] = {}
        for s in color_strings(k, k - 2):
            val = 1.0
            for i in range(k):
                if i in s:
                    continue
                si_set = set(s) | {i}
                (missing,) = full_set - si_set
                if missing in in_j:
                    mu = lam.lambda_subset(si_set)
                    f1 = total_progeny_gf(mu, 1.0)
                    val *= math.exp(lam[i] * (f1 - 1.0))
            z[s] = val
        sign = -1.0 if len(in_j) % 2 else 1.0
        total += sign * phi_eval(lam, k - 2, z)
    return max(0.0, total)


# ---------------------------------------------------------------------------
# Exact two-color friend-count probabilities
# ---------------------------------------------------------------------------

class SeriesTruncationError(Exception):
    """Certified tail bound could not be brought below tolerance."""


def _borel_binomial_series(mu: float, q: float, ell: int, tol: float,
                           m_max: int = 200_000) -> float:
    """sum_{m >= ell} C(m-1, ell-1) q^{ell-1} (1-q)^{m-ell} Borel(mu, m),
    truncated when the certified geometric tail bound drops below tol.

    Term-ratio bound: Borel(mu, m+1)/Borel(mu, m) <= mu e^{1-mu}, and the
    binomial-weight ratio is (m/(m-ell+1)) (1-q) which is nonincreasing in m;
    once their product r < 1 the remaining tail is <= term * r / (1-r).
    """
    if mu == 0.0:
        return 1.0 if ell == 1 else 0.0
    if q == 1.0:
        return math.exp(borel_log_pmf(mu, ell))  # only m = ell survives
    log_q = math.log(q) if q > 0.0 else None
    log_1mq = math.log1p(-q)
    total = 0.0
    for m in range(ell, m_max + 1):
        lt = borel_log_pmf(mu, m) + (m - ell) * log_1mq
        if ell > 1:
            if log_q is None:
                return 0.0  # q == 0 kills every term with ell >= 2
            lt += (math.lgamma(m) - math.lgamma(ell) - math.lgamma(m - ell + 1)
                   + (ell - 1) * log_q)
        term = math.exp(lt)
        total += term
        if m >= max(2 * ell, 8):
            r = mu * math.exp(1.0 - mu) * (1.0 - q) * (m + 1) / (m - ell + 2)
            if r < 1.0 and term * r / (1.0 - r) < tol:
                return total
    raise SeriesTruncationError(
        f"two-color series tail not certified below {tol:.1e} within {m_max} terms")


def two_color_f_ell(lambda_red: float, lambda_blue: float, ell: int,
                    tol: float = 1e-12) -> float:
    """Exact probability that the root has exactly ell friends, k = 2.

    Three parts: the isolated-type atom at ell = 1, plus two Borel-weighted
    binomial series (one per color playing the finite-cluster role).
    theta_red = theta(lambda_red) is the survival probability of the pure-red
    process, i.e. of blue-avoiding connection to infinity.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    lam = LambdaVector((lambda_red, lambda_blue))
    theta_red = survival_theta(lambda_red)
    theta_blue = survival_theta(lambda_blue)
    phat = extended_type_distribution(lam)
    # gamma bit 0 = red-avoiding (pure blue) alive, bit 1 = blue-avoiding alive
    p00 = phat[0b00]
    p10 = phat[0b01]  # red-avoiding alive only: finite pure-red cluster
    p01 = phat[0b10]  # blue-avoiding alive only: finite pure-blue cluster
    out = p00 if ell == 1 else 0.0
    if p10 > 0.0:
        out += p10 * _borel_binomial_series(
            lambda_red * (1.0 - theta_red), theta_blue, ell, tol)
    if p01 > 0.0:
        out += p01 * _borel_binomial_series(
            lambda_blue * (1.0 - theta_blue), theta_red, ell, tol)
    return out


# ---------------------------------------------------------------------------
# Near-critical constant C(k)
# ---------------------------------------------------------------------------

DEFAULT_EPS_GRID = (1e-2, 5e-3, 2e-3, 1e-3)


@dataclass(frozen=True)
class NearCriticalDiagnostics:
    eps_grid: tuple[float, ...]
    ratios: tuple[float, ...]
    monotone: bool
    pair_extrapolants: tuple[float, ...] = field(default=())


def near_critical_constant(k: int, eps_grid=DEFAULT_EPS_GRID):
    """Estimate C(k) = lim f*_inf(eps)/eps^k for homogeneous intensities
    (1+eps)/(k-1) via the eps grid and order-1 Richardson extrapolation.
    """
    if k < 2:
        raise ValueError("need k >= 2")
    grid = tuple(float(e) for e in eps_grid)
    if len(grid) < 2 or any(e <= 0 for e in grid) or any(
            a <= b for a, b in zip(grid, grid[1:])):
        raise ValueError("eps grid must be decreasing and positive")
    if k >= 3 and grid[0] >= 1.0 / (k - 2):
        raise ValueError("eps grid violates the small-subset assumption")
    ratios = []
    for eps in grid:
        lam = LambdaVector([(1.0 + eps) / (k - 1)] * k)
        ratios.append(f_infinity_inclusion_exclusion(lam) / eps ** k)
    diffs = [b - a for a, b in zip(ratios, ratios[1:])]
    monotone = all(d >= 0 for d in diffs) or all(d <= 0 for d in diffs)
    pairs = tuple(
        (e1 * r2 - e2 * r1) / (e1 - e2)
        for (e1, r1), (e2, r2) in zip(zip(grid, ratios), zip(grid[1:], ratios[1:]))
    )
    estimate = pairs[-1]
    return estimate, NearCriticalDiagnostics(grid, tuple(ratios), monotone, pairs)
