"""Zeros of P_n and everything built on top of them.

* Zeros come from the symmetric tridiagonal form of the Jacobi matrix
  (diagonal b_0..b_{n-1}, off-diagonal sqrt(a_1)..sqrt(a_{n-1})), then one
  guarded Newton step on P_n through the recurrence.
* The weight |y| exp(-z y^8) on the whole line has even moments equal to the
  moments of exp(-z x^4) on (0, inf), so its monic family satisfies
  S_{2n}(y) = P_n(y^2) and a chain gamma_1, gamma_2, ... with
  gamma_{2k} + gamma_{2k+1} = b_k and gamma_{2k-1} gamma_{2k} = a_k; any
  chain element times 4 cos^2(pi/(2n+1)) + eps bounds the largest zero.
* The limiting zero density after the N^{-1/4} rescaling is
  omega(x,t) = (4/(7 pi)) x^(-1/2) t^(-1/8) c^(-1/2) F(x/(4 c t^(1/4))) on
  (0, 4 c t^(1/4)), c = 140^(-1/4), where F is the Gauss series
  2F1(1/2, -7/2; -5/2; w).  Since -7/2 + 1/2 = -3 and -5/2 shift into each
  other, F collapses to the elementary closed form
      F(w) = V^7 + (21/5) w V^5 + 7 w^2 V^3 + 7 w^3 V,   V = sqrt(1-w),
  which integrates to an incomplete-beta CDF with total mass exactly 1.
* The integral form of the density is (1/(pi t)) int ds/(sqrt(4 c s^(1/4)
  - x) sqrt(x)) taken over s where the radicand is positive, i.e. from
  s_0 = (x/(4c))^4 up to t; substituting s = s_0 + v^2 removes the
  inverse-square-root singularity at the lower end.
* Each zero configuration minimizes
  E_n = -2 sum_{j<k} ln|x_k - x_j| + sum_k V_n(x_k) with the external field
  V_n(x) = z x^4 + ln|x (x^2 + b_n x + R_n) + P_n(0)^2/(4 z h_n)| - ln|x|,
  so the analytic gradient vanishes at the computed zeros.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .kernel import (
    DomainError,
    PrecisionContext,
    hyp2f1_series,
    tridiag_eigenvalues,
)
from .operators import ladder_pair, ttrr_eval_d2
from .recurrence import RecurrenceTable, chebyshev_coeffs

# Width of the band next to w = 1 where density() switches to the integral
# form.  The plain Gauss series needs about ln(1/tol)/(1-w) terms, so close
# to the support edge it stalls (6e7 terms by w = 1 - 1e-6); the integral
# form is exact on the whole support and cheap, so it takes over early.
SERIES_CUTOFF = mp.mpf("0.05")


@dataclass(frozen=True)
class ZeroSet:
    """x_{n,1} < ... < x_{n,n}, all positive."""

    n: int
    z: mp.mpf
    values: tuple

    def __post_init__(self):
        if len(self.values) != self.n:
            raise DomainError(f"expected {self.n} zeros, got {len(self.values)}")
        prev = mp.mpf(0)
        for v in self.values:
            if not v > prev:
                raise DomainError("zeros must be strictly increasing and positive")
            prev = v

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, k: int):
        return self.values[k]


def zeros(tbl: RecurrenceTable, n: int, ctx: PrecisionContext,
          refine: bool = True) -> ZeroSet:
    """Zeros of P_n as eigenvalues of the symmetrized Jacobi matrix, then
    (optionally) one Newton step each through ttrr_eval_d2, accepted only
    when it stays inside the midpoint bracket and shrinks |P_n|."""
    if n < 1 or n > tbl.n_max:
        raise IndexError(f"need 1 <= n <= {tbl.n_max}, got {n}")
    with ctx.workprec(32):
        diag = [tbl.b[k] for k in range(n)]
        off = [mp.sqrt(tbl.a[k]) for k in range(1, n)]
        eig = tridiag_eigenvalues(diag, off, ctx)
        if refine:
            eig = _newton_polish(tbl, n, eig)
        vals = tuple(ctx.round(v) for v in eig)
    return ZeroSet(n, ctx.round(tbl.z), vals)


def _newton_polish(tbl: RecurrenceTable, n: int, eig: list) -> list:
    out = []
    for k, x in enumerate(eig):
        lo = (eig[k - 1] + x) / 2 if k > 0 else x / 2
        hi = (eig[k + 1] + x) / 2 if k + 1 < len(eig) else x * 2
        p, dp, _ = ttrr_eval_d2(tbl, n, x)
        if dp == 0:
            out.append(x)
            continue
        cand = x - p / dp
        if lo < cand < hi:
            p2, _, _ = ttrr_eval_d2(tbl, n, cand)
            if abs(p2) <= abs(p):
                out.append(cand)
                continue
        out.append(x)
    return out


def interlacing_margin(outer: ZeroSet, inner: ZeroSet) -> mp.mpf:
    """Smallest gap in x_{n,k} < x_{n-1,k} < x_{n,k+1}; positive means the
    interlacing is strict."""
    if outer.n != inner.n + 1:
        raise DomainError(f"need degrees n and n-1, got {outer.n}, {inner.n}")
    margin = None
    for k in range(inner.n):
        left = inner[k] - outer[k]
        right = outer[k + 1] - inner[k]
        small = min(left, right)
        margin = small if margin is None else min(margin, small)
    return margin


def zero_scaling_check(n: int, z, ctx: PrecisionContext) -> mp.mpf:
    """max_k |x_{n,k}(z) * z^(1/4) - x_{n,k}(1)|."""
    with ctx.workprec(32):
        zv = mp.mpf(z)
        t_z = chebyshev_coeffs(zv, n, ctx)
        t_1 = chebyshev_coeffs(mp.mpf(1), n, ctx)
        zs = zeros(t_z, n, ctx)
        os = zeros(t_1, n, ctx)
        f = zv ** mp.mpf("0.25")
        return max(abs(zs[k] * f - os[k]) for k in range(n))


# ---------------------------------------------------------------------------
# largest-zero bound through the symmetrized chain
# ---------------------------------------------------------------------------

def gamma_chain(polys: tuple, tbl: RecurrenceTable, n_max: int) -> tuple:
    """gamma_1 .. gamma_{2 n_max - 1} with
    gamma_{2k+1} = -P_{k+1}(0)/P_k(0) and gamma_{2k} = -a_k P_{k-1}(0)/P_k(0).
    Element i of the result is gamma_{i+1}.  All entries must come out
    positive (P_k(0) alternates in sign); a violation is raised."""
    if n_max < 1 or n_max > min(len(polys) - 1, tbl.n_max):
        raise IndexError(f"need 1 <= n_max <= {min(len(polys) - 1, tbl.n_max)}")
    with mp.workprec(mp.mp.prec + 32):
        out = []
        for i in range(1, 2 * n_max):
            if i % 2:
                k = (i - 1) // 2
                g = -polys[k + 1].at_zero / polys[k].at_zero
            else:
                k = i // 2
                g = -tbl.a[k] * polys[k - 1].at_zero / polys[k].at_zero
            if not g > 0:
                raise DomainError(f"gamma_{i} = {mp.nstr(g, 8)} not positive")
            out.append(g)
        return tuple(out)


def largest_zero_bound(polys: tuple, tbl: RecurrenceTable, n: int,
                       eps=mp.mpf("1e-3")) -> mp.mpf:
    """max_k c_{2n} gamma_k over k = 1..2n-1, c_{2n} = 4 cos^2(pi/(2n+1)) + eps;
    an upper bound for the largest zero x_{n,n}."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    ev = mp.mpf(eps)
    if not ev > 0:
        raise DomainError("eps must be positive")
    with mp.workprec(mp.mp.prec + 32):
        chain = gamma_chain(polys, tbl, n)
        c2n = 4 * mp.cos(mp.pi / (2 * n + 1)) ** 2 + ev
        return c2n * max(chain)


# ---------------------------------------------------------------------------
# asymptotic zero density
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityModel:
    """Support data of the rescaled-zero density at time t."""

    t: mp.mpf
    c: mp.mpf
    beta_t: mp.mpf

    @classmethod
    def for_t(cls, t, ctx: PrecisionContext) -> "DensityModel":
        tv = mp.mpf(t)
        if not tv > 0:
            raise DomainError("t must be positive")
        with ctx.workprec(32):
            c = mp.mpf(140) ** mp.mpf("-0.25")
            beta = 4 * c * tv ** mp.mpf("0.25")
        return cls(ctx.round(tv), ctx.round(c), ctx.round(beta))


def _density_prefactor(x, t):
    c = mp.mpf(140) ** mp.mpf("-0.25")
    return (4 / (7 * mp.pi)) / (mp.sqrt(x) * t ** mp.mpf("0.125") * mp.sqrt(c))


def density(x, t, ctx: PrecisionContext) -> mp.mpf:
    """omega(x, t) by the Gauss series; switches to the integral form when
    the argument w = x/(4 c t^(1/4)) is within SERIES_CUTOFF of 1."""
    with ctx.workprec(32):
        xv, tv = mp.mpf(x), mp.mpf(t)
        model = DensityModel.for_t(tv, ctx)
        if not 0 < xv < model.beta_t:
            raise DomainError(f"x must lie in (0, {mp.nstr(model.beta_t, 8)})")
        w = xv / model.beta_t
        if w >= 1 - SERIES_CUTOFF:
            return density_integral(xv, tv, ctx)
        f = hyp2f1_series(mp.mpf("0.5"), mp.mpf("-3.5"), mp.mpf("-2.5"), w, ctx)
        return ctx.round(_density_prefactor(xv, tv) * f)


def density_integral(x, t, ctx: PrecisionContext) -> mp.mpf:
    """omega(x, t) as (1/(pi t)) int ds/(sqrt(4 c s^(1/4) - x) sqrt(x)) over
    the s with positive radicand, i.e. s in (s_0, t), s_0 = (x/(4c))^4.

    Substituting s = s_0 + v^2 and writing A = (s_0 + v^2)^(1/4), B = x/(4c)
    turns the radicand into 4 c v^2 / ((A+B)(A^2+B^2)) exactly, so the
    transformed integrand sqrt((A+B)(A^2+B^2)/c) is smooth on the whole
    range: no subtraction is left to cancel at the lower endpoint."""
    with ctx.workprec(32):
        xv, tv = mp.mpf(x), mp.mpf(t)
        model = DensityModel.for_t(tv, ctx)
        if not 0 < xv < model.beta_t:
            raise DomainError(f"x must lie in (0, {mp.nstr(model.beta_t, 8)})")
        c = model.c
        B = xv / (4 * c)
        s0 = B ** 4

        def g(v):
            A = (s0 + v * v) ** mp.mpf("0.25")
            return mp.sqrt((A + B) * (A * A + B * B) / c)

        span = tv - s0
        if span <= 0:
            # x within an ulp of the support edge: s_0 rounds onto t and the
            # s-interval collapses
            return ctx.round(mp.mpf(0))
        val = mp.quad(g, [0, mp.sqrt(span)])
        return ctx.round(val / (mp.pi * tv * mp.sqrt(xv)))


def density_closed_form(w, ctx: PrecisionContext) -> mp.mpf:
    """The elementary form of 2F1(1/2,-7/2;-5/2;w) on [0, 1]."""
    with ctx.workprec(32):
        wv = mp.mpf(w)
        if not 0 <= wv <= 1:
            raise DomainError("w must lie in [0, 1]")
        V = mp.sqrt(1 - wv)
        val = V ** 7 + mp.mpf(21) / 5 * wv * V ** 5 + 7 * wv ** 2 * V ** 3 \
            + 7 * wv ** 3 * V
        return ctx.round(val)


def density_cdf(w, ctx: PrecisionContext) -> mp.mpf:
    """G(w) = (8/(7 pi)) int_0^w s^(-1/2) F(s) ds: the CDF of the density in
    the support coordinate w = x/beta_t (t-independent).  Expanding F term
    by term gives four incomplete Beta integrals; G(1) = 1 exactly."""
    with ctx.workprec(32):
        wv = mp.mpf(w)
        if wv <= 0:
            return mp.mpf(0)
        if wv >= 1:
            return mp.mpf(1)
        half = mp.mpf("0.5")
        acc = mp.betainc(half, mp.mpf("4.5"), 0, wv)
        acc += mp.mpf(21) / 5 * mp.betainc(half + 1, mp.mpf("3.5"), 0, wv)
        acc += 7 * mp.betainc(half + 2, mp.mpf("2.5"), 0, wv)
        acc += 7 * mp.betainc(half + 3, mp.mpf("1.5"), 0, wv)
        return ctx.round(8 / (7 * mp.pi) * acc)


def density_normalization(t, ctx: PrecisionContext) -> mp.mpf:
    """int_0^{beta_t} omega(x, t) dx by quadrature of density() itself, with
    x = beta_t u^2 on the left half and x = beta_t (1 - v^2) on the right to
    strip the endpoint singularities.  Runs at a fixed moderate precision:
    the contract on the result is 1e-6."""
    qctx = PrecisionContext(96)
    with mp.workprec(qctx.bits):
        tv = mp.mpf(t)
        model = DensityModel.for_t(tv, qctx)
        beta = model.beta_t
        r = mp.sqrt(mp.mpf("0.5"))

        def left(u):
            return density(beta * u * u, tv, qctx) * 2 * beta * u

        def right(v):
            xv = beta * (1 - v * v)
            if xv >= beta:
                # v so small that 1 - v^2 rounds to 1; the lost mass is
                # O(v^3), far below the 1e-6 contract
                return mp.mpf(0)
            return density(xv, tv, qctx) * 2 * beta * v

        return mp.quad(left, [0, r]) + mp.quad(right, [0, r])


def empirical_density_distance(n: int, N: int, t, ctx: PrecisionContext) -> mp.mpf:
    """Kolmogorov distance between the empirical CDF of the rescaled zeros
    x_{n,k}(1)/N^(1/4) and the model CDF at time t."""
    if n < 1 or N < 1:
        raise DomainError("n and N must be positive")
    with ctx.workprec(32):
        tv = mp.mpf(t)
        tbl = chebyshev_coeffs(mp.mpf(1), n, ctx)
        zs = zeros(tbl, n, ctx)
        model = DensityModel.for_t(tv, ctx)
        scale = mp.mpf(N) ** mp.mpf("0.25")
        worst = mp.mpf(0)
        for k in range(n):
            w = zs[k] / (scale * model.beta_t)
            g = density_cdf(w, ctx)
            worst = max(worst, abs(g - mp.mpf(k) / n), abs(g - mp.mpf(k + 1) / n))
        return worst


# ---------------------------------------------------------------------------
# electrostatics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ElectroSystem:
    positions: tuple
    n: int
    z: mp.mpf
    energy: mp.mpf
    gradient: tuple


def _field_pieces(x, n: int, tbl: RecurrenceTable):
    """(cubic, cubic') of the shifted log argument
    x(x^2 + b_n x + R_n) + P_n(0)^2/(4 z h_n), the P-part supplied by caller."""
    b = tbl.b[n]
    R = tbl.R(n)
    cubic = x * (x * x + b * x + R)
    dcubic = 3 * x * x + 2 * b * x + R
    return cubic, dcubic


def potential_eval(x, n: int, z, tbl: RecurrenceTable, polys: tuple) -> mp.mpf:
    """V_n(x) = z x^4 + ln|x(x^2+b_n x+R_n) + P_n(0)^2/(4 z h_n)| - ln|x|."""
    if n + 1 > tbl.n_max or n > len(polys) - 1:
        raise IndexError(f"need n + 1 <= {tbl.n_max}, got n={n}")
    with mp.workprec(mp.mp.prec + 32):
        xv = mp.mpf(x)
        if xv == 0:
            raise DomainError("x = 0 is a pole of the potential")
        shift = polys[n].at_zero ** 2 / (4 * mp.mpf(z) * tbl.h[n])
        cubic, _ = _field_pieces(xv, n, tbl)
        arg = cubic + shift
        if arg == 0:
            raise DomainError("log argument vanishes")
        return mp.mpf(z) * xv ** 4 + mp.log(abs(arg)) - mp.log(abs(xv))


def potential_deriv(x, n: int, z, tbl: RecurrenceTable, polys: tuple) -> mp.mpf:
    """V_n'(x) = 4 z x^3 + (3x^2 + 2 b_n x + R_n)/(cubic + shift) - 1/x."""
    if n + 1 > tbl.n_max or n > len(polys) - 1:
        raise IndexError(f"need n + 1 <= {tbl.n_max}, got n={n}")
    with mp.workprec(mp.mp.prec + 32):
        xv = mp.mpf(x)
        if xv == 0:
            raise DomainError("x = 0 is a pole of the potential")
        shift = polys[n].at_zero ** 2 / (4 * mp.mpf(z) * tbl.h[n])
        cubic, dcubic = _field_pieces(xv, n, tbl)
        return 4 * mp.mpf(z) * xv ** 3 + dcubic / (cubic + shift) - 1 / xv


def electro_energy(positions, n: int, z, tbl: RecurrenceTable,
                   polys: tuple) -> ElectroSystem:
    """Total energy E_n = -2 sum_{j<k} ln|x_k - x_j| + sum_k V_n(x_k) and its
    analytic gradient."""
    pts = [mp.mpf(p) for p in positions]
    if len(pts) != n:
        raise DomainError(f"expected {n} positions, got {len(pts)}")
    if len(set(pts)) != n:
        raise DomainError("positions must be distinct")
    with mp.workprec(mp.mp.prec + 32):
        pair = mp.fsum(mp.log(abs(pts[k] - pts[j]))
                       for k in range(n) for j in range(k))
        ext = mp.fsum(potential_eval(p, n, z, tbl, polys) for p in pts)
        energy = -2 * pair + ext
        grad = []
        for k in range(n):
            coul = mp.fsum(1 / (pts[k] - pts[j]) for j in range(n) if j != k)
            grad.append(-2 * coul + potential_deriv(pts[k], n, z, tbl, polys))
    return ElectroSystem(tuple(pts), n, mp.mpf(z), energy, tuple(grad))


def stationarity_check(tbl: RecurrenceTable, polys: tuple, n: int,
                       ctx: PrecisionContext) -> mp.mpf:
    """max |gradient at the computed zeros| divided by the gradient scale at
    the same configuration stretched by 1%: small iff the zeros really are
    the equilibrium."""
    zs = zeros(tbl, n, ctx)
    sys0 = electro_energy(zs.values, n, tbl.z, tbl, polys)
    bumped = [v * (1 + mp.mpf("0.01") * (1 if k % 2 else -1))
              for k, v in enumerate(zs.values)]
    sysp = electro_energy(bumped, n, tbl.z, tbl, polys)
    scale = max(abs(g) for g in sysp.gradient)
    return max(abs(g) for g in sys0.gradient) / scale


# ---------------------------------------------------------------------------
# holonomic identity at the zeros
# ---------------------------------------------------------------------------

def ode_at_zeros_check(tbl: RecurrenceTable, polys: tuple, n: int,
                       ctx: PrecisionContext) -> mp.mpf:
    """max over zeros of the scaled residual of
    P_n''(x)/P_n'(x) = 4 z x^3 + (ln calA_n)'(x)."""
    if n < 1:
        raise IndexError(f"need n >= 1, got {n}")
    zs = zeros(tbl, n, ctx)
    A_n = ladder_pair(tbl, polys, n).A
    dA = A_n.derivative()
    with ctx.workprec(32):
        worst = mp.mpf(0)
        for x in zs.values:
            _, d1, d2 = ttrr_eval_d2(tbl, n, x)
            lhs = d2 / d1
            rhs = 4 * tbl.z * x ** 3 + dA.eval(x) / A_n.eval(x)
            worst = max(worst, abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1))
        return worst


# ---------------------------------------------------------------------------
# comparison families
# ---------------------------------------------------------------------------

def comparison_beta(ctx: PrecisionContext) -> mp.mpf:
    return 2 * mp.mpf(140) ** mp.mpf("-0.25")


def chebyshev_comparison(n: int, ctx: PrecisionContext) -> tuple:
    """(closed-form zeros, eigenvalue-route zeros) of the shifted Chebyshev
    family Q_n with constant recurrence x Q_n = Q_{n+1} + beta Q_n
    + (beta^2/4) Q_{n-1}: y_{n,k} = beta (cos((n-k+1) pi/(n+1)) + 1)."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    with ctx.workprec(32):
        beta = comparison_beta(ctx)
        closed = tuple(beta * (mp.cos(mp.pi * (n - k + 1) / (n + 1)) + 1)
                       for k in range(1, n + 1))
        diag = [beta] * n
        off = [beta / 2] * (n - 1)
        eig = tuple(tridiag_eigenvalues(diag, off, ctx))
    return closed, eig


def comparison_smallest_ratio(n: int, ctx: PrecisionContext) -> mp.mpf:
    """y_{n,1} / w(n) with w(n) = beta pi^2 / (2 (n+1)^2); tends to 1."""
    with ctx.workprec(32):
        beta = comparison_beta(ctx)
        y1 = beta * (1 - mp.cos(mp.pi / (n + 1)))
        return y1 / (beta * mp.pi ** 2 / (2 * (n + 1) ** 2))


def ptilde_zeros(n: int, ctx: PrecisionContext) -> tuple:
    """Zeros of the variable-coefficient comparison family
    x Pt_n = Pt_{n+1} + n^(1/4) beta Pt_n + sqrt(n) (beta^2/4) Pt_{n-1}
    (diag_0 = 0 since Pt_1 = x)."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    with ctx.workprec(32):
        beta = comparison_beta(ctx)
        quarter = mp.mpf("0.25")
        diag = [mp.mpf(0)] + [mp.mpf(k) ** quarter * beta for k in range(1, n)]
        off = [mp.mpf(k) ** quarter * beta / 2 for k in range(1, n)]
        if n == 1:
            return (mp.mpf(0),)
        return tuple(tridiag_eigenvalues(diag, off, ctx))
