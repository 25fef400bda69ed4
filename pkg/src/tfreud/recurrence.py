"""Three-term recurrence coefficients for the weight exp(-z*x^4) on (0, inf).

The monic orthogonal family satisfies x*P_n = P_{n+1} + b_n*P_n + a_n*P_{n-1}
with a_0 = 0.  Coefficients are produced from moments by the modified-moment
(Chebyshev) algorithm run at a boosted internal precision: the map from
moments to coefficients loses roughly 3.1 bits per degree, so the boost grows
linearly with n_max and the final values are rounded back to the caller's
precision.

The combinations R_n = a_{n+1} + b_n^2 + a_n and T_n = a_n*(b_n + b_{n-1})
close the Laguerre-Freud system:

    4z*[a_{n+2}a_{n+1} + T_{n+1}(b_{n+1}+b_n) + R_n^2 + T_n(b_n+b_{n-1})
        + a_n a_{n-1}] = 2n+1
    4z*[a_{n+1}(T_{n+2}+T_n) - a_n(T_{n+1}+T_{n-1}) - T_n(R_n+R_{n-1})
        + T_{n+1}(R_{n+1}+R_n)] = b_n

plus one nonlinear difference identity quadratic in the same data.  Forward
generation from a seed is supported as a diagnostic only: it amplifies seed
error at a rate of a few bits per step.

Large-n behaviour: a_n ~ sqrt(n/(140z)) and b_n ~ 2*(n/(140z))^(1/4).  The
constants A = 140^(-1/2), B = 2*140^(-1/4) satisfy exact rational relations
in q = A^2 = 1/140, checked here with fractions.  In z, the coefficients obey
a_n(z) = z^(-1/2)*a_n(1), b_n(z) = z^(-1/4)*b_n(1), h_n(z) =
z^(-(2n+1)/4)*h_n(1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .kernel import (
    ConvergenceError,
    DomainError,
    PrecisionContext,
    PrecisionExhaustionError,
)
from .moments import moment

# measured precision loss of the moment map, bits per degree, plus headroom
LOSS_BITS_PER_DEGREE = 3.5
BASE_GUARD_BITS = 64


@dataclass(frozen=True)
class RecurrenceTable:
    """a_0..a_{n_max}, b_0..b_{n_max}, h_0..h_{n_max} at a fixed z; a_0 = 0."""

    z: mp.mpf
    a: tuple
    b: tuple
    h: tuple

    def __post_init__(self):
        if not (len(self.a) == len(self.b) == len(self.h)):
            raise DomainError("a, b, h must have equal lengths")
        if len(self.a) == 0 or self.a[0] != 0:
            raise DomainError("a_0 = 0 convention violated")

    @property
    def n_max(self) -> int:
        return len(self.b) - 1

    def R(self, n: int) -> mp.mpf:
        """R_n = a_{n+1} + b_n^2 + a_n; defined for 0 <= n <= n_max - 1."""
        if n < 0 or n + 1 > self.n_max:
            raise IndexError(f"R_{n} needs a_{n + 1}, table holds 0..{self.n_max}")
        return self.a[n + 1] + self.b[n] ** 2 + self.a[n]

    def T(self, n: int) -> mp.mpf:
        """T_n = a_n*(b_n + b_{n-1}); T_0 = 0, so b_{-1} is never read."""
        if n < 0 or n > self.n_max:
            raise IndexError(f"T_{n} outside table range 0..{self.n_max}")
        if n == 0:
            return mp.mpf(0)
        return self.a[n] * (self.b[n] + self.b[n - 1])

    def sigma(self, n: int) -> mp.mpf:
        """sigma_n = sum_{k<n} b_k: minus the subleading monic coefficient."""
        if n < 0 or n > self.n_max + 1:
            raise IndexError(f"sigma_{n} outside 0..{self.n_max + 1}")
        return mp.fsum(self.b[:n]) if n else mp.mpf(0)


def internal_bits_for(ctx: PrecisionContext, n_max: int) -> int:
    return ctx.bits + math.ceil(LOSS_BITS_PER_DEGREE * n_max) + BASE_GUARD_BITS


def chebyshev_coeffs(z, n_max: int, ctx: PrecisionContext,
                     _internal_bits: int | None = None) -> RecurrenceTable:
    """Recurrence coefficients from the moments mu_0..mu_{2*n_max+1}.

    Runs the modified-moment table sigma_{k,l} = <u, P_k x^l> with two-row
    storage; h_k = sigma_{k,k}, a_{k+1} = h_{k+1}/h_k.  Raises
    PrecisionExhaustionError (with the failing index) when a diagonal entry
    has lost all significant bits, which is the k at which every digit of
    h_k is roundoff.  `_internal_bits` overrides the precision boost; it
    exists so tests can force exhaustion cheaply.
    """
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    work = _internal_bits if _internal_bits is not None else internal_bits_for(ctx, n_max)
    ictx = PrecisionContext(max(64, work))
    with mp.workprec(ictx.bits + 16):
        zv = mp.mpf(z)
        if not zv > 0:
            raise DomainError(f"z must be positive, got {z}")
        L = 2 * n_max + 1
        mu = [moment(l, zv, ictx) for l in range(L + 1)]
        max_mag = max(mp.mag(m) for m in mu)
        floor = max_mag - ictx.bits + 8

        a = [mp.mpf(0)]
        b = [mu[1] / mu[0]]
        h = [mu[0]]
        prev = [mp.mpf(0)] * (L + 1)   # sigma_{-1,l}
        cur = list(mu)                  # sigma_{0,l}
        for k in range(n_max):
            # row k+1 holds l = k+1 .. L-(k+1); keep absolute l-indexing
            new = [mp.mpf(0)] * (L + 1)
            for l in range(k + 1, L - k):
                new[l] = cur[l + 1] - b[k] * cur[l] - a[k] * prev[l]
                m = mp.mag(new[l])
                if m > max_mag:
                    max_mag = m
                    floor = max_mag - ictx.bits + 8
            hk1 = new[k + 1]
            if hk1 <= 0 or mp.mag(hk1) < floor:
                raise PrecisionExhaustionError(
                    f"norm h_{k + 1} lost all significant bits "
                    f"(increase precision beyond {ictx.bits})", k + 1)
            a.append(hk1 / cur[k])
            b.append(new[k + 2] / hk1 - cur[k + 1] / cur[k])
            h.append(hk1)
            prev, cur = cur, new
        return RecurrenceTable(ctx.round(zv),
                               tuple(ctx.round(v) for v in a),
                               tuple(ctx.round(v) for v in b),
                               tuple(ctx.round(v) for v in h))


# ---------------------------------------------------------------------------
# Laguerre-Freud residuals
# ---------------------------------------------------------------------------

def _check_lf_range(tbl: RecurrenceTable, n: int, lo: int):
    if n < lo or n > tbl.n_max - 2:
        raise IndexError(f"n must satisfy {lo} <= n <= {tbl.n_max - 2}, got {n}")


def lf_residual_1(tbl: RecurrenceTable, n: int) -> mp.mpf:
    """4z*[a_{n+2}a_{n+1} + T_{n+1}(b_{n+1}+b_n) + R_n^2 + T_n(b_n+b_{n-1})
    + a_n a_{n-1}] - (2n+1).  n = 0 uses the a_0 = T_0 = 0 conventions."""
    _check_lf_range(tbl, n, 0)
    a, b = tbl.a, tbl.b
    with mp.workprec(mp.mp.prec + 32):
        bracket = a[n + 2] * a[n + 1] + tbl.T(n + 1) * (b[n + 1] + b[n]) + tbl.R(n) ** 2
        if n >= 1:
            bracket += tbl.T(n) * (b[n] + b[n - 1]) + a[n] * a[n - 1]
        return 4 * tbl.z * bracket - (2 * n + 1)


def lf_residual_2(tbl: RecurrenceTable, n: int) -> mp.mpf:
    """4z*[a_{n+1}(T_{n+2}+T_n) - a_n(T_{n+1}+T_{n-1}) - T_n(R_n+R_{n-1})
    + T_{n+1}(R_{n+1}+R_n)] - b_n."""
    _check_lf_range(tbl, n, 1)
    a = tbl.a
    with mp.workprec(mp.mp.prec + 32):
        bracket = (a[n + 1] * (tbl.T(n + 2) + tbl.T(n))
                   - a[n] * (tbl.T(n + 1) + tbl.T(n - 1))
                   - tbl.T(n) * (tbl.R(n) + tbl.R(n - 1))
                   + tbl.T(n + 1) * (tbl.R(n + 1) + tbl.R(n)))
        return 4 * tbl.z * bracket - tbl.b[n]


def _lf_I_sides(tbl: RecurrenceTable, n: int):
    a, b = tbl.a, tbl.b
    lhs = (a[n + 1]
           * (tbl.T(n + 2) + b[n + 1] * tbl.R(n + 1) + tbl.T(n + 1))
           * (tbl.T(n + 1) + b[n] * tbl.R(n) + tbl.T(n)))
    rhs = (a[n + 1] * tbl.R(n + 1) + b[n] * tbl.T(n + 1) + a[n + 1] * a[n]
           - mp.mpf(n + 1) / (4 * tbl.z)) ** 2
    return lhs, rhs


def lf_residual_I(tbl: RecurrenceTable, n: int) -> mp.mpf:
    """Nonlinear difference identity: product form minus squared form."""
    _check_lf_range(tbl, n, 0)
    with mp.workprec(mp.mp.prec + 32):
        lhs, rhs = _lf_I_sides(tbl, n)
        return lhs - rhs


def lf_scale_I(tbl: RecurrenceTable, n: int) -> mp.mpf:
    """Magnitude of the larger side of the nonlinear identity, for tolerances."""
    _check_lf_range(tbl, n, 0)
    with mp.workprec(mp.mp.prec + 32):
        lhs, rhs = _lf_I_sides(tbl, n)
        return max(abs(lhs), abs(rhs))


def lf_forward(seed, z, n_max: int, ctx: PrecisionContext,
               reference: RecurrenceTable | None = None):
    """Generate (a, b) forward from seed = (b_0, a_1, b_1) using the two
    Laguerre-Freud equations as a recursion.  Diagnostic only: the recursion
    is unstable and the result is compared elementwise against the
    moment-route table.

    Returns (table, divergence_index); divergence_index is the first n where
    the forward value drifts from the reference by more than 1000x the
    verification tolerance, or None if there is no such n.
    """
    if n_max < 2:
        raise DomainError(f"n_max must be >= 2, got {n_max}")
    b0, a1, b1 = seed
    if reference is None:
        reference = chebyshev_coeffs(z, n_max, ctx)
    with mp.workprec(ctx.bits + 32):
        zv = mp.mpf(z)
        if not zv > 0:
            raise DomainError(f"z must be positive, got {z}")
        a = [mp.mpf(0), mp.mpf(a1)]
        b = [mp.mpf(b0), mp.mpf(b1)]

        def T(i):
            return a[i] * (b[i] + b[i - 1]) if i >= 1 else mp.mpf(0)

        def R(i):
            return a[i + 1] + b[i] ** 2 + a[i]

        for n in range(n_max - 1):
            if a[n + 1] == 0:
                raise ConvergenceError(f"forward recursion hit a_{n + 1} = 0 at step {n}")
            bracket = T(n + 1) * (b[n + 1] + b[n]) + R(n) ** 2
            if n >= 1:
                bracket += T(n) * (b[n] + b[n - 1]) + a[n] * a[n - 1]
            a_next = (mp.mpf(2 * n + 1) / (4 * zv) - bracket) / a[n + 1]
            if a_next <= 0:
                raise ConvergenceError(
                    f"forward recursion produced a_{n + 2} = {mp.nstr(a_next, 8)} <= 0 at step {n}")
            a.append(a_next)
            # T_{n+2} from the b-equation, then b_{n+2} = T_{n+2}/a_{n+2} - b_{n+1}
            r_prev = R(n - 1) if n >= 1 else mp.mpf(0)  # multiplied by T_0 = 0 at n = 0
            t_next = ((b[n] / (4 * zv) + a[n] * (T(n + 1) + T(n - 1))
                       + T(n) * (R(n) + r_prev)
                       - T(n + 1) * (R(n + 1) + R(n))) / a[n + 1]) - T(n)
            b.append(t_next / a_next - b[n + 1])

        h = [moment(0, zv, ctx)]
        for i in range(1, n_max + 1):
            h.append(a[i] * h[i - 1])
        tbl = RecurrenceTable(ctx.round(zv),
                              tuple(ctx.round(v) for v in a),
                              tuple(ctx.round(v) for v in b),
                              tuple(ctx.round(v) for v in h))
    div = None
    for n in range(n_max + 1):
        tol_a = 1000 * ctx.verify_tol(reference.a[n] if reference.a[n] != 0 else 1)
        tol_b = 1000 * ctx.verify_tol(reference.b[n])
        if abs(tbl.a[n] - reference.a[n]) > tol_a or abs(tbl.b[n] - reference.b[n]) > tol_b:
            div = n
            break
    return tbl, div


# ---------------------------------------------------------------------------
# asymptotics and scaling
# ---------------------------------------------------------------------------

def asymptotic_ratio(tbl: RecurrenceTable, n: int):
    """(a_n / sqrt(n/(140z)), b_n / (2*(n/(140z))^(1/4))); both tend to 1."""
    if n < 1 or n > tbl.n_max:
        raise IndexError(f"n must satisfy 1 <= n <= {tbl.n_max}, got {n}")
    with mp.workprec(mp.mp.prec + 32):
        base = mp.mpf(n) / (140 * tbl.z)
        return tbl.a[n] / mp.sqrt(base), tbl.b[n] / (2 * base ** mp.mpf("0.25"))


def asymptotic_constant_residuals() -> dict:
    """Exact rational checks on A = 140^(-1/2), B = 2*140^(-1/4).

    Every relation below is polynomial in q = A^2 = 1/140 once B^2 = 4A is
    used, so Fraction arithmetic proves them exactly (zero residuals).
    """
    q = Fraction(1, 140)
    # with B^2 = 4A: A*B^2 = 4q, B^4 = 16q, (2A+B^2)^2 = 36q, A*B^2*(6A+B^2)^2 = 400q^2
    return {
        "quadratic_full": 2 * q + 8 * (4 * q) + 36 * q - Fraction(1, 2),
        "quadratic_reduced": 3 * q + 6 * (4 * q) + (16 * q) / 2 - Fraction(1, 4),
        "quartic": 400 * q ** 2 - (3 * q + 3 * (4 * q) - Fraction(1, 4)) ** 2,
    }


def asymptotic_constants(ctx: PrecisionContext):
    """(A, B) as reals, positive branch.  The defining quadratic for B^2 has
    two real roots; the negative one is rejected by positivity of b_n."""
    with ctx.workprec(16):
        A = 1 / mp.sqrt(140)
        B = 2 * mp.mpf(140) ** mp.mpf("-0.25")
        rejected = -B
    return ctx.round(A), ctx.round(B), ctx.round(rejected)


def scaling_check(tbl_z: RecurrenceTable, tbl_1: RecurrenceTable, n: int):
    """(a_n(z)*z^(1/2)/a_n(1) - 1, b_n(z)*z^(1/4)/b_n(1) - 1)."""
    if n < 0 or n > min(tbl_z.n_max, tbl_1.n_max):
        raise IndexError(f"n outside both tables, got {n}")
    with mp.workprec(mp.mp.prec + 32):
        z = tbl_z.z
        da = (tbl_z.a[n] * mp.sqrt(z) / tbl_1.a[n] - 1) if n >= 1 else mp.mpf(0)
        db = tbl_z.b[n] * z ** mp.mpf("0.25") / tbl_1.b[n] - 1
        return da, db


def h_scaling_check(z, n: int, ctx: PrecisionContext) -> mp.mpf:
    """Relative residual of h_n(z) = z^(-(2n+1)/4) * h_n(1)."""
    tbl_z = chebyshev_coeffs(z, n, ctx)
    tbl_1 = chebyshev_coeffs(1, n, ctx)
    with mp.workprec(ctx.bits + 32):
        zv = mp.mpf(z)
        return tbl_z.h[n] * zv ** (mp.mpf(2 * n + 1) / 4) / tbl_1.h[n] - 1
