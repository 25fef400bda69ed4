"""Operator identities attached to the recurrence table.

Everything in this module is a consequence of the three-term recurrence plus
the distributional Pearson equation of the weight exp(-z*x^4) on (0, inf):

* x^4 P_n expands over P_{n-4}..P_{n+4} with coefficients beta_{n,k}; the
  matrix of the expansion is the fourth power of the Jacobi matrix.
* x P'_{n+1} expands over P_{n-3}..P_{n+1} (structure relation) with
  coefficients 4z*beta_{n+1,k}.
* Eliminating P_{n-1}..P_{n-3} through the recurrence turns the structure
  relation into lowering/raising operators with rational coefficients
  A_n = x/C_n, B_n = D_n/C_n, and composing them gives one second-order ODE;
  the ladder functions calA_n, calB_n (quadratic resp. linear plus a simple
  pole at 0) give an independent second-order ODE.
* The degree-graded operator L = 4z*(J^4)_lower + diag(0,1,2,...) satisfies
  the compatibility identity J L - L J = J on rows unaffected by truncation.

Identity checks are done at the polynomial-coefficient level when the
identity is polynomial, and on a fixed log-spaced sample grid when it is
rational.  All derivative work on rational functions is symbolic.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .kernel import (
    DomainError,
    MonicPoly,
    PrecisionContext,
    RationalFn,
    poly_add,
    poly_diff,
    poly_eval,
    poly_max_abs,
    poly_mul,
    poly_scale,
    poly_sub,
    poly_trim,
)
from .recurrence import RecurrenceTable, chebyshev_coeffs

POLY_GUARD_PER_DEGREE = 2


def sample_grid(n: int, z, count: int = 16, lo=None, ctx: PrecisionContext | None = None):
    """Log-spaced sample points in (0.01, 4*(n/(140z))^(1/4) + 1): covers the
    oscillatory region of P_n and a margin of tail."""
    prec = ctx.bits + 16 if ctx is not None else mp.mp.prec
    with mp.workprec(prec):
        zv = mp.mpf(z)
        lov = mp.mpf(lo) if lo is not None else mp.mpf("0.01")
        hiv = 4 * (mp.mpf(max(n, 1)) / (140 * zv)) ** mp.mpf("0.25") + 1
        llo, lhi = mp.log(lov), mp.log(hiv)
        return [mp.exp(llo + (lhi - llo) * k / (count - 1)) for k in range(count)]


def poly_table(z, n_max: int, ctx: PrecisionContext,
               tbl: RecurrenceTable | None = None) -> tuple:
    """P_0..P_{n_max} as MonicPoly, built by the recurrence
    P_{k+1} = (x - b_k) P_k - a_k P_{k-1} from the given (or computed) table."""
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    if tbl is None:
        tbl = chebyshev_coeffs(z, n_max, ctx)
    if tbl.n_max < n_max:
        raise DomainError(f"table holds n <= {tbl.n_max}, need {n_max}")
    with mp.workprec(ctx.bits + 32):
        polys = [[mp.mpf(1)]]
        if n_max >= 1:
            polys.append([-tbl.b[0], mp.mpf(1)])
        for k in range(1, n_max):
            shifted = [mp.mpf(0)] + polys[k]
            step = poly_sub(shifted, poly_scale(polys[k], tbl.b[k]))
            step = poly_sub(step, poly_scale(polys[k - 1], tbl.a[k]))
            polys.append(step)
    out = []
    for p in polys:
        coeffs = tuple(ctx.round(c) for c in p[:-1]) + (mp.mpf(1),)
        out.append(MonicPoly(coeffs))
    return tuple(out)


def ttrr_eval(tbl: RecurrenceTable, n: int, x) -> mp.mpf:
    """P_n(x) straight from the recurrence.  Near the top of the zero range
    this is much better conditioned than Horner on the monomial coefficients,
    whose alternating signs cancel heavily there."""
    return ttrr_eval_d2(tbl, n, x)[0]


def ttrr_eval_d2(tbl: RecurrenceTable, n: int, x) -> tuple:
    """(P_n(x), P_n'(x), P_n''(x)) by running the recurrence and its first
    two formal derivatives side by side:

        P_{k+1}   = (x - b_k) P_k   - a_k P_{k-1}
        P'_{k+1}  = P_k + (x - b_k) P'_k  - a_k P'_{k-1}
        P''_{k+1} = 2 P'_k + (x - b_k) P''_k - a_k P''_{k-1}
    """
    if n < 0 or n > tbl.n_max + 1:
        raise IndexError(f"need 0 <= n <= {tbl.n_max + 1}, got {n}")
    xv = mp.mpf(x)
    p_prev, p = mp.mpf(0), mp.mpf(1)
    d_prev, d = mp.mpf(0), mp.mpf(0)
    s_prev, s = mp.mpf(0), mp.mpf(0)
    for k in range(n):
        w = xv - tbl.b[k]
        ak = tbl.a[k]
        p, p_prev = w * p - ak * p_prev, p
        d, d_prev = p_prev + w * d - ak * d_prev, d
        s, s_prev = 2 * d_prev + w * s - ak * s_prev, s
    return p, d, s


# ---------------------------------------------------------------------------
# beta rows and the J^4 identity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaRow:
    """Row n of the x^4 expansion: x^4 P_n = P_{n+4} + sum_k beta_{n,k} P_k,
    k = max(0, n-4)..n+3.  coeffs maps k to beta_{n,k}."""

    n: int
    coeffs: dict

    def as_vector(self, size: int) -> list:
        """Dense row of length `size` including the implicit 1 at k = n+4."""
        row = [mp.mpf(0)] * size
        for k, v in self.coeffs.items():
            if k < size:
                row[k] = v
        if self.n + 4 < size:
            row[self.n + 4] = mp.mpf(1)
        return row


def _beta_terms(tbl: RecurrenceTable, n: int) -> dict:
    a, b = tbl.a, tbl.b
    R, T = tbl.R, tbl.T

    def A(i):
        # a_i with a_0 = 0; negative index only ever multiplies a zero
        return a[i] if i >= 1 else mp.mpf(0)

    def Tt(i):
        return T(i) if i >= 1 else mp.mpf(0)

    def Rr(i):
        # R_{-1}, R_{-2} only appear multiplied by vanishing factors
        return R(i) if i >= 0 else mp.mpf(0)

    out = {
        n + 3: b[n] + b[n + 1] + b[n + 2] + b[n + 3],
        n + 2: R(n + 2) + (b[n + 1] + b[n]) * (b[n + 2] + b[n + 1]) + R(n),
        n + 1: T(n + 2) + (b[n + 1] + b[n]) * (R(n + 1) + R(n)) + T(n),
        n: (A(n + 2) * A(n + 1) + (b[n + 1] + b[n]) * T(n + 1) + R(n) ** 2
            + ((b[n - 1] + b[n]) * T(n) if n >= 1 else mp.mpf(0))
            + A(n) * A(n - 1)),
    }
    lower = {
        n - 1: A(n) * (Tt(n + 1) + Tt(n - 1)) + Tt(n) * (Rr(n) + Rr(n - 1)),
        n - 2: A(n) * A(n - 1) * (Rr(n) + Rr(n - 2)) + Tt(n) * Tt(n - 1),
        n - 3: A(n - 1) * A(n - 2) * Tt(n) + A(n) * A(n - 1) * Tt(n - 2),
        n - 4: A(n) * A(n - 1) * A(n - 2) * A(n - 3),
    }
    for k, v in lower.items():
        if k >= 0:
            out[k] = v
    return out


def beta_row(tbl: RecurrenceTable, n: int) -> BetaRow:
    """The eight explicit coefficients; rows with n < 4 drop the k < 0 slots
    (their formulas vanish through a_0 = 0 in exact arithmetic)."""
    if n < 0 or n > tbl.n_max - 3:
        raise IndexError(f"beta row needs 0 <= n <= {tbl.n_max - 3}, got {n}")
    with mp.workprec(mp.mp.prec + 32):
        return BetaRow(n, _beta_terms(tbl, n))


def beta_lower(tbl: RecurrenceTable, m: int) -> dict:
    """Only beta_{m,m-1}..beta_{m,m-4}: what the structure relation needs.
    Valid for m <= n_max - 1 (less lookahead than a full row); negative keys
    carry exact zeros through the a_0 = 0 convention."""
    if m < 1 or m > tbl.n_max - 1:
        raise IndexError(f"need 1 <= m <= {tbl.n_max - 1}, got {m}")
    a, b = tbl.a, tbl.b
    R, T = tbl.R, tbl.T

    def A(i):
        return a[i] if i >= 1 else mp.mpf(0)

    def Tt(i):
        return T(i) if i >= 1 else mp.mpf(0)

    def Rr(i):
        return R(i) if i >= 0 else mp.mpf(0)

    with mp.workprec(mp.mp.prec + 32):
        return {
            m - 1: A(m) * (Tt(m + 1) + Tt(m - 1)) + Tt(m) * (Rr(m) + Rr(m - 1)),
            m - 2: A(m) * A(m - 1) * (Rr(m) + Rr(m - 2)) + Tt(m) * Tt(m - 1),
            m - 3: A(m - 1) * A(m - 2) * Tt(m) + A(m) * A(m - 1) * Tt(m - 2),
            m - 4: A(m) * A(m - 1) * A(m - 2) * A(m - 3),
        }


def jacobi_matrix(tbl: RecurrenceTable, size: int) -> list:
    """Truncated monic Jacobi matrix: J[i][i] = b_i, J[i][i+1] = 1,
    J[i][i-1] = a_i."""
    if size < 1 or size > tbl.n_max + 1:
        raise DomainError(f"size must be in 1..{tbl.n_max + 1}, got {size}")
    J = [[mp.mpf(0)] * size for _ in range(size)]
    for i in range(size):
        J[i][i] = tbl.b[i]
        if i + 1 < size:
            J[i][i + 1] = mp.mpf(1)
        if i >= 1:
            J[i][i - 1] = tbl.a[i]
    return J


def mat_mul(A: list, B: list) -> list:
    n, m, p = len(A), len(B), len(B[0])
    out = [[mp.mpf(0)] * p for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        for k in range(m):
            aik = Ai[k]
            if aik == 0:
                continue
            Bk = B[k]
            oi = out[i]
            for j in range(p):
                oi[j] += aik * Bk[j]
    return out


# ---------------------------------------------------------------------------
# structure relation
# ---------------------------------------------------------------------------

def structure_coeffs(tbl: RecurrenceTable, n: int) -> tuple:
    """(c_n, c_{n-1}, c_{n-2}, c_{n-3}) with c_k = 4z*beta_{n+1,k}: the
    coefficients of x*P'_{n+1} - (n+1)*P_{n+1} over P_{n-3}..P_n."""
    if n < 0 or n > tbl.n_max - 2:
        raise IndexError(f"need 0 <= n <= {tbl.n_max - 2}, got {n}")
    lower = beta_lower(tbl, n + 1)
    with mp.workprec(mp.mp.prec + 32):
        return tuple(4 * tbl.z * lower[n - j] for j in range(4))


def structure_coeffs_explicit(tbl: RecurrenceTable, n: int) -> tuple:
    """The same four coefficients written out in R/T form, computed without
    going through the beta formulas (used to cross-check them)."""
    if n < 0 or n > tbl.n_max - 2:
        raise IndexError(f"need 0 <= n <= {tbl.n_max - 2}, got {n}")
    a = tbl.a
    R, T = tbl.R, tbl.T

    def A(i):
        return a[i] if i >= 1 else mp.mpf(0)

    def Tt(i):
        return T(i) if i >= 1 else mp.mpf(0)

    def Rr(i):
        return R(i) if i >= 0 else mp.mpf(0)

    with mp.workprec(mp.mp.prec + 32):
        f = 4 * tbl.z
        c0 = f * (A(n + 1) * (T(n + 2) + Tt(n)) + T(n + 1) * (R(n + 1) + R(n)))
        c1 = f * (A(n + 1) * A(n) * (R(n + 1) + Rr(n - 1)) + T(n + 1) * Tt(n))
        c2 = f * A(n) * (A(n - 1) * T(n + 1) + A(n + 1) * Tt(n - 1))
        c3 = f * A(n + 1) * A(n) * A(n - 1) * A(n - 2)
        return (c0, c1, c2, c3)


def structure_residual(tbl: RecurrenceTable, polys: tuple, n: int) -> list:
    """x*P'_{n+1} - (n+1)*P_{n+1} - sum_j c_{n-j} P_{n-j} as a dense
    polynomial; the zero polynomial up to roundoff."""
    if n + 1 > len(polys) - 1:
        raise IndexError(f"polys holds degrees <= {len(polys) - 1}, need {n + 1}")
    coeffs = structure_coeffs(tbl, n)
    with mp.workprec(mp.mp.prec + 32):
        p = list(polys[n + 1].coeffs)
        res = [mp.mpf(0)] + poly_diff(p)          # x * P'
        res = poly_sub(res, poly_scale(p, mp.mpf(n + 1)))
        for j in range(4):
            if n - j >= 0 and coeffs[j] != 0:
                res = poly_sub(res, poly_scale(list(polys[n - j].coeffs), coeffs[j]))
        return res


# ---------------------------------------------------------------------------
# ladder functions calA_n, calB_n and their compatibility identities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LadderPair:
    """calA_n = 4z(x^2 + b_n x + R_n) + P_n(0)^2/(h_n x);
    calB_n = 4z a_n (x + b_n + b_{n-1}) + P_n(0) P_{n-1}(0)/(h_{n-1} x).
    Both stored over the common denominator x."""

    n: int
    A: RationalFn
    B: RationalFn


def ladder_pair(tbl: RecurrenceTable, polys: tuple, n: int) -> LadderPair:
    if n < 1 or n > tbl.n_max - 1:
        raise IndexError(f"need 1 <= n <= {tbl.n_max - 1}, got {n}")
    with mp.workprec(mp.mp.prec + 32):
        f = 4 * tbl.z
        pn0 = polys[n].at_zero
        pm0 = polys[n - 1].at_zero
        num_a = (pn0 ** 2 / tbl.h[n], f * tbl.R(n), f * tbl.b[n], f)
        num_b = (pn0 * pm0 / tbl.h[n - 1],
                 f * tbl.a[n] * (tbl.b[n] + tbl.b[n - 1]),
                 f * tbl.a[n])
        x = (mp.mpf(0), mp.mpf(1))
        return LadderPair(n, RationalFn(num_a, x), RationalFn(num_b, x))


def _cal_A(tbl: RecurrenceTable, polys: tuple, n: int) -> RationalFn:
    """calA_n as a RationalFn; unlike ladder_pair this also admits n = 0
    (calB_0 would need b_{-1}, but calA_0 is perfectly defined)."""
    if n < 0 or n > tbl.n_max - 1:
        raise IndexError(f"need 0 <= n <= {tbl.n_max - 1}, got {n}")
    with mp.workprec(mp.mp.prec + 32):
        f = 4 * tbl.z
        pn0 = polys[n].at_zero
        return RationalFn((pn0 ** 2 / tbl.h[n], f * tbl.R(n), f * tbl.b[n], f),
                          (mp.mpf(0), mp.mpf(1)))


def identity_i_residual(tbl: RecurrenceTable, polys: tuple, n: int) -> tuple:
    """4z(T_{n+1} + b_n R_n + T_n) - P_n(0)^2/h_n and the magnitude of the
    matching side (for tolerance scaling)."""
    if n < 0 or n > tbl.n_max - 1:
        raise IndexError(f"need 0 <= n <= {tbl.n_max - 1}, got {n}")
    with mp.workprec(mp.mp.prec + 32):
        lhs = 4 * tbl.z * (tbl.T(n + 1) + tbl.b[n] * tbl.R(n) + tbl.T(n))
        rhs = polys[n].at_zero ** 2 / tbl.h[n]
        return lhs - rhs, max(abs(lhs), abs(rhs))


def identity_ii_residual(tbl: RecurrenceTable, polys: tuple, n: int) -> tuple:
    """4z(a_{n+1}R_{n+1} - a_n R_{n-1} + b_n(T_{n+1} - T_n))
    - [1 + P_n(0)(P_{n+1}(0) - a_n P_{n-1}(0))/h_n], plus the scale."""
    if n < 1 or n > tbl.n_max - 2:
        raise IndexError(f"need 1 <= n <= {tbl.n_max - 2}, got {n}")
    with mp.workprec(mp.mp.prec + 32):
        lhs = 4 * tbl.z * (tbl.a[n + 1] * tbl.R(n + 1) - tbl.a[n] * tbl.R(n - 1)
                           + tbl.b[n] * (tbl.T(n + 1) - tbl.T(n)))
        rhs = 1 + polys[n].at_zero * (polys[n + 1].at_zero
                                      - tbl.a[n] * polys[n - 1].at_zero) / tbl.h[n]
        return lhs - rhs, max(abs(lhs), abs(rhs))


def compat_residuals(tbl: RecurrenceTable, polys: tuple, n: int, x_samples) -> tuple:
    """Scaled max residuals of the two ladder compatibility identities:

        calB_{n+1} + calB_n = (x - b_n) calA_n - v'
        a_{n+1} calA_{n+1} - a_n calA_{n-1} = 1 + (x - b_n)(calB_{n+1} - calB_n)

    Each residual is divided by the sum of term magnitudes at the sample, so
    both returned values compare against verify_tol(1)."""
    if n < 1 or n > tbl.n_max - 2:
        raise IndexError(f"need 1 <= n <= {tbl.n_max - 2}, got {n}")
    A_n = _cal_A(tbl, polys, n)
    A_up = _cal_A(tbl, polys, n + 1)
    A_dn = _cal_A(tbl, polys, n - 1)
    B_n = ladder_pair(tbl, polys, n).B
    B_up = ladder_pair(tbl, polys, n + 1).B
    r1 = mp.mpf(0)
    r2 = mp.mpf(0)
    with mp.workprec(mp.mp.prec + 32):
        f = 4 * tbl.z
        for x in x_samples:
            if x == 0:
                raise DomainError("sample grid touches the pole at x = 0")
            vp = f * x ** 3
            t1 = [B_up.eval(x), B_n.eval(x), (x - tbl.b[n]) * A_n.eval(x), vp]
            res1 = t1[0] + t1[1] - t1[2] + t1[3]
            s1 = sum(abs(v) for v in t1) + 1
            t2 = [tbl.a[n + 1] * A_up.eval(x), tbl.a[n] * A_dn.eval(x),
                  (x - tbl.b[n]) * (B_up.eval(x) - B_n.eval(x))]
            res2 = t2[0] - t2[1] - 1 - t2[2]
            s2 = sum(abs(v) for v in t2) + 1
            r1 = max(r1, abs(res1) / s1)
            r2 = max(r2, abs(res2) / s2)
    return r1, r2


# ---------------------------------------------------------------------------
# lowering / raising operators and the composed second-order ODE
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LoweringData:
    """x P'_{n+1} + D_n P_{n+1} = C_n P_n; A_n = x/C_n, B_n = D_n/C_n."""

    n: int
    C: tuple
    D: tuple
    A: RationalFn
    B: RationalFn


def lowering_data(tbl: RecurrenceTable, n: int) -> LoweringData:
    """C_n (cubic) and D_n (quadratic) by eliminating P_{n-1}, P_{n-2},
    P_{n-3} from the structure relation through the recurrence.

    At n = 2 there is no P_{n-3} term (its coefficient c3 contains the
    factor a_0 = 0), so C_2 is quadratic and D_2 linear; the cubic/quadratic
    degrees hold from n = 3 on."""
    if n < 2 or n > tbl.n_max - 2:
        raise IndexError(f"need 2 <= n <= {tbl.n_max - 2}, got {n}")
    c0, c1, c2, c3 = structure_coeffs(tbl, n)
    a, b = tbl.a, tbl.b
    with mp.workprec(mp.mp.prec + 32):
        # P_{n-1} = q1*P_n - (1/a_n)*P_{n+1}, q1 = (x-b_n)/a_n
        # P_{n-2} = q2*P_n - ((x-b_{n-1})/(a_n a_{n-1}))*P_{n+1}
        # P_{n-3} = q3*P_n - (((x-b_{n-2})(x-b_{n-1})-a_{n-1})/(a_n a_{n-1} a_{n-2}))*P_{n+1}
        xb_n = [-b[n], mp.mpf(1)]
        xb_m1 = [-b[n - 1], mp.mpf(1)]
        inner = poly_sub(poly_mul(xb_m1, xb_n), [a[n]])       # (x-b_{n-1})(x-b_n) - a_n
        q1 = poly_scale(xb_n, 1 / a[n])
        q2 = poly_scale(inner, 1 / (a[n] * a[n - 1]))

        C = poly_add([c0], poly_scale(q1, c1))
        C = poly_add(C, poly_scale(q2, c2))

        # D_n = -(n+1) + c1/a_n + c2*(x-b_{n-1})/(a_n a_{n-1})
        #       + c3*((x-b_{n-2})(x-b_{n-1}) - a_{n-1})/(a_n a_{n-1} a_{n-2})
        D = [-mp.mpf(n + 1) + c1 / a[n]]
        D = poly_add(D, poly_scale(xb_m1, c2 / (a[n] * a[n - 1])))

        if n >= 3:
            xb_m2 = [-b[n - 2], mp.mpf(1)]
            q3_num = poly_sub(poly_mul(xb_m2, inner), poly_scale(xb_n, a[n - 1]))
            q3 = poly_scale(q3_num, 1 / (a[n] * a[n - 1] * a[n - 2]))
            C = poly_add(C, poly_scale(q3, c3))
            quad = poly_sub(poly_mul(xb_m2, xb_m1), [a[n - 1]])
            D = poly_add(D, poly_scale(quad, c3 / (a[n] * a[n - 1] * a[n - 2])))

        C = poly_trim(C)
        D = poly_trim(D)
        return LoweringData(n, tuple(C), tuple(D),
                            RationalFn((mp.mpf(0), mp.mpf(1)), tuple(C)),
                            RationalFn(tuple(D), tuple(C)))


def lowering_C_via_beta(tbl: RecurrenceTable, n: int, x) -> mp.mpf:
    """C_n(x) assembled directly from the beta row of degree n+1 (the
    cross-check route quoted with the lowering theorem)."""
    if n < 2 or n > tbl.n_max - 2:
        raise IndexError(f"need 2 <= n <= {tbl.n_max - 2}, got {n}")
    lower = beta_lower(tbl, n + 1)
    a, b = tbl.a, tbl.b
    with mp.workprec(mp.mp.prec + 32):
        xv = mp.mpf(x)
        inner = (xv - b[n - 1]) * (xv - b[n]) - a[n]
        val = (lower[n]
               + (xv - b[n]) / a[n] * lower[n - 1]
               + inner / (a[n] * a[n - 1]) * lower[n - 2])
        if n >= 3:
            val += (((xv - b[n - 2]) * inner - a[n - 1] * (xv - b[n]))
                    / (a[n] * a[n - 1] * a[n - 2]) * lower[n - 3])
        return 4 * tbl.z * val


def lowering_apply(polys: tuple, data: LoweringData, n: int) -> list:
    """x P'_{n+1} + D_n P_{n+1} - C_n P_n as a dense polynomial (zero)."""
    if n != data.n:
        raise DomainError(f"data built for n={data.n}, asked to apply at {n}")
    with mp.workprec(mp.mp.prec + 32):
        p_up = list(polys[n + 1].coeffs)
        res = [mp.mpf(0)] + poly_diff(p_up)
        res = poly_add(res, poly_mul(list(data.D), p_up))
        res = poly_sub(res, poly_mul(list(data.C), list(polys[n].coeffs)))
        return res


def raising_apply(polys: tuple, data: LoweringData, tbl: RecurrenceTable, n: int) -> list:
    """-a_{n+1}[x P'_{n+1} + D_n P_{n+1}] + (x - b_{n+1}) C_n P_{n+1}
    - C_n P_{n+2} as a dense polynomial (zero)."""
    if n != data.n:
        raise DomainError(f"data built for n={data.n}, asked to apply at {n}")
    if n + 2 > len(polys) - 1:
        raise IndexError(f"polys holds degrees <= {len(polys) - 1}, need {n + 2}")
    with mp.workprec(mp.mp.prec + 32):
        p_up = list(polys[n + 1].coeffs)
        core = [mp.mpf(0)] + poly_diff(p_up)
        core = poly_add(core, poly_mul(list(data.D), p_up))
        res = poly_scale(core, -tbl.a[n + 1])
        xb = [-tbl.b[n + 1], mp.mpf(1)]
        res = poly_add(res, poly_mul(poly_mul(xb, list(data.C)), p_up))
        res = poly_sub(res, poly_mul(list(data.C), list(polys[n + 2].coeffs)))
        return res


def holonomic_residual_Dn(polys: tuple, data: LoweringData, tbl: RecurrenceTable,
                          n: int, x_samples) -> mp.mpf:
    """Scaled max residual of the composed second-order operator

        a_n A_n A_{n-1} y'' + [A_n(a_n B_{n-1} - x + b_n) + a_n A_{n-1}(A_n' + B_n)] y'
        + [a_n B_n' A_{n-1} + B_n(a_n B_{n-1} - x + b_n) + 1] y

    applied to y = P_{n+1}.  A', B' are symbolic rational derivatives.
    y, y', y'' are evaluated through the recurrence (ttrr_eval_d2), which
    keeps the residual floor near unit roundoff of the table entries."""
    if n < 3:
        raise IndexError(f"need n >= 3 (A_{n - 1} requires lowering data), got {n}")
    if n != data.n:
        raise DomainError(f"data built for n={data.n}, asked to apply at {n}")
    prev = lowering_data(tbl, n - 1)
    A_n, B_n = data.A, data.B
    A_p, B_p = prev.A, prev.B
    dA = A_n.derivative()
    dB = B_n.derivative()
    with mp.workprec(mp.mp.prec + 32):
        an, bn = tbl.a[n], tbl.b[n]
        worst = mp.mpf(0)
        for x in x_samples:
            y, y1, y2 = ttrr_eval_d2(tbl, n + 1, x)
            An_x, Bn_x = A_n.eval(x), B_n.eval(x)
            Ap_x, Bp_x = A_p.eval(x), B_p.eval(x)
            mid = an * Bp_x - x + bn
            c2 = an * An_x * Ap_x
            c1 = An_x * mid + an * Ap_x * (dA.eval(x) + Bn_x)
            c0 = an * dB.eval(x) * Ap_x + Bn_x * mid + 1
            terms = (c2 * y2, c1 * y1, c0 * y)
            scale = sum(abs(t) for t in terms) + 1
            worst = max(worst, abs(terms[0] + terms[1] + terms[2]) / scale)
        return worst


def holonomic_residual_chen(tbl: RecurrenceTable, polys: tuple, n: int,
                            x_samples) -> mp.mpf:
    """Scaled max residual of P_n'' + S P_n' + Q P_n = 0 with

        S = -v' - calA_n'/calA_n
        Q = calB_n' - calB_n * calA_n'/calA_n - calB_n(v' + calB_n)
            + a_n calA_n calA_{n-1}

    obtained by eliminating P_{n-1} from the first-order ladder pair

        (d/dx + calB_n) P_n = a_n calA_n P_{n-1}
        -(d/dx - calB_n - v') P_{n-1} = calA_{n-1} P_n

    (v = z x^4).  Valid for n >= 1; on (0, inf) calA_n has no zero, so the
    only excluded sample point is x = 0.  y, y', y'' come from ttrr_eval_d2
    for the same conditioning reason as in holonomic_residual_Dn."""
    if n < 1 or n > tbl.n_max - 1:
        raise IndexError(f"need 1 <= n <= {tbl.n_max - 1}, got {n}")
    A_n = _cal_A(tbl, polys, n)
    A_dn = _cal_A(tbl, polys, n - 1)
    B_n = ladder_pair(tbl, polys, n).B
    dA = A_n.derivative()
    dB = B_n.derivative()
    with mp.workprec(mp.mp.prec + 32):
        f = 4 * tbl.z
        worst = mp.mpf(0)
        for x in x_samples:
            if x == 0:
                raise DomainError("sample grid touches the pole at x = 0")
            y, y1, y2 = ttrr_eval_d2(tbl, n, x)
            vA = A_n.eval(x)
            logd = dA.eval(x) / vA
            vB = B_n.eval(x)
            vp = f * x ** 3
            S = -vp - logd
            Q = dB.eval(x) - vB * logd - vB * (vp + vB) + tbl.a[n] * vA * A_dn.eval(x)
            terms = (y2, S * y1, Q * y)
            scale = sum(abs(t) for t in terms) + 1
            worst = max(worst, abs(terms[0] + terms[1] + terms[2]) / scale)
        return worst


def confluent_check(polys: tuple, tbl: RecurrenceTable, n: int, x_samples) -> mp.mpf:
    """Max relative deviation between sum_{k<=n} P_k(x)^2/h_k and
    (P'_{n+1} P_n - P'_n P_{n+1})/h_n over the samples.  One recurrence pass
    per sample produces every P_k(x) and the two derivatives at the top."""
    if n + 1 > len(polys) - 1 or n > tbl.n_max:
        raise IndexError(f"need n+1 <= {len(polys) - 1}, got n={n}")
    with mp.workprec(mp.mp.prec + 32):
        worst = mp.mpf(0)
        for x in x_samples:
            xv = mp.mpf(x)
            p_prev, p = mp.mpf(0), mp.mpf(1)
            d_prev, d = mp.mpf(0), mp.mpf(0)
            left = mp.mpf(0)
            for k in range(n + 1):
                left += p ** 2 / tbl.h[k]
                w = xv - tbl.b[k]
                ak = tbl.a[k]
                p, p_prev = w * p - ak * p_prev, p
                d, d_prev = p_prev + w * d - ak * d_prev, d
            right = (d * p_prev - d_prev * p) / tbl.h[n]
            worst = max(worst, abs(left - right) / abs(left))
        return worst


def lax_block_check(tbl: RecurrenceTable, M: int) -> mp.mpf:
    """Max scaled entry of (J L - L J - J) over rows 0..M-6, with
    L = 4z*(strictly lower triangle of J^4) + diag(0..M-1).  Rows past M-6
    feel the truncation of J^4 and are excluded."""
    if M < 10:
        raise DomainError(f"M must be >= 10, got {M}")
    if M > tbl.n_max + 1:
        raise DomainError(f"table too small: M={M} needs n_max >= {M - 1}")
    with mp.workprec(mp.mp.prec + 32):
        J = jacobi_matrix(tbl, M)
        J2 = mat_mul(J, J)
        J4 = mat_mul(J2, J2)
        L = [[mp.mpf(0)] * M for _ in range(M)]
        for i in range(M):
            L[i][i] = mp.mpf(i)
            for j in range(i):
                L[i][j] = 4 * tbl.z * J4[i][j]
        JL = mat_mul(J, L)
        LJ = mat_mul(L, J)
        scale = max(max(abs(v) for v in row) for row in JL) + 1
        worst = mp.mpf(0)
        for i in range(M - 5):
            for j in range(M):
                worst = max(worst, abs(JL[i][j] - LJ[i][j] - J[i][j]))
        return worst / scale
