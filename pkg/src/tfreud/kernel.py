"""Extended-precision numerical primitives shared by all modules.

Everything here is pure: results depend only on the arguments and the
PrecisionContext.  Reals are mpmath mpf values; helpers run at a guarded
working precision and round the result to the context precision, so that
recomputing at higher precision reproduces the same context-rounded value.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

# Fixed slack absorbing benign rounding accumulation across O(n^2) arithmetic.
SLACK_BITS = 12


class DomainError(ValueError):
    """Argument outside the mathematical domain of the operation."""


class ConvergenceError(ArithmeticError):
    """Series or iteration failed to converge in the allowed budget."""


class PrecisionExhaustionError(ArithmeticError):
    """All significant bits were lost; carries the failing index."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class PrecisionContext:
    """Binary working precision plus the tolerance rule derived from it."""

    bits: int = 256

    def __post_init__(self):
        if self.bits < 64:
            raise DomainError(f"bits must be >= 64, got {self.bits}")

    @property
    def eps(self) -> mp.mpf:
        with mp.workprec(self.bits):
            return mp.mpf(2) ** (1 - self.bits)

    def verify_tol(self, scale=1) -> mp.mpf:
        """Absolute tolerance |scale| * eps * 2**SLACK_BITS."""
        with mp.workprec(self.bits + 8):
            return abs(mp.mpf(scale)) * mp.mpf(2) ** (1 - self.bits + SLACK_BITS)

    def workprec(self, guard: int = 0):
        return mp.workprec(self.bits + guard)

    def round(self, x) -> mp.mpf:
        """Round x to this context's precision (exact binary value)."""
        with mp.workprec(self.bits):
            return +mp.mpf(x)

    @property
    def dps(self) -> int:
        # decimal digits carried by `bits` binary digits, plus a guard digit
        return int(self.bits / 3.3219280948873626) + 1


def default_bits(n_max: int) -> int:
    """Precision policy: conditioning of the moment map grows geometrically
    in the degree, so the default precision grows linearly with it."""
    return 128 + 16 * max(0, int(n_max))


def context_for(n_max: int, bits: int | None = None) -> PrecisionContext:
    return PrecisionContext(bits if bits is not None else default_bits(n_max))


def mpf_at(x, bits: int) -> mp.mpf:
    """Convert x (int/float/str/mpf) to mpf rounded at `bits` precision."""
    with mp.workprec(bits):
        return +mp.mpf(x)


# ---------------------------------------------------------------------------
# scalar special functions
# ---------------------------------------------------------------------------

def gamma(x, ctx: PrecisionContext) -> mp.mpf:
    """Gamma(x) for x > 0 at context precision."""
    with ctx.workprec(16):
        xv = mp.mpf(x)
        if not xv > 0:
            raise DomainError(f"gamma requires a positive argument, got {x}")
        val = mp.gamma(xv)
    return ctx.round(val)


def hyp2f1_series(a, b, c, w, ctx: PrecisionContext, max_terms: int = 200_000) -> mp.mpf:
    """Gauss series sum_k (a)_k (b)_k / ((c)_k k!) w^k for |w| < 1.

    c must not be a non-positive integer (the Pochhammer denominator would
    vanish).  Terms are accumulated until they drop below the working
    roundoff of the partial sum; the term ratio tends to w, so for the
    parameter ranges used here the terms eventually keep a constant sign
    and there is no catastrophic cancellation.
    """
    with ctx.workprec(16):
        av, bv, cv, wv = (mp.mpf(v) for v in (a, b, c, w))
        if cv <= 0 and cv == mp.floor(cv):
            raise DomainError(f"2F1 parameter c must not be a non-positive integer, got {c}")
        if abs(wv) >= 1:
            raise ConvergenceError(f"2F1 series requires |w| < 1, got w={w}")
        s = mp.mpf(1)
        term = mp.mpf(1)
        stop = mp.mpf(2) ** (-(ctx.bits + 8))
        for k in range(max_terms):
            term = term * (av + k) * (bv + k) / ((cv + k) * (k + 1)) * wv
            if term == 0:
                break
            s += term
            if abs(term) <= abs(s) * stop:
                break
        else:
            raise ConvergenceError(f"2F1 series did not converge within {max_terms} terms")
    return ctx.round(s)


# ---------------------------------------------------------------------------
# dense polynomials (ascending coefficient lists)
# ---------------------------------------------------------------------------

def poly_trim(p: list) -> list:
    i = len(p)
    while i > 1 and p[i - 1] == 0:
        i -= 1
    return p[:i]


def poly_add(p: list, q: list) -> list:
    n = max(len(p), len(q))
    out = []
    for i in range(n):
        pi = p[i] if i < len(p) else mp.mpf(0)
        qi = q[i] if i < len(q) else mp.mpf(0)
        out.append(pi + qi)
    return poly_trim(out)


def poly_sub(p: list, q: list) -> list:
    return poly_add(p, [-c for c in q])


def poly_scale(p: list, c) -> list:
    return poly_trim([ci * c for ci in p])


def poly_mul(p: list, q: list) -> list:
    out = [mp.mpf(0)] * (len(p) + len(q) - 1)
    for i, pi in enumerate(p):
        if pi == 0:
            continue
        for j, qj in enumerate(q):
            out[i + j] += pi * qj
    return poly_trim(out)


def poly_diff(p: list) -> list:
    """Formal derivative."""
    if len(p) <= 1:
        return [mp.mpf(0)]
    return poly_trim([p[i] * i for i in range(1, len(p))])


def poly_eval(p: list, x) -> mp.mpf:
    """Horner evaluation."""
    acc = mp.mpf(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def poly_shift_x(p: list) -> list:
    """Multiply by x."""
    return [mp.mpf(0)] + list(p)


def poly_max_abs(p: list) -> mp.mpf:
    return max((abs(c) for c in p), default=mp.mpf(0))


def poly_degree(p: list) -> int:
    return len(poly_trim(p)) - 1


@dataclass(frozen=True)
class MonicPoly:
    """Monic dense polynomial: coeffs[k] multiplies x^k, leading coeff 1."""

    coeffs: tuple

    def __post_init__(self):
        if not self.coeffs or self.coeffs[-1] != 1:
            raise DomainError("MonicPoly requires a leading coefficient of exactly 1")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def eval(self, x) -> mp.mpf:
        return poly_eval(list(self.coeffs), x)

    @property
    def at_zero(self) -> mp.mpf:
        return self.coeffs[0]

    @property
    def subleading(self) -> mp.mpf:
        """Coefficient of x^(n-1); zero for the constant polynomial."""
        if self.degree == 0:
            return mp.mpf(0)
        return self.coeffs[-2]


@dataclass(frozen=True)
class RationalFn:
    """Quotient of dense polynomials; denominator not identically zero."""

    num: tuple
    den: tuple

    def __post_init__(self):
        if all(c == 0 for c in self.den):
            raise DomainError("RationalFn denominator is identically zero")

    @staticmethod
    def from_poly(p: list) -> "RationalFn":
        return RationalFn(tuple(poly_trim(list(p))), (mp.mpf(1),))

    def eval(self, x) -> mp.mpf:
        d = poly_eval(list(self.den), x)
        if d == 0:
            raise ZeroDivisionError(f"RationalFn denominator vanishes at {x}")
        return poly_eval(list(self.num), x) / d

    def derivative(self) -> "RationalFn":
        """Quotient rule; derivative is symbolic, never numerical."""
        n, d = list(self.num), list(self.den)
        num = poly_sub(poly_mul(poly_diff(n), d), poly_mul(n, poly_diff(d)))
        return RationalFn(tuple(num), tuple(poly_mul(d, d)))

    def __add__(self, other: "RationalFn") -> "RationalFn":
        n = poly_add(poly_mul(list(self.num), list(other.den)),
                     poly_mul(list(other.num), list(self.den)))
        return RationalFn(tuple(n), tuple(poly_mul(list(self.den), list(other.den))))

    def __sub__(self, other: "RationalFn") -> "RationalFn":
        return self + (-other)

    def __neg__(self) -> "RationalFn":
        return RationalFn(tuple(-c for c in self.num), self.den)

    def __mul__(self, other: "RationalFn") -> "RationalFn":
        return RationalFn(tuple(poly_mul(list(self.num), list(other.num))),
                          tuple(poly_mul(list(self.den), list(other.den))))

    def scale(self, c) -> "RationalFn":
        return RationalFn(tuple(poly_scale(list(self.num), c)), self.den)


# ---------------------------------------------------------------------------
# symmetric tridiagonal eigenvalues: Sturm-count bisection + Newton polish
# ---------------------------------------------------------------------------

def _sturm_count(diag, off2, x, pivmin):
    """Number of eigenvalues strictly below x (negative LDL pivots)."""
    count = 0
    q = diag[0] - x
    if q == 0:
        q = -pivmin
    if q < 0:
        count += 1
    for i in range(1, len(diag)):
        q = diag[i] - x - off2[i - 1] / q
        if q == 0:
            q = -pivmin
        if q < 0:
            count += 1
    return count


def _charpoly_and_diff(diag, off2, x):
    """Characteristic polynomial of the leading principal minors and its
    x-derivative via the three-term determinant recurrence."""
    pm1, p = mp.mpf(0), mp.mpf(1)
    dm1, d = mp.mpf(0), mp.mpf(0)
    for i in range(len(diag)):
        t = diag[i] - x
        e2 = off2[i - 1] if i > 0 else mp.mpf(0)
        pn = t * p - e2 * pm1
        dn = -p + t * d - e2 * dm1
        pm1, p = p, pn
        dm1, d = d, dn
    return p, d


def tridiag_eigenvalues(diag, offdiag, ctx: PrecisionContext) -> list:
    """All eigenvalues of the symmetric tridiagonal matrix, ascending.

    Off-diagonal entries must be strictly positive, which guarantees the
    eigenvalues are simple.  Bisection on the Sturm count isolates each
    eigenvalue, then a guarded Newton iteration on the characteristic
    polynomial polishes it to full context precision.
    """
    n = len(diag)
    if len(offdiag) != max(0, n - 1):
        raise DomainError("offdiag must have length len(diag) - 1")
    for e in offdiag:
        if not e > 0:
            raise DomainError("off-diagonal entries must be strictly positive")
    if n == 0:
        return []
    work = ctx.bits + 32
    with mp.workprec(work):
        d = [mp.mpf(v) for v in diag]
        e = [mp.mpf(v) for v in offdiag]
        if n == 1:
            return [ctx.round(d[0])]
        off2 = [ei * ei for ei in e]

        lo = min(d[i] - ((e[i - 1] if i > 0 else 0) + (e[i] if i < n - 1 else 0))
                 for i in range(n))
        hi = max(d[i] + ((e[i - 1] if i > 0 else 0) + (e[i] if i < n - 1 else 0))
                 for i in range(n))
        spread = hi - lo
        if spread == 0:
            spread = mp.mpf(1)
        lo -= spread * mp.mpf(2) ** -20
        hi += spread * mp.mpf(2) ** -20
        spread = hi - lo
        pivmin = max(max(off2), mp.mpf(1)) * mp.mpf(2) ** (-2 * work)

        # bisect each eigenvalue to ~half precision, then Newton to full
        coarse = spread * mp.mpf(2) ** (-(ctx.bits // 2 + 4))
        fine_rel = mp.mpf(2) ** (-(ctx.bits + 8))
        out = []
        for k in range(1, n + 1):
            a, b = lo, hi
            while b - a > coarse:
                m = (a + b) / 2
                if _sturm_count(d, off2, m, pivmin) >= k:
                    b = m
                else:
                    a = m
            x = (a + b) / 2
            scale = max(abs(x), spread * mp.mpf(2) ** -16)
            # eigenvalue lies in (a, b]; iterates may step slightly past an
            # endpoint (the root can be the endpoint itself), so accept any
            # iterate within a few bracket widths and fall back to a Sturm
            # bisection step whenever Newton wanders further
            for _ in range(ctx.bits):
                f, fp = _charpoly_and_diff(d, off2, x)
                if f == 0 or fp == 0:
                    break
                dx = f / fp
                x1 = x - dx
                width = b - a
                if not (a - 4 * width <= x1 <= b + 4 * width):
                    m = (a + b) / 2
                    if _sturm_count(d, off2, m, pivmin) >= k:
                        b = m
                    else:
                        a = m
                    x = (a + b) / 2
                    continue
                x = x1
                if abs(dx) <= scale * fine_rel:
                    break
            out.append(ctx.round(x))
    return out
