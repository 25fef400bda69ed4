from __future__ import annotations

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfreud.kernel import (
    DomainError,
    PrecisionContext,
    poly_diff,
    poly_eval,
    poly_max_abs,
    poly_mul,
)
from tfreud.moments import moment
from tfreud.operators import (
    beta_lower,
    beta_row,
    compat_residuals,
    confluent_check,
    holonomic_residual_Dn,
    holonomic_residual_chen,
    identity_i_residual,
    identity_ii_residual,
    jacobi_matrix,
    ladder_pair,
    lax_block_check,
    lowering_C_via_beta,
    lowering_apply,
    lowering_data,
    mat_mul,
    poly_table,
    raising_apply,
    sample_grid,
    structure_coeffs,
    structure_coeffs_explicit,
    structure_residual,
    ttrr_eval,
    ttrr_eval_d2,
)
from tfreud.recurrence import chebyshev_coeffs

CTX = PrecisionContext(256)


@pytest.fixture(scope="module")
def t16():
    tbl = chebyshev_coeffs(1, 16, CTX)
    return tbl, poly_table(1, 16, CTX, tbl=tbl)


@pytest.fixture(scope="module")
def t24():
    return chebyshev_coeffs(1, 24, CTX)


@pytest.fixture(scope="module")
def t16z9():
    tbl = chebyshev_coeffs(9, 16, CTX)
    return tbl, poly_table(9, 16, CTX, tbl=tbl)


def log_grid(lo, hi, count):
    llo, lhi = mp.log(mp.mpf(lo)), mp.log(mp.mpf(hi))
    return [mp.exp(llo + (lhi - llo) * k / (count - 1)) for k in range(count)]


# ---------------------------------------------------------------------------
# beta rows against the fourth power of the Jacobi matrix
# ---------------------------------------------------------------------------

def test_beta_rows_match_jacobi_fourth_power(t24):
    size = 25
    J = jacobi_matrix(t24, size)
    J2 = mat_mul(J, J)
    J4 = mat_mul(J2, J2)
    scale = max(abs(v) for row in J4 for v in row)
    for n in (0, 2, 4, 9):
        row = beta_row(t24, n).as_vector(size)
        # columns past n+4 are exact zeros of the band; truncation spoils
        # nothing in rows this far from the edge
        for k in range(size):
            assert abs(row[k] - J4[n][k]) <= CTX.verify_tol(scale)


def test_beta_40_is_a_product(t16):
    tbl, _ = t16
    row = beta_row(tbl, 4)
    want = tbl.a[4] * tbl.a[3] * tbl.a[2] * tbl.a[1]
    assert abs(row.coeffs[0] - want) <= CTX.verify_tol(want)


def test_beta_boundary_rows_drop_negative_columns(t16):
    tbl, _ = t16
    for n in range(4):
        keys = set(beta_row(tbl, n).coeffs)
        assert min(keys) == 0
        assert max(keys) == n + 3


@given(st.integers(min_value=0, max_value=12))
@settings(max_examples=13, deadline=None)
def test_beta_top_band_is_a_b_sum(n):
    tbl = chebyshev_coeffs(1, 16, CTX)
    row = beta_row(tbl, n)
    want = tbl.b[n] + tbl.b[n + 1] + tbl.b[n + 2] + tbl.b[n + 3]
    assert abs(row.coeffs[n + 3] - want) <= CTX.verify_tol(want)


def test_beta_row_guards(t16):
    tbl, _ = t16
    with pytest.raises(IndexError):
        beta_row(tbl, -1)
    with pytest.raises(IndexError):
        beta_row(tbl, tbl.n_max - 2)
    with pytest.raises(IndexError):
        beta_lower(tbl, 0)


# ---------------------------------------------------------------------------
# structure relation
# ---------------------------------------------------------------------------

def structure_scale(polys, n):
    dp = [mp.mpf(0)] + poly_diff(list(polys[n + 1].coeffs))
    return poly_max_abs(dp)


def test_structure_residual_zero_poly(t16, t16z9):
    for tbl, polys in (t16, t16z9):
        for n in (0, 5, 9):
            res = structure_residual(tbl, polys, n)
            tol = CTX.verify_tol(structure_scale(polys, n))
            assert poly_max_abs(res) <= tol


def test_structure_c0_forced_at_n0(t16, t16z9):
    # x P_1' = P_1 + c_0 P_0 with P_1 = x - b_0 forces c_0 = b_0
    for tbl, _ in (t16, t16z9):
        c = structure_coeffs(tbl, 0)
        assert abs(c[0] - tbl.b[0]) <= CTX.verify_tol(tbl.b[0])
        assert c[1] == 0 and c[2] == 0 and c[3] == 0


@given(st.integers(min_value=0, max_value=14))
@settings(max_examples=15, deadline=None)
def test_structure_coeff_routes_agree(n):
    tbl = chebyshev_coeffs(1, 16, CTX)
    via_beta = structure_coeffs(tbl, n)
    explicit = structure_coeffs_explicit(tbl, n)
    for u, v in zip(via_beta, explicit):
        assert abs(u - v) <= CTX.verify_tol(abs(u) + 1)


def test_structure_guards(t16):
    tbl, polys = t16
    with pytest.raises(IndexError):
        structure_coeffs(tbl, tbl.n_max - 1)
    with pytest.raises(IndexError):
        structure_residual(tbl, polys[:4], 5)


# ---------------------------------------------------------------------------
# polynomial table sanity against the moment functional
# ---------------------------------------------------------------------------

def inner_from_moments(p, q, mu):
    return mp.fsum(ci * cj * mu[i + j]
                   for i, ci in enumerate(p) for j, cj in enumerate(q))


def test_orthogonality_from_moments(t16):
    tbl, polys = t16
    mu = [moment(k, 1, CTX) for k in range(17)]
    h_max = max(tbl.h[:9])
    for m in range(9):
        for n in range(9):
            got = inner_from_moments(polys[m].coeffs, polys[n].coeffs, mu)
            want = tbl.h[n] if m == n else mp.mpf(0)
            assert abs(got - want) <= CTX.verify_tol(h_max)


def test_p2_at_zero_closed_form(t16):
    tbl, polys = t16
    want = tbl.b[0] * tbl.b[1] - tbl.a[1]
    assert abs(polys[2].at_zero - want) <= CTX.verify_tol(1)


def test_p3_p1_inner_product_vanishes(t16):
    tbl, polys = t16
    mu = [moment(k, 1, CTX) for k in range(5)]
    got = inner_from_moments(polys[3].coeffs, polys[1].coeffs, mu)
    assert abs(got) <= CTX.verify_tol(tbl.h[2])


def test_subleading_coefficient_relations(t16):
    # sigma_n = -lambda_{n,n-1} = sum_{k<n} b_k and the telescoped form
    # b_n = lambda_{n,n-1} - lambda_{n+1,n}
    tbl, polys = t16
    for n in range(1, 11):
        assert abs(tbl.sigma(n) + polys[n].subleading) <= CTX.verify_tol(tbl.sigma(n))
        got = polys[n].subleading - polys[n + 1].subleading
        assert abs(tbl.b[n] - got) <= CTX.verify_tol(tbl.b[n] + 1)


# ---------------------------------------------------------------------------
# recurrence-based evaluation
# ---------------------------------------------------------------------------

def test_ttrr_matches_horner(t16):
    tbl, polys = t16
    for n in (0, 1, 7, 12):
        for x in log_grid("0.05", 3, 9):
            got = ttrr_eval(tbl, n, x)
            majorant = mp.fsum(abs(c) * abs(x) ** k
                               for k, c in enumerate(polys[n].coeffs))
            assert abs(got - polys[n].eval(x)) <= CTX.verify_tol(majorant)


def test_ttrr_derivatives_match_formal(t16):
    tbl, polys = t16
    p = list(polys[9].coeffs)
    dp = poly_diff(p)
    ddp = poly_diff(dp)
    for x in log_grid("0.1", 2, 5):
        v, d1, d2 = ttrr_eval_d2(tbl, 9, x)
        m1 = mp.fsum(abs(c) * abs(x) ** k for k, c in enumerate(dp))
        m2 = mp.fsum(abs(c) * abs(x) ** k for k, c in enumerate(ddp))
        assert abs(d1 - poly_eval(dp, x)) <= CTX.verify_tol(m1)
        assert abs(d2 - poly_eval(ddp, x)) <= CTX.verify_tol(m2)


def test_ttrr_guard(t16):
    tbl, _ = t16
    with pytest.raises(IndexError):
        ttrr_eval_d2(tbl, tbl.n_max + 2, mp.mpf(1))


# ---------------------------------------------------------------------------
# ladder functions and their identities
# ---------------------------------------------------------------------------

def test_ladder_shapes(t16):
    tbl, polys = t16
    for n in (1, 4, 9):
        pair = ladder_pair(tbl, polys, n)
        # both stored over denominator x
        assert pair.A.den == (mp.mpf(0), mp.mpf(1))
        assert pair.B.den == (mp.mpf(0), mp.mpf(1))
        # x*calA_n is a cubic with leading 4z, x*calB_n a quadratic with
        # leading 4 z a_n
        assert len(pair.A.num) == 4
        assert abs(pair.A.num[3] - 4 * tbl.z) <= CTX.verify_tol(tbl.z)
        assert len(pair.B.num) == 3
        want = 4 * tbl.z * tbl.a[n]
        assert abs(pair.B.num[2] - want) <= CTX.verify_tol(want)


def test_identity_i(t16):
    tbl, polys = t16
    res, scale = identity_i_residual(tbl, polys, 2)
    assert abs(res) <= CTX.verify_tol(scale)
    for n in range(15):
        res, scale = identity_i_residual(tbl, polys, n)
        assert abs(res) <= CTX.verify_tol(scale)


def test_identity_ii(t16):
    tbl, polys = t16
    res, scale = identity_ii_residual(tbl, polys, 3)
    assert abs(res) <= CTX.verify_tol(scale)
    for n in range(1, 15):
        res, scale = identity_ii_residual(tbl, polys, n)
        assert abs(res) <= CTX.verify_tol(scale)


def test_compat_residuals(t16):
    tbl, polys = t16
    xs = log_grid("0.01", 4, 16)
    for n in (1, 2, 8):
        r1, r2 = compat_residuals(tbl, polys, n, xs)
        assert r1 <= CTX.verify_tol(1)
        assert r2 <= CTX.verify_tol(1)


def test_compat_pole_guard(t16):
    tbl, polys = t16
    with pytest.raises(DomainError):
        compat_residuals(tbl, polys, 2, [mp.mpf(0)])


# ---------------------------------------------------------------------------
# lowering / raising
# ---------------------------------------------------------------------------

def test_lowering_raising_zero_polys(t16):
    tbl, polys = t16
    for n in (2, 5, 9):
        data = lowering_data(tbl, n)
        scale = poly_max_abs(poly_mul(list(data.C), list(polys[n].coeffs)))
        assert poly_max_abs(lowering_apply(polys, data, n)) <= CTX.verify_tol(scale)
        scale_r = tbl.a[n + 1] * scale
        assert poly_max_abs(raising_apply(polys, data, tbl, n)) \
            <= CTX.verify_tol(scale_r)


def test_lowering_degrees(t16):
    tbl, _ = t16
    d2 = lowering_data(tbl, 2)
    assert len(d2.C) == 3 and len(d2.D) == 2
    for n in (3, 7, 12):
        data = lowering_data(tbl, n)
        assert len(data.C) == 4 and len(data.D) == 3
        want = 4 * tbl.z * tbl.a[n + 1]
        assert abs(data.C[3] - want) <= CTX.verify_tol(want)


def test_lowering_C_routes_agree(t16):
    tbl, _ = t16
    for n in (2, 5, 9):
        data = lowering_data(tbl, n)
        for x in log_grid("0.05", 3, 8):
            got = lowering_C_via_beta(tbl, n, x)
            want = poly_eval(list(data.C), x)
            assert abs(got - want) <= CTX.verify_tol(abs(want) + 1)


def test_lowering_guards(t16):
    tbl, polys = t16
    with pytest.raises(IndexError):
        lowering_data(tbl, 1)
    data = lowering_data(tbl, 5)
    with pytest.raises(DomainError):
        lowering_apply(polys, data, 6)


# ---------------------------------------------------------------------------
# second-order ODEs, both routes
# ---------------------------------------------------------------------------

def test_holonomic_Dn(t16):
    tbl, polys = t16
    for n in (3, 6, 10):
        data = lowering_data(tbl, n)
        xs = sample_grid(n, 1, count=16, ctx=CTX)
        assert holonomic_residual_Dn(polys, data, tbl, n, xs) <= CTX.verify_tol(1)


def test_holonomic_chen(t16):
    tbl, polys = t16
    for n in (1, 2, 5, 12):
        xs = sample_grid(n, 1, count=16, ctx=CTX)
        assert holonomic_residual_chen(tbl, polys, n, xs) <= CTX.verify_tol(1)


def test_ode_routes_agree_on_common_target(t16):
    # D_n annihilates P_{n+1}; the ladder ODE at index n+1 does too.  Same
    # samples, same polynomial, both residuals at roundoff.
    tbl, polys = t16
    for n in (3, 6):
        xs = sample_grid(n + 1, 1, count=12, ctx=CTX)
        data = lowering_data(tbl, n)
        r_low = holonomic_residual_Dn(polys, data, tbl, n, xs)
        r_chen = holonomic_residual_chen(tbl, polys, n + 1, xs)
        assert r_low <= CTX.verify_tol(1)
        assert r_chen <= CTX.verify_tol(1)


def test_chen_guards(t16):
    tbl, polys = t16
    with pytest.raises(IndexError):
        holonomic_residual_chen(tbl, polys, 0, [mp.mpf(1)])
    with pytest.raises(DomainError):
        holonomic_residual_chen(tbl, polys, 2, [mp.mpf(0)])


def test_Dn_guards(t16):
    tbl, polys = t16
    data = lowering_data(tbl, 5)
    with pytest.raises(IndexError):
        holonomic_residual_Dn(polys, data, tbl, 2, [mp.mpf(1)])
    with pytest.raises(DomainError):
        holonomic_residual_Dn(polys, data, tbl, 6, [mp.mpf(1)])


# ---------------------------------------------------------------------------
# confluent Christoffel-Darboux and the Lax block
# ---------------------------------------------------------------------------

def test_confluent(t16):
    tbl, polys = t16
    xs = log_grid("0.05", 3, 12)
    # n = 0 is the identity 1/h_0 = P_1' P_0/h_0
    assert confluent_check(polys, tbl, 0, xs) <= CTX.verify_tol(1)
    for n in (4, 9):
        assert confluent_check(polys, tbl, n, xs) <= CTX.verify_tol(1)


def test_lax_block(t16):
    tbl, _ = t16
    assert lax_block_check(tbl, 12) <= CTX.verify_tol(1)


def test_lax_block_M20_other_z():
    ctx = CTX
    tbl = chebyshev_coeffs(4, 19, ctx)
    assert lax_block_check(tbl, 20) <= ctx.verify_tol(1)


def test_lax_guards(t16):
    tbl, _ = t16
    with pytest.raises(DomainError):
        lax_block_check(tbl, 9)
    with pytest.raises(DomainError):
        lax_block_check(tbl, tbl.n_max + 2)


# ---------------------------------------------------------------------------
# sample grid and cross-precision stability
# ---------------------------------------------------------------------------

def test_sample_grid_properties():
    xs = sample_grid(8, 1, count=16, ctx=CTX)
    assert len(xs) == 16
    assert all(x > 0 for x in xs)
    assert xs == sorted(xs)
    # endpoints survive the log/exp round trip up to rounding
    assert abs(xs[0] - mp.mpf("0.01")) <= CTX.verify_tol(mp.mpf("0.01"))
    lo = sample_grid(8, 1, count=4, lo="0.5", ctx=CTX)
    assert abs(lo[0] - mp.mpf("0.5")) <= CTX.verify_tol(1)


def test_residuals_stable_at_doubled_precision():
    for z in (mp.mpf("0.25"), mp.mpf(1), mp.mpf(4)):
        for bits in (256, 512):
            ctx = PrecisionContext(bits)
            tbl = chebyshev_coeffs(z, 8, ctx)
            polys = poly_table(z, 8, ctx, tbl=tbl)
            xs = sample_grid(5, z, count=8, ctx=ctx)
            assert holonomic_residual_chen(tbl, polys, 5, xs) <= ctx.verify_tol(1)
            data = lowering_data(tbl, 5)
            assert holonomic_residual_Dn(polys, data, tbl, 5, xs) <= ctx.verify_tol(1)
            res, scale = identity_i_residual(tbl, polys, 4)
            assert abs(res) <= ctx.verify_tol(scale)
