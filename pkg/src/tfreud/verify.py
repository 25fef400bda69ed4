"""One-shot verification suite: every identity the library implements, run
over a configurable (z, n) range and collected into pass/fail records.

Each record stores the worst dimensionless residual of one identity family
(residual already divided by the dominant scale of the identity) next to the
tolerance it was judged against.  A fault-injection hook perturbs one
recurrence entry so the suite demonstrably fails on corrupted data."""
from __future__ import annotations

from dataclasses import dataclass, replace

import mpmath as mp

from .kernel import DomainError, PrecisionContext, default_bits, poly_diff, poly_max_abs, poly_mul
from .moments import (
    MomentSequence,
    moment,
    moment_recurrence_residual,
    stieltjes_ode_residual,
    stieltjes_partial,
    stieltjes_tail,
)
from .operators import (
    beta_row,
    compat_residuals,
    confluent_check,
    holonomic_residual_Dn,
    holonomic_residual_chen,
    identity_i_residual,
    identity_ii_residual,
    jacobi_matrix,
    lax_block_check,
    lowering_apply,
    lowering_data,
    mat_mul,
    poly_table,
    raising_apply,
    sample_grid,
    structure_residual,
)
from .recurrence import (
    RecurrenceTable,
    chebyshev_coeffs,
    h_scaling_check,
    lf_residual_1,
    lf_residual_2,
    lf_residual_I,
    lf_scale_I,
    scaling_check,
)
from .zeros import (
    DensityModel,
    density,
    density_integral,
    density_normalization,
    interlacing_margin,
    largest_zero_bound,
    stationarity_check,
    zero_scaling_check,
    zeros,
)

SCALE_Z = (mp.mpf(1) / 16, mp.mpf(1) / 4, mp.mpf(4), mp.mpf(16))


@dataclass(frozen=True)
class CheckRecord:
    name: str
    n_range: str
    z_values: str
    residual: mp.mpf
    tolerance: mp.mpf
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"{tag} {self.name:<24} n={self.n_range:<9} z={self.z_values:<12} "
                f"residual {mp.nstr(self.residual, 4):<12} tol {mp.nstr(self.tolerance, 4)}")


@dataclass(frozen=True)
class VerificationReport:
    records: tuple
    bits: int

    @property
    def overall(self) -> bool:
        return all(r.passed for r in self.records)

    def lines(self) -> list:
        out = [r.line() for r in self.records]
        out.append(f"OVERALL {'PASS' if self.overall else 'FAIL'} "
                   f"({sum(r.passed for r in self.records)}/{len(self.records)} checks, "
                   f"{self.bits} bits)")
        return out


def parse_fault(spec: str):
    """'a:3:1e-6' -> ('a', 3, mpf('1e-6')); additive perturbation."""
    parts = spec.split(":")
    if len(parts) != 3 or parts[0] not in ("a", "b"):
        raise DomainError(f"fault spec must be a|b:index:delta, got {spec!r}")
    try:
        idx = int(parts[1])
        delta = mp.mpf(parts[2])
    except (ValueError, TypeError):
        raise DomainError(f"fault spec must be a|b:index:delta, got {spec!r}")
    if parts[0] == "a" and idx < 1:
        raise DomainError("cannot perturb a_0 (pinned to 0)")
    if idx < 0:
        raise DomainError("fault index must be nonnegative")
    return parts[0], idx, delta


def inject_fault(tbl: RecurrenceTable, fault) -> RecurrenceTable:
    field, idx, delta = fault
    values = list(getattr(tbl, field))
    if idx >= len(values):
        raise DomainError(f"fault index {idx} outside table 0..{len(values) - 1}")
    values[idx] = values[idx] + delta
    return replace(tbl, **{field: tuple(values)})


def _rec(name, n_range, z_desc, residual, tolerance) -> CheckRecord:
    res = mp.mpf(residual)
    tol = mp.mpf(tolerance)
    return CheckRecord(name, n_range, z_desc, res, tol, bool(res <= tol))


def _zdesc(z_values) -> str:
    return ",".join(mp.nstr(mp.mpf(z), 6) for z in z_values)


def _algebraic_verdicts(z, n_max: int, bits: int) -> tuple:
    """Pass/fail pattern of the core identity families at one precision;
    used to confirm the verdicts are stable when the precision is doubled."""
    ctx = PrecisionContext(bits)
    with mp.workprec(ctx.bits + 64):
        tbl = chebyshev_coeffs(z, n_max + 2, ctx)
        polys = poly_table(z, n_max + 2, ctx, tbl=tbl)
        tol = ctx.verify_tol(1)
        flags = []
        for n in range(1, n_max + 1):
            flags.append(abs(lf_residual_1(tbl, n)) / (2 * n + 1) <= tol)
            flags.append(abs(lf_residual_I(tbl, n)) <= ctx.verify_tol(lf_scale_I(tbl, n)))
            res_i, scale_i = identity_i_residual(tbl, polys, n)
            flags.append(res_i <= ctx.verify_tol(scale_i))
        xs = sample_grid(min(5, n_max), z, count=8)
        flags.append(holonomic_residual_chen(tbl, polys, min(5, n_max), xs) <= tol)
        return tuple(flags)


def run_verification(z_values=(mp.mpf(1) / 4, 1, 4), n_max: int = 14,
                     bits: int | None = None, epsilon=mp.mpf("1e-3"),
                     fault: str | None = None) -> VerificationReport:
    """Run every residual family and return the collected records.

    `fault` ('a:3:1e-6' style) perturbs one entry of each freshly built
    recurrence table, so a corrupted run must come back failing."""
    # the Lax block needs M >= 10 and M_lax = min(20, n_max + 3)
    if n_max < 8:
        raise DomainError(f"verification needs n_max >= 8, got {n_max}")
    if bits is None:
        bits = default_bits(n_max)
    ctx = PrecisionContext(bits)
    fault_parsed = parse_fault(fault) if fault else None
    zs = [mp.mpf(z) for z in z_values]
    records = []

    with mp.workprec(ctx.bits + 64):
        tol1 = ctx.verify_tol(1)
        n_tbl = n_max + 2

        tables = {}
        ptables = {}
        for z in zs:
            tbl = chebyshev_coeffs(z, n_tbl, ctx)
            if fault_parsed:
                tbl = inject_fault(tbl, fault_parsed)
            tables[z] = tbl
            ptables[z] = poly_table(z, n_tbl, ctx, tbl=tbl)

        zdesc = _zdesc(zs)
        nrange = f"1..{n_max}"

        # moment recurrence and the Stieltjes tail (weight side, no tables)
        worst = mp.mpf(0)
        for z in zs:
            mseq = MomentSequence.build(z, 2 * n_max + 5, ctx)
            for n in range(2 * n_max + 1):
                scale = (n + 1) * mseq[n]
                worst = max(worst, abs(moment_recurrence_residual(mseq, n)) / scale)
        records.append(_rec("moment-recurrence", f"0..{2 * n_max}", zdesc, worst, tol1))

        worst = mp.mpf(0)
        for z in zs:
            for t in (mp.mpf(2), mp.mpf(10)):
                N = 2 * n_max + 1
                res = stieltjes_ode_residual(t, z, N, ctx)
                tail = stieltjes_tail(t, z, N, ctx)
                # the residual is a difference of sums of this magnitude
                scale = 4 * z * t ** 4 * stieltjes_partial(t, z, N, ctx) + 1
                worst = max(worst, abs(res - tail) / scale)
        records.append(_rec("stieltjes-ode-tail", f"N={2 * n_max + 1}", zdesc, worst, tol1))

        # Laguerre-Freud family
        worst = mp.mpf(0)
        for z in zs:
            for n in range(1, n_max + 1):
                worst = max(worst, abs(lf_residual_1(tables[z], n)) / (2 * n + 1))
        records.append(_rec("lf-eq1", nrange, zdesc, worst, tol1))

        worst = mp.mpf(0)
        for z in zs:
            tbl = tables[z]
            for n in range(1, n_max + 1):
                scale = max(abs(tbl.b[n]), 4 * tbl.z * tbl.a[n + 1] * abs(tbl.T(n + 2) + tbl.T(n)))
                worst = max(worst, abs(lf_residual_2(tbl, n)) / scale)
        records.append(_rec("lf-eq12", nrange, zdesc, worst, tol1))

        worst = mp.mpf(0)
        for z in zs:
            for n in range(1, n_max + 1):
                scale = lf_scale_I(tables[z], n)
                worst = max(worst, abs(lf_residual_I(tables[z], n)) / scale)
        records.append(_rec("lf-nonlinear", nrange, zdesc, worst, tol1))

        # ladder identities and compatibility
        for name, fn in (("identity-i", identity_i_residual),
                         ("identity-ii", identity_ii_residual)):
            worst = mp.mpf(0)
            for z in zs:
                for n in range(1, n_max + 1):
                    res, scale = fn(tables[z], ptables[z], n)
                    worst = max(worst, res / scale)
            records.append(_rec(name, nrange, zdesc, worst, tol1))

        worst1 = worst2 = mp.mpf(0)
        for z in zs:
            for n in range(1, n_max + 1):
                xs = sample_grid(n, z, count=8)
                r1, r2 = compat_residuals(tables[z], ptables[z], n, xs)
                worst1, worst2 = max(worst1, r1), max(worst2, r2)
        records.append(_rec("compat-first", nrange, zdesc, worst1, tol1))
        records.append(_rec("compat-second", nrange, zdesc, worst2, tol1))

        # structure relation and lowering/raising operators
        worst = mp.mpf(0)
        for z in zs:
            for n in range(0, n_max + 1):
                res = structure_residual(tables[z], ptables[z], n)
                scale = poly_max_abs([mp.mpf(0)] + poly_diff(list(ptables[z][n + 1].coeffs)))
                worst = max(worst, poly_max_abs(res) / scale)
        records.append(_rec("structure", f"0..{n_max}", zdesc, worst, tol1))

        worst_lo = worst_hi = mp.mpf(0)
        for z in zs:
            tbl, polys = tables[z], ptables[z]
            for n in range(2, n_max + 1):
                data = lowering_data(tbl, n)
                scale = poly_max_abs(poly_mul(list(data.C), list(polys[n].coeffs)))
                worst_lo = max(worst_lo, poly_max_abs(lowering_apply(polys, data, n)) / scale)
                worst_hi = max(worst_hi, poly_max_abs(raising_apply(polys, data, tbl, n))
                               / (tbl.a[n + 1] * scale))
        records.append(_rec("lowering", f"2..{n_max}", zdesc, worst_lo, tol1))
        records.append(_rec("raising", f"2..{n_max}", zdesc, worst_hi, tol1))

        # holonomic second-order equations
        worst_tri = worst_lad = mp.mpf(0)
        for z in zs:
            tbl, polys = tables[z], ptables[z]
            for n in range(3, n_max + 1):
                xs = sample_grid(n, z, count=8)
                data = lowering_data(tbl, n)
                worst_tri = max(worst_tri, holonomic_residual_Dn(polys, data, tbl, n, xs))
            for n in range(1, n_max + 1):
                xs = sample_grid(n, z, count=8)
                worst_lad = max(worst_lad, holonomic_residual_chen(tbl, polys, n, xs))
        records.append(_rec("ode-composed", f"3..{n_max}", zdesc, worst_tri, tol1))
        records.append(_rec("ode-eliminated", nrange, zdesc, worst_lad, tol1))

        # confluent kernel identity
        worst = mp.mpf(0)
        for z in zs:
            for n in (0, n_max // 2, n_max):
                xs = sample_grid(max(n, 1), z, count=8)
                worst = max(worst, confluent_check(ptables[z], tables[z], n, xs))
        records.append(_rec("confluent-kernel", f"0..{n_max}", zdesc, worst, tol1))

        # Lax block and the quartic-power rows
        M_lax = min(20, n_tbl + 1)
        worst = max(lax_block_check(tables[z], M_lax) for z in zs)
        records.append(_rec("lax-block", f"M={M_lax}", zdesc, worst, tol1))

        M_rows = min(20, n_tbl - 4)
        worst = mp.mpf(0)
        for z in zs:
            tbl = tables[z]
            size = M_rows + 5
            J = jacobi_matrix(tbl, size)
            J2 = mat_mul(J, J)
            J4 = mat_mul(J2, J2)
            mat_scale = max(max(abs(v) for v in row) for row in J4)
            for n in range(M_rows + 1):
                vec = beta_row(tbl, n).as_vector(size)
                dev = max(abs(vec[k] - J4[n][k]) for k in range(size))
                worst = max(worst, dev / mat_scale)
        records.append(_rec("jacobi-quartic-rows", f"0..{M_rows}", zdesc, worst, tol1))

        # scaling laws against the z = 1 family
        sdesc = _zdesc(SCALE_Z)
        worst = mp.mpf(0)
        for z in SCALE_Z:
            for n in range(2 * n_max + 1):
                ratio = (moment(n, z, ctx) * z ** (mp.mpf(n + 1) / 4)
                         / moment(n, mp.mpf(1), ctx))
                worst = max(worst, abs(ratio - 1))
        records.append(_rec("scaling-moments", f"0..{2 * n_max}", sdesc, worst, tol1))

        tbl_one = chebyshev_coeffs(1, n_tbl, ctx)
        worst_ab = mp.mpf(0)
        for z in SCALE_Z:
            tbl_z = chebyshev_coeffs(z, n_tbl, ctx)
            for n in range(n_max + 1):
                da, db = scaling_check(tbl_z, tbl_one, n)
                worst_ab = max(worst_ab, abs(da), abs(db))
        records.append(_rec("scaling-coefficients", f"0..{n_max}", sdesc, worst_ab, tol1))

        worst = max(abs(h_scaling_check(z, n_max, ctx)) for z in SCALE_Z)
        records.append(_rec("scaling-h", f"n={n_max}", sdesc, worst, tol1))

        worst = mp.mpf(0)
        for z in SCALE_Z:
            tbl_z = chebyshev_coeffs(z, n_tbl, ctx)
            for n in range(1, n_max + 1):
                ratio = tbl_z.sigma(n) * z ** mp.mpf("0.25") / tbl_one.sigma(n)
                worst = max(worst, abs(ratio - 1))
        records.append(_rec("scaling-sigma", nrange, sdesc, worst, tol1))

        n_zero = min(n_max, 10)
        x_top = zeros(tbl_one, n_zero, ctx)[n_zero - 1]
        worst = max(zero_scaling_check(n_zero, z, ctx) for z in SCALE_Z)
        records.append(_rec("scaling-zeros", f"n={n_zero}", sdesc, worst, ctx.verify_tol(x_top)))

        # zeros: interlacing, equilibrium, largest-zero bound
        worst_margin = None
        for z in zs:
            tbl = tables[z]
            prev = zeros(tbl, 1, ctx)
            for n in range(2, min(n_max, 14) + 1):
                cur = zeros(tbl, n, ctx)
                m = interlacing_margin(cur, prev)
                worst_margin = m if worst_margin is None else min(worst_margin, m)
                prev = cur
        records.append(CheckRecord("interlacing", f"2..{min(n_max, 14)}", zdesc,
                                   worst_margin, mp.mpf(0),
                                   bool(worst_margin > 0)))

        if mp.mpf(1) in tables:
            tbl1, polys1 = tables[mp.mpf(1)], ptables[mp.mpf(1)]
        else:
            tbl1 = chebyshev_coeffs(1, n_tbl, ctx)
            polys1 = poly_table(1, n_tbl, ctx, tbl=tbl1)
        worst = mp.mpf(0)
        for n in (6, min(12, n_max)):
            worst = max(worst, stationarity_check(tbl1, polys1, n, ctx))
        records.append(_rec("stationarity", f"6,{min(12, n_max)}", "1", worst, mp.mpf("1e-8")))

        worst_ratio = mp.mpf(0)
        for n in range(2, min(n_max, 14) + 1):
            bound = largest_zero_bound(polys1, tbl1, n, eps=epsilon)
            worst_ratio = max(worst_ratio, zeros(tbl1, n, ctx)[n - 1] / bound)
        records.append(CheckRecord("largest-zero-bound", f"2..{min(n_max, 14)}", "1",
                                   worst_ratio, mp.mpf(1), bool(worst_ratio < 1)))

        # density: two representations and total mass
        model = DensityModel.for_t(1, ctx)
        worst = mp.mpf(0)
        for wq in ("0.05", "0.2", "0.5", "0.7", "0.9"):
            x = mp.mpf(wq) * model.beta_t
            series = density(x, 1, ctx)
            worst = max(worst, abs(series - density_integral(x, 1, ctx)) / series)
        records.append(_rec("density-consistency", "w=0.05..0.9", "t=1", worst, mp.mpf("1e-8")))

        worst = abs(density_normalization(1, ctx) - 1)
        records.append(_rec("density-normalization", "-", "t=1", worst, mp.mpf("1e-6")))

        # precision policy and verdict stability under doubling
        policy_ok = bits >= default_bits(n_max)
        n_snap = min(n_max, 8)
        stable = (_algebraic_verdicts(mp.mpf(1), n_snap, bits)
                  == _algebraic_verdicts(mp.mpf(1), n_snap, 2 * bits))
        records.append(CheckRecord(
            "self-consistency", f"1..{n_snap}", "1",
            mp.mpf(0 if (policy_ok and stable) else 1), mp.mpf(0),
            bool(policy_ok and stable)))

    return VerificationReport(tuple(records), bits)
