#!/usr/bin/env python3
"""Derive coefficients for the splitting/composition scheme registry.

Two scheme families are produced:

* ``gamma`` (symmetric compositions): palindromic stage weights for
  compositions of an arbitrary time-symmetric second-order base method.
  Order conditions are imposed numerically: the composition of Strang
  kernels built from random constant matrices must agree with
  exp(h*(A+B)) through the target order.  The log of the composed
  truncated matrix power series has only odd-degree terms (palindromy),
  and the method has order p exactly when those terms vanish for
  degrees 3..p-1 while the degree-1 term equals A+B.  A second
  instantiation with a three-part kernel (A,B,C) is stacked on top so
  that an accidental algebraic relation in one instantiation cannot
  produce a spurious solution.

* ``ab`` (drift/kick splittings of RKN type, ABA layout): coefficients
  a_1..a_{s+1}, b_1..b_s for systems q'' = g(q).  Order conditions are
  imposed by matching the h-Taylor expansion of the one-step map with
  the exact-flow expansion on a batch of random polynomial problems.

Search runs in float64 (Levenberg-Marquardt, finite-difference
Jacobian, random multistart).  Solutions are then refined with
high-precision residual evaluations (gmpy2, 240 bits) driven by the
float64 pseudo-inverse, which converges far below the 25 significant
digits written to the output files.

Usage:  python3 tools/derive_schemes.py --out crates/core/data/schemes
"""

import argparse
import os
import sys
import numpy as np
import gmpy2
from gmpy2 import mpfr

MATN = 8  # matrix dimension for the free-algebra instantiations

gmpy2.get_context().precision = 240  # ~72 decimal digits


# ----------------------------------------------------------------------
# truncated power series with matrix coefficients
# ----------------------------------------------------------------------

def zero_mat(n, hi, dtype=np.float64):
    if hi:
        return np.full((n, n), mpfr(0), dtype=object)
    return np.zeros((n, n), dtype=dtype)


def series_mul(p, q, ndeg, n, hi):
    out = []
    dtype = None if hi else p[0].dtype
    for k in range(ndeg):
        acc = zero_mat(n, hi, dtype) if not hi else zero_mat(n, hi)
        for i in range(k + 1):
            acc = acc + np.dot(p[i], q[k - i])
        out.append(acc)
    return out


def series_exp_monomial(coef, mat_powers, ndeg):
    """exp(coef * X * h) for a constant matrix X with precomputed powers."""
    out = []
    fact = coef - coef + 1  # one, in the working scalar type
    c = fact
    for k in range(ndeg):
        if k > 0:
            fact = fact * k
            c = c * coef
        out.append(mat_powers[k] * (c / fact))
    return out


class CompositionInstance:
    """One random instantiation: kernel matrices and target field."""

    def __init__(self, mats64, hi, dtype=np.float64):
        self.hi = hi
        self.dtype = dtype
        if hi:
            mats = [np.array([[mpfr(v) for v in row] for row in m], dtype=object) for m in mats64]
        else:
            mats = [np.array(m, dtype=dtype) for m in mats64]
        self.n = mats[0].shape[0]
        self.nparts = len(mats)
        self.powers = []
        self.max_ndeg = 0
        self.mats = mats
        self.target = mats[0]
        for m in mats[1:]:
            self.target = self.target + m

    def ensure_powers(self, ndeg):
        if self.max_ndeg >= ndeg:
            return
        self.powers = []
        for m in self.mats:
            pw = [zero_mat(self.n, self.hi, getattr(self, "dtype", np.float64))]
            np.fill_diagonal(pw[0], mpfr(1) if self.hi else 1.0)
            cur = pw[0]
            for _ in range(ndeg - 1):
                cur = np.dot(cur, m)
                pw.append(cur)
            self.powers.append(pw)
        self.max_ndeg = ndeg

    def kernel_factor(self, gamma, ndeg):
        half = gamma / 2
        p = self.powers
        if self.nparts == 2:
            ea = series_exp_monomial(half, p[0], ndeg)
            eb = series_exp_monomial(gamma, p[1], ndeg)
            out = series_mul(ea, eb, ndeg, self.n, self.hi)
            return series_mul(out, ea, ndeg, self.n, self.hi)
        ea = series_exp_monomial(half, p[0], ndeg)
        eb = series_exp_monomial(half, p[1], ndeg)
        ec = series_exp_monomial(gamma, p[2], ndeg)
        out = series_mul(ea, eb, ndeg, self.n, self.hi)
        out = series_mul(out, ec, ndeg, self.n, self.hi)
        out = series_mul(out, eb, ndeg, self.n, self.hi)
        return series_mul(out, ea, ndeg, self.n, self.hi)

    def residual(self, gammas, order):
        ndeg = order  # degrees 0..order-1 cover S_1..S_{order-1}
        self.ensure_powers(ndeg)
        prod = None
        for g in gammas:
            f = self.kernel_factor(g, ndeg)
            prod = f if prod is None else series_mul(prod, f, ndeg, self.n, self.hi)
        # log of the composed map
        q = list(prod)
        q[0] = q[0] - q[0]
        log = [zero_mat(self.n, self.hi, getattr(self, "dtype", np.float64)) for _ in range(ndeg)]
        power = list(q)
        k = 1
        while k < ndeg:
            s = 1.0 / k if k % 2 == 1 else -1.0 / k
            if self.hi:
                s = mpfr(1) / k if k % 2 == 1 else mpfr(-1) / k
            for d in range(ndeg):
                log[d] = log[d] + power[d] * s
            k += 1
            if k < ndeg:
                power = series_mul(power, q, ndeg, self.n, self.hi)
        res = [log[1] - self.target]
        for m in range(3, order, 2):
            res.append(log[m])
        return np.concatenate([r.ravel() for r in res])


def full_gammas(half, s):
    m = (s + 1) // 2
    assert len(half) == m
    return np.concatenate([half[: m - 1], [half[m - 1]], half[: m - 1][::-1]])


def composition_residual(half, s, order, instances):
    gammas = full_gammas(half, s)
    parts = [inst.residual(gammas, order) for inst in instances]
    return np.concatenate(parts)


# ----------------------------------------------------------------------
# RKN (ab) residuals: map Taylor expansion on q'' = g(q)
# ----------------------------------------------------------------------

class RknInstance:
    """Random 1-D problem q'' = g(q) with polynomial g."""

    def __init__(self, gcoeffs, q0, p0, hi, dtype=np.float64):
        self.hi = hi
        self.dtype = dtype
        if hi:
            self.g = [mpfr(v) for v in gcoeffs]
            self.q0, self.p0 = mpfr(q0), mpfr(p0)
        else:
            self.g = [dtype(v) for v in gcoeffs]
            self.q0, self.p0 = dtype(q0), dtype(p0)

    def smul(self, a, b, ndeg):
        if not self.hi:
            return list(np.convolve(a, b)[:ndeg]) + [self.dtype(0)] * max(0, ndeg - len(a) - len(b) + 1)
        out = [mpfr(0)] * ndeg
        for i in range(ndeg):
            if a[i] == 0:
                continue
            for j in range(ndeg - i):
                out[i + j] = out[i + j] + a[i] * b[j]
        return out

    def geval(self, q, ndeg):
        zero = mpfr(0) if self.hi else self.dtype(0)
        out = [zero] * ndeg
        out[0] = out[0] + self.g[-1]
        for c in reversed(self.g[:-1]):
            out = self.smul(out, q, ndeg)
            out[0] = out[0] + c
        return out

    def exact_series(self, ndeg):
        zero = mpfr(0) if self.hi else self.dtype(0)
        q = [zero] * ndeg
        q[0], q[1] = self.q0, self.p0
        for k in range(ndeg - 2):
            gq = self.geval(q, ndeg)
            q[k + 2] = gq[k] / ((k + 1) * (k + 2))
        p = [zero] * ndeg
        for k in range(1, ndeg):
            p[k - 1] = q[k] * k
        return q, p

    def map_series(self, a, b, ndeg):
        zero = mpfr(0) if self.hi else self.dtype(0)
        q = [zero] * ndeg
        p = [zero] * ndeg
        q[0], p[0] = self.q0, self.p0
        for j in range(len(a)):
            for k in range(ndeg - 1, 0, -1):
                q[k] = q[k] + p[k - 1] * a[j]
            if j < len(b):
                gq = self.geval(q, ndeg)
                for k in range(ndeg - 1, 0, -1):
                    p[k] = p[k] + gq[k - 1] * b[j]
        return q, p

    def residual(self, a, b, order):
        ndeg = order + 2
        qe, pe = self.exact_series(ndeg)
        qm, pm = self.map_series(a, b, ndeg)
        res = []
        for k in range(1, order + 1):
            res.append(qm[k] - qe[k])
            res.append(pm[k] - pe[k])
        return np.array(res, dtype=object if self.hi else self.dtype)


class Rkn2Instance:
    """Random planar problem q'' = -grad U(q), U a random polynomial.

    Two-dimensional gradient kicks pin the order conditions that scalar
    problems cannot distinguish, while staying inside the Hamiltonian class
    the schemes are built for.
    """

    def __init__(self, ucoeffs, q0, p0, hi, dtype=np.float64):
        # ucoeffs: dense (deg+1, deg+1) array of U coefficients
        self.hi = hi
        self.dtype = dtype
        conv = (lambda v: mpfr(v)) if hi else dtype
        deg = len(ucoeffs)
        self.gx = {}  # -dU/dq1
        self.gy = {}
        for i in range(deg):
            for j in range(deg):
                c = ucoeffs[i][j]
                if c == 0.0:
                    continue
                if i > 0:
                    self.gx[(i - 1, j)] = conv(-i * c)
                if j > 0:
                    self.gy[(i, j - 1)] = conv(-j * c)
        self.q0 = [conv(q0[0]), conv(q0[1])]
        self.p0 = [conv(p0[0]), conv(p0[1])]

    def smul(self, a, b, ndeg):
        if not self.hi:
            return list(np.convolve(a, b)[:ndeg])
        out = [mpfr(0)] * ndeg
        for i in range(ndeg):
            if a[i] == 0:
                continue
            for j in range(ndeg - i):
                out[i + j] = out[i + j] + a[i] * b[j]
        return out

    def powers(self, q, maxp, ndeg):
        one = mpfr(1) if self.hi else self.dtype(1)
        zero = mpfr(0) if self.hi else self.dtype(0)
        out = [[one] + [zero] * (ndeg - 1)]
        for _ in range(maxp):
            out.append(self.smul(out[-1], q, ndeg))
        return out

    def geval(self, q1, q2, ndeg):
        zero = mpfr(0) if self.hi else self.dtype(0)
        maxi = max((i for i, _ in list(self.gx) + list(self.gy)), default=0)
        maxj = max((j for _, j in list(self.gx) + list(self.gy)), default=0)
        p1 = self.powers(q1, maxi, ndeg)
        p2 = self.powers(q2, maxj, ndeg)
        gx = [zero] * ndeg
        gy = [zero] * ndeg
        for (i, j), c in self.gx.items():
            term = self.smul(p1[i], p2[j], ndeg)
            for k in range(ndeg):
                gx[k] = gx[k] + c * term[k]
        for (i, j), c in self.gy.items():
            term = self.smul(p1[i], p2[j], ndeg)
            for k in range(ndeg):
                gy[k] = gy[k] + c * term[k]
        return gx, gy

    def exact_series(self, ndeg):
        zero = mpfr(0) if self.hi else self.dtype(0)
        q1 = [zero] * ndeg
        q2 = [zero] * ndeg
        q1[0], q1[1] = self.q0[0], self.p0[0]
        q2[0], q2[1] = self.q0[1], self.p0[1]
        for k in range(ndeg - 2):
            gx, gy = self.geval(q1, q2, ndeg)
            q1[k + 2] = gx[k] / ((k + 1) * (k + 2))
            q2[k + 2] = gy[k] / ((k + 1) * (k + 2))
        def deriv(q):
            p = [zero] * ndeg
            for k in range(1, ndeg):
                p[k - 1] = q[k] * k
            return p
        return q1, q2, deriv(q1), deriv(q2)

    def map_series(self, a, b, ndeg):
        zero = mpfr(0) if self.hi else self.dtype(0)
        q1 = [zero] * ndeg
        q2 = [zero] * ndeg
        p1 = [zero] * ndeg
        p2 = [zero] * ndeg
        q1[0], p1[0] = self.q0[0], self.p0[0]
        q2[0], p2[0] = self.q0[1], self.p0[1]
        for j in range(len(a)):
            for k in range(ndeg - 1, 0, -1):
                q1[k] = q1[k] + p1[k - 1] * a[j]
                q2[k] = q2[k] + p2[k - 1] * a[j]
            if j < len(b):
                gx, gy = self.geval(q1, q2, ndeg)
                for k in range(ndeg - 1, 0, -1):
                    p1[k] = p1[k] + gx[k - 1] * b[j]
                    p2[k] = p2[k] + gy[k - 1] * b[j]
        return q1, q2, p1, p2

    def residual(self, a, b, order):
        ndeg = order + 2
        qe1, qe2, pe1, pe2 = self.exact_series(ndeg)
        qm1, qm2, pm1, pm2 = self.map_series(a, b, ndeg)
        res = []
        for k in range(1, order + 1):
            res.extend([
                qm1[k] - qe1[k],
                qm2[k] - qe2[k],
                pm1[k] - pe1[k],
                pm2[k] - pe2[k],
            ])
        return np.array(res, dtype=object if self.hi else self.dtype)


def ab_from_half(half, s):
    """Palindromic (a, b): a_j = a_{s+2-j} (s+1 entries), b_j = b_{s+1-j}."""
    na = (s + 2) // 2
    nb = (s + 1) // 2
    ah = list(half[:na])
    bh = list(half[na : na + nb])
    a = ah + ah[::-1][(s + 1) % 2 :]
    b = bh + bh[::-1][s % 2 :]
    assert len(a) == s + 1 and len(b) == s
    return a, b


def rkn_residual(half, s, order, instances):
    a, b = ab_from_half(half, s)
    parts = [inst.residual(a, b, order) for inst in instances]
    return np.concatenate(parts)


# ----------------------------------------------------------------------
# Levenberg-Marquardt in float64 + high-precision refinement
# ----------------------------------------------------------------------

def fd_jacobian(fun, x, f0, step=1e-7):
    jac = np.empty((len(f0), len(x)))
    for i in range(len(x)):
        xp = x.copy()
        xp[i] += step
        jac[:, i] = (fun(xp) - f0) / step
    return jac


def central_jacobian(fun, x, m, step=2e-6):
    jac = np.empty((m, len(x)))
    for i in range(len(x)):
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        jac[:, i] = (fun(xp) - fun(xm)) / (2 * step)
    return jac


def levenberg_marquardt(fun, x0, max_iter=250, tol=1e-15):
    x = x0.copy()
    lam = 1e-3
    f = fun(x)
    cost = float(f @ f)
    for _ in range(max_iter):
        jac = fd_jacobian(fun, x, f)
        jtj = (jac.T @ jac).astype(np.float64)
        g = (jac.T @ f).astype(np.float64)
        improved = False
        for _ in range(25):
            try:
                dx = np.linalg.solve(
                    jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-10)), -g
                )
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            fn = fun(x + dx)
            cn = float(fn @ fn)
            if cn < cost:
                x, f, cost = x + dx, fn, cn
                lam = max(lam * 0.3, 1e-13)
                improved = True
                break
            lam *= 10
            if lam > 1e13:
                return x, cost
        if not improved or cost < tol**2:
            break
    return x, cost


def refine_high_precision(res_hi, x64, fun_jac, iters=18):
    """Quasi-Newton: 240-bit residuals; the pseudo-inverse comes from an
    80-bit extended-precision central-difference Jacobian, which resolves
    condition directions with singular values down to ~1e-10 of the largest
    (float64 differencing noise would swamp them)."""
    x = np.array(
        [mpfr(np.format_float_scientific(v, precision=25, unique=False)) for v in x64],
        dtype=object,
    )
    best = None
    for _ in range(iters):
        f = res_hi(x)
        norm = max(abs(v) for v in f)
        if best is None or norm < best[1]:
            best = (x.copy(), norm)
        if norm < mpfr("1e-62"):
            break
        xl = np.array([np.longdouble(float(v)) for v in x])
        jac = central_jacobian(fun_jac, xl, len(f)).astype(np.float64)
        u, sv, vt = np.linalg.svd(jac, full_matrices=False)
        rank = int(np.sum(sv > sv[0] * 1e-10))
        pinv = (vt[:rank].T / sv[:rank]) @ u[:, :rank].T
        dx = np.dot(pinv.astype(object), f)
        # keep steps inside the linear regime of the stiffest direction
        step = max(abs(v) for v in dx)
        if step > 0.02:
            dx = dx * (mpfr("0.02") / mpfr(step))
        x = x - dx
    return best


# ----------------------------------------------------------------------
# drivers
# ----------------------------------------------------------------------

def mp_format(x, digits=25):
    """Scientific notation with `digits` significant digits."""
    x = gmpy2.mpfr(x)
    if gmpy2.is_zero(x):
        return "0." + "0" * (digits - 1) + "e+00"
    mant, exp, _ = gmpy2.digits(x, 10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    sci_exp = exp - 1
    return f"{sign}{mant[0]}.{mant[1:]}e{sci_exp:+03d}"


def make_composition_mats(seed):
    # entries scaled so degree-9 series coefficients stay O(1e2) in float64
    rng = np.random.default_rng(seed)
    scale = 1.0 / (2.0 * np.sqrt(MATN))
    two = [rng.uniform(-1, 1, size=(MATN, MATN)) * scale for _ in range(2)]
    three = [rng.uniform(-1, 1, size=(MATN, MATN)) * scale for _ in range(3)]
    return two, three


def power_sum_presolve(x0, s, order):
    """Pin the power-sum subset of the conditions before the full solve."""

    def fun(half):
        g = full_gammas(half, s)
        res = [np.sum(g) - 1.0]
        for m in range(3, order, 2):
            res.append(np.sum(g**m))
        return np.array(res)

    x, _ = levenberg_marquardt(fun, x0, max_iter=80)
    return x


def make_rkn_data(seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(2):
        out.append(
            (rng.uniform(-1, 1, size=7), rng.uniform(-1, 1), rng.uniform(-1, 1))
        )
    return out


def make_rkn2_data(seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(3):
        u = rng.uniform(-1, 1, size=(5, 5))
        q0 = rng.uniform(-0.8, 0.8, size=2)
        p0 = rng.uniform(-0.8, 0.8, size=2)
        out.append((u, q0, p0))
    return out


def rkn_instances(hi, dtype=np.float64):
    insts = [RknInstance(g, q0, p0, hi=hi, dtype=dtype) for g, q0, p0 in make_rkn_data(777)]
    insts += [Rkn2Instance(u, q0, p0, hi=hi, dtype=dtype) for u, q0, p0 in make_rkn2_data(31337)]
    return insts


def derive_composition(name, s, order, seed, tries, out_dir):
    m = (s + 1) // 2
    two, three = make_composition_mats(12345)
    insts64 = [CompositionInstance(two, hi=False), CompositionInstance(three, hi=False)]
    fun64 = lambda h: composition_residual(h, s, order, insts64)

    rng = np.random.default_rng(seed)
    candidates = []
    for t in range(tries):
        x0 = power_sum_presolve(rng.uniform(-0.85, 1.15, size=m), s, order)
        x, cost = levenberg_marquardt(fun64, x0, max_iter=140)
        if cost < 1e-10:
            spread = float(np.max(np.abs(full_gammas(x, s))))
            if spread < 1.40:
                candidates.append((spread, cost, x.copy()))
                print(f"  {name}: try {t} candidate, cost {cost:.2e}, max|gamma| = {spread:.3f}", flush=True)
        if len(candidates) >= 8:
            break
    if not candidates:
        print(f"  {name}: FAILED (no candidates)", flush=True)
        return False

    insts_hi = [CompositionInstance(two, hi=True), CompositionInstance(three, hi=True)]
    insts_long = [
        CompositionInstance(two, hi=False, dtype=np.longdouble),
        CompositionInstance(three, hi=False, dtype=np.longdouble),
    ]
    res_hi = lambda x: composition_residual(x, s, order, insts_hi)
    fun_long = lambda h: composition_residual(h, s, order, insts_long)
    candidates.sort(key=lambda c: c[0])
    for spread, _, x64 in candidates[:5]:
        xl, cost_l = levenberg_marquardt(fun_long, np.array(x64, dtype=np.longdouble), max_iter=80)
        print(f"  {name}: extended-precision polish cost {float(cost_l):.3e}", flush=True)
        xh, rnorm = refine_high_precision(res_hi, xl, fun_long)
        print(f"  {name}: refined residual {float(rnorm):.3e} (max|gamma| {spread:.3f})", flush=True)
        if float(rnorm) < 1e-45:
            full = list(xh[: m - 1]) + [xh[m - 1]] + list(xh[: m - 1][::-1])
            write_scheme(out_dir, name, order, "gamma", full)
            return True
    print(f"  {name}: FAILED (refinement)", flush=True)
    return False


def derive_rkn(name, s, order, seed, tries, out_dir):
    na = (s + 2) // 2
    nb = (s + 1) // 2
    insts64 = rkn_instances(hi=False)
    fun64 = lambda h: rkn_residual(h, s, order, insts64)

    rng = np.random.default_rng(seed)
    candidates = []
    for t in range(tries):
        x0 = np.concatenate(
            [np.full(na, 1.0 / (s + 1)), np.full(nb, 1.0 / s)]
        ) + rng.uniform(-0.3, 0.3, size=na + nb)
        if order >= 8:
            # homotopy: land on the order-6 manifold first
            fun6 = lambda h: rkn_residual(h, s, 6, insts64)
            x0, _ = levenberg_marquardt(fun6, x0, max_iter=120)
        x, cost = levenberg_marquardt(fun64, x0)
        if cost < 1e-10:
            a, b = ab_from_half(x, s)
            spread = float(max(np.max(np.abs(a)), np.max(np.abs(b))))
            if spread < 1.1:
                candidates.append((spread, cost, x.copy()))
                print(f"  {name}: try {t} candidate, cost {cost:.2e}, max coeff = {spread:.3f}", flush=True)
        if len(candidates) >= 8:
            break
    if not candidates:
        print(f"  {name}: FAILED (no candidates)", flush=True)
        return False

    insts_hi = rkn_instances(hi=True)
    insts_long = rkn_instances(hi=False, dtype=np.longdouble)
    res_hi = lambda x: rkn_residual(x, s, order, insts_hi)
    fun_long = lambda h: rkn_residual(h, s, order, insts_long)
    candidates.sort(key=lambda c: c[0])
    for spread, _, x64 in candidates[:5]:
        xl, cost_l = levenberg_marquardt(fun_long, np.array(x64, dtype=np.longdouble), max_iter=80)
        print(f"  {name}: extended-precision polish cost {float(cost_l):.3e}", flush=True)
        xh, rnorm = refine_high_precision(res_hi, xl, fun_long)
        print(f"  {name}: refined residual {float(rnorm):.3e} (max coeff {spread:.3f})", flush=True)
        if float(rnorm) < 1e-45:
            a, b = ab_from_half(list(xh), s)
            write_scheme(out_dir, name, order, "ab", list(a) + list(b))
            return True
    print(f"  {name}: FAILED (refinement)", flush=True)
    return False


def write_scheme(out_dir, name, order, kind, values):
    path = os.path.join(out_dir, f"{name}.txt")
    with open(path, "w") as fh:
        fh.write(f"# {name}\n# order {order}\n# type {kind}\n")
        for v in values:
            fh.write(mp_format(v) + "\n")
    print(f"  wrote {path}", flush=True)


def write_analytic(out_dir):
    one = mpfr(1)
    write_scheme(out_dir, "strang", 2, "gamma", [one])
    g1 = 1 / (4 - gmpy2.root(mpfr(4), 3))
    g3 = 1 - 4 * g1
    write_scheme(out_dir, "suz90", 4, "gamma", [g1, g1, g3, g1, g1])
    return True


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="crates/core/data/schemes")
    ap.add_argument("--only", default=None)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    jobs = {
        "analytic": lambda: write_analytic(args.out),
        "ss05-6": lambda: derive_composition("ss05-6", 13, 6, 1001, 16, args.out),
        "bm02": lambda: derive_rkn("bm02", 14, 6, 4004, 30, args.out),
        "ss05-8": lambda: derive_composition("ss05-8", 21, 8, 2002, 30, args.out),
        "bce22": lambda: derive_rkn("bce22", 19, 8, 5005, 60, args.out),
        "ss05-10": lambda: derive_composition("ss05-10", 35, 10, 3003, 150, args.out),
    }
    selected = [args.only] if args.only else list(jobs)
    ok = True
    for key in selected:
        print(f"== {key}", flush=True)
        if jobs[key]() is False:
            ok = False
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
