//! Gauss–Legendre collocation coefficients and their working-precision form.
//!
//! Nodes are the roots of the degree-`s` Legendre polynomial shifted to
//! (0,1); weights and the collocation matrix solve Vandermonde systems in
//! high-precision arithmetic. The working-precision tableau does not store
//! the raw matrix `a` but the ratios `mu_ij = a_ij / b_j`, rounded so that
//! the symplecticity identity `mu_ij + mu_ji = 1` holds *exactly* in
//! double-precision arithmetic: the strictly-lower triangle is correctly
//! rounded from the exact ratio and the upper triangle is derived as
//! `1 - mu_ji`. The `nu_ij` coefficients extrapolate the previous step's
//! collocation polynomial to the new stage times and provide the initial
//! guess of the fixed-point iteration.

use crate::hiprec::{ratio_to_f64, Fx};
use crate::lanes::LaneVector;
use std::io::Write;
use std::sync::OnceLock;
use thiserror::Error;

/// Guard digits carried on top of the requested precision.
const GUARD_DIGITS: u32 = 10;
/// Newton iteration cap for node finding.
const NEWTON_CAP: u32 = 100;

#[derive(Debug, Error)]
pub enum TableauError {
    #[error("Newton iteration for node {index} did not converge within {cap} steps")]
    NewtonDivergence { index: usize, cap: u32 },
    #[error("invalid nodes: {0}")]
    InvalidNodes(String),
    #[error("unsupported stage count {0} (expected 1..=16)")]
    StageCount(usize),
    #[error("precision must be at least 30 decimal digits, got {0}")]
    Precision(u32),
    #[error("tableau validation failed: {0}")]
    Validation(String),
    #[error("order-condition residual too large: {0}")]
    Residual(String),
}

/// Working-precision coefficients of an `S`-stage Gauss collocation method.
///
/// `mu[i]` and `nu[i]` are *columns*: lane `m` of `mu[i]` holds `mu_{m,i}`,
/// matching the update `Y^l = y^l + sum_i mu_i * L_i^l` where `L_i^l` is the
/// scalar in lane `i` of `L^l`.
#[derive(Clone, Debug)]
pub struct GaussTableau<const S: usize> {
    pub c: LaneVector<S>,
    pub b: LaneVector<S>,
    pub mu: [LaneVector<S>; S],
    pub nu: [LaneVector<S>; S],
    pub order: u32,
}

impl<const S: usize> GaussTableau<S> {
    /// Entry `mu_{ij}` (zero-based).
    pub fn mu_entry(&self, i: usize, j: usize) -> f64 {
        self.mu[j].lane(i)
    }

    /// Entry `nu_{ij}` (zero-based).
    pub fn nu_entry(&self, i: usize, j: usize) -> f64 {
        self.nu[j].lane(i)
    }
}

/// High-precision side of the construction, kept for residual checks and
/// coefficient dumps.
pub struct HighPrecCoeffs {
    pub precision: u32,
    pub nodes: Vec<Fx>,
    pub b: Vec<Fx>,
    pub a: Vec<Vec<Fx>>,
}

/// Legendre `P_s(x)` and `P_{s-1}(x)` by the three-term recurrence.
fn legendre_pair(s: usize, x: &Fx, scale: u32) -> (Fx, Fx) {
    let one = Fx::from_int(1, scale);
    if s == 0 {
        return (one.clone(), Fx::zero(scale));
    }
    let mut p_prev = one;
    let mut p_cur = x.clone();
    for k in 1..s {
        let k = k as i64;
        let p_next = x
            .mul(&p_cur)
            .mul_int(2 * k + 1)
            .sub(&p_prev.mul_int(k))
            .div_int(k + 1);
        p_prev = p_cur;
        p_cur = p_next;
    }
    (p_cur, p_prev)
}

/// `P_s'(x)` for `x` strictly inside (-1, 1).
fn legendre_derivative(s: usize, x: &Fx, p_s: &Fx, p_sm1: &Fx, scale: u32) -> Fx {
    let one = Fx::from_int(1, scale);
    let denom = x.mul(x).sub(&one);
    x.mul(p_s).sub(p_sm1).mul_int(s as i64).div(&denom)
}

/// Shifted Gauss–Legendre nodes `(1 + x_i)/2` to `precision` decimal digits.
///
/// Newton iteration on the degree-`s` Legendre polynomial, started from the
/// standard cosine estimates; an iteration is converged once
/// `|P_s(x)| < 10^(2 - precision)`.
pub fn gauss_nodes(s: usize, precision: u32) -> Result<Vec<Fx>, TableauError> {
    if s < 1 || s > 16 {
        return Err(TableauError::StageCount(s));
    }
    if precision < 30 {
        return Err(TableauError::Precision(precision));
    }
    let scale = precision + GUARD_DIGITS;
    let tol = Fx::pow10_neg(precision - 2, scale);
    let mut roots = Vec::with_capacity(s);
    for k in 1..=s {
        let guess = (std::f64::consts::PI * (k as f64 - 0.25) / (s as f64 + 0.5)).cos();
        let mut x = Fx::from_f64(guess, scale);
        let mut converged = false;
        for _ in 0..NEWTON_CAP {
            let (p, pm1) = legendre_pair(s, &x, scale);
            if p.abs().lt(&tol) {
                converged = true;
                break;
            }
            let dp = legendre_derivative(s, &x, &p, &pm1, scale);
            x = x.sub(&p.div(&dp));
        }
        if !converged {
            return Err(TableauError::NewtonDivergence {
                index: k,
                cap: NEWTON_CAP,
            });
        }
        roots.push(x);
    }
    roots.sort_by(|a, b| a.cmp_value(b));
    // shift to (0, 1)
    let one = Fx::from_int(1, scale);
    let nodes: Vec<Fx> = roots.iter().map(|x| one.add(x).div_int(2)).collect();
    for w in nodes.windows(2) {
        if w[0].cmp_value(&w[1]) != std::cmp::Ordering::Less {
            return Err(TableauError::InvalidNodes("nodes not distinct".into()));
        }
    }
    Ok(nodes)
}

/// Björck–Pereyra solve of the primal Vandermonde system
/// `sum_j x_j^k a_j = f_k`, `k = 0..n-1`.
fn vandermonde_solve(x: &[Fx], f: &[Fx]) -> Vec<Fx> {
    let n = x.len();
    let mut a = f.to_vec();
    for k in 0..n.saturating_sub(1) {
        for i in (k + 1..n).rev() {
            a[i] = a[i].sub(&x[k].mul(&a[i - 1]));
        }
    }
    for k in (0..n.saturating_sub(1)).rev() {
        for i in k + 1..n {
            a[i] = a[i].div(&x[i].sub(&x[i - k - 1]));
        }
        for i in k..n - 1 {
            a[i] = a[i].sub(&a[i + 1]);
        }
    }
    a
}

/// Collocation weights `b` and matrix `a` for the given nodes, in high
/// precision. The defining conditions are
/// `sum_j b_j c_j^(k-1) = 1/k` and `sum_j a_ij c_j^(k-1) = c_i^k / k`.
pub fn collocation_coeffs(nodes: &[Fx]) -> Result<(Vec<Fx>, Vec<Vec<Fx>>), TableauError> {
    let s = nodes.len();
    let scale = nodes[0].scale();
    let zero = Fx::zero(scale);
    let one = Fx::from_int(1, scale);
    for (idx, n) in nodes.iter().enumerate() {
        if !zero.lt(n) || !n.lt(&one) {
            return Err(TableauError::InvalidNodes(format!(
                "node {idx} outside (0,1)"
            )));
        }
    }
    for i in 0..s {
        for j in i + 1..s {
            if nodes[i] == nodes[j] {
                return Err(TableauError::InvalidNodes("duplicate nodes".into()));
            }
        }
    }

    let rhs_b: Vec<Fx> = (1..=s as i64).map(|k| Fx::from_ratio(1, k, scale)).collect();
    let b = vandermonde_solve(nodes, &rhs_b);

    let mut a = Vec::with_capacity(s);
    for ci in nodes {
        let rhs: Vec<Fx> = (1..=s as u32)
            .map(|k| ci.powi(k).div_int(k as i64))
            .collect();
        a.push(vandermonde_solve(nodes, &rhs));
    }

    // order-condition residuals must sit far below the working scale
    let precision = scale - GUARD_DIGITS;
    let tol = Fx::pow10_neg(precision - 5, scale);
    let res = order_condition_residual_max(nodes, &b, &a);
    if !res.lt(&tol) {
        return Err(TableauError::Residual(format!(
            "max residual {} at precision {}",
            res, precision
        )));
    }
    Ok((b, a))
}

/// Max residual over all order conditions for `(b, a)` on `nodes`.
pub fn order_condition_residual_max(nodes: &[Fx], b: &[Fx], a: &[Vec<Fx>]) -> Fx {
    let s = nodes.len();
    let scale = nodes[0].scale();
    let mut worst = Fx::zero(scale);
    for k in 1..=s as u32 {
        let mut sum = Fx::zero(scale);
        for j in 0..s {
            sum = sum.add(&b[j].mul(&nodes[j].powi(k - 1)));
        }
        let res = sum.sub(&Fx::from_ratio(1, k as i64, scale)).abs();
        if worst.lt(&res) {
            worst = res;
        }
        for i in 0..s {
            let mut sum = Fx::zero(scale);
            for j in 0..s {
                sum = sum.add(&a[i][j].mul(&nodes[j].powi(k - 1)));
            }
            let res = sum.sub(&nodes[i].powi(k).div_int(k as i64)).abs();
            if worst.lt(&res) {
                worst = res;
            }
        }
    }
    worst
}

/// Max residual of the symplecticity condition
/// `b_i a_ij + b_j a_ji - b_i b_j` in high precision.
pub fn symplecticity_residual_max(b: &[Fx], a: &[Vec<Fx>]) -> Fx {
    let s = b.len();
    let scale = b[0].scale();
    let mut worst = Fx::zero(scale);
    for i in 0..s {
        for j in 0..s {
            let res = b[i]
                .mul(&a[i][j])
                .add(&b[j].mul(&a[j][i]))
                .sub(&b[i].mul(&b[j]))
                .abs();
            if worst.lt(&res) {
                worst = res;
            }
        }
    }
    worst
}

/// Symplectically rounded `mu` matrix (row-major, zero-based).
///
/// For `i < j` the strictly-lower entry `mu_ji` is the correctly rounded
/// double of the exact ratio `a_ji / b_i`; the upper entry is then derived
/// in working precision as `1 - mu_ji`, and the diagonal is exactly `1/2`.
pub fn mu_from(a: &[Vec<Fx>], b: &[Fx]) -> Result<Vec<Vec<f64>>, TableauError> {
    let s = b.len();
    let mut mu = vec![vec![0.0f64; s]; s];
    for i in 0..s {
        mu[i][i] = 0.5;
        for j in i + 1..s {
            // lower-triangle source: mu_ji = a_ji / b_i, correctly rounded
            let lower = ratio_to_f64(a[j][i].mant(), b[i].mant());
            let upper = 1.0 - lower;
            if upper + lower != 1.0 {
                return Err(TableauError::Validation(format!(
                    "mu[{i}][{j}] + mu[{j}][{i}] != 1 after rounding"
                )));
            }
            mu[j][i] = lower;
            mu[i][j] = upper;
        }
    }
    Ok(mu)
}

/// Working-precision `nu` matrix (row-major, zero-based).
///
/// Row `i` solves `sum_j w_j (c_j - 1)^(k-1) = c_i^k / k` in high precision,
/// after which `nu_ij = w_j / b_j` is correctly rounded to double. These
/// coefficients evaluate the previous step's collocation polynomial at the
/// new stage times, so the extrapolated guess is exact for polynomial
/// solutions of degree <= s.
pub fn nu_from(nodes: &[Fx]) -> Result<Vec<Vec<f64>>, TableauError> {
    let s = nodes.len();
    let scale = nodes[0].scale();
    for i in 0..s {
        for j in i + 1..s {
            if nodes[i] == nodes[j] {
                return Err(TableauError::InvalidNodes("duplicate nodes".into()));
            }
        }
    }
    let rhs_b: Vec<Fx> = (1..=s as i64).map(|k| Fx::from_ratio(1, k, scale)).collect();
    let b = vandermonde_solve(nodes, &rhs_b);

    let one = Fx::from_int(1, scale);
    let shifted: Vec<Fx> = nodes.iter().map(|c| c.sub(&one)).collect();
    let mut nu = vec![vec![0.0f64; s]; s];
    for i in 0..s {
        let rhs: Vec<Fx> = (1..=s as u32)
            .map(|k| nodes[i].powi(k).div_int(k as i64))
            .collect();
        let w = vandermonde_solve(&shifted, &rhs);
        for j in 0..s {
            nu[i][j] = ratio_to_f64(w[j].mant(), b[j].mant());
        }
    }
    Ok(nu)
}

/// High-precision node/weight/matrix set for stage count `s`.
pub fn high_prec_coeffs(s: usize, precision: u32) -> Result<HighPrecCoeffs, TableauError> {
    let nodes = gauss_nodes(s, precision)?;
    let (b, a) = collocation_coeffs(&nodes)?;
    Ok(HighPrecCoeffs {
        precision,
        nodes,
        b,
        a,
    })
}

/// Build the validated working-precision tableau for `S` stages.
///
/// `S` in {2, 4, 8}; the 8-stage instance is the order-16 configuration the
/// integrator is named after.
pub fn build_tableau<const S: usize>() -> Result<GaussTableau<S>, TableauError> {
    build_tableau_with_precision::<S>(60)
}

pub fn build_tableau_with_precision<const S: usize>(
    precision: u32,
) -> Result<GaussTableau<S>, TableauError> {
    if !matches!(S, 2 | 4 | 8) {
        return Err(TableauError::StageCount(S));
    }
    let hp = high_prec_coeffs(S, precision)?;
    let mu = mu_from(&hp.a, &hp.b)?;
    let nu = nu_from(&hp.nodes)?;

    let mut c = [0.0; S];
    let mut b = [0.0; S];
    for i in 0..S {
        c[i] = hp.nodes[i].to_f64();
        b[i] = hp.b[i].to_f64();
    }

    let mut mu_cols = [LaneVector::zero(); S];
    let mut nu_cols = [LaneVector::zero(); S];
    for j in 0..S {
        let mut mcol = [0.0; S];
        let mut ncol = [0.0; S];
        for i in 0..S {
            mcol[i] = mu[i][j];
            ncol[i] = nu[i][j];
        }
        mu_cols[j] = LaneVector::from_array(mcol);
        nu_cols[j] = LaneVector::from_array(ncol);
    }

    let tableau = GaussTableau {
        c: LaneVector::from_array(c),
        b: LaneVector::from_array(b),
        mu: mu_cols,
        nu: nu_cols,
        order: 2 * S as u32,
    };
    validate(&tableau)?;
    Ok(tableau)
}

fn validate<const S: usize>(t: &GaussTableau<S>) -> Result<(), TableauError> {
    let eps = f64::EPSILON;
    for i in 0..S {
        if t.mu_entry(i, i) != 0.5 {
            return Err(TableauError::Validation(format!("mu[{i}][{i}] != 0.5")));
        }
        for j in i + 1..S {
            if t.mu_entry(i, j) + t.mu_entry(j, i) != 1.0 {
                return Err(TableauError::Validation(format!(
                    "mu[{i}][{j}] + mu[{j}][{i}] != 1"
                )));
            }
        }
    }
    for i in 0..S {
        if i + 1 < S && t.c.lane(i) >= t.c.lane(i + 1) {
            return Err(TableauError::Validation("nodes not increasing".into()));
        }
        let mirrored = t.c.lane(i) + t.c.lane(S - 1 - i);
        if (mirrored - 1.0).abs() > 2.0 * eps {
            return Err(TableauError::Validation(format!(
                "node symmetry violated at {i}"
            )));
        }
        let bdiff = (t.b.lane(i) - t.b.lane(S - 1 - i)).abs();
        if bdiff > 2.0 * eps * t.b.lane(i).abs() {
            return Err(TableauError::Validation(format!(
                "weight symmetry violated at {i}"
            )));
        }
    }
    if (t.b.sum() - 1.0).abs() > 4.0 * eps {
        return Err(TableauError::Validation("weights do not sum to 1".into()));
    }
    Ok(())
}

/// The order-16, 8-stage tableau, built once on first use.
pub fn irkgl16() -> &'static GaussTableau<8> {
    static TABLEAU: OnceLock<GaussTableau<8>> = OnceLock::new();
    TABLEAU.get_or_init(|| build_tableau::<8>().expect("8-stage Gauss tableau construction"))
}

/// Plain-text coefficient dump: sections `#c`, `#b`, `#mu`, `#nu`, one
/// value per line at 25 significant digits. Nodes and weights come from the
/// high-precision side; `mu` and `nu` are the working-precision values
/// (row-major).
pub fn write_coefficient_dump<const S: usize>(
    out: &mut dyn Write,
    tableau: &GaussTableau<S>,
    hp: &HighPrecCoeffs,
) -> std::io::Result<()> {
    const DIGITS: usize = 25;
    writeln!(out, "#c")?;
    for v in &hp.nodes {
        writeln!(out, "{}", v.to_sci(DIGITS))?;
    }
    writeln!(out, "#b")?;
    for v in &hp.b {
        writeln!(out, "{}", v.to_sci(DIGITS))?;
    }
    writeln!(out, "#mu")?;
    for i in 0..S {
        for j in 0..S {
            writeln!(out, "{}", Fx::from_f64(tableau.mu_entry(i, j), 40).to_sci(DIGITS))?;
        }
    }
    writeln!(out, "#nu")?;
    for i in 0..S {
        for j in 0..S {
            writeln!(out, "{}", Fx::from_f64(tableau.nu_entry(i, j), 40).to_sci(DIGITS))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt3(scale: u32) -> Fx {
        Fx::from_int(3, scale).sqrt()
    }

    #[test]
    fn single_stage_is_midpoint_rule() {
        let nodes = gauss_nodes(1, 40).unwrap();
        assert_eq!(nodes[0].to_f64(), 0.5);
        let (b, a) = collocation_coeffs(&nodes).unwrap();
        assert_eq!(b[0].to_f64(), 1.0);
        assert_eq!(a[0][0].to_f64(), 0.5);
        let nu = nu_from(&nodes).unwrap();
        assert_eq!(nu[0][0], 0.5);
    }

    #[test]
    fn two_stage_nodes_match_closed_form() {
        let scale = 60 + GUARD_DIGITS;
        let nodes = gauss_nodes(2, 60).unwrap();
        let half = Fx::from_ratio(1, 2, scale);
        let offset = sqrt3(scale).div_int(6);
        let lo = half.sub(&offset);
        let hi = half.add(&offset);
        let tol = Fx::pow10_neg(55, scale);
        assert!(nodes[0].sub(&lo).abs().lt(&tol));
        assert!(nodes[1].sub(&hi).abs().lt(&tol));
    }

    #[test]
    fn two_stage_collocation_matrix_matches_closed_form() {
        let scale = 60 + GUARD_DIGITS;
        let nodes = gauss_nodes(2, 60).unwrap();
        let (b, a) = collocation_coeffs(&nodes).unwrap();
        let quarter = Fx::from_ratio(1, 4, scale);
        let off = sqrt3(scale).div_int(6);
        let tol = Fx::pow10_neg(54, scale);
        assert!(b[0].sub(&Fx::from_ratio(1, 2, scale)).abs().lt(&tol));
        assert!(b[1].sub(&Fx::from_ratio(1, 2, scale)).abs().lt(&tol));
        assert!(a[0][0].sub(&quarter).abs().lt(&tol));
        assert!(a[0][1].sub(&quarter.sub(&off)).abs().lt(&tol));
        assert!(a[1][0].sub(&quarter.add(&off)).abs().lt(&tol));
        assert!(a[1][1].sub(&quarter).abs().lt(&tol));
    }

    #[test]
    fn eight_stage_nodes_match_bisection_oracle() {
        // independent root finder: sign-change bisection on P_8 in 50-digit
        // arithmetic, no Newton steps involved
        let precision = 50;
        let scale = precision + GUARD_DIGITS;
        let n = 8;
        let mut brackets = Vec::new();
        let grid = value_grid(scale, 200);
        for w in grid.windows(2) {
            let (p0, _) = legendre_pair(n, &w[0], scale);
            let (p1, _) = legendre_pair(n, &w[1], scale);
            if p0.is_negative() != p1.is_negative() {
                brackets.push((w[0].clone(), w[1].clone()));
            }
        }
        assert_eq!(brackets.len(), 8, "expected 8 sign changes for P_8");
        let mut oracle = Vec::new();
        for (mut lo, mut hi) in brackets {
            for _ in 0..180 {
                let mid = lo.add(&hi).div_int(2);
                let (pm, _) = legendre_pair(n, &mid, scale);
                let (pl, _) = legendre_pair(n, &lo, scale);
                if pm.is_negative() == pl.is_negative() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let one = Fx::from_int(1, scale);
            oracle.push(one.add(&lo.add(&hi).div_int(2)).div_int(2));
        }
        oracle.sort_by(|a, b| a.cmp_value(b));

        let nodes = gauss_nodes(8, precision).unwrap();
        let tol = Fx::pow10_neg(30, scale);
        for (node, orc) in nodes.iter().zip(oracle.iter()) {
            assert!(
                node.sub(orc).abs().lt(&tol),
                "node {} vs oracle {}",
                node,
                orc
            );
        }
    }

    fn value_grid(scale: u32, n: i64) -> Vec<Fx> {
        // grid over [-1, 1]
        (0..=n)
            .map(|i| Fx::from_ratio(2 * i, n, scale).sub(&Fx::from_int(1, scale)))
            .collect()
    }

    #[test]
    fn eight_stage_symplecticity_residual_in_high_precision() {
        let hp = high_prec_coeffs(8, 50).unwrap();
        let res = symplecticity_residual_max(&hp.b, &hp.a);
        assert!(
            res.lt(&Fx::pow10_neg(25, res.scale())),
            "residual {}",
            res
        );
    }

    #[test]
    fn mu_rounding_identities() {
        // s = 2 closed form: mu_21 = 1/2 + sqrt(3)/3 correctly rounded
        let scale = 60 + GUARD_DIGITS;
        let hp = high_prec_coeffs(2, 60).unwrap();
        let mu = mu_from(&hp.a, &hp.b).unwrap();
        let expected = Fx::from_ratio(1, 2, scale)
            .add(&sqrt3(scale).div_int(3))
            .to_f64();
        assert_eq!(mu[1][0], expected);
        assert_eq!(mu[0][1], 1.0 - expected);
        assert_eq!(mu[0][1] + mu[1][0], 1.0);
        assert_eq!(mu[0][0], 0.5);

        // s = 8: all 28 pairs bitwise
        let hp8 = high_prec_coeffs(8, 60).unwrap();
        let mu8 = mu_from(&hp8.a, &hp8.b).unwrap();
        for i in 0..8 {
            assert_eq!(mu8[i][i], 0.5);
            for j in i + 1..8 {
                assert_eq!(mu8[i][j] + mu8[j][i], 1.0, "pair ({i},{j})");
            }
        }
    }

    #[test]
    fn nu_single_stage_value() {
        let nodes = gauss_nodes(1, 40).unwrap();
        let nu = nu_from(&nodes).unwrap();
        assert_eq!(nu[0][0], 0.5);
    }

    #[test]
    fn nu_extrapolation_exact_on_linear_data() {
        // previous step of y' = kappa (y linear in t): L_j = h b_j kappa;
        // the extrapolated guess must equal y_prev + h c_i kappa
        let tab = build_tableau::<2>().unwrap();
        let kappa = 0.7;
        let h = 0.31;
        let y_prev = 1.234;
        for i in 0..2 {
            let mut guess = y_prev;
            for j in 0..2 {
                guess += tab.nu_entry(i, j) * (h * tab.b.lane(j) * kappa);
            }
            let exact = y_prev + h * tab.c.lane(i) * kappa;
            assert!(
                (guess - exact).abs() <= 1e-15 * exact.abs(),
                "stage {i}: {guess} vs {exact}"
            );
        }
    }

    #[test]
    fn nu_extrapolation_exact_on_degree_8_polynomial() {
        // y(t) = sum t^k, k <= 8 has y' of degree 7; the previous step's
        // collocation polynomial reproduces it exactly, so the nu guess must
        // match the true stage values up to rounding
        // step-sized h: the nu rows have norms up to ~2e5, so extrapolation
        // amplifies rounding of the L values; at integrator-like step sizes
        // the amplified error stays below 1e-13 of the state
        let tab = build_tableau::<8>().unwrap();
        let h = 0.05;
        let coeffs: [f64; 9] = [0.3, -1.1, 0.7, 0.9, -0.4, 0.2, -0.15, 0.05, 0.33];
        let eval = |t: f64| -> f64 {
            let mut acc = 0.0;
            for c in coeffs.iter().rev() {
                acc = acc * t + c;
            }
            acc
        };
        let deriv = |t: f64| -> f64 {
            let mut d = 0.0;
            for (k, c) in coeffs.iter().enumerate().skip(1) {
                d += (k as f64) * c * t.powi(k as i32 - 1);
            }
            d
        };
        // previous step over [t0-h, t0]
        let t0 = 0.4;
        let mut l_prev = [0.0f64; 8];
        for j in 0..8 {
            let tj = (t0 - h) + h * tab.c.lane(j);
            l_prev[j] = h * tab.b.lane(j) * deriv(tj);
        }
        for i in 0..8 {
            let mut guess = eval(t0);
            for j in 0..8 {
                guess += tab.nu_entry(i, j) * l_prev[j];
            }
            let exact = eval(t0 + h * tab.c.lane(i));
            assert!(
                (guess - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                "stage {i}: {guess} vs {exact}"
            );
        }
    }

    #[test]
    fn build_tableau_properties() {
        let t8 = build_tableau::<8>().unwrap();
        assert_eq!(t8.order, 16);
        assert!((t8.b.sum() - 1.0).abs() <= 4.0 * f64::EPSILON);

        let t2 = build_tableau::<2>().unwrap();
        assert!((t2.c.lane(0) + t2.c.lane(1) - 1.0).abs() <= 2.0 * f64::EPSILON);

        let t4 = build_tableau::<4>().unwrap();
        assert_eq!(t4.order, 8);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(gauss_nodes(0, 40), Err(TableauError::StageCount(0))));
        assert!(matches!(gauss_nodes(17, 40), Err(TableauError::StageCount(17))));
        assert!(matches!(gauss_nodes(4, 10), Err(TableauError::Precision(10))));
        // duplicate nodes refused
        let scale = 50;
        let dup = vec![
            Fx::from_ratio(1, 3, scale),
            Fx::from_ratio(1, 3, scale),
        ];
        assert!(collocation_coeffs(&dup).is_err());
        assert!(nu_from(&dup).is_err());
    }

    #[test]
    fn coefficient_dump_round_trips_f64_values() {
        let tab = irkgl16();
        let hp = high_prec_coeffs(8, 60).unwrap();
        let mut buf = Vec::new();
        write_coefficient_dump(&mut buf, tab, &hp).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut section = "";
        let mut mu_vals = Vec::new();
        for line in text.lines() {
            if line.starts_with('#') {
                section = line;
            } else if section == "#mu" {
                mu_vals.push(line.parse::<f64>().unwrap());
            }
        }
        assert_eq!(mu_vals.len(), 64);
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(mu_vals[i * 8 + j], tab.mu_entry(i, j), "mu[{i}][{j}]");
            }
        }
    }
}
