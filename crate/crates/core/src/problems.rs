//! Benchmark problems: Hénon–Heiles, the 6-body outer solar system, and a
//! charged particle near a Schwarzschild black hole.
//!
//! Right-hand sides are generic over the [`Real`] scalar interface, so the
//! identical definition runs on plain `f64` (one stage at a time) and on
//! lane vectors (all stages in lockstep). All three right-hand sides are
//! branch-free in the state, which is what makes the lane evaluation agree
//! bitwise with per-stage scalar evaluation.

use crate::lanes::Real;
use crate::splitting::{Flow, FlowSet};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown problem '{0}'")]
    Unknown(String),
}

/// ODE system over the abstract scalar interface.
///
/// `rhs` evaluated with lane-vector arguments performs one evaluation per
/// lane; systems declaring second-order structure `dq/dt = v, dv/dt =
/// g(q, t)` expose the acceleration separately for the partitioned
/// iteration.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs<T: Real>(&self, t: T, y: &[T], dy: &mut [T]);

    /// `Some(d)` when components `0..d` are positions and `d..2d` their
    /// velocities.
    fn second_order_dim(&self) -> Option<usize> {
        None
    }

    /// Acceleration `g(q, t)` for systems with second-order structure.
    fn accel<T: Real>(&self, _t: T, _q: &[T], _g: &mut [T]) {
        panic!("problem does not declare second-order structure");
    }

    fn hamiltonian(&self, _y: &[f64]) -> Option<f64> {
        None
    }

    /// Per-step sanity check; returning false aborts the run as divergent.
    fn state_ok(&self, _y: &[f64]) -> bool {
        true
    }
}

/// Bisection to full double precision: runs until the bracket collapses to
/// adjacent floats. `f` must change sign on `[lo, hi]`.
pub fn bisect_root(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64, ProblemError> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(ProblemError::Config(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    let lo_sign = flo.signum();
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

// ---------------------------------------------------------------------------
// Hénon–Heiles
// ---------------------------------------------------------------------------

/// Perturbed Hénon–Heiles system on state `(q1, q2, p1, p2)`:
///
/// ```text
/// dq/dt = p,
/// dp1/dt = -q1 - 2 (lambda + xi sin t) q1 q2,
/// dp2/dt = -q2 - (lambda + xi sin t) (q1^2 - q2^2).
/// ```
///
/// `xi = 0` is the classical autonomous system with Hamiltonian
/// `H = (p1^2 + p2^2)/2 + (q1^2 + q2^2)/2 + lambda (q1^2 q2 - q2^3/3)`.
#[derive(Clone, Copy, Debug)]
pub struct HenonHeiles {
    pub lambda: f64,
    pub xi: f64,
    y0: [f64; 4],
}

/// Target energy of the standard initial condition.
pub const HENON_HEILES_ENERGY: f64 = 1.0 / 12.0;

pub fn henon_heiles(xi: f64, lambda: f64) -> Result<HenonHeiles, ProblemError> {
    // q1 = 0, q2 = 0.3, p2 = 0.2; p1 > 0 fixed by H = 1/12 at t = 0
    let mut prob = HenonHeiles {
        lambda,
        xi,
        y0: [0.0, 0.3, 0.0, 0.2],
    };
    let energy = |p1: f64| {
        let y = [0.0, 0.3, p1, 0.2];
        autonomous_hh_energy(lambda, &y) - HENON_HEILES_ENERGY
    };
    if energy(0.0) > 0.0 {
        return Err(ProblemError::Config(
            "no real p1 satisfies H = 1/12 for these parameters".into(),
        ));
    }
    let p1 = bisect_root(energy, 0.0, 2.0)?;
    prob.y0[2] = p1;
    Ok(prob)
}

fn autonomous_hh_energy(lambda: f64, y: &[f64]) -> f64 {
    let (q1, q2, p1, p2) = (y[0], y[1], y[2], y[3]);
    0.5 * (p1 * p1 + p2 * p2)
        + 0.5 * (q1 * q1 + q2 * q2)
        + lambda * (q1 * q1 * q2 - q2 * q2 * q2 / 3.0)
}

impl HenonHeiles {
    pub fn initial_state(&self) -> [f64; 4] {
        self.y0
    }

    #[inline(always)]
    fn aux<T: Real>(&self, t: T) -> T {
        if self.xi == 0.0 {
            T::from_f64(self.lambda)
        } else {
            T::from_f64(self.lambda) + T::from_f64(self.xi) * t.sin()
        }
    }

    /// Kinetic/potential sub-flows (autonomous case only).
    pub fn flow_set(&self) -> Option<FlowSet> {
        if self.xi != 0.0 {
            return None;
        }
        let me = *self;
        Some(FlowSet::new(vec![
            Flow::new("drift", |y: &mut [f64], t: f64| {
                y[0] += t * y[2];
                y[1] += t * y[3];
            }),
            Flow::new("kick", move |y: &mut [f64], t: f64| {
                let mut g = [0.0; 2];
                let q = [y[0], y[1]];
                me.accel(0.0, &q, &mut g);
                y[2] += t * g[0];
                y[3] += t * g[1];
            }),
        ]))
    }
}

impl OdeSystem for HenonHeiles {
    fn dim(&self) -> usize {
        4
    }

    fn rhs<T: Real>(&self, t: T, y: &[T], dy: &mut [T]) {
        let aux = self.aux(t);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -y[0] - T::from_f64(2.0) * aux * y[0] * y[1];
        dy[3] = -y[1] - aux * (y[0] * y[0] - y[1] * y[1]);
    }

    fn second_order_dim(&self) -> Option<usize> {
        Some(2)
    }

    fn accel<T: Real>(&self, t: T, q: &[T], g: &mut [T]) {
        let aux = self.aux(t);
        g[0] = -q[0] - T::from_f64(2.0) * aux * q[0] * q[1];
        g[1] = -q[1] - aux * (q[0] * q[0] - q[1] * q[1]);
    }

    fn hamiltonian(&self, y: &[f64]) -> Option<f64> {
        (self.xi == 0.0).then(|| autonomous_hh_energy(self.lambda, y))
    }
}

// ---------------------------------------------------------------------------
// Outer solar system
// ---------------------------------------------------------------------------

const SOLAR_DATA: &str = include_str!("../data/solar_system.txt");
pub const N_BODIES: usize = 6;

/// Sun + Jupiter, Saturn, Uranus, Neptune, Pluto under mutual Newtonian
/// gravity. State layout: positions `q` as a (3, 6) block (coordinate index
/// fastest), then velocities, `D = 36`.
#[derive(Clone, Debug)]
pub struct OuterSolarSystem {
    pub g: f64,
    pub masses: [f64; N_BODIES],
    pub names: Vec<String>,
    y0: [f64; 36],
}

pub fn outer_solar_system() -> Result<OuterSolarSystem, ProblemError> {
    let mut g = None;
    let mut names = Vec::new();
    let mut masses = Vec::new();
    let mut state = Vec::new();
    for line in SOLAR_DATA.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(idx) = rest.find("G =") {
                let tail = &rest[idx + 3..];
                let num = tail.split_whitespace().next().unwrap_or("");
                g = Some(num.parse::<f64>().map_err(|e| {
                    ProblemError::Config(format!("bad G in data header: {e}"))
                })?);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(ProblemError::Config(format!(
                "expected 8 fields per body, got {}",
                fields.len()
            )));
        }
        names.push(fields[0].to_string());
        let nums: Result<Vec<f64>, _> = fields[1..].iter().map(|s| s.parse::<f64>()).collect();
        let nums = nums.map_err(|e| ProblemError::Config(format!("bad number: {e}")))?;
        masses.push(nums[0]);
        state.push(nums[1..7].to_vec());
    }
    if names.len() != N_BODIES {
        return Err(ProblemError::Config(format!(
            "expected {N_BODIES} bodies, found {}",
            names.len()
        )));
    }
    let g = g.ok_or_else(|| ProblemError::Config("missing G in data header".into()))?;

    // re-center: barycenter at the origin and at rest
    let total_mass: f64 = masses.iter().sum();
    let mut q_cm = [0.0; 3];
    let mut v_cm = [0.0; 3];
    for (m, s) in masses.iter().zip(state.iter()) {
        for k in 0..3 {
            q_cm[k] += m * s[k];
            v_cm[k] += m * s[3 + k];
        }
    }
    for k in 0..3 {
        q_cm[k] /= total_mass;
        v_cm[k] /= total_mass;
    }
    let mut y0 = [0.0; 36];
    for (i, s) in state.iter().enumerate() {
        for k in 0..3 {
            y0[3 * i + k] = s[k] - q_cm[k];
            y0[18 + 3 * i + k] = s[3 + k] - v_cm[k];
        }
    }
    Ok(OuterSolarSystem {
        g,
        masses: masses.try_into().expect("body count checked"),
        names,
        y0,
    })
}

impl OuterSolarSystem {
    pub fn initial_state(&self) -> [f64; 36] {
        self.y0
    }

    /// Shape of the position (or velocity) block: coordinate index first.
    pub fn block_shape() -> [usize; 2] {
        [3, N_BODIES]
    }

    /// Replace masses (used to reduce to a two-body sub-case in tests).
    pub fn with_masses(mut self, masses: [f64; N_BODIES]) -> Self {
        self.masses = masses;
        self
    }

    pub fn total_momentum(&self, y: &[f64]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for i in 0..N_BODIES {
            for k in 0..3 {
                p[k] += self.masses[i] * y[18 + 3 * i + k];
            }
        }
        p
    }

    pub fn total_angular_momentum(&self, y: &[f64]) -> [f64; 3] {
        let mut l = [0.0; 3];
        for i in 0..N_BODIES {
            let q = &y[3 * i..3 * i + 3];
            let v = &y[18 + 3 * i..18 + 3 * i + 3];
            let m = self.masses[i];
            l[0] += m * (q[1] * v[2] - q[2] * v[1]);
            l[1] += m * (q[2] * v[0] - q[0] * v[2]);
            l[2] += m * (q[0] * v[1] - q[1] * v[0]);
        }
        l
    }

    pub fn flow_set(&self) -> Option<FlowSet> {
        let me = self.clone();
        Some(FlowSet::new(vec![
            Flow::new("drift", |y: &mut [f64], t: f64| {
                for l in 0..18 {
                    y[l] += t * y[18 + l];
                }
            }),
            Flow::new("kick", move |y: &mut [f64], t: f64| {
                let mut g = [0.0; 18];
                me.accel(0.0, &y[..18], &mut g);
                for l in 0..18 {
                    y[18 + l] += t * g[l];
                }
            }),
        ]))
    }
}

impl OdeSystem for OuterSolarSystem {
    fn dim(&self) -> usize {
        36
    }

    fn rhs<T: Real>(&self, t: T, y: &[T], dy: &mut [T]) {
        let (q, v) = y.split_at(18);
        for l in 0..18 {
            dy[l] = v[l];
        }
        let (_, acc) = dy.split_at_mut(18);
        self.accel(t, q, acc);
    }

    fn second_order_dim(&self) -> Option<usize> {
        Some(18)
    }

    fn accel<T: Real>(&self, _t: T, q: &[T], g: &mut [T]) {
        let zero = T::from_f64(0.0);
        for gi in g.iter_mut() {
            *gi = zero;
        }
        let one = T::from_f64(1.0);
        for i in 0..N_BODIES {
            for j in i + 1..N_BODIES {
                let dx = q[3 * j] - q[3 * i];
                let dy_ = q[3 * j + 1] - q[3 * i + 1];
                let dz = q[3 * j + 2] - q[3 * i + 2];
                let r2 = dx * dx + dy_ * dy_ + dz * dz;
                let inv_r3 = one / (r2 * r2.sqrt());
                let mj = T::from_f64(self.masses[j]);
                let mi = T::from_f64(self.masses[i]);
                let cx = dx * inv_r3;
                let cy = dy_ * inv_r3;
                let cz = dz * inv_r3;
                g[3 * i] = g[3 * i] + mj * cx;
                g[3 * i + 1] = g[3 * i + 1] + mj * cy;
                g[3 * i + 2] = g[3 * i + 2] + mj * cz;
                g[3 * j] = g[3 * j] - mi * cx;
                g[3 * j + 1] = g[3 * j + 1] - mi * cy;
                g[3 * j + 2] = g[3 * j + 2] - mi * cz;
            }
        }
        let gc = T::from_f64(self.g);
        for gi in g.iter_mut() {
            *gi = *gi * gc;
        }
    }

    fn hamiltonian(&self, y: &[f64]) -> Option<f64> {
        let mut kinetic = 0.0;
        for i in 0..N_BODIES {
            let v = &y[18 + 3 * i..18 + 3 * i + 3];
            kinetic += 0.5 * self.masses[i] * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        }
        let mut potential = 0.0;
        for i in 0..N_BODIES {
            for j in i + 1..N_BODIES {
                let dx = y[3 * j] - y[3 * i];
                let dy_ = y[3 * j + 1] - y[3 * i + 1];
                let dz = y[3 * j + 2] - y[3 * i + 2];
                let r = (dx * dx + dy_ * dy_ + dz * dz).sqrt();
                potential -= self.g * self.masses[i] * self.masses[j] / r;
            }
        }
        Some(kinetic + potential)
    }
}

// ---------------------------------------------------------------------------
// Schwarzschild black hole
// ---------------------------------------------------------------------------

/// Charged particle near a Schwarzschild black hole with an external
/// magnetic field, on polar state `(r, theta, p_r, p_theta)`:
///
/// ```text
/// H = (1 - 2/r) p_r^2 / 2 - E^2 / (2 (1 - 2/r)) + p_theta^2 / (2 r^2)
///     + (L - (beta/2) r^2 sin^2 theta)^2 / (2 r^2 sin^2 theta)
/// ```
///
/// The right-hand side is the canonical system `dq/dt = dH/dp,
/// dp/dt = -dH/dq`, written out analytically.
#[derive(Clone, Copy, Debug)]
pub struct Schwarzschild {
    pub e_total: f64,
    pub l_z: f64,
    pub beta: f64,
    y0: [f64; 4],
}

/// Target energy of the standard initial condition.
pub const SCHWARZSCHILD_ENERGY: f64 = -0.5;

pub fn schwarzschild(e_total: f64, l_z: f64, beta: f64) -> Result<Schwarzschild, ProblemError> {
    // theta = pi/2, p_r = 0, r = 11; p_theta > 0 fixed by H = -1/2
    let mut prob = Schwarzschild {
        e_total,
        l_z,
        beta,
        y0: [11.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0],
    };
    let energy = |ptheta: f64| {
        let y = [11.0, std::f64::consts::FRAC_PI_2, 0.0, ptheta];
        prob.energy(&y) - SCHWARZSCHILD_ENERGY
    };
    if energy(0.0) > 0.0 {
        return Err(ProblemError::Config(
            "no real p_theta satisfies H = -1/2 for these parameters".into(),
        ));
    }
    let ptheta = bisect_root(energy, 0.0, 10.0)?;
    prob.y0[3] = ptheta;
    Ok(prob)
}

/// The parameter set used throughout the experiments.
pub fn schwarzschild_default() -> Result<Schwarzschild, ProblemError> {
    schwarzschild(0.995, 4.6, 8.9e-4)
}

impl Schwarzschild {
    pub fn initial_state(&self) -> [f64; 4] {
        self.y0
    }

    fn energy(&self, y: &[f64]) -> f64 {
        let (r, th, pr, pth) = (y[0], y[1], y[2], y[3]);
        let u = 1.0 - 2.0 / r;
        let s = th.sin();
        let w = self.l_z - 0.5 * self.beta * r * r * s * s;
        0.5 * u * pr * pr - 0.5 * self.e_total * self.e_total / u
            + pth * pth / (2.0 * r * r)
            + w * w / (2.0 * r * r * s * s)
    }

    /// Polar-coordinate sub-Hamiltonians `(H_A, H_B, H_C)` with
    /// `H_A + H_B + H_C = H`.
    pub fn sub_hamiltonians(&self, y: &[f64]) -> [f64; 3] {
        let (r, th, pr, pth) = (y[0], y[1], y[2], y[3]);
        let u = 1.0 - 2.0 / r;
        let s = th.sin();
        let w = self.l_z - 0.5 * self.beta * r * r * s * s;
        let ha = w * w / (2.0 * r * r * s * s) - 0.5 * self.e_total * self.e_total / u;
        let hb = 0.5 * (pr * pr + pth * pth / (r * r));
        let hc = -pr * pr / r;
        [ha, hb, hc]
    }

    /// `H_A` in the Cartesian-like variables `(x, y, p_x, p_y)`.
    pub fn hbar_a(&self, x: f64, y: f64) -> f64 {
        let z = y * y;
        let r = (x * x + z).sqrt();
        let w = self.l_z - 0.5 * self.beta * z;
        let u = 1.0 - 2.0 / r;
        w * w / (2.0 * z) - 0.5 * self.e_total * self.e_total / u
    }

    /// Gradient of `H_A` in Cartesian-like variables, via the intermediate
    /// quantities `z, r, w, u, W, U, R, Z`.
    pub fn hbar_a_gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let z = y * y;
        let r = (x * x + z).sqrt();
        let w = self.l_z - 0.5 * self.beta * z;
        let u = 1.0 - 2.0 / r;
        let w_cap = -w / z;
        let u_cap = -self.e_total * self.e_total / (2.0 * u * u);
        let r_cap = u_cap / (r * r * r);
        let z_cap = r_cap + (w_cap - self.beta) * w_cap / 2.0;
        [-2.0 * x * r_cap, -2.0 * y * z_cap]
    }

    /// Three closed-form sub-flows over `(x, y, p_x, p_y)`: the momentum
    /// kick of `H_A`, the free drift of `H_B`, and the radial update of
    /// `H_C` in the `(nu, mu)` variables.
    pub fn flow_set(&self) -> FlowSet {
        let me = *self;
        let flow_a = Flow::new("kick-a", move |s: &mut [f64], t: f64| {
            let grad = me.hbar_a_gradient(s[0], s[1]);
            s[2] -= t * grad[0];
            s[3] -= t * grad[1];
        });
        let flow_b = Flow::new("drift-b", |s: &mut [f64], t: f64| {
            s[0] += t * s[2];
            s[1] += t * s[3];
        });
        let flow_c = Flow::new("radial-c", |s: &mut [f64], t: f64| {
            if t == 0.0 {
                return;
            }
            let (x, y, px, py) = (s[0], s[1], s[2], s[3]);
            // fused products keep the conserved -p_r^2/r reproducible to a
            // few ulp through the reconstruction
            let r2 = x.mul_add(x, y * y);
            let r = r2.sqrt();
            let nu = x.mul_add(px, y * py);
            // the exact flow fixes states with p_r = 0
            if (nu / r).abs() < 1e-30 * (1.0 + r.abs()) {
                return;
            }
            let c = x / r;
            let sn = y / r;
            let ptheta = x.mul_add(py, -(y * px));
            let mu = (nu * nu) / (r2 * r);
            let nu_new = (-3.0 * t).mul_add(mu, nu);
            let kappa = mu * nu_new;
            let mut pr_new = kappa.cbrt();
            // one Newton polish: the cube-root error would otherwise enter
            // the conserved quantity p_r^3/nu tripled
            pr_new -= (pr_new * pr_new).mul_add(pr_new, -kappa) / (3.0 * (pr_new * pr_new));
            let r_new = nu_new / pr_new;
            let pt_over_r = ptheta / r_new;
            s[0] = r_new * c;
            s[1] = r_new * sn;
            s[2] = c.mul_add(pr_new, -(sn * pt_over_r));
            s[3] = sn.mul_add(pr_new, c * pt_over_r);
        });
        FlowSet::new(vec![flow_a, flow_b, flow_c])
    }
}

impl OdeSystem for Schwarzschild {
    fn dim(&self) -> usize {
        4
    }

    fn rhs<T: Real>(&self, _t: T, y: &[T], dy: &mut [T]) {
        let one = T::from_f64(1.0);
        let two = T::from_f64(2.0);
        let e2 = T::from_f64(self.e_total * self.e_total);
        let lz = T::from_f64(self.l_z);
        let beta = T::from_f64(self.beta);

        let r = y[0];
        let th = y[1];
        let pr = y[2];
        let pth = y[3];

        let r2 = r * r;
        let r3 = r2 * r;
        let u = one - two / r;
        let sn = th.sin();
        let cs = th.cos();
        let s2 = sn * sn;
        let w = lz - T::from_f64(0.5) * beta * r2 * s2;

        dy[0] = u * pr;
        dy[1] = pth / r2;
        dy[2] = -(pr * pr / r2 + e2 / (u * u) / r2 - pth * pth / r3 - w * w / (r3 * s2)
            - beta * w / r);
        dy[3] = cs * (w * w / (r2 * s2 * sn) + beta * w / sn);
    }

    fn hamiltonian(&self, y: &[f64]) -> Option<f64> {
        Some(self.energy(y))
    }

    fn state_ok(&self, y: &[f64]) -> bool {
        y[0] > 2.0
    }
}

/// Canonical transformation from polar `(r, theta, p_r, p_theta)` to the
/// Cartesian-like variables `(x, y, p_x, p_y)`.
pub fn polar_to_cart(y: &[f64]) -> Result<[f64; 4], ProblemError> {
    let (r, th, pr, pth) = (y[0], y[1], y[2], y[3]);
    if r <= 0.0 {
        return Err(ProblemError::Config("polar_to_cart needs r > 0".into()));
    }
    let (sn, cs) = (th.sin(), th.cos());
    Ok([
        r * cs,
        r * sn,
        cs * pr - sn * pth / r,
        sn * pr + cs * pth / r,
    ])
}

/// Inverse of [`polar_to_cart`].
pub fn cart_to_polar(s: &[f64]) -> Result<[f64; 4], ProblemError> {
    let (x, y, px, py) = (s[0], s[1], s[2], s[3]);
    let r = (x * x + y * y).sqrt();
    if r == 0.0 {
        return Err(ProblemError::Config("cart_to_polar needs (x,y) != 0".into()));
    }
    let th = y.atan2(x);
    Ok([r, th, (x * px + y * py) / r, x * py - y * px])
}

// ---------------------------------------------------------------------------
// registry
// ---------------------------------------------------------------------------

/// Closed set of benchmark problems, dispatchable by id.
#[derive(Clone, Debug)]
pub enum Problem {
    HenonHeiles(HenonHeiles),
    OuterSolarSystem(OuterSolarSystem),
    Schwarzschild(Schwarzschild),
}

pub const PROBLEM_IDS: [&str; 3] = ["henon-heiles", "solar-system", "schwarzschild"];

impl Problem {
    /// Build a problem from its registry id and optional numeric parameters
    /// (`xi`, `lambda` for Hénon–Heiles; `e`, `l`, `beta` for Schwarzschild).
    pub fn by_id(id: &str, params: &BTreeMap<String, f64>) -> Result<Self, ProblemError> {
        let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        match id {
            "henon-heiles" => Ok(Problem::HenonHeiles(henon_heiles(
                get("xi", 0.0),
                get("lambda", 1.0),
            )?)),
            "solar-system" => Ok(Problem::OuterSolarSystem(outer_solar_system()?)),
            "schwarzschild" => Ok(Problem::Schwarzschild(schwarzschild(
                get("e", 0.995),
                get("l", 4.6),
                get("beta", 8.9e-4),
            )?)),
            other => Err(ProblemError::Unknown(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Problem::HenonHeiles(_) => "henon-heiles",
            Problem::OuterSolarSystem(_) => "solar-system",
            Problem::Schwarzschild(_) => "schwarzschild",
        }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        match self {
            Problem::HenonHeiles(p) => p.initial_state().to_vec(),
            Problem::OuterSolarSystem(p) => p.initial_state().to_vec(),
            Problem::Schwarzschild(p) => p.initial_state().to_vec(),
        }
    }

    /// Exact sub-flows for the explicit integrators, when available.
    pub fn flow_set(&self) -> Option<FlowSet> {
        match self {
            Problem::HenonHeiles(p) => p.flow_set(),
            Problem::OuterSolarSystem(p) => p.flow_set(),
            Problem::Schwarzschild(p) => Some(p.flow_set()),
        }
    }

    /// Coordinates the explicit integrators evolve (Cartesian-like for
    /// Schwarzschild, the problem state elsewhere).
    pub fn to_flow_coords(&self, y: &[f64]) -> Result<Vec<f64>, ProblemError> {
        match self {
            Problem::Schwarzschild(_) => Ok(polar_to_cart(y)?.to_vec()),
            _ => Ok(y.to_vec()),
        }
    }

    pub fn from_flow_coords(&self, y: &[f64]) -> Result<Vec<f64>, ProblemError> {
        match self {
            Problem::Schwarzschild(_) => Ok(cart_to_polar(y)?.to_vec()),
            _ => Ok(y.to_vec()),
        }
    }
}

impl OdeSystem for Problem {
    fn dim(&self) -> usize {
        match self {
            Problem::HenonHeiles(p) => p.dim(),
            Problem::OuterSolarSystem(p) => p.dim(),
            Problem::Schwarzschild(p) => p.dim(),
        }
    }

    fn rhs<T: Real>(&self, t: T, y: &[T], dy: &mut [T]) {
        match self {
            Problem::HenonHeiles(p) => p.rhs(t, y, dy),
            Problem::OuterSolarSystem(p) => p.rhs(t, y, dy),
            Problem::Schwarzschild(p) => p.rhs(t, y, dy),
        }
    }

    fn second_order_dim(&self) -> Option<usize> {
        match self {
            Problem::HenonHeiles(p) => p.second_order_dim(),
            Problem::OuterSolarSystem(p) => p.second_order_dim(),
            Problem::Schwarzschild(p) => p.second_order_dim(),
        }
    }

    fn accel<T: Real>(&self, t: T, q: &[T], g: &mut [T]) {
        match self {
            Problem::HenonHeiles(p) => p.accel(t, q, g),
            Problem::OuterSolarSystem(p) => p.accel(t, q, g),
            Problem::Schwarzschild(p) => p.accel(t, q, g),
        }
    }

    fn hamiltonian(&self, y: &[f64]) -> Option<f64> {
        match self {
            Problem::HenonHeiles(p) => p.hamiltonian(y),
            Problem::OuterSolarSystem(p) => p.hamiltonian(y),
            Problem::Schwarzschild(p) => p.hamiltonian(y),
        }
    }

    fn state_ok(&self, y: &[f64]) -> bool {
        match self {
            Problem::HenonHeiles(p) => p.state_ok(y),
            Problem::OuterSolarSystem(p) => p.state_ok(y),
            Problem::Schwarzschild(p) => p.state_ok(y),
        }
    }
}
