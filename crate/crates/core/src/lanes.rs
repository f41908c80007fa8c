//! Fixed-width lane vectors and the structure-of-arrays state container.
//!
//! A [`LaneVector<S>`] holds `S` double-precision scalars that are processed
//! elementwise; with `S` known at compile time the compiler lowers the
//! elementwise loops onto the host's vector registers (8 lanes fill one
//! AVX-512 register, 4 lanes one AVX register). A [`StateArray<S>`] stores
//! one lane vector per state component, so the `S` stage copies of each
//! component sit contiguously in memory.
//!
//! Every elementwise operation is defined to be bitwise identical to
//! performing the same scalar operation per lane, in lane order. Reductions
//! use a fixed left-to-right order. Nothing here reassociates floating-point
//! arithmetic, which is what makes a lane run reproducible against a scalar
//! stage-by-stage run of the same formulas.

use std::ops::{Add, Div, Index, Mul, Neg, Sub};

/// Scalar interface shared by `f64` and [`LaneVector`].
///
/// Right-hand sides written against this trait evaluate identically on plain
/// scalars and on lane vectors (one ODE stage per lane), as long as they are
/// branch-free in the state.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn mul_add(self, a: Self, b: Self) -> Self;
}

impl Real for f64 {
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline(always)]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline(always)]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline(always)]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline(always)]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline(always)]
    fn mul_add(self, a: Self, b: Self) -> Self {
        f64::mul_add(self, a, b)
    }
}

/// `S` double-precision scalars processed elementwise.
#[derive(Clone, Copy, Debug, PartialEq)]
#[repr(transparent)]
pub struct LaneVector<const S: usize>([f64; S]);

impl<const S: usize> LaneVector<S> {
    pub const LANES: usize = S;

    /// Every lane equal to `x`.
    #[inline(always)]
    pub fn broadcast(x: f64) -> Self {
        Self([x; S])
    }

    #[inline(always)]
    pub fn zero() -> Self {
        Self([0.0; S])
    }

    #[inline(always)]
    pub fn from_array(lanes: [f64; S]) -> Self {
        Self(lanes)
    }

    #[inline(always)]
    pub fn as_array(&self) -> &[f64; S] {
        &self.0
    }

    #[inline(always)]
    pub fn lane(&self, i: usize) -> f64 {
        self.0[i]
    }

    #[inline(always)]
    pub fn set_lane(&mut self, i: usize, x: f64) {
        self.0[i] = x;
    }

    /// Multiply every lane by the scalar `x`.
    #[inline(always)]
    pub fn scale(self, x: f64) -> Self {
        let mut out = [0.0; S];
        for i in 0..S {
            out[i] = self.0[i] * x;
        }
        Self(out)
    }

    /// Add the scalar `x` to every lane.
    #[inline(always)]
    pub fn add_scalar(self, x: f64) -> Self {
        let mut out = [0.0; S];
        for i in 0..S {
            out[i] = self.0[i] + x;
        }
        Self(out)
    }

    /// Left-to-right sequential sum `v_1 + v_2 + … + v_S`.
    ///
    /// The reduction order is fixed so repeated runs are bitwise identical;
    /// no pairwise or otherwise reassociated summation is used.
    #[inline(always)]
    pub fn sum(&self) -> f64 {
        let mut acc = self.0[0];
        for i in 1..S {
            acc = acc + self.0[i];
        }
        acc
    }

    /// `max(|v_1|, …, |v_S|)`; NaN in any lane yields NaN.
    #[inline(always)]
    pub fn max_abs(&self) -> f64 {
        let mut acc = self.0[0].abs();
        for i in 1..S {
            acc = nan_propagating_max(acc, self.0[i].abs());
        }
        acc
    }

    /// True if every lane is a finite number.
    #[inline(always)]
    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        for i in 0..S {
            ok &= self.0[i].is_finite();
        }
        ok
    }

    #[inline(always)]
    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = [0.0; S];
        for i in 0..S {
            out[i] = f(self.0[i]);
        }
        Self(out)
    }
}

/// Max of two values that propagates NaN (unlike `f64::max`).
#[inline(always)]
pub fn nan_propagating_max(a: f64, b: f64) -> f64 {
    if b > a || b.is_nan() {
        b
    } else {
        a
    }
}

macro_rules! lane_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<const S: usize> $trait for LaneVector<S> {
            type Output = Self;
            #[inline(always)]
            fn $method(self, rhs: Self) -> Self {
                let mut out = [0.0; S];
                for i in 0..S {
                    out[i] = self.0[i] $op rhs.0[i];
                }
                Self(out)
            }
        }
    };
}

lane_binop!(Add, add, +);
lane_binop!(Sub, sub, -);
lane_binop!(Mul, mul, *);
lane_binop!(Div, div, /);

impl<const S: usize> Neg for LaneVector<S> {
    type Output = Self;
    #[inline(always)]
    fn neg(self) -> Self {
        let mut out = [0.0; S];
        for i in 0..S {
            out[i] = -self.0[i];
        }
        Self(out)
    }
}

impl<const S: usize> Index<usize> for LaneVector<S> {
    type Output = f64;
    #[inline(always)]
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<const S: usize> Real for LaneVector<S> {
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        Self::broadcast(x)
    }
    // Elementary functions fall back to per-lane scalar libm calls; the
    // arithmetic operators are the ones that need to hit vector registers.
    #[inline(always)]
    fn sin(self) -> Self {
        self.map(f64::sin)
    }
    #[inline(always)]
    fn cos(self) -> Self {
        self.map(f64::cos)
    }
    #[inline(always)]
    fn sqrt(self) -> Self {
        let mut out = [0.0; S];
        for i in 0..S {
            out[i] = self.0[i].sqrt();
        }
        Self(out)
    }
    #[inline(always)]
    fn abs(self) -> Self {
        let mut out = [0.0; S];
        for i in 0..S {
            out[i] = self.0[i].abs();
        }
        Self(out)
    }
    #[inline(always)]
    fn powi(self, n: i32) -> Self {
        self.map(|x| x.powi(n))
    }
    #[inline(always)]
    fn mul_add(self, a: Self, b: Self) -> Self {
        let mut out = [0.0; S];
        for i in 0..S {
            out[i] = self.0[i].mul_add(a.0[i], b.0[i]);
        }
        Self(out)
    }
}

/// Structure-of-arrays state: one lane vector per component, stored
/// contiguously lane-major (the `S` stage values of component `l` are
/// adjacent in memory).
#[derive(Clone, Debug, PartialEq)]
pub struct StateArray<const S: usize> {
    data: Vec<LaneVector<S>>,
    shape: Option<Vec<usize>>,
}

impl<const S: usize> StateArray<S> {
    /// A zero-initialized array of `dim` components.
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![LaneVector::zero(); dim],
            shape: None,
        }
    }

    /// Every lane of component `l` equals `y[l]`.
    pub fn broadcast_state(y: &[f64]) -> Self {
        Self {
            data: y.iter().map(|&v| LaneVector::broadcast(v)).collect(),
            shape: None,
        }
    }

    /// Attach a multi-dimensional extent; its product must equal the flat
    /// component count.
    pub fn with_shape(mut self, shape: Vec<usize>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            self.data.len(),
            "shape product must equal component count"
        );
        self.shape = Some(shape);
        self
    }

    #[inline(always)]
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn shape(&self) -> Option<&[usize]> {
        self.shape.as_deref()
    }

    #[inline(always)]
    pub fn get(&self, l: usize) -> LaneVector<S> {
        self.data[l]
    }

    #[inline(always)]
    pub fn set(&mut self, l: usize, v: LaneVector<S>) {
        self.data[l] = v;
    }

    /// Flat index of a multi-dimensional index (first axis fastest, matching
    /// column-major layout of a (k, i) body-coordinate array).
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let shape = self.shape.as_ref().expect("state array has no shape");
        assert_eq!(idx.len(), shape.len(), "index rank mismatch");
        let mut flat = 0;
        let mut stride = 1;
        for (i, extent) in idx.iter().zip(shape.iter()) {
            assert!(i < extent, "multi-index out of range");
            flat += i * stride;
            stride *= extent;
        }
        flat
    }

    pub fn get_md(&self, idx: &[usize]) -> LaneVector<S> {
        self.get(self.flat_index(idx))
    }

    pub fn set_md(&mut self, idx: &[usize], v: LaneVector<S>) {
        let flat = self.flat_index(idx);
        self.set(flat, v);
    }

    #[inline(always)]
    pub fn as_slice(&self) -> &[LaneVector<S>] {
        &self.data
    }

    #[inline(always)]
    pub fn as_mut_slice(&mut self) -> &mut [LaneVector<S>] {
        &mut self.data
    }

    /// Copy lane `lane` of every component into `out`.
    pub fn extract_lane(&self, lane: usize, out: &mut [f64]) {
        assert_eq!(out.len(), self.data.len());
        for (dst, v) in out.iter_mut().zip(self.data.iter()) {
            *dst = v.lane(lane);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_fills_all_lanes() {
        let z = LaneVector::<8>::broadcast(0.0);
        assert_eq!(z.as_array(), &[0.0; 8]);
        let v = LaneVector::<4>::broadcast(1.5);
        assert_eq!(v.as_array(), &[1.5; 4]);
    }

    #[test]
    fn broadcast_plus_scaled_nodes_reproduces_stage_times() {
        // t_{n-1} + h*c, lane by lane
        let t = 2.25;
        let h = 0.125;
        let c = LaneVector::<4>::from_array([0.1, 0.3, 0.7, 0.9]);
        let stage_times = c.scale(h).add_scalar(t);
        for i in 0..4 {
            assert_eq!(stage_times.lane(i), t + h * c.lane(i));
        }
    }

    #[test]
    fn elementwise_product_matches_componentwise() {
        let a = LaneVector::<4>::from_array([1.0, 2.0, 3.0, 4.0]);
        let b = LaneVector::<4>::from_array([5.0, 6.0, 7.0, 8.0]);
        assert_eq!((a * b).as_array(), &[5.0, 12.0, 21.0, 32.0]);
    }

    #[test]
    fn sin_hits_exact_values() {
        let v = LaneVector::<2>::from_array([0.0, std::f64::consts::FRAC_PI_2]);
        let s = v.sin();
        assert_eq!(s.lane(0), 0.0);
        assert_eq!(s.lane(1), 1.0);
    }

    #[test]
    fn fma_matches_scalar_fma_per_lane() {
        let a = LaneVector::<4>::from_array([1.1, -2.2, 3.3, 0.5]);
        let b = LaneVector::<4>::from_array([0.9, 0.8, -0.7, 2.0]);
        let c = LaneVector::<4>::from_array([0.1, 0.2, 0.3, -0.4]);
        let r = a.mul_add(b, c);
        for i in 0..4 {
            assert_eq!(r.lane(i), a.lane(i).mul_add(b.lane(i), c.lane(i)));
        }
    }

    #[test]
    fn sum_is_sequential_left_to_right() {
        let ones = LaneVector::<8>::broadcast(1.0);
        assert_eq!(ones.sum(), 8.0);
        assert_eq!(LaneVector::<8>::zero().sum(), 0.0);
        // order-sensitive case: result must equal the explicit fold
        let v = LaneVector::<4>::from_array([1.0e16, 1.0, -1.0e16, 1.0]);
        let expected = ((1.0e16 + 1.0) + -1.0e16) + 1.0;
        assert_eq!(v.sum(), expected);
    }

    #[test]
    fn max_abs_examples() {
        assert_eq!(LaneVector::<3>::from_array([-3.0, 1.0, 2.0]).max_abs(), 3.0);
        assert_eq!(LaneVector::<3>::zero().max_abs(), 0.0);
        assert_eq!(
            LaneVector::<2>::from_array([-1.0e-16, 5.0e-17]).max_abs(),
            1.0e-16
        );
        assert!(LaneVector::<3>::from_array([1.0, f64::NAN, 2.0])
            .max_abs()
            .is_nan());
    }

    #[test]
    fn state_array_get_set_round_trip() {
        let mut y = StateArray::<4>::zeros(5);
        for l in 0..5 {
            assert_eq!(y.get(l), LaneVector::zero());
        }
        let v = LaneVector::from_array([1.0, 2.0, 3.0, 4.0]);
        y.set(3, v);
        assert_eq!(y.get(3), v);
    }

    #[test]
    fn multi_index_agrees_with_flat_index() {
        let mut y = StateArray::<2>::zeros(12).with_shape(vec![3, 4]);
        for k in 0..3 {
            for i in 0..4 {
                let v = LaneVector::from_array([(k * 10 + i) as f64, 0.5]);
                y.set_md(&[k, i], v);
                assert_eq!(y.get(k + 3 * i), v);
                assert_eq!(y.get_md(&[k, i]), v);
            }
        }
    }

    #[test]
    #[should_panic(expected = "out of bounds")]
    fn out_of_range_component_panics() {
        let y = StateArray::<2>::zeros(3);
        let _ = y.get(3);
    }

    #[test]
    fn storage_is_lane_major_and_contiguous() {
        // raw round trip through the underlying memory
        let mut y = StateArray::<4>::zeros(3);
        for l in 0..3 {
            y.set(
                l,
                LaneVector::from_array([
                    l as f64,
                    l as f64 + 0.25,
                    l as f64 + 0.5,
                    l as f64 + 0.75,
                ]),
            );
        }
        let base = y.as_slice().as_ptr() as *const f64;
        for l in 0..3 {
            for lane in 0..4 {
                let raw = unsafe { *base.add(l * 4 + lane) };
                assert_eq!(raw, y.get(l).lane(lane));
            }
        }
    }

    #[test]
    fn lane_function_evaluation_matches_scalar_per_lane_bitwise() {
        // a composite branch-free expression evaluated via the Real trait
        fn expr<T: Real>(x: T, y: T) -> T {
            (x * y + T::from_f64(0.5) * x.sin()).sqrt().abs() / (y * y + T::from_f64(1.0))
        }
        let xs = [0.3, 1.7, 2.9, 0.01];
        let ys = [1.0, -0.2, 0.8, 3.5];
        let lx = LaneVector::<4>::from_array(xs);
        let ly = LaneVector::<4>::from_array(ys);
        let lane_result = expr(lx, ly);
        for i in 0..4 {
            let scalar = expr(xs[i], ys[i]);
            assert!(
                lane_result.lane(i) == scalar || (lane_result.lane(i).is_nan() && scalar.is_nan()),
                "lane {i}: {} != {}",
                lane_result.lane(i),
                scalar
            );
        }
    }
}
