//! Explicit symplectic integrators built from exact sub-flows.
//!
//! The building block is the Strang step `A(h/2) B(h) A(h/2)` (generalized
//! palindromically for three or more parts). Higher order comes either from
//! symmetric compositions of the Strang step with palindromic weights
//! `gamma_1..gamma_s`, or from drift/kick coefficient sequences `(a, b)` of
//! Runge–Kutta–Nyström type that start and end with the A flow. Named
//! schemes live in plain-text data files compiled into the binary and are
//! checked (palindromy, consistency sums) when the registry loads; their
//! empirical convergence order is exercised by the test suite so a corrupted
//! table fails loudly rather than silently degrading accuracy.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("scheme '{name}': {reason}")]
    Invalid { name: String, reason: String },
    #[error("unknown scheme '{0}'")]
    Unknown(String),
}

fn invalid(name: &str, reason: impl Into<String>) -> SchemeError {
    SchemeError::Invalid {
        name: name.to_string(),
        reason: reason.into(),
    }
}

/// Palindromic stage weights for a symmetric composition of a time-symmetric
/// second-order base step.
#[derive(Clone, Debug)]
pub struct CompositionScheme {
    pub name: String,
    pub order: u32,
    pub gammas: Vec<f64>,
}

impl CompositionScheme {
    pub fn stages(&self) -> usize {
        self.gammas.len()
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let s = self.gammas.len();
        if s == 0 {
            return Err(invalid(&self.name, "empty gamma list"));
        }
        for j in 0..s {
            if self.gammas[j] != self.gammas[s - 1 - j] {
                return Err(invalid(&self.name, format!("gamma not palindromic at {j}")));
            }
        }
        let sum: f64 = self.gammas.iter().sum();
        if (sum - 1.0).abs() > 1e-15 * s as f64 {
            return Err(invalid(&self.name, format!("gamma sum {sum} != 1")));
        }
        Ok(())
    }
}

/// Drift/kick coefficients `a_1..a_{s+1}`, `b_1..b_s`; the step applies
/// `A(a_1 h), B(b_1 h), …, B(b_s h), A(a_{s+1} h)`.
#[derive(Clone, Debug)]
pub struct ABSplittingScheme {
    pub name: String,
    pub order: u32,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ABSplittingScheme {
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let s = self.b.len();
        if s == 0 || self.a.len() != s + 1 {
            return Err(invalid(
                &self.name,
                format!("expected {} drift and {} kick coefficients", s + 1, s),
            ));
        }
        let sum_a: f64 = self.a.iter().sum();
        let sum_b: f64 = self.b.iter().sum();
        if (sum_a - 1.0).abs() > 1e-15 * (s + 1) as f64 {
            return Err(invalid(&self.name, format!("a sum {sum_a} != 1")));
        }
        if (sum_b - 1.0).abs() > 1e-15 * s as f64 {
            return Err(invalid(&self.name, format!("b sum {sum_b} != 1")));
        }
        // all registry schemes are time-symmetric
        for j in 0..=s {
            if self.a[j] != self.a[s - j] {
                return Err(invalid(&self.name, format!("a not palindromic at {j}")));
            }
        }
        for j in 0..s {
            if self.b[j] != self.b[s - 1 - j] {
                return Err(invalid(&self.name, format!("b not palindromic at {j}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum Scheme {
    Composition(CompositionScheme),
    AB(ABSplittingScheme),
}

impl Scheme {
    pub fn name(&self) -> &str {
        match self {
            Scheme::Composition(c) => &c.name,
            Scheme::AB(s) => &s.name,
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            Scheme::Composition(c) => c.order,
            Scheme::AB(s) => s.order,
        }
    }

    pub fn stages(&self) -> usize {
        match self {
            Scheme::Composition(c) => c.stages(),
            Scheme::AB(s) => s.stages(),
        }
    }

    /// Drift/kick schemes need exactly two sub-flows; compositions work with
    /// any multi-part Strang base.
    pub fn requires_two_flows(&self) -> bool {
        matches!(self, Scheme::AB(_))
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        match self {
            Scheme::Composition(c) => c.validate(),
            Scheme::AB(s) => s.validate(),
        }
    }
}

/// One exact sub-flow map: advances `state` by time `t` under its
/// sub-Hamiltonian.
pub struct Flow {
    pub label: String,
    map: Box<dyn Fn(&mut [f64], f64) + Send + Sync>,
}

impl Flow {
    pub fn new(
        label: impl Into<String>,
        map: impl Fn(&mut [f64], f64) + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            map: Box::new(map),
        }
    }

    #[inline]
    pub fn apply(&self, state: &mut [f64], t: f64) {
        (self.map)(state, t);
    }
}

/// Ordered collection of exact sub-flows.
pub struct FlowSet {
    flows: Vec<Flow>,
}

impl FlowSet {
    pub fn new(flows: Vec<Flow>) -> Self {
        assert!(flows.len() >= 2, "need at least two sub-flows");
        Self { flows }
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.flows.iter().map(|f| f.label.as_str()).collect()
    }

    #[inline]
    pub fn apply(&self, idx: usize, state: &mut [f64], t: f64) {
        self.flows[idx].apply(state, t);
    }
}

/// Strang step `A(h/2) ∘ B(h) ∘ A(h/2)` for a two-part flow set
/// (rightmost flow applied first).
pub fn strang_step(flows: &FlowSet, h: f64, state: &mut [f64]) {
    assert_eq!(flows.len(), 2, "Strang step needs exactly two flows");
    let half = 0.5 * h;
    flows.apply(0, state, half);
    flows.apply(1, state, h);
    flows.apply(0, state, half);
}

/// Generalized palindromic Strang step for `m >= 2` parts: halves of parts
/// `1..m-1` outward, a full step of the last part innermost. Reduces to
/// [`strang_step`] at `m = 2`.
pub fn multi_part_step(flows: &FlowSet, h: f64, state: &mut [f64]) {
    let m = flows.len();
    assert!(m >= 2, "need at least two flows");
    let half = 0.5 * h;
    for p in 0..m - 1 {
        flows.apply(p, state, half);
    }
    flows.apply(m - 1, state, h);
    for p in (0..m - 1).rev() {
        flows.apply(p, state, half);
    }
}

/// Apply a symmetric composition: the base step with scaled sub-steps
/// `gamma_1 h, …, gamma_s h`, in order.
pub fn composition_step(
    scheme: &CompositionScheme,
    base_step: &mut dyn FnMut(f64, &mut [f64]),
    h: f64,
    state: &mut [f64],
) {
    for &g in &scheme.gammas {
        base_step(g * h, state);
    }
}

/// Alternating drift/kick application starting and ending with flow A
/// (index 0 of the flow set).
pub fn ab_splitting_step(scheme: &ABSplittingScheme, flows: &FlowSet, h: f64, state: &mut [f64]) {
    assert_eq!(flows.len(), 2, "drift/kick step needs exactly two flows");
    let s = scheme.b.len();
    for j in 0..s {
        flows.apply(0, state, scheme.a[j] * h);
        flows.apply(1, state, scheme.b[j] * h);
    }
    flows.apply(0, state, scheme.a[s] * h);
}

/// Rewrite composition weights as a drift/kick sequence:
/// `a_1 = gamma_1/2`, `a_j = (gamma_{j-1} + gamma_j)/2`, `a_{s+1} =
/// gamma_s/2`, `b_j = gamma_j`.
pub fn gamma_to_ab(gammas: &[f64]) -> ABSplittingScheme {
    assert!(!gammas.is_empty());
    let s = gammas.len();
    let mut a = Vec::with_capacity(s + 1);
    a.push(gammas[0] / 2.0);
    for j in 1..s {
        a.push((gammas[j - 1] + gammas[j]) / 2.0);
    }
    a.push(gammas[s - 1] / 2.0);
    ABSplittingScheme {
        name: String::new(),
        order: 0,
        a,
        b: gammas.to_vec(),
    }
}

/// Composition of multi-part Strang stages with consecutive applications of
/// the outermost flow merged across stage boundaries. For two parts this is
/// exactly the drift/kick form of the composition; for more parts only the
/// outermost flow fuses.
pub fn fused_composition_step(gammas: &[f64], flows: &FlowSet, h: f64, state: &mut [f64]) {
    let m = flows.len();
    let s = gammas.len();
    assert!(m >= 2 && s >= 1);
    flows.apply(0, state, (gammas[0] / 2.0) * h);
    for j in 0..s {
        let g = gammas[j];
        let half = 0.5 * g * h;
        for p in 1..m - 1 {
            flows.apply(p, state, half);
        }
        flows.apply(m - 1, state, g * h);
        for p in (1..m - 1).rev() {
            flows.apply(p, state, half);
        }
        let t_next = if j + 1 < s {
            ((gammas[j] + gammas[j + 1]) / 2.0) * h
        } else {
            (gammas[s - 1] / 2.0) * h
        };
        flows.apply(0, state, t_next);
    }
}

/// Parse a coefficient file: `# name`, `# order N`, `# type gamma|ab`
/// headers, then one decimal per line (for `ab`: the `s+1` drift values
/// followed by the `s` kick values).
pub fn parse_scheme_file(text: &str) -> Result<Scheme, SchemeError> {
    let mut name = None;
    let mut order = None;
    let mut kind = None;
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("order") {
                order = Some(
                    v.trim()
                        .parse::<u32>()
                        .map_err(|e| invalid(rest, format!("bad order: {e}")))?,
                );
            } else if let Some(v) = rest.strip_prefix("type") {
                kind = Some(v.trim().to_string());
            } else if name.is_none() {
                name = Some(rest.to_string());
            }
        } else {
            values.push(
                line.parse::<f64>()
                    .map_err(|e| invalid(name.as_deref().unwrap_or("?"), format!("bad value: {e}")))?,
            );
        }
    }
    let name = name.ok_or_else(|| invalid("?", "missing name header"))?;
    let order = order.ok_or_else(|| invalid(&name, "missing order header"))?;
    let kind = kind.ok_or_else(|| invalid(&name, "missing type header"))?;
    let scheme = match kind.as_str() {
        "gamma" => Scheme::Composition(CompositionScheme {
            name: name.clone(),
            order,
            gammas: values,
        }),
        "ab" => {
            if values.len() % 2 != 1 {
                return Err(invalid(&name, "ab file must hold 2s+1 values"));
            }
            let s = (values.len() - 1) / 2;
            Scheme::AB(ABSplittingScheme {
                name: name.clone(),
                order,
                a: values[..s + 1].to_vec(),
                b: values[s + 1..].to_vec(),
            })
        }
        other => return Err(invalid(&name, format!("unknown type '{other}'"))),
    };
    scheme.validate()?;
    Ok(scheme)
}

const SCHEME_SOURCES: &[&str] = &[
    include_str!("../data/schemes/strang.txt"),
    include_str!("../data/schemes/suz90.txt"),
    include_str!("../data/schemes/ss05-6.txt"),
    include_str!("../data/schemes/ss05-8.txt"),
    include_str!("../data/schemes/ss05-10.txt"),
    include_str!("../data/schemes/bm02.txt"),
    include_str!("../data/schemes/bce22.txt"),
];

/// All named schemes, parsed and validated.
pub fn scheme_registry() -> Result<Vec<Scheme>, SchemeError> {
    SCHEME_SOURCES.iter().map(|s| parse_scheme_file(s)).collect()
}

/// Look up one scheme by its registry name.
pub fn find_scheme(name: &str) -> Result<Scheme, SchemeError> {
    scheme_registry()?
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| SchemeError::Unknown(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Kinetic/potential split of H = p^2/2 + q^2/2 on state (q, p).
    fn harmonic_flows() -> FlowSet {
        FlowSet::new(vec![
            Flow::new("drift", |y: &mut [f64], t: f64| {
                y[0] += t * y[1];
            }),
            Flow::new("kick", |y: &mut [f64], t: f64| {
                y[1] -= t * y[0];
            }),
        ])
    }

    fn harmonic_energy(y: &[f64]) -> f64 {
        0.5 * (y[1] * y[1] + y[0] * y[0])
    }

    #[test]
    fn strang_zero_step_is_identity() {
        let flows = harmonic_flows();
        let mut y = [1.25, -0.5];
        strang_step(&flows, 0.0, &mut y);
        assert_eq!(y, [1.25, -0.5]);
    }

    #[test]
    fn strang_hand_computed_step() {
        let flows = harmonic_flows();
        let mut y = [1.0, 0.0];
        strang_step(&flows, 0.1, &mut y);
        assert!((y[0] - 0.995).abs() < 1e-15);
        assert!((y[1] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn strang_local_energy_error_scales_cubically() {
        let flows = harmonic_flows();
        let y0 = [0.9, 0.4];
        let e0 = harmonic_energy(&y0);
        let mut errs = Vec::new();
        for &h in &[0.1, 0.05, 0.025] {
            let mut y = y0;
            strang_step(&flows, h, &mut y);
            errs.push((harmonic_energy(&y) - e0).abs());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (ratio.log2() - 3.0).abs() < 0.4,
                "local error ratio {ratio} not ~ h^3"
            );
        }
    }

    #[test]
    fn multi_part_two_flows_matches_strang_bitwise() {
        let flows = harmonic_flows();
        let mut a = [0.7, -0.3];
        let mut b = a;
        strang_step(&flows, 0.37, &mut a);
        multi_part_step(&flows, 0.37, &mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn multi_part_with_zero_generators_is_identity() {
        let flows = FlowSet::new(vec![
            Flow::new("a", |_: &mut [f64], _| {}),
            Flow::new("b", |_: &mut [f64], _| {}),
            Flow::new("c", |_: &mut [f64], _| {}),
        ]);
        let mut y = [2.0, 3.0, 4.0];
        multi_part_step(&flows, 0.5, &mut y);
        assert_eq!(y, [2.0, 3.0, 4.0]);
    }

    #[test]
    fn trivial_composition_is_one_base_step() {
        let scheme = CompositionScheme {
            name: "single".into(),
            order: 2,
            gammas: vec![1.0],
        };
        let flows = harmonic_flows();
        let mut a = [1.0, 0.2];
        let mut b = a;
        composition_step(
            &scheme,
            &mut |hh, y| strang_step(&flows, hh, y),
            0.2,
            &mut a,
        );
        strang_step(&flows, 0.2, &mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn gamma_to_ab_trivial_and_telescoping() {
        let ab = gamma_to_ab(&[1.0]);
        assert_eq!(ab.a, vec![0.5, 0.5]);
        assert_eq!(ab.b, vec![1.0]);

        let g1 = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
        let suzuki = [g1, g1, 1.0 - 4.0 * g1, g1, g1];
        let ab = gamma_to_ab(&suzuki);
        let sum_a: f64 = ab.a.iter().sum();
        let sum_b: f64 = ab.b.iter().sum();
        let sum_g: f64 = suzuki.iter().sum();
        assert!((sum_a - sum_g).abs() < 1e-15);
        assert!((sum_b - sum_g).abs() < 1e-15);
        // a_3 = (gamma_2 + gamma_3)/2 by direct arithmetic
        assert_eq!(ab.a[2], (suzuki[1] + suzuki[2]) / 2.0);
    }

    #[test]
    fn ab_form_of_single_strang_stage_matches_bitwise() {
        let flows = harmonic_flows();
        let ab = gamma_to_ab(&[1.0]);
        let mut x = [0.8, -0.1];
        let mut y = x;
        strang_step(&flows, 0.21, &mut x);
        ab_splitting_step(&ab, &flows, 0.21, &mut y);
        assert_eq!(x, y);
    }

    #[test]
    fn ab_form_of_suzuki_matches_composition_within_ulps() {
        let flows = harmonic_flows();
        let g1 = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
        let gammas = vec![g1, g1, 1.0 - 4.0 * g1, g1, g1];
        let scheme = CompositionScheme {
            name: "suzuki".into(),
            order: 4,
            gammas: gammas.clone(),
        };
        let ab = gamma_to_ab(&gammas);
        let h = 0.19;
        let mut via_comp = [1.1, 0.35];
        let mut via_ab = via_comp;
        composition_step(
            &scheme,
            &mut |hh, y| strang_step(&flows, hh, y),
            h,
            &mut via_comp,
        );
        ab_splitting_step(&ab, &flows, h, &mut via_ab);
        for i in 0..2 {
            let ulps = 4.0 * f64::EPSILON * via_comp[i].abs();
            assert!(
                (via_comp[i] - via_ab[i]).abs() <= ulps,
                "component {i}: {} vs {}",
                via_comp[i],
                via_ab[i]
            );
        }
    }

    #[test]
    fn fused_composition_matches_unfused_within_ulps() {
        let flows = harmonic_flows();
        let g1 = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
        let gammas = vec![g1, g1, 1.0 - 4.0 * g1, g1, g1];
        let scheme = CompositionScheme {
            name: "suzuki".into(),
            order: 4,
            gammas: gammas.clone(),
        };
        let h = 0.13;
        let mut fused = [0.4, 0.9];
        let mut unfused = fused;
        fused_composition_step(&gammas, &flows, h, &mut fused);
        composition_step(
            &scheme,
            &mut |hh, y| strang_step(&flows, hh, y),
            h,
            &mut unfused,
        );
        for i in 0..2 {
            assert!(
                (fused[i] - unfused[i]).abs() <= 4.0 * f64::EPSILON * unfused[i].abs().max(1.0),
                "component {i}"
            );
        }
    }

    #[test]
    fn registry_contains_the_seven_named_schemes() {
        let reg = scheme_registry().unwrap();
        let mut names: Vec<&str> = reg.iter().map(|s| s.name()).collect();
        names.sort_unstable();
        assert_eq!(
            names,
            vec!["bce22", "bm02", "ss05-10", "ss05-6", "ss05-8", "strang", "suz90"]
        );
        for s in &reg {
            s.validate().unwrap();
        }
        // advertised composition orders / stage counts
        let lookup = |n: &str| reg.iter().find(|s| s.name() == n).unwrap();
        assert_eq!((lookup("strang").order(), lookup("strang").stages()), (2, 1));
        assert_eq!((lookup("suz90").order(), lookup("suz90").stages()), (4, 5));
        assert_eq!((lookup("ss05-6").order(), lookup("ss05-6").stages()), (6, 13));
        assert_eq!((lookup("ss05-8").order(), lookup("ss05-8").stages()), (8, 21));
        assert_eq!(
            (lookup("ss05-10").order(), lookup("ss05-10").stages()),
            (10, 35)
        );
        assert_eq!((lookup("bm02").order(), lookup("bm02").stages()), (6, 14));
        assert_eq!((lookup("bce22").order(), lookup("bce22").stages()), (8, 19));
    }

    #[test]
    fn parser_rejects_malformed_files() {
        assert!(parse_scheme_file("# x\n# order 2\n# type gamma\n0.5\n0.6\n").is_err());
        assert!(parse_scheme_file("# x\n# order 2\n# type ab\n1.0\n1.0\n").is_err());
        assert!(parse_scheme_file("# x\n# type gamma\n1.0\n").is_err());
        assert!(parse_scheme_file("# x\n# order 2\n# type weird\n1.0\n").is_err());
        assert!(find_scheme("nope").is_err());
    }
}
