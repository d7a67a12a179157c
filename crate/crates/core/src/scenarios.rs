//! Built-in example scenarios, theta sweeps and random instances.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bounds_product::{
    bound_ik, bound_k_prefix, bound_spq, chain_report, k_mixture, BoundInputPair,
};
use crate::bounds_sum::{
    bound_b2_cell, bound_b2_max, bound_b2_q, bound_lma, sampled_matrix, Cell, SampledMatrix,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::metric::{
    bloch_state, gamma_matrix, pure_state, validate_density, DensityMatrix, MetricParam, Observable,
    DENSITY_TOL,
};
use crate::numerics::{pauli_x, pauli_y, pauli_z, ComplexMatrix, C64};
use crate::search::{best_ik, best_k, best_over_family, best_spq, Family, SearchStrategy};

/// Default number of theta points.
pub const DEFAULT_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Density(ComplexMatrix),
    Bloch([f64; 3]),
    /// `r(theta) = radius (cos(theta) u + sin(theta) v)`.
    BlochCircle { radius: f64, u: [f64; 3], v: [f64; 3] },
    Pure(Vec<C64>),
    /// `psi(theta) = cos(theta) a + sin(theta) b`.
    PureRotation { cos: Vec<C64>, sin: Vec<C64> },
}

impl StateSpec {
    pub fn dim(&self) -> usize {
        match self {
            StateSpec::Density(m) => m.dim(),
            StateSpec::Bloch(_) | StateSpec::BlochCircle { .. } => 2,
            StateSpec::Pure(a) => a.len(),
            StateSpec::PureRotation { cos, .. } => cos.len(),
        }
    }

    pub fn depends_on_theta(&self) -> bool {
        matches!(self, StateSpec::BlochCircle { .. } | StateSpec::PureRotation { .. })
    }

    pub fn at(&self, theta: f64) -> Result<DensityMatrix> {
        match self {
            StateSpec::Density(m) => validate_density(m, DENSITY_TOL),
            StateSpec::Bloch(r) => bloch_state(*r),
            StateSpec::BlochCircle { radius, u, v } => {
                let (s, c) = theta.sin_cos();
                bloch_state(std::array::from_fn(|i| radius * (c * u[i] + s * v[i])))
            }
            StateSpec::Pure(a) => pure_state(a, false),
            StateSpec::PureRotation { cos, sin } => {
                let (s, c) = theta.sin_cos();
                let amps: Vec<C64> = cos.iter().zip(sin).map(|(a, b)| a * c + b * s).collect();
                pure_state(&amps, false)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub p: MetricParam,
    pub state: StateSpec,
    pub observables: Vec<Observable>,
}

impl Scenario {
    pub fn new(label: impl Into<String>, p: MetricParam, state: StateSpec, observables: Vec<Observable>) -> Result<Self> {
        let d = state.dim();
        if let StateSpec::PureRotation { cos, sin } = &state {
            if cos.len() != sin.len() {
                return Err(Error::DimensionMismatch {
                    expected: cos.len(),
                    found: sin.len(),
                });
            }
        }
        if observables.is_empty() {
            return Err(Error::TooFewObservables { needed: 1, got: 0 });
        }
        for a in &observables {
            if a.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: a.dim(),
                });
            }
        }
        Ok(Scenario {
            label: label.into(),
            p,
            state,
            observables,
        })
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn with_p(mut self, p: MetricParam) -> Self {
        self.p = p;
        self
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn obs(name: &str, rows: &[&[C64]]) -> Observable {
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.to_vec()).collect();
    Observable::new(name, ComplexMatrix::from_rows(&rows).expect("square literal")).expect("Hermitian literal")
}

fn rotation_3d() -> StateSpec {
    StateSpec::PureRotation {
        cos: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        sin: vec![c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
    }
}

fn example_2_a(name: &str) -> Observable {
    obs(
        name,
        &[
            &[c(1.0, 0.0), c(1.0, -1.0), c(0.0, 0.0)],
            &[c(1.0, 1.0), c(-1.0, 0.0), c(0.0, 1.0)],
            &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 0.0)],
        ],
    )
}

fn example_2_b(name: &str) -> Observable {
    obs(
        name,
        &[
            &[c(0.0, 0.0), c(0.0, 1.0), c(1.0, -1.0)],
            &[c(0.0, -1.0), c(0.0, 0.0), c(1.0, 0.0)],
            &[c(1.0, 1.0), c(1.0, 0.0), c(0.0, 0.0)],
        ],
    )
}

/// Examples 1 to 4 with their exact states, observables and `p`.
pub fn builtin_example(n: usize) -> Result<Scenario> {
    let third = MetricParam::new(1.0 / 3.0)?;
    match n {
        1 => {
            let a = &pauli_x() - &pauli_z().scale(c(0.5, 0.0));
            let b = &(&pauli_x() + &pauli_y()) + &pauli_z();
            Scenario::new(
                "example 1",
                MetricParam::new(0.25)?,
                StateSpec::BlochCircle {
                    radius: 3f64.sqrt() / 3.0,
                    u: [1.0, 0.0, 0.0],
                    v: [0.0, 1.0, 0.0],
                },
                vec![Observable::new("A", a)?, Observable::new("B", b)?],
            )
        }
        2 => Scenario::new("example 2", third, rotation_3d(), vec![example_2_a("A"), example_2_b("B")]),
        3 => Scenario::new(
            "example 3",
            third,
            StateSpec::BlochCircle {
                radius: 0.75,
                u: [0.0, 0.0, 1.0],
                v: [1.0, 0.0, 0.0],
            },
            vec![
                obs("A1", &[&[c(1.0, 0.0), c(2.0, 1.0)], &[c(2.0, -1.0), c(-1.0, 0.0)]]),
                obs("A2", &[&[c(1.0, 0.0), c(0.0, 1.0)], &[c(0.0, -1.0), c(-1.0, 0.0)]]),
                obs("A3", &[&[c(0.0, 0.0), c(1.0, 0.5)], &[c(1.0, -0.5), c(0.0, 0.0)]]),
                obs("A4", &[&[c(0.0, 0.0), c(0.0, 1.0)], &[c(0.0, -1.0), c(0.0, 0.0)]]),
            ],
        ),
        4 => Scenario::new(
            "example 4",
            third,
            rotation_3d(),
            vec![
                example_2_a("A1"),
                example_2_b("A2"),
                obs(
                    "A3",
                    &[
                        &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, -1.0)],
                        &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
                        &[c(1.0, 1.0), c(1.0, 0.0), c(0.0, 0.0)],
                    ],
                ),
                obs(
                    "A4",
                    &[
                        &[c(2.0, 0.0), c(1.0, -1.0), c(0.0, 0.0)],
                        &[c(1.0, 1.0), c(-2.0, 0.0), c(0.0, 0.0)],
                        &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
                    ],
                ),
            ],
        ),
        other => Err(Error::UnknownExample(other)),
    }
}

/// Default theta range of a built-in example.
pub fn example_range(n: usize) -> Result<(f64, f64)> {
    match n {
        1 | 3 => Ok((0.0, 2.0 * PI)),
        2 | 4 => Ok((0.0, PI)),
        other => Err(Error::UnknownExample(other)),
    }
}

/// Columns plotted for each built-in example.
pub fn example_bounds(n: usize) -> Result<Vec<BoundSpec>> {
    let names: &[&str] = match n {
        1 => &["I_2", "S_3_1", "K_2"],
        2 => &["I_2", "S_3_1", "Kw_0_0.1_0_0.9"],
        3 => &["total", "LMa", "B2", "B2cell_3_1_4_1", "B2cell_3_1_1_1", "B2-LMa", "B2cell_3_1_4_1-LMa"],
        4 => &[
            "total",
            "LMa",
            "B2",
            "B2cell_2_3_3_3",
            "B2cell_3_2_4_3",
            "B2-LMa",
            "B2cell_2_3_3_3-LMa",
            "B2cell_3_2_4_3-LMa",
        ],
        other => return Err(Error::UnknownExample(other)),
    };
    names.iter().map(|s| s.parse()).collect()
}

/// A named quantity evaluated at each point.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundSpec {
    Product,
    CorrSq,
    CorrAbsSq,
    Total,
    Ik(usize),
    Spq(usize, usize),
    /// Prefix `K_k`.
    K(usize),
    /// `max_sigma sigma(K_k)`.
    KTilde(usize),
    /// `max_k K~_k`.
    KTildeAll,
    IMax(usize),
    SMax(usize, usize),
    /// `q I_1 + (1 - q) max I_k`.
    Iq(usize),
    /// `q S_10 + (1 - q) max S_pq`.
    Sq(usize, usize),
    /// `q K~_k + (1 - q) K~_n`.
    Ktq(usize),
    KWeights(Vec<f64>),
    IWeights(Vec<f64>),
    SWeights(Vec<f64>),
    B2,
    B2q,
    LMa,
    B2Cell(Cell, Cell),
    Diff(Box<BoundSpec>, Box<BoundSpec>),
}

fn parse_indices(parts: &[&str], count: usize, whole: &str) -> Result<Vec<usize>> {
    if parts.len() != count {
        return Err(Error::UnknownBoundName(whole.into()));
    }
    parts
        .iter()
        .map(|p| p.parse::<usize>().map_err(|_| Error::UnknownBoundName(whole.into())))
        .collect()
}

fn parse_weights(parts: &[&str], whole: &str) -> Result<Vec<f64>> {
    if parts.is_empty() {
        return Err(Error::UnknownBoundName(whole.into()));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| Error::UnknownBoundName(whole.into())))
        .collect()
}

impl std::str::FromStr for BoundSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('-') {
            return Ok(BoundSpec::Diff(Box::new(a.parse()?), Box::new(b.parse()?)));
        }
        let parts: Vec<&str> = s.split('_').collect();
        let (head, rest) = (parts[0], &parts[1..]);
        let one = |rest: &[&str]| parse_indices(rest, 1, s).map(|v| v[0]);
        let two = |rest: &[&str]| parse_indices(rest, 2, s).map(|v| (v[0], v[1]));
        let spec = match (head, rest.len()) {
            ("product", 0) => BoundSpec::Product,
            ("corr", 1) if rest[0] == "sq" => BoundSpec::CorrSq,
            ("corr", 2) if rest == ["abs", "sq"] => BoundSpec::CorrAbsSq,
            ("total", 0) => BoundSpec::Total,
            ("I", _) => BoundSpec::Ik(one(rest)?),
            ("S", _) => {
                let (p, q) = two(rest)?;
                BoundSpec::Spq(p, q)
            }
            ("K", _) => BoundSpec::K(one(rest)?),
            ("Kt", 0) => BoundSpec::KTildeAll,
            ("Kt", _) => BoundSpec::KTilde(one(rest)?),
            ("Imax", _) => BoundSpec::IMax(one(rest)?),
            ("Smax", _) => {
                let (p, q) = two(rest)?;
                BoundSpec::SMax(p, q)
            }
            ("Iq", _) => BoundSpec::Iq(one(rest)?),
            ("Sq", _) => {
                let (p, q) = two(rest)?;
                BoundSpec::Sq(p, q)
            }
            ("Ktq", _) => BoundSpec::Ktq(one(rest)?),
            ("Kw", _) => BoundSpec::KWeights(parse_weights(rest, s)?),
            ("Iw", _) => BoundSpec::IWeights(parse_weights(rest, s)?),
            ("Sw", _) => BoundSpec::SWeights(parse_weights(rest, s)?),
            ("B2", 0) => BoundSpec::B2,
            ("B2q", 0) => BoundSpec::B2q,
            ("LMa", 0) => BoundSpec::LMa,
            ("B2cell", _) => {
                let v = parse_indices(rest, 4, s)?;
                if v.contains(&0) {
                    return Err(Error::UnknownBoundName(s.into()));
                }
                BoundSpec::B2Cell((v[0] - 1, v[1] - 1), (v[2] - 1, v[3] - 1))
            }
            _ => return Err(Error::UnknownBoundName(s.into())),
        };
        Ok(spec)
    }
}

fn weights_label(w: &[f64]) -> String {
    w.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("_")
}

impl fmt::Display for BoundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundSpec::Product => write!(f, "product"),
            BoundSpec::CorrSq => write!(f, "corr_sq"),
            BoundSpec::CorrAbsSq => write!(f, "corr_abs_sq"),
            BoundSpec::Total => write!(f, "total"),
            BoundSpec::Ik(k) => write!(f, "I_{k}"),
            BoundSpec::Spq(p, q) => write!(f, "S_{p}_{q}"),
            BoundSpec::K(k) => write!(f, "K_{k}"),
            BoundSpec::KTilde(k) => write!(f, "Kt_{k}"),
            BoundSpec::KTildeAll => write!(f, "Kt"),
            BoundSpec::IMax(k) => write!(f, "Imax_{k}"),
            BoundSpec::SMax(p, q) => write!(f, "Smax_{p}_{q}"),
            BoundSpec::Iq(k) => write!(f, "Iq_{k}"),
            BoundSpec::Sq(p, q) => write!(f, "Sq_{p}_{q}"),
            BoundSpec::Ktq(k) => write!(f, "Ktq_{k}"),
            BoundSpec::KWeights(w) => write!(f, "Kw_{}", weights_label(w)),
            BoundSpec::IWeights(w) => write!(f, "Iw_{}", weights_label(w)),
            BoundSpec::SWeights(w) => write!(f, "Sw_{}", weights_label(w)),
            BoundSpec::B2 => write!(f, "B2"),
            BoundSpec::B2q => write!(f, "B2q"),
            BoundSpec::LMa => write!(f, "LMa"),
            BoundSpec::B2Cell(a, b) => write!(f, "B2cell_{}_{}_{}_{}", a.0 + 1, a.1 + 1, b.0 + 1, b.1 + 1),
            BoundSpec::Diff(a, b) => write!(f, "{a}-{b}"),
        }
    }
}

impl BoundSpec {
    fn needs_pair(&self) -> bool {
        match self {
            BoundSpec::Total | BoundSpec::B2 | BoundSpec::B2q | BoundSpec::LMa | BoundSpec::B2Cell(..) => false,
            BoundSpec::Diff(a, b) => a.needs_pair() || b.needs_pair(),
            _ => true,
        }
    }

    fn is_sum_form(&self) -> bool {
        matches!(
            self,
            BoundSpec::Total | BoundSpec::B2 | BoundSpec::B2q | BoundSpec::LMa | BoundSpec::B2Cell(..)
        )
    }
}

/// Everything the bounds need at one state.
#[derive(Debug, Clone)]
pub struct PointData {
    pub pair: Option<BoundInputPair>,
    pub matrix: SampledMatrix,
}

impl PointData {
    pub fn new(scenario: &Scenario, rho: &DensityMatrix) -> Result<Self> {
        let gf = gamma_matrix(rho, scenario.p)?;
        let matrix = sampled_matrix(&gf, &scenario.observables)?;
        let pair = match scenario.observables.as_slice() {
            [a, b, ..] => Some(BoundInputPair::from_state(&gf, a, b)?),
            _ => None,
        };
        Ok(PointData { pair, matrix })
    }

    fn pair(&self) -> Result<&BoundInputPair> {
        self.pair.as_ref().ok_or(Error::TooFewObservables { needed: 2, got: 1 })
    }
}

/// Settings shared by every evaluated point.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub strategy: SearchStrategy,
    pub q: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            strategy: SearchStrategy::default(),
            q: 0.0,
        }
    }
}

fn weighted(values: impl Iterator<Item = Result<f64>>, weights: &[f64]) -> Result<f64> {
    crate::bounds_product::WeightVector::new(weights.to_vec())?;
    let mut sum = 0.0;
    for (v, w) in values.zip(weights) {
        sum += v? * w;
    }
    Ok(sum)
}

fn check_q(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::BadQ { q });
    }
    Ok(q)
}

/// Evaluates one bound and verifies it sits inside its family's ordering.
pub fn evaluate(spec: &BoundSpec, data: &PointData, options: &EvalOptions) -> Result<f64> {
    let st = &options.strategy;
    let value = match spec {
        BoundSpec::Product => data.pair()?.product(),
        BoundSpec::CorrSq => data.pair()?.corr_sq(),
        BoundSpec::CorrAbsSq => data.pair()?.corr_abs_sq(),
        BoundSpec::Total => data.matrix.total(),
        BoundSpec::Ik(k) => bound_ik(data.pair()?, *k)?.value,
        BoundSpec::Spq(p, q) => bound_spq(data.pair()?, *p, *q)?.value,
        BoundSpec::K(k) => bound_k_prefix(data.pair()?, *k)?.value,
        BoundSpec::KTilde(k) => best_k(data.pair()?, *k, st)?.best.value,
        BoundSpec::KTildeAll => best_over_family(data.pair()?, Family::K, st)?.best.value,
        BoundSpec::IMax(k) => best_ik(data.pair()?, *k, st)?.best.value,
        BoundSpec::SMax(p, q) => best_spq(data.pair()?, *p, *q, st)?.best.value,
        BoundSpec::Iq(k) => {
            let q = check_q(options.q)?;
            let pair = data.pair()?;
            q * pair.product() + (1.0 - q) * best_ik(pair, *k, st)?.best.value
        }
        BoundSpec::Sq(p, qq) => {
            let q = check_q(options.q)?;
            let pair = data.pair()?;
            q * pair.product() + (1.0 - q) * best_spq(pair, *p, *qq, st)?.best.value
        }
        BoundSpec::Ktq(k) => {
            let q = check_q(options.q)?;
            let pair = data.pair()?;
            let n = pair.n();
            q * best_k(pair, *k, st)?.best.value + (1.0 - q) * best_k(pair, n, st)?.best.value
        }
        BoundSpec::KWeights(w) => k_mixture(data.pair()?, w)?.value,
        BoundSpec::IWeights(w) => {
            let pair = data.pair()?;
            check_weight_len(w, pair.n())?;
            weighted((1..=w.len()).map(|k| bound_ik(pair, k).map(|b| b.value)), w)?
        }
        BoundSpec::SWeights(w) => {
            let pair = data.pair()?;
            let labels = crate::bounds_product::s_pair_labels(pair.n());
            check_weight_len(w, labels.len())?;
            weighted(labels.iter().map(|&(p, q)| bound_spq(pair, p, q).map(|b| b.value)), w)?
        }
        BoundSpec::B2 => bound_b2_max(&data.matrix)?.value,
        BoundSpec::B2q => bound_b2_q(&data.matrix, check_q(options.q)?)?.value,
        BoundSpec::LMa => bound_lma(&data.matrix)?.value,
        BoundSpec::B2Cell(a, b) => bound_b2_cell(&data.matrix, *a, *b)?.value,
        BoundSpec::Diff(a, b) => evaluate(a, data, options)? - evaluate(b, data, options)?,
    };
    check_value(spec, value, data)?;
    Ok(value)
}

fn check_weight_len(w: &[f64], n: usize) -> Result<()> {
    if w.len() > n {
        return Err(Error::LengthMismatch { left: w.len(), right: n });
    }
    Ok(())
}

fn check_value(spec: &BoundSpec, value: f64, data: &PointData) -> Result<()> {
    if matches!(spec, BoundSpec::Diff(..) | BoundSpec::Total) {
        return Ok(());
    }
    let violation = |upper: &str, upper_value: f64, lower: &str, lower_value: f64| Error::ChainViolation {
        upper: upper.into(),
        upper_value,
        lower: lower.into(),
        lower_value,
    };
    let name = spec.to_string();
    if spec.is_sum_form() {
        let total = data.matrix.total();
        let tol = 1e-9 * total.max(1.0);
        if value > total + tol {
            return Err(violation("total", total, &name, value));
        }
        return Ok(());
    }
    let pair = data.pair()?;
    let tol = pair.tolerance();
    if value > pair.product() + tol {
        return Err(violation("product", pair.product(), &name, value));
    }
    if value < pair.corr_sq() - tol {
        return Err(violation(&name, value, "corr_sq", pair.corr_sq()));
    }
    Ok(())
}

/// Verifies every ordering the point is expected to satisfy.
pub fn check_point(data: &PointData) -> Result<()> {
    if let Some(pair) = &data.pair {
        chain_report(pair)?;
    }
    let x = &data.matrix;
    if x.m() * x.n() >= 2 {
        let total = x.total();
        let tol = 1e-9 * total.max(1.0);
        let b2 = bound_b2_max(x)?.value;
        let mut prev = total;
        for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let v = bound_b2_q(x, q)?.value;
            if v > prev + tol || v < b2 - tol {
                return Err(Error::ChainViolation {
                    upper: "total".into(),
                    upper_value: prev,
                    lower: format!("B2q({q})"),
                    lower_value: v,
                });
            }
            prev = v;
        }
    }
    if x.m() >= 2 {
        let lma = bound_lma(x)?.value;
        if lma > x.total() + 1e-9 * x.total().max(1.0) {
            return Err(Error::ChainViolation {
                upper: "total".into(),
                upper_value: x.total(),
                lower: "LMa".into(),
                lower_value: lma,
            });
        }
    }
    Ok(())
}

/// Uniform grid of `steps` points; a single point sits at `start`.
pub fn theta_grid(start: f64, end: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::BadSweep("steps must be at least 1".into()));
    }
    if !start.is_finite() || !end.is_finite() {
        return Err(Error::BadSweep("theta range must be finite".into()));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    let h = (end - start) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| if i == steps - 1 { end } else { start + h * i as f64 })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// `theta` followed by one name per value column.
    pub columns: Vec<String>,
    pub thetas: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    /// 1-based argmax cells of `B2` per point, when defined.
    pub b2_argmax: Vec<Option<String>>,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        if idx == 0 {
            return Some(self.thetas.clone());
        }
        Some(self.rows.iter().map(|r| r[idx - 1]).collect())
    }
}

/// Columns emitted for a request: `product` and `corr_sq` lead when the
/// scenario has two observables, duplicates are dropped.
pub fn sweep_columns(scenario: &Scenario, bounds: &[BoundSpec]) -> Vec<BoundSpec> {
    let mut cols = Vec::new();
    if scenario.observables.len() >= 2 {
        cols.push(BoundSpec::Product);
        cols.push(BoundSpec::CorrSq);
    }
    for b in bounds {
        if !cols.contains(b) {
            cols.push(b.clone());
        }
    }
    cols
}

pub fn evaluate_point(
    scenario: &Scenario,
    theta: f64,
    specs: &[BoundSpec],
    options: &EvalOptions,
) -> Result<(Vec<f64>, Option<String>)> {
    let inner = || -> Result<(Vec<f64>, Option<String>)> {
        let rho = scenario.state.at(theta)?;
        let data = PointData::new(scenario, &rho)?;
        check_point(&data)?;
        let values = specs
            .iter()
            .map(|s| evaluate(s, &data, options))
            .collect::<Result<Vec<_>>>()?;
        let argmax = if data.matrix.m() * data.matrix.n() >= 2 {
            bound_b2_max(&data.matrix)?.cells_label()
        } else {
            None
        };
        Ok((values, argmax))
    };
    inner().map_err(|e| e.at_theta(theta))
}

pub fn run_sweep(
    scenario: &Scenario,
    theta_start: f64,
    theta_end: f64,
    steps: usize,
    bounds: &[BoundSpec],
    options: &EvalOptions,
    exec: Exec,
) -> Result<SweepResult> {
    let thetas = theta_grid(theta_start, theta_end, steps)?;
    let specs = sweep_columns(scenario, bounds);
    for s in &specs {
        if s.needs_pair() && scenario.observables.len() < 2 {
            return Err(Error::TooFewObservables {
                needed: 2,
                got: scenario.observables.len(),
            });
        }
    }
    let points = exec.try_map(thetas.len(), |i| evaluate_point(scenario, thetas[i], &specs, options))?;
    let mut columns = vec!["theta".to_string()];
    columns.extend(specs.iter().map(|s| s.to_string()));
    let (rows, b2_argmax) = points.into_iter().unzip();
    Ok(SweepResult {
        columns,
        thetas,
        rows,
        b2_argmax,
    })
}

fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| complex_normal(rng))
}

/// Random mixed state `G G^dag / Tr` with `m` random observables
/// `(G + G^dag)/2` and `p` uniform in `[0.1, 0.9]`.
pub fn random_instance(dim: usize, m: usize, seed: u64) -> Result<Scenario> {
    if !(2..=6).contains(&dim) {
        return Err(Error::Validation(format!("random instances need dimension 2..=6, got {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian(&mut rng, dim);
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    let rho = w.scale(C64::new(1.0 / tr, 0.0)).hermitian_part();
    let observables = (1..=m)
        .map(|i| {
            let h = gaussian(&mut rng, dim);
            Observable::new(format!("A{i}"), (&h + &h.adjoint()).scale(C64::new(0.5, 0.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let p = MetricParam::new(rng.random_range(0.1..0.9))?;
    Scenario::new(format!("random d={dim} seed={seed}"), p, StateSpec::Density(rho), observables)
}

/// Outcome of one example-specific check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn equality_check(sweep: &SweepResult, left: &str, right: &str, tol: f64) -> Check {
    let (a, b) = (sweep.column(left).expect("column"), sweep.column(right).expect("column"));
    let mut worst = (0.0f64, 0usize);
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        let d = (x - y).abs();
        if d > worst.0 {
            worst = (d, i);
        }
    }
    let failing = a.iter().zip(&b).filter(|(x, y)| (*x - *y).abs() > tol).count();
    check(
        format!("{left} = {right}"),
        failing == 0,
        format!(
            "max |diff| {:.3e} at theta {:.6}; {failing}/{} points beyond {tol:e}",
            worst.0,
            sweep.thetas[worst.1],
            a.len()
        ),
    )
}

fn at_least_check(sweep: &SweepResult, upper: &str, lower: &str, tol: f64) -> Check {
    let (a, b) = (sweep.column(upper).expect("column"), sweep.column(lower).expect("column"));
    let bad: Vec<usize> = (0..a.len()).filter(|&i| a[i] < b[i] - tol).collect();
    let detail = match bad.first() {
        Some(&i) => format!(
            "{} points fail, first at theta {:.6}: {} < {}",
            bad.len(),
            sweep.thetas[i],
            a[i],
            b[i]
        ),
        None => format!("holds at all {} points", a.len()),
    };
    check(format!("{upper} >= {lower}"), bad.is_empty(), detail)
}

fn positive_fraction_check(sweep: &SweepResult, column: &str, fraction: f64) -> Check {
    let v = sweep.column(column).expect("column");
    let positive = v.iter().filter(|d| **d > 0.0).count();
    let share = if v.is_empty() { 0.0 } else { positive as f64 / v.len() as f64 };
    check(
        format!("{column} > 0 on at least {:.0}% of points", fraction * 100.0),
        share >= fraction,
        format!("{positive}/{} points strictly positive", v.len()),
    )
}

/// Bounds a reproduction sweep must contain for [`example_checks`].
pub fn example_check_bounds(n: usize) -> Result<Vec<BoundSpec>> {
    let names: &[&str] = match n {
        1 => &["I_1", "I_2", "I_3", "I_4", "S_2_1", "S_3_1", "S_3_2", "S_4_1", "S_4_2", "S_4_3", "K_2"],
        2 => &["I_2", "S_3_1", "Kw_0_0.1_0_0.9"],
        3 | 4 => &["B2", "LMa", "B2-LMa"],
        other => return Err(Error::UnknownExample(other)),
    };
    names.iter().map(|s| s.parse()).collect()
}

/// Example-specific assertions on a sweep that includes [`example_check_bounds`].
pub fn example_checks(n: usize, sweep: &SweepResult) -> Result<Vec<Check>> {
    const EQ_TOL: f64 = 1e-8;
    const ORDER_TOL: f64 = 1e-9;
    let checks = match n {
        1 => {
            let mut v: Vec<Check> = ["I_1", "S_4_1", "K_2"]
                .iter()
                .map(|b| equality_check(sweep, "product", b, EQ_TOL))
                .collect();
            v.extend(
                ["I_2", "I_3", "I_4", "S_2_1", "S_3_1", "S_3_2", "S_4_2", "S_4_3"]
                    .iter()
                    .map(|b| equality_check(sweep, "corr_sq", b, EQ_TOL)),
            );
            v
        }
        2 => {
            let mut v = Vec::new();
            for b in ["I_2", "S_3_1", "Kw_0_0.1_0_0.9"] {
                v.push(at_least_check(sweep, "product", b, ORDER_TOL));
                v.push(at_least_check(sweep, b, "corr_sq", ORDER_TOL));
            }
            v
        }
        3 | 4 => vec![
            at_least_check(sweep, "B2", "LMa", ORDER_TOL),
            positive_fraction_check(sweep, "B2-LMa", 0.9),
        ],
        other => return Err(Error::UnknownExample(other)),
    };
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::skew_info_direct;

    #[test]
    fn builtin_examples() {
        assert_eq!(builtin_example(1).unwrap().p.value(), 0.25);
        let ex2 = builtin_example(2).unwrap();
        let rho = ex2.state.at(0.0).unwrap();
        assert!((&rho.matrix().clone() - &ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0])).max_abs() < 1e-15);
        let ex3 = builtin_example(3).unwrap();
        let a4 = ex3.observables[3].matrix();
        assert!((a4 + &pauli_y()).max_abs() < 1e-15);
        assert_eq!(ex3.observables.len(), 4);
        assert_eq!(builtin_example(4).unwrap().dim(), 3);
        assert!(matches!(builtin_example(5), Err(Error::UnknownExample(5))));
    }

    #[test]
    fn bound_names_round_trip() {
        for name in [
            "product", "corr_sq", "corr_abs_sq", "total", "I_2", "S_3_1", "K_2", "Kt_3", "Kt", "Imax_2", "Smax_4_1",
            "Iq_2", "Sq_3_2", "Ktq_2", "Kw_0_0.1_0_0.9", "Iw_0.5_0.5", "Sw_1", "B2", "B2q", "LMa", "B2cell_3_1_4_1",
            "B2-LMa", "B2cell_2_3_3_3-LMa",
        ] {
            let spec: BoundSpec = name.parse().unwrap();
            assert_eq!(spec.to_string(), name);
        }
        for bad in ["I", "I_x", "Q_1", "B2cell_0_1_1_1", "S_1", "corr"] {
            assert!(matches!(bad.parse::<BoundSpec>(), Err(Error::UnknownBoundName(_))), "{bad}");
        }
    }

    #[test]
    fn theta_grids() {
        assert_eq!(theta_grid(0.3, 1.0, 1).unwrap(), vec![0.3]);
        let g = theta_grid(0.0, PI, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[4], PI);
        assert!(matches!(theta_grid(0.0, 1.0, 0), Err(Error::BadSweep(_))));
    }

    #[test]
    fn single_point_sweep() {
        let s = builtin_example(1).unwrap();
        let r = run_sweep(&s, 1.0, 2.0, 1, &example_bounds(1).unwrap(), &EvalOptions::default(), Exec::default()).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.columns, vec!["theta", "product", "corr_sq", "I_2", "S_3_1", "K_2"]);
    }

    #[test]
    fn sweeps_agree_across_execution_modes() {
        let s = builtin_example(4).unwrap();
        let b = example_bounds(4).unwrap();
        let o = EvalOptions::default();
        let par = run_sweep(&s, 0.0, PI, 17, &b, &o, Exec::Parallel).unwrap();
        let seq = run_sweep(&s, 0.0, PI, 17, &b, &o, Exec::Sequential).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn random_instances_are_valid_and_deterministic() {
        let a = random_instance(3, 4, 11).unwrap();
        assert_eq!(a, random_instance(3, 4, 11).unwrap());
        assert_ne!(a, random_instance(3, 4, 12).unwrap());
        let rho = a.state.at(0.0).unwrap();
        validate_density(rho.matrix(), 1e-9).unwrap();
        for o in &a.observables {
            assert!(o.matrix().is_hermitian(1e-12));
            assert!(skew_info_direct(&rho, o, a.p).unwrap() >= -1e-12);
        }
        assert!(random_instance(7, 1, 0).is_err());
    }

    #[test]
    fn errors_carry_theta() {
        let s = Scenario::new(
            "too big",
            MetricParam::new(0.5).unwrap(),
            StateSpec::BlochCircle {
                radius: 1.5,
                u: [1.0, 0.0, 0.0],
                v: [0.0, 1.0, 0.0],
            },
            vec![Observable::new("X", pauli_x()).unwrap()],
        )
        .unwrap();
        let e = run_sweep(&s, 0.5, 0.5, 1, &[BoundSpec::Total], &EvalOptions::default(), Exec::default()).unwrap_err();
        assert!(matches!(e, Error::AtTheta { theta, .. } if theta == 0.5));
        assert!(matches!(e.root(), Error::BlochNormExceeded { .. }));
    }

    #[test]
    fn example_3_prefers_b2() {
        let s = builtin_example(3).unwrap();
        let b = example_check_bounds(3).unwrap();
        let r = run_sweep(&s, 0.0, 2.0 * PI, 40, &b, &EvalOptions::default(), Exec::default()).unwrap();
        for c in example_checks(3, &r).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
