//! Problem data, validation, seeded synthetic generation, and instance files.
//!
//! Instances are stored as JSON with the top-level keys `n`, `m`, `K`, `c`,
//! `x_upper`, `scenarios` (each `{T, d, e, recourse}`), and `ambiguity`
//! (`{kind, params}`). Matrices are nested row arrays.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DroError, Result, Violation};
use crate::linalg::{norm2, Matrix};

/// Default box upper bound used by the synthetic generator.
pub const DEFAULT_X_UPPER: f64 = 100.0;

/// Second-stage structure of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Recourse {
    /// `g(z) = e.(d - z)_+`, i.e. identity recourse matrix.
    Simple,
    /// `g(z) = min { e.y : R y >= d - z, y >= 0 }`. The dual feasible set is
    /// `{pi <= 0, R^T pi >= -e}`; `pi_bound` is a user-supplied bound `M` with
    /// `pi >= -M` componentwise on every dual solution that matters.
    GeneralLp { r: Matrix, pi_bound: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioBlock {
    /// `m x n` technology matrix.
    pub t: Matrix,
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub recourse: Recourse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum AmbiguitySpec {
    /// Every probability vector over the scenarios.
    Simplex,
    /// `{p in simplex : p_k <= p_bar_k / alpha}`.
    Avar { alpha: f64, p_bar: Vec<f64> },
    /// `{p in simplex : |p - uniform|^2 <= r}`; `p_bar` is the nominal distribution.
    ChiSquare { r: f64, p_bar: Vec<f64> },
    /// Marginals `q` of joint matrices `H >= 0` with row sums `p_bar` and
    /// transport cost `<D, H> <= delta`.
    Kantorovich {
        #[serde(rename = "D")]
        d: Matrix,
        delta: f64,
        p_bar: Vec<f64>,
    },
}

impl AmbiguitySpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AmbiguitySpec::Simplex => "simplex",
            AmbiguitySpec::Avar { .. } => "avar",
            AmbiguitySpec::ChiSquare { .. } => "chi_square",
            AmbiguitySpec::Kantorovich { .. } => "kantorovich",
        }
    }

    pub fn is_kantorovich(&self) -> bool {
        matches!(self, AmbiguitySpec::Kantorovich { .. })
    }
}

/// Ambiguity set description that does not yet know the scenarios. Nominal
/// distributions are uniform; the Kantorovich ground metric is the Euclidean
/// distance between demand vectors, scaled so that its largest entry is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbiguityTemplate {
    Simplex,
    Avar { alpha: f64 },
    ChiSquare { r: f64 },
    Kantorovich { delta: f64 },
}

impl AmbiguityTemplate {
    pub fn instantiate(&self, scenarios: &[ScenarioBlock]) -> AmbiguitySpec {
        let k = scenarios.len();
        let uniform = vec![1.0 / k as f64; k];
        match *self {
            AmbiguityTemplate::Simplex => AmbiguitySpec::Simplex,
            AmbiguityTemplate::Avar { alpha } => AmbiguitySpec::Avar { alpha, p_bar: uniform },
            AmbiguityTemplate::ChiSquare { r } => AmbiguitySpec::ChiSquare { r, p_bar: uniform },
            AmbiguityTemplate::Kantorovich { delta } => AmbiguitySpec::Kantorovich {
                d: demand_distance(scenarios),
                delta,
                p_bar: uniform,
            },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AmbiguityTemplate::Simplex => "simplex",
            AmbiguityTemplate::Avar { .. } => "avar",
            AmbiguityTemplate::ChiSquare { .. } => "chi_square",
            AmbiguityTemplate::Kantorovich { .. } => "kantorovich",
        }
    }
}

/// Pairwise Euclidean distances between scenario demand vectors, scaled to a
/// maximum of 1 (all zeros if the demands coincide).
pub fn demand_distance(scenarios: &[ScenarioBlock]) -> Matrix {
    let k = scenarios.len();
    let mut d = Matrix::zeros(k, k);
    let mut max = 0.0_f64;
    for i in 0..k {
        for j in 0..k {
            let diff: Vec<f64> =
                scenarios[i].d.iter().zip(&scenarios[j].d).map(|(a, b)| a - b).collect();
            let v = norm2(&diff);
            d.set(i, j, v);
            max = max.max(v);
        }
    }
    if max > 0.0 {
        d.data.iter_mut().for_each(|v| *v /= max);
    }
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroInstance {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub c: Vec<f64>,
    pub x_upper: Vec<f64>,
    pub scenarios: Vec<ScenarioBlock>,
    pub ambiguity: AmbiguitySpec,
}

impl DroInstance {
    /// Nominal distribution of the ambiguity set (uniform for the simplex).
    pub fn p_bar(&self) -> Vec<f64> {
        match &self.ambiguity {
            AmbiguitySpec::Simplex => vec![1.0 / self.k as f64; self.k],
            AmbiguitySpec::Avar { p_bar, .. }
            | AmbiguitySpec::ChiSquare { p_bar, .. }
            | AmbiguitySpec::Kantorovich { p_bar, .. } => p_bar.clone(),
        }
    }

    pub fn x_lower(&self) -> Vec<f64> {
        vec![0.0; self.n]
    }

    pub fn box_midpoint(&self) -> Vec<f64> {
        self.x_upper.iter().map(|u| 0.5 * u).collect()
    }

    /// Projection onto the box `[0, x_upper]`.
    pub fn clip_x(&self, x: &mut [f64]) {
        for (xi, &u) in x.iter_mut().zip(&self.x_upper) {
            *xi = xi.clamp(0.0, u);
        }
    }

    /// `T_k x` for every scenario.
    pub fn tx_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.scenarios.iter().map(|s| s.t.mul_vec(x)).collect()
    }

    pub fn with_ambiguity(&self, ambiguity: AmbiguitySpec) -> DroInstance {
        DroInstance { ambiguity, ..self.clone() }
    }

    pub fn all_simple(&self) -> bool {
        self.scenarios.iter().all(|s| s.recourse == Recourse::Simple)
    }
}

/// Seeded synthetic capacity-installation instance.
///
/// Draws come from ChaCha20 seeded with `seed`, in the order: `c`, then for each
/// scenario `e`, `d`, and `T` row by row. Each draw is `lo + (hi - lo) * u` with
/// `u` uniform on `[0, 1)`: `c` in `[0.5, 1]`, `e` in `[2, 4]`, `d` in `[50, 100]`,
/// `T` in `[0.5, 1]`.
pub fn generate_synthetic(
    seed: u64,
    n: usize,
    m: usize,
    k: usize,
    x_upper_scalar: f64,
    ambiguity: AmbiguitySpec,
) -> Result<DroInstance> {
    let mut inst = generate_base(seed, n, m, k, x_upper_scalar)?;
    inst.ambiguity = ambiguity;
    let v = validate(&inst);
    if !v.is_empty() {
        return Err(DroError::Invalid(v));
    }
    Ok(inst)
}

/// Same draws as [`generate_synthetic`], with the ambiguity set built from a template.
pub fn generate_from_template(
    seed: u64,
    n: usize,
    m: usize,
    k: usize,
    x_upper_scalar: f64,
    template: &AmbiguityTemplate,
) -> Result<DroInstance> {
    let base = generate_base(seed, n, m, k, x_upper_scalar)?;
    let amb = template.instantiate(&base.scenarios);
    generate_synthetic(seed, n, m, k, x_upper_scalar, amb)
}

fn generate_base(seed: u64, n: usize, m: usize, k: usize, x_upper: f64) -> Result<DroInstance> {
    if n == 0 || m == 0 || k == 0 {
        return Err(DroError::Domain(format!("dimensions must be positive, got n={n} m={m} K={k}")));
    }
    if !(x_upper > 0.0 && x_upper.is_finite()) {
        return Err(DroError::Domain(format!("x_upper must be positive and finite, got {x_upper}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut draw = |lo: f64, hi: f64| lo + (hi - lo) * rng.gen::<f64>();
    let c: Vec<f64> = (0..n).map(|_| draw(0.5, 1.0)).collect();
    let mut scenarios = Vec::with_capacity(k);
    for _ in 0..k {
        let e: Vec<f64> = (0..m).map(|_| draw(2.0, 4.0)).collect();
        let d: Vec<f64> = (0..m).map(|_| draw(50.0, 100.0)).collect();
        let data: Vec<f64> = (0..m * n).map(|_| draw(0.5, 1.0)).collect();
        scenarios.push(ScenarioBlock {
            t: Matrix { rows: m, cols: n, data },
            d,
            e,
            recourse: Recourse::Simple,
        });
    }
    Ok(DroInstance {
        n,
        m,
        k,
        c,
        x_upper: vec![x_upper; n],
        scenarios,
        ambiguity: AmbiguitySpec::Simplex,
    })
}

/// Checks every structural invariant; an empty list means the instance is valid.
pub fn validate(inst: &DroInstance) -> Vec<Violation> {
    let mut v = Vec::new();
    let (n, m, k) = (inst.n, inst.m, inst.k);
    if n == 0 {
        v.push(Violation::new("n", "must be at least 1"));
    }
    if m == 0 {
        v.push(Violation::new("m", "must be at least 1"));
    }
    if k == 0 {
        v.push(Violation::new("K", "must be at least 1"));
    }
    check_vec(&mut v, "c", &inst.c, n);
    check_vec(&mut v, "x_upper", &inst.x_upper, n);
    if inst.x_upper.iter().any(|&u| !(u > 0.0)) {
        v.push(Violation::new("x_upper", "entries must be strictly positive"));
    }
    if inst.scenarios.len() != k {
        v.push(Violation::new(
            "scenarios",
            format!("has {} blocks, expected K={k}", inst.scenarios.len()),
        ));
    }
    for (i, s) in inst.scenarios.iter().enumerate() {
        let p = format!("scenarios[{i}]");
        if s.t.rows != m || s.t.cols != n || s.t.data.len() != m * n {
            v.push(Violation::new(
                format!("{p}.T"),
                format!("shape {}x{}, expected {m}x{n}", s.t.rows, s.t.cols),
            ));
        } else if s.t.data.iter().any(|x| !x.is_finite()) {
            v.push(Violation::new(format!("{p}.T"), "entries must be finite"));
        }
        check_vec(&mut v, &format!("{p}.d"), &s.d, m);
        check_vec(&mut v, &format!("{p}.e"), &s.e, m);
        if s.e.iter().any(|&x| x < 0.0) {
            v.push(Violation::new(format!("{p}.e"), "entries must be nonnegative"));
        }
        if let Recourse::GeneralLp { r, pi_bound } = &s.recourse {
            if r.rows != m || r.cols != m {
                v.push(Violation::new(
                    format!("{p}.recourse.R"),
                    format!("shape {}x{}, expected {m}x{m}", r.rows, r.cols),
                ));
            }
            if let Some(b) = pi_bound {
                if !(*b > 0.0 && b.is_finite()) {
                    v.push(Violation::new(format!("{p}.recourse.pi_bound"), "must be positive"));
                }
            }
        }
    }
    let check_pbar = |v: &mut Vec<Violation>, p_bar: &[f64]| {
        check_vec(v, "ambiguity.p_bar", p_bar, k);
        if p_bar.iter().any(|&x| x < 0.0) {
            v.push(Violation::new("ambiguity.p_bar", "entries must be nonnegative"));
        }
        let s: f64 = p_bar.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            v.push(Violation::new("ambiguity.p_bar", format!("sums to {s}, expected 1")));
        }
    };
    match &inst.ambiguity {
        AmbiguitySpec::Simplex => {}
        AmbiguitySpec::Avar { alpha, p_bar } => {
            check_pbar(&mut v, p_bar);
            if !(*alpha > 0.0 && *alpha <= 1.0) {
                v.push(Violation::new("ambiguity.alpha", format!("{alpha} is outside (0, 1]")));
            } else if p_bar.iter().sum::<f64>() / alpha < 1.0 - 1e-12 {
                v.push(Violation::new("ambiguity.alpha", "caps p_bar/alpha sum below 1"));
            }
        }
        AmbiguitySpec::ChiSquare { r, p_bar } => {
            check_pbar(&mut v, p_bar);
            if !(*r >= 0.0 && r.is_finite()) {
                v.push(Violation::new("ambiguity.r", format!("{r} must be nonnegative")));
            }
        }
        AmbiguitySpec::Kantorovich { d, delta, p_bar } => {
            check_pbar(&mut v, p_bar);
            if !(*delta >= 0.0 && delta.is_finite()) {
                v.push(Violation::new("ambiguity.delta", format!("{delta} must be nonnegative")));
            }
            if d.rows != k || d.cols != k || d.data.len() != k * k {
                v.push(Violation::new(
                    "ambiguity.D",
                    format!("shape {}x{}, expected {k}x{k}", d.rows, d.cols),
                ));
            } else {
                if (0..k).any(|i| d.get(i, i) != 0.0) {
                    v.push(Violation::new("ambiguity.D", "diagonal must be zero"));
                }
                if d.data.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                    v.push(Violation::new("ambiguity.D", "entries must be finite and nonnegative"));
                }
            }
        }
    }
    v
}

fn check_vec(v: &mut Vec<Violation>, path: &str, x: &[f64], len: usize) {
    if x.len() != len {
        v.push(Violation::new(path, format!("length {}, expected {len}", x.len())));
    }
    if x.iter().any(|e| !e.is_finite()) {
        v.push(Violation::new(path, "entries must be finite"));
    }
}

// On-disk layout. Matrices are kept as nested rows here so that ragged input
// can be reported with its field path instead of a parser position.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    c: Vec<f64>,
    x_upper: Vec<f64>,
    scenarios: Vec<ScenarioFile>,
    ambiguity: AmbiguityFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(rename = "T")]
    t: Vec<Vec<f64>>,
    d: Vec<f64>,
    e: Vec<f64>,
    recourse: RecourseFile,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RecourseFile {
    Simple,
    GeneralLp {
        #[serde(rename = "R")]
        r: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pi_bound: Option<f64>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
enum AmbiguityFile {
    Simplex,
    Avar {
        alpha: f64,
        p_bar: Vec<f64>,
    },
    ChiSquare {
        r: f64,
        p_bar: Vec<f64>,
    },
    Kantorovich {
        #[serde(rename = "D")]
        d: Vec<Vec<f64>>,
        delta: f64,
        p_bar: Vec<f64>,
    },
}

fn matrix_at(rows: &[Vec<f64>], cols_hint: usize, path: &str) -> Result<Matrix> {
    if rows.is_empty() {
        return Ok(Matrix { rows: 0, cols: cols_hint, data: Vec::new() });
    }
    Matrix::from_rows(rows).map_err(|msg| DroError::Invalid(vec![Violation::new(path, msg)]))
}

impl InstanceFile {
    fn from_instance(inst: &DroInstance) -> Self {
        InstanceFile {
            n: inst.n,
            m: inst.m,
            k: inst.k,
            c: inst.c.clone(),
            x_upper: inst.x_upper.clone(),
            scenarios: inst
                .scenarios
                .iter()
                .map(|s| ScenarioFile {
                    t: s.t.to_rows(),
                    d: s.d.clone(),
                    e: s.e.clone(),
                    recourse: match &s.recourse {
                        Recourse::Simple => RecourseFile::Simple,
                        Recourse::GeneralLp { r, pi_bound } => {
                            RecourseFile::GeneralLp { r: r.to_rows(), pi_bound: *pi_bound }
                        }
                    },
                })
                .collect(),
            ambiguity: match &inst.ambiguity {
                AmbiguitySpec::Simplex => AmbiguityFile::Simplex,
                AmbiguitySpec::Avar { alpha, p_bar } => {
                    AmbiguityFile::Avar { alpha: *alpha, p_bar: p_bar.clone() }
                }
                AmbiguitySpec::ChiSquare { r, p_bar } => {
                    AmbiguityFile::ChiSquare { r: *r, p_bar: p_bar.clone() }
                }
                AmbiguitySpec::Kantorovich { d, delta, p_bar } => AmbiguityFile::Kantorovich {
                    d: d.to_rows(),
                    delta: *delta,
                    p_bar: p_bar.clone(),
                },
            },
        }
    }

    fn into_instance(self) -> Result<DroInstance> {
        let mut scenarios = Vec::with_capacity(self.scenarios.len());
        for (i, s) in self.scenarios.into_iter().enumerate() {
            let t = matrix_at(&s.t, self.n, &format!("scenarios[{i}].T"))?;
            let recourse = match s.recourse {
                RecourseFile::Simple => Recourse::Simple,
                RecourseFile::GeneralLp { r, pi_bound } => Recourse::GeneralLp {
                    r: matrix_at(&r, self.m, &format!("scenarios[{i}].recourse.R"))?,
                    pi_bound,
                },
            };
            scenarios.push(ScenarioBlock { t, d: s.d, e: s.e, recourse });
        }
        let ambiguity = match self.ambiguity {
            AmbiguityFile::Simplex => AmbiguitySpec::Simplex,
            AmbiguityFile::Avar { alpha, p_bar } => AmbiguitySpec::Avar { alpha, p_bar },
            AmbiguityFile::ChiSquare { r, p_bar } => AmbiguitySpec::ChiSquare { r, p_bar },
            AmbiguityFile::Kantorovich { d, delta, p_bar } => AmbiguitySpec::Kantorovich {
                d: matrix_at(&d, self.k, "ambiguity.D")?,
                delta,
                p_bar,
            },
        };
        Ok(DroInstance {
            n: self.n,
            m: self.m,
            k: self.k,
            c: self.c,
            x_upper: self.x_upper,
            scenarios,
            ambiguity,
        })
    }
}

/// Serializes to the instance JSON schema. Floats are written in the shortest
/// form that parses back to the identical `f64`.
pub fn instance_to_json(inst: &DroInstance) -> Result<String> {
    Ok(serde_json::to_string_pretty(&InstanceFile::from_instance(inst))?)
}

/// Parses and validates an instance document.
pub fn instance_from_json(text: &str) -> Result<DroInstance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    let inst = file.into_instance()?;
    let v = validate(&inst);
    if !v.is_empty() {
        return Err(DroError::Invalid(v));
    }
    Ok(inst)
}

pub fn save_instance(inst: &DroInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, instance_to_json(inst)?)?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<DroInstance> {
    instance_from_json(&std::fs::read_to_string(path)?)
}
