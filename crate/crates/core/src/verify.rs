//! Regression report: closed forms against the curvature oracle on a grid,
//! plus the known discrepancies with the printed formulas.

use rayon::prelude::*;
use serde::Serialize;

use crate::bachforms::{closed_form_bach, evolution_identities, ode_rhs, printed, BachOperator};
use crate::curvature::{ContractionPattern, CurvatureBundle, MetricSpec};
use crate::error::{Error, Result};
use crate::grid::slice_points;
use crate::nilalg::TriBracket;
use crate::soliton::{solve_soliton, CertificationReport, SearchRegion};

pub const FORMULA_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { min, max, mean: values.iter().sum::<f64>() / values.len() as f64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternResidual {
    pub pattern: ContractionPattern,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypoDiff {
    pub name: String,
    pub printed: String,
    pub derived: String,
    /// Largest difference between printed and derived values on the grid.
    pub max_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub grid: usize,
    pub seed: u64,
    pub points: usize,
    /// Max `|closed form - oracle|` for `b1 .. b6`.
    pub coefficient_max_deviation: [f64; 6],
    pub max_trace: f64,
    /// Max relative deviation of `B(k mu) = k^4 B(mu)`.
    pub max_scaling_deviation: f64,
    /// Max `|s_oracle + |mu|^2_ordered / 4|`.
    pub scalar_max_deviation: f64,
    /// Same with the unordered norm, `-(a^2 + b^2 + c^2) / 4`.
    pub scalar_unordered_norm_max_deviation: f64,
    /// `b1 / sum W_abcd^2` over the grid (constant 3/8).
    pub weyl_constant: Stats,
    pub contraction_patterns: Vec<PatternResidual>,
    pub evolution_identity_max_residual: f64,
    pub evolution_min_b_ratio_slack: f64,
    pub evolution_min_norm_slack: f64,
    pub suspected_typos: Vec<TypoDiff>,
    pub soliton: CertificationReport,
    pub normalized_limit_printed: String,
    pub normalized_limit_derived: [f64; 3],
    pub pass: bool,
}

/// `grid^3` lattice points of `(0,2] x [-2,2] x (0,2]` plus `grid^2` seeded
/// random points.
pub fn verification_points(grid: usize, seed: u64) -> Vec<TriBracket> {
    let mut pts = Vec::with_capacity(grid.pow(3) + grid.pow(2));
    let f = |i: usize| (i + 1) as f64 / grid as f64;
    for i in 0..grid {
        for j in 0..grid {
            for k in 0..grid {
                let b = if grid == 1 { 0.0 } else { -2.0 + 4.0 * j as f64 / (grid - 1) as f64 };
                pts.push(TriBracket::unchecked(2.0 * f(i), b, 2.0 * f(k)));
            }
        }
    }
    pts.extend(slice_points(grid * grid, seed));
    pts
}

struct PointResult {
    coeff: [f64; 6],
    trace: f64,
    scaling: f64,
    scalar: f64,
    scalar_unordered: f64,
    weyl_ratio: f64,
    patterns: [f64; 4],
    b4_typo: f64,
    ode_typo: f64,
}

fn coefficient_deviation(closed: &BachOperator, oracle: &crate::nilalg::Mat4) -> [f64; 6] {
    let m = closed.matrix();
    let d = |i: usize, j: usize| (m[(i, j)] - oracle[(i, j)]).abs();
    [d(0, 0), d(1, 1), d(2, 2), d(3, 3), d(1, 2).max(d(2, 1)), d(2, 3).max(d(3, 2))]
}

fn check_point(p: &TriBracket) -> PointResult {
    let g = MetricSpec::identity();
    let mu = p.embed();
    let bundle = CurvatureBundle::compute(&mu, &g);
    let closed = closed_form_bach(p);
    let k = 1.7;
    let scaled = closed_form_bach(&p.scale(k)).matrix();
    let scale = closed.matrix().amax().max(1e-300);
    let mut patterns = [0.0; 4];
    for (slot, pat) in patterns.iter_mut().zip(ContractionPattern::ALL) {
        *slot = (bundle.bach_with_pattern(pat, &g) - closed.matrix()).amax();
    }
    PointResult {
        coeff: coefficient_deviation(&closed, &bundle.bach),
        trace: closed.trace().abs(),
        scaling: (scaled - closed.matrix() * k.powi(4)).amax() / (scale * k.powi(4)),
        scalar: (bundle.scalar + mu.norm_sq_ordered() / 4.0).abs(),
        scalar_unordered: (bundle.scalar + mu.norm_sq() / 4.0).abs(),
        weyl_ratio: closed.b1 / bundle.weyl.sum_sq(),
        patterns,
        b4_typo: (printed::b4(p) - closed.b4).abs(),
        ode_typo: (printed::ode_rhs(p)[0] - ode_rhs(p)[0]).abs(),
    }
}

pub fn verify(grid: usize, seed: u64) -> Result<VerifyReport> {
    if grid == 0 {
        return Err(Error::InvalidInput("grid must be at least 1".into()));
    }
    let pts = verification_points(grid, seed);
    let results: Vec<PointResult> = pts.par_iter().map(check_point).collect();
    let max_of = |f: &dyn Fn(&PointResult) -> f64| results.iter().map(f).fold(0.0, f64::max);

    let mut coefficient_max_deviation = [0.0; 6];
    for (i, slot) in coefficient_max_deviation.iter_mut().enumerate() {
        *slot = max_of(&|r| r.coeff[i]);
    }
    let contraction_patterns = ContractionPattern::ALL
        .iter()
        .enumerate()
        .map(|(i, &pattern)| PatternResidual { pattern, max_deviation: max_of(&|r| r.patterns[i]) })
        .collect();
    let weyl: Vec<f64> = results.iter().map(|r| r.weyl_ratio).filter(|v| v.is_finite()).collect();

    let evo: Vec<_> = pts.iter().map(evolution_identities).collect();
    let evolution_identity_max_residual = evo.iter().map(|e| e.identity_residual.abs()).fold(0.0, f64::max);
    let evolution_min_b_ratio_slack = evo.iter().map(|e| e.b_ratio_slack).fold(f64::INFINITY, f64::min);
    let evolution_min_norm_slack = evo.iter().map(|e| e.norm_slack).fold(f64::INFINITY, f64::min);

    let soliton = solve_soliton(&SearchRegion::default(), 400)?;
    let lambda_derived = soliton.solutions.first().map_or(f64::NAN, |s| s.lambda);
    let suspected_typos = vec![
        TypoDiff {
            name: "b4".into(),
            printed: "(-4a^4 + 3a^2c^2 - 8a^2b^2 - 20(b^2+c^2)^2)/24".into(),
            derived: "(-4a^4 + 3a^2c^2 - 24a^2b^2 - 20(b^2+c^2)^2)/24".into(),
            max_difference: max_of(&|r| r.b4_typo),
        },
        TypoDiff {
            name: "ode_a_prime".into(),
            printed: "24 b^2 c^4".into(),
            derived: "24 b^2 c^2".into(),
            max_difference: max_of(&|r| r.ode_typo),
        },
        TypoDiff {
            name: "soliton_lambda".into(),
            printed: format!("{}", printed::SOLITON_LAMBDA),
            derived: format!("{lambda_derived}"),
            max_difference: (lambda_derived - printed::SOLITON_LAMBDA).abs(),
        },
    ];

    let coeff_ok = coefficient_max_deviation.iter().all(|d| *d < FORMULA_TOL);
    let max_trace = max_of(&|r| r.trace);
    let max_scaling_deviation = max_of(&|r| r.scaling);
    let scalar_max_deviation = max_of(&|r| r.scalar);
    let s2 = 2f64.sqrt();
    let pass = coeff_ok
        && max_trace < IDENTITY_TOL
        && max_scaling_deviation < IDENTITY_TOL
        && scalar_max_deviation < IDENTITY_TOL
        && soliton.solutions.len() == 1;

    Ok(VerifyReport {
        grid,
        seed,
        points: pts.len(),
        coefficient_max_deviation,
        max_trace,
        max_scaling_deviation,
        scalar_max_deviation,
        scalar_unordered_norm_max_deviation: max_of(&|r| r.scalar_unordered),
        weyl_constant: Stats::of(&weyl),
        contraction_patterns,
        evolution_identity_max_residual,
        evolution_min_b_ratio_slack,
        evolution_min_norm_slack,
        suspected_typos,
        soliton,
        normalized_limit_printed: printed::NORMALIZED_LIMIT_TEXT.into(),
        normalized_limit_derived: [s2, 0.0, s2],
        pass,
    })
}
