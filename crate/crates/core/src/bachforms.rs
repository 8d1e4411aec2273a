//! Closed-form Bach operator on the slice `mu_{a,b,c}` and the quantities
//! built from it: gauge, reduced ODE, evolution rates, normalization and
//! soliton residuals.

use nalgebra::{Matrix4x2, Vector4};
use serde::{Deserialize, Serialize};

use crate::nilalg::{BracketTensor, DerivationMatrix, Mat4, TriBracket};

/// Entries of the Bach endomorphism of `mu_{a,b,c}` (identity metric):
///
/// ```text
/// | b1 0  0  0  |
/// | 0  b2 b5 0  |
/// | 0  b5 b3 b6 |
/// | 0  0  b6 b4 |
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BachOperator {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
    pub b6: f64,
}

impl BachOperator {
    pub fn matrix(&self) -> Mat4 {
        Mat4::new(
            self.b1, 0.0, 0.0, 0.0, //
            0.0, self.b2, self.b5, 0.0, //
            0.0, self.b5, self.b3, self.b6, //
            0.0, 0.0, self.b6, self.b4,
        )
    }

    pub fn trace(&self) -> f64 {
        self.b1 + self.b2 + self.b3 + self.b4
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.b1, self.b2, self.b3, self.b4, self.b5, self.b6]
    }
}

/// Polynomial Bach operator. `b4` is the trace-free completion
/// `-(b1 + b2 + b3)`, written out.
pub fn closed_form_bach(p: &TriBracket) -> BachOperator {
    let (a2, b2, c2) = (p.a * p.a, p.b * p.b, p.c * p.c);
    let (a4, b4, c4) = (a2 * a2, b2 * b2, c2 * c2);
    let n = a2 + b2 + c2;
    BachOperator {
        b1: (4.0 * a4 + 8.0 * a2 * b2 - a2 * c2 + 4.0 * b4 + 8.0 * b2 * c2 + 4.0 * c4) / 8.0,
        b2: (12.0 * a4 + 24.0 * a2 * b2 - a2 * c2 + 12.0 * b4 + 8.0 * b2 * c2 - 4.0 * c4) / 24.0,
        b3: -(20.0 * a4 - a2 * c2 + 24.0 * a2 * b2 + 4.0 * b4 - 8.0 * b2 * c2 - 12.0 * c4) / 24.0,
        b4: (-4.0 * a4 + 3.0 * a2 * c2 - 24.0 * a2 * b2 - 20.0 * (b2 + c2) * (b2 + c2)) / 24.0,
        b5: 2.0 / 3.0 * p.b * p.c * n,
        b6: -2.0 / 3.0 * p.a * p.b * n,
    }
}

/// Values as they appear in print, kept for the discrepancy report.
pub mod printed {
    use crate::nilalg::TriBracket;

    /// Printed `b4`, with `-8 a^2 b^2` where the trace-free value has `-24 a^2 b^2`.
    pub fn b4(p: &TriBracket) -> f64 {
        let (a2, b2, c2) = (p.a * p.a, p.b * p.b, p.c * p.c);
        (-4.0 * a2 * a2 + 3.0 * a2 * c2 - 8.0 * a2 * b2 - 20.0 * (b2 + c2) * (b2 + c2)) / 24.0
    }

    /// Printed reduced ODE, including the degree-6 term `24 b^2 c^4` in `a'`.
    pub fn ode_rhs(p: &TriBracket) -> [f64; 3] {
        let (a, b, c) = (p.a, p.b, p.c);
        let (a2, b2, c2) = (a * a, b * b, c * c);
        let (a4, b4, c4) = (a2 * a2, b2 * b2, c2 * c2);
        [
            -a / 48.0 * (44.0 * a4 + 72.0 * a2 * b2 - 5.0 * a2 * c2 + 28.0 * b4 + 24.0 * b2 * c4 - 4.0 * c4),
            -b / 48.0
                * (60.0 * a4 + 104.0 * a2 * b2 + 57.0 * a2 * c2 + 44.0 * b4 + 104.0 * b2 * c2 + 60.0 * c4),
            -c / 48.0 * (-4.0 * a4 + 24.0 * a2 * b2 - 5.0 * a2 * c2 + 28.0 * b4 + 72.0 * b2 * c2 + 44.0 * c4),
        ]
    }

    /// Soliton parameters stated for `mu_{1,0,1}`.
    pub const SOLITON_ALPHA: f64 = -7.0 / 12.0;
    pub const SOLITON_BETA: f64 = -7.0 / 6.0;
    pub const SOLITON_LAMBDA: f64 = -21.0 / 16.0;

    /// Limit stated for the normalized flow, verbatim.
    pub const NORMALIZED_LIMIT_TEXT: &str = "lim a = lim c = 2 (with a^2 + c^2 -> 1 in the argument)";
}

/// Skew-symmetric gauge `R` with `B - R` lower triangular.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaugeSkew {
    pub matrix: Mat4,
}

impl GaugeSkew {
    /// Gauge for an arbitrary symmetric operator: the strict upper part minus
    /// its transpose.
    pub fn for_operator(b: &Mat4) -> Self {
        let upper = Mat4::from_fn(|i, j| if i < j { b[(i, j)] } else { 0.0 });
        Self { matrix: upper - upper.transpose() }
    }
}

pub fn gauge(p: &TriBracket) -> GaugeSkew {
    GaugeSkew::for_operator(&closed_form_bach(p).matrix())
}

/// Full generator `(1/2) pi(B - R) mu` of the gauged flow at `mu_{a,b,c}`.
pub fn gauged_generator(p: &TriBracket) -> BracketTensor {
    let b = closed_form_bach(p).matrix();
    let l = b - gauge(p).matrix;
    p.embed().pi_rep(&l).scale(0.5)
}

/// Reduced gauged flow `(a', b', c')`, read off the structure slots of
/// `(1/2) pi(B - R) mu`.
pub fn ode_rhs(p: &TriBracket) -> [f64; 3] {
    TriBracket::from_bracket(&gauged_generator(p)).as_array()
}

/// Instantaneous rates of the monitored scale-invariant quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvolutionRates {
    pub dlog_a_over_c: f64,
    pub d_b2_over_a2: f64,
    pub d_norm2: f64,
    /// `dlog_a_over_c - (c^2 - a^2) |mu|^2`; zero exactly.
    pub identity_residual: f64,
    /// `-(2/3)(b^2/a^2)|mu|^4 - d_b2_over_a2`; nonnegative.
    pub b_ratio_slack: f64,
    /// `-|mu|^6 / 12 - d_norm2`; nonnegative.
    pub norm_slack: f64,
}

pub fn evolution_identities(p: &TriBracket) -> EvolutionRates {
    let [da, db, dc] = ode_rhs(p);
    let (a, b, c) = (p.a, p.b, p.c);
    let n = p.norm_sq();
    let dlog_a_over_c = da / a - dc / c;
    let ratio = b * b / (a * a);
    let d_b2_over_a2 = 2.0 * (b / a) * (db * a - da * b) / (a * a);
    let d_norm2 = 2.0 * (a * da + b * db + c * dc);
    EvolutionRates {
        dlog_a_over_c,
        d_b2_over_a2,
        d_norm2,
        identity_residual: dlog_a_over_c - (c * c - a * a) * n,
        b_ratio_slack: -2.0 / 3.0 * ratio * n * n - d_b2_over_a2,
        norm_slack: -n * n * n / 12.0 - d_norm2,
    }
}

/// `r = -(1/4) <pi(B) mu, mu>`; keeps `|mu| = 2` along the normalized flow.
pub fn normalization_r(p: &TriBracket) -> f64 {
    let mu = p.embed();
    -0.25 * mu.pi_rep(&closed_form_bach(p).matrix()).inner(&mu)
}

/// `s = -|mu|^2 / 4` with the ordered-pair norm, i.e. `-(a^2 + b^2 + c^2) / 2`.
pub fn scalar_curvature(p: &TriBracket) -> f64 {
    -p.embed().norm_sq_ordered() / 4.0
}

/// `lambda = -(4 alpha + 3 beta) / 4`, forced by trace-freeness.
pub fn soliton_lambda(alpha: f64, beta: f64) -> f64 {
    -(4.0 * alpha + 3.0 * beta) / 4.0
}

/// Candidate algebraic soliton `B = lambda I + diag(alpha, beta, alpha+beta, 2alpha+beta)`
/// on `mu_{a,0,c}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonSolution {
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub residual: f64,
}

impl SolitonSolution {
    pub fn new(a: f64, c: f64, alpha: f64, beta: f64) -> Self {
        let mut s = Self { a, c, alpha, beta, lambda: soliton_lambda(alpha, beta), residual: 0.0 };
        s.residual = soliton_residual(&s);
        s
    }

    /// Best `(alpha, beta)` in the least-squares sense at fixed `(a, c)`.
    pub fn best_fit(a: f64, c: f64) -> Self {
        let bach = closed_form_bach(&TriBracket::unchecked(a, 0.0, c));
        let rhs = Vector4::new(bach.b1, bach.b2, bach.b3, bach.b4);
        // lambda + diag as a linear map of (alpha, beta), lambda = -alpha - 3/4 beta
        let m = Matrix4x2::new(
            0.0, -0.75, //
            -1.0, 0.25, //
            0.0, 0.25, //
            1.0, 0.25,
        );
        let sol = m.svd(true, true).solve(&rhs, 1e-14).expect("svd solve");
        Self::new(a, c, sol[0], sol[1])
    }

    pub fn derivation(&self) -> DerivationMatrix {
        DerivationMatrix::diagonal(self.alpha, self.beta)
    }
}

/// `|B(mu_{a,0,c}) - lambda I - D|_inf` with `lambda` from trace-freeness.
pub fn soliton_residual(s: &SolitonSolution) -> f64 {
    let bach = closed_form_bach(&TriBracket::unchecked(s.a, 0.0, s.c));
    let lambda = soliton_lambda(s.alpha, s.beta);
    let d = s.derivation().diagonal_entries();
    let b = [bach.b1, bach.b2, bach.b3, bach.b4];
    let diag = (0..4).map(|i| (b[i] - lambda - d[i]).abs()).fold(0.0, f64::max);
    diag.max(bach.b5.abs()).max(bach.b6.abs())
}
