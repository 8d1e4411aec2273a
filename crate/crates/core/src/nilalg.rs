//! Four-dimensional Lie brackets: storage, predicates, group actions,
//! norms, derivations and the exponential-coordinate group law.
//!
//! Basis indices are 0-based in code (`e[0]..e[3]`) and 1-based in the JSON
//! format and in error messages.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec4 = Vector4<f64>;
pub type Mat4 = Matrix4<f64>;

/// Defect tolerance for the Jacobi, nilpotency and derivation predicates.
pub const DEFECT_TOL: f64 = 1e-12;

/// Unordered basis pairs `(i, j)` with `i < j`, in storage order.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// The three `(i, j, k)` slots that carry `a`, `b`, `c` in the slice.
pub const STRUCTURE_SLOTS: [(usize, usize, usize); 3] = [(0, 1, 2), (0, 1, 3), (0, 2, 3)];

fn pair_slot(i: usize, j: usize) -> Option<(usize, f64)> {
    let (lo, hi, sign) = match i.cmp(&j) {
        std::cmp::Ordering::Less => (i, j, 1.0),
        std::cmp::Ordering::Greater => (j, i, -1.0),
        std::cmp::Ordering::Equal => return None,
    };
    let idx = PAIRS.iter().position(|&p| p == (lo, hi))?;
    Some((idx, sign))
}

/// Antisymmetric structure constants `mu(e_i, e_j) = sum_k mu[i][j][k] e_k`.
///
/// Only the 24 entries with `i < j` are stored, so antisymmetry holds by
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketTensor {
    entries: [f64; 24],
}

impl Default for BracketTensor {
    fn default() -> Self {
        Self::zero()
    }
}

impl BracketTensor {
    pub fn zero() -> Self {
        Self { entries: [0.0; 24] }
    }

    /// Builds a bracket from its values on `(i, j, k)` with `i < j`.
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut entries = [0.0; 24];
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            for k in 0..4 {
                entries[p * 4 + k] = f(i, j, k);
            }
        }
        Self { entries }
    }

    /// Raw storage: entry `4 * p + k` is `mu[i][j][k]` for `PAIRS[p] = (i, j)`.
    pub fn from_entries(entries: [f64; 24]) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[f64; 24] {
        &self.entries
    }

    /// The abelian bracket on R^4.
    pub fn abelian() -> Self {
        Self::zero()
    }

    /// `R + h_3`: `mu(e1, e2) = a e3`.
    pub fn heisenberg(a: f64) -> Self {
        let mut mu = Self::zero();
        mu.set(0, 1, 2, a);
        mu
    }

    /// The indecomposable algebra `n_4`: `mu(e1, e2) = e3`, `mu(e1, e3) = e4`.
    pub fn n4() -> Self {
        TriBracket::unchecked(1.0, 0.0, 1.0).embed()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        match pair_slot(i, j) {
            Some((p, sign)) => sign * self.entries[p * 4 + k],
            None => 0.0,
        }
    }

    /// Sets `mu[i][j][k]` (and implicitly `mu[j][i][k]`).
    ///
    /// # Panics
    /// If `i == j`.
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let (p, sign) = pair_slot(i, j).expect("bracket of a basis vector with itself");
        self.entries[p * 4 + k] = sign * value;
    }

    /// `mu(x, y)`.
    pub fn bracket(&self, x: &Vec4, y: &Vec4) -> Vec4 {
        let mut out = Vec4::zeros();
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            let w = x[i] * y[j] - x[j] * y[i];
            if w == 0.0 {
                continue;
            }
            for k in 0..4 {
                out[k] += w * self.entries[p * 4 + k];
            }
        }
        out
    }

    /// `ad_mu x`, the matrix of `y -> mu(x, y)`.
    pub fn ad(&self, x: &Vec4) -> Mat4 {
        let mut m = Mat4::zeros();
        for j in 0..4 {
            let col = self.bracket(x, &Vec4::ith(j, 1.0));
            m.set_column(j, &col);
        }
        m
    }

    /// Norm summed over unordered pairs `i < j`, so that `mu_{a,b,c}` gives
    /// `a^2 + b^2 + c^2`.
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum()
    }

    /// Inner product matching [`BracketTensor::norm_sq`].
    pub fn inner(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(x, y)| x * y).sum()
    }

    /// Norm summed over all ordered pairs `(i, j)`; twice [`BracketTensor::norm_sq`].
    pub fn norm_sq_ordered(&self) -> f64 {
        2.0 * self.norm_sq()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { entries: self.entries.map(|v| s * v) }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut entries = self.entries;
        for (e, o) in entries.iter_mut().zip(&other.entries) {
            *e += o;
        }
        Self { entries }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    /// Largest entry outside the three structure slots of the `(a, b, c)` family.
    pub fn off_structure_max(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            for k in 0..4 {
                if !STRUCTURE_SLOTS.contains(&(i, j, k)) {
                    m = m.max(self.entries[p * 4 + k].abs());
                }
            }
        }
        m
    }

    /// Max over basis triples of the norm of the Jacobi cyclic sum.
    pub fn jacobi_defect(&self) -> f64 {
        let e = |i| Vec4::ith(i, 1.0);
        let mut worst: f64 = 0.0;
        for x in 0..4 {
            for y in (x + 1)..4 {
                for z in (y + 1)..4 {
                    let (x, y, z) = (e(x), e(y), e(z));
                    let s = self.bracket(&self.bracket(&x, &y), &z)
                        + self.bracket(&self.bracket(&y, &z), &x)
                        + self.bracket(&self.bracket(&z, &x), &y);
                    worst = worst.max(s.norm());
                }
            }
        }
        worst
    }

    /// Max over basis vectors `x` of `||(ad x)^4||`; zero for nilpotent brackets.
    pub fn nilpotency_defect(&self) -> f64 {
        (0..4)
            .map(|i| {
                let ad = self.ad(&Vec4::ith(i, 1.0));
                (ad * ad * ad * ad).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Checks membership in the variety of nilpotent Lie brackets.
    pub fn validate(&self) -> Result<()> {
        let j = self.jacobi_defect();
        if j > DEFECT_TOL {
            return Err(Error::InvalidInput(format!("Jacobi defect {j:e}")));
        }
        let n = self.nilpotency_defect();
        if n > DEFECT_TOL {
            return Err(Error::InvalidInput(format!("nilpotency defect {n:e}")));
        }
        Ok(())
    }

    /// Change of basis `h . mu = h mu(h^-1 ., h^-1 .)`.
    pub fn gl_action(&self, h: &Mat4) -> Result<Self> {
        let hinv = checked_inverse(h)?;
        Ok(self.gl_action_with_inverse(h, &hinv))
    }

    fn gl_action_with_inverse(&self, h: &Mat4, hinv: &Mat4) -> Self {
        let mut out = [0.0; 24];
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            let v = h * self.bracket(&hinv.column(i).into(), &hinv.column(j).into());
            out[p * 4..p * 4 + 4].copy_from_slice(v.as_slice());
        }
        Self { entries: out }
    }

    /// `pi(A) mu = A mu - mu(A ., .) - mu(., A .)`.
    pub fn pi_rep(&self, a: &Mat4) -> Self {
        let mut out = [0.0; 24];
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            let ei = Vec4::ith(i, 1.0);
            let ej = Vec4::ith(j, 1.0);
            let v = a * self.bracket(&ei, &ej)
                - self.bracket(&a.column(i).into(), &ej)
                - self.bracket(&ei, &a.column(j).into());
            for k in 0..4 {
                out[p * 4 + k] = v[k];
            }
        }
        Self { entries: out }
    }

    /// Max over basis pairs of `||D mu(e_i, e_j) - mu(D e_i, e_j) - mu(e_i, D e_j)||`.
    pub fn derivation_defect(&self, d: &Mat4) -> f64 {
        self.pi_rep(d)
            .entries
            .chunks(4)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Exponential-coordinate group law of the simply connected group
    /// (Baker-Campbell-Hausdorff, exact for step <= 3).
    pub fn group_multiply(&self, x: &Vec4, y: &Vec4) -> Vec4 {
        let xy = self.bracket(x, y);
        x + y + 0.5 * xy + (self.bracket(&xy, y) - self.bracket(&xy, x)) / 12.0
    }
}

pub(crate) fn checked_inverse(h: &Mat4) -> Result<Mat4> {
    let svd = h.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || !(smax / smin).is_finite() || smax / smin > 1e14 {
        return Err(Error::NonInvertibleGauge);
    }
    h.try_inverse().ok_or(Error::NonInvertibleGauge)
}

#[derive(Serialize, Deserialize)]
struct BracketJson {
    entries: Vec<(usize, usize, usize, f64)>,
}

impl Serialize for BracketTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut entries = Vec::new();
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            for k in 0..4 {
                let v = self.entries[p * 4 + k];
                if v != 0.0 {
                    entries.push((i + 1, j + 1, k + 1, v));
                }
            }
        }
        BracketJson { entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BracketTensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = BracketJson::deserialize(d)?;
        let mut mu = BracketTensor::zero();
        for (i, j, k, v) in raw.entries {
            if !(1..=4).contains(&i) || !(1..=4).contains(&j) || !(1..=4).contains(&k) {
                return Err(D::Error::custom(format!("index out of range in ({i}, {j}, {k})")));
            }
            if i >= j {
                return Err(D::Error::custom(format!("entry ({i}, {j}, {k}) must have i < j")));
            }
            mu.set(i - 1, j - 1, k - 1, v);
        }
        Ok(mu)
    }
}

/// The reduced parameters of `mu_{a,b,c}`: `mu(e1, e2) = a e3 + b e4`,
/// `mu(e1, e3) = c e4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTri")]
pub struct TriBracket {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Deserialize)]
struct RawTri {
    a: f64,
    b: f64,
    c: f64,
}

impl TryFrom<RawTri> for TriBracket {
    type Error = Error;
    fn try_from(r: RawTri) -> Result<Self> {
        TriBracket::new(r.a, r.b, r.c)
    }
}

impl TriBracket {
    /// A point of the slice; requires `a > 0` and `c > 0`.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if a > 0.0 && c > 0.0 && b.is_finite() && a.is_finite() && c.is_finite() {
            Ok(Self { a, b, c })
        } else {
            Err(Error::OutsideSlice { a, b, c })
        }
    }

    /// No slice check; for points on the boundary `a = 0` or `c = 0`.
    pub fn unchecked(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn in_slice(&self) -> bool {
        self.a > 0.0 && self.c > 0.0
    }

    pub fn embed(&self) -> BracketTensor {
        let mut mu = BracketTensor::zero();
        mu.set(0, 1, 2, self.a);
        mu.set(0, 1, 3, self.b);
        mu.set(0, 2, 3, self.c);
        mu
    }

    /// Reads the three structure slots; other entries are ignored.
    pub fn from_bracket(mu: &BracketTensor) -> Self {
        Self { a: mu.get(0, 1, 2), b: mu.get(0, 1, 3), c: mu.get(0, 2, 3) }
    }

    pub fn norm_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { a: s * self.a, b: s * self.b, c: s * self.c }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }
}

/// Parameters of a derivation of `mu_{a,b,c}`:
///
/// ```text
/// | alpha  0        0          0          |
/// | l21    beta     0          0          |
/// | l31    x        alpha+beta 0          |
/// | l41    l42      c*gamma    2alpha+beta|
/// ```
///
/// with `x = a*gamma + (b/c)*alpha`. On `b = 0` this is `a*gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivationMatrix {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `(l21, l31, l41, l42)` in 1-based (row, column) positions.
    pub lower: [f64; 4],
}

impl DerivationMatrix {
    pub fn diagonal(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, gamma: 0.0, lower: [0.0; 4] }
    }

    pub fn matrix(&self, p: &TriBracket) -> Mat4 {
        let (al, be, ga) = (self.alpha, self.beta, self.gamma);
        let [l21, l31, l41, l42] = self.lower;
        let x = p.a * ga + p.b / p.c * al;
        Mat4::new(
            al, 0.0, 0.0, 0.0, //
            l21, be, 0.0, 0.0, //
            l31, x, al + be, 0.0, //
            l41, l42, p.c * ga, 2.0 * al + be,
        )
    }

    /// `diag(alpha, beta, alpha + beta, 2 alpha + beta)`.
    pub fn diagonal_entries(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.alpha + self.beta, 2.0 * self.alpha + self.beta]
    }
}

/// Dimension of the derivation algebra, from the rank of the linear map
/// `D -> pi(D) mu` on `gl_4`.
pub fn derivation_algebra_dim(mu: &BracketTensor, tol: f64) -> usize {
    let mut m = nalgebra::DMatrix::<f64>::zeros(24, 16);
    for col in 0..16 {
        let mut d = Mat4::zeros();
        d[(col / 4, col % 4)] = 1.0;
        let img = mu.pi_rep(&d);
        for (row, v) in img.entries().iter().enumerate() {
            m[(row, col)] = *v;
        }
    }
    let sv = m.svd(false, false).singular_values;
    let smax = sv.max().max(1.0);
    16 - sv.iter().filter(|s| **s > tol * smax).count()
}
