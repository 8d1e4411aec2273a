//! Curvature of a left-invariant metric, computed algebraically in the
//! left-invariant frame `e_1..e_4` from the structure constants and the
//! Gram matrix at the identity.
//!
//! Conventions:
//!
//! * `gamma[i][j][k]` is the `e_k` component of `nabla_{e_i} e_j`.
//! * `R(X, Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_{[X, Y]}`.
//! * `riemann[a][b][c][d] = g(R(e_a, e_b) e_d, e_c)`, so `riemann[a][b][a][b]`
//!   is the sectional-curvature numerator and `Ric_{bd} = g^{ac} R_{abcd}`.
//! * `W = Rm - P (*) g` with Schouten tensor `P = (Ric - s g / 6) / 2` and
//!   Kulkarni-Nomizu product
//!   `(P (*) g)_{abcd} = P_ac g_bd + P_bd g_ac - P_ad g_bc - P_bc g_ad`.
//! * Bach: `B_ij = nabla^k nabla^l W_{ikjl} + (1/2) R^{kl} W_{ikjl}`.
//!
//! Dense tensors are stored row-major with the last index fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nilalg::{BracketTensor, Mat4};

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Compensated::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Inner product `<h ., h .>` at the identity, given by its Gram matrix.
///
/// Serialized as `{"gram": [[..], [..], [..], [..]]}`, one inner array per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawMetric", try_from = "RawMetric")]
pub struct MetricSpec {
    gram: Mat4,
    inverse: Mat4,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    gram: [[f64; 4]; 4],
}

impl TryFrom<RawMetric> for MetricSpec {
    type Error = Error;

    fn try_from(raw: RawMetric) -> Result<Self> {
        Self::new(Mat4::from_fn(|i, j| raw.gram[i][j]))
    }
}

impl From<MetricSpec> for RawMetric {
    fn from(g: MetricSpec) -> Self {
        RawMetric { gram: std::array::from_fn(|i| std::array::from_fn(|j| g.gram[(i, j)])) }
    }
}

impl MetricSpec {
    pub fn new(gram: Mat4) -> Result<Self> {
        let asym = (gram - gram.transpose()).amax();
        if asym > 1e-14 * gram.amax().max(1.0) {
            return Err(Error::NotPositiveDefinite(format!("asymmetry {asym:e}")));
        }
        let gram = 0.5 * (gram + gram.transpose());
        let eig = gram.symmetric_eigenvalues();
        if !(eig.min() > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("min eigenvalue {:e}", eig.min())));
        }
        let inverse = gram.cholesky().ok_or_else(|| Error::NotPositiveDefinite("cholesky failed".into()))?.inverse();
        Ok(Self { gram, inverse })
    }

    pub fn identity() -> Self {
        Self { gram: Mat4::identity(), inverse: Mat4::identity() }
    }

    /// The inner product `<h x, h y>`, i.e. Gram matrix `h^T h`.
    pub fn from_frame(h: &Mat4) -> Result<Self> {
        if h.determinant().abs() < 1e-300 {
            return Err(Error::NonInvertibleGauge);
        }
        Self::new(h.transpose() * h)
    }

    pub fn gram(&self) -> &Mat4 {
        &self.gram
    }

    pub fn inverse(&self) -> &Mat4 {
        &self.inverse
    }

    pub fn scaled(&self, rho: f64) -> Result<Self> {
        Self::new(self.gram * rho)
    }
}

/// Dense covariant tensor of rank `rank` on R^4.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameTensor {
    rank: usize,
    data: Vec<f64>,
}

impl FrameTensor {
    pub fn zeros(rank: usize) -> Self {
        Self { rank, data: vec![0.0; 4usize.pow(rank as u32)] }
    }

    pub fn from_fn(rank: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(rank);
        let mut idx = vec![0usize; rank];
        for slot in 0..t.data.len() {
            decode(slot, &mut idx);
            t.data[slot] = f(&idx);
        }
        t
    }

    pub fn from_matrix(m: &Mat4) -> Self {
        Self::from_fn(2, |ix| m[(ix[0], ix[1])])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * 4 + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Plain sum of squared components (frame norm, no metric).
    pub fn sum_sq(&self) -> f64 {
        compensated_sum(self.data.iter().map(|v| v * v))
    }
}

fn decode(mut slot: usize, idx: &mut [usize]) {
    for i in idx.iter_mut().rev() {
        *i = slot % 4;
        slot /= 4;
    }
}

/// Connection coefficients of the Levi-Civita connection.
pub type Connection = [[[f64; 4]; 4]; 4];

/// Koszul formula for left-invariant fields:
/// `2 <nabla_{e_i} e_j, e_k> = <[e_i,e_j],e_k> - <[e_j,e_k],e_i> + <[e_k,e_i],e_j>`.
pub fn levi_civita(mu: &BracketTensor, g: &MetricSpec) -> Connection {
    let gram = g.gram();
    let ginv = g.inverse();
    // lowered[i][j][k] = <mu(e_i, e_j), e_k>
    let mut lowered = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                lowered[i][j][k] = compensated_sum((0..4).map(|q| mu.get(i, j, q) * gram[(q, k)]));
            }
        }
    }
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let low: [f64; 4] = std::array::from_fn(|k| {
                0.5 * (lowered[i][j][k] - lowered[j][k][i] + lowered[k][i][j])
            });
            for q in 0..4 {
                gamma[i][j][q] = compensated_sum((0..4).map(|k| low[k] * ginv[(k, q)]));
            }
        }
    }
    gamma
}

/// Fully covariant curvature tensor `riemann[a][b][c][d] = g(R(e_a, e_b) e_d, e_c)`.
pub fn riemann(gamma: &Connection, mu: &BracketTensor, g: &MetricSpec) -> FrameTensor {
    // op[i][j][k][p]: e_p component of R(e_i, e_j) e_k
    let mut op = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for p in 0..4 {
                    op[i][j][k][p] = compensated_sum((0..4).flat_map(|q| {
                        [
                            gamma[j][k][q] * gamma[i][q][p],
                            -gamma[i][k][q] * gamma[j][q][p],
                            -mu.get(i, j, q) * gamma[q][k][p],
                        ]
                    }));
                }
            }
        }
    }
    let gram = g.gram();
    FrameTensor::from_fn(4, |ix| {
        let (a, b, c, d) = (ix[0], ix[1], ix[2], ix[3]);
        compensated_sum((0..4).map(|p| op[a][b][d][p] * gram[(p, c)]))
    })
}

pub fn ricci(riemann: &FrameTensor, g: &MetricSpec) -> Mat4 {
    let ginv = g.inverse();
    let mut ric = Mat4::zeros();
    for b in 0..4 {
        for d in 0..4 {
            ric[(b, d)] = compensated_sum(
                (0..16).map(|ac| ginv[(ac / 4, ac % 4)] * riemann.get(&[ac / 4, b, ac % 4, d])),
            );
        }
    }
    ric
}

pub fn scalar(ricci: &Mat4, g: &MetricSpec) -> f64 {
    compensated_sum((0..16).map(|ij| g.inverse()[(ij / 4, ij % 4)] * ricci[(ij / 4, ij % 4)]))
}

/// Kulkarni-Nomizu product of two symmetric 2-tensors.
pub fn kulkarni_nomizu(p: &Mat4, g: &Mat4) -> FrameTensor {
    FrameTensor::from_fn(4, |ix| {
        let (a, b, c, d) = (ix[0], ix[1], ix[2], ix[3]);
        p[(a, c)] * g[(b, d)] + p[(b, d)] * g[(a, c)] - p[(a, d)] * g[(b, c)] - p[(b, c)] * g[(a, d)]
    })
}

pub fn schouten(ricci: &Mat4, scalar: f64, g: &MetricSpec) -> Mat4 {
    0.5 * (ricci - g.gram() * (scalar / 6.0))
}

pub fn weyl(riemann: &FrameTensor, ricci: &Mat4, scalar: f64, g: &MetricSpec) -> FrameTensor {
    let kn = kulkarni_nomizu(&schouten(ricci, scalar, g), g.gram());
    FrameTensor::from_fn(4, |ix| riemann.get(ix) - kn.get(ix))
}

/// Covariant derivative of a tensor with constant frame components:
/// `(nabla_m T)_{i_1..i_p} = - sum_r gamma[m][i_r][q] T_{i_1..q..i_p}`.
/// The new index comes first.
pub fn covariant_derivative(t: &FrameTensor, gamma: &Connection) -> FrameTensor {
    let p = t.rank();
    let mut scratch = vec![0usize; p];
    FrameTensor::from_fn(p + 1, |ix| {
        let m = ix[0];
        let rest = &ix[1..];
        let mut acc = Compensated::default();
        for r in 0..p {
            scratch.copy_from_slice(rest);
            for q in 0..4 {
                scratch[r] = q;
                acc.add(-gamma[m][rest[r]][q] * t.get(&scratch));
            }
        }
        acc.value()
    })
}

/// Which slots of `W` the two derivatives are contracted with, and the sign
/// of the Ricci term. Only [`ContractionPattern::Ikjl`] reproduces the
/// closed-form Bach operator; the others are kept for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ContractionPattern {
    /// `nabla^k nabla^l W_{ikjl} + (1/2) R^{kl} W_{ikjl}`
    Ikjl,
    /// `nabla^k nabla^l W_{ikjl} - (1/2) R^{kl} W_{ikjl}`
    IkjlMinus,
    /// `nabla^k nabla^l W_{kijl} + (1/2) R^{kl} W_{ikjl}`
    Kijl,
    /// `nabla^k nabla^l W_{kijl} - (1/2) R^{kl} W_{ikjl}`
    KijlMinus,
}

impl ContractionPattern {
    pub const ALL: [ContractionPattern; 4] = [Self::Ikjl, Self::IkjlMinus, Self::Kijl, Self::KijlMinus];
}

/// Everything the oracle computes for one `(mu, g)`.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureBundle {
    pub gamma: Connection,
    pub riemann: FrameTensor,
    pub ricci: Mat4,
    pub scalar: f64,
    pub weyl: FrameTensor,
    /// `nabla^k nabla^l W_{ikjl}`.
    pub weyl_div2: Mat4,
    /// Bach bilinear form `B_ij`.
    pub bach: Mat4,
    /// Bach endomorphism `G^-1 B`.
    pub bach_endo: Mat4,
    #[serde(skip)]
    nabla2_weyl: FrameTensor,
    #[serde(skip)]
    ricci_term: Mat4,
}

impl CurvatureBundle {
    pub fn compute(mu: &BracketTensor, g: &MetricSpec) -> Self {
        let gamma = levi_civita(mu, g);
        let riemann = riemann(&gamma, mu, g);
        let ricci = ricci(&riemann, g);
        let scalar = scalar(&ricci, g);
        let weyl = weyl(&riemann, &ricci, scalar, g);
        let nabla2_weyl = covariant_derivative(&covariant_derivative(&weyl, &gamma), &gamma);
        let ginv = g.inverse();
        let ricci_up = ginv * ricci * ginv;
        let ricci_term = Mat4::from_fn(|i, j| {
            0.5 * compensated_sum((0..16).map(|kl| ricci_up[(kl / 4, kl % 4)] * weyl.get(&[i, kl / 4, j, kl % 4])))
        });
        let weyl_div2 = double_divergence(&nabla2_weyl, ginv, false);
        let bach = weyl_div2 + ricci_term;
        let bach_endo = ginv * bach;
        Self { gamma, riemann, ricci, scalar, weyl, weyl_div2, bach, bach_endo, nabla2_weyl, ricci_term }
    }

    pub fn nabla2_weyl(&self) -> &FrameTensor {
        &self.nabla2_weyl
    }

    /// Bach bilinear form under an alternative contraction pattern.
    pub fn bach_with_pattern(&self, pattern: ContractionPattern, g: &MetricSpec) -> Mat4 {
        let (first_slot_swapped, sign) = match pattern {
            ContractionPattern::Ikjl => (false, 1.0),
            ContractionPattern::IkjlMinus => (false, -1.0),
            ContractionPattern::Kijl => (true, 1.0),
            ContractionPattern::KijlMinus => (true, -1.0),
        };
        double_divergence(&self.nabla2_weyl, g.inverse(), first_slot_swapped) + self.ricci_term * sign
    }

    /// `|B|_G = sqrt(tr((G^-1 B)^2))`.
    pub fn bach_norm(&self) -> f64 {
        (self.bach_endo * self.bach_endo).trace().max(0.0).sqrt()
    }

    /// Largest metric trace of the Weyl tensor over its six slot pairs.
    pub fn weyl_trace_defect(&self, g: &MetricSpec) -> f64 {
        let ginv = g.inverse();
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let mut worst: f64 = 0.0;
        for (s1, s2) in pairs {
            for x in 0..4 {
                for y in 0..4 {
                    let v = compensated_sum((0..16).map(|pq| {
                        let mut ix = [0usize; 4];
                        let others: Vec<usize> = (0..4).filter(|s| *s != s1 && *s != s2).collect();
                        ix[s1] = pq / 4;
                        ix[s2] = pq % 4;
                        ix[others[0]] = x;
                        ix[others[1]] = y;
                        ginv[(pq / 4, pq % 4)] * self.weyl.get(&ix)
                    }));
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }
}

/// `g^{ka} g^{lb} (nabla_a nabla_b W)_{i k j l}` (or `_{k i j l}` if swapped).
fn double_divergence(nabla2_w: &FrameTensor, ginv: &Mat4, swapped: bool) -> Mat4 {
    Mat4::from_fn(|i, j| {
        compensated_sum((0..256).map(|n| {
            let (k, a, l, b) = (n / 64, (n / 16) % 4, (n / 4) % 4, n % 4);
            let w = if swapped {
                nabla2_w.get(&[a, b, k, i, j, l])
            } else {
                nabla2_w.get(&[a, b, i, k, j, l])
            };
            ginv[(k, a)] * ginv[(l, b)] * w
        }))
    })
}

/// The Bach tensor of `(mu, g)` at the identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BachOracle {
    /// Bilinear form `B_ij`.
    pub bilinear: Mat4,
    /// Endomorphism `G^-1 B`, self-adjoint for `G`.
    pub endomorphism: Mat4,
}

pub fn bach_oracle(mu: &BracketTensor, g: &MetricSpec) -> BachOracle {
    let b = CurvatureBundle::compute(mu, g);
    BachOracle { bilinear: b.bach, endomorphism: b.bach_endo }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilalg::{TriBracket, Vec4};
    use approx::assert_abs_diff_eq;

    fn tri(a: f64, b: f64, c: f64) -> BracketTensor {
        TriBracket::new(a, b, c).unwrap().embed()
    }

    fn skewed_metric() -> MetricSpec {
        let h = Mat4::new(
            1.3, 0.2, -0.1, 0.0, //
            0.1, 0.9, 0.3, -0.2, //
            0.0, -0.4, 1.1, 0.25, //
            0.2, 0.0, 0.1, 0.8,
        );
        MetricSpec::from_frame(&h).unwrap()
    }

    #[test]
    fn metric_validation() {
        let mut g = Mat4::identity();
        g[(2, 2)] = -1.0;
        assert!(matches!(MetricSpec::new(g), Err(Error::NotPositiveDefinite(_))));
        let mut g = Mat4::identity();
        g[(0, 1)] = 0.3;
        assert!(MetricSpec::new(g).is_err());
        assert!(MetricSpec::new(*skewed_metric().gram()).is_ok());
    }

    #[test]
    fn metric_json_round_trip_validates() {
        let g = skewed_metric();
        let text = serde_json::to_string(&g).unwrap();
        let back: MetricSpec = serde_json::from_str(&text).unwrap();
        assert!((back.gram() - g.gram()).amax() < 1e-15);
        assert!((back.inverse() - g.inverse()).amax() < 1e-12);
        let bad = r#"{"gram":[[1,0,0,0],[0,1,0,0],[0,0,-1,0],[0,0,0,1]]}"#;
        assert!(serde_json::from_str::<MetricSpec>(bad).is_err());
        let rows: MetricSpec = serde_json::from_str(r#"{"gram":[[2,1,0,0],[1,2,0,0],[0,0,1,0],[0,0,0,1]]}"#).unwrap();
        assert_eq!(rows.gram()[(0, 1)], 1.0);
        assert!(text.starts_with(r#"{"gram":[["#));
    }

    #[test]
    fn flat_abelian_group() {
        let b = CurvatureBundle::compute(&BracketTensor::zero(), &MetricSpec::identity());
        assert!(b.gamma.iter().flatten().flatten().all(|v| *v == 0.0));
        assert_eq!(b.riemann.max_abs(), 0.0);
        assert_eq!(b.scalar, 0.0);
        assert_eq!(b.weyl.max_abs(), 0.0);
        assert_eq!(b.bach.amax(), 0.0);
    }

    #[test]
    fn connection_examples_on_n4() {
        let gamma = levi_civita(&BracketTensor::n4(), &MetricSpec::identity());
        assert_eq!(gamma[0][1], [0.0, 0.0, 0.5, 0.0]);
        assert_eq!(gamma[1][1], [0.0; 4]);
    }

    #[test]
    fn torsion_free_and_metric() {
        let mu = tri(0.7, -1.2, 1.5);
        let g = skewed_metric();
        let gamma = levi_civita(&mu, &g);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    // nabla_i e_j - nabla_j e_i = mu(e_i, e_j)
                    assert_abs_diff_eq!(gamma[i][j][k] - gamma[j][i][k], mu.get(i, j, k), epsilon = 1e-12);
                    // e_i <e_j, e_k> = 0 = <nabla_i e_j, e_k> + <e_j, nabla_i e_k>
                    let s: f64 = (0..4)
                        .map(|q| gamma[i][j][q] * g.gram()[(q, k)] + gamma[i][k][q] * g.gram()[(j, q)])
                        .sum();
                    assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
                }
            }
        }
        let dg = covariant_derivative(&FrameTensor::from_matrix(g.gram()), &gamma);
        assert!(dg.max_abs() < 1e-12);
    }

    #[test]
    fn riemann_symmetries_and_bianchi() {
        let g = skewed_metric();
        let b = CurvatureBundle::compute(&tri(1.1, 0.6, 0.4), &g);
        let r = &b.riemann;
        for ix in 0..256 {
            let (i, k, j, l) = (ix / 64, (ix / 16) % 4, (ix / 4) % 4, ix % 4);
            let v = r.get(&[i, k, j, l]);
            assert_abs_diff_eq!(v, -r.get(&[k, i, j, l]), epsilon = 1e-10);
            assert_abs_diff_eq!(v, -r.get(&[i, k, l, j]), epsilon = 1e-10);
            assert_abs_diff_eq!(v, r.get(&[j, l, i, k]), epsilon = 1e-10);
            let bianchi = v + r.get(&[k, j, i, l]) + r.get(&[j, i, k, l]);
            assert_abs_diff_eq!(bianchi, 0.0, epsilon = 1e-10);
        }
        assert!(b.weyl_trace_defect(&g) < 1e-10);
        assert_abs_diff_eq!((b.ricci - b.ricci.transpose()).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn scalar_curvature_of_heisenberg_and_n4() {
        // Heisenberg at a = 1 has s = -1/2.
        let s = CurvatureBundle::compute(&BracketTensor::heisenberg(1.0), &MetricSpec::identity()).scalar;
        assert_abs_diff_eq!(s, -0.5, epsilon = 1e-14);
        let s = CurvatureBundle::compute(&BracketTensor::n4(), &MetricSpec::identity()).scalar;
        assert_abs_diff_eq!(s, -1.0, epsilon = 1e-14);
        let s = CurvatureBundle::compute(&TriBracket::unchecked(2.0, 0.0, 0.0).embed(), &MetricSpec::identity());
        assert_abs_diff_eq!(s.scalar, -2.0, epsilon = 1e-14);
    }

    #[test]
    fn weyl_vanishes_for_constant_curvature() {
        let g = skewed_metric();
        let k = 0.7;
        let gram = g.gram();
        let rm = FrameTensor::from_fn(4, |ix| {
            k * (gram[(ix[0], ix[2])] * gram[(ix[1], ix[3])] - gram[(ix[0], ix[3])] * gram[(ix[1], ix[2])])
        });
        let ric = ricci(&rm, &g);
        assert_abs_diff_eq!((ric - gram * (3.0 * k)).amax(), 0.0, epsilon = 1e-12);
        let s = scalar(&ric, &g);
        assert_abs_diff_eq!(s, 12.0 * k, epsilon = 1e-12);
        assert!(weyl(&rm, &ric, s, &g).max_abs() < 1e-12);
    }

    #[test]
    fn scalar_is_parallel_and_weyl_is_not() {
        let b = CurvatureBundle::compute(&BracketTensor::n4(), &MetricSpec::identity());
        let ds = covariant_derivative(&FrameTensor::from_fn(0, |_| b.scalar), &b.gamma);
        assert_eq!(ds.max_abs(), 0.0);
        let dw = covariant_derivative(&b.weyl, &b.gamma);
        assert!(dw.max_abs() > 0.1);
    }

    #[test]
    fn bach_of_n4_matches_closed_values() {
        let b = bach_oracle(&BracketTensor::n4(), &MetricSpec::identity());
        let expected = Mat4::from_diagonal(&Vec4::new(7.0 / 8.0, 7.0 / 24.0, -7.0 / 24.0, -7.0 / 8.0));
        assert!((b.endomorphism - expected).amax() < 1e-13);
        assert_eq!(b.bilinear, b.endomorphism);
    }

    #[test]
    fn bach_is_symmetric_and_trace_free_for_skewed_metric() {
        let g = skewed_metric();
        let b = CurvatureBundle::compute(&tri(0.9, -0.5, 1.4), &g);
        assert!((b.bach - b.bach.transpose()).amax() < 1e-10);
        assert_eq!(b.bach_with_pattern(ContractionPattern::Ikjl, &g), b.bach);
        assert!(b.bach_endo.trace().abs() < 1e-10);
    }

    #[test]
    fn bundle_serializes() {
        let b = CurvatureBundle::compute(&BracketTensor::n4(), &MetricSpec::identity());
        let v = serde_json::to_value(&b).unwrap();
        assert_eq!(v["riemann"]["rank"], 4);
        assert_eq!(v["riemann"]["data"].as_array().unwrap().len(), 256);
    }
}
