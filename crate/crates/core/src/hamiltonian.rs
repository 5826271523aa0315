//! Smooth S^1-invariant Hamiltonians on CP^n as sums of products of
//! normalized Hermitian quadratic forms, with their symplectic gradient
//! flow. The quadratic subcase flows along unitary orbits [e^{2itA} z],
//! which pins the sign and scale conventions (see the oracle tests).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::projective::{inner, Cv, ProjectivePoint};

pub type Cm = DMatrix<Complex64>;

/// Constant relating the flow of H = z*Az to the unitary orbit [e^{i c t A} z].
/// Measured once by the quadratic oracle test, asserted thereafter.
pub const QUADRATIC_ORBIT_CONSTANT: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct HamiltonianTerm {
    pub coefficient: f64,
    pub factors: Vec<Cm>,
}

/// H([z]) = sum_t c_t prod_f (z* A_f z)/(z* z), each A_f Hermitian.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    dim: usize, // ambient n+1
    terms: Vec<HamiltonianTerm>,
}

impl HamiltonianSpec {
    pub fn new(dim: usize, terms: Vec<HamiltonianTerm>) -> Result<Self> {
        for term in &terms {
            for a in &term.factors {
                if a.nrows() != dim || a.ncols() != dim {
                    return Err(GeomError::DimensionMismatch {
                        left: a.nrows(),
                        right: dim,
                    });
                }
                let defect = (a - a.adjoint()).norm();
                if defect > 1e-12 {
                    return Err(GeomError::NotHermitian { defect });
                }
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: vec![] }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[HamiltonianTerm] {
        &self.terms
    }

    fn check_point(&self, p: &ProjectivePoint) -> Result<()> {
        if p.ambient_len() != self.dim {
            return Err(GeomError::DimensionMismatch {
                left: p.ambient_len(),
                right: self.dim,
            });
        }
        Ok(())
    }

    /// Value of H at [z]; gauge- and scale-invariant.
    pub fn evaluate(&self, p: &ProjectivePoint) -> Result<f64> {
        self.check_point(p)?;
        Ok(self.evaluate_lift(p.lift()))
    }

    fn evaluate_lift(&self, z: &Cv) -> f64 {
        let nz = z.norm_squared();
        self.terms
            .iter()
            .map(|t| {
                t.coefficient
                    * t.factors
                        .iter()
                        .map(|a| (inner(&(a * z), z).re) / nz)
                        .product::<f64>()
            })
            .sum()
    }

    /// Euclidean gradient of the sphere-lifted H (the component along z is
    /// irrelevant after horizontal projection): sum over terms and factors
    /// of c (prod of the other quadratic forms) 2 A z.
    fn gradient_lift(&self, z: &Cv) -> Cv {
        let mut grad = Cv::zeros(self.dim);
        for term in &self.terms {
            let values: Vec<f64> = term
                .factors
                .iter()
                .map(|a| inner(&(a * z), z).re)
                .collect();
            for (f, a) in term.factors.iter().enumerate() {
                let others: f64 = values
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != f)
                    .map(|(_, v)| v)
                    .product();
                grad += (a * z) * Complex64::from(2.0 * term.coefficient * others);
            }
        }
        grad
    }

    /// Symplectic gradient X_H = i (horizontal projection of the euclidean
    /// gradient); horizontal at p.
    pub fn hamiltonian_field(&self, p: &ProjectivePoint) -> Result<Cv> {
        self.check_point(p)?;
        Ok(self.field_lift(p.lift()))
    }

    fn field_lift(&self, z: &Cv) -> Cv {
        let grad = self.gradient_lift(z);
        let c = inner(&grad, z) / Complex64::from(z.norm_squared());
        (grad - z * c) * Complex64::new(0.0, 1.0)
    }

    /// RK4 on the sphere lift with renormalization each step.
    pub fn flow_lift(&self, z0: &Cv, time: f64, step: f64) -> Result<Cv> {
        assert!(step <= 1e-2, "step must be at most 1e-2");
        assert!(time.is_finite());
        if time == 0.0 {
            return Ok(z0.clone());
        }
        let h0 = self.evaluate_lift(z0);
        let steps = (time.abs() / step).ceil().max(1.0) as usize;
        let h = time / steps as f64;
        let mut z = z0.clone();
        for _ in 0..steps {
            let k1 = self.field_lift(&z);
            let k2 = self.field_lift(&(&z + &k1 * Complex64::from(h / 2.0)));
            let k3 = self.field_lift(&(&z + &k2 * Complex64::from(h / 2.0)));
            let k4 = self.field_lift(&(&z + &k3 * Complex64::from(h)));
            z += (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4)
                * Complex64::from(h / 6.0);
            let n = z.norm();
            z /= Complex64::from(n);
        }
        let drift = (self.evaluate_lift(&z) - h0).abs();
        if drift > 1e-6 {
            return Err(GeomError::StepTooLarge { drift });
        }
        Ok(z)
    }

    /// Endpoint of the time-T Hamiltonian isotopy applied to p.
    pub fn flow_point(&self, p: &ProjectivePoint, time: f64, step: f64) -> Result<ProjectivePoint> {
        self.check_point(p)?;
        ProjectivePoint::new(self.flow_lift(p.lift(), time, step)?)
    }
}

// ---- config-file representation --------------------------------------

/// Serialized form: matrices as row-major nested arrays of [re, im] pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpecFile {
    pub n: usize,
    #[serde(default)]
    pub term: Vec<HamiltonianTermFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianTermFile {
    pub coefficient: f64,
    pub factors: Vec<Vec<Vec<[f64; 2]>>>,
}

impl HamiltonianSpecFile {
    pub fn to_spec(&self) -> Result<HamiltonianSpec> {
        let dim = self.n + 1;
        let mut terms = Vec::with_capacity(self.term.len());
        for t in &self.term {
            let mut factors = Vec::with_capacity(t.factors.len());
            for rows in &t.factors {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(GeomError::DimensionMismatch {
                        left: rows.len(),
                        right: dim,
                    });
                }
                factors.push(Cm::from_fn(dim, dim, |i, j| {
                    Complex64::new(rows[i][j][0], rows[i][j][1])
                }));
            }
            terms.push(HamiltonianTerm {
                coefficient: t.coefficient,
                factors,
            });
        }
        HamiltonianSpec::new(dim, terms)
    }

    pub fn from_spec(spec: &HamiltonianSpec) -> Self {
        let dim = spec.dim;
        Self {
            n: dim - 1,
            term: spec
                .terms
                .iter()
                .map(|t| HamiltonianTermFile {
                    coefficient: t.coefficient,
                    factors: t
                        .factors
                        .iter()
                        .map(|a| {
                            (0..dim)
                                .map(|i| {
                                    (0..dim).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect()
                                })
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// exp(i t A) for Hermitian A via its eigendecomposition.
pub fn hermitian_exp_i(a: &Cm, t: f64) -> Cm {
    let sym = a.clone().symmetric_eigen();
    let q = sym.eigenvectors;
    let mut d = Cm::zeros(a.nrows(), a.nrows());
    for k in 0..a.nrows() {
        d[(k, k)] = Complex64::from_polar(1.0, t * sym.eigenvalues[k]);
    }
    &q * d * q.adjoint()
}

/// Random Hermitian matrix with entries of scale `scale`.
/// Random quartic Hamiltonian: a single product of two random Hermitian
/// quadratic forms with a bounded coefficient, for deformation experiments.
pub fn random_quartic(dim: usize, coeff_bound: f64, stream: crate::haar::SeedStream) -> HamiltonianSpec {
    let mut rng = stream.rng();
    use rand::Rng;
    let coefficient = rng.gen_range(-coeff_bound..coeff_bound);
    let factors = vec![
        random_hermitian(dim, 1.0, &mut rng),
        random_hermitian(dim, 1.0, &mut rng),
    ];
    HamiltonianSpec::new(
        dim,
        vec![HamiltonianTerm {
            coefficient,
            factors,
        }],
    )
    .expect("Hermitian by construction")
}

pub fn random_hermitian(dim: usize, scale: f64, rng: &mut impl rand::Rng) -> Cm {
    let a = Cm::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * Complex64::from(scale)
    });
    (&a + a.adjoint()) * Complex64::from(0.5)
}
