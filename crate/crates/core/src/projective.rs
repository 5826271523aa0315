//! Fubini-Study geometry of CP^n as the unit sphere S^{2n+1} in C^{n+1}
//! modulo the diagonal phase circle. With this normalization CP^1 is the
//! round sphere of radius 1/2, vol(RP^2) = 2pi and vol(L_2) = 4pi^2/(3 sqrt 3).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GeomError, Result};

pub type Cv = DVector<Complex64>;

/// Hermitian inner product <a, b> = sum_k a_k conj(b_k).
pub fn inner(a: &Cv, b: &Cv) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..a.len() {
        s += a[k] * b[k].conj();
    }
    s
}

/// Real inner product g(a, b) = Re <a, b>.
pub fn re_inner(a: &Cv, b: &Cv) -> f64 {
    inner(a, b).re
}

/// A point of CP^n held as a unit homogeneous representative.
///
/// The representative's phase is arbitrary; all geometric operations are
/// gauge-invariant. `gauge_fix` produces the canonical representative used
/// for serialization and dedupe.
#[derive(Debug, Clone)]
pub struct ProjectivePoint {
    z: Cv,
}

impl ProjectivePoint {
    /// Normalizes `z` to unit length without touching the phase.
    pub fn new(z: Cv) -> Result<Self> {
        let norm = z.norm();
        if norm < 1e-14 {
            return Err(GeomError::ZeroVector { norm });
        }
        Ok(Self {
            z: z / Complex64::from(norm),
        })
    }

    /// Canonical representative: unit norm, entry of largest modulus real
    /// positive (ties broken by lowest index). Idempotent.
    pub fn gauge_fix(z: &Cv) -> Result<Self> {
        let p = Self::new(z.clone())?;
        let mut best = 0usize;
        for k in 1..p.z.len() {
            if p.z[k].norm() > p.z[best].norm() {
                best = k;
            }
        }
        let phase = p.z[best] / Complex64::from(p.z[best].norm());
        Ok(Self {
            z: p.z.map(|w| w * phase.conj()),
        })
    }

    /// Re-gauges this point to the canonical representative.
    pub fn gauge_fixed(&self) -> Self {
        Self::gauge_fix(&self.z).expect("unit representative cannot be zero")
    }

    pub fn lift(&self) -> &Cv {
        &self.z
    }

    /// Ambient projective dimension n (the lift lives in C^{n+1}).
    pub fn dim(&self) -> usize {
        self.z.len() - 1
    }

    pub fn ambient_len(&self) -> usize {
        self.z.len()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.z.len() != other.z.len() {
            return Err(GeomError::DimensionMismatch {
                left: self.z.len(),
                right: other.z.len(),
            });
        }
        Ok(())
    }

    /// Geodesic distance of the quotient metric, arccos |<z_p, z_q>|, in [0, pi/2].
    pub fn fs_distance(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        let c = inner(&self.z, &other.z).norm().min(1.0);
        Ok(c.acos())
    }

    /// Smooth zero detector: 1 - |<z_p, z_q>|^2 = sin^2(fs_distance), in [0, 1].
    pub fn chordal_gap(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        let c = inner(&self.z, &other.z).norm_sqr();
        Ok((1.0 - c).max(0.0))
    }

    /// Projects `w` onto the horizontal space at this point: w - <w, z> z.
    pub fn horizontal_project(&self, w: &Cv) -> Cv {
        let c = inner(w, &self.z);
        w - &self.z * c
    }

    /// Residual of the horizontality condition <w, z> = 0.
    pub fn horizontality_residual(&self, w: &Cv) -> f64 {
        inner(w, &self.z).norm()
    }

    /// Symplectic form on horizontal vectors, with the sign convention
    /// pinned by omega(u, i u) = -|u|^2 (so omega(e_2, i e_2) = -1 at e_1).
    pub fn symplectic_pairing(&self, u: &Cv, v: &Cv) -> Result<f64> {
        for w in [u, v] {
            let r = self.horizontality_residual(w);
            if r > 1e-6 {
                return Err(GeomError::NotHorizontal { residual: r });
            }
        }
        Ok(inner(u, v).im)
    }

    /// Real-orthonormal basis of the horizontal space: a complex orthonormal
    /// basis w_1..w_n of the orthogonal complement of z, followed by
    /// i w_1 .. i w_n.
    pub fn horizontal_basis(&self) -> Vec<Cv> {
        let m = self.z.len();
        let mut cols: Vec<Cv> = Vec::with_capacity(m - 1);
        // Seed with coordinate vectors, skipping the index where z is largest.
        let mut skip = 0usize;
        for k in 1..m {
            if self.z[k].norm() > self.z[skip].norm() {
                skip = k;
            }
        }
        for k in 0..m {
            if k == skip {
                continue;
            }
            let mut e = Cv::zeros(m);
            e[k] = Complex64::new(1.0, 0.0);
            cols.push(e);
        }
        // Complex Gram-Schmidt against z and the previous columns, twice.
        let mut basis: Vec<Cv> = Vec::with_capacity(m - 1);
        for c in cols {
            let mut v = c;
            for _ in 0..2 {
                v -= &self.z * inner(&v, &self.z);
                for b in &basis {
                    let coef = inner(&v, b);
                    v -= b * coef;
                }
            }
            let n = v.norm();
            basis.push(v / Complex64::from(n));
        }
        let imag: Vec<Cv> = basis
            .iter()
            .map(|b| b * Complex64::new(0.0, 1.0))
            .collect();
        basis.extend(imag);
        basis
    }
}

/// Real-linearly independent horizontal lifts of tangent vectors at a point.
#[derive(Debug, Clone)]
pub struct HorizontalFrame {
    pub base: ProjectivePoint,
    pub vectors: Vec<Cv>,
}

impl HorizontalFrame {
    pub fn new(base: ProjectivePoint, vectors: Vec<Cv>) -> Result<Self> {
        for v in &vectors {
            let r = base.horizontality_residual(v);
            if r > 1e-10 {
                return Err(GeomError::NotHorizontal { residual: r });
            }
        }
        let frame = Self { base, vectors };
        let det = frame.real_gram_det();
        if det.abs() < 1e-12 {
            return Err(GeomError::DegenerateFrame { det });
        }
        Ok(frame)
    }

    /// Determinant of the real Gram matrix of the frame vectors.
    pub fn real_gram_det(&self) -> f64 {
        let n = self.vectors.len();
        let g = DMatrix::from_fn(n, n, |i, j| re_inner(&self.vectors[i], &self.vectors[j]));
        g.determinant()
    }

    /// Image of the frame under a unitary matrix (frames push forward).
    pub fn transform(&self, u: &DMatrix<Complex64>) -> Result<Self> {
        let base = ProjectivePoint::new(u * self.base.lift())?;
        let vectors = self.vectors.iter().map(|v| u * v).collect();
        HorizontalFrame::new(base, vectors)
    }
}

/// Real Gram-Schmidt with one re-orthogonalization pass; returns `None`
/// when a vector collapses below tolerance.
fn real_orthonormalize(vectors: &[Cv]) -> Option<Vec<Cv>> {
    let mut out: Vec<Cv> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &out {
                let c = re_inner(&w, b);
                w -= b * Complex64::from(c);
            }
        }
        let n = w.norm();
        if n < 1e-12 {
            return None;
        }
        out.push(w / Complex64::from(n));
    }
    Some(out)
}

/// Wedge volume |u_1 ^ ... ^ v_n| of two orthonormalized Lagrangian frames
/// based at a common point: |det| of the 2n x 2n real coordinate matrix of
/// the concatenated bases. In [0, 1]; 0 when the planes share a direction,
/// 1 when they are orthogonal complements.
pub fn sigma_angle(a: &HorizontalFrame, b: &HorizontalFrame) -> Result<f64> {
    let gap = a.base.chordal_gap(&b.base)?;
    if gap > 1e-10 {
        return Err(GeomError::BasePointMismatch { gap });
    }
    let n = a.base.dim();
    if a.vectors.len() != n || b.vectors.len() != n {
        return Err(GeomError::DimensionMismatch {
            left: a.vectors.len(),
            right: b.vectors.len(),
        });
    }
    for f in [a, b] {
        let det = f.real_gram_det();
        if det.abs() < 1e-12 {
            return Err(GeomError::DegenerateFrame { det });
        }
    }
    let ua = match real_orthonormalize(&a.vectors) {
        Some(v) => v,
        None => return Err(GeomError::DegenerateFrame { det: 0.0 }),
    };
    let ub = match real_orthonormalize(&b.vectors) {
        Some(v) => v,
        None => return Err(GeomError::DegenerateFrame { det: 0.0 }),
    };
    let basis = a.base.horizontal_basis();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for (j, u) in ua.iter().chain(ub.iter()).enumerate() {
        for (i, e) in basis.iter().enumerate() {
            m[(i, j)] = re_inner(u, e);
        }
    }
    Ok(m.determinant().abs())
}
