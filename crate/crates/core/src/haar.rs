//! Reproducible Haar sampling on U(m), with splittable counter-based seed
//! streams so parallel sample i never depends on sample j.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{GeomError, Result};
use crate::projective::{inner, Cv, ProjectivePoint};

pub type Cm = DMatrix<Complex64>;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One slot of a splittable seed space: the pair (master_seed, index)
/// determines every draw bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    pub master_seed: u64,
    pub index: u64,
}

impl SeedStream {
    /// Counter-based derivation: hashes (master, index) into a 256-bit
    /// ChaCha key, injectively for all practical purposes.
    pub fn derive(master_seed: u64, index: u64) -> Self {
        Self { master_seed, index }
    }

    /// Nested derivation: folds this stream's coordinates into a fresh
    /// master seed so sub-streams never collide with top-level streams.
    pub fn child(&self, index: u64) -> Self {
        let mut s = self
            .master_seed
            .wrapping_mul(0xa076_1d64_78bd_642f)
            ^ self.index.rotate_left(32);
        let folded = splitmix64(&mut s) ^ self.index;
        SeedStream::derive(folded, index)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = self
            .master_seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            ^ self.index.rotate_left(17);
        // burn the state through the index so adjacent streams decorrelate
        let mut s = splitmix64(&mut state) ^ self.index;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

/// Unitary (or special unitary) matrix with validated invariants.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    entries: Cm,
    special: bool,
}

impl UnitaryMatrix {
    pub fn from_entries(entries: Cm) -> Result<Self> {
        let m = entries.nrows();
        if entries.ncols() != m {
            return Err(GeomError::DimensionMismatch {
                left: m,
                right: entries.ncols(),
            });
        }
        let defect = unitarity_defect(&entries);
        if defect > 1e-12 {
            return Err(GeomError::NotUnit { defect });
        }
        Ok(Self {
            entries,
            special: false,
        })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            entries: Cm::identity(m, m),
            special: true,
        }
    }

    pub fn matrix(&self) -> &Cm {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_special(&self) -> bool {
        self.special
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            special: self.special,
        }
    }

    pub fn apply(&self, z: &Cv) -> Cv {
        &self.entries * z
    }

    pub fn apply_point(&self, p: &ProjectivePoint) -> ProjectivePoint {
        ProjectivePoint::new(self.apply(p.lift())).expect("unitary image of a unit vector")
    }

    /// U * det(U)^{-1/m} with the principal m-th root; determinant 1,
    /// identical projective action up to the finite center.
    pub fn to_special(&self) -> Self {
        let m = self.entries.nrows();
        let det = self.entries.clone().lu().determinant();
        let theta = det.arg();
        let root = Complex64::from_polar(det.norm().powf(1.0 / m as f64), theta / m as f64);
        Self {
            entries: &self.entries * (Complex64::new(1.0, 0.0) / root),
            special: true,
        }
    }
}

pub fn unitarity_defect(u: &Cm) -> f64 {
    let m = u.nrows();
    let prod = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let want = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            worst = worst.max((prod[(i, j)] - want).norm());
        }
    }
    worst
}

fn standard_complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / Complex64::from(2f64.sqrt())
}

/// Modified Gram-Schmidt with a re-orthogonalization pass. The diagonal
/// R factors are the (real positive) column norms, so the resulting Q is
/// exactly the QR factor with positive diagonal -- Haar-distributed when
/// the input is Ginibre. Returns `None` on numerically rank-deficient input.
fn mgs_unitary(a: &Cm) -> Option<Cm> {
    let m = a.nrows();
    let mut q = a.clone();
    for j in 0..m {
        let mut col = q.column(j).clone_owned();
        for _ in 0..2 {
            for k in 0..j {
                let prev = q.column(k).clone_owned();
                let c = inner(&col, &prev);
                col -= prev * c;
            }
        }
        let n = col.norm();
        if n < 1e-10 {
            return None;
        }
        col /= Complex64::from(n);
        q.set_column(j, &col);
    }
    Some(q)
}

/// Haar-distributed element of U(m): Ginibre draw followed by the
/// positive-diagonal QR factorization. Deterministic given the stream.
pub fn haar_unitary(m: usize, stream: SeedStream) -> UnitaryMatrix {
    assert!(m >= 1, "dimension must be at least 1");
    let mut rng = stream.rng();
    loop {
        let a = Cm::from_fn(m, m, |_, _| standard_complex_gaussian(&mut rng));
        if let Some(q) = mgs_unitary(&a) {
            return UnitaryMatrix {
                entries: q,
                special: false,
            };
        }
        // rank-deficient Ginibre draw has probability zero; redraw
    }
}

/// Completes z (unit) to a unitary matrix whose first column is z.
pub fn complete_to_unitary(z: &Cv) -> UnitaryMatrix {
    let m = z.len();
    let mut skip = 0usize;
    for k in 1..m {
        if z[k].norm() > z[skip].norm() {
            skip = k;
        }
    }
    let mut a = Cm::zeros(m, m);
    a.set_column(0, z);
    let mut col = 1usize;
    for k in 0..m {
        if k == skip {
            continue;
        }
        a[(k, col)] = Complex64::new(1.0, 0.0);
        col += 1;
    }
    UnitaryMatrix {
        entries: mgs_unitary(&a).expect("columns chosen linearly independent"),
        special: false,
    }
}

/// Haar-random element of the subgroup of U(n+1) fixing `r` projectively:
/// V diag(phase, W) V* with W Haar on U(n), phase uniform, V e_1 = z_r.
pub fn stabilizer_sample(r: &ProjectivePoint, stream: SeedStream) -> UnitaryMatrix {
    let m = r.ambient_len();
    let v = complete_to_unitary(r.lift());
    let mut rng = stream.rng();
    let phase = Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU);
    let mut block = Cm::zeros(m, m);
    block[(0, 0)] = phase;
    if m > 1 {
        // reuse the same rng for the inner Haar draw to keep one stream per sample
        let a = loop {
            let g = Cm::from_fn(m - 1, m - 1, |_, _| standard_complex_gaussian(&mut rng));
            if let Some(q) = mgs_unitary(&g) {
                break q;
            }
        };
        for i in 0..m - 1 {
            for j in 0..m - 1 {
                block[(i + 1, j + 1)] = a[(i, j)];
            }
        }
    }
    UnitaryMatrix {
        entries: v.matrix() * block * v.matrix().adjoint(),
        special: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn haar_is_unitary_and_deterministic() {
        for idx in 0..20 {
            let u = haar_unitary(3, SeedStream::derive(42, idx));
            assert!(unitarity_defect(u.matrix()) <= 1e-12);
            let v = haar_unitary(3, SeedStream::derive(42, idx));
            assert_eq!(u.matrix(), v.matrix());
        }
    }

    #[test]
    fn trace_second_moment_matches_character_orthogonality() {
        // int |tr U|^2 dU = 1 on U(3)
        let samples = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..samples {
            let u = haar_unitary(3, SeedStream::derive(7, i));
            let t = u.matrix().trace().norm_sqr();
            sum += t;
            sumsq += t * t;
        }
        let mean = sum / samples as f64;
        let var = (sumsq / samples as f64 - mean * mean).max(0.0);
        let se = (var / samples as f64).sqrt();
        assert!(
            (mean - 1.0).abs() < 0.05f64.max(4.0 * se),
            "mean {mean} se {se}"
        );
    }

    #[test]
    fn to_special_examples() {
        let i = UnitaryMatrix::identity(3);
        let s = i.to_special();
        assert!((s.matrix() - Cm::identity(3, 3)).norm() < 1e-14);

        // diag(i, 1) -> diag(i, 1) e^{-i pi/4}
        let mut d = Cm::identity(2, 2);
        d[(0, 0)] = Complex64::new(0.0, 1.0);
        let u = UnitaryMatrix::from_entries(d.clone()).unwrap();
        let s = u.to_special();
        let w = d * Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        assert!((s.matrix() - w).norm() < 1e-13);

        for idx in 0..100 {
            let u = haar_unitary(4, SeedStream::derive(3, idx)).to_special();
            let det = u.matrix().clone().lu().determinant();
            assert!((det - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            assert!(u.is_special());
        }
    }

    #[test]
    fn stabilizer_fixes_the_point() {
        let z = Cv::from_iterator(
            3,
            [(0.3, 0.4), (-0.5, 0.2), (0.6, -0.1)]
                .iter()
                .map(|&(r, i)| Complex64::new(r, i)),
        );
        let r = ProjectivePoint::new(z).unwrap();
        for idx in 0..50 {
            let k = stabilizer_sample(&r, SeedStream::derive(11, idx));
            assert!(unitarity_defect(k.matrix()) < 1e-12);
            let moved = k.apply_point(&r);
            assert!(r.fs_distance(&moved).unwrap() < 1e-7);
            let a = r.gauge_fixed();
            let b = moved.gauge_fixed();
            assert!((a.lift() - b.lift()).norm() < 1e-10);
        }
    }

    #[test]
    fn stabilizer_at_e1_is_block_diagonal() {
        let r = ProjectivePoint::new(Cv::from_fn(3, |k, _| {
            Complex64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0)
        }))
        .unwrap();
        let k = stabilizer_sample(&r, SeedStream::derive(5, 0));
        for j in 1..3 {
            assert!(k.matrix()[(0, j)].norm() < 1e-14);
            assert!(k.matrix()[(j, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn derived_streams_are_distinct_and_reproducible() {
        assert_ne!(SeedStream::derive(42, 0), SeedStream::derive(42, 1));
        let mut a = SeedStream::derive(42, 7).rng();
        let mut b = SeedStream::derive(42, 7).rng();
        for _ in 0..16 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }

    #[test]
    fn million_streams_no_128bit_collision() {
        let mut seen = HashSet::with_capacity(1 << 20);
        for i in 0..1_000_000u64 {
            let mut rng = SeedStream::derive(42, i).rng();
            let first = ((rng.gen::<u64>() as u128) << 64) | rng.gen::<u64>() as u128;
            assert!(seen.insert(first), "collision at index {i}");
        }
    }

    #[test]
    fn left_invariance_of_trace_moments() {
        let samples = 10_000;
        let v = haar_unitary(3, SeedStream::derive(99, 0));
        let (mut m1, mut m2, mut m1v, mut m2v) = (
            Complex64::new(0.0, 0.0),
            0.0f64,
            Complex64::new(0.0, 0.0),
            0.0f64,
        );
        let mut sq1 = 0.0;
        let mut sq1v = 0.0;
        for i in 0..samples {
            let u = haar_unitary(3, SeedStream::derive(100, i));
            let t = u.matrix().trace();
            let tv = (v.matrix() * u.matrix()).trace();
            m1 += t;
            m2 += t.norm_sqr();
            m1v += tv;
            m2v += tv.norm_sqr();
            sq1 += t.norm_sqr();
            sq1v += tv.norm_sqr();
        }
        let n = samples as f64;
        let se1 = (sq1 / n).sqrt() / n.sqrt();
        let se1v = (sq1v / n).sqrt() / n.sqrt();
        assert!((m1 / n).norm() < 4.0 * se1.max(se1v));
        assert!((m1v / n).norm() < 4.0 * se1.max(se1v));
        // second moments both near 1
        let se2 = (2.0 / n).sqrt(); // crude bound on Var(|tr|^2)/n
        assert!((m2 / n - 1.0).abs() < 4.0 * se2 + 0.05);
        assert!((m2v / n - 1.0).abs() < 4.0 * se2 + 0.05);
    }
}
