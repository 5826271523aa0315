//! Transverse intersection counting #(gP n Q): grid-seeded damped
//! Newton/Gauss-Newton on chart parameters, deterministic dedupe of the
//! image points, and the linear-algebra oracle for gRP^n n RP^n.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::haar::UnitaryMatrix;
use crate::lagrangian::{
    clifford_angles, rp_frame_at, LevelSetResidual, ParametricLagrangian,
};
use crate::projective::{inner, sigma_angle, Cv, HorizontalFrame, ProjectivePoint};

/// Transversality gate: samples with any intersection angle below this are
/// flagged near-degenerate and excluded from statistics.
pub const SIGMA_MIN: f64 = 1e-4;
/// Accepted (theta, phi) pairs merge when their image points are closer
/// than this in Fubini-Study distance.
pub const DEDUPE_RADIUS: f64 = 1e-6;
/// Chordal-gap acceptance threshold for the parametric objective.
pub const GAP_ACCEPT: f64 = 1e-16;
/// Residual-norm acceptance threshold for the level-set path.
pub const RESIDUAL_ACCEPT: f64 = 1e-10;
/// Iteration budget per seed.
pub const MAX_ITERS: usize = 60;
const MAX_HALVINGS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Clean,
    NearDegenerate,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Parametric,
    Levelset,
    EigenOracle,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub seeds_tried: usize,
    pub accepted_raw: usize,
    pub discarded: usize,
    pub budget_exceeded: usize,
    /// iteration_histogram[k] = number of accepted seeds that took k iterations
    pub iteration_histogram: Vec<usize>,
}

/// Deduplicated transverse intersections of gP n Q with diagnostics.
#[derive(Debug, Clone)]
pub struct IntersectionReport {
    pub count: usize,
    pub points: Vec<ProjectivePoint>,
    pub min_sigma: f64,
    pub flag: Flag,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl IntersectionReport {
    pub fn is_clean(&self) -> bool {
        self.flag == Flag::Clean
    }

    /// Points as rows of 2(n+1) reals (re_1, im_1, ..).
    pub fn points_flat(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| {
                p.lift()
                    .iter()
                    .flat_map(|c| [c.re, c.im])
                    .collect::<Vec<f64>>()
            })
            .collect()
    }
}

struct Accepted {
    point: ProjectivePoint,
    params_p: Vec<f64>,
    params_q: Option<Vec<f64>>,
    iters: usize,
}

enum SeedOutcome {
    Accepted(Accepted),
    Discarded,
    BudgetExceeded,
}

fn grid_seeds(domains: &[(f64, f64)], grid: usize) -> Vec<Vec<f64>> {
    let n = domains.len();
    let total = grid.pow(n as u32);
    (0..total)
        .map(|flat| {
            let mut idx = flat;
            let mut theta = vec![0.0f64; n];
            for k in 0..n {
                let h = (domains[k].1 - domains[k].0) / grid as f64;
                // offset the lattice from symmetric special configurations
                theta[k] = domains[k].0 + (idx % grid) as f64 * h + 0.371 * h;
                idx /= grid;
            }
            theta
        })
        .collect()
}

fn solve_step(j: &DMatrix<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
    let jt = j.transpose();
    let mut normal = &jt * j;
    for k in 0..normal.nrows() {
        normal[(k, k)] += 1e-12;
    }
    let rhs = -(&jt * r);
    normal.lu().solve(&rhs)
}

/// Tangent frame of the moving side at parameters theta, pushed forward by g.
/// RP^n frames are rebuilt at the point itself so the spherical chart's
/// pole degeneracy never enters.
fn side_frame(
    model: &ParametricLagrangian,
    theta: &[f64],
    g: Option<&UnitaryMatrix>,
) -> Result<HorizontalFrame> {
    let frame = match model {
        ParametricLagrangian::RealProjective { .. } => rp_frame_at(&model.chart(theta)?)?,
        _ => model.frame(theta)?,
    };
    match g {
        Some(u) => frame.transform(u.matrix()),
        None => Ok(frame),
    }
}

/// Frame of a level-set target at one of its points.
fn target_frame_at(target: LevelSetResidual, point: &ProjectivePoint) -> Result<HorizontalFrame> {
    match target {
        LevelSetResidual::Clifford { .. } => {
            let angles = clifford_angles(point);
            let model = ParametricLagrangian::clifford(angles.len());
            model.frame(&angles)
        }
        LevelSetResidual::RealProjective { .. } => rp_frame_at(point),
    }
}

fn dedupe(accepted: Vec<Accepted>) -> Vec<Accepted> {
    let mut items: Vec<Accepted> = accepted
        .into_iter()
        .map(|mut a| {
            a.point = a.point.gauge_fixed();
            a
        })
        .collect();
    items.sort_by(|a, b| {
        let ka: Vec<f64> = a.point.lift().iter().flat_map(|c| [c.re, c.im]).collect();
        let kb: Vec<f64> = b.point.lift().iter().flat_map(|c| [c.re, c.im]).collect();
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<Accepted> = Vec::new();
    'outer: for item in items {
        for rep in &kept {
            if rep.point.fs_distance(&item.point).unwrap_or(0.0) < DEDUPE_RADIUS {
                continue 'outer;
            }
        }
        kept.push(item);
    }
    kept
}

fn finish_report(
    kept: Vec<Accepted>,
    method: Method,
    diagnostics: Diagnostics,
    frames: impl Fn(&Accepted) -> Result<(HorizontalFrame, HorizontalFrame)> + Sync,
) -> IntersectionReport {
    let mut min_sigma = f64::INFINITY;
    let mut failed = false;
    for item in &kept {
        match frames(item).and_then(|(a, b)| sigma_angle(&a, &b)) {
            Ok(s) => min_sigma = min_sigma.min(s),
            Err(_) => failed = true,
        }
    }
    if kept.is_empty() {
        min_sigma = f64::INFINITY;
    }
    let flag = if failed {
        Flag::Failed
    } else if min_sigma < SIGMA_MIN {
        Flag::NearDegenerate
    } else {
        Flag::Clean
    };
    IntersectionReport {
        count: kept.len(),
        points: kept.into_iter().map(|a| a.point).collect(),
        min_sigma,
        flag,
        method,
        diagnostics,
    }
}

fn run_seeds<F>(seeds: Vec<Vec<f64>>, solver: F) -> (Vec<Accepted>, Diagnostics)
where
    F: Fn(&[f64]) -> SeedOutcome + Sync,
{
    let outcomes: Vec<SeedOutcome> = seeds.par_iter().map(|s| solver(s)).collect();
    let mut diagnostics = Diagnostics {
        seeds_tried: seeds.len(),
        iteration_histogram: vec![0; MAX_ITERS + 1],
        ..Default::default()
    };
    let mut accepted = Vec::new();
    for outcome in outcomes {
        match outcome {
            SeedOutcome::Accepted(a) => {
                diagnostics.accepted_raw += 1;
                diagnostics.iteration_histogram[a.iters.min(MAX_ITERS)] += 1;
                accepted.push(a);
            }
            SeedOutcome::Discarded => diagnostics.discarded += 1,
            SeedOutcome::BudgetExceeded => diagnostics.budget_exceeded += 1,
        }
    }
    (accepted, diagnostics)
}

/// Counts #(gP n Q) by minimizing the chordal gap between the two charts
/// with damped Gauss-Newton from every node of a uniform seed grid.
pub fn count_parametric(
    p: &ParametricLagrangian,
    q: &ParametricLagrangian,
    g: &UnitaryMatrix,
    grid: usize,
) -> Result<IntersectionReport> {
    if p.n() != q.n() {
        return Err(GeomError::DimensionMismatch {
            left: p.n(),
            right: q.n(),
        });
    }
    let n = p.n();
    let mut domains = p.domain();
    domains.extend(q.domain());
    let seeds = grid_seeds(&domains, grid);

    let solver = |seed: &[f64]| -> SeedOutcome {
        let mut theta = seed[..n].to_vec();
        let mut phi = seed[n..].to_vec();
        let eval = |theta: &[f64], phi: &[f64]| -> Result<(Cv, Cv, Complex64, Cv)> {
            let u = g.apply(&p.chart_lift(theta)?);
            let v = q.chart_lift(phi)?;
            let s = inner(&v, &u);
            let r = &v - &u * s;
            Ok((u, v, s, r))
        };
        let (mut u, mut v, mut s, mut r) = match eval(&theta, &phi) {
            Ok(x) => x,
            Err(_) => return SeedOutcome::Discarded,
        };
        let mut f = r.norm_squared();
        for iter in 0..MAX_ITERS {
            if f < 1e-26 {
                return SeedOutcome::Accepted(Accepted {
                    point: ProjectivePoint::new(u).expect("unit"),
                    params_p: theta,
                    params_q: Some(phi),
                    iters: iter,
                });
            }
            let jp = match p.chart_jacobian(&theta) {
                Ok(j) => j,
                Err(_) => return SeedOutcome::Discarded,
            };
            let jq = match q.chart_jacobian(&phi) {
                Ok(j) => j,
                Err(_) => return SeedOutcome::Discarded,
            };
            let m = u.len();
            let mut jac = DMatrix::<f64>::zeros(2 * m, 2 * n);
            for k in 0..n {
                let du = g.apply(&jp[k]);
                let col = &u * (-inner(&v, &du)) - &du * s;
                for i in 0..m {
                    jac[(2 * i, k)] = col[i].re;
                    jac[(2 * i + 1, k)] = col[i].im;
                }
                let dv = &jq[k];
                let col = dv - &u * inner(dv, &u);
                for i in 0..m {
                    jac[(2 * i, n + k)] = col[i].re;
                    jac[(2 * i + 1, n + k)] = col[i].im;
                }
            }
            let rv = DVector::from_fn(2 * m, |i, _| {
                if i % 2 == 0 {
                    r[i / 2].re
                } else {
                    r[i / 2].im
                }
            });
            let delta = match solve_step(&jac, &rv) {
                Some(d) => d,
                None => return SeedOutcome::Discarded,
            };
            // step halving on the smooth nonnegative objective
            let mut scale = 1.0;
            let mut improved = false;
            for _ in 0..=MAX_HALVINGS {
                let nt: Vec<f64> = (0..n).map(|k| theta[k] + scale * delta[k]).collect();
                let np: Vec<f64> = (0..n).map(|k| phi[k] + scale * delta[n + k]).collect();
                if let Ok((nu, nv, ns, nr)) = eval(&nt, &np) {
                    let nf = nr.norm_squared();
                    if nf < f {
                        theta = nt;
                        phi = np;
                        u = nu;
                        v = nv;
                        s = ns;
                        r = nr;
                        f = nf;
                        improved = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !improved {
                // stalled: true zeros have been driven to rounding already
                if f <= GAP_ACCEPT {
                    return SeedOutcome::Accepted(Accepted {
                        point: ProjectivePoint::new(u).expect("unit"),
                        params_p: theta,
                        params_q: Some(phi),
                        iters: iter,
                    });
                }
                return SeedOutcome::Discarded;
            }
        }
        if f <= GAP_ACCEPT {
            return SeedOutcome::Accepted(Accepted {
                point: ProjectivePoint::new(u).expect("unit"),
                params_p: theta,
                params_q: Some(phi),
                iters: MAX_ITERS,
            });
        }
        SeedOutcome::BudgetExceeded
    };

    let (accepted, diagnostics) = run_seeds(seeds, solver);
    let kept = dedupe(accepted);
    Ok(finish_report(kept, Method::Parametric, diagnostics, |a| {
        let fp = side_frame(p, &a.params_p, Some(g))?;
        let fq = side_frame(q, a.params_q.as_ref().expect("parametric"), None)?;
        Ok((fp, fq))
    }))
}

/// Counts #(gP n Q) through the defining equations of Q: solves
/// residual(g P.chart(theta)) = 0 in the chart parameters of P by Newton
/// (square Clifford case) or Gauss-Newton (overdetermined RP^n case).
pub fn count_levelset(
    p: &ParametricLagrangian,
    target: LevelSetResidual,
    g: &UnitaryMatrix,
    grid: usize,
) -> Result<IntersectionReport> {
    let n = p.n();
    if target.ambient() != n + 1 {
        return Err(GeomError::DimensionMismatch {
            left: target.ambient(),
            right: n + 1,
        });
    }
    let seeds = grid_seeds(&p.domain(), grid);

    let solver = |seed: &[f64]| -> SeedOutcome {
        let mut theta = seed.to_vec();
        let eval = |theta: &[f64]| -> Result<(Cv, DVector<f64>)> {
            let w = g.apply(&p.chart_lift(theta)?);
            let r = target.evaluate(&w);
            Ok((w, r))
        };
        let (mut w, mut r) = match eval(&theta) {
            Ok(x) => x,
            Err(_) => return SeedOutcome::Discarded,
        };
        let mut f = r.norm();
        for iter in 0..MAX_ITERS {
            if f < 1e-14 {
                return SeedOutcome::Accepted(Accepted {
                    point: ProjectivePoint::new(w).expect("unit"),
                    params_p: theta,
                    params_q: None,
                    iters: iter,
                });
            }
            let jp = match p.chart_jacobian(&theta) {
                Ok(j) => j,
                Err(_) => return SeedOutcome::Discarded,
            };
            let m = target.arity();
            let mut jac = DMatrix::<f64>::zeros(m, n);
            for k in 0..n {
                let dw = g.apply(&jp[k]);
                let col = target.derivative(&w, &dw);
                for i in 0..m {
                    jac[(i, k)] = col[i];
                }
            }
            let delta = match solve_step(&jac, &r) {
                Some(d) => d,
                None => return SeedOutcome::Discarded,
            };
            let mut scale = 1.0;
            let mut improved = false;
            for _ in 0..=MAX_HALVINGS {
                let nt: Vec<f64> = (0..n).map(|k| theta[k] + scale * delta[k]).collect();
                if let Ok((nw, nr)) = eval(&nt) {
                    let nf = nr.norm();
                    if nf < f {
                        theta = nt;
                        w = nw;
                        r = nr;
                        f = nf;
                        improved = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !improved {
                if f <= RESIDUAL_ACCEPT {
                    return SeedOutcome::Accepted(Accepted {
                        point: ProjectivePoint::new(w).expect("unit"),
                        params_p: theta,
                        params_q: None,
                        iters: iter,
                    });
                }
                return SeedOutcome::Discarded;
            }
        }
        if f <= RESIDUAL_ACCEPT {
            return SeedOutcome::Accepted(Accepted {
                point: ProjectivePoint::new(w).expect("unit"),
                params_p: theta,
                params_q: None,
                iters: MAX_ITERS,
            });
        }
        SeedOutcome::BudgetExceeded
    };

    let (accepted, diagnostics) = run_seeds(seeds, solver);
    let kept = dedupe(accepted);
    Ok(finish_report(kept, Method::Levelset, diagnostics, |a| {
        let fp = side_frame(p, &a.params_p, Some(g))?;
        let fq = target_frame_at(target, &a.point)?;
        Ok((fp, fq))
    }))
}

/// gRP^n n RP^n by linear algebra: eigenvectors of the symmetric unitary
/// M = g^T g can be phase-rotated to real vectors v; the intersection
/// points are the real representatives of [g v]. Count = n+1 when the
/// spectrum is simple.
pub fn rp_eigen_oracle(g: &UnitaryMatrix) -> Result<IntersectionReport> {
    let m = g.dim();
    let gm = g.matrix();
    let big_m = gm.transpose() * gm;
    let a = DMatrix::from_fn(m, m, |i, j| big_m[(i, j)].re);
    let b = DMatrix::from_fn(m, m, |i, j| big_m[(i, j)].im);
    // A and B are commuting real symmetric matrices; a generic linear
    // combination has the common eigenbasis
    let t = 0.618_033_988_749_894_9;
    let eig = (a.clone() + &b * t).symmetric_eigen();

    let mut eigenvalues = Vec::with_capacity(m);
    let mut vectors: Vec<DVector<f64>> = Vec::with_capacity(m);
    for k in 0..m {
        let v = eig.eigenvectors.column(k).clone_owned();
        let mu = Complex64::new((&a * &v).dot(&v), (&b * &v).dot(&v));
        eigenvalues.push(mu);
        vectors.push(v);
    }
    let mut gap = f64::INFINITY;
    for i in 0..m {
        for j in (i + 1)..m {
            gap = gap.min((eigenvalues[i] - eigenvalues[j]).norm());
        }
    }
    if gap < 1e-8 {
        return Err(GeomError::DegenerateSpectrum { gap });
    }

    let mut accepted = Vec::with_capacity(m);
    for v in &vectors {
        let vc = Cv::from_fn(m, |k, _| Complex64::new(v[k], 0.0));
        let point = ProjectivePoint::gauge_fix(&(gm * &vc))?;
        let imag: f64 = point
            .lift()
            .iter()
            .map(|c| c.im * c.im)
            .sum::<f64>()
            .sqrt();
        if imag > 1e-8 {
            return Err(GeomError::DegenerateSpectrum { gap });
        }
        accepted.push(Accepted {
            point,
            params_p: v.iter().copied().collect(),
            params_q: None,
            iters: 0,
        });
    }
    let kept = dedupe(accepted);
    let diagnostics = Diagnostics {
        seeds_tried: m,
        accepted_raw: m,
        ..Default::default()
    };
    Ok(finish_report(kept, Method::EigenOracle, diagnostics, |acc| {
        let v = Cv::from_fn(m, |k, _| Complex64::new(acc.params_p[k], 0.0));
        let fp = rp_frame_at(&ProjectivePoint::new(v)?)?.transform(gm)?;
        let fq = rp_frame_at(&acc.point)?;
        // the two frames are based at phase-equal representatives
        Ok((fp, fq))
    }))
}
