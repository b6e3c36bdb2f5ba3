//! Grid scans for exceptional points, local refinement of the constraint
//! system, and Jordan-structure analysis of the refined points.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charpoly::{constraint_vector, discriminant_from_roots};
use crate::field::{FieldError, HamiltonianField};
use crate::matrix::{sort_complex, CMatrix, MatrixError};
use crate::symmetry::{predicted_constraints, RealQuantity, SymmetryError, SymmetryKind};

#[derive(Debug, Error)]
pub enum EpError {
    #[error("no eigenvalue within the cluster radius of {0}")]
    NotNearSpectrum(C),
    #[error("rank sequence {0:?} of (H - l)^j is not a valid Jordan profile")]
    IllConditioned(Vec<usize>),
    #[error("grid has {grid} axes but the field takes {arity} momenta")]
    GridArity { grid: usize, arity: usize },
    #[error("bad grid axis {axis}: {reason}")]
    BadAxis { axis: usize, reason: String },
    #[error("bad scan configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Axis {
        Axis { min, max, count }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }
}

/// What the scan drives to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// All of `tr H~^2 .. tr H~^(n-1), det H~`: an n-fold root.
    Full,
    /// `(l_i - l_j)^2` of the closest eigenvalue pair: any double root.
    Discriminant,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub grid: Vec<Axis>,
    pub cluster_radius: f64,
    pub rank_tol: f64,
    pub refine_tol: f64,
    pub max_refine_iters: usize,
    pub target: Target,
    /// Grid points whose relative residual is a local minimum below this
    /// value seed a refinement.
    pub seed_threshold: f64,
    /// Connected seed cells needed to tag a curve.
    pub curve_min_cells: usize,
    /// Refinements per curve, evenly subsampled.
    pub max_curve_points: usize,
    pub fd_step: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            grid: Vec::new(),
            cluster_radius: 1e-6,
            rank_tol: 1e-8,
            refine_tol: 1e-12,
            max_refine_iters: 200,
            target: Target::Both,
            seed_threshold: 0.05,
            curve_min_cells: 8,
            max_curve_points: 64,
            fd_step: 1e-6,
        }
    }
}

impl ScanConfig {
    pub fn with_grid(grid: Vec<Axis>) -> ScanConfig {
        ScanConfig { grid, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), EpError> {
        for (i, a) in self.grid.iter().enumerate() {
            if a.count < 2 {
                return Err(EpError::BadAxis { axis: i, reason: format!("count {} < 2", a.count) });
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.max > a.min) {
                return Err(EpError::BadAxis { axis: i, reason: format!("range [{}, {}]", a.min, a.max) });
            }
        }
        let positive = [
            ("cluster_radius", self.cluster_radius),
            ("rank_tol", self.rank_tol),
            ("refine_tol", self.refine_tol),
            ("seed_threshold", self.seed_threshold),
            ("fd_step", self.fd_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EpError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cluster_radius >= 1.0 {
            return Err(EpError::Config("cluster_radius must be below 1".into()));
        }
        Ok(())
    }
}

/// A group of nearly equal eigenvalues and its Jordan structure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub eigenvalue: C,
    pub members: Vec<C>,
    pub algebraic_mult: usize,
    pub geometric_mult: usize,
    pub jordan_blocks: Vec<usize>,
    pub ill_conditioned: bool,
}

impl Cluster {
    pub fn ep_order(&self) -> usize {
        self.jordan_blocks.first().copied().unwrap_or(1)
    }

    pub fn is_ep(&self) -> bool {
        self.ep_order() >= 2
    }

    fn spread(&self) -> f64 {
        self.members.iter().map(|z| (z - self.eigenvalue).norm()).fold(0.0, f64::max)
    }
}

fn radius(cfg_radius: f64, m: usize, scale: f64) -> f64 {
    // an order-m defective eigenvalue splits like eps^(1/m)
    cfg_radius.powf(1.0 / m as f64) * scale
}

fn matrix_scale(h: &CMatrix) -> f64 {
    h.norm().max(f64::MIN_POSITIVE)
}

/// `(m_a, m_g)` of the eigenvalue near `lambda`.
pub fn multiplicities(h: &CMatrix, lambda: C, cluster_radius: f64, rank_tol: f64) -> Result<(usize, usize), EpError> {
    let ev = h.eigenvalues()?;
    let scale = matrix_scale(h);
    let n = h.dim();
    let mut m_a = 0;
    for m in (1..=n).rev() {
        let r = radius(cluster_radius, m, scale);
        let members: Vec<C> = ev.iter().copied().filter(|z| (z - lambda).norm() <= r).collect();
        if members.len() >= m {
            m_a = m;
            break;
        }
    }
    if m_a == 0 {
        return Err(EpError::NotNearSpectrum(lambda));
    }
    let shifted = h.shift(lambda);
    let sv = shifted.singular_values();
    let thr = rank_tol * sv[0];
    let m_g = sv.iter().filter(|&&s| s <= thr).count().clamp(1, m_a);
    Ok((m_a, m_g))
}

/// Jordan block sizes (descending) of the eigenvalue `lambda` with algebraic
/// multiplicity `m_a`, from the rank deficiencies of `(H - lambda)^j`.
/// `spread` is the observed cluster width and sets the noise floor.
pub fn jordan_structure(h: &CMatrix, lambda: C, m_a: usize, spread: f64, rank_tol: f64) -> Result<Vec<usize>, EpError> {
    let shifted = h.shift(lambda);
    let s1 = shifted.singular_values()[0];
    let mut deficiency = vec![0usize];
    let mut pw = CMatrix::identity(h.dim());
    for j in 1..=m_a {
        pw = &pw * &shifted;
        let sv = pw.singular_values();
        // scale by ||H - l||^j, not by sigma_max of the power, which may be noise
        let thr = f64::max(rank_tol * s1.powi(j as i32), 4.0 * spread * s1.powi(j as i32 - 1));
        let d = sv.iter().filter(|&&s| s <= thr).count().min(m_a);
        deficiency.push(d);
    }
    // blocks of size >= j
    let at_least: Vec<isize> = deficiency.windows(2).map(|w| w[1] as isize - w[0] as isize).collect();
    let valid = deficiency[m_a] == m_a
        && at_least.iter().all(|&b| b >= 0)
        && at_least.windows(2).all(|w| w[1] <= w[0])
        && at_least[0] >= 1;
    if !valid {
        return Err(EpError::IllConditioned(deficiency[1..].to_vec()));
    }
    let mut blocks = Vec::new();
    for j in (1..=m_a).rev() {
        let exact = at_least[j - 1] - at_least.get(j).copied().unwrap_or(0);
        blocks.extend(std::iter::repeat(j).take(exact as usize));
    }
    Ok(blocks)
}

/// Groups the spectrum into clusters and analyses each.
pub fn clusters(h: &CMatrix, cluster_radius: f64, rank_tol: f64) -> Result<Vec<Cluster>, EpError> {
    let mut ev = h.eigenvalues()?;
    sort_complex(&mut ev);
    let scale = matrix_scale(h);
    let mut free: Vec<bool> = vec![true; ev.len()];
    let mut out = Vec::new();
    for i in 0..ev.len() {
        if !free[i] {
            continue;
        }
        let avail: Vec<usize> = (0..ev.len()).filter(|&j| free[j]).collect();
        let mut chosen = vec![i];
        for m in (2..=avail.len()).rev() {
            let mut near = avail.clone();
            near.sort_by(|&a, &b| (ev[a] - ev[i]).norm().total_cmp(&(ev[b] - ev[i]).norm()).then(a.cmp(&b)));
            near.truncate(m);
            let center = near.iter().map(|&j| ev[j]).sum::<C>() / m as f64;
            let r = radius(cluster_radius, m, scale);
            if near.iter().all(|&j| (ev[j] - center).norm() <= r) {
                chosen = near;
                break;
            }
        }
        chosen.sort_unstable();
        for &j in &chosen {
            free[j] = false;
        }
        let members: Vec<C> = chosen.iter().map(|&j| ev[j]).collect();
        let m_a = members.len();
        let center = members.iter().sum::<C>() / m_a as f64;
        let mut cl = Cluster {
            eigenvalue: center,
            members,
            algebraic_mult: m_a,
            geometric_mult: 1,
            jordan_blocks: vec![1],
            ill_conditioned: false,
        };
        if m_a > 1 {
            match jordan_structure(h, center, m_a, cl.spread(), rank_tol) {
                Ok(blocks) => {
                    cl.geometric_mult = blocks.len();
                    cl.jordan_blocks = blocks;
                }
                Err(EpError::IllConditioned(_)) => {
                    let (_, m_g) = multiplicities(h, center, cluster_radius, rank_tol)?;
                    let mut blocks = vec![m_a - m_g + 1];
                    blocks.extend(std::iter::repeat(1).take(m_g - 1));
                    cl.geometric_mult = m_g;
                    cl.jordan_blocks = blocks;
                    cl.ill_conditioned = true;
                }
                Err(e) => return Err(e),
            }
        }
        out.push(cl);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub k: Vec<f64>,
    pub eigenvalue: C,
    pub algebraic_mult: usize,
    pub geometric_mult: usize,
    pub jordan_blocks: Vec<usize>,
    pub is_ep: bool,
    pub ep_order: usize,
    /// `[tr H~^2, ..., det H~]` at `k`.
    pub constraints: Vec<C>,
    /// `|prod (l_i - l_j)^2| / ||H||^(n(n-1))`.
    pub discriminant_rel: f64,
    pub ill_conditioned: bool,
    /// Final relative residual of the refinement that produced `k`.
    pub residual: f64,
    pub target: Target,
    pub curve: Option<usize>,
}

/// Most exceptional cluster: largest Jordan block, then largest `m_a`.
fn principal(cl: &[Cluster]) -> &Cluster {
    cl.iter()
        .max_by(|a, b| a.ep_order().cmp(&b.ep_order()).then(a.algebraic_mult.cmp(&b.algebraic_mult)).then(std::cmp::Ordering::Greater))
        .expect("nonempty spectrum")
}

/// Full multiplicity and Jordan analysis of a single matrix.
pub fn analyze_matrix(h: &CMatrix, k: &[f64], cluster_radius: f64, rank_tol: f64) -> Result<DegeneracyReport, EpError> {
    let cl = clusters(h, cluster_radius, rank_tol)?;
    let p = principal(&cl);
    let n = h.dim();
    let roots: Vec<C> = cl.iter().flat_map(|c| c.members.iter().copied()).collect();
    let disc = discriminant_from_roots(&roots).norm() / matrix_scale(h).powi((n * (n - 1)) as i32);
    Ok(DegeneracyReport {
        k: k.to_vec(),
        eigenvalue: p.eigenvalue,
        algebraic_mult: p.algebraic_mult,
        geometric_mult: p.geometric_mult,
        jordan_blocks: p.jordan_blocks.clone(),
        is_ep: p.is_ep(),
        ep_order: p.ep_order(),
        constraints: constraint_vector(h),
        discriminant_rel: disc,
        ill_conditioned: p.ill_conditioned,
        residual: f64::NAN,
        target: Target::Full,
        curve: None,
    })
}

pub fn analyze_point(field: &dyn HamiltonianField, k: &[f64], cfg: &ScanConfig) -> Result<DegeneracyReport, EpError> {
    let h = field.eval(k)?;
    analyze_matrix(&h, k, cfg.cluster_radius, cfg.rank_tol)
}

/// Real residual vector of one target at one matrix, relative to `scale`.
#[derive(Debug, Clone)]
pub struct Objective {
    pub target: Target,
    /// Restrict the full target to these parts (symmetry-reduced).
    pub parts: Option<Vec<RealQuantity>>,
    pub scale: f64,
}

impl Objective {
    pub fn residual(&self, h: &CMatrix) -> Result<Vec<f64>, EpError> {
        let n = h.dim();
        match self.target {
            Target::Discriminant => {
                let ev = h.eigenvalues()?;
                let mut best = (f64::INFINITY, C::new(0.0, 0.0));
                for i in 0..n {
                    for j in i + 1..n {
                        let d = ev[i] - ev[j];
                        if d.norm() < best.0 {
                            best = (d.norm(), d * d);
                        }
                    }
                }
                let g = best.1 / (self.scale * self.scale);
                Ok(vec![g.re, g.im])
            }
            _ => {
                let ht = h.traceless();
                match &self.parts {
                    Some(parts) => Ok(parts
                        .iter()
                        .map(|q| q.part.of(q.quantity.eval(&ht)) / self.scale.powi(q.quantity.degree(n)))
                        .collect()),
                    None => {
                        let cv = constraint_vector(h);
                        let mut out = Vec::with_capacity(2 * cv.len());
                        for (c, d) in cv.iter().zip(crate::charpoly::constraint_degrees(n)) {
                            let s = self.scale.powi(d);
                            out.push(c.re / s);
                            out.push(c.im / s);
                        }
                        Ok(out)
                    }
                }
            }
        }
    }
}

fn norm2(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refined {
    pub k: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Gauss-Newton (Levenberg-Marquardt) on the real residual with a
/// central-difference Jacobian; coordinate descent when it stalls. For a
/// square well-conditioned system the damping decays and this is Newton.
pub fn refine(field: &dyn HamiltonianField, obj: &Objective, k0: &[f64], cfg: &ScanConfig) -> Result<Refined, EpError> {
    let d = k0.len();
    let eval0 = |k: &[f64]| -> Result<Vec<f64>, EpError> { obj.residual(&field.eval(k)?) };
    // iterates stay within the grid plus two cells
    let bounds: Option<Vec<(f64, f64)>> = (cfg.grid.len() == d).then(|| {
        cfg.grid.iter().map(|a| (a.min.min(a.max) - 2.0 * a.step().abs(), a.min.max(a.max) + 2.0 * a.step().abs())).collect()
    });
    let inside = |k: &[f64]| bounds.as_ref().is_none_or(|b| k.iter().zip(b).all(|(x, (lo, hi))| x >= lo && x <= hi));
    let eval = |k: &[f64]| -> Result<Vec<f64>, EpError> {
        if !inside(k) {
            return Err(EpError::Config("refinement left the search box".into()));
        }
        eval0(k)
    };
    let mut k = k0.to_vec();
    let mut r = eval0(&k)?;
    let mut f = norm2(&r);
    let mut lambda = 1e-3;
    let mut iters = 0;
    let mut stalls = 0;
    while iters < cfg.max_refine_iters && f > cfg.refine_tol {
        iters += 1;
        let m = r.len();
        let mut jac = vec![vec![0.0; d]; m];
        for a in 0..d {
            let mut kp = k.clone();
            let mut km = k.clone();
            kp[a] += cfg.fd_step;
            km[a] -= cfg.fd_step;
            let (rp, rm) = (eval0(&kp)?, eval0(&km)?);
            for i in 0..m {
                jac[i][a] = (rp[i] - rm[i]) / (2.0 * cfg.fd_step);
            }
        }
        let mut jtj = vec![vec![0.0; d]; d];
        let mut jtr = vec![0.0; d];
        for i in 0..m {
            for a in 0..d {
                jtr[a] += jac[i][a] * r[i];
                for b in 0..d {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut sys = jtj.clone();
            for a in 0..d {
                sys[a][a] += lambda * jtj[a][a].max(1e-300);
            }
            let Some(step) = solve_real(&sys, &jtr) else {
                lambda *= 10.0;
                continue;
            };
            let kn: Vec<f64> = k.iter().zip(&step).map(|(x, s)| x - s).collect();
            let Ok(rn) = eval(&kn) else {
                lambda *= 10.0;
                continue;
            };
            let fnew = norm2(&rn);
            if fnew < f {
                k = kn;
                r = rn;
                f = fnew;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            stalls += 1;
            let (kc, fc) = coordinate_descent(&eval, &k, f, cfg.fd_step * 100.0)?;
            if fc < 0.5 * f {
                k = kc;
                r = eval0(&k)?;
                f = fc;
                lambda = 1e-3;
            } else {
                if fc < f {
                    k = kc;
                    r = eval0(&k)?;
                    f = fc;
                }
                if stalls >= 2 {
                    break;
                }
            }
        }
    }
    Ok(Refined { converged: f <= cfg.refine_tol, k, residual: f, iterations: iters })
}

fn coordinate_descent(
    eval: &dyn Fn(&[f64]) -> Result<Vec<f64>, EpError>,
    k0: &[f64],
    f0: f64,
    step0: f64,
) -> Result<(Vec<f64>, f64), EpError> {
    let mut k = k0.to_vec();
    let mut f = f0;
    let mut step = step0;
    let mut sweeps = 0;
    while step > 1e-15 && sweeps < 200 {
        sweeps += 1;
        let mut moved = false;
        for a in 0..k.len() {
            for sgn in [1.0, -1.0] {
                let mut kn = k.clone();
                kn[a] += sgn * step;
                let Ok(rn) = eval(&kn) else { continue };
                let fn_ = norm2(&rn);
                if fn_ < f {
                    k = kn;
                    f = fn_;
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    Ok((k, f))
}

/// Gaussian elimination with partial pivoting for small dense systems.
fn solve_real(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| row.iter().copied().chain([bi]).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            for j in col..=n {
                m[i][j] -= f * m[col][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unconverged {
    pub k: Vec<f64>,
    pub residual: f64,
    pub target: Target,
}

/// A chain of refined points along a connected set of degenerate cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub id: usize,
    pub target: Target,
    pub cells: usize,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub candidates: Vec<DegeneracyReport>,
    pub unconverged: Vec<Unconverged>,
    pub curves: Vec<Curve>,
    pub scale: f64,
}

struct Grid<'a> {
    axes: &'a [Axis],
}

impl Grid<'_> {
    fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    fn unravel(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (d, a) in self.axes.iter().enumerate().rev() {
            idx[d] = i % a.count;
            i /= a.count;
        }
        idx
    }

    fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.axes).fold(0, |acc, (&i, a)| acc * a.count + i)
    }

    fn point(&self, i: usize) -> Vec<f64> {
        self.unravel(i).iter().zip(self.axes).map(|(&j, a)| a.value(j)).collect()
    }

    /// Neighbours over the full 3^d stencil.
    fn neighbours(&self, i: usize) -> Vec<usize> {
        let idx = self.unravel(i);
        let d = idx.len();
        let mut out = Vec::new();
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut nb = Vec::with_capacity(d);
            let mut ok = true;
            let mut centre = true;
            for (a, &x) in idx.iter().enumerate() {
                let off = (c % 3) as isize - 1;
                c /= 3;
                centre &= off == 0;
                let y = x as isize + off;
                if y < 0 || y >= self.axes[a].count as isize {
                    ok = false;
                    break;
                }
                nb.push(y as usize);
            }
            if ok && !centre {
                out.push(self.ravel(&nb));
            }
        }
        out
    }

    /// Corners of the cell whose lowest corner is `i`, if it is one.
    fn cell_corners(&self, i: usize) -> Option<Vec<usize>> {
        let idx = self.unravel(i);
        if idx.iter().zip(self.axes).any(|(&x, a)| x + 1 >= a.count) {
            return None;
        }
        let d = idx.len();
        Some(
            (0..1usize << d)
                .map(|bits| {
                    let c: Vec<usize> = idx.iter().enumerate().map(|(a, &x)| x + ((bits >> a) & 1)).collect();
                    self.ravel(&c)
                })
                .collect(),
        )
    }

    fn contains(&self, k: &[f64], pad: f64) -> bool {
        k.iter().zip(self.axes).all(|(&x, a)| x >= a.min - pad * a.step() && x <= a.max + pad * a.step())
    }
}

/// Noise floor below which a residual component counts as zero.
const ZERO_COMPONENT: f64 = 1e-12;

fn seeds(grid: &Grid, res: &[Vec<f64>], g: &[f64], threshold: f64) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for i in 0..grid.len() {
        if g[i] < threshold && grid.neighbours(i).iter().all(|&j| g[i] <= g[j]) {
            out.insert(i);
        }
        if let Some(corners) = grid.cell_corners(i) {
            let m = res[i].len();
            let zero_inside = (0..m).all(|c| {
                let vals: Vec<f64> = corners.iter().map(|&j| res[j][c]).collect();
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo <= 0.0 && hi >= 0.0) || vals.iter().any(|v| v.abs() < ZERO_COMPONENT)
            });
            if zero_inside {
                let best = corners.iter().copied().min_by(|&a, &b| g[a].total_cmp(&g[b]).then(a.cmp(&b))).unwrap();
                out.insert(best);
            }
        }
    }
    out
}

fn components(grid: &Grid, seeds: &BTreeSet<usize>) -> Vec<Vec<usize>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &s in seeds {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in grid.neighbours(i) {
                if seeds.contains(&j) && seen.insert(j) {
                    comp.push(j);
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Scan the grid, refine seeds, and analyse each converged point.
/// `hint` reduces the full constraint set to the parts not forced to vanish
/// by those symmetries.
pub fn scan(field: &dyn HamiltonianField, cfg: &ScanConfig, hint: &[SymmetryKind]) -> Result<ScanReport, EpError> {
    cfg.validate()?;
    if cfg.grid.len() != field.arity() || cfg.grid.is_empty() {
        return Err(EpError::GridArity { grid: cfg.grid.len(), arity: field.arity() });
    }
    let grid = Grid { axes: &cfg.grid };
    let n = field.dim();
    let points: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.point(i)).collect();
    let mats: Vec<CMatrix> = points.par_iter().map(|k| field.eval(k)).collect::<Result<_, _>>()?;
    let mut norms: Vec<f64> = mats.iter().map(|h| h.norm()).collect();
    norms.sort_by(f64::total_cmp);
    let scale = norms[norms.len() / 2].max(f64::MIN_POSITIVE);

    let parts = if hint.is_empty() {
        None
    } else {
        let pred = predicted_constraints(hint, n)?;
        Some(pred.constraints)
    };
    let targets: Vec<Target> = match cfg.target {
        Target::Both => vec![Target::Full, Target::Discriminant],
        t => vec![t],
    };

    struct Job {
        target: Target,
        start: Vec<f64>,
        curve: Option<usize>,
    }
    let mut jobs = Vec::new();
    let mut curve_meta: Vec<(Target, usize)> = Vec::new();
    let mut objectives = BTreeMap::new();
    for &t in &targets {
        let obj = Objective { target: t, parts: if t == Target::Full { parts.clone() } else { None }, scale };
        let res: Vec<Vec<f64>> = mats.par_iter().map(|h| obj.residual(h)).collect::<Result<_, _>>()?;
        let g: Vec<f64> = res.iter().map(|r| norm2(r)).collect();
        let s = seeds(&grid, &res, &g, cfg.seed_threshold);
        for comp in components(&grid, &s) {
            if comp.len() >= cfg.curve_min_cells {
                let id = curve_meta.len();
                curve_meta.push((t, comp.len()));
                let take = comp.len().min(cfg.max_curve_points);
                for q in 0..take {
                    let i = comp[q * comp.len() / take];
                    jobs.push(Job { target: t, start: points[i].clone(), curve: Some(id) });
                }
            } else {
                let best = comp.iter().copied().min_by(|&a, &b| g[a].total_cmp(&g[b]).then(a.cmp(&b))).unwrap();
                jobs.push(Job { target: t, start: points[best].clone(), curve: None });
            }
        }
        objectives.insert(t, obj);
    }

    let refined: Vec<(Refined, &Job)> = jobs
        .par_iter()
        .map(|j| refine(field, &objectives[&j.target], &j.start, cfg).map(|r| (r, j)))
        .collect::<Result<_, _>>()?;

    let mut unconverged = Vec::new();
    let mut good = Vec::new();
    for (r, j) in refined {
        if r.converged && grid.contains(&r.k, 1.0) {
            good.push((r, j.target, j.curve));
        } else if !r.converged && grid.contains(&r.k, 1.0) {
            unconverged.push(Unconverged { k: r.k, residual: r.residual, target: j.target });
        }
    }
    // keep the lowest residual per neighbourhood, ties by k
    good.sort_by(|a, b| a.0.residual.total_cmp(&b.0.residual).then(lex_cmp(&a.0.k, &b.0.k)));
    let min_step = cfg.grid.iter().map(|a| a.step()).fold(f64::INFINITY, f64::min);
    let mut kept: Vec<(Refined, Target, Option<usize>)> = Vec::new();
    for cand in good {
        if kept.iter().all(|(r, _, _)| dist(&r.k, &cand.0.k) >= 0.5 * min_step) {
            kept.push(cand);
        }
    }
    kept.sort_by(|a, b| lex_cmp(&a.0.k, &b.0.k));
    unconverged.sort_by(|a, b| a.residual.total_cmp(&b.residual).then(lex_cmp(&a.k, &b.k)));
    let mut stuck: Vec<Unconverged> = Vec::new();
    for u in unconverged {
        let near_kept = kept.iter().any(|(r, _, _)| dist(&r.k, &u.k) < 0.5 * min_step);
        if !near_kept && stuck.iter().all(|v| dist(&v.k, &u.k) >= 0.5 * min_step) {
            stuck.push(u);
        }
    }
    let mut unconverged = stuck;
    unconverged.sort_by(|a, b| lex_cmp(&a.k, &b.k).then(a.target.cmp(&b.target)));

    let mut candidates: Vec<DegeneracyReport> = kept
        .par_iter()
        .map(|(r, t, c)| {
            let mut rep = analyze_point(field, &r.k, cfg)?;
            rep.residual = r.residual;
            rep.target = *t;
            rep.curve = *c;
            Ok(rep)
        })
        .collect::<Result<_, EpError>>()?;

    // renumber curves that kept at least one point
    let mut curves = Vec::new();
    let mut remap = BTreeMap::new();
    for (old, &(t, cells)) in curve_meta.iter().enumerate() {
        let pts: Vec<Vec<f64>> = candidates.iter().filter(|c| c.curve == Some(old)).map(|c| c.k.clone()).collect();
        if pts.is_empty() {
            continue;
        }
        let id = curves.len();
        remap.insert(old, id);
        curves.push(Curve { id, target: t, cells, points: chain(pts) });
    }
    for c in &mut candidates {
        c.curve = c.curve.and_then(|old| remap.get(&old).copied());
    }
    Ok(ScanReport { candidates, unconverged, curves, scale })
}

/// Greedy nearest-neighbour ordering starting from the lexicographic minimum.
fn chain(mut pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    pts.sort_by(|a, b| lex_cmp(a, b));
    let mut out = vec![pts.remove(0)];
    while !pts.is_empty() {
        let last = out.last().unwrap();
        let (i, _) = pts
            .iter()
            .enumerate()
            .min_by(|a, b| dist(last, a.1).total_cmp(&dist(last, b.1)).then(a.0.cmp(&b.0)))
            .unwrap();
        out.push(pts.remove(i));
    }
    out
}
