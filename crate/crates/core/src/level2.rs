//! Distances between invariant measures and the empirical-measure rate.
//!
//! The metric is `d(a, b) = sum_k 2^{-k} |a(C_k) - b(C_k)|` over the admissible
//! cylinders `C_1, C_2, ...` of length `1..=D`, ordered by length and then
//! lexicographically. The rate of an invariant measure is
//! `Q(eta) = P_top - h(eta) - int phi d eta`.
//!
//! Infima of `Q` over `{d(eta, mu) = c}` are taken over stationary Markov
//! measures by walking rays out of `mu` in edge-mass coordinates: `Q` is
//! convex with its minimum at `mu`, so along each ray the first point with
//! `d = c` is the cheapest one at distance `>= c`. The direction is then
//! optimized from many seeded starts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{edge_table, EdgeSlice, MarkovMeasure};
use crate::optimize::NelderMead;
use crate::sft::{enumerate_words, BlockRecoding, LocallyConstantFn, SftModel, Word};
use crate::sum::NeumaierSum;
use crate::transfer::{entropy_and_integrals, equilibrium_of_table};

/// Allowed `|d(eta, mu) - c|` at a reported minimizer.
pub const CONSTRAINT_TOL: f64 = 1e-8;
/// Default number of seeded starts.
pub const DEFAULT_STARTS: usize = 64;
pub const DEFAULT_SEED: u64 = 0x1e7e12;
/// Starts within this of the best value count as agreeing.
pub const AGREEMENT_TOL: f64 = 1e-4;
/// Allowed gap between the sphere and the ball-complement infima.
pub const BALL_TOL: f64 = 1e-6;
const SCAN_POINTS: usize = 48;
const MAX_CYCLES: usize = 200_000;

/// Weighted cylinder metric truncated at a depth.
#[derive(Clone, Debug)]
pub struct MeasureMetric {
    model: SftModel,
    depth: usize,
    words: Vec<Word>,
    // for words of length >= 2: (parent index, last two symbols)
    links: Vec<Option<(usize, usize, usize)>>,
    weights: Vec<f64>,
}

impl MeasureMetric {
    pub fn new(model: &SftModel, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::invalid("metric depth must be at least 1"));
        }
        let mut words: Vec<Word> = Vec::new();
        let mut links = Vec::new();
        let mut start_of_prev = 0;
        for n in 1..=depth {
            let start = words.len();
            for w in enumerate_words(model, n) {
                let link = if n == 1 {
                    None
                } else {
                    let s = w.symbols();
                    let prefix = &s[..n - 1];
                    // parents of length n-1 are contiguous and lexicographic
                    let offset = words[start_of_prev..start]
                        .binary_search_by(|p| p.symbols().cmp(prefix))
                        .expect("prefix of an admissible word is admissible");
                    Some((start_of_prev + offset, s[n - 2], s[n - 1]))
                };
                words.push(w);
                links.push(link);
            }
            start_of_prev = start;
        }
        if words.len() > 1 << 24 {
            return Err(Error::invalid(format!("depth {depth} gives too many cylinders")));
        }
        let weights = (1..=words.len()).map(|k| 0.5f64.powi(k as i32)).collect();
        Ok(MeasureMetric {
            model: model.clone(),
            depth,
            words,
            links,
            weights,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Cylinders in enumeration order.
    pub fn cylinders(&self) -> &[Word] {
        &self.words
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total weight of the cylinders beyond the truncation.
    pub fn tail_bound(&self) -> f64 {
        0.5f64.powi(self.words.len() as i32)
    }

    /// Cylinder masses of the stationary Markov measure with edge masses `q`.
    pub fn masses_of_edges(&self, q: &[f64]) -> Vec<f64> {
        let m = self.model.alphabet_size();
        let pi: Vec<f64> = (0..m).map(|i| (0..m).map(|j| q[i * m + j]).sum()).collect();
        let mut out = vec![0.0; self.words.len()];
        for k in 0..self.words.len() {
            out[k] = match self.links[k] {
                None => pi[self.words[k].first()],
                Some((parent, a, b)) => {
                    if self.words[k].len() == 2 {
                        q[a * m + b]
                    } else if pi[a] > 0.0 {
                        out[parent] * q[a * m + b] / pi[a]
                    } else {
                        0.0
                    }
                }
            };
        }
        out
    }

    pub fn masses(&self, eta: &MarkovMeasure) -> Vec<f64> {
        self.masses_of_edges(&eta.edge_masses())
    }

    pub fn distance_of_masses(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = NeumaierSum::new();
        for ((x, y), w) in a.iter().zip(b).zip(&self.weights) {
            acc.add(w * (x - y).abs());
        }
        acc.value()
    }

    pub fn distance(&self, a: &MarkovMeasure, b: &MarkovMeasure) -> Result<f64> {
        for eta in [a, b] {
            if eta.alphabet_size() != self.model.alphabet_size() || !eta.supported_in(&self.model) {
                return Err(Error::invalid("measure does not live on the metric's model"));
            }
        }
        Ok(self.distance_of_masses(&self.masses(a), &self.masses(b)))
    }
}

/// `(d(a, b), tail bound)` at truncation depth `depth`.
pub fn measure_distance(model: &SftModel, a: &MarkovMeasure, b: &MarkovMeasure, depth: usize) -> Result<(f64, f64)> {
    let metric = MeasureMetric::new(model, depth)?;
    Ok((metric.distance(a, b)?, metric.tail_bound()))
}

fn entropy_of_edges(m: usize, q: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for i in 0..m {
        let row = &q[i * m..(i + 1) * m];
        let out: f64 = row.iter().sum();
        for &x in row {
            if x > 0.0 {
                acc.add(-x * (x / out).ln());
            }
        }
    }
    acc.value()
}

/// `P_top - h(eta) - int phi d eta` for `phi` of depth at most 2.
pub fn q_rate(model: &SftModel, phi: &LocallyConstantFn, eta: &MarkovMeasure) -> Result<f64> {
    model.require_primitive()?;
    if eta.alphabet_size() != model.alphabet_size() {
        return Err(Error::invalid("measure and model alphabets differ"));
    }
    let table = edge_table(model, phi)?;
    let p_top = equilibrium_of_table(model, &table)?.pressure;
    let (h, ints) = entropy_and_integrals(model, eta, &[phi])?;
    Ok(p_top - h - ints[0])
}

/// Result of minimizing `Q` at a fixed distance from the reference measure.
#[derive(Clone, Debug, Serialize)]
pub struct SphereInfimum {
    pub radius: f64,
    pub depth: usize,
    pub value: f64,
    pub argmin: MarkovMeasure,
    /// `|d(argmin, mu) - c|`.
    pub constraint_residual: f64,
    /// Largest minus smallest final value over starts.
    pub spread: f64,
    /// Starts ending within the agreement tolerance of the best value.
    pub agreeing_starts: usize,
    pub starts: usize,
    pub low_confidence: bool,
    /// `inf { Q : d >= c }` by an independent penalty method.
    pub ball_complement: f64,
    pub max_radius: f64,
    pub tail_bound: f64,
}

/// Reference equilibrium state, its rate function and a metric.
#[derive(Clone, Debug)]
pub struct Level2 {
    model: SftModel,
    phi: Vec<f64>,
    p_top: f64,
    reference: MarkovMeasure,
    q_ref: Vec<f64>,
    ref_masses: Vec<f64>,
    slice: EdgeSlice,
    metric: MeasureMetric,
}

struct Ray {
    dq: Vec<f64>,
    tau_max: f64,
}

impl Level2 {
    /// A `phi` deeper than 2 is carried to a higher-block presentation, on
    /// which measures and the metric then live.
    pub fn new(model: &SftModel, phi: &LocallyConstantFn, depth: usize) -> Result<Self> {
        model.require_primitive()?;
        let rec = BlockRecoding::new(model, phi.depth().max(2) - 1)?;
        let target = rec.target().clone();
        let phi = edge_table(&target, &rec.recode_fn(phi)?)?;
        let eq = equilibrium_of_table(&target, &phi)?;
        let metric = MeasureMetric::new(&target, depth)?;
        let q_ref = eq.measure.edge_masses();
        let ref_masses = metric.masses_of_edges(&q_ref);
        Ok(Level2 {
            slice: EdgeSlice::new(&target, &[]),
            model: target,
            phi,
            p_top: eq.pressure,
            reference: eq.measure,
            q_ref,
            ref_masses,
            metric,
        })
    }

    pub fn model(&self) -> &SftModel {
        &self.model
    }

    pub fn p_top(&self) -> f64 {
        self.p_top
    }

    pub fn reference(&self) -> &MarkovMeasure {
        &self.reference
    }

    pub fn metric(&self) -> &MeasureMetric {
        &self.metric
    }

    /// `Q` of the Markov measure with edge masses `q`.
    pub fn q_of_edges(&self, q: &[f64]) -> f64 {
        let m = self.model.alphabet_size();
        let mut energy = NeumaierSum::new();
        for (i, j) in self.model.edges() {
            energy.add(q[i * m + j] * self.phi[i * m + j]);
        }
        self.p_top - entropy_of_edges(m, q) - energy.value()
    }

    pub fn q_rate(&self, eta: &MarkovMeasure) -> Result<f64> {
        if eta.alphabet_size() != self.model.alphabet_size() || !eta.supported_in(&self.model) {
            return Err(Error::invalid("measure charges a forbidden transition"));
        }
        let (h, _) = entropy_and_integrals(&self.model, eta, &[])?;
        let energy = eta.integral_edges(&self.phi);
        Ok(self.p_top - h - energy)
    }

    pub fn distance_of_edges(&self, q: &[f64]) -> f64 {
        self.metric
            .distance_of_masses(&self.metric.masses_of_edges(q), &self.ref_masses)
    }

    /// Largest distance from the reference to a cycle measure. Cycle measures
    /// are the vertices of the set of Markov edge masses.
    pub fn max_radius(&self) -> Result<f64> {
        let cycles = simple_cycles(&self.model, MAX_CYCLES)?;
        let m = self.model.alphabet_size();
        Ok(cycles
            .iter()
            .map(|c| {
                let mut q = vec![0.0; m * m];
                for t in 0..c.len() {
                    q[c[t] * m + c[(t + 1) % c.len()]] += 1.0 / c.len() as f64;
                }
                self.distance_of_edges(&q)
            })
            .fold(0.0, f64::max))
    }

    fn ray(&self, v: &[f64]) -> Option<Ray> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return None;
        }
        let m = self.model.alphabet_size();
        let dir = &self.slice.basis * nalgebra::DVector::from_iterator(v.len(), v.iter().map(|x| x / norm));
        let dq = self.slice.to_dense(m, &dir);
        let mut tau_max = f64::INFINITY;
        for &(i, j) in &self.slice.edges {
            let d = dq[i * m + j];
            if d < 0.0 {
                tau_max = tau_max.min(-self.q_ref[i * m + j] / d);
            }
        }
        tau_max.is_finite().then_some(Ray { dq, tau_max })
    }

    fn point(&self, ray: &Ray, tau: f64) -> Vec<f64> {
        let mut q: Vec<f64> = self.q_ref.iter().zip(&ray.dq).map(|(a, b)| a + tau * b).collect();
        for x in q.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        q
    }

    /// First point along the ray with `g >= c`, where `g(0) = 0`.
    fn first_hit(&self, ray: &Ray, c: f64, g: &impl Fn(&[f64]) -> f64) -> Option<Vec<f64>> {
        let mut prev = 0.0;
        for k in 1..=SCAN_POINTS {
            let tau = ray.tau_max * k as f64 / SCAN_POINTS as f64;
            if g(&self.point(ray, tau)) >= c {
                let (mut lo, mut hi) = (prev, tau);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(&self.point(ray, mid)) >= c {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Some(self.point(ray, hi));
            }
            prev = tau;
        }
        None
    }

    fn cost_along(&self, v: &[f64], c: f64, g: &impl Fn(&[f64]) -> f64) -> (f64, Option<Vec<f64>>) {
        match self.ray(v).and_then(|r| self.first_hit(&r, c, g)) {
            Some(q) => (self.q_of_edges(&q), Some(q)),
            None => (f64::INFINITY, None),
        }
    }

    /// Minimizes `Q` over the first crossings of `g = c`, from `starts` seeded
    /// directions. Returns per-start values and the best point.
    fn ray_search(
        &self,
        c: f64,
        g: impl Fn(&[f64]) -> f64 + Sync,
        starts: usize,
        seed: u64,
    ) -> (Vec<f64>, Option<Vec<f64>>) {
        let dim = self.slice.dim();
        let nm = NelderMead {
            max_evals: 600,
            f_tol: 1e-15,
            x_tol: 1e-12,
            initial_step: 0.3,
        };
        let runs: Vec<(f64, Option<Vec<f64>>)> = (0..starts.max(1))
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
                let v0: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let best = nm.minimize(|v| self.cost_along(v, c, &g).0, &v0);
                self.cost_along(&best.x, c, &g)
            })
            .collect();
        let values: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for (v, q) in runs {
            if let Some(q) = q {
                if best.as_ref().is_none_or(|b| v < b.0) {
                    best = Some((v, q));
                }
            }
        }
        (values, best.map(|b| b.1))
    }

    /// `inf { Q : d >= c }` by quadratic penalties, independent of the rays.
    pub fn ball_complement_by_penalty(&self, c: f64, starts: usize, seed: u64) -> f64 {
        let dim = self.slice.dim();
        let m = self.model.alphabet_size();
        let to_q = |z: &[f64]| -> Option<Vec<f64>> {
            let dq = self
                .slice
                .to_dense(m, &(&self.slice.basis * nalgebra::DVector::from_column_slice(z)));
            let q: Vec<f64> = self.q_ref.iter().zip(&dq).map(|(a, b)| a + b).collect();
            q.iter().all(|x| *x >= 0.0).then_some(q)
        };
        let nm = NelderMead {
            max_evals: 3_000,
            f_tol: 1e-16,
            x_tol: 1e-13,
            initial_step: 0.05,
        };
        let values: Vec<f64> = (0..starts.max(1))
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15 ^ k as u64);
                // start on the far side of the constraint along a random ray
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let Some(ray) = self.ray(&v) else { return f64::INFINITY };
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let mut z: Vec<f64> = v.iter().map(|x| x / norm * ray.tau_max * 0.9).collect();
                let mut last = f64::INFINITY;
                for rho in [1e2, 1e4, 1e6, 1e8, 1e10, 1e12] {
                    let obj = |z: &[f64]| match to_q(z) {
                        Some(q) => {
                            let short = (c - self.distance_of_edges(&q)).max(0.0);
                            self.q_of_edges(&q) + rho * short * short
                        }
                        None => f64::INFINITY,
                    };
                    let r = nm.minimize(obj, &z);
                    z = r.x;
                    last = r.value;
                }
                match to_q(&z) {
                    Some(q) if self.distance_of_edges(&q) >= c - CONSTRAINT_TOL => self.q_of_edges(&q),
                    _ => last,
                }
            })
            .collect();
        values.into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `inf { Q(eta) : d(eta, mu) = c }` over Markov measures.
    pub fn infimum_on_sphere(&self, c: f64, starts: usize, seed: u64) -> Result<SphereInfimum> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid("radius must be finite and nonnegative"));
        }
        let max_radius = self.max_radius()?;
        let tail_bound = self.metric.tail_bound();
        if c == 0.0 {
            return Ok(SphereInfimum {
                radius: c,
                depth: self.metric.depth(),
                value: 0.0,
                argmin: self.reference.clone(),
                constraint_residual: 0.0,
                spread: 0.0,
                agreeing_starts: starts,
                starts,
                low_confidence: false,
                ball_complement: 0.0,
                max_radius,
                tail_bound,
            });
        }
        if c >= max_radius {
            return Err(Error::Domain {
                value: c,
                lo: 0.0,
                hi: max_radius,
            });
        }
        let (values, best) = self.ray_search(c, |q| self.distance_of_edges(q), starts, seed);
        let q = best.ok_or_else(|| Error::NumericalFailure {
            iterations: starts,
            message: format!("no start reached distance {c}"),
        })?;
        let value = self.q_of_edges(&q);
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let worst = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let agreeing_starts = finite.iter().filter(|v| **v - value <= AGREEMENT_TOL).count();
        let ball_complement = self.ball_complement_by_penalty(c, 8, seed);
        Ok(SphereInfimum {
            radius: c,
            depth: self.metric.depth(),
            value,
            argmin: MarkovMeasure::from_edge_masses(&self.model, &q)?,
            constraint_residual: (self.distance_of_edges(&q) - c).abs(),
            spread: worst - value,
            agreeing_starts,
            starts,
            low_confidence: agreeing_starts < 2,
            ball_complement,
            max_radius,
            tail_bound,
        })
    }

    /// `P_top - inf_{d = c} Q`, checked to lie strictly below `P_top` for `c > 0`.
    pub fn pressure(&self, c: f64, starts: usize, seed: u64) -> Result<(f64, SphereInfimum)> {
        let inf = self.infimum_on_sphere(c, starts, seed)?;
        let p = self.p_top - inf.value;
        if c > 0.0 && !(p < self.p_top) {
            return Err(Error::PropertyViolation(format!(
                "pressure {p} at radius {c} is not below P_top = {}",
                self.p_top
            )));
        }
        if (inf.ball_complement - inf.value).abs() > BALL_TOL {
            return Err(Error::PropertyViolation(format!(
                "sphere infimum {} and ball-complement infimum {} differ",
                inf.value, inf.ball_complement
            )));
        }
        Ok((p, inf))
    }

    /// `inf { Q : |int psi - int psi d mu| >= c }` over Markov measures.
    pub fn constrained_rate(&self, psi: &[f64], c: f64, starts: usize, seed: u64) -> Result<(f64, MarkovMeasure)> {
        let m = self.model.alphabet_size();
        let edges = self.model.edges();
        let integral = |q: &[f64]| -> f64 { edges.iter().map(|&(i, j)| q[i * m + j] * psi[i * m + j]).sum() };
        let mean = integral(&self.q_ref);
        if c == 0.0 {
            return Ok((0.0, self.reference.clone()));
        }
        let (_, best) = self.ray_search(c, |q| (integral(q) - mean).abs(), starts, seed);
        let q = best.ok_or(Error::Domain {
            value: c,
            lo: 0.0,
            hi: f64::NAN,
        })?;
        Ok((self.q_of_edges(&q), MarkovMeasure::from_edge_masses(&self.model, &q)?))
    }
}

/// Simple cycles of the transition graph, each listed once from its smallest
/// symbol.
pub fn simple_cycles(model: &SftModel, cap: usize) -> Result<Vec<Vec<usize>>> {
    let m = model.alphabet_size();
    let mut out = Vec::new();
    for s in 0..m {
        let mut path = vec![s];
        let mut on_path = vec![false; m];
        on_path[s] = true;
        let mut stack: Vec<Vec<usize>> = vec![model.successors(s).filter(|&j| j >= s).collect()];
        while let Some(top) = stack.last_mut() {
            match top.pop() {
                Some(j) if j == s => {
                    out.push(path.clone());
                    if out.len() > cap {
                        return Err(Error::ResourceLimit {
                            needed: out.len() as u128,
                            budget: cap as u128,
                        });
                    }
                }
                Some(j) if !on_path[j] => {
                    on_path[j] = true;
                    path.push(j);
                    stack.push(model.successors(j).filter(|&k| k >= s).collect());
                }
                Some(_) => {}
                None => {
                    stack.pop();
                    if let Some(j) = path.pop() {
                        on_path[j] = false;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Sphere infimum of `Q` around the equilibrium state of `phi`.
pub fn infimum_on_sphere(model: &SftModel, phi: &LocallyConstantFn, c: f64, depth: usize) -> Result<SphereInfimum> {
    Level2::new(model, phi, depth)?.infimum_on_sphere(c, DEFAULT_STARTS, DEFAULT_SEED)
}

/// `P_top - inf_{d(eta, mu) = c} Q(eta)`.
pub fn level2_pressure(model: &SftModel, phi: &LocallyConstantFn, c: f64, depth: usize) -> Result<f64> {
    Level2::new(model, phi, depth)?
        .pressure(c, DEFAULT_STARTS, DEFAULT_SEED)
        .map(|r| r.0)
}

/// Level-2 minimum under a Birkhoff constraint against the level-1 rate.
#[derive(Clone, Debug, Serialize)]
pub struct ContractionReport {
    pub c: f64,
    pub level2: f64,
    pub level1: f64,
    pub difference: f64,
    pub agrees: bool,
}

/// Agreement tolerance of [`contraction_consistency`].
pub const CONTRACTION_TOL: f64 = 1e-4;

pub fn contraction_consistency(
    model: &SftModel,
    phi: &LocallyConstantFn,
    psi: &LocallyConstantFn,
    c: f64,
) -> Result<ContractionReport> {
    use crate::ratefn::{Centering, RateFunction};
    let rf = RateFunction::build(model, phi, psi, Centering::Centered)?;
    let level1 = if c == 0.0 {
        0.0
    } else {
        let point = crate::spectrum::deviation_point(&rf, c)?;
        match point.value {
            Some(v) => rf.p_top() - v,
            None => {
                let (lo, hi) = rf.domain();
                return Err(Error::Domain { value: c, lo, hi });
            }
        }
    };
    let depth = phi.depth().max(psi.depth()).max(2);
    let rec = BlockRecoding::new(model, depth - 1)?;
    let psi_t = edge_table(rec.target(), &rec.recode_fn(psi)?)?;
    // the metric depth plays no role here
    let l2 = Level2::new(model, &phi.extend_depth(model, depth)?, 1)?;
    let (level2, _) = l2.constrained_rate(&psi_t, c, DEFAULT_STARTS, DEFAULT_SEED)?;
    let difference = (level2 - level1).abs();
    Ok(ContractionReport {
        c,
        level2,
        level1,
        difference,
        agrees: difference <= CONTRACTION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn metric_enumeration_and_values() {
        let full = SftModel::full_shift(2);
        let metric = MeasureMetric::new(&full, 1).unwrap();
        assert_eq!(metric.cylinders().len(), 2);
        let eps = 0.01;
        let a = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let b = MarkovMeasure::bernoulli(&[0.5 + eps, 0.5 - eps]).unwrap();
        let d = metric.distance(&a, &b).unwrap();
        assert!((d - eps * (0.5 + 0.25)).abs() < 1e-15);
        assert_eq!(metric.tail_bound(), 0.25);
        assert_eq!(metric.distance(&a, &a).unwrap(), 0.0);

        let m3 = MeasureMetric::new(&full, 3).unwrap();
        let labels: Vec<String> = m3.cylinders().iter().map(|w| w.to_string()).collect();
        assert_eq!(&labels[..6], ["0", "1", "00", "01", "10", "11"]);
        assert_eq!(labels.len(), 14);
        let masses = m3.masses(&b);
        let direct: Vec<f64> = m3.cylinders().iter().map(|w| b.cylinder_mass(w.symbols())).collect();
        assert!(masses.iter().zip(&direct).all(|(x, y)| (x - y).abs() < 1e-15));
    }

    #[test]
    fn golden_mean_cylinders_skip_forbidden_words() {
        let g = SftModel::golden_mean();
        let metric = MeasureMetric::new(&g, 3).unwrap();
        let labels: Vec<String> = metric.cylinders().iter().map(|w| w.to_string()).collect();
        assert_eq!(labels, ["0", "1", "00", "01", "10", "000", "001", "010", "100", "101"]);
    }

    #[test]
    fn rate_examples() {
        let full = SftModel::full_shift(2);
        let zero = LocallyConstantFn::zero(&full);
        let eq = equilibrium_of_table(&full, &edge_table(&full, &zero).unwrap()).unwrap();
        assert!(q_rate(&full, &zero, &eq.measure).unwrap().abs() < 1e-12);
        let b = MarkovMeasure::bernoulli(&[0.75, 0.25]).unwrap();
        assert!((q_rate(&full, &zero, &b).unwrap() - (2f64.ln() - h(0.75))).abs() < 1e-12);
        let dirac = MarkovMeasure::fixed_point(&full, 0).unwrap();
        assert!((q_rate(&full, &zero, &dirac).unwrap() - 2f64.ln()).abs() < 1e-12);

        let g = SftModel::golden_mean();
        let bad = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        assert!(q_rate(&g, &LocallyConstantFn::zero(&g), &bad).is_err());
    }

    #[test]
    fn cycles_of_small_models() {
        assert_eq!(simple_cycles(&SftModel::full_shift(2), 100).unwrap().len(), 3);
        assert_eq!(simple_cycles(&SftModel::golden_mean(), 100).unwrap().len(), 2);
        assert_eq!(simple_cycles(&SftModel::full_shift(3), 100).unwrap().len(), 8);
    }

    #[test]
    fn sphere_basics() {
        let full = SftModel::full_shift(2);
        let zero = LocallyConstantFn::zero(&full);
        let l2 = Level2::new(&full, &zero, 4).unwrap();
        let at0 = l2.infimum_on_sphere(0.0, 8, 1).unwrap();
        assert_eq!(at0.value, 0.0);
        let s = l2.infimum_on_sphere(0.05, 16, 1).unwrap();
        assert!(s.value > 0.0 && s.constraint_residual < CONSTRAINT_TOL, "{s:?}");
        assert!((s.ball_complement - s.value).abs() < BALL_TOL, "{s:?}");
        let far = l2.max_radius().unwrap();
        assert!(matches!(
            l2.infimum_on_sphere(far * 1.01, 4, 1),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn contraction_binomial() {
        let full = SftModel::full_shift(2);
        let zero = LocallyConstantFn::zero(&full);
        let chi0 = LocallyConstantFn::cylinder_indicator(&full, &[0]).unwrap();
        let r = contraction_consistency(&full, &zero, &chi0, 0.25).unwrap();
        assert!(r.agrees, "{r:?}");
        assert!((r.level2 - (2f64.ln() - h(0.75))).abs() < 1e-4);
        let r0 = contraction_consistency(&full, &zero, &chi0, 0.0).unwrap();
        assert_eq!((r0.level1, r0.level2), (0.0, 0.0));

        let g = SftModel::golden_mean();
        let chi1 = LocallyConstantFn::cylinder_indicator(&g, &[1]).unwrap();
        let r = contraction_consistency(&g, &LocallyConstantFn::zero(&g), &chi1, 0.1).unwrap();
        assert!(r.agrees, "{r:?}");
    }
}
