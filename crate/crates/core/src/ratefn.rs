//! Free energy and the large-deviations rate function of Birkhoff averages.
//!
//! For a potential `phi` with equilibrium state `mu` and an observable `psi`,
//! the free energy is `E(t) = P(phi + t psi) - P(phi)` and its derivative is
//! `E'(t) = int psi d mu_{phi + t psi}`. The rate function is the Legendre
//! transform `I(s) = sup_t { s t - E(t) }`, evaluated here by solving
//! `E'(t) = s` with bisection on `[-T, T]`.
//!
//! By default `psi` is centered by `int psi d mu_phi`, so `I(0) = 0`; the
//! centering constant is recorded and [`Centering::Uncentered`] keeps raw
//! coordinates.

use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{
    cycle_masses, edge_table, invariant_integral_range, random_interior_masses, EdgeSlice, MarkovMeasure,
};
use crate::sft::{recode_to_depth2, BlockRecoding, LocallyConstantFn, SftModel};
use crate::sum::NeumaierSum;
use crate::transfer::{equilibrium_of_table, pressure_of_table, EquilibriumMeasure};

/// Default truncation of the Legendre variable.
pub const DEFAULT_T_MAX: f64 = 50.0;
/// Target accuracy of `|E'(t) - s|` in [`RateFunction::legendre`].
pub const LEGENDRE_TOL: f64 = 1e-10;
/// Degeneracy threshold on both the affine deviation and the variance.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Probe points of [`detect_degeneracy`].
pub const DEGENERACY_PROBES: [f64; 6] = [-10.0, -1.0, -1e-2, 1e-2, 1.0, 10.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    #[default]
    Centered,
    Uncentered,
}

/// `t -> (E(t), E'(t))` for a fixed `(model, phi, psi)`.
#[derive(Debug)]
pub struct FreeEnergy {
    recoding: BlockRecoding,
    phi: Vec<f64>,
    psi: Vec<f64>,
    p_top: f64,
    mean: f64,
    centering: Centering,
    reference: EquilibriumMeasure,
    cache: RwLock<HashMap<u64, (f64, f64)>>,
}

impl FreeEnergy {
    /// Recodes `phi` and `psi` to a common depth-2 presentation and computes the
    /// reference equilibrium state. The model must be primitive.
    pub fn new(
        model: &SftModel,
        phi: &LocallyConstantFn,
        psi: &LocallyConstantFn,
        centering: Centering,
    ) -> Result<Self> {
        model.require_primitive()?;
        let (recoding, fns) = recode_to_depth2(model, &[phi, psi])?;
        let target = recoding.target();
        let phi_t = edge_table(target, &fns[0])?;
        let psi_t = edge_table(target, &fns[1])?;
        let reference = equilibrium_of_table(target, &phi_t)?;
        let mean = reference.measure.integral_edges(&psi_t);
        Ok(FreeEnergy {
            p_top: reference.pressure,
            phi: phi_t,
            psi: psi_t,
            mean,
            centering,
            reference,
            recoding,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Depth-2 presentation the computation runs on.
    pub fn model(&self) -> &SftModel {
        self.recoding.target()
    }

    pub fn recoding(&self) -> &BlockRecoding {
        &self.recoding
    }

    pub fn p_top(&self) -> f64 {
        self.p_top
    }

    /// `int psi d mu_phi` in raw coordinates.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    /// Constant subtracted from `psi` (zero when uncentered).
    pub fn offset(&self) -> f64 {
        match self.centering {
            Centering::Centered => self.mean,
            Centering::Uncentered => 0.0,
        }
    }

    /// Space average of `psi` in the working coordinates.
    pub fn working_mean(&self) -> f64 {
        self.mean - self.offset()
    }

    pub fn reference(&self) -> &EquilibriumMeasure {
        &self.reference
    }

    pub fn phi_table(&self) -> &[f64] {
        &self.phi
    }

    /// `psi` edge table in the working coordinates.
    pub fn psi_table(&self) -> Vec<f64> {
        let c = self.offset();
        self.psi.iter().map(|v| v - c).collect()
    }

    fn tilted(&self, t: f64) -> Vec<f64> {
        let c = self.offset();
        self.phi.iter().zip(&self.psi).map(|(f, g)| f + t * (g - c)).collect()
    }

    /// Equilibrium state of `phi + t psi`.
    pub fn tilted_equilibrium(&self, t: f64) -> Result<EquilibriumMeasure> {
        equilibrium_of_table(self.model(), &self.tilted(t))
    }

    /// `(E(t), E'(t))`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        if !t.is_finite() {
            return Err(Error::invalid("t must be finite"));
        }
        let key = t.to_bits();
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = if t == 0.0 {
            (0.0, self.working_mean())
        } else {
            let eq = self.tilted_equilibrium(t)?;
            let de = eq.measure.integral_edges(&self.psi) - self.offset();
            (eq.pressure - self.p_top, de)
        };
        let mut cache = self.cache.write().expect("cache lock");
        Ok(*cache.entry(key).or_insert(v))
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|v| v.0)
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|v| v.1)
    }

    /// Pressure of `phi + t psi` computed without the equilibrium construction.
    pub fn tilted_pressure(&self, t: f64) -> Result<f64> {
        pressure_of_table(self.model(), &self.tilted(t))
    }

    /// Asymptotic variance `E''(0)` of `psi` under `mu_phi`.
    ///
    /// Uses the edge chain: with `g = sum_k P^k psi~` the Poisson solution,
    /// `sigma^2 = sum_e q_e psi~_e (2 g_e - psi~_e)`.
    pub fn asymptotic_variance(&self) -> Result<f64> {
        let model = self.model();
        let m = model.alphabet_size();
        let mu = &self.reference.measure;
        let edges = model.edges();
        let centered: Vec<f64> = {
            let mut t = vec![0.0; m * m];
            for &(i, j) in &edges {
                t[i * m + j] = self.psi[i * m + j] - self.mean;
            }
            t
        };
        // (P v)(i, j) = sum_k p_jk v(j, k)
        let apply = |v: &[f64]| -> Vec<f64> {
            let mut node = vec![0.0; m];
            for (j, slot) in node.iter_mut().enumerate() {
                let mut acc = NeumaierSum::new();
                for k in model.successors(j) {
                    acc.add(mu.p[j][k] * v[j * m + k]);
                }
                *slot = acc.value();
            }
            let mut out = vec![0.0; m * m];
            for &(i, j) in &edges {
                out[i * m + j] = node[j];
            }
            out
        };
        let scale = centered.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            return Ok(0.0);
        }
        let mut g = centered.clone();
        let mut term = centered.clone();
        let mut converged = false;
        for _ in 0..100_000 {
            term = apply(&term);
            // project out the drift rounding leaves along the constants
            let drift: f64 = edges.iter().map(|&(i, j)| mu.edge_mass(i, j) * term[i * m + j]).sum();
            for &(i, j) in &edges {
                term[i * m + j] -= drift;
            }
            let size = term.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (gi, ti) in g.iter_mut().zip(&term) {
                *gi += ti;
            }
            if size < 1e-16 * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NumericalFailure {
                iterations: 100_000,
                message: "Poisson series for the asymptotic variance did not converge".into(),
            });
        }
        let mut acc = NeumaierSum::new();
        for &(i, j) in &edges {
            let e = i * m + j;
            acc.add(mu.edge_mass(i, j) * centered[e] * (2.0 * g[e] - centered[e]));
        }
        Ok(acc.value().max(0.0))
    }
}

/// Whether `psi` is cohomologous to a constant, with the evidence used.
#[derive(Clone, Debug, Serialize)]
pub struct DegeneracyReport {
    pub sigma2: f64,
    pub cohomologous: bool,
    pub max_affine_deviation: f64,
    /// `(t, E(t), t E'(0))` at each probe.
    pub probes: Vec<(f64, f64, f64)>,
}

impl DegeneracyReport {
    pub fn verdict(&self) -> &'static str {
        if self.cohomologous {
            "cohomologous-to-constant"
        } else {
            "non-degenerate"
        }
    }
}

pub fn detect_degeneracy_of(fe: &FreeEnergy) -> Result<DegeneracyReport> {
    let slope = fe.derivative(0.0)?;
    let mut probes = Vec::with_capacity(DEGENERACY_PROBES.len());
    let mut worst = 0.0f64;
    for &t in &DEGENERACY_PROBES {
        let e = fe.value(t)?;
        let affine = t * slope;
        worst = worst.max((e - affine).abs());
        probes.push((t, e, affine));
    }
    let sigma2 = fe.asymptotic_variance()?;
    Ok(DegeneracyReport {
        sigma2,
        cohomologous: worst < DEGENERACY_TOL && sigma2 < DEGENERACY_TOL,
        max_affine_deviation: worst,
        probes,
    })
}

pub fn detect_degeneracy(
    model: &SftModel,
    phi: &LocallyConstantFn,
    psi: &LocallyConstantFn,
) -> Result<DegeneracyReport> {
    detect_degeneracy_of(&FreeEnergy::new(model, phi, psi, Centering::Centered)?)
}

/// `(E(t), E'(t))` with `psi` centered.
pub fn free_energy(model: &SftModel, phi: &LocallyConstantFn, psi: &LocallyConstantFn, t: f64) -> Result<(f64, f64)> {
    FreeEnergy::new(model, phi, psi, Centering::Centered)?.eval(t)
}

/// One evaluated point of the rate function.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct RateSample {
    pub s: f64,
    pub rate: f64,
    pub t: f64,
}

/// Legendre transform of a non-degenerate free energy.
#[derive(Debug)]
pub struct RateFunction {
    fe: FreeEnergy,
    t_max: f64,
    s_min: f64,
    s_max: f64,
    birkhoff_range: (f64, f64),
    degeneracy: DegeneracyReport,
}

impl RateFunction {
    /// Fails with [`Error::Degenerate`] when `psi` is cohomologous to a constant.
    pub fn new(fe: FreeEnergy, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::invalid("T_max must be positive and finite"));
        }
        let degeneracy = detect_degeneracy_of(&fe)?;
        if degeneracy.cohomologous {
            return Err(Error::Degenerate {
                sigma2: degeneracy.sigma2,
            });
        }
        let s_min = fe.derivative(-t_max)?;
        let s_max = fe.derivative(t_max)?;
        let psi = fe.psi_table();
        let ((_, lo), (_, hi)) = invariant_integral_range(fe.model(), &psi);
        Ok(RateFunction {
            fe,
            t_max,
            s_min,
            s_max,
            birkhoff_range: (lo, hi),
            degeneracy,
        })
    }

    pub fn build(
        model: &SftModel,
        phi: &LocallyConstantFn,
        psi: &LocallyConstantFn,
        centering: Centering,
    ) -> Result<Self> {
        Self::new(FreeEnergy::new(model, phi, psi, centering)?, DEFAULT_T_MAX)
    }

    pub fn free_energy(&self) -> &FreeEnergy {
        &self.fe
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// `(E'(-T), E'(T))`, an inner approximation of the Birkhoff range.
    pub fn domain(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }

    /// Exact range of `int psi d eta` over invariant measures (extreme cycle
    /// means), in working coordinates.
    pub fn birkhoff_range(&self) -> (f64, f64) {
        self.birkhoff_range
    }

    pub fn degeneracy(&self) -> &DegeneracyReport {
        &self.degeneracy
    }

    pub fn mean(&self) -> f64 {
        self.fe.working_mean()
    }

    pub fn p_top(&self) -> f64 {
        self.fe.p_top()
    }

    pub fn in_domain(&self, s: f64) -> bool {
        self.s_min <= s && s <= self.s_max
    }

    /// `(I(s), t(s))` with `E'(t(s)) = s`.
    pub fn legendre(&self, s: f64) -> Result<(f64, f64)> {
        if !self.in_domain(s) {
            return Err(Error::Domain {
                value: s,
                lo: self.s_min,
                hi: self.s_max,
            });
        }
        let (mut lo, mut hi) = (-self.t_max, self.t_max);
        let mut t = 0.0;
        for _ in 0..400 {
            t = 0.5 * (lo + hi);
            let d = self.fe.derivative(t)?;
            if (d - s).abs() < LEGENDRE_TOL {
                break;
            }
            if d < s {
                lo = t;
            } else {
                hi = t;
            }
            if hi - lo <= f64::EPSILON * t.abs().max(1.0) {
                break;
            }
        }
        let e = self.fe.value(t)?;
        Ok(((s * t - e).max(0.0), t))
    }

    pub fn rate(&self, s: f64) -> Result<f64> {
        self.legendre(s).map(|v| v.0)
    }

    /// Rate where it is decidable: `Some(+inf)` outside the Birkhoff range,
    /// `Some(I(s))` inside the approximated domain, `None` in between.
    pub fn rate_extended(&self, s: f64) -> Result<Option<(f64, f64)>> {
        let (lo, hi) = self.birkhoff_range;
        if s < lo - 1e-12 || s > hi + 1e-12 {
            let t = if s < lo { f64::NEG_INFINITY } else { f64::INFINITY };
            return Ok(Some((f64::INFINITY, t)));
        }
        if self.in_domain(s) {
            return self.legendre(s).map(Some);
        }
        Ok(None)
    }

    pub fn sample(&self, grid: &[f64]) -> Result<Vec<RateSample>> {
        grid.iter()
            .map(|&s| self.legendre(s).map(|(rate, t)| RateSample { s, rate, t }))
            .collect()
    }

    /// `inf I` over `[a, b]` by golden-section search on the convex rate.
    pub fn infimum_on(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::invalid("empty interval"));
        }
        let mean = self.mean();
        if a <= mean && mean <= b {
            return Ok(0.0);
        }
        let lo = a.max(self.s_min);
        let hi = b.min(self.s_max);
        if lo > hi {
            return Err(Error::Domain {
                value: if b < self.s_min { b } else { a },
                lo: self.s_min,
                hi: self.s_max,
            });
        }
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut x0, mut x1) = (lo, hi);
        let mut c = x1 - inv_phi * (x1 - x0);
        let mut d = x0 + inv_phi * (x1 - x0);
        let mut fc = self.rate(c)?;
        let mut fd = self.rate(d)?;
        while x1 - x0 > 1e-12 * (1.0 + x0.abs().max(x1.abs())) {
            if fc <= fd {
                x1 = d;
                d = c;
                fd = fc;
                c = x1 - inv_phi * (x1 - x0);
                fc = self.rate(c)?;
            } else {
                x0 = c;
                c = d;
                fc = fd;
                d = x0 + inv_phi * (x1 - x0);
                fd = self.rate(d)?;
            }
        }
        let ends = self.rate(lo)?.min(self.rate(hi)?);
        Ok(fc.min(fd).min(ends))
    }
}

/// `(I(s), t(s))` with `psi` centered and the default truncation.
pub fn legendre(model: &SftModel, phi: &LocallyConstantFn, psi: &LocallyConstantFn, s: f64) -> Result<(f64, f64)> {
    RateFunction::build(model, phi, psi, Centering::Centered)?.legendre(s)
}

/// `(E'(-T), E'(T))` in centered coordinates.
pub fn domain(model: &SftModel, phi: &LocallyConstantFn, psi: &LocallyConstantFn, t_max: f64) -> Result<(f64, f64)> {
    let fe = FreeEnergy::new(model, phi, psi, Centering::Centered)?;
    RateFunction::new(fe, t_max).map(|r| r.domain())
}

/// Number of deterministic starting points of the variational oracle.
pub const ORACLE_STARTS: usize = 32;

/// Maximizer of `h(eta) + int phi d eta` over Markov measures.
#[derive(Clone, Debug, Serialize)]
pub struct VariationalMax {
    pub value: f64,
    pub measure: MarkovMeasure,
    /// Largest minus smallest final value over starts.
    pub spread: f64,
    pub best_start: usize,
}

fn objective(model: &SftModel, phi: &[f64], q: &[f64]) -> f64 {
    let m = model.alphabet_size();
    let mut acc = NeumaierSum::new();
    for i in 0..m {
        let out: f64 = (0..m).map(|j| q[i * m + j]).sum();
        for j in model.successors(i) {
            let x = q[i * m + j];
            if x > 0.0 {
                acc.add(-x * (x / out).ln() + x * phi[i * m + j]);
            }
        }
    }
    acc.value()
}

/// Damped Newton ascent of the concave `h + int phi` on `start + span(basis)`.
fn newton_ascent(model: &SftModel, slice: &EdgeSlice, phi: &[f64], start: Vec<f64>) -> Vec<f64> {
    let m = model.alphabet_size();
    let dim = slice.dim();
    let mut q = start;
    if dim == 0 {
        return q;
    }
    let n = &slice.basis;
    let mut f = objective(model, phi, &q);
    for _ in 0..500 {
        let x = slice.from_dense(m, &q);
        let out: Vec<f64> = (0..m).map(|i| (0..m).map(|j| q[i * m + j]).sum()).collect();
        let e = slice.edges.len();
        let grad = DVector::from_iterator(
            e,
            slice
                .edges
                .iter()
                .enumerate()
                .map(|(k, &(i, j))| -(x[k] / out[i]).ln() + phi[i * m + j]),
        );
        let mut hess = DMatrix::<f64>::zeros(e, e);
        for (a, &(i, _)) in slice.edges.iter().enumerate() {
            hess[(a, a)] -= 1.0 / x[a];
            for (b, &(k, _)) in slice.edges.iter().enumerate() {
                if i == k {
                    hess[(a, b)] += 1.0 / out[i];
                }
            }
        }
        let gz = n.transpose() * &grad;
        let neg_hz = -(n.transpose() * &hess * n);
        let Some(chol) = neg_hz.clone().cholesky() else { break };
        let dz = chol.solve(&gz);
        let decrement = gz.dot(&dz);
        if decrement < 1e-24 {
            break;
        }
        let dq = slice.to_dense(m, &(n * &dz));
        let mut alpha = 1.0;
        let mut improved = false;
        while alpha > 1e-12 {
            let cand: Vec<f64> = q.iter().zip(&dq).map(|(a, b)| a + alpha * b).collect();
            let positive = slice.edges.iter().all(|&(i, j)| cand[i * m + j] > 0.0);
            if positive {
                let fc = objective(model, phi, &cand);
                if fc >= f + 1e-4 * alpha * decrement || (fc >= f && decrement < 1e-14) {
                    q = cand;
                    f = fc;
                    improved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    q
}

/// Maximizes `h(eta) + int phi d eta` over stationary Markov measures on a
/// depth-2 presentation, optionally under `int psi d eta = s`.
pub fn maximize_free_energy_functional(
    model: &SftModel,
    phi: &[f64],
    constraint: Option<(&[f64], f64)>,
    starts: usize,
    seed: u64,
) -> Result<VariationalMax> {
    model.require_primitive()?;
    let m = model.alphabet_size();
    let extra: Vec<Vec<f64>> = constraint
        .map(|(psi, _)| {
            let mut row = psi.to_vec();
            for v in row.iter_mut() {
                if v.is_nan() {
                    *v = 0.0;
                }
            }
            vec![row]
        })
        .unwrap_or_default();
    let slice = EdgeSlice::new(model, &extra);
    let extremes = match constraint {
        Some((psi, s)) => {
            let ((lo_cycle, lo), (hi_cycle, hi)) = invariant_integral_range(model, psi);
            let margin = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            if !(lo + margin < s && s < hi - margin) {
                return Err(Error::Domain { value: s, lo, hi });
            }
            Some((
                cycle_masses(model, &lo_cycle),
                lo,
                cycle_masses(model, &hi_cycle),
                hi,
                psi,
                s,
            ))
        }
        None => None,
    };

    let mut results: Vec<(f64, Vec<f64>)> = Vec::with_capacity(starts.max(1));
    for k in 0..starts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let interior = random_interior_masses(model, &mut rng)?;
        let start = match &extremes {
            None => interior,
            Some((q_lo, lo, q_hi, hi, psi, s)) => {
                let r: f64 = model
                    .edges()
                    .iter()
                    .map(|&(i, j)| interior[i * m + j] * psi[i * m + j])
                    .sum();
                let mut a = 0.95 - 0.9 * k as f64 / starts.max(1) as f64;
                loop {
                    let b = (s - a * r - (1.0 - a) * lo) / (hi - lo);
                    let c = 1.0 - a - b;
                    if b >= 0.0 && c >= 0.0 {
                        break (0..m * m)
                            .map(|e| a * interior[e] + b * q_hi[e] + c * q_lo[e])
                            .collect();
                    }
                    a *= 0.5;
                }
            }
        };
        let q = newton_ascent(model, &slice, phi, start);
        results.push((objective(model, phi, &q), q));
    }
    let (best_start, (value, q)) = results
        .iter()
        .enumerate()
        .fold(None::<(usize, &(f64, Vec<f64>))>, |acc, (k, r)| match acc {
            Some((_, b)) if b.0 >= r.0 => acc,
            _ => Some((k, r)),
        })
        .expect("at least one start");
    let lo = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let spread = value - lo;
    Ok(VariationalMax {
        value: *value,
        measure: MarkovMeasure::from_edge_masses(model, q)?,
        spread,
        best_start,
    })
}

/// Independent evaluation of the rate function from its variational form.
#[derive(Clone, Debug, Serialize)]
pub struct VariationalRate {
    /// `I(s) = P - sup { h + int phi : int psi = s }`.
    pub rate: f64,
    /// Pressure from the unconstrained maximization.
    pub pressure: f64,
    pub spread: f64,
    pub maximizer: MarkovMeasure,
}

/// Rate at `s` from maximizing entropy plus energy over Markov measures.
///
/// The pressure and the centering mean come from the unconstrained problem,
/// so no transfer-operator quantity enters.
pub fn rate_by_variational_oracle(
    model: &SftModel,
    phi: &LocallyConstantFn,
    psi: &LocallyConstantFn,
    s: f64,
    centering: Centering,
) -> Result<VariationalRate> {
    let (rec, fns) = recode_to_depth2(model, &[phi, psi])?;
    let target = rec.target();
    let phi_t = edge_table(target, &fns[0])?;
    let psi_t = edge_table(target, &fns[1])?;
    let free = maximize_free_energy_functional(target, &phi_t, None, ORACLE_STARTS, 0x5eed)?;
    let mean = free.measure.integral_edges(&psi_t);
    let raw_s = match centering {
        Centering::Centered => s + mean,
        Centering::Uncentered => s,
    };
    if (raw_s - mean).abs() < 1e-12 {
        return Ok(VariationalRate {
            rate: 0.0,
            pressure: free.value,
            spread: free.spread,
            maximizer: free.measure,
        });
    }
    let constrained = maximize_free_energy_functional(target, &phi_t, Some((&psi_t, raw_s)), ORACLE_STARTS, 0x5eed)?;
    Ok(VariationalRate {
        rate: (free.value - constrained.value).max(0.0),
        pressure: free.value,
        spread: constrained.spread.max(free.spread),
        maximizer: constrained.measure,
    })
}
