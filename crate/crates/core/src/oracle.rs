//! Exact deviation probabilities by enumeration of cylinders.
//!
//! `m_n(I) = mu{ w : S_n psi(w) / n in I }` is computed exactly: a dynamic
//! program runs over (last symbol, multiset of visited `psi` values), which
//! represents every admissible `n`-word without listing it when `psi` takes
//! few distinct values. [`deviation_mass_enumerated`] walks the words one by
//! one and serves as the independent check.
//!
//! The program is split into shards by first symbol. Shards run in parallel
//! and are merged in a fixed order with compensated sums, so results do not
//! depend on the thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{edge_table, MarkovMeasure};
use crate::ratefn::{Centering, RateFunction};
use crate::sft::{birkhoff_sum, enumerate_words, BlockRecoding, LocallyConstantFn, SftModel, Word};
use crate::sum::NeumaierSum;
use crate::transfer::equilibrium_of_table;

/// Default cap on dynamic-programming states (or words, for enumeration).
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// Finite union of closed intervals; ends may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalSet {
    parts: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn closed(a: f64, b: f64) -> Result<Self> {
        if a.is_nan() || b.is_nan() || a > b {
            return Err(Error::invalid(format!("[{a}, {b}] is not an interval")));
        }
        Ok(IntervalSet { parts: vec![(a, b)] })
    }

    pub fn real_line() -> Self {
        IntervalSet {
            parts: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    /// `(-inf, center - c] U [center + c, +inf)`.
    pub fn symmetric_complement(center: f64, c: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(Error::invalid("c must be nonnegative"));
        }
        Self::from_parts(vec![(f64::NEG_INFINITY, center - c), (center + c, f64::INFINITY)])
    }

    /// Sorts and merges overlapping parts.
    pub fn from_parts(mut parts: Vec<(f64, f64)>) -> Result<Self> {
        if parts.iter().any(|&(a, b)| a.is_nan() || b.is_nan() || a > b) {
            return Err(Error::invalid("malformed interval part"));
        }
        parts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(parts.len());
        for (a, b) in parts {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Ok(IntervalSet { parts: out })
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// Closed `delta`-neighborhood.
    pub fn widen(&self, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::invalid("delta must be nonnegative"));
        }
        Self::from_parts(self.parts.iter().map(|&(a, b)| (a - delta, b + delta)).collect())
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.parts
            .iter()
            .all(|&(a, b)| other.parts.iter().any(|&(c, d)| c <= a && b <= d))
    }
}

impl std::fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
        write!(f, "{}", parts.join(" U "))
    }
}

/// Enumeration limits.
#[derive(Clone, Copy, Debug)]
pub struct EnumerationOptions {
    pub budget: u128,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            budget: DEFAULT_BUDGET,
            threads: 0,
        }
    }
}

/// Measure and observable prepared for exact deviation masses.
#[derive(Clone, Debug)]
pub struct DeviationProblem {
    recoding: BlockRecoding,
    measure: MarkovMeasure,
    psi: LocallyConstantFn,
    pressure: Option<f64>,
    // distinct values of psi, ascending
    values: Vec<f64>,
    // per target symbol: value counts of the windows inside its block
    init: Vec<Vec<u32>>,
    // per target edge: index into `values` of the window ending at the edge
    step: Vec<usize>,
}

impl DeviationProblem {
    /// Equilibrium state of `phi`; both functions may have any depth.
    pub fn equilibrium(model: &SftModel, phi: &LocallyConstantFn, psi: &LocallyConstantFn) -> Result<Self> {
        model.require_primitive()?;
        let b = phi.depth().max(psi.depth()).max(2) - 1;
        let recoding = BlockRecoding::new(model, b)?;
        let target = recoding.target();
        let table = edge_table(target, &recoding.recode_fn(phi)?)?;
        let eq = equilibrium_of_table(target, &table)?;
        Self::build(recoding, eq.measure, psi, Some(eq.pressure))
    }

    /// A given Markov measure on `model`; `psi` must have depth at most 2.
    pub fn with_measure(model: &SftModel, measure: MarkovMeasure, psi: &LocallyConstantFn) -> Result<Self> {
        if psi.depth() > 2 {
            return Err(Error::invalid(
                "observable depth must be at most 2 for a Markov measure",
            ));
        }
        if measure.alphabet_size() != model.alphabet_size() || !measure.supported_in(model) {
            return Err(Error::invalid("measure does not live on the model"));
        }
        Self::build(BlockRecoding::identity(model), measure, psi, None)
    }

    fn build(
        recoding: BlockRecoding,
        measure: MarkovMeasure,
        psi: &LocallyConstantFn,
        pressure: Option<f64>,
    ) -> Result<Self> {
        let mut values: Vec<f64> = psi.entries().iter().map(|(_, v)| *v).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let index = |v: f64| values.binary_search_by(|x| x.total_cmp(&v)).expect("value present");
        let target = recoding.target();
        let mt = target.alphabet_size();
        let d = psi.depth();
        let b = recoding.block_len();
        let init = (0..mt)
            .map(|s| {
                let mut counts = vec![0u32; values.len()];
                let block = recoding.block(s).symbols();
                if d <= b {
                    for w in block.windows(d) {
                        counts[index(psi.value(w))] += 1;
                    }
                }
                counts
            })
            .collect();
        let mut step = vec![usize::MAX; mt * mt];
        for (u, v) in target.edges() {
            let mut w = recoding.block(u).symbols().to_vec();
            w.push(recoding.block(v).last());
            step[u * mt + v] = index(psi.value(&w[w.len() - d..]));
        }
        Ok(DeviationProblem {
            recoding,
            measure,
            psi: psi.clone(),
            pressure,
            values,
            init,
            step,
        })
    }

    pub fn model(&self) -> &SftModel {
        self.recoding.source()
    }

    pub fn measure(&self) -> &MarkovMeasure {
        &self.measure
    }

    pub fn psi(&self) -> &LocallyConstantFn {
        &self.psi
    }

    /// Pressure of the potential, when built from one.
    pub fn pressure(&self) -> Option<f64> {
        self.pressure
    }

    /// Shortest word length the problem represents.
    pub fn min_length(&self) -> usize {
        self.recoding.block_len()
    }

    /// `int psi d mu`.
    pub fn mean(&self) -> f64 {
        let t = self.recoding.target();
        let mt = t.alphabet_size();
        let mut acc = NeumaierSum::new();
        for (u, v) in t.edges() {
            acc.add(self.measure.edge_mass(u, v) * self.values[self.step[u * mt + v]]);
        }
        acc.value()
    }

    fn windows(&self, n: usize) -> usize {
        (n + 1).saturating_sub(self.psi.depth())
    }

    /// States visited by the dynamic program up to length `n_max`.
    pub fn dp_states(&self, n_max: usize) -> u128 {
        let t = self.recoding.target();
        let mt = t.alphabet_size() as u128;
        let d = self.values.len();
        let b = self.recoding.block_len();
        let mut total: u128 = 0;
        for n in b..=n_max {
            let multisets = binomial_saturating((self.windows(n) + d - 1) as u128, (d - 1) as u128);
            let bound = mt.saturating_mul(multisets).min(t.word_count(n + 1 - b));
            total = total.saturating_add(bound);
        }
        total
    }

    fn check_length(&self, n: usize) -> Result<()> {
        if n < self.min_length() {
            return Err(Error::invalid(format!(
                "word length {n} is shorter than the block length {}",
                self.min_length()
            )));
        }
        Ok(())
    }

    /// Distribution of `S_n psi` for every `n` in `lengths` (ascending).
    pub fn distributions(&self, lengths: &[usize], opts: EnumerationOptions) -> Result<Vec<BirkhoffDistribution>> {
        let Some(&n_max) = lengths.last() else {
            return Ok(Vec::new());
        };
        if lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("lengths must be strictly ascending"));
        }
        self.check_length(lengths[0])?;
        let needed = self.dp_states(n_max);
        if needed > opts.budget {
            return Err(Error::ResourceLimit {
                needed,
                budget: opts.budget,
            });
        }
        let t = self.recoding.target();
        let shards: Vec<usize> = (0..t.alphabet_size()).collect();
        let run = || -> Vec<Vec<BTreeMap<Vec<u32>, NeumaierSum>>> {
            shards.par_iter().map(|&s| self.run_shard(s, lengths)).collect()
        };
        let per_shard = if opts.threads == 0 {
            run()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.threads)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
                .install(run)
        };
        let mut out = Vec::with_capacity(lengths.len());
        for (k, &n) in lengths.iter().enumerate() {
            let mut merged: BTreeMap<Vec<u32>, NeumaierSum> = BTreeMap::new();
            for shard in &per_shard {
                for (key, mass) in &shard[k] {
                    merged.entry(key.clone()).or_default().merge(mass);
                }
            }
            let atoms = merged
                .into_iter()
                .map(|(counts, mass)| {
                    let mut s = NeumaierSum::new();
                    for (c, v) in counts.iter().zip(&self.values) {
                        s.add(*c as f64 * v);
                    }
                    (s.value(), mass.value())
                })
                .collect();
            out.push(BirkhoffDistribution { n, atoms });
        }
        Ok(out)
    }

    // masses keyed by value counts, for words starting with target symbol `s`
    fn run_shard(&self, s: usize, lengths: &[usize]) -> Vec<BTreeMap<Vec<u32>, NeumaierSum>> {
        let t = self.recoding.target();
        let mt = t.alphabet_size();
        let b = self.recoding.block_len();
        let p = &self.measure.p;
        let mut level: BTreeMap<(usize, Vec<u32>), NeumaierSum> = BTreeMap::new();
        let mut start = NeumaierSum::new();
        start.add(self.measure.pi[s]);
        level.insert((s, self.init[s].clone()), start);
        let mut out = Vec::with_capacity(lengths.len());
        let mut next_len = 0;
        let mut n = b;
        loop {
            if lengths[next_len] == n {
                let mut collapsed: BTreeMap<Vec<u32>, NeumaierSum> = BTreeMap::new();
                for ((_, counts), mass) in &level {
                    collapsed.entry(counts.clone()).or_default().merge(mass);
                }
                out.push(collapsed);
                next_len += 1;
                if next_len == lengths.len() {
                    break;
                }
            }
            let mut next: BTreeMap<(usize, Vec<u32>), NeumaierSum> = BTreeMap::new();
            for ((u, counts), mass) in &level {
                let m = mass.value();
                if m == 0.0 {
                    continue;
                }
                for v in t.successors(*u) {
                    let mut c = counts.clone();
                    c[self.step[u * mt + v]] += 1;
                    next.entry((v, c)).or_default().add(m * p[*u][v]);
                }
            }
            level = next;
            n += 1;
        }
        out
    }

    /// `m_n(I)` for each `n` in `lengths`.
    pub fn masses(&self, interval: &IntervalSet, lengths: &[usize], opts: EnumerationOptions) -> Result<Vec<f64>> {
        Ok(self
            .distributions(lengths, opts)?
            .iter()
            .map(|d| d.mass_in(interval))
            .collect())
    }
}

fn binomial_saturating(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut r: u128 = 1;
    for i in 0..k {
        r = match r.checked_mul(n - i) {
            Some(x) => x / (i + 1),
            None => return u128::MAX,
        };
    }
    r
}

/// Law of `S_n psi` under the measure: `(value, mass)` atoms.
#[derive(Clone, Debug, Serialize)]
pub struct BirkhoffDistribution {
    pub n: usize,
    pub atoms: Vec<(f64, f64)>,
}

impl BirkhoffDistribution {
    pub fn mass_in(&self, interval: &IntervalSet) -> f64 {
        let n = self.n as f64;
        let mut acc = NeumaierSum::new();
        for &(s, m) in &self.atoms {
            if interval.contains(s / n) {
                acc.add(m);
            }
        }
        acc.value().clamp(0.0, 1.0)
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        acc.extend(self.atoms.iter().map(|a| a.1));
        acc.value()
    }
}

/// `m_n(I)` by the dynamic program.
pub fn deviation_mass(
    problem: &DeviationProblem,
    interval: &IntervalSet,
    n: usize,
    opts: EnumerationOptions,
) -> Result<f64> {
    Ok(problem.masses(interval, &[n], opts)?[0])
}

/// `m_n(I)` by listing every admissible `n`-word.
pub fn deviation_mass_enumerated(
    problem: &DeviationProblem,
    interval: &IntervalSet,
    n: usize,
    budget: u128,
) -> Result<f64> {
    problem.check_length(n)?;
    let model = problem.model();
    let needed = model.word_count(n);
    if needed > budget {
        return Err(Error::ResourceLimit { needed, budget });
    }
    let mut acc = NeumaierSum::new();
    for w in enumerate_words(model, n) {
        let s = if n >= problem.psi.depth() {
            birkhoff_sum(&problem.psi, &w)?
        } else {
            0.0
        };
        if interval.contains(s / n as f64) {
            let code: Word = problem.recoding.encode(&w)?;
            acc.add(problem.measure.cylinder_mass(code.symbols()));
        }
    }
    Ok(acc.value())
}

/// Exact masses over a range of lengths.
#[derive(Clone, Debug, Serialize)]
pub struct DeviationMassSeries {
    pub interval: IntervalSet,
    pub n: Vec<usize>,
    pub mass: Vec<f64>,
    /// `-(1/n) log m_n`, `+inf` for zero masses.
    pub rate: Vec<f64>,
}

impl DeviationMassSeries {
    pub fn compute(
        problem: &DeviationProblem,
        interval: &IntervalSet,
        lengths: &[usize],
        opts: EnumerationOptions,
    ) -> Result<Self> {
        let mass = problem.masses(interval, lengths, opts)?;
        Ok(Self::from_masses(interval.clone(), lengths.to_vec(), mass))
    }

    pub fn from_masses(interval: IntervalSet, n: Vec<usize>, mass: Vec<f64>) -> Self {
        let rate = n
            .iter()
            .zip(&mass)
            .map(|(&k, &m)| if m > 0.0 { -m.ln() / k as f64 } else { f64::INFINITY })
            .collect();
        DeviationMassSeries {
            interval,
            n,
            mass,
            rate,
        }
    }
}

/// Slope estimate of the exponential decay rate of `m_n`.
#[derive(Clone, Debug, Serialize)]
pub struct LEstimate {
    /// Reported estimate, clamped at 0; `+inf` when some mass vanishes.
    pub l_hat: f64,
    /// Least-squares slope of `-log m_n` against `n`.
    pub raw_slope: f64,
    /// Slope of `-log m_n - (1/2) log n`, used when the interval misses the
    /// mean (polynomial prefactor of a deviation probability).
    pub corrected_slope: f64,
    pub prefactor_corrected: bool,
    pub zero_masses: bool,
    /// `-(1/n) log m_n` per length.
    pub rates: Vec<f64>,
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let mut sxy = NeumaierSum::new();
    let mut sxx = NeumaierSum::new();
    for (a, b) in x.iter().zip(y) {
        sxy.add((a - mx) * (b - my));
        sxx.add((a - mx) * (a - mx));
    }
    sxy.value() / sxx.value()
}

/// `L-hat` from a mass series. `contains_mean` switches the prefactor
/// correction off.
pub fn estimate_l_from_series(series: &DeviationMassSeries, contains_mean: bool) -> Result<LEstimate> {
    if series.n.len() < 2 {
        return Err(Error::invalid("need at least two lengths"));
    }
    let rates = series.rate.clone();
    if series.mass.iter().any(|&m| m <= 0.0) {
        return Ok(LEstimate {
            l_hat: f64::INFINITY,
            raw_slope: f64::INFINITY,
            corrected_slope: f64::INFINITY,
            prefactor_corrected: !contains_mean,
            zero_masses: true,
            rates,
        });
    }
    let x: Vec<f64> = series.n.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = series.mass.iter().map(|m| -m.ln()).collect();
    let yc: Vec<f64> = y.iter().zip(&x).map(|(v, n)| v - 0.5 * n.ln()).collect();
    let raw_slope = ls_slope(&x, &y);
    let corrected_slope = ls_slope(&x, &yc);
    let chosen = if contains_mean { raw_slope } else { corrected_slope };
    Ok(LEstimate {
        l_hat: chosen.max(0.0),
        raw_slope,
        corrected_slope,
        prefactor_corrected: !contains_mean,
        zero_masses: false,
        rates,
    })
}

/// Masses over `lengths` and the slope estimate of their decay.
pub fn estimate_l(
    problem: &DeviationProblem,
    interval: &IntervalSet,
    lengths: &[usize],
    opts: EnumerationOptions,
) -> Result<(DeviationMassSeries, LEstimate)> {
    let series = DeviationMassSeries::compute(problem, interval, lengths, opts)?;
    let est = estimate_l_from_series(&series, interval.contains(problem.mean()))?;
    Ok((series, est))
}

/// Outcome of comparing `-(1/n) log m_n` with `inf I` at the largest `n`.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub a: f64,
    pub b: f64,
    /// `inf I` over `[a, b]`; equals the infimum over `(a, b)` since `I` is
    /// convex and continuous inside its domain.
    pub inf_rate: f64,
    /// Smallest `C` with `|rate_n - inf I| <= C log n / n` at the earlier lengths.
    pub c: f64,
    pub n: usize,
    pub rate_n: f64,
    pub delta: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
    pub series: DeviationMassSeries,
}

/// How the constant of the slack `delta(n) = C log n / n` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlackCalibration {
    /// Smallest `C` covering every earlier length with a nonzero mass.
    EarlierLengths,
    /// A given `C`, for lattice-dominated cases near the domain edge.
    Fixed(f64),
}

pub fn ldp_sandwich_check(
    model: &SftModel,
    phi: &LocallyConstantFn,
    psi: &LocallyConstantFn,
    a: f64,
    b: f64,
    lengths: &[usize],
    calibration: SlackCalibration,
    opts: EnumerationOptions,
) -> Result<SandwichReport> {
    if !(a < b) {
        return Err(Error::invalid("need a < b"));
    }
    if lengths.len() < 3 {
        return Err(Error::invalid("need at least three lengths"));
    }
    let problem = DeviationProblem::equilibrium(model, phi, psi)?;
    let rf = RateFunction::build(model, phi, psi, Centering::Uncentered)?;
    let inf_rate = rf.infimum_on(a, b)?;
    let interval = IntervalSet::closed(a, b)?;
    let series = DeviationMassSeries::compute(&problem, &interval, lengths, opts)?;
    let last = series.n.len() - 1;
    let n = series.n[last];
    let rate_n = series.rate[last];
    let c = match calibration {
        SlackCalibration::EarlierLengths => series.n[..last]
            .iter()
            .zip(&series.rate[..last])
            .filter(|(k, r)| **k >= 2 && r.is_finite())
            .map(|(&k, r)| (r - inf_rate).abs() * k as f64 / (k as f64).ln())
            .fold(0.0f64, f64::max),
        SlackCalibration::Fixed(c) if c >= 0.0 => c,
        SlackCalibration::Fixed(c) => return Err(Error::invalid(format!("slack constant {c} is negative"))),
    };
    let delta = c * (n as f64).ln() / n as f64;
    let lower = inf_rate - delta;
    let upper = inf_rate + delta;
    Ok(SandwichReport {
        a,
        b,
        inf_rate,
        c,
        n,
        rate_n,
        delta,
        lower,
        upper,
        holds: rate_n.is_finite() && lower <= rate_n && rate_n <= upper,
        series,
    })
}

/// `P_top - L-hat(I_delta)` against the exact deviation pressure for
/// `I = (-inf, mean - c] U [mean + c, inf)`.
#[derive(Clone, Debug, Serialize)]
pub struct UpperBoundReport {
    pub c: f64,
    pub delta: f64,
    pub p_top: f64,
    pub l_hat: f64,
    pub bound: f64,
    /// `P_top - min{I(-c), I(c)}`.
    pub exact: f64,
    pub holds: bool,
    pub series: DeviationMassSeries,
    pub estimate: LEstimate,
}

/// Tolerance of the ordering `bound >= exact`.
pub const UPPER_BOUND_TOL: f64 = 1e-6;

pub fn deviation_upper_bound_check(
    model: &SftModel,
    phi: &LocallyConstantFn,
    psi: &LocallyConstantFn,
    c: f64,
    delta: f64,
    lengths: &[usize],
    opts: EnumerationOptions,
) -> Result<UpperBoundReport> {
    let problem = DeviationProblem::equilibrium(model, phi, psi)?;
    let rf = RateFunction::build(model, phi, psi, Centering::Centered)?;
    let point = crate::spectrum::deviation_point(&rf, c)?;
    let exact = point
        .value
        .ok_or_else(|| Error::invalid(format!("deviation pressure at c = {c} is undecided")))?;
    let mean = problem.mean();
    let interval = IntervalSet::symmetric_complement(mean, c)?.widen(delta)?;
    let (series, estimate) = estimate_l(&problem, &interval, lengths, opts)?;
    let p_top = rf.p_top();
    let bound = p_top - estimate.l_hat;
    Ok(UpperBoundReport {
        c,
        delta,
        p_top,
        l_hat: estimate.l_hat,
        bound,
        exact,
        holds: bound >= exact - UPPER_BOUND_TOL,
        series,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128) as f64
    }

    fn binomial_problem() -> DeviationProblem {
        let full = SftModel::full_shift(2);
        let chi0 = LocallyConstantFn::cylinder_indicator(&full, &[0]).unwrap();
        DeviationProblem::equilibrium(&full, &LocallyConstantFn::zero(&full), &chi0).unwrap()
    }

    #[test]
    fn binomial_tail() {
        let p = binomial_problem();
        let i = IntervalSet::closed(0.8, 1.0).unwrap();
        let m = deviation_mass(&p, &i, 10, EnumerationOptions::default()).unwrap();
        assert!((m - 56.0 / 1024.0).abs() < 1e-15);
        assert_eq!(deviation_mass_enumerated(&p, &i, 10, DEFAULT_BUDGET).unwrap(), m);
        let all = deviation_mass(&p, &IntervalSet::real_line(), 10, EnumerationOptions::default()).unwrap();
        assert!((all - 1.0).abs() < 1e-15);
        let none = IntervalSet::closed(2.0, 3.0).unwrap();
        assert_eq!(
            deviation_mass(&p, &none, 10, EnumerationOptions::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn exact_against_binomial_sums() {
        let p = binomial_problem();
        let i = IntervalSet::closed(0.61, 0.93).unwrap();
        let lengths: Vec<usize> = (1..=30).collect();
        let masses = p.masses(&i, &lengths, EnumerationOptions::default()).unwrap();
        for (n, m) in lengths.iter().zip(masses) {
            let n = *n as u64;
            let exact: f64 = (0..=n)
                .filter(|&k| i.contains(k as f64 / n as f64))
                .map(|k| binom(n, k) / 2f64.powi(n as i32))
                .sum();
            assert!((m - exact).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn depth_three_matches_enumeration() {
        let g = SftModel::golden_mean();
        let phi = LocallyConstantFn::from_fn(&g, 3, |w| {
            0.3 * w[0] as f64 - 0.2 * w[2] as f64 + 0.1 * (w[1] * w[0]) as f64
        })
        .unwrap();
        let psi = LocallyConstantFn::from_fn(&g, 2, |w| w[0] as f64 + 0.5 * w[1] as f64).unwrap();
        let p = DeviationProblem::equilibrium(&g, &phi, &psi).unwrap();
        let i = IntervalSet::closed(0.31, 0.77).unwrap();
        for n in [2, 5, 9, 13] {
            let a = deviation_mass(&p, &i, n, EnumerationOptions::default()).unwrap();
            let b = deviation_mass_enumerated(&p, &i, n, DEFAULT_BUDGET).unwrap();
            assert!((a - b).abs() < 1e-14, "{n}: {a} {b}");
        }
        let total = deviation_mass(&p, &IntervalSet::real_line(), 13, EnumerationOptions::default()).unwrap();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let m = SftModel::new(vec![vec![1, 1, 0], vec![1, 0, 1], vec![1, 1, 1]]).unwrap();
        let phi = LocallyConstantFn::from_fn(&m, 2, |w| (w[0] as f64 * 0.7 - w[1] as f64 * 0.3).sin()).unwrap();
        let psi = LocallyConstantFn::from_fn(&m, 2, |w| (w[0] + 2 * w[1]) as f64 / 4.0).unwrap();
        let p = DeviationProblem::equilibrium(&m, &phi, &psi).unwrap();
        let i = IntervalSet::closed(0.2, 0.55).unwrap();
        let lengths: Vec<usize> = (4..=14).collect();
        let one = p
            .masses(
                &i,
                &lengths,
                EnumerationOptions {
                    threads: 1,
                    ..Default::default()
                },
            )
            .unwrap();
        let eight = p
            .masses(
                &i,
                &lengths,
                EnumerationOptions {
                    threads: 8,
                    ..Default::default()
                },
            )
            .unwrap();
        assert!(one.iter().zip(&eight).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn budget_is_enforced() {
        let p = binomial_problem();
        let small = EnumerationOptions { budget: 10, threads: 1 };
        assert!(matches!(
            deviation_mass(&p, &IntervalSet::real_line(), 20, small),
            Err(Error::ResourceLimit { .. })
        ));
        assert!(matches!(
            deviation_mass_enumerated(&p, &IntervalSet::real_line(), 20, 1000),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn slope_estimates() {
        let p = binomial_problem();
        let lengths: Vec<usize> = (4..=20).collect();
        let (_, est) = estimate_l(
            &p,
            &IntervalSet::closed(0.8, 1.0).unwrap(),
            &lengths,
            Default::default(),
        )
        .unwrap();
        assert!(est.l_hat >= 0.14 && est.l_hat <= 0.20, "{est:?}");
        assert!(est.l_hat < 0.1927448);
        let (_, mean) = estimate_l(
            &p,
            &IntervalSet::closed(0.4, 0.6).unwrap(),
            &lengths,
            Default::default(),
        )
        .unwrap();
        assert!(mean.l_hat < 0.02, "{mean:?}");
        let (_, none) = estimate_l(
            &p,
            &IntervalSet::closed(2.0, 3.0).unwrap(),
            &lengths,
            Default::default(),
        )
        .unwrap();
        assert!(none.l_hat.is_infinite() && none.zero_masses);
    }

    #[test]
    fn sandwich_examples() {
        let full = SftModel::full_shift(2);
        let zero = LocallyConstantFn::zero(&full);
        let chi0 = LocallyConstantFn::cylinder_indicator(&full, &[0]).unwrap();
        let lengths: Vec<usize> = (4..=20).collect();
        let r = ldp_sandwich_check(
            &full,
            &zero,
            &chi0,
            0.7,
            0.9,
            &lengths,
            SlackCalibration::EarlierLengths,
            Default::default(),
        )
        .unwrap();
        assert!(r.holds, "{r:?}");
        let i07 = 2f64.ln() + 0.7 * 0.7f64.ln() + 0.3 * 0.3f64.ln();
        assert!((r.inf_rate - i07).abs() < 1e-10);
        let r = ldp_sandwich_check(
            &full,
            &zero,
            &chi0,
            0.3,
            0.6,
            &lengths,
            SlackCalibration::EarlierLengths,
            Default::default(),
        )
        .unwrap();
        assert_eq!(r.inf_rate, 0.0);
        assert!(r.holds && r.rate_n < 0.05);

        let g = SftModel::golden_mean();
        let chi1 = LocallyConstantFn::cylinder_indicator(&g, &[1]).unwrap();
        let lengths: Vec<usize> = (4..=18).collect();
        // even lengths only reach frequency exactly 1/2 here, so the earlier
        // lengths understate the slack; a widened constant is needed
        let zero = LocallyConstantFn::zero(&g);
        let r = ldp_sandwich_check(
            &g,
            &zero,
            &chi1,
            0.45,
            0.5,
            &lengths,
            SlackCalibration::EarlierLengths,
            Default::default(),
        )
        .unwrap();
        assert!(!r.holds);
        let r = ldp_sandwich_check(
            &g,
            &zero,
            &chi1,
            0.45,
            0.5,
            &lengths,
            SlackCalibration::Fixed(1.5),
            Default::default(),
        )
        .unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn upper_bound_ordering() {
        let full = SftModel::full_shift(2);
        let zero = LocallyConstantFn::zero(&full);
        let chi0 = LocallyConstantFn::cylinder_indicator(&full, &[0]).unwrap();
        let lengths: Vec<usize> = (4..=20).collect();
        let r = deviation_upper_bound_check(&full, &zero, &chi0, 0.25, 0.01, &lengths, Default::default()).unwrap();
        assert!(r.holds, "{r:?}");
        assert!((r.exact - 0.5623351).abs() < 1e-7);
        let wide = deviation_upper_bound_check(&full, &zero, &chi0, 0.25, 0.3, &lengths, Default::default()).unwrap();
        assert!(wide.l_hat < 1e-12 && (wide.bound - 2f64.ln()).abs() < 1e-12, "{wide:?}");
    }

    #[test]
    fn interval_algebra() {
        let a = IntervalSet::closed(0.2, 0.3).unwrap();
        let b = a.widen(0.1).unwrap();
        assert!(a.is_subset_of(&b) && !b.is_subset_of(&a));
        let s = IntervalSet::symmetric_complement(0.5, 0.25).unwrap();
        assert!(s.contains(0.25) && s.contains(0.75) && !s.contains(0.5));
        assert_eq!(s.widen(0.3).unwrap(), IntervalSet::real_line());
    }
}
