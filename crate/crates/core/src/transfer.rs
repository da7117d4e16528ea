//! Weighted transfer matrices, topological pressure and equilibrium states.
//!
//! For a depth-2 potential `phi` on a subshift with transition matrix `A`, the
//! transfer operator restricted to functions of the first coordinate is the
//! matrix `L_ij = A_ij e^{phi(ij)}`. Its Perron root `lambda` gives the
//! pressure `log lambda`, and with right and left Perron vectors `r`, `l`
//! the equilibrium state is the Markov chain
//! `p_ij = L_ij r_j / (lambda r_i)`, `pi_i = l_i r_i`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{edge_table, MarkovMeasure};
use crate::perron::{perron, spectral_radius, PerronData};
use crate::sft::{enumerate_words, LocallyConstantFn, SftModel};
use crate::sum::NeumaierSum;

/// `A_ij e^{phi(ij)}` for a potential of depth at most 2.
pub fn transfer_matrix(model: &SftModel, phi: &LocallyConstantFn) -> Result<DMatrix<f64>> {
    let table = edge_table(model, phi)?;
    Ok(weighted_matrix(model, &table, 0.0))
}

fn weighted_matrix(model: &SftModel, table: &[f64], shift: f64) -> DMatrix<f64> {
    let m = model.alphabet_size();
    DMatrix::from_fn(m, m, |i, j| {
        if model.allows(i, j) {
            (table[i * m + j] - shift).exp()
        } else {
            0.0
        }
    })
}

fn table_max(model: &SftModel, table: &[f64]) -> f64 {
    let m = model.alphabet_size();
    model
        .edges()
        .iter()
        .map(|&(i, j)| table[i * m + j])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Pressure of a depth-2 edge table. Works for any model: non-primitive
/// transition graphs get the spectral radius over their irreducible blocks.
pub fn pressure_of_table(model: &SftModel, table: &[f64]) -> Result<f64> {
    // factor out e^{max phi} so large weights cannot overflow
    let shift = table_max(model, table);
    let l = weighted_matrix(model, table, shift);
    let rho = if model.is_primitive() {
        perron(&l)?.eigenvalue
    } else {
        spectral_radius(&l)?
    };
    Ok(rho.ln() + shift)
}

/// Topological pressure `log lambda` of a potential of depth at most 2.
pub fn pressure(model: &SftModel, phi: &LocallyConstantFn) -> Result<f64> {
    pressure_of_table(model, &edge_table(model, phi)?)
}

/// Perron data of the transfer matrix scaled by `e^{-shift}`.
#[derive(Clone, Debug, Serialize)]
pub struct ScaledPerron {
    pub data: PerronData,
    pub shift: f64,
}

impl ScaledPerron {
    pub fn pressure(&self) -> f64 {
        self.data.eigenvalue.ln() + self.shift
    }
}

pub fn perron_of_table(model: &SftModel, table: &[f64]) -> Result<ScaledPerron> {
    model.require_primitive()?;
    let shift = table_max(model, table);
    let data = perron(&weighted_matrix(model, table, shift))?;
    Ok(ScaledPerron { data, shift })
}

/// Equilibrium state of a potential together with its Perron data.
#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumMeasure {
    pub measure: MarkovMeasure,
    pub pressure: f64,
    /// Perron root of the transfer matrix (unscaled).
    pub eigenvalue: f64,
    pub perron: PerronData,
    /// Scaling applied to the matrix before the eigensolve.
    pub shift: f64,
}

impl EquilibriumMeasure {
    pub fn pi(&self) -> &[f64] {
        &self.measure.pi
    }

    pub fn p(&self) -> &[Vec<f64>] {
        &self.measure.p
    }
}

/// Equilibrium state from an edge table on a primitive model.
pub fn equilibrium_of_table(model: &SftModel, table: &[f64]) -> Result<EquilibriumMeasure> {
    let sp = perron_of_table(model, table)?;
    let m = model.alphabet_size();
    let PerronData {
        eigenvalue,
        right,
        left,
        ..
    } = &sp.data;
    let mut p = vec![vec![0.0; m]; m];
    for (i, row) in p.iter_mut().enumerate() {
        let mut acc = NeumaierSum::new();
        for j in model.successors(i) {
            row[j] = (table[i * m + j] - sp.shift).exp() * right[j] / (eigenvalue * right[i]);
            acc.add(row[j]);
        }
        // renormalize away eigen-residual drift
        let s = acc.value();
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    let mut z = NeumaierSum::new();
    z.extend((0..m).map(|i| left[i] * right[i]));
    let z = z.value();
    let pi: Vec<f64> = (0..m).map(|i| left[i] * right[i] / z).collect();
    let measure = MarkovMeasure::new(pi, p)?;
    Ok(EquilibriumMeasure {
        measure,
        pressure: sp.pressure(),
        eigenvalue: (eigenvalue.ln() + sp.shift).exp(),
        perron: sp.data,
        shift: sp.shift,
    })
}

/// Equilibrium state `mu_phi` of a depth-≤2 potential on a primitive model.
pub fn equilibrium(model: &SftModel, phi: &LocallyConstantFn) -> Result<EquilibriumMeasure> {
    equilibrium_of_table(model, &edge_table(model, phi)?)
}

/// Entropy of a stationary Markov measure and the integrals of `fns`.
pub fn entropy_and_integrals(
    model: &SftModel,
    measure: &MarkovMeasure,
    fns: &[&LocallyConstantFn],
) -> Result<(f64, Vec<f64>)> {
    // re-validate: callers may hand in hand-built measures
    let checked = MarkovMeasure::new(measure.pi.clone(), measure.p.clone())?;
    if !checked.supported_in(model) {
        return Err(Error::invalid("measure charges a forbidden transition"));
    }
    let integrals = fns
        .iter()
        .map(|f| checked.integral(model, f))
        .collect::<Result<Vec<_>>>()?;
    Ok((checked.entropy(), integrals))
}

/// Uniform comparison of cylinder masses with `e^{-nP + S_n phi}`.
///
/// The Birkhoff sum of the depth-2 potential is taken over the `n` windows of
/// `w+`, the word `w` extended by the smallest admissible successor of its last
/// symbol. Boundary effects of that convention are absorbed into `K`.
#[derive(Clone, Debug, Serialize)]
pub struct GibbsCertificate {
    pub n_max: usize,
    /// `max max(ratio, 1/ratio)` over all cylinders of length `1..=n_max`.
    pub k: f64,
    /// Same maximum per cylinder length.
    pub k_by_length: Vec<f64>,
    /// Eigenvector-ratio prediction of `k_by_length`.
    pub predicted_by_length: Vec<f64>,
    pub worst_word: String,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub cylinders_tested: u128,
}

impl GibbsCertificate {
    /// Whether `k_by_length` is non-increasing from length `from` on.
    pub fn stabilized_from(&self, from: usize, tol: f64) -> bool {
        self.k_by_length
            .windows(2)
            .enumerate()
            .filter(|(i, _)| i + 1 >= from)
            .all(|(_, w)| w[1] <= w[0] + tol)
    }
}

/// Default cap on the number of cylinders enumerated by certification.
pub const DEFAULT_GIBBS_BUDGET: u128 = 10_000_000;

/// Certifies the Gibbs property of `eq` for `phi` on cylinders up to `n_max`.
pub fn gibbs_certify(
    model: &SftModel,
    eq: &EquilibriumMeasure,
    phi: &LocallyConstantFn,
    n_max: usize,
    budget: u128,
) -> Result<GibbsCertificate> {
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let needed: u128 = (1..=n_max).map(|n| model.word_count(n)).fold(0, u128::saturating_add);
    if needed > budget {
        return Err(Error::ResourceLimit { needed, budget });
    }
    let m = model.alphabet_size();
    let table = edge_table(model, phi)?;
    let p_top = eq.pressure;
    let next: Vec<usize> = (0..m)
        .map(|i| model.successors(i).next().expect("no stranded symbols"))
        .collect();

    let mut k_by_length = Vec::with_capacity(n_max);
    let mut k = 1.0f64;
    let mut worst = String::new();
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    for n in 1..=n_max {
        let mut kn = 1.0f64;
        for w in enumerate_words(model, n) {
            let s = w.symbols();
            let mut log_mass = eq.measure.pi[s[0]].ln();
            let mut birkhoff = NeumaierSum::new();
            for pair in s.windows(2) {
                log_mass += eq.measure.p[pair[0]][pair[1]].ln();
                birkhoff.add(table[pair[0] * m + pair[1]]);
            }
            let last = w.last();
            birkhoff.add(table[last * m + next[last]]);
            let log_ratio = log_mass - (-(n as f64) * p_top + birkhoff.value());
            let ratio = log_ratio.exp();
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            let dev = log_ratio.abs().exp();
            if dev > kn {
                kn = dev;
            }
            if dev > k {
                k = dev;
                worst = w.to_string();
            }
        }
        k_by_length.push(kn);
    }
    let predicted_by_length = predicted_gibbs_constants(model, eq, &table, n_max);
    Ok(GibbsCertificate {
        n_max,
        k,
        k_by_length,
        predicted_by_length,
        worst_word: worst,
        min_ratio,
        max_ratio,
        cylinders_tested: needed,
    })
}

/// `max max(R, 1/R)` over symbol pairs `(i, j)` joined by an admissible word
/// of length `n`, where `R_ij = l_i r_j lambda e^{-phi(j s_j)} / (l . r)` is
/// the cylinder ratio of any such word.
pub fn predicted_gibbs_constants(model: &SftModel, eq: &EquilibriumMeasure, table: &[f64], n_max: usize) -> Vec<f64> {
    let m = model.alphabet_size();
    let l = &eq.perron.left;
    let r = &eq.perron.right;
    let lr: f64 = l.iter().zip(r).map(|(a, b)| a * b).sum();
    let log_lambda = eq.pressure;
    let next: Vec<usize> = (0..m).map(|i| model.successors(i).next().unwrap()).collect();
    (1..=n_max)
        .map(|n| {
            let reach = model.reachability(n - 1);
            let mut k = 1.0f64;
            for i in 0..m {
                for j in 0..m {
                    if reach[i * m + j] {
                        let log_r = (l[i] * r[j] / lr).ln() + log_lambda - table[j * m + next[j]];
                        k = k.max(log_r.abs().exp());
                    }
                }
            }
            k
        })
        .collect()
}

/// Measure and certificate in the exported JSON shape.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureExport {
    pub pressure: f64,
    pub pi: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "gibbs_K")]
    pub gibbs_k: f64,
    pub n_max: usize,
}

impl MeasureExport {
    pub fn new(eq: &EquilibriumMeasure, cert: &GibbsCertificate) -> Self {
        MeasureExport {
            pressure: eq.pressure,
            pi: eq.measure.pi.clone(),
            p: eq.measure.p.clone(),
            gibbs_k: cert.k,
            n_max: cert.n_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli_potential(model: &SftModel, w: [f64; 2]) -> LocallyConstantFn {
        LocallyConstantFn::from_fn(model, 2, |s| w[s[1]].ln()).unwrap()
    }

    #[test]
    fn transfer_matrix_examples() {
        let full = SftModel::full_shift(2);
        let zero = LocallyConstantFn::zero(&full);
        assert_eq!(transfer_matrix(&full, &zero).unwrap(), DMatrix::from_element(2, 2, 1.0));

        let a = SftModel::new(vec![
            vec![1, 1, 1, 0],
            vec![1, 1, 1, 0],
            vec![1, 1, 1, 0],
            vec![0, 0, 0, 1],
        ])
        .unwrap();
        let l = transfer_matrix(&a, &LocallyConstantFn::zero(&a)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(l[(i, j)], a.allows(i, j) as u8 as f64);
            }
        }

        let phi = bernoulli_potential(&full, [1.0 / 3.0, 2.0 / 3.0]);
        let l = transfer_matrix(&full, &phi).unwrap();
        assert!((l[(0, 0)] - 1.0 / 3.0).abs() < 1e-15 && (l[(1, 1)] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(l.rank(1e-12), 1);

        let f3 = LocallyConstantFn::zero(&full).extend_depth(&full, 3).unwrap();
        assert!(matches!(transfer_matrix(&full, &f3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn pressure_examples() {
        let full = SftModel::full_shift(2);
        assert!((pressure(&full, &LocallyConstantFn::zero(&full)).unwrap() - 2f64.ln()).abs() < 1e-12);
        let g = SftModel::golden_mean();
        let gold = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((pressure(&g, &LocallyConstantFn::zero(&g)).unwrap() - gold).abs() < 1e-12);
        let c = LocallyConstantFn::constant(&g, 2, 1.75).unwrap();
        assert!((pressure(&g, &c).unwrap() - gold - 1.75).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_examples() {
        let full = SftModel::full_shift(2);
        let eq = equilibrium(&full, &LocallyConstantFn::zero(&full)).unwrap();
        for i in 0..2 {
            assert!((eq.pi()[i] - 0.5).abs() < 1e-14);
            for j in 0..2 {
                assert!((eq.p()[i][j] - 0.5).abs() < 1e-14);
            }
        }
        let eq = equilibrium(&full, &bernoulli_potential(&full, [1.0 / 3.0, 2.0 / 3.0])).unwrap();
        assert!((eq.pi()[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((eq.p()[1][0] - 1.0 / 3.0).abs() < 1e-14);
        assert!(eq.pressure.abs() < 1e-14);

        let swap = SftModel::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert!(matches!(
            equilibrium(&swap, &LocallyConstantFn::zero(&swap)),
            Err(Error::NotMixing(_))
        ));
        assert!(pressure(&swap, &LocallyConstantFn::zero(&swap)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let g = SftModel::golden_mean();
        let zero = LocallyConstantFn::zero(&g);
        let eq = equilibrium(&g, &zero).unwrap();
        let (h, ints) = entropy_and_integrals(&g, &eq.measure, &[&zero]).unwrap();
        assert!((h - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
        assert_eq!(ints, vec![0.0]);

        let bad = MarkovMeasure {
            pi: vec![0.5, 0.5],
            p: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        };
        // charges the forbidden word 11
        assert!(entropy_and_integrals(&g, &bad, &[]).is_err());
        let not_stationary = MarkovMeasure {
            pi: vec![0.9, 0.1],
            p: vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        };
        assert!(entropy_and_integrals(&g, &not_stationary, &[]).is_err());
    }

    #[test]
    fn gibbs_full_shift_is_exact() {
        let full = SftModel::full_shift(2);
        let zero = LocallyConstantFn::zero(&full);
        let eq = equilibrium(&full, &zero).unwrap();
        let c = gibbs_certify(&full, &eq, &zero, 8, DEFAULT_GIBBS_BUDGET).unwrap();
        assert!((c.k - 1.0).abs() < 1e-12);
        assert!(gibbs_certify(&full, &eq, &zero, 30, 1000).is_err());
    }

    #[test]
    fn gibbs_golden_mean_stabilizes() {
        let g = SftModel::golden_mean();
        let zero = LocallyConstantFn::zero(&g);
        let eq = equilibrium(&g, &zero).unwrap();
        let c = gibbs_certify(&g, &eq, &zero, 10, DEFAULT_GIBBS_BUDGET).unwrap();
        assert!(c.k.is_finite() && c.k > 1.0);
        for n in 3..10 {
            assert!((c.k_by_length[n] - c.k_by_length[2]).abs() < 1e-12);
        }
        for (a, b) in c.k_by_length.iter().zip(&c.predicted_by_length) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
