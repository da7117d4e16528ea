//! Stationary Markov measures on a subshift and their edge-mass coordinates.
//!
//! A shift-invariant one-step Markov measure is the same thing as a nonnegative
//! mass `q_ij` on allowed transitions with total mass one and equal in- and
//! out-flow at every symbol. The optimizers work in these coordinates, where
//! entropy is concave and integrals of depth-2 functions are linear.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sft::{enumerate_words, LocallyConstantFn, SftModel};
use crate::sum::{neumaier, NeumaierSum};

/// Tolerance for `pi p = pi` and row sums when validating a measure.
pub const STATIONARITY_TOL: f64 = 1e-10;

/// Stationary Markov chain `(pi, p)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkovMeasure {
    pub pi: Vec<f64>,
    /// Row-stochastic transition probabilities, row-major.
    pub p: Vec<Vec<f64>>,
}

impl MarkovMeasure {
    /// Validates stochasticity and stationarity.
    pub fn new(pi: Vec<f64>, p: Vec<Vec<f64>>) -> Result<Self> {
        let m = pi.len();
        if p.len() != m || p.iter().any(|r| r.len() != m) {
            return Err(Error::invalid("pi and p dimensions disagree"));
        }
        if pi.iter().chain(p.iter().flatten()).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("measure entries must be finite and nonnegative"));
        }
        if (neumaier(pi.iter().copied()) - 1.0).abs() > STATIONARITY_TOL {
            return Err(Error::invalid("pi does not sum to 1"));
        }
        for (i, row) in p.iter().enumerate() {
            if (neumaier(row.iter().copied()) - 1.0).abs() > STATIONARITY_TOL {
                return Err(Error::invalid(format!("row {i} of p does not sum to 1")));
            }
        }
        for j in 0..m {
            let inflow = neumaier((0..m).map(|i| pi[i] * p[i][j]));
            if (inflow - pi[j]).abs() > STATIONARITY_TOL {
                return Err(Error::invalid(format!(
                    "pi is not stationary at symbol {j}: {inflow} vs {}",
                    pi[j]
                )));
            }
        }
        Ok(MarkovMeasure { pi, p })
    }

    /// Measure with edge masses `q` (row-major `m x m`). Rows of zero mass get
    /// uniform transitions over allowed successors; they carry no measure.
    pub fn from_edge_masses(model: &SftModel, q: &[f64]) -> Result<Self> {
        let m = model.alphabet_size();
        if q.len() != m * m {
            return Err(Error::invalid("edge mass vector has the wrong length"));
        }
        let mut pi = vec![0.0; m];
        let mut p = vec![vec![0.0; m]; m];
        for i in 0..m {
            pi[i] = neumaier((0..m).map(|j| q[i * m + j]));
            if pi[i] > 0.0 {
                for j in 0..m {
                    p[i][j] = q[i * m + j] / pi[i];
                }
            } else {
                let succ: Vec<usize> = model.successors(i).collect();
                for &j in &succ {
                    p[i][j] = 1.0 / succ.len() as f64;
                }
            }
        }
        Self::new(pi, p)
    }

    /// Stationary distribution of a stochastic matrix supported on an
    /// irreducible model, by a direct linear solve.
    pub fn stationary_of(p: Vec<Vec<f64>>) -> Result<Self> {
        let m = p.len();
        // rows: (p^T - I) pi = 0 with the last equation replaced by sum pi = 1
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] = p[j][i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..m {
            a[(m - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(m);
        b[m - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::invalid("stochastic matrix has no unique stationary vector"))?;
        let pi: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
        let s: f64 = neumaier(pi.iter().copied());
        Self::new(pi.iter().map(|v| v / s).collect(), p)
    }

    /// Bernoulli measure on the full shift.
    pub fn bernoulli(weights: &[f64]) -> Result<Self> {
        let p = vec![weights.to_vec(); weights.len()];
        Self::new(weights.to_vec(), p)
    }

    pub fn alphabet_size(&self) -> usize {
        self.pi.len()
    }

    #[inline]
    pub fn edge_mass(&self, i: usize, j: usize) -> f64 {
        self.pi[i] * self.p[i][j]
    }

    pub fn edge_masses(&self) -> Vec<f64> {
        let m = self.alphabet_size();
        (0..m * m).map(|k| self.edge_mass(k / m, k % m)).collect()
    }

    /// Mass `pi(w_0) prod p(w_t, w_{t+1})` of the cylinder `[w]`.
    pub fn cylinder_mass(&self, w: &[usize]) -> f64 {
        let mut mass = self.pi[w[0]];
        for pair in w.windows(2) {
            mass *= self.p[pair[0]][pair[1]];
        }
        mass
    }

    /// Whether every transition with positive probability is allowed.
    pub fn supported_in(&self, model: &SftModel) -> bool {
        let m = model.alphabet_size();
        m == self.alphabet_size()
            && (0..m).all(|i| (0..m).all(|j| self.p[i][j] == 0.0 || model.allows(i, j) || self.pi[i] == 0.0))
    }

    /// Entropy `-sum pi_i p_ij log p_ij` with `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        let m = self.alphabet_size();
        let mut acc = NeumaierSum::new();
        for i in 0..m {
            for j in 0..m {
                let pij = self.p[i][j];
                if pij > 0.0 && self.pi[i] > 0.0 {
                    acc.add(-self.pi[i] * pij * pij.ln());
                }
            }
        }
        acc.value()
    }

    /// Integral of a depth-1 or depth-2 function.
    pub fn integral(&self, model: &SftModel, f: &LocallyConstantFn) -> Result<f64> {
        let table = edge_table(model, f)?;
        Ok(self.integral_edges(&table))
    }

    pub fn integral_edges(&self, table: &[f64]) -> f64 {
        let m = self.alphabet_size();
        let mut acc = NeumaierSum::new();
        for i in 0..m {
            for j in 0..m {
                let w = self.edge_mass(i, j);
                if w > 0.0 {
                    acc.add(w * table[i * m + j]);
                }
            }
        }
        acc.value()
    }

    /// Dirac measure on the fixed point `i i i ...`.
    pub fn fixed_point(model: &SftModel, i: usize) -> Result<Self> {
        if !model.allows(i, i) {
            return Err(Error::invalid(format!("{i} -> {i} is not allowed")));
        }
        let m = model.alphabet_size();
        let mut q = vec![0.0; m * m];
        q[i * m + i] = 1.0;
        Self::from_edge_masses(model, &q)
    }

    /// Masses of all admissible words of length `1..=depth`, depth-major and
    /// lexicographic within a length.
    pub fn cylinder_masses_up_to(&self, model: &SftModel, depth: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for n in 1..=depth {
            out.extend(enumerate_words(model, n).map(|w| self.cylinder_mass(w.symbols())));
        }
        out
    }
}

/// Depth-2 table `f(ij)` over `m x m` (NaN off the transition support); a
/// depth-1 `f` is read through its first coordinate.
pub fn edge_table(model: &SftModel, f: &LocallyConstantFn) -> Result<Vec<f64>> {
    let m = model.alphabet_size();
    if f.alphabet_size() != m {
        return Err(Error::invalid("function and model alphabets differ"));
    }
    match f.depth() {
        1 | 2 => {}
        d => {
            return Err(Error::invalid(format!(
                "function has depth {d}; recode to a depth-2 presentation first"
            )))
        }
    }
    let mut t = vec![f64::NAN; m * m];
    for (i, j) in model.edges() {
        t[i * m + j] = if f.depth() == 1 {
            f.value(&[i])
        } else {
            f.value(&[i, j])
        };
    }
    Ok(t)
}

/// Affine parametrization of invariant edge masses: `q = base + basis * z`.
///
/// `basis` spans the directions that keep total mass and flow balance (and
/// any extra linear constraints) fixed; columns are orthonormal.
#[derive(Clone, Debug)]
pub struct EdgeSlice {
    pub edges: Vec<(usize, usize)>,
    pub basis: DMatrix<f64>,
}

impl EdgeSlice {
    /// Directions on allowed edges preserving `sum q`, every flow balance and
    /// `sum q_e c_e` for each extra row `c`.
    pub fn new(model: &SftModel, extra: &[Vec<f64>]) -> Self {
        let edges = model.edges();
        let m = model.alphabet_size();
        let e = edges.len();
        let rows = 1 + m + extra.len();
        let mut c = DMatrix::<f64>::zeros(rows.max(e), e);
        for (k, &(i, j)) in edges.iter().enumerate() {
            c[(0, k)] = 1.0;
            c[(1 + i, k)] += 1.0;
            c[(1 + j, k)] -= 1.0;
            for (r, row) in extra.iter().enumerate() {
                c[(1 + m + r, k)] = row[i * m + j];
            }
        }
        // null space from the right singular vectors of the (padded) constraints
        let svd = c.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let smax = svd.singular_values.iter().fold(0.0f64, |a, s| a.max(*s));
        let tol = 1e-10 * smax.max(1.0);
        let mut cols = Vec::new();
        for (k, s) in svd.singular_values.iter().enumerate() {
            if *s <= tol {
                cols.push(v_t.row(k).transpose());
            }
        }
        // singular values beyond the row count are implicitly zero
        let basis = if cols.is_empty() {
            DMatrix::<f64>::zeros(e, 0)
        } else {
            DMatrix::from_columns(&cols)
        };
        EdgeSlice { edges, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Dense `m x m` edge masses from coordinates on `edges`.
    pub fn to_dense(&self, m: usize, q_edges: &DVector<f64>) -> Vec<f64> {
        let mut q = vec![0.0; m * m];
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            q[i * m + j] = q_edges[k];
        }
        q
    }

    pub fn from_dense(&self, m: usize, q: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|&(i, j)| q[i * m + j]))
    }
}

/// Stationary edge masses of a random full-support chain on `model`.
pub fn random_interior_masses<R: Rng>(model: &SftModel, rng: &mut R) -> Result<Vec<f64>> {
    let m = model.alphabet_size();
    let mut p = vec![vec![0.0; m]; m];
    for (i, row) in p.iter_mut().enumerate() {
        let succ: Vec<usize> = model.successors(i).collect();
        let w: Vec<f64> = succ.iter().map(|_| rng.random_range(0.2..1.0)).collect();
        let s: f64 = w.iter().sum();
        for (&j, wj) in succ.iter().zip(w) {
            row[j] = wj / s;
        }
    }
    Ok(MarkovMeasure::stationary_of(p)?.edge_masses())
}

/// Uniform edge masses along a closed walk given by its symbol sequence.
pub fn cycle_masses(model: &SftModel, cycle: &[usize]) -> Vec<f64> {
    let m = model.alphabet_size();
    let mut q = vec![0.0; m * m];
    let n = cycle.len();
    for t in 0..n {
        q[cycle[t] * m + cycle[(t + 1) % n]] += 1.0 / n as f64;
    }
    q
}

/// Cycle maximizing the mean of `weights` over closed walks (Karp's
/// algorithm), with its mean. `weights` is an `m x m` edge table.
pub fn max_mean_cycle(model: &SftModel, weights: &[f64]) -> (Vec<usize>, f64) {
    let m = model.alphabet_size();
    let neg = f64::NEG_INFINITY;
    // best[k][v]: maximum weight of a walk with k edges ending at v
    let mut best = vec![vec![neg; m]; m + 1];
    let mut pred = vec![vec![usize::MAX; m]; m + 1];
    best[0] = vec![0.0; m];
    for k in 1..=m {
        for (u, v) in model.edges() {
            if best[k - 1][u] == neg {
                continue;
            }
            let cand = best[k - 1][u] + weights[u * m + v];
            if cand > best[k][v] {
                best[k][v] = cand;
                pred[k][v] = u;
            }
        }
    }
    let mut lambda = neg;
    let mut arg = 0;
    for v in 0..m {
        if best[m][v] == neg {
            continue;
        }
        let mut worst = f64::INFINITY;
        for k in 0..m {
            if best[k][v] != neg {
                worst = worst.min((best[m][v] - best[k][v]) / (m - k) as f64);
            }
        }
        if worst > lambda {
            lambda = worst;
            arg = v;
        }
    }
    // the optimal walk into `arg` contains a cycle of optimal mean
    let mut walk = vec![arg];
    let mut v = arg;
    for k in (1..=m).rev() {
        v = pred[k][v];
        walk.push(v);
    }
    walk.reverse();
    let mut best_cycle = vec![walk[0]];
    let mut best_mean = neg;
    for start in 0..walk.len() {
        for end in start + 1..walk.len() {
            if walk[end] == walk[start] {
                let cyc = &walk[start..end];
                let mean = (0..cyc.len())
                    .map(|t| weights[cyc[t] * m + cyc[(t + 1) % cyc.len()]])
                    .sum::<f64>()
                    / cyc.len() as f64;
                if mean > best_mean {
                    best_mean = mean;
                    best_cycle = cyc.to_vec();
                }
                break;
            }
        }
    }
    (best_cycle, best_mean)
}

/// `[min, max]` of `int f` over shift-invariant measures, attained on cycles.
pub fn invariant_integral_range(model: &SftModel, table: &[f64]) -> ((Vec<usize>, f64), (Vec<usize>, f64)) {
    let neg: Vec<f64> = table.iter().map(|v| -v).collect();
    let (lo_cycle, lo) = max_mean_cycle(model, &neg);
    let hi = max_mean_cycle(model, table);
    ((lo_cycle, -lo), hi)
}
