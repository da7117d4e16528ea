//! Pressure of level sets and deviation sets of Birkhoff averages.
//!
//! With `psi` centered at its equilibrium mean, the set of points whose
//! averages stay at distance `>= c` from the mean infinitely often has
//! pressure `P(c) = P_top - min{I(-c), I(c)}`, attained on the branch `c*`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ratefn::{Centering, RateFunction};
use crate::sft::{LocallyConstantFn, SftModel};

/// `|I(c) - I(-c)|` below this counts as a tie; ties report `c* = -c`.
pub const TIE_TOL: f64 = 1e-10;
/// Allowed positive second difference in the concavity check.
pub const CONCAVITY_TOL: f64 = 1e-8;

/// Where `+-c` sit relative to the range of the rate function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainStatus {
    /// Both `+-c` inside the approximated domain.
    Inside,
    /// One side is beyond every invariant measure, the other is inside.
    OneSided,
    /// Both sides beyond every invariant measure: the set is empty.
    Empty,
    /// A side falls between the approximated domain and the Birkhoff range.
    Unresolved,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct DeviationPoint {
    pub c: f64,
    /// `P_top - min{I(-c), I(c)}`, absent unless decidable.
    pub value: Option<f64>,
    pub c_star: f64,
    pub tie: bool,
    pub status: DomainStatus,
    pub rate_minus: Option<f64>,
    pub rate_plus: Option<f64>,
    /// Legendre variable at `c*`.
    pub t_star: Option<f64>,
}

impl DeviationPoint {
    pub fn in_domain(&self) -> bool {
        self.status == DomainStatus::Inside
    }
}

/// Deviation pressure at one radius, with the branch rule applied.
pub fn deviation_point(rf: &RateFunction, c: f64) -> Result<DeviationPoint> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("radius c = {c} must be finite and nonnegative")));
    }
    let p_top = rf.p_top();
    let mean = rf.mean();
    if c == 0.0 {
        return Ok(DeviationPoint {
            c,
            value: Some(p_top),
            c_star: 0.0,
            tie: false,
            status: DomainStatus::Inside,
            rate_minus: Some(0.0),
            rate_plus: Some(0.0),
            t_star: Some(0.0),
        });
    }
    let minus = rf.rate_extended(mean - c)?;
    let plus = rf.rate_extended(mean + c)?;
    let rate_minus = minus.map(|v| v.0);
    let rate_plus = plus.map(|v| v.0);
    let (status, pick) = match (minus, plus) {
        (Some((im, tm)), Some((ip, tp))) => {
            let finite = (im.is_finite(), ip.is_finite());
            let status = match finite {
                (true, true) => DomainStatus::Inside,
                (false, false) => DomainStatus::Empty,
                _ => DomainStatus::OneSided,
            };
            let tie = finite == (true, true) && (ip - im).abs() <= TIE_TOL;
            let pick = if status == DomainStatus::Empty {
                None
            } else if !tie && ip < im {
                Some((ip, tp, c, false))
            } else {
                Some((im, tm, -c, tie))
            };
            (status, pick)
        }
        _ => (DomainStatus::Unresolved, None),
    };
    Ok(match pick {
        Some((rate, t, c_star, tie)) => DeviationPoint {
            c,
            value: Some(p_top - rate),
            c_star,
            tie,
            status,
            rate_minus,
            rate_plus,
            t_star: Some(t),
        },
        None => DeviationPoint {
            c,
            value: None,
            c_star: -c,
            tie: false,
            status,
            rate_minus,
            rate_plus,
            t_star: None,
        },
    })
}

/// `(P_top - min{I(-c), I(c)}, c*)` in centered coordinates.
pub fn deviation_pressure(
    model: &SftModel,
    phi: &LocallyConstantFn,
    psi: &LocallyConstantFn,
    c: f64,
) -> Result<(f64, f64)> {
    let rf = RateFunction::build(model, phi, psi, Centering::Centered)?;
    let point = deviation_point(&rf, c)?;
    match point.value {
        Some(v) if point.status == DomainStatus::Inside => Ok((v, point.c_star)),
        _ => {
            let (lo, hi) = rf.domain();
            Err(Error::Domain {
                value: c,
                lo: -hi.min(-lo),
                hi: hi.min(-lo),
            })
        }
    }
}

/// `P_top - I(alpha)` for a centered target average `alpha`.
pub fn levelset_pressure(
    model: &SftModel,
    phi: &LocallyConstantFn,
    psi: &LocallyConstantFn,
    alpha: f64,
) -> Result<f64> {
    let rf = RateFunction::build(model, phi, psi, Centering::Centered)?;
    levelset_pressure_of(&rf, alpha)
}

pub fn levelset_pressure_of(rf: &RateFunction, alpha: f64) -> Result<f64> {
    Ok(rf.p_top() - rf.rate(rf.mean() + alpha)?)
}

/// Deviation pressure sampled on an ascending grid of radii.
#[derive(Clone, Debug, Serialize)]
pub struct PressureSpectrum {
    pub p_top: f64,
    pub points: Vec<DeviationPoint>,
    /// `[0, c_max]` on which both `+-c` lie in the approximated domain.
    pub validity: (f64, f64),
    /// Largest second difference normalized to the grid spacing, over
    /// consecutive `Inside` triples.
    pub max_second_difference: f64,
    /// Largest jump between one-sided slopes where the branch switches.
    pub max_branch_kink: f64,
}

impl PressureSpectrum {
    fn inside_runs(&self) -> Vec<&[DeviationPoint]> {
        self.points
            .split(|p| !p.in_domain())
            .filter(|r| !r.is_empty())
            .collect()
    }

    /// Property diagnostics: discrete concavity and strict decrease.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for run in self.inside_runs() {
            for w in run.windows(2) {
                let (a, b) = (w[0].value.unwrap(), w[1].value.unwrap());
                if !(b < a) {
                    out.push(format!(
                        "not strictly decreasing between c = {} ({a}) and c = {} ({b})",
                        w[0].c, w[1].c
                    ));
                }
            }
            for w in run.windows(3) {
                let d2 = second_difference(&w[0], &w[1], &w[2]);
                if d2 > CONCAVITY_TOL {
                    out.push(format!(
                        "second difference {d2:e} at c = {} exceeds {CONCAVITY_TOL:e}",
                        w[1].c
                    ));
                }
            }
        }
        out
    }

    /// Fails with [`Error::PropertyViolation`] listing every violation.
    pub fn check(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::PropertyViolation(v.join("; ")))
        }
    }
}

// second difference on a possibly uneven grid, scaled to the right spacing
fn second_difference(a: &DeviationPoint, b: &DeviationPoint, c: &DeviationPoint) -> f64 {
    let (pa, pb, pc) = (a.value.unwrap(), b.value.unwrap(), c.value.unwrap());
    let h0 = b.c - a.c;
    let h1 = c.c - b.c;
    pc - pb - (h1 / h0) * (pb - pa)
}

pub fn spectrum_scan_of(rf: &RateFunction, grid: &[f64]) -> Result<PressureSpectrum> {
    if grid.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    if grid[0] != 0.0 {
        return Err(Error::invalid("grid must start at 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("grid must be finite and strictly ascending"));
    }
    let points = grid
        .iter()
        .map(|&c| deviation_point(rf, c))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = rf.domain();
    let mean = rf.mean();
    let c_max = (mean - lo).min(hi - mean).max(0.0);

    let mut max_second_difference = f64::NEG_INFINITY;
    let mut max_branch_kink = 0.0f64;
    for w in points.windows(3) {
        if w.iter().all(|p| p.in_domain()) {
            max_second_difference = max_second_difference.max(second_difference(&w[0], &w[1], &w[2]));
        }
    }
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.in_domain() && b.in_domain() && a.c > 0.0 && (a.c_star > 0.0) != (b.c_star > 0.0) && !a.tie && !b.tie {
            // d/dc I(c) = t(c) and d/dc I(-c) = -t(-c)
            let slope = |p: &DeviationPoint| {
                let t = p.t_star.unwrap_or(0.0);
                if p.c_star > 0.0 {
                    t
                } else {
                    -t
                }
            };
            max_branch_kink = max_branch_kink.max((slope(a) - slope(b)).abs());
        }
    }
    if max_second_difference == f64::NEG_INFINITY {
        max_second_difference = 0.0;
    }
    Ok(PressureSpectrum {
        p_top: rf.p_top(),
        points,
        validity: (0.0, c_max),
        max_second_difference,
        max_branch_kink,
    })
}

/// Evaluates the deviation pressure on `grid` (ascending, starting at 0).
pub fn spectrum_scan(
    model: &SftModel,
    phi: &LocallyConstantFn,
    psi: &LocallyConstantFn,
    grid: &[f64],
) -> Result<PressureSpectrum> {
    let rf = RateFunction::build(model, phi, psi, Centering::Centered)?;
    spectrum_scan_of(&rf, grid)
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !start.is_finite() || !stop.is_finite() || (n > 1 && stop <= start) {
        return Err(Error::invalid(format!("bad grid {start}:{stop}:{n}")));
    }
    if n == 1 {
        return Ok(vec![start]);
    }
    let h = (stop - start) / (n - 1) as f64;
    Ok((0..n)
        .map(|k| if k == n - 1 { stop } else { start + h * k as f64 })
        .collect())
}

/// `(P_top, P(c), P_top - P(c))`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThompsonGap {
    pub p_top: f64,
    pub deviation_pressure: f64,
    pub gap: f64,
    pub c_star: f64,
}

pub fn thompson_gap(model: &SftModel, phi: &LocallyConstantFn, psi: &LocallyConstantFn, c: f64) -> Result<ThompsonGap> {
    if !(c > 0.0) {
        return Err(Error::invalid("the gap needs c > 0"));
    }
    let rf = RateFunction::build(model, phi, psi, Centering::Centered)?;
    let point = deviation_point(&rf, c)?;
    let value = point.value.filter(|_| point.in_domain()).ok_or_else(|| {
        let (lo, hi) = rf.domain();
        Error::Domain { value: c, lo, hi }
    })?;
    Ok(ThompsonGap {
        p_top: rf.p_top(),
        deviation_pressure: value,
        gap: rf.p_top() - value,
        c_star: point.c_star,
    })
}

/// Seed of the noise used by [`continuity_probe`].
pub const CONTINUITY_SEED: u64 = 0xc0_71_7e;

/// Change of the deviation pressure under a sup-norm `eps` perturbation.
#[derive(Clone, Debug, Serialize)]
pub struct ContinuityReport {
    pub eps: f64,
    pub grid: Vec<f64>,
    pub changes: Vec<f64>,
    pub max_change: f64,
}

// fixed noise shape with sup-norm exactly 1
fn noise_shape(model: &SftModel, f: &LocallyConstantFn, rng: &mut ChaCha8Rng) -> Result<LocallyConstantFn> {
    let raw = LocallyConstantFn::from_fn(model, f.depth(), |_| rng.random_range(-1.0..1.0))?;
    let s = raw.sup_norm();
    LocallyConstantFn::from_fn(model, f.depth(), |w| raw.value(w) / s)
}

/// Perturbs `phi` and `psi` by `eps` times a fixed noise of sup-norm 1 and
/// reports the change of the deviation pressure over `grid`.
///
/// Points outside the domain of either problem are skipped.
pub fn continuity_probe(
    model: &SftModel,
    phi: &LocallyConstantFn,
    psi: &LocallyConstantFn,
    eps: f64,
    grid: &[f64],
) -> Result<ContinuityReport> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(CONTINUITY_SEED);
    let dphi = noise_shape(model, phi, &mut rng)?;
    let dpsi = noise_shape(model, psi, &mut rng)?;
    let phi2 = phi.affine_combination(model, 1.0, &dphi, eps)?;
    let psi2 = psi.affine_combination(model, 1.0, &dpsi, eps)?;
    let base = spectrum_scan(model, phi, psi, grid)?;
    let moved = spectrum_scan(model, &phi2, &psi2, grid)?;
    let changes: Vec<f64> = base
        .points
        .iter()
        .zip(&moved.points)
        .map(|(a, b)| match (a.in_domain(), b.in_domain()) {
            (true, true) => (a.value.unwrap() - b.value.unwrap()).abs(),
            _ => 0.0,
        })
        .collect();
    let max_change = changes.iter().copied().fold(0.0, f64::max);
    Ok(ContinuityReport {
        eps,
        grid: grid.to_vec(),
        changes,
        max_change,
    })
}

/// Probes at each `eps` (descending) and checks that the changes decay
/// strictly.
pub fn continuity_cauchy(
    model: &SftModel,
    phi: &LocallyConstantFn,
    psi: &LocallyConstantFn,
    eps: &[f64],
    grid: &[f64],
) -> Result<(Vec<ContinuityReport>, bool)> {
    let reports = eps
        .iter()
        .map(|&e| continuity_probe(model, phi, psi, e, grid))
        .collect::<Result<Vec<_>>>()?;
    let decaying = reports.windows(2).all(|w| w[1].max_change < w[0].max_change);
    Ok((reports, decaying))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    fn binomial() -> (SftModel, LocallyConstantFn, LocallyConstantFn) {
        let full = SftModel::full_shift(2);
        let psi = LocallyConstantFn::from_fn(&full, 1, |w| if w[0] == 0 { 0.5 } else { -0.5 }).unwrap();
        (full.clone(), LocallyConstantFn::zero(&full), psi)
    }

    fn bernoulli_third() -> (SftModel, LocallyConstantFn, LocallyConstantFn) {
        let full = SftModel::full_shift(2);
        let phi = LocallyConstantFn::from_fn(&full, 1, |w| {
            if w[0] == 0 {
                (1.0f64 / 3.0).ln()
            } else {
                (2.0f64 / 3.0).ln()
            }
        })
        .unwrap();
        let chi0 = LocallyConstantFn::cylinder_indicator(&full, &[0]).unwrap();
        (full, phi, chi0)
    }

    #[test]
    fn binomial_quarter() {
        let (full, zero, psi) = binomial();
        let (v, cs) = deviation_pressure(&full, &zero, &psi, 0.25).unwrap();
        assert!((v - h(0.75)).abs() < 1e-10);
        assert!((v - 0.5623351).abs() < 1e-7);
        assert_eq!(cs, -0.25);
        let (v0, c0) = deviation_pressure(&full, &zero, &psi, 0.0).unwrap();
        assert_eq!((v0, c0), (2f64.ln(), 0.0));
        assert!((levelset_pressure(&full, &zero, &psi, 0.25).unwrap() - h(0.75)).abs() < 1e-10);
        assert_eq!(levelset_pressure(&full, &zero, &psi, 0.0).unwrap(), 2f64.ln());
    }

    #[test]
    fn asymmetric_branch() {
        let (full, phi, chi0) = bernoulli_third();
        let (v, cs) = deviation_pressure(&full, &phi, &chi0, 0.2).unwrap();
        // Bernoulli(1/3): I(s) = KL(s || 1/3) in raw coordinates
        let kl = |s: f64| s * (3.0 * s).ln() + (1.0 - s) * (1.5 * (1.0 - s)).ln();
        let expect = -kl(1.0 / 3.0 + 0.2).min(kl(1.0 / 3.0 - 0.2));
        assert!((v - expect).abs() < 1e-9, "{v} {expect}");
        assert_eq!(cs, 0.2);
    }

    #[test]
    fn scan_binomial() {
        let (full, zero, psi) = binomial();
        let grid = linear_grid(0.0, 0.49, 101).unwrap();
        let sp = spectrum_scan(&full, &zero, &psi, &grid).unwrap();
        sp.check().unwrap();
        assert_eq!(sp.points[0].value, Some(2f64.ln()));
        let last = sp.points[100].value.unwrap();
        assert!((last - h(0.99)).abs() < 1e-9, "{last}");
        assert!((last - 0.0560015).abs() < 1e-7);
        assert!(sp.points[1..].iter().all(|p| p.tie && p.c_star == -p.c));

        let single = spectrum_scan(&full, &zero, &psi, &[0.0]).unwrap();
        assert_eq!(single.points.len(), 1);
        assert_eq!(single.points[0].value, Some(2f64.ln()));
    }

    #[test]
    fn scan_asymmetric_is_smooth() {
        let (full, phi, chi0) = bernoulli_third();
        let grid = linear_grid(0.0, 0.3, 61).unwrap();
        let sp = spectrum_scan(&full, &phi, &chi0, &grid).unwrap();
        sp.check().unwrap();
        assert!(sp.max_branch_kink < 1e-9);
    }

    #[test]
    fn outside_the_range() {
        let (full, zero, psi) = binomial();
        let rf = RateFunction::build(&full, &zero, &psi, Centering::Centered).unwrap();
        let p = deviation_point(&rf, 0.7).unwrap();
        assert_eq!(p.status, DomainStatus::Empty);
        assert!(p.value.is_none());
        assert!(deviation_pressure(&full, &zero, &psi, 0.7).is_err());
    }

    #[test]
    fn one_sided_range() {
        // mean 1/3 of chi0: -c leaves the range before +c does
        let (full, phi, chi0) = bernoulli_third();
        let rf = RateFunction::build(&full, &phi, &chi0, Centering::Centered).unwrap();
        let p = deviation_point(&rf, 0.5).unwrap();
        assert_eq!(p.status, DomainStatus::OneSided);
        assert_eq!(p.c_star, 0.5);
        assert!(p.value.unwrap() < rf.p_top());
    }

    #[test]
    fn gap_examples() {
        let (full, zero, psi) = binomial();
        let g = thompson_gap(&full, &zero, &psi, 0.25).unwrap();
        assert!((g.gap - (2f64.ln() - h(0.75))).abs() < 1e-10);
        let small = thompson_gap(&full, &zero, &psi, 1e-4).unwrap();
        assert!(small.gap > 0.0 && small.gap < 1e-7);

        let gm = SftModel::golden_mean();
        let chi1 = LocallyConstantFn::cylinder_indicator(&gm, &[1]).unwrap();
        let zero = LocallyConstantFn::zero(&gm);
        let rf = RateFunction::build(&gm, &zero, &chi1, Centering::Centered).unwrap();
        let expect = rf.rate(rf.mean() + 0.1).unwrap().min(rf.rate(rf.mean() - 0.1).unwrap());
        let g = thompson_gap(&gm, &zero, &chi1, 0.1).unwrap();
        assert!(g.gap > 0.0 && (g.gap - expect).abs() < 1e-14);
    }

    #[test]
    fn continuity() {
        let (full, zero, psi) = binomial();
        let grid = linear_grid(0.0, 0.4, 41).unwrap();
        assert_eq!(
            continuity_probe(&full, &zero, &psi, 0.0, &grid).unwrap().max_change,
            0.0
        );
        let r = continuity_probe(&full, &zero, &psi, 1e-3, &grid).unwrap();
        assert!(r.max_change < 5e-3 && r.max_change > 0.0, "{}", r.max_change);
        let (reports, decaying) = continuity_cauchy(&full, &zero, &psi, &[1e-2, 5e-3, 2.5e-3], &grid).unwrap();
        assert!(
            decaying,
            "{:?}",
            reports.iter().map(|r| r.max_change).collect::<Vec<_>>()
        );
    }
}
