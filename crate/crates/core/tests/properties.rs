use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermopress::level2::MeasureMetric;
use thermopress::markov::{random_interior_masses, MarkovMeasure};
use thermopress::oracle::{
    deviation_mass, deviation_mass_enumerated, DeviationProblem, EnumerationOptions, IntervalSet,
};
use thermopress::sft::{enumerate_words, BlockRecoding, LocallyConstantFn, SftModel};
use thermopress::transfer::{entropy_and_integrals, equilibrium, pressure};

fn random_primitive(rng: &mut ChaCha8Rng, max_m: usize) -> SftModel {
    loop {
        let m = rng.random_range(2..=max_m);
        let rows: Vec<Vec<u8>> = (0..m)
            .map(|_| (0..m).map(|_| u8::from(rng.random_bool(0.65))).collect())
            .collect();
        if let Ok(model) = SftModel::new(rows) {
            if model.is_primitive() {
                return model;
            }
        }
    }
}

fn random_fn(rng: &mut ChaCha8Rng, model: &SftModel, depth: usize) -> LocallyConstantFn {
    LocallyConstantFn::from_fn(model, depth, |_| rng.random_range(-2.0..2.0)).unwrap()
}

fn setup(seed: u64, max_m: usize) -> (ChaCha8Rng, SftModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = random_primitive(&mut rng, max_m);
    (rng, model)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_counts_match_enumeration(seed in any::<u64>(), n in 1usize..7) {
        let (_, model) = setup(seed, 4);
        let words: Vec<_> = enumerate_words(&model, n).collect();
        prop_assert_eq!(words.len() as u128, model.word_count(n));
        prop_assert!(words.iter().all(|w| model.is_admissible(w.symbols())));
        prop_assert!(words.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn recoding_preserves_pressure(seed in any::<u64>(), depth in 1usize..4) {
        let (mut rng, model) = setup(seed, 3);
        let phi = random_fn(&mut rng, &model, depth);
        let rec = BlockRecoding::new(&model, depth.max(2) - 1).unwrap();
        let p_rec = pressure(rec.target(), &rec.recode_fn(&phi).unwrap()).unwrap();
        let p = if depth <= 2 { pressure(&model, &phi).unwrap() } else { p_rec };
        prop_assert!((p_rec - p).abs() < 1e-10);
        // pressure of a depth-1 function is unchanged by a longer block presentation
        let phi1 = random_fn(&mut rng, &model, 1);
        let rec3 = BlockRecoding::new(&model, 2).unwrap();
        let a = pressure(&model, &phi1).unwrap();
        let b = pressure(rec3.target(), &rec3.recode_fn(&phi1).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
    }

    #[test]
    fn pressure_axioms(seed in any::<u64>(), c in -3.0f64..3.0) {
        let (mut rng, model) = setup(seed, 4);
        let phi = random_fn(&mut rng, &model, 2);
        let other = random_fn(&mut rng, &model, 2);
        let p = pressure(&model, &phi).unwrap();
        let shifted = LocallyConstantFn::from_fn(&model, 2, |w| phi.value(w) + c).unwrap();
        prop_assert!((pressure(&model, &shifted).unwrap() - (p + c)).abs() < 1e-10);

        let bigger = LocallyConstantFn::from_fn(&model, 2, |w| phi.value(w) + other.value(w).abs()).unwrap();
        prop_assert!(pressure(&model, &bigger).unwrap() >= p - 1e-12);

        let gap = LocallyConstantFn::from_fn(&model, 2, |w| (phi.value(w) - other.value(w)).abs())
            .unwrap()
            .sup_norm();
        let q = pressure(&model, &other).unwrap();
        prop_assert!((p - q).abs() <= gap + 1e-10);
    }

    #[test]
    fn variational_identity(seed in any::<u64>()) {
        let (mut rng, model) = setup(seed, 5);
        let phi = random_fn(&mut rng, &model, 2);
        let eq = equilibrium(&model, &phi).unwrap();
        let (h, ints) = entropy_and_integrals(&model, &eq.measure, &[&phi]).unwrap();
        prop_assert!((h + ints[0] - eq.pressure).abs() < 1e-9);
        // any other invariant Markov measure does no better
        let q = random_interior_masses(&model, &mut rng).unwrap();
        let eta = MarkovMeasure::from_edge_masses(&model, &q).unwrap();
        let (h2, ints2) = entropy_and_integrals(&model, &eta, &[&phi]).unwrap();
        prop_assert!(h2 + ints2[0] <= eq.pressure + 1e-9);
    }

    #[test]
    fn cylinder_masses_sum_to_one(seed in any::<u64>(), n in 1usize..9) {
        let (mut rng, model) = setup(seed, 3);
        let eq = equilibrium(&model, &random_fn(&mut rng, &model, 2)).unwrap();
        let total: f64 = enumerate_words(&model, n).map(|w| eq.measure.cylinder_mass(w.symbols())).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metric_axioms(seed in any::<u64>()) {
        let (mut rng, model) = setup(seed, 3);
        let metric = MeasureMetric::new(&model, 4).unwrap();
        let mut draw = || MarkovMeasure::from_edge_masses(&model, &random_interior_masses(&model, &mut rng).unwrap()).unwrap();
        let (a, b, c) = (draw(), draw(), draw());
        let d = |x: &MarkovMeasure, y: &MarkovMeasure| metric.distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-15);
        prop_assert!(d(&a, &b) <= 1.0);
    }

    #[test]
    fn deviation_masses(seed in any::<u64>(), n in 2usize..8, a in -1.0f64..1.0, w in 0.0f64..1.0) {
        let (mut rng, model) = setup(seed, 3);
        let phi = random_fn(&mut rng, &model, 2);
        let psi = random_fn(&mut rng, &model, 2);
        let problem = DeviationProblem::equilibrium(&model, &phi, &psi).unwrap();
        let opts = EnumerationOptions::default();
        let inner = IntervalSet::closed(a, a + w).unwrap();
        let outer = IntervalSet::closed(a - 0.5, a + w + 0.5).unwrap();
        let m_inner = deviation_mass(&problem, &inner, n, opts).unwrap();
        let m_outer = deviation_mass(&problem, &outer, n, opts).unwrap();
        prop_assert!(m_inner <= m_outer + 1e-15);
        let brute = deviation_mass_enumerated(&problem, &inner, n, 1 << 20).unwrap();
        prop_assert!((m_inner - brute).abs() < 1e-12, "{} vs {}", m_inner, brute);

        let mean = problem.mean();
        let c = w.max(1e-3);
        let outside = deviation_mass(&problem, &IntervalSet::symmetric_complement(mean, c).unwrap(), n, opts).unwrap();
        let middle = deviation_mass(&problem, &IntervalSet::from_parts(vec![(mean - c, mean + c)]).unwrap(), n, opts).unwrap();
        let all = deviation_mass(&problem, &IntervalSet::real_line(), n, opts).unwrap();
        prop_assert!((all - 1.0).abs() < 1e-12);
        // the two sets share only the boundary points
        prop_assert!(outside + middle >= 1.0 - 1e-12);
    }
}
