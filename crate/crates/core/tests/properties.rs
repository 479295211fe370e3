mod common;

use common::*;
use proptest::prelude::*;
use zerobias::admissible::AdmissibleFunction;
use zerobias::bounds::{concentration_w_constants, reverse_taylor_remainder};
use zerobias::cli::{ExperimentConfig, FunctionSpec, OracleChoice};
use zerobias::distributions::{derive_seed, iid_family, rng_from_seed, CouplingMode, CouplingSampler, MeanZeroDistribution};
use zerobias::expansion::compositions_up_to;
use zerobias::numerics::Quadrature;
use zerobias::oracle::{exact_law, DEFAULT_CAP};

/// Mean-zero atoms built from raw locations and positive weights.
fn centred(raw: Vec<(f64, f64)>) -> Atoms {
    let total: f64 = raw.iter().map(|a| a.1).sum();
    let mut atoms: Atoms = raw.into_iter().map(|(x, w)| (x, w / total)).collect();
    let mean: f64 = atoms.iter().map(|(x, w)| x * w).sum();
    for a in &mut atoms {
        a.0 -= mean;
    }
    atoms
}

fn discrete_law() -> impl Strategy<Value = Atoms> {
    prop::collection::vec((-2.0..2.0f64, 0.05..1.0f64), 2..6)
        .prop_map(centred)
        .prop_filter("non-degenerate", |a| {
            let var: f64 = a.iter().map(|(x, w)| w * x * x).sum();
            var > 1e-3
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_bias_moments_follow_raw_moments(atoms in discrete_law()) {
        let Ok(dist) = MeanZeroDistribution::finite_discrete(&atoms) else { return Ok(()) };
        let star = dist.zero_bias().unwrap();
        let var = expect(&atoms, |x| x * x);
        for k in 0..=4 {
            let expected = expect(&atoms, |x| x.powi(k as i32 + 2)) / (var * (k + 1) as f64);
            let scale = 1.0 + expected.abs();
            prop_assert!((star.moment(k) - expected).abs() <= 1e-10 * scale);
            prop_assert!((star.moment_by_density(k).unwrap() - expected).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn zero_bias_identity_on_cubics(atoms in discrete_law(), c in prop::collection::vec(-2.0..2.0f64, 4)) {
        let Ok(dist) = MeanZeroDistribution::finite_discrete(&atoms) else { return Ok(()) };
        let star = dist.zero_bias().unwrap();
        let lhs = expect(&atoms, |x| x * poly_eval(&c, x));
        let df = poly_derivative(&c, 1);
        let rhs = dist.variance() * star.law().expect(|x| poly_eval(&df, x), &Quadrature::default(), &[]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn reverse_taylor_vanishes_on_low_degree(
        x in discrete_law(),
        y in discrete_law(),
        order in 0usize..=4,
        c in prop::collection::vec(-1.0..1.0f64, 1..6),
    ) {
        let (Ok(xd), Ok(yd)) = (MeanZeroDistribution::finite_discrete(&x), MeanZeroDistribution::finite_discrete(&y))
        else { return Ok(()) };
        let degree = c.len() - 1;
        let f = AdmissibleFunction::polynomial_with_order(&c, order.max(degree), 1.0, 0.0).unwrap();
        let r = reverse_taylor_remainder(&f, xd.law(), yd.law(), order).unwrap();
        let scale = 1.0 + r.lhs.abs() + r.expansion.abs();
        prop_assert!(r.residual.abs() <= 1e-11 * scale);
        if degree <= order {
            prop_assert!(r.epsilon.abs() <= 1e-11 * scale, "ε = {}", r.epsilon);
        }
    }

    #[test]
    fn exact_law_has_unit_mass(atoms in discrete_law(), n in 1usize..8) {
        let Ok(dist) = MeanZeroDistribution::finite_discrete(&atoms) else { return Ok(()) };
        let family = iid_family(&dist, n).unwrap();
        let law = exact_law(&family, DEFAULT_CAP).unwrap();
        prop_assert!((law.total_mass() - 1.0).abs() <= 1e-12);
        prop_assert!(law.moment(1).abs() <= 1e-12);
        prop_assert!((law.moment(2) - dist.variance()).abs() <= 1e-12);
    }

    #[test]
    fn concentration_bound_dominates(p in 0.05..0.95f64, n in 2usize..80, a in -2.0..2.0f64, len in 0.0..2.0f64, alpha in 0.1..=1.0f64) {
        let family = iid_family(&MeanZeroDistribution::two_point(p).unwrap(), n).unwrap();
        let bound = concentration_w_constants(&family, alpha).unwrap().bound(a, a + len).unwrap();
        let exact = prob_between(&binomial_sum(n, n, p), a, a + len);
        prop_assert!(exact <= bound * (1.0 + 1e-12), "{exact} > {bound}");
    }

    #[test]
    fn derived_seeds_are_stable(root: u64, index: u64, label in "[a-z-]{1,12}") {
        let s = derive_seed(root, &label, index);
        prop_assert_eq!(s, derive_seed(root, &label, index));
        prop_assert_ne!(s, derive_seed(root, &format!("{label}x"), index));
        prop_assert_ne!(s, derive_seed(root, &label, index.wrapping_add(1)));
    }

    #[test]
    fn config_round_trips(
        seed: u64,
        order in 0usize..5,
        grid in prop::collection::vec(1usize..4096, 1..6),
        k in -1.0..1.0f64,
        which in 0usize..3,
        mc in any::<bool>(),
    ) {
        let cfg = ExperimentConfig {
            seed,
            order,
            n_grid: grid,
            function: match which {
                0 => FunctionSpec::Indicator { k },
                1 => FunctionSpec::Call { k },
                _ => FunctionSpec::Polynomial { coeffs: vec![k, 1.0, -k], order: Some(order + 2) },
            },
            oracle: if mc { OracleChoice::MonteCarlo } else { OracleChoice::Exact },
            ..ExperimentConfig::default()
        };
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The coupled index is drawn with probability σ_i²/σ².
    #[test]
    fn coupling_index_follows_variance(scales in prop::collection::vec(0.2..3.0f64, 2..5), seed: u64) {
        let base = MeanZeroDistribution::two_point(0.3).unwrap();
        let family: Vec<_> = scales.iter().map(|&c| base.scaled(c).unwrap()).collect();
        let sampler = CouplingSampler::new(&family, CouplingMode::Independent).unwrap();
        let mut rng = rng_from_seed(seed);
        let draws = 20_000;
        let mut counts = vec![0usize; family.len()];
        for _ in 0..draws {
            counts[sampler.draw(&mut rng).index] += 1;
        }
        let total: f64 = scales.iter().map(|c| c * c).sum();
        for (i, &c) in scales.iter().enumerate() {
            let pi = c * c / total;
            let freq = counts[i] as f64 / draws as f64;
            let se = (pi * (1.0 - pi) / draws as f64).sqrt();
            prop_assert!((freq - pi).abs() <= 5.0 * se, "index {i}: {freq} vs {pi}");
        }
    }
}

#[test]
fn composition_counts() {
    for n in 1..=8 {
        let all = compositions_up_to(n);
        assert_eq!(all.len(), (1 << n) - 1);
        for size in 1..=n {
            let of_size = all.iter().filter(|c| c.size() == size).count();
            assert_eq!(of_size, 1 << (size - 1));
        }
        assert!(all.iter().all(|c| c.parts().iter().all(|&p| p >= 1)));
        let mut sorted: Vec<_> = all.iter().map(|c| c.parts().to_vec()).collect();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
    }
}
