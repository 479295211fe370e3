//! Convergence orders of `C_0` and `C_1` for a call on a skewed binomial
//! family, with exact enumeration as the oracle.

use zerobias::admissible::AdmissibleFunction;
use zerobias::distributions::MeanZeroDistribution;
use zerobias::oracle::{order_experiment, order_fit, OrderExperiment, DEFAULT_CAP};

fn main() -> zerobias::Result<()> {
    let exp = OrderExperiment {
        order: 1,
        n_grid: vec![16, 32, 64, 128, 256, 512, 1024],
        mc_samples: None,
        seed: 0,
        cap: DEFAULT_CAP,
        with_budget: true,
    };
    let rows = order_experiment(&MeanZeroDistribution::two_point(0.2)?, &AdmissibleFunction::call(0.1), &exp)?;
    println!("{:>5} {:>11} {:>11} {:>11}", "n", "err C_0", "err C_1", "budget");
    for r in &rows {
        println!(
            "{:>5} {:>11.3e} {:>11.3e} {:>11.3e}",
            r.n,
            r.errors[0],
            r.errors[1],
            r.budget.unwrap_or(f64::NAN)
        );
    }
    for k in 0..=1 {
        let errors: Vec<f64> = rows.iter().map(|r| r.errors[k]).collect();
        let fit = order_fit(&exp.n_grid, &errors)?;
        println!(
            "C_{k}: slope {:.3}, 95% CI [{:.3}, {:.3}], R² {:.3}",
            fit.slope, fit.slope_ci.0, fit.slope_ci.1, fit.r_squared
        );
    }
    Ok(())
}
