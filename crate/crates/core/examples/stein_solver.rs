//! The Stein solution for a call payoff: values, derivatives, the jump of
//! the top derivative and the residual of the equation.

use std::sync::Arc;

use zerobias::admissible::AdmissibleFunction;
use zerobias::stein::{normal_expectation, SteinSolution};

fn main() -> zerobias::Result<()> {
    let sigma = 1.0;
    let h = AdmissibleFunction::call(0.3);
    let s = Arc::new(SteinSolution::solve(&h, sigma)?);
    println!("Φ_σ(h) = {:.12}", normal_expectation(&h, sigma)?);
    println!("{:>6} {:>14} {:>14} {:>14}", "x", "f", "f'", "f''");
    for x in [-4.0, -1.0, 0.0, 0.29, 0.31, 1.0, 4.0] {
        let d = s.derivatives_upto(2, x)?;
        println!("{x:>6.2} {:>14.10} {:>14.10} {:>14.10}", d[0], d[1], d[2]);
    }
    for j in s.top_jumps() {
        println!("f'' jumps by {:.6} at {}", j.size, j.location);
    }
    let report = s.residual_check(256)?;
    println!(
        "worst scaled residual {:.2e} at x = {:.3} over {} points",
        report.max_scaled, report.worst_x, report.checked
    );
    let nested = s.nested_admissible(2)?;
    println!("f'' as a test function: {} of order {}", nested.label(), nested.order());
    Ok(())
}
