//! `E[X f(X)] = σ² E[f'(X*)]` for single laws, then for a sum through the
//! coupling `W* = W^(I) + X_I*`.

use zerobias::admissible::Differentiable;
use zerobias::cli::stock_distributions;
use zerobias::distributions::{CouplingMode, MeanZeroDistribution};
use zerobias::numerics::Quadrature;
use zerobias::oracle::zero_bias_identity_mc;

fn main() -> zerobias::Result<()> {
    let quad = Quadrature::default();
    println!("{:<22} {:>4} {:>16} {:>16} {:>10}", "law", "f", "E[X f(X)]", "σ² E[f'(X*)]", "gap");
    for (name, x) in stock_distributions()? {
        let star = x.zero_bias()?;
        for d in [2, 3, 5] {
            let lhs = x.law().expect(|t| t.powi(d + 1), &quad, &[])?;
            let rhs = x.variance() * star.law().expect(|t| d as f64 * t.powi(d - 1), &quad, &[])?;
            println!("{name:<22} x^{d:<2} {lhs:>16.12} {rhs:>16.12} {:>10.1e}", (lhs - rhs).abs());
        }
    }

    let mut family = vec![MeanZeroDistribution::two_point(0.2)?.scaled(0.5)?; 4];
    family.push(MeanZeroDistribution::uniform_symmetric(0.7)?);
    for mode in [CouplingMode::Independent, CouplingMode::Comonotone] {
        let r = zero_bias_identity_mc(&family, &Differentiable::monomial(3), 400_000, 7, mode)?;
        println!(
            "sum of {} summands, f = x^3, {mode:?}: residual {:.2e} ± {:.1e}",
            family.len(),
            r.residual,
            r.std_error
        );
    }
    Ok(())
}
