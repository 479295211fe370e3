//! Reassembling `E f(X)` from expectations at the shifted point `X + Y`.

use zerobias::admissible::AdmissibleFunction;
use zerobias::bounds::reverse_taylor_remainder;
use zerobias::distributions::MeanZeroDistribution;

fn main() -> zerobias::Result<()> {
    let x = MeanZeroDistribution::finite_discrete(&[(-0.7, 0.3), (0.16, 0.5), (0.65, 0.2)])?;
    let y = MeanZeroDistribution::finite_discrete(&[(-0.2, 0.6), (0.3, 0.4)])?;
    let cases = [
        ("x^4", AdmissibleFunction::monomial(4)),
        ("cos", AdmissibleFunction::cos_with_order(4)?),
        ("call(0)", AdmissibleFunction::call(0.0)),
    ];
    println!("{:<8} {:>2} {:>15} {:>15} {:>12} {:>10}", "f", "N", "E f(X)", "expansion", "remainder", "residual");
    for (name, f) in &cases {
        for order in 0..=f.order().min(4) {
            let r = reverse_taylor_remainder(f, x.law(), y.law(), order)?;
            println!(
                "{name:<8} {order:>2} {:>15.12} {:>15.12} {:>12.3e} {:>10.1e}",
                r.lhs, r.expansion, r.epsilon, r.residual
            );
        }
    }
    Ok(())
}
