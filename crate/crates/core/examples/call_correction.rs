//! First-order correction for a call on a skewed binomial sum, checked
//! against exact enumeration, and the closed Gaussian form of the
//! correction's main ingredient.

use zerobias::admissible::AdmissibleFunction;
use zerobias::distributions::{iid_family, MeanZeroDistribution};
use zerobias::expansion::Expander;
use zerobias::oracle::{exact_expectation, DEFAULT_CAP};
use zerobias::stein::call_correction_identity;

fn main() -> zerobias::Result<()> {
    let h = AdmissibleFunction::call(0.1);
    let z = MeanZeroDistribution::two_point(0.2)?;
    println!("{:>5} {:>13} {:>13} {:>13} {:>10} {:>10}", "n", "C_0", "C_1", "exact", "err C_0", "err C_1");
    for n in [16, 64, 256, 1024] {
        let family = iid_family(&z, n)?;
        let ledger = Expander::new(&family, 1)?.expand(&h, 1)?;
        let exact = exact_expectation(&h, &family, DEFAULT_CAP)?.value;
        let (c0, c1) = (ledger.c_values[0], ledger.c_values[1]);
        println!(
            "{n:>5} {c0:>13.10} {c1:>13.10} {exact:>13.10} {:>10.2e} {:>10.2e}",
            (exact - c0).abs(),
            (exact - c1).abs()
        );
    }
    for sigma in [0.5, 1.0, 2.0] {
        let (lhs, rhs) = call_correction_identity(&h, sigma)?;
        println!("σ = {sigma}: σ² Φ(f'') = {lhs:.12}, polynomial form = {rhs:.12}");
    }
    Ok(())
}
