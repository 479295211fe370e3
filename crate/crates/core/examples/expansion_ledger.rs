//! Every `(summand, composition)` term of a second-order expansion on a
//! mixed family, with the recursion trace and the error budget.

use zerobias::admissible::AdmissibleFunction;
use zerobias::distributions::MeanZeroDistribution;
use zerobias::expansion::Expander;
use zerobias::oracle::{exact_expectation, DEFAULT_CAP};

fn main() -> zerobias::Result<()> {
    let family = vec![
        MeanZeroDistribution::two_point(0.2)?.scaled(0.4)?,
        MeanZeroDistribution::two_point(0.2)?.scaled(0.4)?,
        MeanZeroDistribution::finite_discrete(&[(-0.3, 0.5), (0.1, 0.3), (0.6, 0.2)])?,
        MeanZeroDistribution::two_point(0.5)?.scaled(0.5)?,
    ];
    let h = AdmissibleFunction::cos_with_order(2)?;
    let mut expander = Expander::new(&family, 2)?;
    let ledger = expander.expand(&h, 2)?;
    println!("σ_W = {:.6}", ledger.sigma_w);
    println!("{:>3} {:<7} {:>13} {:<18} {:>14} {:>14}", "i", "J", "coefficient", "nested", "value", "contribution");
    for t in &ledger.terms {
        println!(
            "{:>3} {:<7} {:>13.6e} {:<18} {:>14.10} {:>14.6e}",
            t.summand,
            t.composition.to_string(),
            t.coefficient,
            t.nested,
            t.nested_value,
            t.contribution
        );
    }
    println!("recursion trace:");
    for e in &ledger.trace {
        let memo = if e.memo_hit { " (memo)" } else { "" };
        println!("{}C_{}({}) = {:.12}{memo}", "  ".repeat(e.depth + 1), e.order, e.function, e.value);
    }
    let exact = exact_expectation(&h, &family, DEFAULT_CAP)?.value;
    let budget = expander.error_budget(&h, 2)?;
    println!("C_0..C_2 = {:?}", ledger.c_values);
    println!("reassembly gap {:.1e}", ledger.reassembly_gap());
    println!(
        "exact {exact:.12}, error {:.2e}, budget {:.2e} (recursive {:.1e}, ε {:.1e}, δ {:.1e})",
        (exact - ledger.value()).abs(),
        budget.total,
        budget.recursive,
        budget.epsilon,
        budget.delta
    );
    Ok(())
}
