//! Error budgets next to exact errors for smooth and non-smooth test
//! functions; the budget splits into recursive, ε and δ parts.

use zerobias::admissible::AdmissibleFunction;
use zerobias::distributions::{iid_family, MeanZeroDistribution};
use zerobias::expansion::Expander;
use zerobias::oracle::{exact_expectation, DEFAULT_CAP};

fn main() -> zerobias::Result<()> {
    let z = MeanZeroDistribution::two_point(0.2)?;
    let cases = [
        ("indicator(0)", AdmissibleFunction::indicator(0.0), 0),
        ("call(0.1)", AdmissibleFunction::call(0.1), 1),
        ("exp-bounded", AdmissibleFunction::exp_bounded(2)?, 2),
        ("x^3", AdmissibleFunction::monomial(3), 3),
    ];
    println!("{:<13} {:>2} {:>5} {:>11} {:>11} {:>9}", "h", "N", "n", "error", "budget", "estimated");
    for (name, h, order) in &cases {
        for n in [16, 256] {
            let family = iid_family(&z, n)?;
            let mut expander = Expander::new(&family, *order)?;
            let value = expander.expand(h, *order)?.value();
            let budget = expander.error_budget(h, *order)?;
            let exact = exact_expectation(h, &family, DEFAULT_CAP)?.value;
            println!(
                "{name:<13} {order:>2} {n:>5} {:>11.3e} {:>11.3e} {:>9}",
                (exact - value).abs(),
                budget.total,
                budget.heuristic
            );
        }
    }
    Ok(())
}
