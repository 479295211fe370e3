//! The one-sided Stein solution on |x| ≥ 1: its derivative through the
//! operator `Λ`, the closed form of `Λ^N`, and polynomial growth.

use zerobias::admissible::{lambda_iterate, lambda_iterate_formula, Differentiable};
use zerobias::cli::growth_ratio;
use zerobias::numerics::linspace;
use zerobias::stein::{lambda_identity_check, modified_higher_derivative, ModifiedSteinSolution};

fn main() -> zerobias::Result<()> {
    let grid = linspace(1.0, 6.0, 11);
    for d in 2..=4 {
        let dev = lambda_identity_check(&Differentiable::monomial(d), 1.0, &grid)?;
        println!("h = x^{d}: max |f'(x) − x·f_Λh(x)| on [1, 6] = {dev:.2e}");
    }
    let h = Differentiable::polynomial(&[0.3, -1.0, 0.5, 0.2, -0.1, 0.05]);
    for n in 1..=4 {
        let x = 2.5;
        let closed = lambda_iterate_formula(&h, n, x)?;
        let iterated = lambda_iterate(&h, n)?.value(x);
        println!("Λ^{n}(h)(2.5): closed {closed:.12}, iterated {iterated:.12}");
    }
    let x4 = Differentiable::monomial(4);
    let f = ModifiedSteinSolution::solve(&x4, 1.0)?;
    let x = 2.0;
    println!(
        "h = x^4 at x = 2: f'' by differences {:.8}, through Λ {:.8}",
        f.second_derivative_fd(x)?,
        modified_higher_derivative(&x4, 1.0, 2, x)?
    );
    for l in [0.0, 1.0, 2.0, 3.0] {
        println!("h = |x|^{l}: sup |f(x)|·x^(1−l) on [1, 50] = {:.4}", growth_ratio(l, 1.0)?);
    }
    Ok(())
}
