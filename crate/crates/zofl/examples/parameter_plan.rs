// Smoothing radius, variance bound, tolerable noise and `(N, K, B)` for
// every algorithm at one set of constants.

use zofl::estimators::Feedback;
use zofl::planner::{kappa, plan, Algorithm, ProblemConstants};
use zofl::vecspace::Lp;

pub fn run_example() -> zofl::Result<()> {
    let c = ProblemConstants::new(100, 1.0, 1.0, 1.0, 0.1).with_g(1.0);
    println!(
        "kappa(p=2, d=100): l1 {:.2}, l2 {:.2}",
        kappa(Lp::L2, 100, Lp::L1, Feedback::TwoPoint)?,
        kappa(Lp::L2, 100, Lp::L2, Feedback::TwoPoint)?
    );
    println!("{:<11} {:<3} {:>9} {:>10} {:>7} {:>9} {:>11} {:>14}", "algorithm", "", "gamma", "delta_max", "N", "K", "B", "T");
    for alg in Algorithm::ALL {
        for scheme in [Lp::L1, Lp::L2] {
            let p = plan(alg, &c, scheme, Feedback::TwoPoint)?;
            println!(
                "{:<11} {:<3} {:>9.5} {:>10.3e} {:>7} {:>9} {:>11} {:>14}{}",
                format!("{alg:?}"),
                format!("{scheme:?}"),
                p.gamma,
                p.delta_max,
                p.n,
                p.k,
                p.b,
                p.t,
                if p.executable { "" } else { "  (plan only)" }
            );
        }
    }
    let one = plan(Algorithm::MbAsgd, &c, Lp::L2, Feedback::OnePoint)?;
    println!("one-point MbAsgd l2 needs T = {:.3e} calls", one.t as f64);
    Ok(())
}

#[allow(dead_code)]
fn main() -> zofl::Result<()> {
    run_example()
}
