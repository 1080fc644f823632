// A few of the Monte-Carlo checks behind `zofl validate`.

use zofl::cli::{bias_slope, sandwich, second_moment, unbiasedness, BIAS_LEVELS};
use zofl::estimators::Feedback;
use zofl::vecspace::Lp;

pub fn run_example() -> zofl::Result<()> {
    println!("{}", unbiasedness(Lp::L1, Feedback::TwoPoint, 20, 5_000, 1)?.line());
    println!("{}", sandwich(Lp::L2, 50, 3, 5_000, 1)?.line());
    println!("{}", second_moment(Lp::L2, Feedback::OnePoint, 10, 0.5, 5_000, 1)?.line());
    for scheme in [Lp::L1, Lp::L2] {
        let (slope, scale) = bias_slope(scheme, 20, 0.01, &BIAS_LEVELS, 2_000, 1)?;
        println!("{scheme:?} bias slope / reference scale = {:.3}", slope / scale);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> zofl::Result<()> {
    run_example()
}
