// Minibatch against single-machine accelerated SGD on the simplex test
// problem. Both get K N sequential local calls; minibatch spreads each
// round over B workers.

use zofl::estimators::{Feedback, SmoothingConfig};
use zofl::fedsim::{run_minibatch_acc_sgd, run_single_machine_acc_sgd, FedTopology, RunOptions, StepPolicy};
use zofl::problems::{make_simplex_test_problem, NoiseModel};
use zofl::vecspace::{DenseVector, Lp};

pub fn run_example() -> zofl::Result<()> {
    let d = 50;
    let problem = make_simplex_test_problem(d, 3)?;
    let x0 = DenseVector::simplex_center(d);
    let cfg = SmoothingConfig::new(Lp::L2, Feedback::TwoPoint, 1e-3)?;
    let step = StepPolicy::new(100.0, 50.0, 0.5);
    let noise = NoiseModel::none();
    let opts = RunOptions::new(11).config_hash("example");

    let mb = run_minibatch_acc_sgd(&problem, FedTopology::new(8, 3, 200)?, &cfg, &noise, &x0, &step, &opts)?;
    let sm = run_single_machine_acc_sgd(&problem, FedTopology::new(8, 3, 200)?, &cfg, &noise, &x0, &step, &opts)?;
    println!("f* = {:.5}", problem.f_star.unwrap_or(f64::NAN));
    println!("minibatch:      gap {:.5} after {} calls", mb.gap.unwrap_or(f64::NAN), mb.calls);
    println!("single machine: gap {:.5} after {} calls", sm.gap.unwrap_or(f64::NAN), sm.calls);

    let csv = mb.trace.to_csv_string()?;
    for line in csv.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> zofl::Result<()> {
    run_example()
}
