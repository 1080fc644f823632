mod sphere_sampling {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/sphere_sampling.rs"));
}

#[test]
fn sphere_sampling_runs() {
    sphere_sampling::run_example().expect("sphere_sampling example should run");
}

mod gradient_estimators {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/gradient_estimators.rs"));
}

#[test]
fn gradient_estimators_runs() {
    gradient_estimators::run_example().expect("gradient_estimators example should run");
}

mod parameter_plan {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/parameter_plan.rs"));
}

#[test]
fn parameter_plan_runs() {
    parameter_plan::run_example().expect("parameter_plan example should run");
}

mod federated_minibatch {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/federated_minibatch.rs"));
}

#[test]
fn federated_minibatch_runs() {
    federated_minibatch::run_example().expect("federated_minibatch example should run");
}

mod sweep_local_calls {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/sweep_local_calls.rs"));
}

#[test]
fn sweep_local_calls_runs() {
    sweep_local_calls::run_example().expect("sweep_local_calls example should run");
}

mod noise_comparison {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/noise_comparison.rs"));
}

#[test]
fn noise_comparison_runs() {
    noise_comparison::run_example().expect("noise_comparison example should run");
}

mod matrix_game_smp {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/matrix_game_smp.rs"));
}

#[test]
fn matrix_game_smp_runs() {
    matrix_game_smp::run_example().expect("matrix_game_smp example should run");
}

mod estimator_checks {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/estimator_checks.rs"));
}

#[test]
fn estimator_checks_runs() {
    estimator_checks::run_example().expect("estimator_checks example should run");
}

mod command_line {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/command_line.rs"));
}

#[test]
fn command_line_runs() {
    command_line::run_example().expect("command_line example should run");
}
