// Fixed budget `K N`, growing `K`: fewer communication rounds and a worse
// final error. A reduced version of the full sweep (`zofl sweep-k`).

use zofl::cli::{cmd_sweep_k, sweep_csv, ExperimentConfig};

pub fn run_example() -> zofl::Result<()> {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "problem": {"kind": "simplex_test", "d": 30, "seed": 0},
            "algorithm": "mb_asgd",
            "scheme": ["L1", "L2"],
            "sweep": {"budget": 243, "b": 4, "k": [1, 9, 81, 243]},
            "constants": {"eps": 0.01},
            "smoothness": 100,
            "sigma": "measured",
            "repeat": 3
        }"#,
    )?;
    let rows = cmd_sweep_k(&cfg, None)?;
    print!("{}", sweep_csv(&rows)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> zofl::Result<()> {
    run_example()
}
