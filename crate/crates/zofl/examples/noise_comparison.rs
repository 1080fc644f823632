// l1 against l2 smoothing with and without bounded oracle noise.

use zofl::cli::{cmd_run, ExperimentConfig};

pub fn run_example() -> zofl::Result<()> {
    for level in [0.0, 6e-5] {
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{
                "problem": {{"kind": "simplex_test", "d": 30, "seed": 0}},
                "algorithm": "mb_asgd",
                "scheme": ["L1", "L2"],
                "topology": {{"b": 4, "k": 3, "n": 60}},
                "constants": {{"eps": 0.01}},
                "smoothness": 100,
                "sigma": "measured",
                "noise": {{"kind": "uniform", "level": {level}}},
                "repeat": 4
            }}"#
        ))?;
        let summary = cmd_run(&cfg, None)?;
        for s in &summary.schemes {
            println!("delta = {level:.0e}  {:?}: mean error {:.5} (se {:.1e})", s.scheme, s.mean_error, s.se_error);
        }
        if let Some(c) = summary.comparison {
            println!("  {c}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> zofl::Result<()> {
    run_example()
}
