// Driving the `zofl` command line in-process: write a config, print a plan.

use zofl::cli::main_with_args;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("zofl-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("params.json");
    std::fs::write(&path, r#"{"algorithm": "mb_asgd", "scheme": "L2", "constants": {"d": 100, "m": 1, "m2": 1, "r": 1, "eps": 0.1}}"#)?;
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = main_with_args(["zofl", "params", "--config", path.to_str().unwrap()], &mut out, &mut err);
    print!("{}", String::from_utf8(out)?);
    std::fs::remove_dir_all(&dir)?;
    if code != 0 {
        return Err(String::from_utf8(err)?.into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
