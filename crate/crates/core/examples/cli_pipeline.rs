//! Drive an experiment through a config file, as the command-line tool does.

use biphoton::cli::{run, Experiment, RunConfig};

pub fn run_example() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let text = "\
# bound bands at two phases
trunc = 30
phi0 = 0, 1.5707963267948966
band_k_points = 9
workers = 2
";
    let mut config = RunConfig::parse(text)?;
    config.experiment = Some(Experiment::Bands);
    config.out = dir.path().join("bands");
    anyhow::ensure!(config.validate().is_empty());

    let outcome = run(&config)?;
    for f in &outcome.files {
        let body = std::fs::read_to_string(f)?;
        println!("{} ({} lines)", f.file_name().unwrap().to_string_lossy(), body.lines().count());
    }
    println!("--- effective config ---\n{}", config.emit());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
