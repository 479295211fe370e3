//! Driving the experiment runner from code: a config round-trips through
//! JSON, and the expand run writes its CSV and report.

use zerobias::cli::{run, ExperimentConfig, FunctionSpec, Task};

fn main() -> zerobias::Result<()> {
    let dir = std::env::temp_dir().join("zerobias-cli-config-example");
    let cfg = ExperimentConfig {
        function: FunctionSpec::Indicator { k: 0.0 },
        order: 0,
        n_grid: vec![16, 64],
        out: dir.clone(),
        ..ExperimentConfig::default()
    };
    let text = cfg.to_json();
    assert_eq!(ExperimentConfig::from_json(&text)?, cfg);
    println!("{text}");
    let outcome = run(Task::Expand, &cfg)?;
    print!("{}", outcome.table);
    for f in outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
