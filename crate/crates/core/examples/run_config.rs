//! Driving the command layer programmatically: resolve a configuration, run it
//! and read the CSV artifact back.
//!
//! Run: `cargo run --release --example run_config`

use qa_kinetics::cli::{execute, CommandKind, Opts, RunConfig};
use qa_kinetics::output::read_csv;

fn main() -> qa_kinetics::Result<()> {
    let dir = std::env::temp_dir().join("qa-kinetics-example");
    let opts = Opts {
        alpha: Some(0.06),
        beta: Some(25.0),
        out: Some(dir.clone()),
        ..Default::default()
    };
    let cfg = RunConfig::resolve(CommandKind::Fig1a, &opts)?;
    print!("{}", execute(&cfg)?);

    let table = read_csv(&dir.join("fig1a.csv"))?;
    println!("{} with columns {:?}, {} rows", table.schema, table.columns, table.rows.len());
    Ok(())
}
