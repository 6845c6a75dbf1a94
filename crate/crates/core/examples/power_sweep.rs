//! Monte Carlo sweep over transmit power for both bands.
//!
//! Pass a trial count as the first argument (default 200).

use ris_mimo::channel::Band;
use ris_mimo::harness::{format_records, run_experiment_detailed, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(200);
    for band in Band::ALL {
        let cfg = ExperimentConfig { band, trials, seed: 2024, ..Default::default() };
        let out = run_experiment_detailed(&cfg)?;
        println!("# {band}, {trials} trials");
        print!("{}", format_records(&out.records));
        println!("# audit: {}\n", out.audit);
    }
    Ok(())
}
