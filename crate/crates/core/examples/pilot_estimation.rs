//! Pilot sounding of every path pair and the rank-1 channel estimate.

use ris_mimo::beamforming::channel_capacity;
use ris_mimo::channel::cascade;
use ris_mimo::harness::{dbm_to_mw, ExperimentConfig, Realization};
use ris_mimo::pilot_estimation::{build_pilot_suite, estimate, EstimatorSettings, PairIndex, PilotProjector};
use ris_mimo::rng::{substream, StreamPurpose};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig { seed: 7, ..Default::default() };
    let geoms = cfg.geometries();
    let real = Realization::sample(&cfg, 0);
    let power = dbm_to_mw(30.0);
    let noise = cfg.noise_mw();

    let suite = build_pilot_suite(&real.paths_ts, &real.paths_sr, &geoms, cfg.n_streams, power)?;
    println!("{} pilot blocks of {} symbols each", suite.pair_count(), suite.n_streams());

    let projector = PilotProjector::new(&real.h_ts, &real.h_sr, &suite)?;
    let truth = real.paths_ts[0].gain * real.paths_sr[0].gain;
    for (label, noise_var) in [("noiseless pilots", 0.0), ("pilots at -91 dBm noise", noise)] {
        let settings = EstimatorSettings { k: 4, n_rank: 1, noise_var };
        let est = estimate(&projector, &suite, &real.paths_ts, &real.paths_sr, &geoms, settings, |pair| {
            substream(cfg.seed, 0, StreamPurpose::PilotNoise(suite.flat_index(pair).expect("pair")))
        })?;
        let guess = est.gain_estimates[&PairIndex::new(0, 0)];
        let h_true = cascade(&real.h_sr, suite.phase_vector(est.selected_pair)?, &real.h_ts)?;
        let err = (&est.h_est - &h_true).frobenius_norm() / h_true.frobenius_norm();
        println!("{label}:");
        println!("  dominant pair gain: true {truth:.3e}, estimated {guess:.3e}");
        println!("  selected pair {}, rank-1 estimate relative error {err:.3}", est.selected_pair);
        println!(
            "  capacity of the selected configuration: {:.4} bit/s/Hz",
            channel_capacity(&h_true, cfg.n_streams, power, noise)?
        );
    }
    Ok(())
}
