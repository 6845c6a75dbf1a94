//! Waterfilling power allocation and the resulting MIMO capacity.

use ris_mimo::beamforming::{channel_capacity, optimal_beamformers};
use ris_mimo::numerics::{log_det_rate, waterfill, ComplexMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = [3.0, 2.0, 1.0];
    for power in [0.5, 2.0, 5.0, 20.0] {
        let alloc = waterfill(&s, 1.0, power, 3)?;
        println!(
            "P = {power:>5}: levels {:?}, water level {:.4}, {} active",
            alloc.levels.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>(),
            alloc.water_level,
            alloc.active_streams()
        );
    }

    let h = ComplexMatrix::from_real_diagonal(&[3.0, 2.0, 0.5, 0.1]);
    let link = optimal_beamformers(&h, 4, 5.0, 1.0)?;
    let se = log_det_rate(&link.combiner, &h, &link.precoder, 1.0)?;
    let cap = channel_capacity(&h, 4, 5.0, 1.0)?;
    println!("SVD beamformers: spectral efficiency {se:.6}, capacity {cap:.6} bit/s/Hz");
    println!("precoder power {:.6} of 5", link.precoder.frobenius_norm_sq());
    Ok(())
}
