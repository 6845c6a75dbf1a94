//! Builds one RIS-aided channel realization and checks the cascade shape.

use ris_mimo::channel::{assemble_channel, cascade, sample_paths, upa_response, Band, LinkConfig, RisPhases, UpaGeometry};
use ris_mimo::rng::{substream, StreamPurpose};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tx = UpaGeometry::square(8)?;
    let rx = UpaGeometry::square(8)?;
    let ris = UpaGeometry::square(16)?;

    let a = upa_response(&ris, 0.3, 1.1);
    println!("RIS steering vector: {} entries, norm {:.12}", a.len(), a.norm());

    let ts = LinkConfig::for_band(Band::Mmwave28, 4, 35.0, ris, tx, true);
    let sr = LinkConfig::for_band(Band::Mmwave28, 4, 15.0, rx, ris, true);
    let paths_ts = sample_paths(&mut substream(42, 0, StreamPurpose::TxToRisPaths), &ts);
    let paths_sr = sample_paths(&mut substream(42, 0, StreamPurpose::RisToRxPaths), &sr);

    for (name, paths) in [("TX -> RIS", &paths_ts), ("RIS -> RX", &paths_sr)] {
        println!("{name}:");
        for (i, p) in paths.iter().enumerate() {
            println!(
                "  path {i}: |gain| = {:.3e}, arrival az {:.3} el {:.3}",
                p.gain.norm(),
                p.arrival.azimuth,
                p.arrival.elevation
            );
        }
    }

    let h_ts = assemble_channel(&paths_ts, &ris, &tx);
    let h_sr = assemble_channel(&paths_sr, &rx, &ris);
    let h = cascade(&h_sr, &RisPhases::ones(ris.len()), &h_ts)?;
    println!("H_TS {:?}, H_SR {:?}, cascade {:?}", h_ts.shape(), h_sr.shape(), h.shape());
    println!("cascade Frobenius norm with all-ones RIS: {:.3e}", h.frobenius_norm());
    Ok(())
}
