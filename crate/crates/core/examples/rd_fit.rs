//! Fits the rate-PSNR model to noisy samples of a known curve and compares
//! the fitted PSNR with the truth across the usable quality band.

use noma_video::quality::{fit_rd_params, Complexity, RdLibrary, RdPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> noma_video::Result<()> {
    let lib = RdLibrary::default_fixtures();
    let truth = lib.get("Crew", 0.05)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // Twelve operating points across the band, each PSNR off by up to 0.05 dB.
    let points: Vec<RdPoint> = (0..12)
        .map(|i| {
            let q = truth.q_min_db + (truth.q_max_db - truth.q_min_db) * i as f64 / 11.0;
            RdPoint::from_psnr(truth.rate_of_psnr(q)?, q + rng.random_range(-0.05..0.05))
        })
        .collect::<Result<_, _>>()?;
    let fit = fit_rd_params(&points, (truth.q_min_db, truth.q_max_db), "Crew-fit", Complexity::Low, 0.05)?;
    println!("truth: alpha {:.3} beta {:.1} theta {:.1}", truth.alpha, truth.beta, truth.theta);
    println!("fit:   alpha {:.3} beta {:.1} theta {:.1}", fit.alpha, fit.beta, fit.theta);
    println!("{:>10} {:>9} {:>9}", "rate kbps", "true dB", "fit dB");
    for i in 0..6 {
        let r = truth.min_rate() + (truth.max_rate() - truth.min_rate()) * i as f64 / 5.0;
        println!("{:>10.1} {:>9.3} {:>9.3}", r / 1e3, truth.psnr_of_rate(r)?, fit.psnr_of_rate(r)?);
    }
    Ok(())
}
