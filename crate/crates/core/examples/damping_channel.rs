use adcodes::channel::{apply_channel, multi_qubit_ad_kraus, verify_trace_preserving, ChannelParams};
use adcodes::linalg::{uhlmann_fidelity, DensityMatrix};

fn main() -> adcodes::Result<()> {
    for n in 1..=8 {
        for gamma in [0.0, 0.1, 0.5, 1.0] {
            let ch = multi_qubit_ad_kraus(ChannelParams::new(gamma, n)?)?;
            assert!(verify_trace_preserving(&ch, 1e-12));
        }
    }
    println!("trace preserving for n <= 8");

    // |+++> decays toward |000>
    let dim = 8;
    let plus = vec![adcodes::linalg::c((dim as f64).recip().sqrt(), 0.0); dim];
    let rho = DensityMatrix::pure(&plus)?;
    for gamma in [0.0, 0.05, 0.1, 0.2, 0.5, 1.0] {
        let ch = multi_qubit_ad_kraus(ChannelParams::new(gamma, 3)?)?;
        let out = apply_channel(&ch, &rho)?;
        println!(
            "γ = {gamma:<4}  F = {:.6}  P(000) = {:.6}",
            uhlmann_fidelity(&rho, &out)?,
            out.matrix()[(0, 0)].re
        );
    }
    Ok(())
}
