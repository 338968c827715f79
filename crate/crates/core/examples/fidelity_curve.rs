//! Fidelity of the (8,12) code against three bare qubits.
//!
//! `cargo run --release --example fidelity_curve [OUT_DIR]` writes
//! `fidelity.csv` and `fidelity.svg`.

use std::path::PathBuf;

use adcodes::analysis::{fidelity_curve, format_sig12};

fn main() -> adcodes::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let code = adcodes::example_code_8_12();
    let grid: Vec<f64> = (0..=25).map(|i| i as f64 * 0.02).collect();
    let curve = fidelity_curve(&code, &grid)?;

    println!("{:>6} {:>16} {:>16}", "γ", "code", "bare");
    for ((g, code), bare) in grid.iter().zip(&curve.f_code).zip(&curve.f_bare) {
        println!("{g:>6.2} {:>16} {:>16}", format_sig12(*code), format_sig12(*bare));
    }

    let fine: Vec<f64> = (1..=50).map(|i| i as f64 * 1e-3).collect();
    let fit = fidelity_curve(&code, &fine)?.deficit_fit(1e-3, 5e-2, 2)?;
    println!("1 - F ≈ {:.3e} γ + {:.3e} γ²", fit.linear(), fit.quadratic());

    std::fs::write(dir.join("fidelity.csv"), curve.to_csv())?;
    std::fs::write(
        dir.join("fidelity.svg"),
        curve.to_svg("(8, 12) code versus 3 bare qubits"),
    )?;
    Ok(())
}
