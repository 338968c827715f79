use adcodes::analysis::{first_order_residuals, DEFAULT_RESIDUAL_GAMMAS, FIRST_ORDER_THRESHOLD};
use adcodes::codeset::{CodeSet, ConflictMode};

fn main() -> adcodes::Result<()> {
    let codes = [
        (
            "(4,2)",
            CodeSet::from_bitstrings(ConflictMode::Strict, &["0000", "0011", "1100", "1111"])?,
        ),
        ("(8,12)", adcodes::example_code_8_12()),
        (
            "literal (4,3)",
            CodeSet::from_bitstrings(ConflictMode::Literal, &["0000", "1111", "0001", "1110", "0011", "1100"])?,
        ),
    ];
    for (name, code) in &codes {
        let report = first_order_residuals(code, &DEFAULT_RESIDUAL_GAMMAS)?;
        let verdict = if report.corrects_first_order(FIRST_ORDER_THRESHOLD) {
            "corrects"
        } else {
            "does not correct"
        };
        println!(
            "{name}: max |a1| = {:.3e}, {verdict} first-order errors",
            report.max_abs_a1()
        );
        if code.k() <= 3 {
            for e in &report.entries {
                println!("  ({}, {}) a1 = {:.4} a2 = {:.4}", e.i, e.j, e.a1.re, e.a2.re);
            }
        }
    }
    Ok(())
}
