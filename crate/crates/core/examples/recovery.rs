//! Builds the recovery for the (4,2) code and prints each operator element.

use adcodes::codeset::{CodeSet, ConflictMode};
use adcodes::recovery::{build_recovery, verify_recovery};

fn main() -> adcodes::Result<()> {
    let code = CodeSet::from_bitstrings(ConflictMode::Strict, &["0000", "0011", "1100", "1111"])?;
    let r = build_recovery(&code, 0.1)?;
    for (m, element) in r.elements().iter().enumerate() {
        let parts: Vec<String> = element
            .assignments
            .iter()
            .map(|a| format!("{} -> w{}", a.source, a.target))
            .collect();
        println!("R{m} (e = {}): {}", element.error, parts.join(", "));
    }
    let completion: Vec<String> = r.completion().iter().map(ToString::to_string).collect();
    println!(
        "completion: {}",
        if completion.is_empty() {
            "(none)".into()
        } else {
            completion.join(", ")
        }
    );

    let report = verify_recovery(&r, 1e-10)?;
    println!(
        "rank {} of {}, gram deviation {:.1e}, trace deviation {:.1e}",
        report.source_count, report.dim, report.gram_deviation, report.trace_deviation
    );

    let big = build_recovery(&adcodes::example_code_8_12(), 0.1)?;
    println!(
        "(8,12): {} elements, {} assigned directions, {} completion directions",
        big.elements().len(),
        big.assigned_rank(),
        big.completion().len()
    );
    Ok(())
}
