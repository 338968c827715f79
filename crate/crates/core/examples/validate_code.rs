use adcodes::codeset::{validate_code_set, CodeSet, ConflictMode};

fn main() -> adcodes::Result<()> {
    let code = adcodes::example_code_8_12();
    for mode in [ConflictMode::Strict, ConflictMode::Literal] {
        let report = validate_code_set(&code.with_mode(mode));
        println!("{report}");
    }

    // valid only if one-step decays are allowed to land on other codewords
    let six = ["0000", "1111", "0001", "1110", "0011", "1100"];
    for mode in [ConflictMode::Literal, ConflictMode::Strict] {
        let code = CodeSet::from_bitstrings(mode, &six)?;
        println!("{}", validate_code_set(&code));
    }
    Ok(())
}
