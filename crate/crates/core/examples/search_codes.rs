//! Greedy and exact search for small lengths, then the greedy rate table.
//!
//! `cargo run --release --example search_codes [MAX_EXACT_N]`

use std::time::Duration;

use adcodes::codeset::ConflictMode;
use adcodes::search::{rate_table, reference_k, search, SearchConfig, Strategy};

fn main() -> adcodes::Result<()> {
    let max_exact: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);

    println!(
        "{:>3} {:>6} {:>6} {:>6} {:>9}",
        "n", "lex", "weight", "exact", "reference"
    );
    for n in 4..=max_exact {
        let k = |strategy| -> adcodes::Result<String> {
            let cfg = SearchConfig::new(n, ConflictMode::Strict, strategy).with_budget(Duration::from_secs(30));
            let r = search(&cfg)?;
            Ok(format!("{}{}", r.k, if r.optimal { "*" } else { "" }))
        };
        println!(
            "{:>3} {:>6} {:>6} {:>6} {:>9}",
            n,
            k(Strategy::GreedyLex)?,
            k(Strategy::GreedyByWeight)?,
            k(Strategy::ExactBnB)?,
            reference_k(n).map_or("-".into(), |k| k.to_string())
        );
    }
    println!("(* = proven maximum)\n");

    let table = rate_table(4, 16, &SearchConfig::new(4, ConflictMode::Strict, Strategy::GreedyLex))?;
    print!("{}", table.to_csv());
    println!("slope of log2 k against n: {:.4}", table.slope.unwrap_or(f64::NAN));
    Ok(())
}
