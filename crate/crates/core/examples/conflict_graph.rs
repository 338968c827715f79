use adcodes::codeset::{build_conflict_graph, conflicts, damped_descendants, CodeWord, ConflictMode};

fn main() -> adcodes::Result<()> {
    let u: CodeWord = "0111".parse()?;
    let v: CodeWord = "1011".parse()?;
    let shown: Vec<String> = damped_descendants(u).iter().map(ToString::to_string).collect();
    println!("descendants of {u}: {}", shown.join(" "));
    println!(
        "{u} vs {v}: strict {} literal {}",
        conflicts(u, v, ConflictMode::Strict)?,
        conflicts(u, v, ConflictMode::Literal)?
    );

    for n in 4..=12 {
        let strict = build_conflict_graph(n, ConflictMode::Strict)?;
        let literal = build_conflict_graph(n, ConflictMode::Literal)?;
        println!(
            "n = {n:>2}: {:>5} pair classes, {:>7} strict edges, {:>7} literal edges",
            strict.vertex_count(),
            strict.edge_count(),
            literal.edge_count()
        );
    }
    Ok(())
}
