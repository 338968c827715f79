//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use adcodes::analysis::{
    bare_fidelity, code_fidelity, code_states, composite_apply, fidelity_curve, first_order_residuals,
    CompositeChannel, DEFAULT_RESIDUAL_GAMMAS, FIRST_ORDER_THRESHOLD,
};
use adcodes::channel::{multi_qubit_ad_kraus, ChannelParams};
use adcodes::codeset::{
    conflicts, conflicts_by_enumeration, quantum_hamming_bound, validate_code_set, CodeSet, CodeWord, ConflictMode,
};
use adcodes::linalg::{c, uhlmann_fidelity, ComplexMatrix, DensityMatrix};
use adcodes::recovery::{build_recovery, verify_recovery};
use adcodes::search::{
    exact_search, is_maximal, rate_table, reference_table, regression_slope, SearchConfig, Strategy,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(
        start.elapsed() < limit,
        format!("took {:.1?}, limit {limit:?}", start.elapsed()),
    )
}

fn err(e: adcodes::Error) -> String {
    e.to_string()
}

fn code_4_2() -> CodeSet {
    CodeSet::from_bitstrings(ConflictMode::Strict, &["0000", "0011", "1100", "1111"]).unwrap()
}

fn literal_six() -> CodeSet {
    CodeSet::from_bitstrings(ConflictMode::Literal, &["0000", "1111", "0001", "1110", "0011", "1100"]).unwrap()
}

fn example_validity() -> Check {
    let start = Instant::now();
    let code = adcodes::example_code_8_12();
    ensure(code.len() == 24, format!("{} words", code.len()))?;
    for mode in [ConflictMode::Strict, ConflictMode::Literal] {
        let report = validate_code_set(&code.with_mode(mode));
        ensure(report.is_valid() && report.k == Some(12), format!("{report}"))?;
    }
    within(start, Duration::from_secs(1))?;
    Ok("24 words valid under strict and literal, k = 12".into())
}

fn exact_lower_bounds() -> Check {
    let start = Instant::now();
    let mut found = Vec::new();
    for (n, need) in [(4, 2), (5, 2), (6, 5), (7, 8), (8, 12)] {
        let cfg = SearchConfig::new(n, ConflictMode::Strict, Strategy::ExactBnB).with_budget(Duration::from_secs(55));
        let r = exact_search(&cfg).map_err(err)?;
        ensure(validate_code_set(&r.code).is_valid(), format!("n = {n}: invalid code"))?;
        ensure(r.k >= need, format!("n = {n}: k = {} < {need}", r.k))?;
        if n == 4 {
            ensure(r.optimal, "n = 4 not proven optimal")?;
        }
        found.push(format!("{}{}", r.k, if r.optimal { "*" } else { "" }));
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "k(4..8) = {} (* optimal), {:.2?}",
        found.join(","),
        start.elapsed()
    ))
}

fn greedy_scaling() -> Check {
    let start = Instant::now();
    let table = rate_table(4, 16, &SearchConfig::new(4, ConflictMode::Strict, Strategy::GreedyLex)).map_err(err)?;
    within(start, Duration::from_secs(600))?;
    for row in &table.rows {
        let r = row.result.as_ref().map_err(|e| format!("n = {}: {e}", row.n))?;
        ensure(validate_code_set(&r.code).is_valid(), format!("n = {}: invalid", row.n))?;
        ensure(is_maximal(&r.code), format!("n = {}: not maximal", row.n))?;
    }
    let slope = table.slope.ok_or("no slope")?;
    ensure((0.70..=0.95).contains(&slope), format!("slope {slope}"))?;
    let reference: Vec<(f64, f64)> = reference_table()
        .iter()
        .map(|&(n, k)| (n as f64, (k as f64).log2()))
        .collect();
    let ref_slope = regression_slope(&reference).ok_or("no reference slope")?;
    ensure((ref_slope - 0.85).abs() <= 0.02, format!("reference slope {ref_slope}"))?;
    Ok(format!(
        "13 valid maximal rows, slope {slope:.4}, reference slope {ref_slope:.4}, {:.2?}",
        start.elapsed()
    ))
}

fn cptp() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 1..=10 {
        for gamma in [0.0, 0.01, 0.1, 0.5, 1.0] {
            let ch = multi_qubit_ad_kraus(ChannelParams::new(gamma, n).map_err(err)?).map_err(err)?;
            let d = ch.trace_preserving_deviation();
            ensure(d <= 1e-12, format!("damping n = {n}, γ = {gamma}: {d:e}"))?;
            worst = worst.max(d);
        }
    }
    let mut worst_recovery: f64 = 0.0;
    for code in [code_4_2(), adcodes::example_code_8_12()] {
        for gamma in [0.01, 0.05, 0.1, 0.3] {
            let report = verify_recovery(&build_recovery(&code, gamma).map_err(err)?, 1e-10).map_err(err)?;
            ensure(
                report.passed(),
                format!("recovery n = {}, γ = {gamma}: {report:?}", code.n()),
            )?;
            worst_recovery = worst_recovery.max(report.gram_deviation).max(report.trace_deviation);
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "damping max dev {worst:.1e}, recovery max dev {worst_recovery:.1e}, {:.2?}",
        start.elapsed()
    ))
}

fn first_order() -> Check {
    let start = Instant::now();
    let mut seen = Vec::new();
    for (name, code) in [("(4,2)", code_4_2()), ("(8,12)", adcodes::example_code_8_12())] {
        let report = first_order_residuals(&code, &DEFAULT_RESIDUAL_GAMMAS).map_err(err)?;
        let a1 = report.max_abs_a1();
        ensure(a1 < FIRST_ORDER_THRESHOLD, format!("{name}: max |a1| = {a1:e}"))?;
        seen.push(format!("{name} {a1:.1e}"));
    }
    let report = first_order_residuals(&literal_six(), &DEFAULT_RESIDUAL_GAMMAS).map_err(err)?;
    let leak = report
        .entries
        .iter()
        .map(|e| e.a1.norm())
        .find(|a| (0.4..=0.6).contains(a))
        .ok_or_else(|| "literal set: no |a1| in [0.4, 0.6]".to_string())?;
    within(start, Duration::from_secs(120))?;
    Ok(format!(
        "max |a1|: {}; literal set leaks |a1| = {leak:.4}",
        seen.join(", ")
    ))
}

fn figure_shape() -> Check {
    let start = Instant::now();
    let code = adcodes::example_code_8_12();
    let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.01).collect();
    let curve = fidelity_curve(&code, &grid).map_err(err)?;
    ensure(
        (curve.f_code[0] - 1.0).abs() <= 1e-10,
        format!("F(0) = {}", curve.f_code[0]),
    )?;
    for (i, &g) in grid.iter().enumerate() {
        if (0.01 - 1e-12..=0.1 + 1e-12).contains(&g) {
            ensure(
                curve.f_code[i] > curve.f_bare[i],
                format!("γ = {g}: code {} <= bare {}", curve.f_code[i], curve.f_bare[i]),
            )?;
        }
    }
    let fine: Vec<f64> = (1..=50).map(|i| i as f64 * 1e-3).collect();
    let fit = fidelity_curve(&code, &fine)
        .map_err(err)?
        .deficit_fit(1e-3, 5e-2, 2)
        .map_err(err)?;
    ensure(fit.linear().abs() < 1e-3, format!("a1 = {}", fit.linear()))?;
    ensure(fit.quadratic() > 0.0, format!("a2 = {}", fit.quadratic()))?;
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "F(0) = {}, a1 = {:.2e}, a2 = {:.2e}, code beats 3 bare qubits on [0.01, 0.1]",
        curve.f_code[0],
        fit.linear(),
        fit.quadratic()
    ))
}

/// `diag(1, √(1-γ))` and `√γ |0><1|` tensored densely.
fn dense_damping(m: usize, gamma: f64) -> Vec<ComplexMatrix> {
    let e0 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - gamma).sqrt()]]);
    let e1 = ComplexMatrix::from_real_rows(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]]);
    let mut ops = vec![ComplexMatrix::identity(1)];
    for _ in 0..m {
        ops = ops
            .iter()
            .flat_map(|k| [k.kron(&e0).unwrap(), k.kron(&e1).unwrap()])
            .collect();
    }
    ops
}

fn oracles() -> Check {
    let start = Instant::now();
    let mut pairs = 0usize;
    for n in 2..=8 {
        for a in 0..1u64 << n {
            for b in 0..1u64 << n {
                if a == b {
                    continue;
                }
                let (u, v) = (CodeWord::new(a, n).unwrap(), CodeWord::new(b, n).unwrap());
                for mode in [ConflictMode::Strict, ConflictMode::Literal] {
                    ensure(
                        conflicts(u, v, mode).map_err(err)? == conflicts_by_enumeration(u, v, mode).map_err(err)?,
                        format!("{u} {v} {mode}"),
                    )?;
                    pairs += 1;
                }
            }
        }
    }

    let code = code_4_2();
    let mut proj_gap: f64 = 0.0;
    for gamma in [0.0, 0.01, 0.05, 0.1, 0.3, 0.6, 0.9] {
        let fast = code_fidelity(&code, gamma).map_err(err)?;
        let full_rho = DensityMatrix::normalized_projector(code_states(&code))
            .map_err(err)?
            .without_projector_flag();
        let cc = CompositeChannel::new(&code, gamma).map_err(err)?;
        let out = composite_apply(&cc, &full_rho).map_err(err)?;
        let full = uhlmann_fidelity(&full_rho, &out).map_err(err)?;
        proj_gap = proj_gap.max((fast - full).abs());
    }
    ensure(proj_gap <= 1e-9, format!("projector vs full gap {proj_gap:e}"))?;

    let mut bare_gap: f64 = 0.0;
    for m in 1..=3u32 {
        let dim = 1usize << m;
        let rho = ComplexMatrix::identity(dim).scale(c(1.0 / dim as f64, 0.0));
        for gamma in [0.0, 0.05, 0.2, 0.5, 0.9, 1.0] {
            let mut out = ComplexMatrix::zeros(dim, dim);
            for k in dense_damping(m as usize, gamma) {
                out = &out + &k.matmul(&rho).unwrap().matmul(&k.adjoint()).unwrap();
            }
            let sim = uhlmann_fidelity(
                &DensityMatrix::new(rho.clone()).map_err(err)?,
                &DensityMatrix::new(out).map_err(err)?,
            )
            .map_err(err)?;
            bare_gap = bare_gap.max((sim - bare_fidelity(m, gamma)).abs());
        }
    }
    ensure(bare_gap <= 1e-10, format!("bare closed form gap {bare_gap:e}"))?;
    within(start, Duration::from_secs(120))?;
    Ok(format!(
        "{pairs} conflict checks agree, projector gap {proj_gap:.1e}, bare gap {bare_gap:.1e}"
    ))
}

fn hamming_bound() -> Check {
    ensure(quantum_hamming_bound(5, 1, 1, 3), "(5,1,1,3) violates the bound")?;
    ensure(!quantum_hamming_bound(4, 1, 1, 3), "(4,1,1,3) satisfies the bound")?;
    let (n, k, t, a) = (5u64, 1u32, 1u64, 3u64);
    let mut volume = 1u64;
    let mut binom = 1u64;
    for j in 1..=t {
        binom = binom * (n + 1 - j) / j;
        volume += binom * a.pow(j as u32);
    }
    ensure(volume << k == 1 << n, "(5,1,1,3) not tight")?;
    Ok("holds with equality at n = 5, fails at n = 4".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("(8,12) example validity", example_validity),
        ("exact search lower bounds", exact_lower_bounds),
        ("greedy scaling", greedy_scaling),
        ("CPTP checks", cptp),
        ("first-order correction", first_order),
        ("fidelity curve shape", figure_shape),
        ("oracle equivalences", oracles),
        ("Hamming bound fixture", hamming_bound),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
