//! End-to-end evaluation of a code: encode (identity injection into the code
//! space), damp, recover.
//!
//! The fidelity figure of merit is the Uhlmann fidelity
//! `tr √(√ρ σ √ρ)` between the input `ρ = P/k` and the output `σ`. First-order
//! correctness is checked numerically: for every pair of code states the
//! deviation of the composite channel from the identity is sampled at small
//! `γ` and fitted by a polynomial through the origin; the linear coefficient
//! must vanish.

use std::fmt::Write as _;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{multi_qubit_ad_kraus, ChannelParams, KrausChannel};
use crate::codeset::{validate_code_set, CodeSet, CodeWord};
use crate::error::{Error, Result};
use crate::linalg::{c, uhlmann_fidelity, ComplexMatrix, DensityMatrix, C64};
use crate::recovery::{build_recovery, RecoveryChannel};

/// Threshold on the linear residual coefficient for a code to count as
/// correcting every first-order error.
pub const FIRST_ORDER_THRESHOLD: f64 = 1e-6;

/// Default sample points for residual fits.
pub const DEFAULT_RESIDUAL_GAMMAS: [f64; 4] = [1e-3, 2e-3, 4e-3, 8e-3];

/// Default polynomial degree of the residual fit.
pub const DEFAULT_RESIDUAL_DEGREE: usize = 4;

/// Code states `(|u> + |ū>)/√2` as rows, in ascending representative order.
pub fn code_states(code: &CodeSet) -> ComplexMatrix {
    let pairs = code.pairs();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut b = ComplexMatrix::zeros(pairs.len(), 1usize << code.n());
    for (i, r) in pairs.iter().enumerate() {
        b[(i, r.index())] = c(h, 0.0);
        b[(i, r.complement().index())] = c(h, 0.0);
    }
    b
}

/// `R ∘ E(γ)` for one code.
#[derive(Clone, Debug)]
pub struct CompositeChannel {
    code: CodeSet,
    gamma: f64,
    damping: KrausChannel,
    recovery: RecoveryChannel,
    recovery_kraus: KrausChannel,
}

impl CompositeChannel {
    pub fn new(code: &CodeSet, gamma: f64) -> Result<Self> {
        let report = validate_code_set(code);
        if !report.is_valid() {
            return Err(Error::InvalidCode(report.to_string()));
        }
        let damping = multi_qubit_ad_kraus(ChannelParams::new(gamma, code.n())?)?;
        let recovery = build_recovery(code, gamma)?;
        let recovery_kraus = recovery.to_kraus()?;
        Ok(Self {
            code: code.clone(),
            gamma,
            damping,
            recovery,
            recovery_kraus,
        })
    }

    pub fn code(&self) -> &CodeSet {
        &self.code
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn damping(&self) -> &KrausChannel {
        &self.damping
    }

    pub fn recovery(&self) -> &RecoveryChannel {
        &self.recovery
    }

    /// The composite map on an arbitrary operator.
    pub fn apply_operator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let damped = self.damping.apply_to_operator(x)?;
        self.recovery_kraus.apply_to_operator(&damped)
    }
}

pub fn composite_apply(cc: &CompositeChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let b = code_states(&cc.code);
    let captured = b.matmul(rho.matrix())?.matmul(&b.adjoint())?.trace().re;
    if (captured - 1.0).abs() > 1e-9 {
        warn!("input state has weight {captured} on the code space");
    }
    DensityMatrix::new_unchecked_positivity(cc.apply_operator(rho.matrix())?)
}

/// Fidelity between `P/k` and its image, through the projector reduction.
pub fn code_fidelity(code: &CodeSet, gamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Gamma(gamma));
    }
    let cc = CompositeChannel::new(code, gamma)?;
    let rho = DensityMatrix::normalized_projector(code_states(code))?;
    let out = composite_apply(&cc, &rho)?;
    uhlmann_fidelity(&rho, &out)
}

/// Fidelity of `m` unprotected qubits in `I/2^m`:
/// `((√(1+γ) + √(1-γ)) / 2)^m`.
pub fn bare_fidelity(m: u32, gamma: f64) -> f64 {
    (((1.0 + gamma).sqrt() + (1.0 - gamma).sqrt()) / 2.0).powi(m as i32)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityCurve {
    pub gammas: Vec<f64>,
    pub f_code: Vec<f64>,
    pub f_bare: Vec<f64>,
    /// `floor(log2 k)`.
    pub bare_qubit_count: u32,
}

/// Evaluates the code (rebuilding the recovery at every `γ`) and the bare
/// baseline on `grid`, which must be ascending within `[0, 1)`.
pub fn fidelity_curve(code: &CodeSet, grid: &[f64]) -> Result<FidelityCurve> {
    if grid.iter().any(|g| !(0.0..1.0).contains(g)) {
        let bad = grid
            .iter()
            .copied()
            .find(|g| !(0.0..1.0).contains(g))
            .unwrap_or(f64::NAN);
        return Err(Error::Gamma(bad));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("gamma grid must be strictly ascending".into()));
    }
    let k = code.k();
    let m = if k > 0 { k.ilog2() } else { 0 };
    let f_code = grid
        .par_iter()
        .map(|&g| code_fidelity(code, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityCurve {
        gammas: grid.to_vec(),
        f_bare: grid.iter().map(|&g| bare_fidelity(m, g)).collect(),
        f_code,
        bare_qubit_count: m,
    })
}

/// Formats with 12 significant digits in plain decimal notation.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

impl FidelityCurve {
    /// `gamma,f_code,f_bare`, one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,f_code,f_bare\n");
        for i in 0..self.gammas.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                format_sig12(self.gammas[i]),
                format_sig12(self.f_code[i]),
                format_sig12(self.f_bare[i])
            );
        }
        out
    }

    /// Fit of `1 - F_code` over grid points with `lo <= γ <= hi`.
    pub fn deficit_fit(&self, lo: f64, hi: f64, degree: usize) -> Result<PolyFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .gammas
            .iter()
            .zip(&self.f_code)
            .filter(|(g, _)| (lo..=hi).contains(*g))
            .map(|(&g, &f)| (g, 1.0 - f))
            .unzip();
        fit_through_origin(&xs, &ys, degree)
    }

    /// Line plot of both curves.
    pub fn to_svg(&self, title: &str) -> String {
        const W: f64 = 640.0;
        const H: f64 = 420.0;
        const L: f64 = 70.0;
        const R: f64 = 20.0;
        const T: f64 = 40.0;
        const B: f64 = 50.0;
        let gmax = self.gammas.last().copied().filter(|&g| g > 0.0).unwrap_or(1.0);
        let fmin = self.f_code.iter().chain(&self.f_bare).copied().fold(1.0f64, f64::min);
        let ymin = ((fmin * 20.0).floor() / 20.0).min(0.95);
        let px = |g: f64| L + (g / gmax) * (W - L - R);
        let py = |f: f64| T + (1.0 - (f - ymin) / (1.0 - ymin)) * (H - T - B);
        let poly = |ys: &[f64]| {
            self.gammas
                .iter()
                .zip(ys)
                .map(|(&g, &f)| format!("{:.2},{:.2}", px(g), py(f)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{L}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
            H - B,
            W - R,
            H - B
        );
        let _ = writeln!(
            s,
            r#"<line x1="{L}" y1="{T}" x2="{L}" y2="{:.2}" stroke="black"/>"#,
            H - B
        );
        for i in 0..=5 {
            let g = gmax * f64::from(i) / 5.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{g:.3}</text>"#,
                px(g),
                H - B + 18.0
            );
            let f = ymin + (1.0 - ymin) * f64::from(i) / 5.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{f:.3}</text>"#,
                L - 6.0,
                py(f) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">gamma</text>"#,
            (L + W - R) / 2.0,
            H - 12.0
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">fidelity</text>"#,
            (T + H - B) / 2.0,
            (T + H - B) / 2.0
        );
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="black" stroke-width="1.5" points="{}"/>"#,
            poly(&self.f_code)
        );
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="black" stroke-width="1.5" stroke-dasharray="6 4" points="{}"/>"#,
            poly(&self.f_bare)
        );
        let lx = W - R - 170.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
            T + 15.0,
            lx + 30.0,
            T + 15.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">code</text>"#, lx + 36.0, T + 19.0);
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
            T + 35.0,
            lx + 30.0,
            T + 35.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">bare {} qubits</text>"#,
            lx + 36.0,
            T + 39.0,
            self.bare_qubit_count
        );
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Least-squares fit `y ≈ Σ_{p=1..degree} coeffs[p-1] x^p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyFit {
    pub coeffs: Vec<f64>,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

impl PolyFit {
    pub fn linear(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn quadratic(&self) -> f64 {
        self.coeffs.get(1).copied().unwrap_or(0.0)
    }
}

pub fn fit_through_origin(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolyFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(xs.len(), ys.len()));
    }
    if degree == 0 || xs.len() < degree {
        return Err(Error::Config(format!(
            "fit of degree {degree} needs at least {degree} samples, got {}",
            xs.len()
        )));
    }
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::Config("fit needs a nonzero sample".into()));
    }
    let cols: Vec<Vec<f64>> = (1..=degree)
        .map(|p| xs.iter().map(|x| (x / scale).powi(p as i32)).collect())
        .collect();
    // Modified Gram-Schmidt QR of the design matrix.
    let mut q = cols.clone();
    let mut r = vec![vec![0.0; degree]; degree];
    for j in 0..degree {
        for i in 0..j {
            let proj: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            r[i][j] = proj;
            let qi = q[i].clone();
            for (x, a) in q[j].iter_mut().zip(&qi) {
                *x -= proj * a;
            }
        }
        let norm = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Config("fit samples are degenerate".into()));
        }
        r[j][j] = norm;
        for x in q[j].iter_mut() {
            *x /= norm;
        }
    }
    let qty: Vec<f64> = q
        .iter()
        .map(|col| col.iter().zip(ys).map(|(a, b)| a * b).sum())
        .collect();
    let mut scaled = vec![0.0; degree];
    for i in (0..degree).rev() {
        let tail: f64 = (i + 1..degree).map(|j| r[i][j] * scaled[j]).sum();
        scaled[i] = (qty[i] - tail) / r[i][i];
    }
    let coeffs: Vec<f64> = scaled
        .iter()
        .enumerate()
        .map(|(i, v)| v / scale.powi(i as i32 + 1))
        .collect();
    let sq: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let model: f64 = coeffs.iter().enumerate().map(|(i, a)| a * x.powi(i as i32 + 1)).sum();
            (y - model).powi(2)
        })
        .sum();
    Ok(PolyFit {
        coeffs,
        rms_residual: (sq / xs.len() as f64).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualConfig {
    pub gammas: Vec<f64>,
    pub degree: usize,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        Self {
            gammas: DEFAULT_RESIDUAL_GAMMAS.to_vec(),
            degree: DEFAULT_RESIDUAL_DEGREE,
        }
    }
}

/// Fitted first-order behaviour of `C(|w_i><w_j|)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairResidual {
    pub i: CodeWord,
    pub j: CodeWord,
    /// Linear coefficient of `1 - <w_i| C(|w_i><w_j|) |w_j>`.
    #[serde(serialize_with = "ser_complex")]
    pub a1: C64,
    /// Quadratic coefficient of the same deviation.
    #[serde(serialize_with = "ser_complex")]
    pub a2: C64,
    pub rms_residual: f64,
    /// For `i == j`: linear coefficient of the population moved to each
    /// other code state `w_l`.
    pub leakage: Vec<(CodeWord, f64)>,
}

fn ser_complex<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl PairResidual {
    /// Largest linear coefficient in this entry (deviation or leakage).
    pub fn max_abs_a1(&self) -> f64 {
        self.leakage.iter().map(|(_, a)| a.abs()).fold(self.a1.norm(), f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub gammas: Vec<f64>,
    pub degree: usize,
    pub entries: Vec<PairResidual>,
}

impl ResidualReport {
    pub fn max_abs_a1(&self) -> f64 {
        self.entries.iter().map(PairResidual::max_abs_a1).fold(0.0, f64::max)
    }

    pub fn corrects_first_order(&self, threshold: f64) -> bool {
        self.max_abs_a1() < threshold
    }

    /// Entry with the largest linear coefficient.
    pub fn worst(&self) -> Option<&PairResidual> {
        self.entries
            .iter()
            .max_by(|a, b| a.max_abs_a1().total_cmp(&b.max_abs_a1()))
    }
}

/// Residual fits with the default polynomial degree.
pub fn first_order_residuals(code: &CodeSet, gammas: &[f64]) -> Result<ResidualReport> {
    first_order_residuals_with(
        code,
        &ResidualConfig {
            gammas: gammas.to_vec(),
            degree: DEFAULT_RESIDUAL_DEGREE.min(gammas.len()),
        },
    )
}

pub fn first_order_residuals_with(code: &CodeSet, config: &ResidualConfig) -> Result<ResidualReport> {
    if config.gammas.iter().any(|&g| !(g > 0.0 && g < 1.0)) {
        return Err(Error::Config("residual samples must lie in (0, 1)".into()));
    }
    let pairs = code.pairs();
    let k = pairs.len();
    let b = code_states(code);
    let bt = b.adjoint();
    let channels = config
        .gammas
        .iter()
        .map(|&g| CompositeChannel::new(code, g))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    let entries = jobs
        .par_iter()
        .map(|&(i, j)| {
            let wi: Vec<C64> = b.row(i).to_vec();
            let wj: Vec<C64> = b.row(j).to_vec();
            let unit = ComplexMatrix::outer(&wi, &wj);
            // blocks[s] = <w_l| C_s(|w_i><w_j|) |w_m>
            let blocks = channels
                .iter()
                .map(|cc| {
                    let out = cc.apply_operator(&unit)?;
                    b.matmul(&out)?.matmul(&bt)
                })
                .collect::<Result<Vec<_>>>()?;
            debug_assert_eq!(blocks[0].rows(), k);
            let dev: Vec<C64> = blocks.iter().map(|blk| c(1.0, 0.0) - blk[(i, j)]).collect();
            let re: Vec<f64> = dev.iter().map(|z| z.re).collect();
            let im: Vec<f64> = dev.iter().map(|z| z.im).collect();
            let fit_re = fit_through_origin(&config.gammas, &re, config.degree)?;
            let fit_im = fit_through_origin(&config.gammas, &im, config.degree)?;
            let mut leakage = Vec::new();
            if i == j {
                for l in (0..k).filter(|&l| l != i) {
                    let pops: Vec<f64> = blocks.iter().map(|blk| blk[(l, l)].re).collect();
                    leakage.push((
                        pairs[l],
                        fit_through_origin(&config.gammas, &pops, config.degree)?.linear(),
                    ));
                }
            }
            Ok(PairResidual {
                i: pairs[i],
                j: pairs[j],
                a1: c(fit_re.linear(), fit_im.linear()),
                a2: c(fit_re.quadratic(), fit_im.quadratic()),
                rms_residual: fit_re.rms_residual.hypot(fit_im.rms_residual),
                leakage,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport {
        gammas: config.gammas.clone(),
        degree: config.degree,
        entries,
    })
}
