use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use circlecalc::algebra::Generators;
use circlecalc::fourier::{digit_depth, Angle, MeasureExpr};
use circlecalc::kappa::{growth_class_check, CantorDesc, FiniteCircleSet, Kappa};
use circlecalc::mass::{radial_atom, MassError, MassFunction};
use circlecalc::series::{first_non_integral, C64};
use circlecalc::witt::{identity_suite, resolve_idempotent, WittVec};

#[derive(Parser)]
#[command(name = "circlecalc", version, about = "Measures, premeasures and Witt vectors on the circle")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Truncation order: window half-width or series order.
    #[arg(long, global = true, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    order: u64,
    /// Absolute tolerance for certified quantities.
    #[arg(long, global = true, default_value_t = 1e-12, value_parser = positive)]
    tol: f64,
    /// Pairwise coprime generators of the monoid, e.g. 2,3.
    #[arg(long, global = true, default_value = "2,3", value_parser = parse_gens)]
    gens: Generators,
    /// Entropy function: gamma=<g> or power=<a>.
    #[arg(long, global = true, default_value = "gamma=1")]
    kappa: Kappa,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fourier window c_{-K}..c_K of a measure as CSV (nu, re, im, err).
    Fourier {
        /// Measure JSON, inline or a file path.
        input: String,
    },
    /// Invariance and functional-equation checks under z -> z^N, as JSON.
    Check {
        /// {"measure": ...} or {"mass": ...}, inline or a file path.
        input: String,
        #[arg(long, default_value_t = 2)]
        n: u64,
    },
    /// Entropy of {"points": [turns...]} or {"cantor": {"base", "digits"}}.
    Entropy { input: String },
    #[command(subcommand)]
    Witt(WittCmd),
    #[command(subcommand)]
    Trace(TraceCmd),
}

#[derive(Subcommand)]
enum WittCmd {
    /// Coefficients and ghost components of E_N as CSV.
    ArtinHasse {
        #[arg(long, default_value_t = 2)]
        n: u64,
    },
    /// Ring and Frobenius/Verschiebung identities on random vectors.
    Suite {
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Integrality of E_p at p for each generator p.
    Integrality,
    /// Which of E_N and its Witt negative is idempotent.
    Idempotent {
        #[arg(long, default_value_t = 2)]
        n: u64,
    },
}

#[derive(Subcommand)]
enum TraceCmd {
    /// (r, (1 - r)/2 Re h(r eta), err) for r = 1 - 2^-k.
    Radial {
        input: String,
        /// Direction as p/q turns or radians.
        #[arg(long)]
        angle: String,
        #[arg(long, default_value_t = 4)]
        kmin: u32,
        #[arg(long, default_value_t = 16)]
        kmax: u32,
    },
    /// (r, sup Re h, err, ratio) with ratio = sup / |log(1 - r)|^gamma.
    Growth {
        #[arg(long, value_enum, default_value_t = GrowthKind::Linear)]
        kind: GrowthKind,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        #[arg(long, default_value_t = 6)]
        kmin: u32,
        #[arg(long, default_value_t = 12)]
        kmax: u32,
        #[arg(long, default_value_t = 2048)]
        thetas: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GrowthKind {
    /// h(z) = sum_{N in S} 2 z^N, from alpha = exp(2z).
    Linear,
    /// Herglotz transform of the lacunary premeasure for the first generator.
    Lacunary,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum Object {
    Measure(MeasureExpr),
    Mass(MassFunction),
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum EntropyInput {
    Points(Vec<f64>),
    Cantor { base: u32, digits: Vec<u32> },
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be positive".into())
    }
}

fn parse_gens(s: &str) -> Result<Generators, String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Generators::new(&v).map_err(|e| e.to_string())
}

fn parse_angle(s: &str) -> Result<Angle> {
    if s.contains('/') {
        let q = s.parse().map_err(|e| anyhow!("angle {s:?}: {e:?}"))?;
        Ok(Angle::Turns(q))
    } else {
        Ok(Angle::Radians(s.parse().with_context(|| format!("angle {s:?}"))?))
    }
}

/// Inline JSON when the argument starts with `{` or `[`, a file path
/// otherwise. Parse errors carry serde's line and column.
fn load<T: for<'de> Deserialize<'de>>(arg: &str) -> Result<T> {
    let trimmed = arg.trim_start();
    let (text, origin) = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        (arg.to_string(), "inline input".to_string())
    } else {
        (fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?, arg.to_string())
    };
    serde_json::from_str(&text).with_context(|| format!("{origin}: invalid JSON"))
}

struct Output(Box<dyn Write>);

impl Output {
    fn open(path: &Option<PathBuf>) -> Result<Output> {
        Ok(Output(match path {
            Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
            None => Box::new(io::stdout()),
        }))
    }

    fn json<T: Serialize>(&mut self, v: &T) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.0, v)?;
        writeln!(self.0)?;
        Ok(())
    }

    fn csv(self) -> csv::Writer<Box<dyn Write>> {
        csv::Writer::from_writer(self.0)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` when a selected check fails.
fn run(cli: Cli) -> Result<bool> {
    let c = &cli.common;
    let order = c.order as usize;
    match &cli.cmd {
        Cmd::Fourier { input } => {
            let mu: MeasureExpr = load(input)?;
            mu.validate()?;
            report_depths(&mu, order, c.tol);
            let w = mu.fourier(order, c.tol)?;
            let mut out = Output::open(&c.out)?.csv();
            out.write_record(["nu", "re", "im", "err"])?;
            for (n, re, im, err) in w.rows() {
                // Adding zero turns -0.0 into 0.0.
                out.serialize((n, re + 0.0, im + 0.0, err))?;
            }
            out.flush()?;
            Ok(true)
        }
        Cmd::Check { input, n } => check(load(input)?, *n, order, c),
        Cmd::Entropy { input } => entropy(load(input)?, c),
        Cmd::Witt(w) => witt(w, order, c),
        Cmd::Trace(t) => trace(t, c),
    }
}

fn report_depths(mu: &MeasureExpr, order: usize, tol: f64) {
    match mu {
        MeasureExpr::DigitBernoulli { base, weights } => {
            let (d, b) = digit_depth(*base, weights, order, tol);
            eprintln!("digit measure base {base}: depth {d}, truncation bound {b:e}");
        }
        MeasureExpr::Rotate { inner, .. } => report_depths(inner, order, tol),
        MeasureExpr::Push { n, inner } => report_depths(inner, order * *n as usize, tol),
        MeasureExpr::Pull { n, inner } => report_depths(inner, order / *n as usize, tol),
        MeasureExpr::LinComb { terms } => terms.iter().for_each(|(_, m)| report_depths(m, order, tol)),
        _ => {}
    }
}

#[derive(Serialize)]
struct Verdict {
    name: &'static str,
    n: u64,
    max_residual: f64,
    error_bound: f64,
    pass: bool,
}

fn check(obj: Object, n: u64, order: usize, c: &Common) -> Result<bool> {
    let mut verdicts = Vec::new();
    match obj {
        Object::Measure(mu) => {
            mu.validate()?;
            let inv = mu.invariance_check(n, order, c.tol)?;
            verdicts.push(Verdict {
                name: "invariance",
                n,
                max_residual: inv.max_deviation,
                error_bound: inv.error_bound,
                pass: inv.pass,
            });
            let (_, f) = mu.f_mu_series(order, c.tol)?;
            let r = f.feq_residual(n)?;
            // Coefficient errors of f are at most the window errors times the
            // series' own size, which stays below 1 for positive measures.
            let bound = c.tol * (order as f64 + 1.0);
            verdicts.push(Verdict { name: "functional_equation", n, max_residual: r, error_bound: bound, pass: r <= bound });
        }
        Object::Mass(m) => {
            let grid: Vec<f64> = (0..512).map(|j| std::f64::consts::TAU * (j as f64 + 0.5) / 512.0).collect();
            let fe = m.functional_eq_check(n, &grid, c.tol.max(1e-12))?;
            verdicts.push(Verdict {
                name: "mass_functional_equation",
                n,
                max_residual: fe.max_residual,
                error_bound: fe.error_bound,
                pass: fe.pass,
            });
        }
    }
    let pass = verdicts.iter().all(|v| v.pass);
    Output::open(&c.out)?.json(&json!({ "checks": verdicts, "pass": pass }))?;
    Ok(pass)
}

fn entropy(input: EntropyInput, c: &Common) -> Result<bool> {
    let v = match input {
        EntropyInput::Points(p) => {
            let set = FiniteCircleSet::new(p);
            json!({
                "kind": "finite",
                "kappa": c.kappa.to_string(),
                "points": set.len(),
                "value": set.entropy(&c.kappa),
                "error_bound": 0.0,
            })
        }
        EntropyInput::Cantor { base, digits } => {
            let e = CantorDesc::new(base, digits)?.entropy(&c.kappa, c.tol)?;
            json!({
                "kind": "cantor",
                "kappa": c.kappa.to_string(),
                "value": e.value,
                "error_bound": e.error_bound,
                "levels": e.levels,
                "carleson": e.carleson,
            })
        }
    };
    Output::open(&c.out)?.json(&v)?;
    Ok(true)
}

fn witt(cmd: &WittCmd, order: usize, c: &Common) -> Result<bool> {
    match cmd {
        WittCmd::ArtinHasse { n } => {
            if *n < 2 {
                bail!("N must be at least 2");
            }
            let e = WittVec::artin_hasse(*n, order);
            let coeffs = e.series().as_rational().expect("rational");
            let ghost = e.ghost();
            let ghost = ghost.series().as_rational().expect("rational");
            let mut out = Output::open(&c.out)?.csv();
            out.write_record(["n", "coefficient", "ghost", "integral"])?;
            for (i, (a, g)) in coeffs.iter().zip(ghost).enumerate() {
                let integral = first_non_integral(std::slice::from_ref(a), *n).is_none();
                out.serialize((i, a.re.to_string(), g.re.to_string(), integral))?;
            }
            out.flush()?;
            Ok(true)
        }
        WittCmd::Suite { samples } => {
            let r = identity_suite(order, *samples, c.seed);
            Output::open(&c.out)?.json(&r)?;
            Ok(r.pass)
        }
        WittCmd::Integrality => {
            let reports: Vec<_> =
                c.gens.as_slice().iter().map(|&p| WittVec::artin_hasse(p, order).p_integral_check(p)).collect();
            let pass = reports.iter().all(|r| r.pass);
            Output::open(&c.out)?.json(&json!({ "reports": reports, "pass": pass }))?;
            Ok(pass)
        }
        WittCmd::Idempotent { n } => {
            if *n < 2 {
                bail!("N must be at least 2");
            }
            let r = resolve_idempotent(*n, order);
            let pass = r.e_is_idempotent || r.neg_e_is_idempotent;
            Output::open(&c.out)?.json(&r)?;
            Ok(pass)
        }
    }
}

fn trace(cmd: &TraceCmd, c: &Common) -> Result<bool> {
    match cmd {
        TraceCmd::Radial { input, angle, kmin, kmax } => {
            if kmin > kmax || *kmax > 40 {
                bail!("need kmin <= kmax <= 40");
            }
            let eta = parse_angle(angle)?;
            let obj: Object = load(input)?;
            let report = match &obj {
                Object::Measure(mu) => {
                    mu.validate()?;
                    radial_atom(|z, tol| mu.eval_herglotz(z, tol).map_err(MassError::from), &eta, *kmin..=*kmax)?
                }
                Object::Mass(m) => radial_atom(|z, tol| m.eval_herglotz(z, tol), &eta, *kmin..=*kmax)?,
            };
            let mut out = Output::open(&c.out)?.csv();
            out.write_record(["r", "value", "err"])?;
            for ((r, v), e) in report.radii.iter().zip(&report.values).zip(&report.errors) {
                out.serialize((r, v, e))?;
            }
            out.flush()?;
            if let Some(l) = report.limit {
                eprintln!("limit {l} ± {:e}", report.limit_error);
            }
            Ok(true)
        }
        TraceCmd::Growth { kind, gamma, kmin, kmax, thetas } => {
            if kmin > kmax || *kmax > 40 {
                bail!("need kmin <= kmax <= 40");
            }
            let radii: Vec<f64> = (*kmin..=*kmax).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect();
            let profile = match kind {
                GrowthKind::Linear => {
                    let h = monoid_sum(&c.gens, *radii.last().unwrap(), c.tol);
                    growth_class_check(h, *gamma, &radii, *thetas)
                }
                GrowthKind::Lacunary => {
                    let m = MassFunction::artin_hasse(c.gens.as_slice()[0]);
                    growth_class_check(|z| m.eval_herglotz(z, c.tol), *gamma, &radii, *thetas)
                }
            };
            let mut out = Output::open(&c.out)?.csv();
            out.write_record(["r", "sup_re", "err", "ratio"])?;
            for row in &profile.rows {
                out.serialize((row.r, row.sup_re, row.error_bound, row.ratio))?;
            }
            out.flush()?;
            if let Some(r) = profile.failed_at {
                bail!("evaluation failed at r = {r}");
            }
            Ok(true)
        }
    }
}

/// `z -> sum_{N in S} 2 z^N` truncated where the tail drops below `tol`
/// on `|z| <= rmax`.
fn monoid_sum(gens: &Generators, rmax: f64, tol: f64) -> impl Fn(C64) -> Result<(C64, f64)> {
    let cutoff = ((tol * (1.0 - rmax) / 2.0).ln() / rmax.ln()).ceil().max(1.0) as u64;
    let elems = gens.enumerate(cutoff);
    move |z: C64| {
        let r = z.norm();
        let v: C64 = elems.iter().map(|&n| z.powu(n as u32) * 2.0).sum();
        let tail = 2.0 * r.powf(cutoff as f64 + 1.0) / (1.0 - r);
        Ok((v, tail + f64::EPSILON * elems.len() as f64))
    }
}
