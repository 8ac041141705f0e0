//! Batch front-end for the library: every subcommand is a pure function of
//! its arguments and `--seed`, so two runs with the same argv produce
//! byte-identical output.  JSON is the canonical format; `--format csv`
//! projects tabular results.
//!
//! Exit codes: 0 success, 2 validation error, 3 numeric failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fgshift::automorphism::{build_weakmix_pair, product_measure_check, LocalAutomorphism};
use fgshift::beta::{
    beta_closed, beta_limit_exact, beta_limit_mc_workers, pressure_single_coordinate,
    restricted_growth_rate, BetaEvaluation, McEstimate,
};
use fgshift::cocycle::{CocycleContext, CocycleElement};
use fgshift::coding::{FinitaryCode, StatsMode, StatsParams};
use fgshift::free_group::{
    ball, ball_cardinality, check_complement_enumeration_bound, check_wa_enumeration_bound,
    enumerate_wa, in_wa,
};
use fgshift::prob::sampler::{derive_seed, mix64};
use fgshift::prob::{Configuration, Pattern, ProbVector};
use fgshift::recovery::{permutation_equivalent, power_sums, recover_vector, PowerSums};
use fgshift::{Error, GroupElement};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fgshift",
    version,
    about = "Bernoulli shifts over free groups: enumeration, codings, cocycles, and the beta invariant",
    after_help = "CSV column schemas (v1):\n\
      ball:            word,length\n\
      enum-wa:         k,word,length\n\
      check-bounds:    ell,generator,n,wa_bound_ok,complement_bound_ok\n\
      code-stats:      n,tail_n\n\
      beta:            t,closed,limit_n,mc,stderr\n\
      restricted-beta: t,n,value,unrestricted,log_gap\n\
      pressure:        t,pressure,exp_pressure,beta\n\
      power-sums:      k,p_k\n\
      recover:         index,weight\n\
    Exit codes: 0 success, 2 validation error, 3 numeric failure."
)]
struct Cli {
    /// Output format (JSON is canonical, CSV a projection)
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Base seed for every randomized quantity
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cardinality cap guarding exponential enumerations
    #[arg(long, global = true, default_value_t = fgshift::DEFAULT_CARDINALITY_CAP)]
    cap: u64,
    /// Worker threads for Monte Carlo subcommands
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the ball B(r) and check its cardinality against the closed form
    Ball {
        #[arg(long)]
        ell: u32,
        #[arg(long)]
        r: u32,
        /// Include the elements themselves in the output
        #[arg(long)]
        list: bool,
    },
    /// First n elements of W_a in (length, lex) order
    EnumWa {
        #[arg(long)]
        ell: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        gen: u8,
    },
    /// Check the enumeration bounds for W_a and its complement
    CheckBounds {
        #[arg(long)]
        ell: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        gen: u8,
    },
    /// Code-length statistics for a finitary code
    CodeStats {
        /// Code JSON file
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        p: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Horizon for truncated m_phi / a_phi histograms (Monte Carlo only)
        #[arg(long)]
        horizon: Option<u32>,
        #[arg(long, default_value_t = 1)]
        gen: u8,
    },
    /// Randomized check of the cocycle equation and the conjugation decomposition
    CocycleCheck {
        #[arg(long)]
        p: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        gen: u8,
    },
    /// Exact weak-mixing product identity on random cylinder pairs
    WeakmixCheck {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        ell: u32,
        #[arg(long, default_value_t = 1)]
        inner: u32,
        #[arg(long, default_value_t = 2)]
        outer: u32,
        #[arg(long, default_value_t = 100)]
        pairs: u32,
        #[arg(long, default_value_t = 1)]
        gen: u8,
    },
    /// The beta function: closed form, exact limit, and Monte Carlo
    Beta {
        #[arg(long)]
        p: PathBuf,
        /// Comma-separated evaluation points
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        t: Vec<f64>,
        /// Closed form only (default when no other route is selected)
        #[arg(long)]
        closed: bool,
        /// Also evaluate the exact limit formula at this n
        #[arg(long)]
        limit: Option<u32>,
        /// Also run the Monte Carlo estimator
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 8)]
        n: u32,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        gen: u8,
    },
    /// Growth rate of the integral restricted to D ∩ a^n D
    RestrictedBeta {
        #[arg(long)]
        p: PathBuf,
        /// Pattern JSON file for the restriction D on the a-line (omit for no restriction)
        #[arg(long)]
        d: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long, default_value_t = 1)]
        gen: u8,
    },
    /// Single-coordinate pressure, with exp(pressure) = beta as an identity
    Pressure {
        #[arg(long)]
        p: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        t: Vec<f64>,
    },
    /// Power sums p_k of a vector
    PowerSums {
        #[arg(long)]
        p: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: usize,
    },
    /// Recover a vector from its power sums
    Recover {
        /// Comma-separated power sums p_1,...,p_K
        #[arg(long, value_delimiter = ',', conflicts_with = "file")]
        power_sums: Option<Vec<f64>>,
        /// JSON file {"power_sums":[...],"m":k}
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Decide whether two vectors are permutation-equivalent via the beta function
    Distinguish {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        /// Grid of t values to compare on
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t: Option<Vec<f64>>,
    },
    /// Full positive + negative instance of the invariance check
    EndToEnd {
        #[arg(long)]
        p: PathBuf,
        /// 1-based permutation of the entries, e.g. "2,3,1"
        #[arg(long, value_delimiter = ',', required = true)]
        perm: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1)]
        gen: u8,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::InconsistentPowerSums(_) | Error::NoConvergence { .. } => {
                Failure::numeric(err.to_string())
            }
            _ => Failure::validation(err.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            println!("{output}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &PathBuf, what: &str) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read {what} file {path:?}: {e}")))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::validation(format!("cannot parse {what} file {path:?}: {e}")))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output")
}

// Deterministic generator for the randomized check subcommands.
struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(mix64(seed ^ 0xC11A_B8E5_D00D_FEED))
    }

    fn next(&mut self) -> u64 {
        self.0 = mix64(self.0.wrapping_add(0x9E37_79B9_7F4A_7C15));
        self.0
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Ball { ell, r, list } => cmd_ball(cli, *ell, *r, *list),
        Command::EnumWa { ell, n, gen } => cmd_enum_wa(cli, *ell, *n, *gen),
        Command::CheckBounds { ell, n, gen } => cmd_check_bounds(cli, *ell, *n, *gen),
        Command::CodeStats {
            code,
            p,
            mode,
            samples,
            horizon,
            gen,
        } => cmd_code_stats(cli, code, p, *mode, *samples, *horizon, *gen),
        Command::CocycleCheck { p, trials, gen } => cmd_cocycle_check(cli, p, *trials, *gen),
        Command::WeakmixCheck {
            p,
            ell,
            inner,
            outer,
            pairs,
            gen,
        } => cmd_weakmix_check(cli, p, *ell, *inner, *outer, *pairs, *gen),
        Command::Beta {
            p,
            t,
            closed,
            limit,
            mc,
            n,
            samples,
            gen,
        } => cmd_beta(cli, p, t, *closed, *limit, *mc, *n, *samples, *gen),
        Command::RestrictedBeta { p, d, t, n, gen } => cmd_restricted(cli, p, d.as_ref(), t, n, *gen),
        Command::Pressure { p, t } => cmd_pressure(cli, p, t),
        Command::PowerSums { p, k } => cmd_power_sums(cli, p, *k),
        Command::Recover {
            power_sums,
            file,
            m,
        } => cmd_recover(cli, power_sums.as_deref(), file.as_ref(), *m),
        Command::Distinguish { p, q, t } => cmd_distinguish(cli, p, q, t.as_deref()),
        Command::EndToEnd {
            p,
            perm,
            samples,
            t,
            gen,
        } => cmd_end_to_end(cli, p, perm, *samples, t.as_deref(), *gen),
    }
}

#[derive(Serialize)]
struct BallReport {
    ell: u32,
    radius: u32,
    cardinality: u64,
    closed_form: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    elements: Option<Vec<String>>,
}

fn cmd_ball(cli: &Cli, ell: u32, r: u32, list: bool) -> Result<String, Failure> {
    if ell == 0 {
        return Err(Failure::validation("ell must be at least 1"));
    }
    let b = ball(ell, r, cli.cap)?;
    let report = BallReport {
        ell,
        radius: r,
        cardinality: b.cardinality() as u64,
        closed_form: ball_cardinality(ell, r)
            .ok_or_else(|| Failure::validation("ball cardinality overflows"))? as u64,
        elements: list.then(|| b.elements.iter().map(|g| g.to_string()).collect()),
    };
    Ok(match cli.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            if list {
                let mut out = String::from("word,length\n");
                for g in &b.elements {
                    let _ = writeln!(out, "{},{}", g, g.len());
                }
                out.trim_end().to_string()
            } else {
                format!(
                    "ell,radius,cardinality,closed_form\n{},{},{},{}",
                    ell, r, report.cardinality, report.closed_form
                )
            }
        }
    })
}

fn cmd_enum_wa(cli: &Cli, ell: u32, n: usize, gen: u8) -> Result<String, Failure> {
    validate_generator(ell, gen)?;
    let elems = enumerate_wa(ell, gen, n, cli.cap)?;
    Ok(match cli.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                ell: u32,
                generator: u8,
                count: usize,
                elements: Vec<String>,
            }
            to_json(&Report {
                ell,
                generator: gen,
                count: elems.len(),
                elements: elems.iter().map(|g| g.to_string()).collect(),
            })
        }
        Format::Csv => {
            let mut out = String::from("k,word,length\n");
            for (k, g) in elems.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", k + 1, g, g.len());
            }
            out.trim_end().to_string()
        }
    })
}

fn cmd_check_bounds(cli: &Cli, ell: u32, n: usize, gen: u8) -> Result<String, Failure> {
    validate_generator(ell, gen)?;
    let wa_ok = check_wa_enumeration_bound(ell, gen, n, cli.cap)?;
    let complement_ok = check_complement_enumeration_bound(ell, gen, n, cli.cap)?;
    match cli.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                ell: u32,
                generator: u8,
                n: usize,
                wa_bound_ok: bool,
                complement_bound_ok: bool,
            }
            Ok(to_json(&Report {
                ell,
                generator: gen,
                n,
                wa_bound_ok: wa_ok,
                complement_bound_ok: complement_ok,
            }))
        }
        Format::Csv => Ok(format!(
            "ell,generator,n,wa_bound_ok,complement_bound_ok\n{ell},{gen},{n},{wa_ok},{complement_ok}"
        )),
    }
}

fn cmd_code_stats(
    cli: &Cli,
    code_path: &PathBuf,
    p_path: &PathBuf,
    mode: Mode,
    samples: u64,
    horizon: Option<u32>,
    gen: u8,
) -> Result<String, Failure> {
    let code: FinitaryCode = load_json(code_path, "code")?;
    let p: ProbVector = load_json(p_path, "probability vector")?;
    validate_generator(code.rank(), gen)?;
    let stats_mode = match mode {
        Mode::Exact => StatsMode::Exact,
        Mode::Mc => StatsMode::MonteCarlo,
    };
    let stats = code.expected_code_length(
        &p,
        stats_mode,
        &StatsParams {
            samples,
            seed: cli.seed,
            horizon,
            a: gen,
            cap: cli.cap,
        },
    )?;
    Ok(match cli.format {
        Format::Json => to_json(&stats),
        Format::Csv => {
            let mut out = String::from("n,tail_n\n");
            for (n, tail) in &stats.v_tail {
                let _ = writeln!(out, "{n},{tail}");
            }
            out.trim_end().to_string()
        }
    })
}

fn lpa_pool(ctx: &CocycleContext) -> Vec<GroupElement> {
    let mut pool: Vec<GroupElement> = (-6..=6)
        .map(|k| GroupElement::generator_power(ctx.generator(), k))
        .collect();
    let rank = u32::from(ctx.generator()).max(2);
    for g in ball(rank, 3, fgshift::DEFAULT_CARDINALITY_CAP)
        .expect("small ball")
        .elements
    {
        if !in_wa(&g, ctx.generator()) {
            pool.push(g);
        }
    }
    pool
}

fn random_lpa(rng: &mut Rng, pool: &[GroupElement]) -> LocalAutomorphism {
    let swaps = 1 + rng.below(3) as usize;
    let mut used = Vec::new();
    let mut pairs = Vec::new();
    while pairs.len() < swaps {
        let a = pool[rng.below(pool.len() as u64) as usize].clone();
        let b = pool[rng.below(pool.len() as u64) as usize].clone();
        if a == b || used.contains(&a) || used.contains(&b) {
            continue;
        }
        used.push(a.clone());
        used.push(b.clone());
        pairs.push((a, b));
    }
    LocalAutomorphism::from_swaps(&pairs).expect("distinct swap pairs")
}

fn cmd_cocycle_check(cli: &Cli, p_path: &PathBuf, trials: u64, gen: u8) -> Result<String, Failure> {
    let p: ProbVector = load_json(p_path, "probability vector")?;
    if gen == 0 {
        return Err(Failure::validation("generator indices are 1-based"));
    }
    let ctx = CocycleContext::new(p, gen);
    let pool = lpa_pool(&ctx);
    let mut rng = Rng::new(cli.seed);
    let mut identity_defect: f64 = 0.0;
    let mut eq_star_defect: f64 = 0.0;
    for trial in 0..trials {
        let pick = |rng: &mut Rng| {
            if rng.below(2) == 0 {
                CocycleElement::Power(rng.below(41) as i64 - 20)
            } else {
                CocycleElement::Local(random_lpa(rng, &pool))
            }
        };
        let v = pick(&mut rng);
        let w = pick(&mut rng);
        let x = Configuration::new(derive_seed(cli.seed, trial), ctx.vector().clone());
        identity_defect = identity_defect.max(ctx.check_cocycle_identity(&v, &w, &x, 1)?);

        let local = random_lpa(&mut rng, &pool);
        let max_pow = local
            .moved()
            .filter_map(|g| g.power_of(gen))
            .filter(|&k| k >= 0)
            .max()
            .unwrap_or(-1);
        let n = (max_pow + 1 + rng.below(5) as i64).max(1) as u32;
        eq_star_defect = eq_star_defect.max(ctx.eq_star_defect(&x, &local, n)?);
    }
    #[derive(Serialize)]
    struct Report {
        trials: u64,
        identity_max_defect: f64,
        eq_star_max_defect: f64,
        tolerance: f64,
        ok: bool,
    }
    let report = Report {
        trials,
        identity_max_defect: identity_defect,
        eq_star_max_defect: eq_star_defect,
        tolerance: 1e-10,
        ok: identity_defect < 1e-10 && eq_star_defect < 1e-10,
    };
    match cli.format {
        Format::Json => Ok(to_json(&report)),
        Format::Csv => Ok(format!(
            "trials,identity_max_defect,eq_star_max_defect,ok\n{},{},{},{}",
            report.trials, report.identity_max_defect, report.eq_star_max_defect, report.ok
        )),
    }
}

fn cmd_weakmix_check(
    cli: &Cli,
    p_path: &PathBuf,
    ell: u32,
    inner: u32,
    outer: u32,
    pairs: u32,
    gen: u8,
) -> Result<String, Failure> {
    let p: ProbVector = load_json(p_path, "probability vector")?;
    validate_generator(ell, gen)?;
    let m = p.len();
    let inner_ball = ball(ell, inner, cli.cap)?.elements;
    let annulus: Vec<GroupElement> = ball(ell, outer, cli.cap)?
        .elements
        .into_iter()
        .filter(|g| g.len() as u32 > inner)
        .collect();
    if annulus.is_empty() {
        return Err(Failure::validation("outer radius must exceed inner radius"));
    }
    let (hp, hm) = build_weakmix_pair(ell, gen, inner, outer, cli.cap)?;
    let h = hp.compose(&hm);
    let mut rng = Rng::new(cli.seed);
    for _ in 0..pairs {
        let mut base = Pattern::new();
        for g in &inner_ball {
            base.insert(g.clone(), 1 + rng.below(m as u64) as u8);
        }
        let refine = |rng: &mut Rng| {
            let mut c = base.clone();
            for _ in 0..1 + rng.below(3) {
                let g = annulus[rng.below(annulus.len() as u64) as usize].clone();
                c.insert(g, 1 + rng.below(m as u64) as u8);
            }
            c
        };
        let c_j = refine(&mut rng);
        let c_k = refine(&mut rng);
        let (lhs, rhs) = product_measure_check(&p, &h, &c_j, &c_k, &base)?;
        if lhs != rhs {
            return Err(Failure::numeric(format!(
                "product identity failed: {lhs} != {rhs}"
            )));
        }
    }
    #[derive(Serialize)]
    struct Report {
        ell: u32,
        inner: u32,
        outer: u32,
        pairs: u32,
        all_exact: bool,
    }
    let report = Report {
        ell,
        inner,
        outer,
        pairs,
        all_exact: true,
    };
    match cli.format {
        Format::Json => Ok(to_json(&report)),
        Format::Csv => Ok(format!(
            "ell,inner,outer,pairs,all_exact\n{ell},{inner},{outer},{pairs},true"
        )),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_beta(
    cli: &Cli,
    p_path: &PathBuf,
    ts: &[f64],
    _closed: bool,
    limit: Option<u32>,
    mc: bool,
    n: u32,
    samples: u64,
    gen: u8,
) -> Result<String, Failure> {
    let p: ProbVector = load_json(p_path, "probability vector")?;
    if gen == 0 {
        return Err(Failure::validation("generator indices are 1-based"));
    }
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let mut row = BetaEvaluation::closed_only(&p, t);
        if let Some(limit_n) = limit {
            row.limit_exact = vec![(limit_n, beta_limit_exact(&p, t, limit_n)?)];
        }
        if mc {
            row.mc = Some(beta_limit_mc_workers(
                &p,
                gen,
                t,
                n,
                samples,
                cli.seed,
                cli.workers,
            )?);
        }
        rows.push(row);
    }
    Ok(match cli.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut out = String::from("t,closed,limit_n,mc,stderr\n");
            for row in &rows {
                let limit_text = row
                    .limit_exact
                    .first()
                    .map(|(_, v)| v.to_string())
                    .unwrap_or_default();
                let (mc_text, se_text) = row
                    .mc
                    .as_ref()
                    .map(|McEstimate { estimate, stderr, .. }| {
                        (estimate.to_string(), stderr.to_string())
                    })
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    row.t, row.closed_form, limit_text, mc_text, se_text
                );
            }
            out.trim_end().to_string()
        }
    })
}

fn cmd_restricted(
    cli: &Cli,
    p_path: &PathBuf,
    d_path: Option<&PathBuf>,
    ts: &[f64],
    ns: &[u32],
    gen: u8,
) -> Result<String, Failure> {
    let p: ProbVector = load_json(p_path, "probability vector")?;
    let d: Pattern = match d_path {
        Some(path) => load_json(path, "restriction pattern")?,
        None => Pattern::new(),
    };
    if gen == 0 {
        return Err(Failure::validation("generator indices are 1-based"));
    }
    #[derive(Serialize)]
    struct Row {
        t: f64,
        n: u32,
        value: f64,
        unrestricted: f64,
        log_gap: f64,
    }
    let mut rows = Vec::new();
    for &t in ts {
        let unrestricted = beta_closed(&p, t);
        for &n in ns {
            let value = restricted_growth_rate(&p, gen, t, &d, n)?;
            rows.push(Row {
                t,
                n,
                value,
                unrestricted,
                log_gap: (value.ln() - unrestricted.ln()).abs(),
            });
        }
    }
    Ok(match cli.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut out = String::from("t,n,value,unrestricted,log_gap\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{},{},{}", r.t, r.n, r.value, r.unrestricted, r.log_gap);
            }
            out.trim_end().to_string()
        }
    })
}

fn cmd_pressure(cli: &Cli, p_path: &PathBuf, ts: &[f64]) -> Result<String, Failure> {
    let p: ProbVector = load_json(p_path, "probability vector")?;
    #[derive(Serialize)]
    struct Row {
        t: f64,
        pressure: f64,
        exp_pressure: f64,
        beta: f64,
    }
    let rows: Vec<Row> = ts
        .iter()
        .map(|&t| {
            let pr = pressure_single_coordinate(&p, t);
            Row {
                t,
                pressure: pr,
                exp_pressure: pr.exp(),
                beta: beta_closed(&p, t),
            }
        })
        .collect();
    Ok(match cli.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut out = String::from("t,pressure,exp_pressure,beta\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{},{}", r.t, r.pressure, r.exp_pressure, r.beta);
            }
            out.trim_end().to_string()
        }
    })
}

fn cmd_power_sums(cli: &Cli, p_path: &PathBuf, k: usize) -> Result<String, Failure> {
    if k == 0 {
        return Err(Failure::validation("k must be at least 1"));
    }
    let p: ProbVector = load_json(p_path, "probability vector")?;
    let ps = power_sums(&p, k);
    match cli.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                power_sums: Vec<f64>,
                m: u8,
            }
            Ok(to_json(&Report {
                power_sums: ps.values,
                m: p.len(),
            }))
        }
        Format::Csv => {
            let mut out = String::from("k,p_k\n");
            for (i, v) in ps.values.iter().enumerate() {
                let _ = writeln!(out, "{},{}", i + 1, v);
            }
            Ok(out.trim_end().to_string())
        }
    }
}

fn cmd_recover(
    cli: &Cli,
    inline: Option<&[f64]>,
    file: Option<&PathBuf>,
    m: Option<usize>,
) -> Result<String, Failure> {
    #[derive(serde::Deserialize)]
    struct RecoverFile {
        power_sums: Vec<f64>,
        m: usize,
    }
    let (values, m) = match (inline, file) {
        (Some(values), None) => {
            let m = m.ok_or_else(|| Failure::validation("--m is required with --power-sums"))?;
            (values.to_vec(), m)
        }
        (None, Some(path)) => {
            let f: RecoverFile = load_json(path, "power sums")?;
            (f.power_sums, m.unwrap_or(f.m))
        }
        _ => {
            return Err(Failure::validation(
                "provide exactly one of --power-sums or --file",
            ))
        }
    };
    let ps = PowerSums::new(values)?;
    let vector = recover_vector(&ps, m)?;
    match cli.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                vector: Vec<f64>,
            }
            Ok(to_json(&Report {
                vector: vector.weights().to_vec(),
            }))
        }
        Format::Csv => {
            let mut out = String::from("index,weight\n");
            for (i, w) in vector.weights().iter().enumerate() {
                let _ = writeln!(out, "{},{}", i + 1, w);
            }
            Ok(out.trim_end().to_string())
        }
    }
}

const DEFAULT_T_GRID: [f64; 11] = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

#[derive(Serialize)]
struct DistinguishReport {
    m_p: u8,
    m_q: u8,
    entropy_p: f64,
    entropy_q: f64,
    entropy_equal: bool,
    beta_grid: Vec<(f64, f64, f64)>,
    witness_t: Option<f64>,
    equivalent: bool,
    verdict: String,
}

fn distinguish(p: &ProbVector, q: &ProbVector, grid: &[f64]) -> DistinguishReport {
    let entropy_p = p.entropy();
    let entropy_q = q.entropy();
    let entropy_equal = (entropy_p - entropy_q).abs() < 1e-9;
    let beta_grid: Vec<(f64, f64, f64)> = grid
        .iter()
        .map(|&t| (t, beta_closed(p, t), beta_closed(q, t)))
        .collect();
    let diverges = |row: &&(f64, f64, f64)| {
        let (_, bp, bq) = row;
        (bp - bq).abs() > 1e-10 * bp.abs().max(1.0)
    };
    // prefer an integer witness t >= 2, where beta reads as a power sum
    let witness = beta_grid
        .iter()
        .filter(|(t, _, _)| *t >= 2.0 && t.fract() == 0.0)
        .find(diverges)
        .or_else(|| beta_grid.iter().find(diverges))
        .copied();
    let equivalent = witness.is_none() && permutation_equivalent(p, q, 1e-9);
    let verdict = match witness {
        Some((t, bp, bq)) => {
            let entropy_note = if entropy_equal {
                format!("entropy equal ({entropy_p:.6}), ")
            } else {
                String::new()
            };
            format!("{entropy_note}beta differs at t={t}: {bp} vs {bq} -> NOT permutation-equivalent")
        }
        None => "beta agrees on the full grid -> permutation-equivalent".to_string(),
    };
    DistinguishReport {
        m_p: p.len(),
        m_q: q.len(),
        entropy_p,
        entropy_q,
        entropy_equal,
        beta_grid,
        witness_t: witness.map(|(t, _, _)| t),
        equivalent,
        verdict,
    }
}

fn cmd_distinguish(
    cli: &Cli,
    p_path: &PathBuf,
    q_path: &PathBuf,
    grid: Option<&[f64]>,
) -> Result<String, Failure> {
    let p: ProbVector = load_json(p_path, "probability vector")?;
    let q: ProbVector = load_json(q_path, "probability vector")?;
    let report = distinguish(&p, &q, grid.unwrap_or(&DEFAULT_T_GRID));
    match cli.format {
        Format::Json => Ok(to_json(&report)),
        Format::Csv => {
            let mut out = String::from("t,beta_p,beta_q\n");
            for (t, bp, bq) in &report.beta_grid {
                let _ = writeln!(out, "{t},{bp},{bq}");
            }
            let _ = write!(out, "# {}", report.verdict);
            Ok(out)
        }
    }
}

fn cmd_end_to_end(
    cli: &Cli,
    p_path: &PathBuf,
    perm: &[usize],
    samples: u64,
    grid: Option<&[f64]>,
    gen: u8,
) -> Result<String, Failure> {
    let p: ProbVector = load_json(p_path, "probability vector")?;
    validate_generator(2, gen)?; // the relabeling code lives on the rank-2 shift
    let q = p.permuted(perm)?;
    let grid = grid.unwrap_or(&DEFAULT_T_GRID);

    // the radius-0 relabeling sending symbol s to the position of s in perm
    // pushes mu_p forward to mu_q
    let mut relabel = vec![0u8; perm.len()];
    for (j, &source) in perm.iter().enumerate() {
        relabel[source - 1] = (j + 1) as u8;
    }
    let code = FinitaryCode::symbol_permutation(2, &relabel)?;

    // empirical pushforward marginals against q, three-sigma bands
    let mut counts = vec![0u64; q.len() as usize];
    for k in 0..samples {
        let x = Configuration::new(derive_seed(cli.seed, k), p.clone());
        let s = code.apply(&x, &GroupElement::identity())?;
        counts[s as usize - 1] += 1;
    }
    let mut pushforward_ok = true;
    let mut marginals = Vec::with_capacity(counts.len());
    for (i, &c) in counts.iter().enumerate() {
        let freq = c as f64 / samples as f64;
        let expect = q.weights()[i];
        let sigma = (expect * (1.0 - expect) / samples as f64).sqrt();
        let ok = (freq - expect).abs() <= 3.0 * sigma;
        pushforward_ok &= ok;
        marginals.push((i + 1, freq, expect, ok));
    }

    // code-length statistics: the relabeling reads one coordinate
    let stats = code.expected_code_length(
        &p,
        StatsMode::Exact,
        &StatsParams {
            a: gen,
            cap: cli.cap,
            ..Default::default()
        },
    )?;
    let x = Configuration::new(cli.seed, p.clone());
    let m_phi = code.m_phi_truncated(&x, gen, 2, cli.cap)?;
    let a_phi = code.a_phi_truncated(&x, gen, 2, cli.cap)?;

    // the invariant itself: bit-identical beta along the whole grid
    let beta_equal = grid
        .iter()
        .all(|&t| beta_closed(&p, t).to_bits() == beta_closed(&q, t).to_bits());

    // negative control: equal entropy does not imply equivalence
    let u4 = ProbVector::new(vec![0.25; 4]).expect("uniform");
    let spread = ProbVector::new(vec![0.5, 0.125, 0.125, 0.125, 0.125]).expect("spread");
    let negative = distinguish(&u4, &spread, grid);

    #[derive(Serialize)]
    struct Report {
        p: Vec<f64>,
        q: Vec<f64>,
        permutation: Vec<usize>,
        samples: u64,
        pushforward_ok: bool,
        marginals: Vec<(usize, f64, f64, bool)>,
        expected_v: f64,
        m_phi: Option<i64>,
        a_phi: Option<i64>,
        beta_equal_bitwise: bool,
        negative_control_verdict: String,
        all_pass: bool,
    }
    let all_pass = pushforward_ok
        && (stats.v_mean - 1.0).abs() < 1e-12
        && m_phi.value == Some(0)
        && a_phi.value == Some(-1)
        && beta_equal
        && !negative.equivalent;
    let report = Report {
        p: p.weights().to_vec(),
        q: q.weights().to_vec(),
        permutation: perm.to_vec(),
        samples,
        pushforward_ok,
        marginals,
        expected_v: stats.v_mean,
        m_phi: m_phi.value,
        a_phi: a_phi.value,
        beta_equal_bitwise: beta_equal,
        negative_control_verdict: negative.verdict,
        all_pass,
    };
    if !all_pass {
        return Err(Failure::numeric(format!(
            "end-to-end check failed: {}",
            to_json(&report)
        )));
    }
    Ok(to_json(&report))
}

fn validate_generator(ell: u32, gen: u8) -> Result<(), Failure> {
    if ell == 0 {
        return Err(Failure::validation("ell must be at least 1"));
    }
    if gen == 0 || u32::from(gen) > ell {
        return Err(Failure::validation(format!(
            "generator index {gen} out of range for rank {ell}"
        )));
    }
    Ok(())
}
