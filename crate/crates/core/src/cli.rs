//! Command-line surface: problem files in JSON, deterministic reports and
//! CSV output, exit codes encoding the failure class.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::induced::{self, InducedError, DEFAULT_BUDGET};
use crate::potential::PotentialParams;
use crate::pressure::{self, Phase, PressureError};
use crate::sft::{CylinderSpec, SftSpec, Word};
use crate::spectral::{self, parry_measure, perron_data_default};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numeric(String),
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Budget(_) => EXIT_BUDGET,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numeric(m) | CliError::Budget(m) => m,
        }
    }
}

impl From<PressureError> for CliError {
    fn from(e: PressureError) -> Self {
        match e {
            PressureError::Induced(InducedError::BudgetExceeded(b)) => {
                CliError::Budget(format!("enumeration budget {} exhausted", b))
            }
            PressureError::Divergent { .. }
            | PressureError::NotSingleForbiddenBlock(_)
            | PressureError::DepthTooSmall { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<InducedError> for CliError {
    fn from(e: InducedError) -> Self {
        match e {
            InducedError::BudgetExceeded(b) => {
                CliError::Budget(format!("enumeration budget {} exhausted", b))
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

/// Problem file contents; unknown fields are rejected.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub alphabet_size: usize,
    #[serde(default)]
    pub transition: Option<Vec<Vec<u8>>>,
    #[serde(default)]
    pub forbidden_blocks: Option<Vec<String>>,
    pub cylinder: String,
    pub potential: PotentialField,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialField {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_len: Option<usize>,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub t_min: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub t_step: Option<f64>,
}

/// A fully validated problem with defaults resolved.
pub struct Problem {
    pub spec: SftSpec,
    pub cylinder: CylinderSpec,
    pub params: PotentialParams,
    pub tol: f64,
    pub max_len: usize,
    pub budget: u64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
}

pub fn parse_spec(text: &str) -> Result<Problem, CliError> {
    let raw: ProblemSpec = serde_json::from_str(text)
        .map_err(|e| CliError::Validation(format!("spec parse error: {}", e)))?;
    build_problem(raw)
}

fn parse_block(s: &str, m: usize) -> Result<Word, CliError> {
    let w = Word::parse(s)
        .ok_or_else(|| CliError::Validation(format!("block {:?} is not a digit string", s)))?;
    if w.symbols().iter().any(|&c| c as usize >= m) {
        return Err(CliError::Validation(format!(
            "block {:?} uses symbols outside the alphabet of size {}",
            s, m
        )));
    }
    Ok(w)
}

fn build_problem(raw: ProblemSpec) -> Result<Problem, CliError> {
    let m = raw.alphabet_size;
    let spec = match (&raw.transition, &raw.forbidden_blocks) {
        (Some(t), blocks) => {
            let spec = SftSpec::from_matrix(m, t.clone())
                .map_err(|e| CliError::Validation(e.to_string()))?;
            if let Some(blocks) = blocks {
                // matrix wins, but both encodings must agree
                let mut listed = vec![vec![false; m]; m];
                for b in blocks {
                    let w = parse_block(b, m)?;
                    let s = w.symbols();
                    if s.len() != 2 {
                        return Err(CliError::Validation(format!(
                            "forbidden block {:?} must have length 2",
                            b
                        )));
                    }
                    if spec.transition()[s[0] as usize][s[1] as usize] != 0 {
                        return Err(CliError::Validation(format!(
                            "forbidden block {:?} is allowed by the transition matrix",
                            b
                        )));
                    }
                    listed[s[0] as usize][s[1] as usize] = true;
                }
                for i in 0..m {
                    for j in 0..m {
                        if spec.transition()[i][j] == 0 && !listed[i][j] {
                            return Err(CliError::Validation(format!(
                                "transition {}{} is forbidden by the matrix but not listed in forbidden_blocks",
                                i, j
                            )));
                        }
                    }
                }
            }
            spec
        }
        (None, Some(blocks)) => {
            let words: Vec<Word> = blocks
                .iter()
                .map(|b| parse_block(b, m))
                .collect::<Result<_, _>>()?;
            SftSpec::from_forbidden_blocks(m, &words)
                .map_err(|e| CliError::Validation(e.to_string()))?
        }
        (None, None) => {
            return Err(CliError::Validation(
                "spec needs either \"transition\" or \"forbidden_blocks\"".into(),
            ))
        }
    };
    let cyl_word = parse_block(&raw.cylinder, m)?;
    let cylinder = CylinderSpec::new(&spec, &cyl_word)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let params = PotentialParams::new(&spec, raw.potential.a, raw.potential.n)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let budget = std::env::var("THERMOSHIFT_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .or(raw.options.budget)
        .unwrap_or(DEFAULT_BUDGET);
    Ok(Problem {
        spec,
        cylinder,
        params,
        tol: raw.options.tol.unwrap_or(pressure::DEFAULT_ROOT_TOL),
        max_len: raw.options.max_len.unwrap_or(pressure::DEFAULT_MAX_LEN),
        budget,
        t_min: raw.options.t_min.unwrap_or(0.0),
        t_max: raw.options.t_max.unwrap_or(5.0),
        t_step: raw.options.t_step.unwrap_or(0.05),
    })
}

/// Fixed formatting for every floating value: lower-case scientific with 12
/// significant digits, so identical inputs yield byte-identical output.
pub fn fmt_sci(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000e0".to_string();
    }
    format!("{:.11e}", x)
}

fn header(out: &mut String, p: &Problem) {
    let m = p.spec.alphabet_size();
    out.push_str(&format!("# alphabet_size = {}\n", m));
    let cyl = p.cylinder.word();
    out.push_str(&format!("# cylinder = {}{}\n", cyl[0], cyl[1]));
    out.push_str(&format!(
        "# potential: A = {}, N = {}\n",
        fmt_sci(p.params.a()),
        p.params.threshold()
    ));
    out.push_str(&format!(
        "# options: tol = {}, max_len = {}, budget = {}, t_min = {}, t_max = {}, t_step = {}\n",
        fmt_sci(p.tol),
        p.max_len,
        p.budget,
        fmt_sci(p.t_min),
        fmt_sci(p.t_max),
        fmt_sci(p.t_step)
    ));
}

#[derive(Parser, Debug)]
#[command(
    name = "thermoshift",
    about = "Pressure and freezing transition of the depth potential on a mixing subshift of finite type",
    disable_version_flag = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Topological entropy xi = log(eta) of the subshift
    Entropy {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Maximal-entropy Markov measure
    Parry {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Return-word census: counts, type breakdown, accident histogram
    Returns {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Certified evaluation of the induced series at one (t, z)
    Lambda {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        t: f64,
        /// Defaults to xi
        #[arg(long)]
        z: Option<f64>,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Freezing point t_c with certified bracket
    Transition {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Pressure over a t-grid, as CSV
    PressureCurve {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        t_step: Option<f64>,
    },
    /// Full invariant suite on the problem, pass/fail per property
    Check {
        #[arg(long)]
        spec: PathBuf,
    },
}

fn load(path: &Path) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {}", path.display(), e)))?;
    parse_spec(&text)
}

/// Runs one command; the report goes to `stdout` and the exit code encodes
/// the failure class.
pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    let text = match &cli.command {
        Command::Entropy { spec } => cmd_entropy(&load(spec)?)?,
        Command::Parry { spec } => cmd_parry(&load(spec)?)?,
        Command::Returns { spec, max_len } => {
            let mut p = load(spec)?;
            if let Some(l) = max_len {
                p.max_len = *l;
            }
            cmd_returns(&p)?
        }
        Command::Lambda {
            spec,
            t,
            z,
            max_len,
        } => {
            let mut p = load(spec)?;
            if let Some(l) = max_len {
                p.max_len = *l;
            }
            cmd_lambda(&p, *t, *z)?
        }
        Command::Transition { spec, tol } => {
            let mut p = load(spec)?;
            if let Some(tol) = tol {
                p.tol = *tol;
            }
            cmd_transition(&p)?
        }
        Command::PressureCurve {
            spec,
            out,
            t_min,
            t_max,
            t_step,
        } => {
            let mut p = load(spec)?;
            if let Some(v) = t_min {
                p.t_min = *v;
            }
            if let Some(v) = t_max {
                p.t_max = *v;
            }
            if let Some(v) = t_step {
                p.t_step = *v;
            }
            let csv = cmd_pressure_curve(&p)?;
            if let Some(path) = out {
                std::fs::write(path, &csv).map_err(|e| {
                    CliError::Validation(format!("cannot write {}: {}", path.display(), e))
                })?;
                String::new()
            } else {
                csv
            }
        }
        Command::Check { spec } => {
            let (text, ok) = cmd_check(&load(spec)?)?;
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Validation(format!("write failed: {}", e)))?;
            return if ok {
                Ok(())
            } else {
                Err(CliError::Validation("invariant suite failed".into()))
            };
        }
    };
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::Validation(format!("write failed: {}", e)))?;
    Ok(())
}

fn cmd_entropy(p: &Problem) -> Result<String, CliError> {
    let xi = spectral::entropy(&p.spec).map_err(|e| CliError::Numeric(e.to_string()))?;
    let mut out = String::new();
    header(&mut out, p);
    out.push_str(&format!("xi = {}\n", fmt_sci(xi)));
    Ok(out)
}

fn cmd_parry(p: &Problem) -> Result<String, CliError> {
    let pd = perron_data_default(&p.spec).map_err(|e| CliError::Numeric(e.to_string()))?;
    let mu = parry_measure(&p.spec).map_err(|e| CliError::Numeric(e.to_string()))?;
    let mut out = String::new();
    header(&mut out, p);
    out.push_str(&format!("eta = {}\n", fmt_sci(pd.eta)));
    out.push_str(&format!("entropy = {}\n", fmt_sci(mu.entropy())));
    out.push_str("stationary:\n");
    for (i, &pi) in mu.stationary.iter().enumerate() {
        out.push_str(&format!("  pi[{}] = {}\n", i, fmt_sci(pi)));
    }
    out.push_str("stochastic:\n");
    for (i, row) in mu.stochastic.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&x| fmt_sci(x)).collect();
        out.push_str(&format!("  P[{}] = [{}]\n", i, cells.join(", ")));
    }
    Ok(out)
}

fn cmd_returns(p: &Problem) -> Result<String, CliError> {
    let words = induced::enumerate_return_words(&p.spec, &p.cylinder, p.max_len, p.budget)?;
    let mut by_len: BTreeMap<usize, (u64, u64, u64, u64)> = BTreeMap::new();
    let mut accident_hist: BTreeMap<usize, u64> = BTreeMap::new();
    for w in &words {
        let e = by_len.entry(w.len()).or_default();
        e.0 += 1;
        match w.word_type(&p.params) {
            induced::WordType::T1 => e.1 += 1,
            induced::WordType::T2 => e.2 += 1,
            induced::WordType::T3 => e.3 += 1,
        }
        *accident_hist.entry(w.accidents().len()).or_default() += 1;
    }
    let mut out = String::new();
    header(&mut out, p);
    out.push_str("length,count,t1,t2,t3\n");
    for n in 1..=p.max_len {
        let (c, t1, t2, t3) = by_len.get(&n).copied().unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", n, c, t1, t2, t3));
    }
    out.push_str("accidents,count\n");
    for (k, c) in &accident_hist {
        out.push_str(&format!("{},{}\n", k, c));
    }
    Ok(out)
}

fn cmd_lambda(p: &Problem, t: f64, z: Option<f64>) -> Result<String, CliError> {
    if t < 0.0 {
        return Err(CliError::Validation(format!("t must be >= 0, got {}", t)));
    }
    let xi = spectral::entropy(&p.spec).map_err(|e| CliError::Numeric(e.to_string()))?;
    let z = z.unwrap_or(xi);
    let v = pressure::lambda_direct_with_budget(
        &p.spec, &p.cylinder, &p.params, t, z, p.max_len, p.budget,
    )?;
    let mut out = String::new();
    header(&mut out, p);
    out.push_str(&format!("t = {}\nz = {}\n", fmt_sci(t), fmt_sci(z)));
    out.push_str(&format!("lambda_lower = {}\n", fmt_sci(v.lower)));
    out.push_str(&format!("lambda_upper = {}\n", fmt_sci(v.upper)));
    out.push_str(&format!("truncation_len = {}\n", v.truncation_len));
    out.push_str(&format!("tail_bound = {}\n", fmt_sci(v.tail_bound)));
    out.push_str(&format!("converged = {}\n", v.converged));
    if p.spec.forbidden_block_count() == 1 {
        let g = pressure::lambda_grouped(&p.spec, &p.cylinder, &p.params, t, z, p.max_len)?;
        out.push_str(&format!("grouped_lower = {}\n", fmt_sci(g.lower)));
        out.push_str(&format!("grouped_upper = {}\n", fmt_sci(g.upper)));
    }
    Ok(out)
}

fn cmd_transition(p: &Problem) -> Result<String, CliError> {
    let tc = pressure::find_t_c(&p.spec, &p.cylinder, &p.params, p.tol)?;
    let mut out = String::new();
    header(&mut out, p);
    out.push_str(&format!("xi = {}\n", fmt_sci(tc.xi)));
    out.push_str(&format!("t_c = {}\n", fmt_sci(tc.t_c)));
    out.push_str(&format!(
        "bracket = [{}, {}]\n",
        fmt_sci(tc.bracket.0),
        fmt_sci(tc.bracket.1)
    ));
    out.push_str(&format!("residual = {}\n", fmt_sci(tc.residual)));
    Ok(out)
}

fn grid(t_min: f64, t_max: f64, t_step: f64) -> Result<Vec<f64>, CliError> {
    if !(t_step > 0.0) || t_min < 0.0 || t_max < t_min {
        return Err(CliError::Validation(format!(
            "bad grid: t_min = {}, t_max = {}, t_step = {}",
            t_min, t_max, t_step
        )));
    }
    let count = ((t_max - t_min) / t_step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| t_min + i as f64 * t_step).collect())
}

fn cmd_pressure_curve(p: &Problem) -> Result<String, CliError> {
    let ts = grid(p.t_min, p.t_max, p.t_step)?;
    let curve = pressure::pressure_curve(&p.spec, &p.cylinder, &p.params, &ts)?;
    let mut out = String::new();
    out.push_str("t,pressure,xi,phase,lambda_residual,truncation_len,tail_bound\n");
    for pt in &curve.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_sci(pt.t),
            fmt_sci(pt.pressure),
            fmt_sci(curve.xi),
            pt.phase,
            fmt_sci(pt.residual),
            pt.truncation_len,
            fmt_sci(pt.tail_bound)
        ));
    }
    Ok(out)
}

fn cmd_check(p: &Problem) -> Result<(String, bool), CliError> {
    let mut out = String::new();
    header(&mut out, p);
    let mut all_ok = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        all_ok &= ok;
        let status = if ok { "PASS" } else { "FAIL" };
        if detail.is_empty() {
            format!("{} {}\n", status, name)
        } else {
            format!("{} {} ({})\n", status, name, detail)
        }
    };

    let pd = perron_data_default(&p.spec).map_err(|e| CliError::Numeric(e.to_string()))?;
    out.push_str(&report(
        "perron-residual",
        pd.residual < 1e-10,
        format!("residual = {}", fmt_sci(pd.residual)),
    ));
    let xi = pd.eta.ln();

    let mu = parry_measure(&p.spec).map_err(|e| CliError::Numeric(e.to_string()))?;
    out.push_str(&report(
        "parry-entropy",
        (mu.entropy() - xi).abs() < 1e-8,
        format!("h = {}", fmt_sci(mu.entropy())),
    ));

    let sums = pressure::renewal_partial_sums(&p.spec, &p.cylinder, 60);
    let renewal_ok = sums.values().all(|&s| s <= 1.0 + 1e-12)
        && sums.values().zip(sums.values().skip(1)).all(|(a, b)| a <= b);
    out.push_str(&report(
        "renewal-partial-sums",
        renewal_ok,
        format!("last = {}", fmt_sci(*sums.values().last().unwrap_or(&0.0))),
    ));

    match pressure::find_t_c(&p.spec, &p.cylinder, &p.params, p.tol) {
        Ok(tc) => {
            out.push_str(&report(
                "transition-residual",
                tc.residual < 1e-8,
                format!("t_c = {}, residual = {}", fmt_sci(tc.t_c), fmt_sci(tc.residual)),
            ));
            let grid = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
            match pressure::pressure_curve(&p.spec, &p.cylinder, &p.params, &grid) {
                Ok(curve) => {
                    let frozen_ok = curve
                        .points
                        .iter()
                        .all(|pt| (pt.phase == Phase::Frozen) == (pt.t >= curve.t_c));
                    out.push_str(&report("curve-invariants", frozen_ok, String::new()));
                }
                Err(e) => {
                    out.push_str(&report("curve-invariants", false, e.to_string()));
                }
            }
            match pressure::sandwich_check(&p.spec, &p.cylinder, &p.params, 3.0) {
                Ok(s) => {
                    out.push_str(&report(
                        "sandwich-bounds",
                        s.lower <= s.value.upper && s.value.lower <= s.upper,
                        format!(
                            "lower = {}, upper = {}",
                            fmt_sci(s.lower),
                            fmt_sci(s.upper)
                        ),
                    ));
                }
                Err(e) => out.push_str(&report("sandwich-bounds", false, e.to_string())),
            }
            match pressure::variational_probe(
                &p.spec,
                &p.cylinder,
                &p.params,
                2.0 * tc.t_c,
                &[mu],
            ) {
                Ok(r) => {
                    out.push_str(&report(
                        "variational-parry",
                        r.entries[0].margin > -1e-6,
                        format!("margin = {}", fmt_sci(r.entries[0].margin)),
                    ));
                }
                Err(e) => out.push_str(&report("variational-parry", false, e.to_string())),
            }
        }
        Err(e) => {
            out.push_str(&report("transition-residual", false, e.to_string()));
        }
    }

    if !all_ok {
        out.push_str("FAILED\n");
    }
    Ok((out, all_ok))
}
