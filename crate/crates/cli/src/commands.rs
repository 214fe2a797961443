use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use loanrisk::actuarial::{
    refinance_savings, returns_table, write_returns, AmortizationSchedule, CauseHazards,
    ConstantRecovery, PaymentCount, RecoveryCurve, SavingsOptions, TotalSavings,
};
use loanrisk::convergence::{transition_matrix, write_trace, ConvergenceRule};
use loanrisk::estimator::{
    estimate_csh, interpolate_zero_defaults, read_curves, write_curves, DEFAULT_THETA,
};
use loanrisk::ingest::{
    filter_loans, process_records, read_loan_records, read_observations, recovery_samples,
    write_observations, FilterPolicy, ObservationRow, VehicleCondition, DEFAULT_PAD,
};
use loanrisk::montecarlo::{run_study, write_report_csv};
use loanrisk::recovery::{analyze, write_recovery_csv, FitOptions, DEFAULT_SPAN};
use loanrisk::{
    AgeWindow, CauseId, Curve, Error, GammaFit, ObservedLoan, RiskBand, SimulationConfig,
};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::output::{cents, cents_value, Run};
use crate::{Cli, Command, Format, Global};

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(theta) = g.theta {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidInput(format!("theta {theta} outside (0, 1)")).into());
        }
    }
    let written = match &cli.command {
        Command::Ingest(a) => ingest(g, a)?,
        Command::Estimate(a) => estimate(g, a)?,
        Command::Converge(a) => converge(g, a)?,
        Command::Returns(a) => returns(g, a)?,
        Command::Savings(a) => savings(g, a)?,
        Command::Recovery(a) => recovery(g, a)?,
        Command::Simulate(a) => simulate(g, a)?,
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

/// Process exit status for a failed command.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Empty(_) => 3,
                Error::MissingBand(_) => 4,
                Error::IncompatibleGrids(_) => 5,
                Error::Numerical(_) | Error::FitNotConverged { .. } | Error::ZeroSurvival(_) => 6,
                Error::InvalidDistribution(_)
                | Error::AgeOutOfRange { .. }
                | Error::InvalidInput(_)
                | Error::Schema(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Io(_) => 2,
            };
        }
        if cause.is::<csv::Error>()
            || cause.is::<serde_json::Error>()
            || cause.is::<std::io::Error>()
        {
            return 2;
        }
    }
    1
}

fn theta(g: &Global) -> f64 {
    g.theta.unwrap_or(DEFAULT_THETA)
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> loanrisk::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn parse_band(s: &str) -> Result<RiskBand> {
    s.parse::<RiskBand>()
        .map_err(|_| Error::MissingBand(s.to_string()).into())
}

fn parse_cause(s: &str) -> Result<CauseId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_window(s: &str) -> Result<AgeWindow, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got '{s}'"))?;
    let lo = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower age '{lo}'"))?;
    let hi = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper age '{hi}'"))?;
    AgeWindow::new(lo, hi).map_err(|e| e.to_string())
}

/// Age window selection shared by estimate and converge.
#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Reporting window as LO:HI; defaults to 10:55.
    #[arg(long, value_parser = parse_window, conflicts_with = "full_range")]
    pub window: Option<AgeWindow>,
    /// Report every age covered by the observations.
    #[arg(long)]
    pub full_range: bool,
}

impl WindowArgs {
    fn resolve(&self, obs: &[ObservedLoan]) -> Result<AgeWindow> {
        Ok(match (self.window, self.full_range) {
            (Some(w), _) => w,
            (None, true) => AgeWindow::covering(obs)?,
            (None, false) => AgeWindow::REPORTING,
        })
    }

    fn describe(&self) -> String {
        match (self.window, self.full_range) {
            (Some(w), _) => format!("{}:{}", w.lo, w.hi),
            (None, true) => "full".into(),
            (None, false) => format!("{}:{}", AgeWindow::REPORTING.lo, AgeWindow::REPORTING.hi),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConditionArg {
    Used,
    New,
    Any,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Loan-level static attributes.
    #[arg(long)]
    pub loans: PathBuf,
    /// Monthly payment histories.
    #[arg(long)]
    pub payments: PathBuf,
    /// Tolerance added to the payment when testing for payoff.
    #[arg(long, default_value_t = Decimal::from(DEFAULT_PAD))]
    pub pad: Decimal,
    /// Vehicle condition to keep.
    #[arg(long, value_enum, default_value_t = ConditionArg::Used)]
    pub condition: ConditionArg,
    /// Keep every loan regardless of eligibility criteria.
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecoverySample {
    age: u32,
    recovery_fraction: f64,
}

fn ingest(g: &Global, a: &IngestArgs) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("ingest", &g.output_dir);
    let loans = run.read_input(&a.loans)?;
    let payments = run.read_input(&a.payments)?;
    let records = read_loan_records(loans.as_slice(), payments.as_slice())?;
    let mut policy = if a.permissive {
        FilterPolicy::permissive()
    } else {
        FilterPolicy::default()
    };
    policy.condition = match a.condition {
        ConditionArg::Used => Some(VehicleCondition::Used),
        ConditionArg::New => Some(VehicleCondition::New),
        ConditionArg::Any => None,
    };
    let total = records.len();
    let kept = filter_loans(records, &policy);
    if kept.is_empty() {
        return Err(Error::Empty("no loans pass the eligibility filters").into());
    }
    let ingested = process_records(&kept, a.pad)?;
    eprintln!("kept {} of {total} loans", kept.len());

    let rows: Vec<ObservationRow> = ingested.iter().map(ObservationRow::from_ingested).collect();
    let samples: Vec<RecoverySample> = recovery_samples(&ingested)
        .into_iter()
        .map(|(age, recovery_fraction)| RecoverySample {
            age,
            recovery_fraction,
        })
        .collect();
    run.param("pad", a.pad.to_string());
    run.param("policy", &policy);
    match g.format {
        Format::Csv => {
            run.output(
                "observations.csv",
                csv_bytes(|b| write_observations(b, &rows))?,
            );
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["age", "recovery_fraction"])?;
            for s in &samples {
                w.write_record([s.age.to_string(), s.recovery_fraction.to_string()])?;
            }
            run.output(
                "recoveries.csv",
                w.into_inner().context("flushing recoveries")?,
            );
        }
        Format::Json => {
            run.json_output("observations.json", &rows)?;
            run.json_output("recoveries.json", &samples)?;
        }
    }
    run.finish()
}

fn load_observations(run: &mut Run, path: &Path) -> Result<Vec<ObservationRow>> {
    let bytes = run.read_input(path)?;
    if is_json(path) {
        let rows: Vec<ObservationRow> = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        for r in &rows {
            r.observation()?;
        }
        Ok(rows)
    } else {
        Ok(read_observations(bytes.as_slice())?)
    }
}

fn band_observations(rows: &[ObservationRow], band: RiskBand) -> Result<Vec<ObservedLoan>> {
    rows.iter()
        .filter(|r| r.band == band)
        .map(|r| Ok(r.observation()?))
        .collect()
}

fn present_bands(rows: &[ObservationRow]) -> Vec<RiskBand> {
    RiskBand::ALL
        .into_iter()
        .filter(|b| rows.iter().any(|r| r.band == *b))
        .collect()
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Observations produced by `ingest`.
    pub observations: PathBuf,
    /// Restrict to one risk band; all present bands otherwise.
    #[arg(long)]
    pub band: Option<String>,
    /// Restrict to one cause; both otherwise.
    #[arg(long, value_parser = parse_cause)]
    pub cause: Option<CauseId>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Fill zero-event default ages with neighbouring hazards.
    #[arg(long)]
    pub interpolate: bool,
}

fn band_curve(
    obs: &[ObservedLoan],
    band: RiskBand,
    cause: CauseId,
    window: AgeWindow,
    theta: f64,
) -> Result<Curve> {
    let mut c = estimate_csh(obs, cause, window, theta)?;
    c.band = band.as_str().to_string();
    c.n = obs.len();
    Ok(c)
}

fn estimate(g: &Global, a: &EstimateArgs) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("estimate", &g.output_dir);
    let rows = load_observations(&mut run, &a.observations)?;
    if rows.is_empty() {
        return Err(Error::Empty("observations").into());
    }
    let bands = match &a.band {
        Some(name) => {
            let band = parse_band(name)?;
            if !rows.iter().any(|r| r.band == band) {
                return Err(Error::MissingBand(name.clone()).into());
            }
            vec![band]
        }
        None => present_bands(&rows),
    };
    let causes = a.cause.map_or(CauseId::ALL.to_vec(), |c| vec![c]);
    let theta = theta(g);
    let mut curves = Vec::new();
    for &band in &bands {
        let obs = band_observations(&rows, band)?;
        let window = a.window.resolve(&obs)?;
        for &cause in &causes {
            let c = band_curve(&obs, band, cause, window, theta)?;
            curves.push(if a.interpolate && cause == CauseId::Default {
                interpolate_zero_defaults(&c)?
            } else {
                c
            });
        }
    }
    if curves.iter().all(|c| c.rows.is_empty()) {
        return Err(Error::Empty("no loans at risk inside the age window").into());
    }
    run.param(
        "bands",
        bands.iter().map(|b| b.as_str()).collect::<Vec<_>>(),
    );
    run.param(
        "causes",
        causes.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
    );
    run.param("theta", theta);
    run.param("window", a.window.describe());
    run.param("interpolate", a.interpolate);
    match g.format {
        Format::Csv => {
            let refs: Vec<&Curve> = curves.iter().collect();
            run.output("curve.csv", csv_bytes(|b| write_curves(b, &refs))?);
        }
        Format::Json => run.json_output("curve.json", &curves)?,
    }
    run.finish()
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// Curve files from `estimate`; default-cause curves are compared.
    #[arg(long, num_args = 1.., required_unless_present = "observations", conflicts_with = "observations")]
    pub curves: Vec<PathBuf>,
    /// Observations to estimate band curves from.
    #[arg(long)]
    pub observations: Option<PathBuf>,
    /// Ordered band list, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub bands: Vec<String>,
    /// First age tested.
    #[arg(long, default_value_t = ConvergenceRule::default().min_test_age)]
    pub min_age: u32,
    /// Consecutive non-rejections required.
    #[arg(long, default_value_t = ConvergenceRule::default().run_length)]
    pub run: u32,
    #[command(flatten)]
    pub window: WindowArgs,
}

fn load_curves(run: &mut Run, path: &Path, theta: f64) -> Result<Vec<Curve>> {
    let bytes = run.read_input(path)?;
    if is_json(path) {
        Ok(serde_json::from_slice(&bytes)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?)
    } else {
        Ok(read_curves(bytes.as_slice(), theta)?)
    }
}

fn converge(g: &Global, a: &ConvergeArgs) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("converge", &g.output_dir);
    let theta = theta(g);
    let rule = ConvergenceRule {
        min_test_age: a.min_age,
        run_length: a.run,
    };
    let (labels, curves) = if let Some(path) = &a.observations {
        let rows = load_observations(&mut run, path)?;
        let bands = if a.bands.is_empty() {
            present_bands(&rows)
        } else {
            a.bands
                .iter()
                .map(|b| parse_band(b))
                .collect::<Result<Vec<_>>>()?
        };
        let mut curves = Vec::new();
        for &band in &bands {
            let obs = band_observations(&rows, band)?;
            if obs.is_empty() {
                return Err(Error::MissingBand(band.as_str().to_string()).into());
            }
            let window = a.window.resolve(&obs)?;
            curves.push(band_curve(&obs, band, CauseId::Default, window, theta)?);
        }
        let labels: Vec<String> = bands.iter().map(|b| b.as_str().to_string()).collect();
        (labels, curves)
    } else {
        let mut curves: Vec<Curve> = Vec::new();
        for path in &a.curves {
            for mut c in load_curves(&mut run, path, theta)? {
                if c.cause != CauseId::Default {
                    continue;
                }
                // the same label in several files names distinct curves
                let base = c.band.clone();
                let mut k = 1;
                while curves.iter().any(|o| o.band == c.band) {
                    k += 1;
                    c.band = format!("{base}#{k}");
                }
                curves.push(c);
            }
        }
        let labels = if a.bands.is_empty() {
            curves.iter().map(|c| c.band.clone()).collect()
        } else {
            a.bands.clone()
        };
        (labels, curves)
    };
    if labels.len() < 2 {
        bail!(Error::InvalidInput(format!(
            "need at least two default-cause curves, got {}",
            labels.len()
        )));
    }
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let (matrix, results) = transition_matrix(&refs, &curves, rule)?;
    run.param("bands", &labels);
    run.param("rule", rule);
    run.param("theta", theta);
    if a.observations.is_some() {
        run.param("window", a.window.describe());
    }
    match g.format {
        Format::Csv => {
            run.output("matrix.csv", csv_bytes(|b| matrix.write_csv(b))?);
            run.output("trace.csv", csv_bytes(|b| write_trace(b, &results))?);
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                matrix: &'a loanrisk::convergence::TransitionMatrix,
                pairs: &'a [loanrisk::Convergence],
            }
            run.json_output(
                "matrix.json",
                &Out {
                    matrix: &matrix,
                    pairs: &results,
                },
            )?;
        }
    }
    run.finish()
}

#[derive(Debug, Args)]
pub struct ReturnsArgs {
    /// Original principal.
    #[arg(long, default_value_t = 100.0)]
    pub loan: f64,
    /// Contract APR in percent.
    #[arg(long)]
    pub apr: f64,
    /// Original term in months.
    #[arg(long, default_value_t = 72)]
    pub term: u32,
    /// Curve file supplying default and prepayment hazards.
    #[arg(long, requires = "band", conflicts_with_all = ["default_hazard", "prepay_hazard"])]
    pub curves: Option<PathBuf>,
    /// Band whose curves are used.
    #[arg(long, requires = "curves")]
    pub band: Option<String>,
    /// Constant monthly default hazard.
    #[arg(long, default_value_t = 0.0)]
    pub default_hazard: f64,
    /// Constant monthly prepayment hazard.
    #[arg(long, default_value_t = 0.0)]
    pub prepay_hazard: f64,
    /// Constant recovery as a fraction of original principal.
    #[arg(long, default_value_t = 0.0, conflicts_with = "recovery_fit")]
    pub recovery: f64,
    /// Fitted recovery kernel written by `recovery`.
    #[arg(long)]
    pub recovery_fit: Option<PathBuf>,
}

fn returns(g: &Global, a: &ReturnsArgs) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("returns", &g.output_dir);
    let schedule = AmortizationSchedule::from_apr(a.loan, a.apr, a.term)?;
    let (label, hazards) = match (&a.curves, &a.band) {
        (Some(path), Some(band)) => {
            let curves = load_curves(&mut run, path, theta(g))?;
            let canonical = band
                .parse::<RiskBand>()
                .map(|b| b.as_str().to_string())
                .ok();
            let find = |cause: CauseId| {
                curves
                    .iter()
                    .find(|c| {
                        c.cause == cause && (c.band == *band || Some(&c.band) == canonical.as_ref())
                    })
                    .ok_or_else(|| Error::MissingBand(format!("{band} ({cause})")))
            };
            let (d, p) = (find(CauseId::Default)?, find(CauseId::Prepay)?);
            (d.band.clone(), CauseHazards::from_curves(d, p)?)
        }
        _ => (
            "constant".to_string(),
            CauseHazards::new(1, vec![a.default_hazard], vec![a.prepay_hazard])?,
        ),
    };
    let recovery: Box<dyn RecoveryCurve<f64>> = match &a.recovery_fit {
        Some(path) => {
            let bytes = run.read_input(path)?;
            let fit: GammaFit = serde_json::from_slice(&bytes)
                .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
            Box::new(fit)
        }
        None => Box::new(ConstantRecovery(a.recovery)),
    };
    let rows = returns_table(&schedule, &hazards, recovery.as_ref())?;
    run.param("loan", a.loan);
    run.param("apr", a.apr);
    run.param("term", a.term);
    run.param("band", &label);
    if a.curves.is_none() {
        run.param("default_hazard", a.default_hazard);
        run.param("prepay_hazard", a.prepay_hazard);
    }
    if a.recovery_fit.is_none() {
        run.param("recovery", a.recovery);
    }
    match g.format {
        Format::Csv => run.output(
            "returns.csv",
            csv_bytes(|b| write_returns(b, &label, &rows))?,
        ),
        Format::Json => run.json_output("returns.json", &rows)?,
    }
    run.finish()
}

/// `floor`, `ceil`, `exact`, or a whole number of payments.
#[derive(Debug, Clone, Copy)]
pub struct CountArg(PaymentCount);

impl std::str::FromStr for CountArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(CountArg(match s.trim().to_ascii_lowercase().as_str() {
            "floor" => PaymentCount::Floor,
            "ceil" => PaymentCount::Ceil,
            "exact" => PaymentCount::Exact,
            n => PaymentCount::Given(
                n.parse()
                    .map_err(|_| format!("expected floor, ceil, exact or a count, got '{s}'"))?,
            ),
        }))
    }
}

impl fmt::Display for CountArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            PaymentCount::Floor => f.write_str("floor"),
            PaymentCount::Ceil => f.write_str("ceil"),
            PaymentCount::Exact => f.write_str("exact"),
            PaymentCount::Given(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TotalArg {
    Undiscounted,
    PresentValue,
}

#[derive(Debug, Args)]
pub struct SavingsArgs {
    /// Outstanding balance.
    #[arg(long)]
    pub balance: f64,
    /// Current monthly payment.
    #[arg(long)]
    pub payment: f64,
    /// Current APR in percent.
    #[arg(long)]
    pub apr: f64,
    /// Refinance APR in percent.
    #[arg(long)]
    pub new_apr: f64,
    /// Remaining payment count: floor, ceil, exact, or a number.
    #[arg(long, default_value_t = CountArg(PaymentCount::default()))]
    pub payments: CountArg,
    /// How the total saving is valued.
    #[arg(long, value_enum, default_value_t = TotalArg::Undiscounted)]
    pub total: TotalArg,
}

#[derive(Debug, Serialize)]
struct SavingsRow {
    balance: f64,
    payment: f64,
    apr: f64,
    new_apr: f64,
    remaining_payments: f64,
    new_payment: f64,
    monthly_saving: f64,
    total_saving: f64,
}

fn savings(g: &Global, a: &SavingsArgs) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("savings", &g.output_dir);
    let opts = SavingsOptions {
        count: a.payments.0,
        total: match a.total {
            TotalArg::Undiscounted => TotalSavings::Undiscounted,
            TotalArg::PresentValue => TotalSavings::PresentValue,
        },
    };
    let s = refinance_savings(
        a.balance,
        a.payment,
        a.apr / 1200.0,
        a.new_apr / 1200.0,
        opts,
    )?;
    run.param("balance", a.balance);
    run.param("payment", a.payment);
    run.param("apr", a.apr);
    run.param("new_apr", a.new_apr);
    run.param("options", opts);
    match g.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "balance",
                "payment",
                "apr",
                "new_apr",
                "remaining_payments",
                "new_payment",
                "monthly_saving",
                "total_saving",
            ])?;
            w.write_record([
                cents(a.balance),
                cents(a.payment),
                a.apr.to_string(),
                a.new_apr.to_string(),
                s.remaining_payments.to_string(),
                cents(s.new_payment),
                cents(s.monthly_saving),
                cents(s.total_saving),
            ])?;
            run.output("savings.csv", w.into_inner().context("flushing savings")?);
        }
        Format::Json => run.json_output(
            "savings.json",
            &SavingsRow {
                balance: cents_value(a.balance),
                payment: cents_value(a.payment),
                apr: a.apr,
                new_apr: a.new_apr,
                remaining_payments: s.remaining_payments,
                new_payment: cents_value(s.new_payment),
                monthly_saving: cents_value(s.monthly_saving),
                total_saving: cents_value(s.total_saving),
            },
        )?,
    }
    run.finish()
}

#[derive(Debug, Args)]
pub struct RecoveryArgs {
    /// Recovery samples from `ingest` (age, recovery_fraction).
    pub samples: PathBuf,
    /// Fraction of points in each local fit.
    #[arg(long, default_value_t = DEFAULT_SPAN)]
    pub span: f64,
    /// Optimizer restarts.
    #[arg(long, default_value_t = FitOptions::default().restarts)]
    pub restarts: usize,
    /// Objective evaluations per restart.
    #[arg(long, default_value_t = FitOptions::default().max_evals)]
    pub max_evals: usize,
}

fn recovery(g: &Global, a: &RecoveryArgs) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("recovery", &g.output_dir);
    let bytes = run.read_input(&a.samples)?;
    let samples: Vec<RecoverySample> = if is_json(&a.samples) {
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::Schema(format!("{}: {e}", a.samples.display())))?
    } else {
        csv::Reader::from_reader(bytes.as_slice())
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| Error::Schema(format!("{}: {e}", a.samples.display())))?
    };
    if samples.is_empty() {
        return Err(Error::Empty("recovery samples").into());
    }
    let pairs: Vec<(u32, f64)> = samples
        .iter()
        .map(|s| (s.age, s.recovery_fraction))
        .collect();
    let opts = FitOptions {
        restarts: a.restarts,
        max_evals: a.max_evals,
        seed: g.seed.unwrap_or(FitOptions::default().seed),
    };
    let analysis = analyze(&pairs, a.span, opts)?;
    let flagged = analysis.points.flagged();
    if !flagged.is_empty() {
        eprintln!("warning: mean recovery above 1 at ages {flagged:?}");
    }
    run.seed(opts.seed);
    run.param("span", a.span);
    run.param("restarts", a.restarts);
    run.param("max_evals", a.max_evals);
    match g.format {
        Format::Csv => run.output(
            "recovery.csv",
            csv_bytes(|b| write_recovery_csv(b, &analysis))?,
        ),
        Format::Json => run.json_output("recovery.json", &analysis)?,
    }
    run.json_output("recovery_fit.json", &analysis.fit)?;
    run.finish()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    TableB1,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Known distribution and truncation law.
    #[arg(long, value_enum, default_value_t = Preset::TableB1)]
    pub preset: Preset,
    /// Lifetimes drawn per replicate, before truncation.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Replicates.
    #[arg(long, default_value_t = 1_000)]
    pub r: usize,
}

fn simulate(g: &Global, a: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("simulate", &g.output_dir);
    let seed = g.seed.unwrap_or(0);
    let mut config = match a.preset {
        Preset::TableB1 => SimulationConfig::table_b1(a.n, a.r, seed),
    };
    config.theta = theta(g);
    let report = run_study(&config)?;
    run.seed(seed);
    run.param("preset", "table-b1");
    run.param("n", a.n);
    run.param("r", a.r);
    run.param("theta", config.theta);
    match g.format {
        Format::Csv => run.output("report.csv", csv_bytes(|b| write_report_csv(b, &report))?),
        Format::Json => run.json_output("report.json", &report)?,
    }
    run.finish()
}
