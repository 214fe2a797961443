//! Loan-level CSV ingestion: risk-band assignment, eligibility filtering and
//! outcome determination from monthly trust payment vectors.
//!
//! Monetary fields are parsed into [`Decimal`] so that the repayment and
//! missed-payment tests are exact; conversion to floating point happens only
//! downstream of this module.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::iter::Sum;
use std::ops::Add;
use std::str::FromStr;

use num_traits::{FromPrimitive, Num, ToPrimitive, Zero};
use rayon::prelude::*;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk_model::CauseId;

/// APR-defined borrower tier, ordered from lowest to highest rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskBand {
    SuperPrime,
    Prime,
    NearPrime,
    Subprime,
    DeepSubprime,
}

impl RiskBand {
    pub const ALL: [RiskBand; 5] = [
        RiskBand::SuperPrime,
        RiskBand::Prime,
        RiskBand::NearPrime,
        RiskBand::Subprime,
        RiskBand::DeepSubprime,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskBand::SuperPrime => "super_prime",
            RiskBand::Prime => "prime",
            RiskBand::NearPrime => "near_prime",
            RiskBand::Subprime => "subprime",
            RiskBand::DeepSubprime => "deep_subprime",
        }
    }
}

impl fmt::Display for RiskBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskBand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match norm.as_str() {
            "superprime" | "sp" => Ok(RiskBand::SuperPrime),
            "prime" | "p" => Ok(RiskBand::Prime),
            "nearprime" | "np" => Ok(RiskBand::NearPrime),
            "subprime" | "s" => Ok(RiskBand::Subprime),
            "deepsubprime" | "ds" => Ok(RiskBand::DeepSubprime),
            _ => Err(Error::InvalidInput(format!("unknown risk band '{s}'"))),
        }
    }
}

/// Assigns a risk band from the original APR in percent. Bands are
/// left-closed: `[0,5)`, `[5,10)`, `[10,15)`, `[15,20)`, `[20,inf)`.
pub fn classify_risk_band<A>(apr_pct: A) -> Result<RiskBand>
where
    A: Num + PartialOrd + FromPrimitive + Copy,
{
    let at = |v: u8| A::from_u8(v).expect("small integer representable");
    if !(apr_pct >= A::zero()) {
        return Err(Error::InvalidInput("APR must be non-negative".into()));
    }
    Ok(if apr_pct < at(5) {
        RiskBand::SuperPrime
    } else if apr_pct < at(10) {
        RiskBand::Prime
    } else if apr_pct < at(15) {
        RiskBand::NearPrime
    } else if apr_pct < at(20) {
        RiskBand::Subprime
    } else {
        RiskBand::DeepSubprime
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncomeVerification {
    NotStatedNotVerified,
    StatedNotVerified,
    StatedVerified,
    Verified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleCondition {
    New,
    Used,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStatus {
    Current,
    Delinquent,
    Repossessed,
}

macro_rules! parse_enum {
    ($ty:ty, $($text:literal => $variant:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
                match norm.as_str() {
                    $($text => Ok($variant),)+
                    _ => Err(Error::Schema(format!(
                        "invalid {} value '{s}'",
                        stringify!($ty)
                    ))),
                }
            }
        }
    };
}

parse_enum!(IncomeVerification,
    "not_stated_not_verified" => IncomeVerification::NotStatedNotVerified,
    "not_stated" => IncomeVerification::NotStatedNotVerified,
    "stated_not_verified" => IncomeVerification::StatedNotVerified,
    "stated_verified" => IncomeVerification::StatedVerified,
    "verified" => IncomeVerification::Verified,
);
impl IncomeVerification {
    pub fn as_str(self) -> &'static str {
        match self {
            IncomeVerification::NotStatedNotVerified => "not_stated_not_verified",
            IncomeVerification::StatedNotVerified => "stated_not_verified",
            IncomeVerification::StatedVerified => "stated_verified",
            IncomeVerification::Verified => "verified",
        }
    }
}

impl VehicleCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleCondition::New => "new",
            VehicleCondition::Used => "used",
        }
    }
}

impl InitialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            InitialStatus::Current => "current",
            InitialStatus::Delinquent => "delinquent",
            InitialStatus::Repossessed => "repossessed",
        }
    }
}

parse_enum!(VehicleCondition, "new" => VehicleCondition::New, "used" => VehicleCondition::Used);
parse_enum!(InitialStatus,
    "current" => InitialStatus::Current,
    "delinquent" => InitialStatus::Delinquent,
    "repossessed" => InitialStatus::Repossessed,
);

/// Monthly trust vectors for one loan. A missing balance (`NA` in the
/// source) is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaymentHistory<M> {
    pub balance: Vec<Option<M>>,
    pub payment: Vec<M>,
    pub principal: Vec<M>,
}

impl<M> PaymentHistory<M> {
    pub fn new(balance: Vec<Option<M>>, payment: Vec<M>, principal: Vec<M>) -> Result<Self> {
        if balance.is_empty() || payment.is_empty() || principal.is_empty() {
            return Err(Error::Empty("payment history"));
        }
        if balance.len() != payment.len() || payment.len() != principal.len() {
            return Err(Error::InvalidInput(format!(
                "payment vectors differ in length ({}, {}, {})",
                balance.len(),
                payment.len(),
                principal.len()
            )));
        }
        Ok(Self {
            balance,
            payment,
            principal,
        })
    }

    /// Number of active trust months.
    pub fn len(&self) -> usize {
        self.payment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payment.is_empty()
    }
}

impl<M: Copy + Zero + PartialOrd + Add<Output = M> + Sum> PaymentHistory<M> {
    fn principal_paid(&self) -> M {
        self.principal.iter().copied().sum()
    }

    /// True when the loan neither paid off its first-month balance nor
    /// reported a final balance, so its outcome cannot be read from the data.
    pub fn is_integrity_failure(&self) -> bool {
        let short = match self.balance[0] {
            Some(init) => self.principal_paid() < init,
            None => true,
        };
        short && self.balance.last().copied().flatten().is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Defaulted,
    Repaid,
    Censored,
}

/// Outcome and the one-based trust month at which it was recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoanOutcome {
    pub kind: OutcomeKind,
    pub event_month: u32,
}

/// Default repayment pad in currency units.
pub const DEFAULT_PAD: u32 = 10;

/// Reads the loan outcome off the monthly vectors.
///
/// Repaid if total principal plus `pad` reaches the first-month balance
/// (timed at the first zero balance); otherwise defaulted at the first of
/// three consecutive zero payments; otherwise censored at the last month.
pub fn determine_outcome<M>(history: &PaymentHistory<M>, pad: M) -> Result<LoanOutcome>
where
    M: Copy + Zero + PartialOrd + Add<Output = M> + Sum,
{
    let len = history.len();
    if len == 0 {
        return Err(Error::Empty("payment history"));
    }
    if history.balance.len() != len || history.principal.len() != len {
        return Err(Error::InvalidInput(
            "payment vectors differ in length".into(),
        ));
    }
    let init = history.balance[0]
        .ok_or_else(|| Error::InvalidInput("first-month balance missing".into()))?;

    if history.principal_paid() + pad >= init {
        // A paid-off loan may simply stop reporting; the first gap then
        // marks the payoff month.
        let month = history
            .balance
            .iter()
            .position(|b| b.is_some_and(|b| b <= M::zero()))
            .or_else(|| history.balance.iter().position(Option::is_none))
            .map_or(len, |i| i + 1);
        return Ok(LoanOutcome {
            kind: OutcomeKind::Repaid,
            event_month: month as u32,
        });
    }

    let mut run = 0usize;
    for (i, p) in history.payment.iter().enumerate() {
        if p.is_zero() {
            run += 1;
            if run == 3 {
                return Ok(LoanOutcome {
                    kind: OutcomeKind::Defaulted,
                    event_month: (i - 1) as u32,
                });
            }
        } else {
            run = 0;
        }
    }
    Ok(LoanOutcome {
        kind: OutcomeKind::Censored,
        event_month: len as u32,
    })
}

/// One truncated and possibly censored lifetime in loan-age coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservedLoan {
    pub entry_age: u32,
    pub exit_age: u32,
    /// `Some` exactly when the exit is an observed event.
    pub cause: Option<CauseId>,
}

impl ObservedLoan {
    pub fn new(entry_age: u32, exit_age: u32, cause: Option<CauseId>) -> Result<Self> {
        if entry_age > exit_age {
            return Err(Error::InvalidInput(format!(
                "entry age {entry_age} after exit age {exit_age}"
            )));
        }
        Ok(Self {
            entry_age,
            exit_age,
            cause,
        })
    }

    pub fn event(entry_age: u32, exit_age: u32, cause: CauseId) -> Result<Self> {
        Self::new(entry_age, exit_age, Some(cause))
    }

    pub fn censored(entry_age: u32, exit_age: u32) -> Result<Self> {
        Self::new(entry_age, exit_age, None)
    }

    pub fn observed_event(&self) -> bool {
        self.cause.is_some()
    }

    pub fn at_risk(&self, age: u32) -> bool {
        self.entry_age <= age && age <= self.exit_age
    }
}

/// Maps trust-month timing onto loan ages: entry is the one-based age at the
/// first trust month.
pub fn observation_from_outcome(
    loan_age_at_entry: u32,
    months_active: usize,
    outcome: LoanOutcome,
) -> Result<ObservedLoan> {
    if outcome.event_month == 0 || outcome.event_month as usize > months_active {
        return Err(Error::InvalidInput(format!(
            "event month {} outside [1, {months_active}]",
            outcome.event_month
        )));
    }
    let cause = match outcome.kind {
        OutcomeKind::Defaulted => Some(CauseId::Default),
        OutcomeKind::Repaid => Some(CauseId::Prepay),
        OutcomeKind::Censored => None,
    };
    ObservedLoan::new(
        loan_age_at_entry + 1,
        loan_age_at_entry + outcome.event_month,
        cause,
    )
}

pub fn to_observation(record: &LoanRecord, outcome: LoanOutcome) -> Result<ObservedLoan> {
    observation_from_outcome(record.loan_age_at_entry, record.history.len(), outcome)
}

/// Static loan attributes joined with the monthly trust history.
#[derive(Debug, Clone, PartialEq)]
pub struct LoanRecord {
    pub loan_id: String,
    pub apr_pct: Decimal,
    pub original_amount: Decimal,
    pub original_term: u32,
    pub loan_age_at_entry: u32,
    pub has_coborrower: bool,
    pub income_verification: IncomeVerification,
    pub subvention: bool,
    pub vehicle_condition: VehicleCondition,
    pub initial_status: InitialStatus,
    pub recovered_amount: Decimal,
    pub history: PaymentHistory<Decimal>,
}

impl LoanRecord {
    pub fn risk_band(&self) -> Result<RiskBand> {
        classify_risk_band(self.apr_pct)
    }
}

/// Eligibility criteria. Every criterion can be switched off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub exclude_coborrower: bool,
    pub require_stated_not_verified: bool,
    pub exclude_subvention: bool,
    /// `None` keeps both conditions.
    pub condition: Option<VehicleCondition>,
    pub exclude_repossessed: bool,
    /// Exclusive upper bound on loan age at the first trust month.
    pub max_entry_age: Option<u32>,
    /// Allowed original terms; empty allows all.
    pub terms: Vec<u32>,
    pub drop_integrity_failures: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self {
            exclude_coborrower: true,
            require_stated_not_verified: true,
            exclude_subvention: true,
            condition: Some(VehicleCondition::Used),
            exclude_repossessed: true,
            max_entry_age: Some(18),
            terms: vec![72, 73],
            drop_integrity_failures: true,
        }
    }
}

impl FilterPolicy {
    /// Policy that keeps everything.
    pub fn permissive() -> Self {
        Self {
            exclude_coborrower: false,
            require_stated_not_verified: false,
            exclude_subvention: false,
            condition: None,
            exclude_repossessed: false,
            max_entry_age: None,
            terms: Vec::new(),
            drop_integrity_failures: false,
        }
    }

    pub fn accepts(&self, r: &LoanRecord) -> bool {
        !(self.exclude_coborrower && r.has_coborrower)
            && !(self.require_stated_not_verified
                && r.income_verification != IncomeVerification::StatedNotVerified)
            && !(self.exclude_subvention && r.subvention)
            && self.condition.is_none_or(|c| c == r.vehicle_condition)
            && !(self.exclude_repossessed && r.initial_status == InitialStatus::Repossessed)
            && self.max_entry_age.is_none_or(|m| r.loan_age_at_entry < m)
            && (self.terms.is_empty() || self.terms.contains(&r.original_term))
            && !(self.drop_integrity_failures && r.history.is_integrity_failure())
    }
}

pub fn filter_loans(records: Vec<LoanRecord>, policy: &FilterPolicy) -> Vec<LoanRecord> {
    records.into_iter().filter(|r| policy.accepts(r)).collect()
}

/// A loan after classification and outcome determination.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedLoan {
    pub loan_id: String,
    pub band: RiskBand,
    pub outcome: LoanOutcome,
    pub observation: ObservedLoan,
    /// Recovered amount over original amount, for defaulted loans.
    pub recovery_fraction: Option<Decimal>,
}

/// Classifies and resolves every record in parallel; output is ordered by
/// `loan_id`.
pub fn process_records(records: &[LoanRecord], pad: Decimal) -> Result<Vec<IngestedLoan>> {
    let mut out = records
        .par_iter()
        .map(|r| {
            let band = r.risk_band()?;
            let outcome = determine_outcome(&r.history, pad)?;
            let observation = to_observation(r, outcome)?;
            let recovery_fraction = (outcome.kind == OutcomeKind::Defaulted)
                .then(|| r.recovered_amount / r.original_amount);
            Ok(IngestedLoan {
                loan_id: r.loan_id.clone(),
                band,
                outcome,
                observation,
                recovery_fraction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.loan_id.cmp(&b.loan_id));
    Ok(out)
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

pub const LOAN_COLUMNS: [&str; 11] = [
    "loan_id",
    "apr_pct",
    "original_amount",
    "original_term",
    "loan_age_at_entry",
    "has_coborrower",
    "income_verification",
    "subvention",
    "vehicle_condition",
    "initial_status",
    "recovered_amount",
];

pub const PAYMENT_COLUMNS: [&str; 5] =
    ["loan_id", "trust_month", "balance", "payment", "principal"];

pub const OBSERVATION_COLUMNS: [&str; 6] =
    ["loan_id", "band", "entry_age", "exit_age", "event", "cause"];

fn column_index<R: Read>(reader: &mut csv::Reader<R>, required: &[&str]) -> Result<Vec<usize>> {
    let headers = reader.headers()?.clone();
    required
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
        })
        .collect()
}

fn parse_decimal(field: &str, column: &str, line: u64) -> Result<Decimal> {
    Decimal::from_str_exact(field.trim()).map_err(|_| {
        Error::Schema(format!(
            "line {line}: column '{column}': bad amount '{field}'"
        ))
    })
}

fn parse_int(field: &str, column: &str, line: u64) -> Result<u32> {
    field.trim().parse().map_err(|_| {
        Error::Schema(format!(
            "line {line}: column '{column}': bad integer '{field}'"
        ))
    })
}

fn parse_bool(field: &str, column: &str, line: u64) -> Result<bool> {
    match field.trim().to_ascii_lowercase().as_str() {
        "true" | "t" | "1" | "yes" | "y" => Ok(true),
        "false" | "f" | "0" | "no" | "n" => Ok(false),
        _ => Err(Error::Schema(format!(
            "line {line}: column '{column}': bad boolean '{field}'"
        ))),
    }
}

fn is_na(field: &str) -> bool {
    matches!(field.trim(), "" | "NA" | "na" | "NaN" | "null")
}

struct StaticRow {
    loan_id: String,
    apr_pct: Decimal,
    original_amount: Decimal,
    original_term: u32,
    loan_age_at_entry: u32,
    has_coborrower: bool,
    income_verification: IncomeVerification,
    subvention: bool,
    vehicle_condition: VehicleCondition,
    initial_status: InitialStatus,
    recovered_amount: Decimal,
}

fn with_line<T>(r: Result<T>, line: u64) -> Result<T> {
    r.map_err(|e| match e {
        Error::Schema(m) if !m.starts_with("line") => Error::Schema(format!("line {line}: {m}")),
        other => other,
    })
}

fn read_static<R: Read>(input: R) -> Result<Vec<StaticRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let idx = column_index(&mut rdr, &LOAN_COLUMNS)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i: usize| rec.get(idx[i]).unwrap_or("");
        let original_amount = parse_decimal(f(2), LOAN_COLUMNS[2], line)?;
        let apr_pct = parse_decimal(f(1), LOAN_COLUMNS[1], line)?;
        if original_amount <= Decimal::ZERO || apr_pct < Decimal::ZERO {
            return Err(Error::Schema(format!(
                "line {line}: original_amount must be positive and apr_pct non-negative"
            )));
        }
        rows.push(StaticRow {
            loan_id: f(0).to_string(),
            apr_pct,
            original_amount,
            original_term: parse_int(f(3), LOAN_COLUMNS[3], line)?,
            loan_age_at_entry: parse_int(f(4), LOAN_COLUMNS[4], line)?,
            has_coborrower: parse_bool(f(5), LOAN_COLUMNS[5], line)?,
            income_verification: with_line(f(6).parse(), line)?,
            subvention: parse_bool(f(7), LOAN_COLUMNS[7], line)?,
            vehicle_condition: with_line(f(8).parse(), line)?,
            initial_status: with_line(f(9).parse(), line)?,
            recovered_amount: if is_na(f(10)) {
                Decimal::ZERO
            } else {
                parse_decimal(f(10), LOAN_COLUMNS[10], line)?
            },
        });
    }
    Ok(rows)
}

type MonthRow = (u32, Option<Decimal>, Decimal, Decimal);

fn read_payments<R: Read>(input: R) -> Result<BTreeMap<String, Vec<MonthRow>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let idx = column_index(&mut rdr, &PAYMENT_COLUMNS)?;
    let mut by_loan: BTreeMap<String, Vec<MonthRow>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i: usize| rec.get(idx[i]).unwrap_or("");
        let month = parse_int(f(1), "trust_month", line)?;
        let balance = if is_na(f(2)) {
            None
        } else {
            Some(parse_decimal(f(2), "balance", line)?)
        };
        let amount = |i: usize, name: &str| {
            if is_na(f(i)) {
                Ok(Decimal::ZERO)
            } else {
                parse_decimal(f(i), name, line)
            }
        };
        let payment = amount(3, "payment")?;
        let principal = amount(4, "principal")?;
        by_loan
            .entry(f(0).to_string())
            .or_default()
            .push((month, balance, payment, principal));
    }
    Ok(by_loan)
}

/// Reads the static loan table and the long-format payment table and joins
/// them by `loan_id`. Trust months of each loan must be exactly `1..=n`.
pub fn read_loan_records<R1: Read, R2: Read>(loans: R1, payments: R2) -> Result<Vec<LoanRecord>> {
    let statics = read_static(loans)?;
    let mut payments = read_payments(payments)?;
    let mut out = Vec::with_capacity(statics.len());
    for s in statics {
        let mut rows = payments
            .remove(&s.loan_id)
            .ok_or_else(|| Error::Schema(format!("loan '{}' has no payment rows", s.loan_id)))?;
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(i, r)| r.0 as usize != i + 1) {
            return Err(Error::Schema(format!(
                "loan '{}': trust months must run 1..={} without gaps",
                s.loan_id,
                rows.len()
            )));
        }
        let history = PaymentHistory::new(
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
            rows.iter().map(|r| r.3).collect(),
        )?;
        out.push(LoanRecord {
            loan_id: s.loan_id,
            apr_pct: s.apr_pct,
            original_amount: s.original_amount,
            original_term: s.original_term,
            loan_age_at_entry: s.loan_age_at_entry,
            has_coborrower: s.has_coborrower,
            income_verification: s.income_verification,
            subvention: s.subvention,
            vehicle_condition: s.vehicle_condition,
            initial_status: s.initial_status,
            recovered_amount: s.recovered_amount,
            history,
        });
    }
    if let Some(orphan) = payments.keys().next() {
        return Err(Error::Schema(format!(
            "payment rows for unknown loan '{orphan}'"
        )));
    }
    Ok(out)
}

/// Writes records back out as the static and long-format payment tables.
pub fn write_loan_records<W1: Write, W2: Write>(
    loans: W1,
    payments: W2,
    records: &[LoanRecord],
) -> Result<()> {
    let mut lw = csv::Writer::from_writer(loans);
    let mut pw = csv::Writer::from_writer(payments);
    lw.write_record(LOAN_COLUMNS)?;
    pw.write_record(PAYMENT_COLUMNS)?;
    for r in records {
        lw.write_record([
            r.loan_id.clone(),
            r.apr_pct.to_string(),
            r.original_amount.to_string(),
            r.original_term.to_string(),
            r.loan_age_at_entry.to_string(),
            r.has_coborrower.to_string(),
            r.income_verification.as_str().to_string(),
            r.subvention.to_string(),
            r.vehicle_condition.as_str().to_string(),
            r.initial_status.as_str().to_string(),
            r.recovered_amount.to_string(),
        ])?;
        let h = &r.history;
        for i in 0..h.len() {
            pw.write_record([
                r.loan_id.clone(),
                (i + 1).to_string(),
                h.balance[i].map_or_else(|| "NA".to_string(), |b| b.to_string()),
                h.payment[i].to_string(),
                h.principal[i].to_string(),
            ])?;
        }
    }
    lw.flush()?;
    pw.flush()?;
    Ok(())
}

/// One line of the observations table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub loan_id: String,
    pub band: RiskBand,
    pub entry_age: u32,
    pub exit_age: u32,
    pub event: u8,
    pub cause: Option<CauseId>,
}

impl ObservationRow {
    pub fn from_ingested(l: &IngestedLoan) -> Self {
        Self {
            loan_id: l.loan_id.clone(),
            band: l.band,
            entry_age: l.observation.entry_age,
            exit_age: l.observation.exit_age,
            event: u8::from(l.observation.observed_event()),
            cause: l.observation.cause,
        }
    }

    pub fn observation(&self) -> Result<ObservedLoan> {
        if (self.event == 1) != self.cause.is_some() || self.event > 1 {
            return Err(Error::Schema(format!(
                "loan '{}': event flag and cause disagree",
                self.loan_id
            )));
        }
        ObservedLoan::new(self.entry_age, self.exit_age, self.cause)
            .map_err(|e| Error::Schema(format!("loan '{}': {e}", self.loan_id)))
    }
}

pub fn write_observations<W: Write>(out: W, rows: &[ObservationRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(OBSERVATION_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_observations<R: Read>(input: R) -> Result<Vec<ObservationRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    column_index(&mut rdr, &OBSERVATION_COLUMNS)?;
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<ObservationRow>() {
        let row = rec.map_err(|e| Error::Schema(e.to_string()))?;
        row.observation()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Defaulted-loan recovery fractions keyed by default age.
pub fn recovery_samples(loans: &[IngestedLoan]) -> Vec<(u32, f64)> {
    loans
        .iter()
        .filter_map(|l| {
            l.recovery_fraction
                .and_then(|f| f.to_f64())
                .map(|f| (l.observation.exit_age, f))
        })
        .collect()
}
