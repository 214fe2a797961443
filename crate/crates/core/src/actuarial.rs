//! Amortization arithmetic, risk-adjusted returns over one month and over
//! the remaining life of a loan, refinance savings and LTV paths.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::HazardCurve;
use crate::risk_model::{conditional_probs_from_hazards, ConditionalEventTable};
use crate::scalar::Real;

/// Level payment amortizing `principal` over `term` months at `rate` per
/// month.
pub fn monthly_payment<T: Real>(principal: T, rate: T, term: u32) -> Result<T> {
    if term == 0 {
        return Err(Error::InvalidInput(
            "term must be at least one month".into(),
        ));
    }
    annuity_payment(principal, rate, T::from_count(term as usize))
}

fn annuity_payment<T: Real>(principal: T, rate: T, periods: T) -> Result<T> {
    if !(periods > T::zero()) {
        return Err(Error::InvalidInput("non-positive number of periods".into()));
    }
    if rate < T::zero() {
        return Err(Error::InvalidInput("negative interest rate".into()));
    }
    if rate == T::zero() {
        return Ok(principal / periods);
    }
    Ok(principal * rate / (T::one() - (T::one() + rate).powf(-periods)))
}

/// Scheduled balance after `x` payments.
pub fn balance_at<T: Real>(principal: T, rate: T, term: u32, x: u32) -> Result<T> {
    let payment = monthly_payment(principal, rate, term)?;
    balance_with_payment(principal, rate, payment, term, x)
}

fn balance_with_payment<T: Real>(
    principal: T,
    rate: T,
    payment: T,
    term: u32,
    x: u32,
) -> Result<T> {
    if x > term {
        return Err(Error::InvalidInput(format!("month {x} beyond term {term}")));
    }
    let xf = T::from_count(x as usize);
    if rate == T::zero() {
        return Ok(principal - payment * xf);
    }
    let growth = (T::one() + rate).powf(xf);
    Ok(principal * growth - payment * (growth - T::one()) / rate)
}

/// Contract amortization path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct AmortizationSchedule<T> {
    pub principal: T,
    pub monthly_rate: T,
    pub term: u32,
    pub payment: T,
    /// `balances[x]` for `x` in `0..=term`.
    pub balances: Vec<T>,
}

impl<T: Real> AmortizationSchedule<T> {
    pub fn new(principal: T, monthly_rate: T, term: u32) -> Result<Self> {
        if !(principal > T::zero()) {
            return Err(Error::InvalidInput("principal must be positive".into()));
        }
        let payment = monthly_payment(principal, monthly_rate, term)?;
        let balances = (0..=term)
            .map(|x| balance_with_payment(principal, monthly_rate, payment, term, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            principal,
            monthly_rate,
            term,
            payment,
            balances,
        })
    }

    /// From an APR in percent, e.g. `22.65`.
    pub fn from_apr(principal: T, apr_pct: T, term: u32) -> Result<Self> {
        Self::new(principal, apr_pct / T::lit(1200.0), term)
    }

    pub fn balance(&self, x: u32) -> Result<T> {
        self.balances
            .get(x as usize)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("month {x} beyond term {}", self.term)))
    }
}

/// Monthly return `r` solving `B_x = [lambda R + (1 - lambda)(B_{x+1} + P)] / (1 + r)`.
pub fn one_month_return<T: Real>(
    default_hazard: T,
    balance_now: T,
    balance_next: T,
    payment: T,
    recovery_next: T,
) -> Result<T> {
    if balance_now == T::zero() {
        return Err(Error::InvalidInput("zero price".into()));
    }
    if !(default_hazard >= T::zero() && default_hazard <= T::one()) {
        return Err(Error::InvalidInput(format!(
            "hazard {default_hazard} not a probability"
        )));
    }
    let epv =
        default_hazard * recovery_next + (T::one() - default_hazard) * (balance_next + payment);
    Ok(epv / balance_now - T::one())
}

/// Geometric compounding of a monthly rate.
pub fn annualize<T: Real>(monthly: T) -> Result<T> {
    if !(monthly > -T::one()) {
        return Err(Error::InvalidInput(format!("monthly rate {monthly} <= -1")));
    }
    Ok((T::one() + monthly).powi(12) - T::one())
}

/// Recovery on default at a given age, as a fraction of the original
/// principal.
pub trait RecoveryCurve<T>: Sync {
    fn fraction(&self, age: u32) -> T;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantRecovery<T>(pub T);

impl<T: Real> RecoveryCurve<T> for ConstantRecovery<T> {
    fn fraction(&self, _age: u32) -> T {
        self.0
    }
}

/// Recovery fractions indexed by age starting at `start_age`, held flat
/// outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct TabulatedRecovery<T> {
    pub start_age: u32,
    pub values: Vec<T>,
}

impl<T: Real> RecoveryCurve<T> for TabulatedRecovery<T> {
    fn fraction(&self, age: u32) -> T {
        let i = age.saturating_sub(self.start_age) as usize;
        self.values
            .get(i.min(self.values.len().saturating_sub(1)))
            .copied()
            .unwrap_or(T::zero())
    }
}

/// Default and prepayment hazards by age. Ages past the last entry keep the
/// last value (geometric tail); ages before the first keep the first value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct CauseHazards<T> {
    pub start_age: u32,
    pub default: Vec<T>,
    pub prepay: Vec<T>,
}

impl<T: Real> CauseHazards<T> {
    pub fn new(start_age: u32, default: Vec<T>, prepay: Vec<T>) -> Result<Self> {
        if default.is_empty() || default.len() != prepay.len() {
            return Err(Error::InvalidInput(
                "hazard vectors empty or of unequal length".into(),
            ));
        }
        Ok(Self {
            start_age,
            default,
            prepay,
        })
    }

    /// No terminations at any age.
    pub fn none() -> Self {
        Self {
            start_age: 0,
            default: vec![T::zero()],
            prepay: vec![T::zero()],
        }
    }

    /// Merges estimated curves onto a common grid. Ages missing from a
    /// curve inherit the previous age's value.
    pub fn from_curves(default: &HazardCurve<T>, prepay: &HazardCurve<T>) -> Result<Self> {
        let ages = || default.rows.iter().chain(&prepay.rows).map(|r| r.age);
        let lo = ages().min().ok_or(Error::Empty("hazard curves"))?;
        let hi = ages().max().ok_or(Error::Empty("hazard curves"))?;
        let fill = |c: &HazardCurve<T>| {
            let mut last = c.rows.first().map_or(T::zero(), |r| r.hazard);
            (lo..=hi)
                .map(|age| {
                    if let Some(h) = c.hazard(age) {
                        last = h;
                    }
                    last
                })
                .collect::<Vec<_>>()
        };
        Self::new(lo, fill(default), fill(prepay))
    }

    pub fn at(&self, age: u32) -> (T, T) {
        let i = (age.saturating_sub(self.start_age) as usize).min(self.default.len() - 1);
        (self.default[i], self.prepay[i])
    }

    /// Hazard sequences over `[from, to]` inclusive.
    pub fn span(&self, from: u32, to: u32) -> (Vec<T>, Vec<T>) {
        (from..=to).map(|a| self.at(a)).unzip()
    }
}

/// Lower end of the bracketing interval for monthly return roots.
pub const ROOT_LO: f64 = -0.99;
/// Initial upper end of the bracketing interval for monthly return roots.
/// The bracket doubles while the function is still positive there.
pub const ROOT_HI: f64 = 2.0;
/// Largest upper end the bracket may grow to.
pub const ROOT_HI_MAX: f64 = 1e12;

/// Event probabilities driving the lifetime cash flows of a loan at age
/// `x`: an event at age `j` in `[x, term - 1]` settles at `j + 1`; the
/// residual mass runs to maturity.
pub fn lifetime_event_probs<T: Real>(
    schedule: &AmortizationSchedule<T>,
    hazards: &CauseHazards<T>,
    x: u32,
) -> Result<ConditionalEventTable<T>> {
    if x >= schedule.term {
        return Err(Error::InvalidInput(format!(
            "age {x} leaves no remaining payments (term {})",
            schedule.term
        )));
    }
    let (d, p) = hazards.span(x, schedule.term - 1);
    let table = conditional_probs_from_hazards(x, &d, &p)?;
    let total = table.total();
    if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(64.0)) {
        return Err(Error::Numerical(format!(
            "event probabilities sum to {total}"
        )));
    }
    Ok(table)
}

/// Expected present value at monthly rate `rho` of a loan at age `x`.
pub fn lifetime_epv<T: Real>(
    schedule: &AmortizationSchedule<T>,
    probs: &ConditionalEventTable<T>,
    recovery: &dyn RecoveryCurve<T>,
    x: u32,
    rho: T,
) -> T {
    let v = T::one() / (T::one() + rho);
    let p = schedule.payment;
    let mut epv = T::zero();
    let mut annuity = T::zero(); // value of P paid at times 1..k-1
    let mut disc = T::one();
    for (k, (&pd, &pp)) in probs.default.iter().zip(&probs.prepay).enumerate() {
        disc *= v;
        let settle = x + k as u32 + 1;
        let recovered = recovery.fraction(settle) * schedule.principal;
        let payoff = schedule.balances[settle as usize] + p;
        epv += pd * (annuity + recovered * disc) + pp * (annuity + payoff * disc);
        annuity += p * disc;
    }
    epv + probs.residual * annuity
}

/// Monthly rate equating the expected present value of the remaining cash
/// flows to the scheduled balance at age `x`, found by bisection.
pub fn lifetime_return<T: Real>(
    schedule: &AmortizationSchedule<T>,
    hazards: &CauseHazards<T>,
    recovery: &dyn RecoveryCurve<T>,
    x: u32,
) -> Result<T> {
    let probs = lifetime_event_probs(schedule, hazards, x)?;
    let price = schedule.balance(x)?;
    if !(price > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "non-positive balance at age {x}"
        )));
    }
    bisect_rate(
        |rho| lifetime_epv(schedule, &probs, recovery, x, rho) - price,
        price,
    )
}

/// Root of a decreasing function on `[ROOT_LO, hi]`, where `hi` starts at
/// `ROOT_HI` and doubles up to `ROOT_HI_MAX` until the function turns
/// non-positive. Recoveries measured against the original amount can push
/// late-age returns far above the initial bracket.
pub(crate) fn bisect_rate<T: Real>(f: impl Fn(T) -> T, scale: T) -> Result<T> {
    let (mut lo, mut hi) = (T::lit(ROOT_LO), T::lit(ROOT_HI));
    let f_lo = f(lo);
    let mut f_hi = f(hi);
    while f_hi > T::zero() && hi < T::lit(ROOT_HI_MAX) {
        hi *= T::lit(2.0);
        f_hi = f(hi);
    }
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if !(f_lo > T::zero() && f_hi < T::zero()) {
        return Err(Error::Numerical(format!(
            "no sign change on [{ROOT_LO}, {hi}] ({f_lo}, {f_hi})"
        )));
    }
    let tol = T::lit(1e-12) * scale.abs();
    for _ in 0..400 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm.abs() <= tol && hi - lo <= T::epsilon() * T::lit(4.0) {
            return Ok(mid);
        }
        if fm > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ReturnRow<T> {
    pub age: u32,
    pub one_month_annualized: T,
    pub lifetime_annualized: T,
}

/// Annualized one-month and lifetime returns for every age in
/// `[1, term - 1]`.
pub fn returns_table<T: Real>(
    schedule: &AmortizationSchedule<T>,
    hazards: &CauseHazards<T>,
    recovery: &dyn RecoveryCurve<T>,
) -> Result<Vec<ReturnRow<T>>> {
    (1..schedule.term)
        .into_par_iter()
        .map(|x| {
            let (h_default, _) = hazards.at(x);
            let r1 = one_month_return(
                h_default,
                schedule.balance(x)?,
                schedule.balance(x + 1)?,
                schedule.payment,
                recovery.fraction(x + 1) * schedule.principal,
            )?;
            let rho = lifetime_return(schedule, hazards, recovery, x)?;
            Ok(ReturnRow {
                age: x,
                one_month_annualized: annualize(r1)?,
                lifetime_annualized: annualize(rho)?,
            })
        })
        .collect()
}

pub fn write_returns<T: Real, W: Write>(out: W, band: &str, rows: &[ReturnRow<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "band",
        "age",
        "one_month_return_annualized",
        "lifetime_return_annualized",
    ])?;
    for r in rows {
        w.write_record([
            band.to_string(),
            r.age.to_string(),
            r.one_month_annualized.to_string(),
            r.lifetime_annualized.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// How a fractional number of remaining payments is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaymentCount {
    /// Whole payments only; a trailing partial payment is dropped.
    #[default]
    Floor,
    /// Count the trailing partial payment as a full one.
    Ceil,
    /// Keep the fractional count.
    Exact,
    /// A count known from elsewhere, e.g. averaged loan-level schedules.
    Given(u32),
}

/// Fractional number of level payments `P` that retire `B` at rate `r`.
pub fn remaining_payments_exact<T: Real>(balance: T, payment: T, rate: T) -> Result<T> {
    if !(balance > T::zero() && payment > T::zero()) {
        return Err(Error::InvalidInput(
            "balance and payment must be positive".into(),
        ));
    }
    if rate == T::zero() {
        return Ok(balance / payment);
    }
    if !(payment > balance * rate) {
        return Err(Error::InvalidInput(format!(
            "payment {payment} does not cover interest {}",
            balance * rate
        )));
    }
    Ok(-(T::one() - balance * rate / payment).ln() / (T::one() + rate).ln())
}

/// Whole remaining payments, floor convention.
pub fn remaining_payments<T: Real>(balance: T, payment: T, rate: T) -> Result<u32> {
    let n = remaining_payments_exact(balance, payment, rate)?;
    Ok(round_count(n, PaymentCount::Floor).as_f64() as u32)
}

fn round_count<T: Real>(n: T, mode: PaymentCount) -> T {
    // absorb representation error in exact annuity constructions
    let slack = T::lit(1e-9);
    match mode {
        PaymentCount::Floor => (n + slack).floor().max(T::one()),
        PaymentCount::Ceil => (n - slack).ceil().max(T::one()),
        PaymentCount::Exact => n,
        PaymentCount::Given(k) => T::from_count(k as usize),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalSavings {
    /// Monthly saving times the remaining payment count.
    #[default]
    Undiscounted,
    /// Monthly saving valued as an annuity at the new rate.
    PresentValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SavingsOptions {
    pub count: PaymentCount,
    pub total: TotalSavings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SavingsEstimate<T> {
    pub remaining_payments: T,
    pub old_payment: T,
    pub new_payment: T,
    pub monthly_saving: T,
    pub total_saving: T,
}

/// Payment reduction from refinancing the outstanding balance at `new_rate`
/// over the remaining payment count, with no upfront charge.
pub fn refinance_savings<T: Real>(
    balance: T,
    old_payment: T,
    old_rate: T,
    new_rate: T,
    opts: SavingsOptions,
) -> Result<SavingsEstimate<T>> {
    if !(new_rate < old_rate) {
        return Err(Error::InvalidInput(
            "refinance rate must be lower than the current rate".into(),
        ));
    }
    let exact = remaining_payments_exact(balance, old_payment, old_rate)?;
    if opts.count == PaymentCount::Given(0) {
        return Err(Error::InvalidInput(
            "remaining payment count must be positive".into(),
        ));
    }
    let n = round_count(exact, opts.count);
    let new_payment = annuity_payment(balance, new_rate, n)?;
    let monthly_saving = old_payment - new_payment;
    let total_saving = match opts.total {
        TotalSavings::Undiscounted => monthly_saving * n,
        TotalSavings::PresentValue => monthly_saving * balance / new_payment,
    };
    Ok(SavingsEstimate {
        remaining_payments: n,
        old_payment,
        new_payment,
        monthly_saving,
        total_saving,
    })
}

/// `B_x / (value * (1 - d)^(x / 12))` for `x` in `0..=term`.
pub fn ltv_trajectory<T: Real>(
    schedule: &AmortizationSchedule<T>,
    initial_value: T,
    annual_depreciation: T,
) -> Result<Vec<(u32, T)>> {
    if !(initial_value > T::zero()) {
        return Err(Error::InvalidInput(
            "collateral value must be positive".into(),
        ));
    }
    if !(annual_depreciation >= T::zero() && annual_depreciation < T::one()) {
        return Err(Error::InvalidInput(
            "depreciation must lie in [0, 1)".into(),
        ));
    }
    let keep = T::one() - annual_depreciation;
    Ok(schedule
        .balances
        .iter()
        .enumerate()
        .map(|(x, &b)| {
            let value = initial_value * keep.powf(T::from_count(x) / T::lit(12.0));
            (x as u32, b / value)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn payment_examples() {
        assert_abs_diff_eq!(
            monthly_payment(100.0, 0.01, 12).unwrap(),
            8.8849,
            epsilon = 5e-5
        );
        assert_eq!(monthly_payment(100.0, 0.0, 10).unwrap(), 10.0);
        assert!(monthly_payment(100.0, 0.01, 0).is_err());
        // deep subprime $100 over 72 months
        let p = monthly_payment(100.0, 0.2265 / 12.0, 72).unwrap();
        let pv: f64 = (1..=72).map(|k| p / (1.0 + 0.2265 / 12.0f64).powi(k)).sum();
        assert_abs_diff_eq!(pv, 100.0, epsilon = 1e-10);
    }

    #[test]
    fn balance_examples() {
        assert_eq!(balance_at(100.0, 0.01, 12, 0).unwrap(), 100.0);
        assert_abs_diff_eq!(
            balance_at(100.0, 0.01, 12, 12).unwrap(),
            0.0,
            epsilon = 0.01
        );
        // recursion oracle: B_{k+1} = B_k (1 + r) - P
        let p = monthly_payment(100.0, 0.01, 12).unwrap();
        let mut b = 100.0;
        for _ in 0..6 {
            b = b * 1.01 - p;
        }
        assert_abs_diff_eq!(balance_at(100.0, 0.01, 12, 6).unwrap(), b, epsilon = 1e-10);
        assert_abs_diff_eq!(b, 51.4921, epsilon = 5e-5);
        assert!(balance_at(100.0, 0.01, 12, 13).is_err());
    }

    #[test]
    fn schedule_invariants() {
        let s = AmortizationSchedule::from_apr(100.0, 22.65, 72).unwrap();
        assert_eq!(s.balances[0], 100.0);
        assert_abs_diff_eq!(s.balances[72], 0.0, epsilon = 0.01);
        assert!(s.balances.windows(2).all(|w| w[1] < w[0]));
        let z = AmortizationSchedule::new(100.0, 0.0, 10).unwrap();
        assert_abs_diff_eq!(z.balances[10], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn one_month_examples() {
        assert_abs_diff_eq!(
            one_month_return(0.0, 100.0, 95.0, 7.0, 0.0).unwrap(),
            0.02,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            one_month_return(1.0, 100.0, 95.0, 7.0, 50.0).unwrap(),
            -0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            one_month_return(0.05, 100.0, 95.0, 7.0, 40.0).unwrap(),
            -0.011,
            epsilon = 1e-12
        );
        assert!(one_month_return(0.05, 0.0, 95.0, 7.0, 40.0).is_err());
        assert!(one_month_return(1.5, 100.0, 95.0, 7.0, 40.0).is_err());
    }

    #[test]
    fn one_month_decreasing_in_hazard() {
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let r = one_month_return(i as f64 / 20.0, 100.0, 95.0, 7.0, 40.0).unwrap();
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn annualize_examples() {
        assert_eq!(annualize(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(annualize(0.01).unwrap(), 0.126825, epsilon = 5e-7);
        assert_abs_diff_eq!(annualize(-0.5).unwrap(), -0.999756, epsilon = 5e-7);
        assert!(annualize(-1.0).is_err());
    }

    #[test]
    fn certain_schedule_returns_contract_rate() {
        let s = AmortizationSchedule::new(1000.0, 0.01, 24).unwrap();
        for x in 0..24 {
            let rho =
                lifetime_return(&s, &CauseHazards::none(), &ConstantRecovery(0.3), x).unwrap();
            assert_abs_diff_eq!(rho, 0.01, epsilon = 1e-10);
        }
    }

    #[test]
    fn immediate_payoff_returns_contract_rate() {
        let s = AmortizationSchedule::new(1000.0, 0.015, 36).unwrap();
        let h = CauseHazards::new(0, vec![0.0; 36], vec![1.0; 36]).unwrap();
        for x in [1, 10, 35] {
            let rho = lifetime_return(&s, &h, &ConstantRecovery(0.3), x).unwrap();
            assert_abs_diff_eq!(rho, 0.015, epsilon = 1e-10);
        }
    }

    #[test]
    fn default_risk_lowers_lifetime_return() {
        let s = AmortizationSchedule::from_apr(100.0, 22.65, 72).unwrap();
        let h = CauseHazards::new(1, vec![0.01; 71], vec![0.02; 71]).unwrap();
        let rec = ConstantRecovery(0.4);
        let rho = lifetime_return(&s, &h, &rec, 12).unwrap();
        assert!(rho < 0.2265 / 12.0);
        let probs = lifetime_event_probs(&s, &h, 12).unwrap();
        let back = lifetime_epv(&s, &probs, &rec, 12, rho);
        assert_abs_diff_eq!(back, s.balances[12], epsilon = 1e-8 * s.balances[12]);
        assert!(lifetime_return(&s, &h, &rec, 72).is_err());
    }

    #[test]
    fn hazards_from_curves_fill_gaps_and_extend() {
        use crate::estimator::{AgeWindow, HazardRow};
        use crate::risk_model::CauseId;
        let mk = |cause, vals: &[(u32, f64)]| HazardCurve {
            band: "b".into(),
            cause,
            n: 10,
            window: AgeWindow { lo: 1, hi: 10 },
            theta: 0.05,
            rows: vals
                .iter()
                .map(|&(age, h)| HazardRow {
                    age,
                    events: 1,
                    at_risk: 10,
                    hazard: h,
                    variance: 0.0,
                    ci: None,
                    interpolated: false,
                })
                .collect(),
        };
        let d = mk(CauseId::Default, &[(2, 0.1), (4, 0.3)]);
        let p = mk(CauseId::Prepay, &[(2, 0.2), (3, 0.25), (4, 0.2)]);
        let h = CauseHazards::from_curves(&d, &p).unwrap();
        assert_eq!(h.at(1), (0.1, 0.2));
        assert_eq!(h.at(3), (0.1, 0.25));
        assert_eq!(h.at(4), (0.3, 0.2));
        assert_eq!(h.at(40), (0.3, 0.2));
    }

    #[test]
    fn remaining_payment_examples() {
        assert_eq!(
            remaining_payments(7485.0, 360.0, 0.2237 / 12.0).unwrap(),
            26
        );
        assert_eq!(remaining_payments(100.0, 10.0, 0.0).unwrap(), 10);
        let b = monthly_payment(1.0, 0.01, 12).unwrap();
        assert_eq!(remaining_payments(360.0 / b, 360.0, 0.01).unwrap(), 12);
        assert!(remaining_payments(1000.0, 5.0, 0.01).is_err());
    }

    #[test]
    fn savings_examples() {
        let s: SavingsEstimate<f64> = refinance_savings(
            7485.0,
            360.0,
            0.2237 / 12.0,
            0.0359 / 12.0,
            SavingsOptions::default(),
        )
        .unwrap();
        assert!(
            (s.monthly_saving - 61.0).abs() <= 3.0,
            "{}",
            s.monthly_saving
        );
        assert_eq!(s.remaining_payments, 26.0);
        assert_abs_diff_eq!(s.monthly_saving, s.old_payment - s.new_payment);
        assert_abs_diff_eq!(s.total_saving, s.monthly_saving * 26.0);
        assert!(refinance_savings(7485.0, 360.0, 0.01, 0.02, SavingsOptions::default()).is_err());
    }

    #[test]
    fn given_count_overrides_annuity_inverse() {
        let opts = SavingsOptions {
            count: PaymentCount::Given(44),
            ..Default::default()
        };
        let s = refinance_savings(10985.0, 359.0, 0.2246 / 12.0, 0.1797 / 12.0, opts).unwrap();
        assert_eq!(s.remaining_payments, 44.0);
        assert_abs_diff_eq!(
            s.new_payment,
            monthly_payment(10985.0, 0.1797 / 12.0, 44).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn exact_count_savings_vanish_at_equal_rates() {
        let opts = SavingsOptions {
            count: PaymentCount::Exact,
            ..Default::default()
        };
        let r = 0.2237 / 12.0;
        let s = refinance_savings(7485.0, 360.0, r, r - 1e-12, opts).unwrap();
        assert_abs_diff_eq!(s.monthly_saving, 0.0, epsilon = 1e-6);
        for i in 1..50 {
            let s = refinance_savings(7485.0, 360.0, r, r * (1.0 - i as f64 / 50.0), opts).unwrap();
            assert!(s.monthly_saving > 0.0);
        }
    }

    #[test]
    fn ltv_examples() {
        let s = AmortizationSchedule::from_apr(100.0, 22.65, 72).unwrap();
        let ltv = ltv_trajectory(&s, 100.0, 0.31).unwrap();
        assert_eq!(ltv[0], (0, 1.0));
        let expected = s.balances[36] / 100.0 * 0.69f64.powi(-3);
        assert_abs_diff_eq!(ltv[36].1, expected, epsilon = 1e-12);
        let flat = ltv_trajectory(&s, 100.0, 0.0).unwrap();
        assert!(flat.windows(2).all(|w| w[1].1 < w[0].1));
        let half = ltv_trajectory(&s, 100.0, 0.16).unwrap();
        assert!(half[36].1 < ltv[36].1);
        assert!(ltv_trajectory(&s, 0.0, 0.31).is_err());
        assert!(ltv_trajectory(&s, 100.0, 1.0).is_err());
    }
}
