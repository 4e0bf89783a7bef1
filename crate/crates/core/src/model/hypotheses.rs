//! Sampling falsifier for the structural growth conditions on the kinetics.
//!
//! Every condition is an inequality `lhs ≤ rhs` evaluated on a tensor grid
//! over the box `[0,U]×[0,V]×[0,W]×[0,H]`. A pass only certifies the sampled
//! points. The `v`-dependent envelopes `C_f(v)`, `C_g(v)`, `C_ψ(v)` are
//! nondecreasing, so on a box they are represented by their value at `V`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{Kinetics, Point};
use crate::error::{Error, Result};

/// Relative slack below which `lhs > rhs` is treated as round-off.
pub const CHECK_TOLERANCE: f64 = 1e-12;

/// Lower envelope `f0(u)` for the cell kinetics.
#[derive(Clone)]
pub enum LowerEnvelope {
    /// `Σ c_k u^k`.
    Polynomial(Vec<f64>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl LowerEnvelope {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            LowerEnvelope::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * u + ck),
            LowerEnvelope::Custom(f) => f(u),
        }
    }
}

impl Default for LowerEnvelope {
    fn default() -> Self {
        LowerEnvelope::Polynomial(vec![0.0])
    }
}

impl fmt::Debug for LowerEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LowerEnvelope::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            LowerEnvelope::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Candidate constants against which the conditions are tested.
#[derive(Debug, Clone)]
pub struct HypothesisBudget {
    /// `c_φ`: decay of `φ` in `w`.
    pub phi_decay: f64,
    /// `C_φ`.
    pub phi_bound: f64,
    /// `C_Φ`.
    pub source_bound: f64,
    /// `γ ∈ (0, 1/2)` in the `ψ_h` bound.
    pub psi_exponent: f64,
    /// `C_f(V)`.
    pub f_bound: f64,
    /// `C_g(V)`.
    pub g_bound: f64,
    /// `C_ψ(V)`.
    pub psi_bound: f64,
    pub f0: LowerEnvelope,
}

impl HypothesisBudget {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_phi", self.phi_decay),
            ("C_phi", self.phi_bound),
            ("C_Phi", self.source_bound),
            ("Cf", self.f_bound),
            ("Cg", self.g_bound),
            ("Cpsi", self.psi_bound),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    format!("hypothesis_budget.{name}"),
                    format!("must be positive, got {value}"),
                ));
            }
        }
        if !(self.psi_exponent > 0.0 && self.psi_exponent < 0.5) {
            return Err(Error::config(
                "hypothesis_budget.gamma_psi",
                format!("must lie in (0, 1/2), got {}", self.psi_exponent),
            ));
        }
        let f00 = self.f0.eval(0.0);
        if !(f00 >= 0.0) {
            return Err(Error::config(
                "hypothesis_budget.f0",
                format!("f0(0) must be nonnegative, got {f00}"),
            ));
        }
        Ok(())
    }
}

/// Upper corner of the sampled box plus samples per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckBox {
    pub upper: Point,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Condition {
    FLower,
    FUpper,
    GAbs,
    GSign,
    PhiBound,
    PhiU,
    PhiV,
    PhiW,
    PhiH,
    SourceNonneg,
    SourceUpper,
    SourceDeriv,
    PsiBound,
    PsiU,
    PsiV,
    PsiW,
    PsiH,
}

/// Where in the box a condition is sampled.
enum Support {
    Full,
    /// `u = h = 0`, all `(v, w)`.
    SignSlice,
    /// `u = v = h = 0`, all `w`.
    WAxis,
}

impl Condition {
    pub const ALL: [Condition; 17] = [
        Condition::FLower,
        Condition::FUpper,
        Condition::GAbs,
        Condition::GSign,
        Condition::PhiBound,
        Condition::PhiU,
        Condition::PhiV,
        Condition::PhiW,
        Condition::PhiH,
        Condition::SourceNonneg,
        Condition::SourceUpper,
        Condition::SourceDeriv,
        Condition::PsiBound,
        Condition::PsiU,
        Condition::PsiV,
        Condition::PsiW,
        Condition::PsiH,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Condition::FLower => "Hf.lower",
            Condition::FUpper => "Hf.upper",
            Condition::GAbs => "Hg.abs",
            Condition::GSign => "Hg.sign",
            Condition::PhiBound => "Hphi.bound",
            Condition::PhiU => "Hphi.u",
            Condition::PhiV => "Hphi.v",
            Condition::PhiW => "Hphi.w",
            Condition::PhiH => "Hphi.h",
            Condition::SourceNonneg => "HPhi.nonneg",
            Condition::SourceUpper => "HPhi.upper",
            Condition::SourceDeriv => "HPhi.deriv",
            Condition::PsiBound => "Hpsi.bound",
            Condition::PsiU => "Hpsi.u",
            Condition::PsiV => "Hpsi.v",
            Condition::PsiW => "Hpsi.w",
            Condition::PsiH => "Hpsi.h",
        }
    }

    /// Condition family: `Hf`, `Hg`, `Hphi`, `HPhi` or `Hpsi`.
    pub fn family(&self) -> &'static str {
        self.id().split('.').next().unwrap_or_default()
    }

    pub fn inequality(&self) -> &'static str {
        match self {
            Condition::FLower => "f0(u) <= f",
            Condition::FUpper => "f <= Cf (u + w + 1)",
            Condition::GAbs => "|g| <= Cg (w + h + 1)",
            Condition::GSign => "g(0,v,w,0) >= 0",
            Condition::PhiBound => "phi <= -c_phi w + C_phi",
            Condition::PhiU => "|phi_u| <= C_phi / sqrt(u v + 1)",
            Condition::PhiV => "|phi_v| <= C_phi / (v + 1) + C_phi",
            Condition::PhiW => "|phi_w| <= C_phi / sqrt(v + 1) + C_phi",
            Condition::PhiH => "|phi_h| <= C_phi / sqrt(v + 1) + C_phi",
            Condition::SourceNonneg => "0 <= Phi(w)",
            Condition::SourceUpper => "Phi(w) <= C_Phi",
            Condition::SourceDeriv => "w Phi'(w)^2 <= C_Phi Phi(w)",
            Condition::PsiBound => "psi <= Cpsi",
            Condition::PsiU => "|psi_u| <= Cpsi / sqrt(u w + 1)",
            Condition::PsiV => "|psi_v| <= Cpsi",
            Condition::PsiW => "|psi_w| <= Cpsi / (w + 1)",
            Condition::PsiH => "|psi_h| <= Cpsi / (w + 1)^gamma",
        }
    }

    fn support(&self) -> Support {
        match self {
            Condition::GSign => Support::SignSlice,
            Condition::SourceNonneg | Condition::SourceUpper | Condition::SourceDeriv => {
                Support::WAxis
            }
            _ => Support::Full,
        }
    }

    /// Evaluates the inequality as `(lhs, rhs)` at `p`.
    pub fn evaluate(&self, kin: &dyn Kinetics, b: &HypothesisBudget, p: Point) -> (f64, f64) {
        let Point { u, v, w, h } = p;
        match self {
            Condition::FLower => (b.f0.eval(u), kin.f(p)),
            Condition::FUpper => (kin.f(p), b.f_bound * (u + w + 1.0)),
            Condition::GAbs => (kin.g(p).abs(), b.g_bound * (w + h + 1.0)),
            Condition::GSign => (0.0, kin.g(Point::new(0.0, v, w, 0.0))),
            Condition::PhiBound => (kin.phi(p), -b.phi_decay * w + b.phi_bound),
            Condition::PhiU => (
                kin.phi_partials(p).u.abs(),
                b.phi_bound / (u * v + 1.0).sqrt(),
            ),
            Condition::PhiV => (
                kin.phi_partials(p).v.abs(),
                b.phi_bound / (v + 1.0) + b.phi_bound,
            ),
            Condition::PhiW => (
                kin.phi_partials(p).w.abs(),
                b.phi_bound / (v + 1.0).sqrt() + b.phi_bound,
            ),
            Condition::PhiH => (
                kin.phi_partials(p).h.abs(),
                b.phi_bound / (v + 1.0).sqrt() + b.phi_bound,
            ),
            Condition::SourceNonneg => (0.0, kin.tissue_source(w)),
            Condition::SourceUpper => (kin.tissue_source(w), b.source_bound),
            Condition::SourceDeriv => {
                let d = kin.tissue_source_prime(w);
                (w * d * d, b.source_bound * kin.tissue_source(w))
            }
            Condition::PsiBound => (kin.psi(p), b.psi_bound),
            Condition::PsiU => (
                kin.psi_partials(p).u.abs(),
                b.psi_bound / (u * w + 1.0).sqrt(),
            ),
            Condition::PsiV => (kin.psi_partials(p).v.abs(), b.psi_bound),
            Condition::PsiW => (kin.psi_partials(p).w.abs(), b.psi_bound / (w + 1.0)),
            Condition::PsiH => (
                kin.psi_partials(p).h.abs(),
                b.psi_bound / (w + 1.0).powf(b.psi_exponent),
            ),
        }
    }
}

/// True when `lhs ≤ rhs` is violated beyond round-off.
pub fn violates(lhs: f64, rhs: f64) -> bool {
    lhs - rhs > CHECK_TOLERANCE * (1.0 + rhs.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Violation,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub witness: Point,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionResult {
    pub condition: Condition,
    pub passed: bool,
    /// Smallest `rhs − lhs` over the samples; negative when violated.
    pub tightest_margin: f64,
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub model: String,
    pub check_box: CheckBox,
    pub results: Vec<ConditionResult>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn family_passed(&self, family: &str) -> bool {
        self.results
            .iter()
            .filter(|r| r.condition.family() == family)
            .all(|r| r.passed)
    }

    pub fn result(&self, condition: Condition) -> Option<&ConditionResult> {
        self.results.iter().find(|r| r.condition == condition)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&Condition, &Failure)> {
        self.results
            .iter()
            .filter_map(|r| r.failure.as_ref().map(|f| (&r.condition, f)))
    }

    /// Plain-text table, one line per condition.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "model {} on box u<={} v<={} w<={} h<={} ({} samples/axis)\n",
            self.model,
            self.check_box.upper.u,
            self.check_box.upper.v,
            self.check_box.upper.w,
            self.check_box.upper.h,
            self.check_box.samples
        );
        out.push_str(&format!(
            "{:<12} {:<6} {:<40} {}\n",
            "condition", "status", "inequality", "detail"
        ));
        for r in &self.results {
            let status = if r.passed { "pass" } else { "FAIL" };
            let detail = match &r.failure {
                None => format!("margin {:.6e}", r.tightest_margin),
                Some(f) => format!(
                    "{} at (u,v,w,h)=({}, {}, {}, {}): lhs {:.6e} > rhs {:.6e}",
                    match f.kind {
                        FailureKind::Violation => "violated",
                        FailureKind::NonFinite => "non-finite",
                    },
                    f.witness.u,
                    f.witness.v,
                    f.witness.w,
                    f.witness.h,
                    f.lhs,
                    f.rhs
                ),
            };
            out.push_str(&format!(
                "{:<12} {:<6} {:<40} {}\n",
                r.condition.id(),
                status,
                r.condition.inequality(),
                detail
            ));
        }
        out
    }
}

/// Per-condition reduction state. Merging is associative; ties resolve to
/// the lowest sample index so the report does not depend on partitioning.
#[derive(Debug, Clone, Copy)]
struct Acc {
    worst: Option<(f64, usize, Point, f64, f64)>,
    non_finite: Option<(usize, Point, f64, f64)>,
}

impl Acc {
    const EMPTY: Acc = Acc {
        worst: None,
        non_finite: None,
    };

    fn observe(&mut self, index: usize, p: Point, lhs: f64, rhs: f64) {
        if !(lhs.is_finite() && rhs.is_finite()) {
            if self.non_finite.is_none_or(|(i, ..)| index < i) {
                self.non_finite = Some((index, p, lhs, rhs));
            }
            return;
        }
        self.observe_finite(rhs - lhs, index, p, lhs, rhs);
    }

    fn merge(mut self, other: Acc) -> Acc {
        if let Some((i, p, l, r)) = other.non_finite {
            if self.non_finite.is_none_or(|(j, ..)| i < j) {
                self.non_finite = Some((i, p, l, r));
            }
        }
        if let Some((m, i, p, l, r)) = other.worst {
            self.observe_finite(m, i, p, l, r);
        }
        self
    }

    fn observe_finite(&mut self, margin: f64, index: usize, p: Point, lhs: f64, rhs: f64) {
        let better = match self.worst {
            None => true,
            Some((m, i, ..)) => margin < m || (margin == m && index < i),
        };
        if better {
            self.worst = Some((margin, index, p, lhs, rhs));
        }
    }

    fn finish(self, condition: Condition) -> ConditionResult {
        if let Some((_, p, lhs, rhs)) = self.non_finite {
            return ConditionResult {
                condition,
                passed: false,
                tightest_margin: f64::NAN,
                failure: Some(Failure {
                    kind: FailureKind::NonFinite,
                    witness: p,
                    lhs,
                    rhs,
                }),
            };
        }
        match self.worst {
            None => ConditionResult {
                condition,
                passed: true,
                tightest_margin: f64::INFINITY,
                failure: None,
            },
            Some((margin, _, p, lhs, rhs)) => {
                let failed = violates(lhs, rhs);
                ConditionResult {
                    condition,
                    passed: !failed,
                    tightest_margin: margin,
                    failure: failed.then_some(Failure {
                        kind: FailureKind::Violation,
                        witness: p,
                        lhs,
                        rhs,
                    }),
                }
            }
        }
    }
}

fn axis(upper: f64, n: usize, k: usize) -> f64 {
    if k + 1 == n {
        upper
    } else {
        upper * k as f64 / (n - 1) as f64
    }
}

/// Tests every condition on the sampled box.
pub fn check_hypotheses(
    kin: &dyn Kinetics,
    budget: &HypothesisBudget,
    check_box: CheckBox,
) -> Result<HypothesisReport> {
    budget.validate()?;
    let n = check_box.samples;
    if n < 2 {
        return Err(Error::config(
            "hypothesis_budget.samples",
            format!("need at least 2 samples per axis, got {n}"),
        ));
    }
    let up = check_box.upper;
    if ![up.u, up.v, up.w, up.h]
        .iter()
        .all(|c| c.is_finite() && *c > 0.0)
    {
        return Err(Error::config(
            "hypothesis_budget.box",
            "box corners must be positive",
        ));
    }

    let conditions = Condition::ALL;
    let empty = || [Acc::EMPTY; 17];
    let accs = (0..n)
        .into_par_iter()
        .map(|iu| {
            let mut accs = empty();
            let u = axis(up.u, n, iu);
            for iv in 0..n {
                let v = axis(up.v, n, iv);
                for iw in 0..n {
                    let w = axis(up.w, n, iw);
                    for ih in 0..n {
                        let h = axis(up.h, n, ih);
                        let p = Point::new(u, v, w, h);
                        let index = ((iu * n + iv) * n + iw) * n + ih;
                        for (acc, cond) in accs.iter_mut().zip(conditions.iter()) {
                            let sampled = match cond.support() {
                                Support::Full => true,
                                Support::SignSlice => iu == 0 && ih == 0,
                                Support::WAxis => iu == 0 && iv == 0 && ih == 0,
                            };
                            if sampled {
                                let (lhs, rhs) = cond.evaluate(kin, budget, p);
                                acc.observe(index, p, lhs, rhs);
                            }
                        }
                    }
                }
            }
            accs
        })
        .reduce(empty, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x = x.merge(y);
            }
            a
        });

    Ok(HypothesisReport {
        model: kin.name().to_string(),
        check_box,
        results: accs
            .into_iter()
            .zip(conditions)
            .map(|(acc, c)| acc.finish(c))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        make_caf, make_go_or_grow, CafParams, CafVariant, GoGrowParams, ModelParams,
    };

    fn mp() -> ModelParams {
        ModelParams {
            chi: 0.6,
            xi: 0.5,
            alpha: 1.0,
            beta: 1.0,
            du: 1e-10,
            dh: 0.1,
        }
    }

    fn caf(variant: CafVariant) -> CafParams {
        let (beta_v, gamma_w) = match variant {
            CafVariant::Indirect => (1.0, 1.0),
            CafVariant::Direct => (0.0, 0.0),
        };
        CafParams {
            mu: 0.0,
            eta: 10.6,
            alpha_h: 5.0,
            beta_v,
            gamma_w,
            variant,
        }
    }

    fn budget(g_bound: f64) -> HypothesisBudget {
        HypothesisBudget {
            phi_decay: 0.01,
            phi_bound: 10.6,
            source_bound: 1.0,
            psi_exponent: 0.25,
            f_bound: 1.0,
            g_bound,
            psi_bound: 1.0,
            f0: LowerEnvelope::default(),
        }
    }

    fn cube(u: f64, v: f64, w: f64, h: f64, samples: usize) -> CheckBox {
        CheckBox {
            upper: Point::new(u, v, w, h),
            samples,
        }
    }

    #[test]
    fn saturating_source_passes() {
        let m = make_caf(mp(), caf(CafVariant::Indirect)).unwrap();
        let mut b = budget(5.0);
        b.source_bound = 1.0;
        let r = check_hypotheses(m.kinetics.as_ref(), &b, cube(1.0, 1.0, 10.0, 1.0, 21)).unwrap();
        assert!(r.family_passed("HPhi"), "{}", r.to_table());
    }

    #[test]
    fn direct_signal_breaks_growth_bound() {
        let m = make_caf(mp(), caf(CafVariant::Direct)).unwrap();
        let r = check_hypotheses(
            m.kinetics.as_ref(),
            &budget(10.0),
            cube(10.0, 1.0, 10.0, 10.0, 11),
        )
        .unwrap();
        let res = r.result(Condition::GAbs).unwrap();
        assert!(!res.passed);
        let f = res.failure.unwrap();
        assert_eq!(f.kind, FailureKind::Violation);
        assert_eq!((f.witness.u, f.witness.w, f.witness.h), (10.0, 0.0, 0.0));
        assert_eq!(f.lhs, 50.0);
        assert_eq!(f.rhs, 10.0);
        // the sign half still holds
        assert!(r.result(Condition::GSign).unwrap().passed);
    }

    #[test]
    fn indirect_signal_within_growth_bound() {
        let m = make_caf(mp(), caf(CafVariant::Indirect)).unwrap();
        for upper in [
            cube(10.0, 2.0, 10.0, 10.0, 11),
            cube(100.0, 5.0, 1e3, 1e3, 7),
        ] {
            let r = check_hypotheses(m.kinetics.as_ref(), &budget(5.0), upper).unwrap();
            assert!(r.family_passed("Hg"), "{}", r.to_table());
        }
    }

    #[test]
    fn missing_w_decay_is_reported() {
        // φ = η(1−v) − h has no −c_φ w decay: fails once c_φ W exceeds C_φ − φ_max
        let m = make_caf(mp(), caf(CafVariant::Indirect)).unwrap();
        let r = check_hypotheses(
            m.kinetics.as_ref(),
            &budget(5.0),
            cube(1.0, 1.0, 10.0, 1.0, 5),
        )
        .unwrap();
        let res = r.result(Condition::PhiBound).unwrap();
        assert!(!res.passed);
        assert_eq!(res.failure.unwrap().witness.w, 10.0);
    }

    #[test]
    fn trivial_go_or_grow_passes_on_small_box() {
        // every k zero except the mandatory k4, k6 set tiny; φ = k6 (1−v)_+² ≤ C_φ
        let gg = GoGrowParams {
            k1: 0.0,
            k2: 0.0,
            k3: 0.0,
            k4: 1e-9,
            k5: 0.0,
            k6: 1e-9,
            k7: 0.0,
            k8: 0.0,
            k9: 0.0,
        };
        let m = make_go_or_grow(mp(), gg).unwrap();
        let b = budget(1.0);
        let w_max = b.phi_bound / b.phi_decay;
        let r = check_hypotheses(
            m.kinetics.as_ref(),
            &b,
            cube(2.0, 2.0, w_max * 0.99, 2.0, 9),
        )
        .unwrap();
        assert!(r.all_passed(), "{}", r.to_table());
        let r =
            check_hypotheses(m.kinetics.as_ref(), &b, cube(2.0, 2.0, w_max * 1.5, 2.0, 9)).unwrap();
        assert!(!r.result(Condition::PhiBound).unwrap().passed);
    }

    #[test]
    fn non_finite_is_distinct() {
        struct Bad;
        impl Kinetics for Bad {
            fn name(&self) -> &str {
                "bad"
            }
            fn f(&self, p: Point) -> f64 {
                1.0 / p.u - 1.0 / p.u
            }
            fn g(&self, _: Point) -> f64 {
                0.0
            }
            fn phi(&self, _: Point) -> f64 {
                0.0
            }
            fn tissue_source(&self, _: f64) -> f64 {
                0.0
            }
            fn psi(&self, _: Point) -> f64 {
                0.0
            }
            fn phi_partials(&self, _: Point) -> crate::model::Partials {
                Default::default()
            }
            fn psi_partials(&self, _: Point) -> crate::model::Partials {
                Default::default()
            }
            fn tissue_source_prime(&self, _: f64) -> f64 {
                0.0
            }
            fn f_u(&self, _: Point) -> f64 {
                0.0
            }
            fn g_h(&self, _: Point) -> f64 {
                0.0
            }
        }
        let r = check_hypotheses(&Bad, &budget(1.0), cube(1.0, 1.0, 1.0, 1.0, 3)).unwrap();
        let f = r.result(Condition::FUpper).unwrap().failure.unwrap();
        assert_eq!(f.kind, FailureKind::NonFinite);
        assert_eq!(f.witness.u, 0.0);
    }

    #[test]
    fn budget_validation() {
        let mut b = budget(1.0);
        b.psi_exponent = 0.5;
        assert!(b.validate().is_err());
        let mut b = budget(1.0);
        b.f0 = LowerEnvelope::Polynomial(vec![-1.0, 2.0]);
        assert!(b.validate().is_err());
        assert!(check_hypotheses(
            make_caf(mp(), caf(CafVariant::Indirect))
                .unwrap()
                .kinetics
                .as_ref(),
            &budget(1.0),
            cube(1.0, 1.0, 1.0, 1.0, 1)
        )
        .is_err());
    }

    #[test]
    fn polynomial_envelope() {
        let p = LowerEnvelope::Polynomial(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
    }
}
