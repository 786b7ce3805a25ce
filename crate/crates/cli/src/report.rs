//! The analysis pipeline and its report.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;
use xree::{
    certify_with, minimize_relative_entropy, relative_entropy_of_entanglement_with, solve_canonical,
    solve_diagonal_min, solve_general_with, solve_phi_half, solving_frame, Certificate, ClosestSeparable,
    OracleConfig, ReeOptions, XStateParams,
};

use crate::spec::StateSpec;
use crate::CliError;

/// Solver selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Closed form on the `φ = π/2` slice, Newton elsewhere.
    #[default]
    Auto,
    /// Closed form only; requires `φ = π/2`.
    Closed,
    /// Constrained Newton on the `φ = π/2` slice.
    Newton,
    /// General-angle Newton.
    General,
    /// Product-ensemble minimiser; never certified.
    Oracle,
}

/// Whether `e_r` is the relative entropy of entanglement or only a bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Certified,
    UpperBound,
}

impl ValueKind {
    pub fn label(&self) -> &'static str {
        match self {
            ValueKind::Certified => "certified",
            ValueKind::UpperBound => "upper bound",
        }
    }
}

/// The three optimality checks and the verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub trace_condition: f64,
    pub trace_ok: bool,
    pub max_overlap: f64,
    pub overlap_ok: bool,
    /// Only evaluated for `θ = φ = π/2` solutions.
    pub border_identity: Option<f64>,
    pub identity_ok: bool,
    pub support_restricted: bool,
    pub passed: bool,
}

impl From<&Certificate> for CertificateReport {
    fn from(c: &Certificate) -> Self {
        Self {
            trace_condition: c.trace_condition,
            trace_ok: c.trace_ok(),
            max_overlap: c.max_overlap,
            overlap_ok: c.overlap_ok(),
            border_identity: c.border_identity,
            identity_ok: c.identity_ok(),
            support_restricted: c.support_restricted,
            passed: c.passed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub value: f64,
    /// `oracle − e_r`.
    pub gap: f64,
    pub components: usize,
    pub restarts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub input: StateSpec,
    pub canonical: XStateParams,
    pub concurrence: f64,
    pub entangled: bool,
    pub min_pt_eigenvalue: f64,
    pub e_r: f64,
    pub value_kind: ValueKind,
    pub method: String,
    pub certificate: Option<CertificateReport>,
    pub oracle: Option<OracleReport>,
    pub seed: u64,
    pub overlap_tolerance: f64,
    /// Seconds; only recorded on request so default output stays reproducible.
    pub wall_clock: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub method: MethodChoice,
    pub oracle: bool,
    pub seed: u64,
    pub overlap_tolerance: f64,
    pub oracle_config: OracleConfig,
    pub timing: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            method: MethodChoice::Auto,
            oracle: false,
            seed: xree::DEFAULT_SEED,
            overlap_tolerance: xree::witness::DEFAULT_OVERLAP_TOL,
            oracle_config: OracleConfig::default(),
            timing: false,
        }
    }
}

impl AnalysisOptions {
    fn ree_options(&self) -> ReeOptions {
        let mut o = ReeOptions::with_seed(self.seed);
        o.overlap_tolerance = self.overlap_tolerance;
        o
    }

    fn oracle_config(&self) -> OracleConfig {
        OracleConfig { seed: self.seed, ..self.oracle_config }
    }
}

/// Runs the full pipeline on one state.
pub fn analyze(input: &StateSpec, opts: &AnalysisOptions) -> Result<AnalysisReport, CliError> {
    let start = Instant::now();
    let p = input.resolve()?;
    analyze_params(input.clone(), &p, opts, start)
}

pub(crate) fn analyze_params(
    input: StateSpec,
    p: &XStateParams,
    opts: &AnalysisOptions,
    start: Instant,
) -> Result<AnalysisReport, CliError> {
    let (q, _) = solving_frame(p)?;
    let rho = p.to_density()?;
    let (e_r, method, certificate) = match opts.method {
        MethodChoice::Auto => {
            let ree = relative_entropy_of_entanglement_with(p, &opts.ree_options())?;
            (ree.e_r, ree.method().to_string(), Some(ree.certificate))
        }
        MethodChoice::Oracle => {
            let o = minimize_relative_entropy(&rho, &opts.oracle_config())?;
            (o.value, "oracle".to_string(), None)
        }
        m => {
            let s = solve_explicit(&q, m, opts)?;
            let cert = certify_with(&q.to_density()?, &s, opts.overlap_tolerance)?;
            (s.e_r, s.method.to_string(), Some(cert))
        }
    };
    let oracle = if opts.oracle {
        let config = opts.oracle_config();
        let value = match opts.method {
            MethodChoice::Oracle => e_r,
            _ => minimize_relative_entropy(&rho, &config)?.value,
        };
        Some(OracleReport { value, gap: value - e_r, components: config.components, restarts: config.restarts })
    } else {
        None
    };
    let passed = certificate.is_some_and(|c| c.passed);
    Ok(AnalysisReport {
        input,
        canonical: q,
        concurrence: q.concurrence(),
        entangled: q.is_entangled(),
        min_pt_eigenvalue: rho.min_pt_eigenvalue(),
        e_r,
        value_kind: if passed { ValueKind::Certified } else { ValueKind::UpperBound },
        method,
        certificate: certificate.as_ref().map(CertificateReport::from),
        oracle,
        seed: opts.seed,
        overlap_tolerance: opts.overlap_tolerance,
        wall_clock: opts.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

fn solve_explicit(q: &XStateParams, m: MethodChoice, opts: &AnalysisOptions) -> Result<ClosestSeparable, CliError> {
    let general = opts.ree_options().general;
    if !q.is_entangled() {
        return Ok(solve_canonical(q, &general)?);
    }
    let s = match m {
        MethodChoice::Closed => solve_phi_half(q)?,
        MethodChoice::Newton => solve_diagonal_min(q)?,
        MethodChoice::General => solve_general_with(q, &general)?,
        MethodChoice::Auto | MethodChoice::Oracle => unreachable!("handled by the caller"),
    };
    Ok(s)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

impl AnalysisReport {
    pub fn certified(&self) -> bool {
        self.value_kind == ValueKind::Certified
    }

    /// Human-readable rendering. Reals use 17 significant digits.
    pub fn to_text(&self) -> String {
        let q = &self.canonical;
        let mut s = String::new();
        let input = serde_json::to_string(&self.input).unwrap_or_default();
        let _ = writeln!(s, "input            {input}");
        let _ = writeln!(
            s,
            "canonical        lambda0={:.16e} lambda3={:.16e} lambda1={:.16e} lambda2={:.16e} phi={:.16e} eta={:.16e}",
            q.lambda0, q.lambda3, q.lambda1, q.lambda2, q.phi, q.eta
        );
        let _ = writeln!(s, "concurrence      {:.16e}", self.concurrence);
        let _ = writeln!(s, "entangled        {}", self.entangled);
        let _ = writeln!(s, "min PT eig       {:.16e}", self.min_pt_eigenvalue);
        let _ = writeln!(s, "E_r              {:.16e} nats ({})", self.e_r, self.value_kind.label());
        let _ = writeln!(s, "method           {}", self.method);
        match &self.certificate {
            Some(c) => {
                let _ = writeln!(s, "trace condition  {:+.3e} ({})", c.trace_condition, yes_no(c.trace_ok));
                let _ = writeln!(s, "product maximum  {:.16e} ({})", c.max_overlap, yes_no(c.overlap_ok));
                let border = c.border_identity.map_or("n/a".to_string(), |v| format!("{v:+.3e}"));
                let _ = writeln!(s, "border identity  {border} ({})", yes_no(c.identity_ok));
                let _ = writeln!(s, "verdict          {}", if c.passed { "pass" } else { "fail" });
            }
            None => {
                let _ = writeln!(s, "verdict          not certified");
            }
        }
        if let Some(o) = &self.oracle {
            let _ = writeln!(
                s,
                "oracle           {:.16e} (gap {:+.3e}, K={}, restarts={})",
                o.value, o.gap, o.components, o.restarts
            );
        }
        let _ = writeln!(s, "seed             {}", self.seed);
        let _ = writeln!(s, "tolerance        {:e}", self.overlap_tolerance);
        if let Some(t) = self.wall_clock {
            let _ = writeln!(s, "wall clock       {t:.3}s");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn t1() -> StateSpec {
        StateSpec::from(XStateParams::new(0.5, 0.1, 0.25, 0.15, FRAC_PI_2, 0.0).unwrap())
    }

    #[test]
    fn t1_report() {
        let r = analyze(&t1(), &AnalysisOptions::default()).unwrap();
        assert!(r.certified());
        assert_eq!(r.method, "closed_form");
        assert!((r.e_r - 8.065950387667238e-5).abs() < 1e-15);
        assert!(r.entangled);
        assert!(r.min_pt_eigenvalue < 0.0);
        assert!(r.wall_clock.is_none());
    }

    #[test]
    fn report_round_trips_through_json() {
        let opts = AnalysisOptions { oracle: true, timing: true, ..AnalysisOptions::default() };
        let r = analyze(&t1(), &opts).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: AnalysisReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn explicit_methods_agree_on_t1() {
        let base = analyze(&t1(), &AnalysisOptions::default()).unwrap().e_r;
        for method in [MethodChoice::Closed, MethodChoice::Newton, MethodChoice::General] {
            let r = analyze(&t1(), &AnalysisOptions { method, ..AnalysisOptions::default() }).unwrap();
            assert!(r.certified(), "{method:?}");
            assert!((r.e_r - base).abs() < 1e-10, "{method:?}");
        }
    }

    #[test]
    fn oracle_method_is_an_upper_bound() {
        let opts = AnalysisOptions { method: MethodChoice::Oracle, ..AnalysisOptions::default() };
        let r = analyze(&t1(), &opts).unwrap();
        assert_eq!(r.value_kind, ValueKind::UpperBound);
        assert!(r.certificate.is_none());
        assert!(r.to_text().contains("(upper bound)"));
    }

    #[test]
    fn closed_method_rejects_general_angle() {
        let spec = StateSpec::from(XStateParams::new(0.55, 0.05, 0.25, 0.15, 1.3, 0.0).unwrap());
        let err = analyze(&spec, &AnalysisOptions { method: MethodChoice::Closed, ..AnalysisOptions::default() });
        assert_eq!(err.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn diagonal_state_is_separable() {
        let spec = StateSpec::from(XStateParams::new(0.4, 0.3, 0.2, 0.1, 0.0, 0.0).unwrap());
        let r = analyze(&spec, &AnalysisOptions::default()).unwrap();
        assert_eq!(r.e_r, 0.0);
        assert!(!r.entangled);
        assert!(r.certified());
    }

    #[test]
    fn text_is_deterministic() {
        let a = analyze(&t1(), &AnalysisOptions::default()).unwrap().to_text();
        let b = analyze(&t1(), &AnalysisOptions::default()).unwrap().to_text();
        assert_eq!(a, b);
        assert!(a.contains("(certified)"));
    }
}
