//! Published examples with their expected values, for `pbcs reproduce`.
//!
//! The systems are the files under `data/`, embedded verbatim: entries are
//! the decimals and ratios as printed, converted once on parse.

use pbcs_core::decomp::eigenvalues;
use pbcs_core::expm::expm_scaled;
use pbcs_core::first_order::{check_first_order, default_grid, Verdict, DEFAULT_SIGN_TOL};
use pbcs_core::high_order::{
    build_h, double_bracket, needle_variation_check, second_order_test, singular_test, SecondOrderVerdict,
    SingularVerdict, SECOND_ORDER_TOL,
};
use pbcs_core::perron::{spectral_radius, DEFAULT_TOL};
use pbcs_core::transition::monodromy;
use pbcs_core::{expm, perron_pair, Control, Matrix, PBCSystem};
use serde::Serialize;

use crate::input::{parse_problem, Problem};
use crate::CliError;

pub const EX2_JSON: &str = include_str!("../data/ex2.json");
pub const EX5_JSON: &str = include_str!("../data/ex5.json");

/// Closed-form `r_4(alpha-bar)` of the four-arc example, at 30 digits. It is
/// stated with `v_2 = w_2 = 1` and `q(0) = w`; the library normalizes
/// `w'v = 1`, `q(T) = w`, which multiplies the form by `rho v_2 w_2`.
pub const EX5_R4: f64 = 0.380_292_833_978_546_125_558_346_150_608;

/// Needle widths used for the slope fit.
pub const NEEDLE_EPSILONS: [f64; 5] = [1e-6, 3e-6, 1e-5, 3e-5, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    Ex2,
    Ex4,
    Ex5,
}

impl std::str::FromStr for Example {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "ex2" => Ok(Example::Ex2),
            "ex4" => Ok(Example::Ex4),
            "ex5" => Ok(Example::Ex5),
            _ => Err(CliError::Usage(format!("unknown example {s:?}; expected ex2, ex4 or ex5"))),
        }
    }
}

impl Example {
    pub fn name(self) -> &'static str {
        match self {
            Example::Ex2 => "ex2",
            Example::Ex4 => "ex4",
            Example::Ex5 => "ex5",
        }
    }

    pub fn problem(self) -> Problem {
        let text = match self {
            Example::Ex2 | Example::Ex4 => EX2_JSON,
            Example::Ex5 => EX5_JSON,
        };
        parse_problem(text).expect("embedded example parses")
    }

    pub fn run(self) -> Result<Vec<Check>, CliError> {
        let Problem { system, control } = self.problem();
        let control = control.expect("embedded examples carry a control");
        match self {
            Example::Ex2 => ex2(&system, &control),
            Example::Ex4 => ex4(&system),
            Example::Ex5 => ex5(&system, &control),
        }
    }
}

/// One row of the reproduction table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    /// Human-readable target, e.g. `"20 +- 1e-9"`.
    pub expected: String,
    pub pass: bool,
}

impl Check {
    fn near(name: &'static str, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name,
            value,
            expected: format!("{target} +- {tol:e}"),
            pass: (value - target).abs() <= tol,
        }
    }

    fn below(name: &'static str, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            expected: format!("< {bound:e}"),
            pass: value < bound,
        }
    }

    fn above(name: &'static str, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            expected: format!("> {bound}"),
            pass: value > bound,
        }
    }

    fn holds(name: &'static str, ok: bool, what: &str) -> Self {
        Self {
            name,
            value: if ok { 1.0 } else { 0.0 },
            expected: what.to_string(),
            pass: ok,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Sine of the angle between `x` and `y`.
fn angle_residual(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let yy: f64 = y.iter().map(|b| b * b).sum();
    let perp = x.iter().zip(y).map(|(a, b)| (a - dot / yy * b).powi(2)).sum::<f64>();
    (perp / x.iter().map(|a| a * a).sum::<f64>()).sqrt()
}

fn largest_real_eigenvalue(m: &Matrix) -> Result<f64, CliError> {
    Ok(eigenvalues(m)?.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max))
}

fn ex2(sys: &PBCSystem, u: &Control) -> Result<Vec<Check>, CliError> {
    let mu = largest_real_eigenvalue(sys.a())?;
    let z = [2.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt()];
    let zbz = sys.b().bilinear(&z, &z);
    let rep = check_first_order(sys, u, &default_grid(u), DEFAULT_SIGN_TOL)?;
    let ratio = rep.switching.scale / (sys.b().norm_fro() * rep.perron.rho);
    let rho_plus = spectral_radius(&expm_scaled(&sys.generator(1.0), sys.horizon())?)?;
    Ok(vec![
        Check::near("largest eigenvalue of A", mu, 3.0, 1e-10),
        Check::near("z'Bz", zbz, 0.0, 1e-12),
        Check::below("max|m| / (|B| rho)", ratio, 1e-9),
        Check::holds("first-order verdict", rep.verdict == Verdict::Vacuous, "vacuous"),
        Check::above("rho(u = +1) / rho(u = 0)", rho_plus / rep.perron.rho, 1.0),
    ])
}

fn ex4(sys: &PBCSystem) -> Result<Vec<Check>, CliError> {
    let want = Matrix::from_rows(&[[6.8, 18.4], [21.4, -6.8]])?;
    let bracket_err = (&double_bracket(sys)? - &want).max_abs();
    let pp = perron_pair(&expm(sys.a())?, DEFAULT_TOL)?;
    let st = singular_test(sys)?;
    let needle = needle_variation_check(sys, &NEEDLE_EPSILONS)?;
    Ok(vec![
        Check::below("[B,[B,A]] entrywise error", bracket_err, 1e-12),
        Check::below("Perron vector angle to (2, 1)", angle_residual(&pp.v, &[2.0, 1.0]), 1e-10),
        Check::near("w'[B,[B,A]]v", st.value, 20.0, 1e-9),
        Check::holds("singular verdict", st.verdict == SingularVerdict::RulesOut, "rules_out"),
        Check::below("needle slope relative error", needle.relative_error, 0.05),
    ])
}

/// `rho`, `v`, `w` of the four-arc candidate in closed form.
fn ex5_closed_form() -> (f64, [f64; 2], [f64; 2]) {
    let e5 = 5f64.exp();
    let s = (9.0 + 32.0 * e5 + 9.0 * e5 * e5).sqrt();
    let base = (9.0 + 7.0 * e5 + 9.0 * e5 * e5 + 3.0 * s * (e5 - 1.0)) / (25.0 * e5 * e5);
    (base * base, [e5 - 1.0 + s, 2.0 + 8.0 * e5], [e5 - 1.0 + s, 4.0 + e5])
}

fn ex5(sys: &PBCSystem, u: &Control) -> Result<Vec<Check>, CliError> {
    let (rho, v, w) = ex5_closed_form();
    let c = monodromy(sys, u)?;
    let pp = perron_pair(&c, DEFAULT_TOL)?;
    let rep = check_first_order(sys, u, &default_grid(u), DEFAULT_SIGN_TOL)?;
    let worst_switch = rep.switch_residuals.iter().map(|r| r.residual).fold(0.0, f64::max);

    let bb = u.as_bang_bang().expect("bang-bang example");
    let d = build_h(sys, &bb)?;
    let a = 1.0 / (d.perron.rho.sqrt() * 5f64.exp());
    let alpha = [1.0, a - 1.0, -a, 0.0];
    let so = second_order_test(&d, SECOND_ORDER_TOL)?;
    let r4 = so.form_value(&alpha)?;
    let rescaled = r4 / (d.perron.rho * d.perron.v[1] * d.perron.w[1]);

    // B e^{A+B} v = e^{-5} e^{-(A-B)} B v
    let lhs = sys.b().mul_vec(&expm(&sys.generator(1.0))?.mul_vec(&pp.v));
    let rhs: Vec<f64> = expm_scaled(&sys.generator(-1.0), -1.0)?
        .mul_vec(&sys.b().mul_vec(&pp.v))
        .iter()
        .map(|x| x * (-5f64).exp())
        .collect();
    let diff = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let identity = diff / lhs.iter().map(|x| x * x).sum::<f64>().sqrt();

    Ok(vec![
        Check::below("rho relative error", rel(pp.rho, rho), 1e-8),
        Check::below("v angle error", angle_residual(&pp.v, &v), 1e-8),
        Check::below("w angle error", angle_residual(&pp.w, &w), 1e-8),
        Check::holds("first-order verdict", rep.verdict == Verdict::Consistent, "consistent"),
        Check::below("max |m(t_i)| / scale", worst_switch, 1e-8),
        Check::below("alpha-bar in Q^4 residual", d.qk_residual(&alpha)?, 1e-8),
        Check::above("r_4(alpha-bar)", r4, 0.0),
        Check::below("r_4 rescaled relative error", rel(rescaled, EX5_R4), 1e-6),
        Check::holds("second-order verdict", so.verdict == SecondOrderVerdict::RulesOut, "rules_out"),
        Check::below("B exp(A+B) v identity", identity, 1e-9),
    ])
}

/// Fixed-width table, one line per check.
pub fn render_table(example: Example, checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        out.push_str(&format!(
            "{}  {}  {:<width$}  {:>24.16e}  {}\n",
            if c.pass { "PASS" } else { "FAIL" },
            example.name(),
            c.name,
            c.value,
            c.expected,
        ));
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    out.push_str(&format!("{}: {} of {} checks passed\n", example.name(), checks.len() - failed, checks.len()));
    out
}
