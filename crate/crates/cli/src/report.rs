//! Report structures for the three subcommands and their JSON / LaTeX renderings.

use std::fmt::Write as _;

use serde::ser::{Serialize, SerializeMap, Serializer};
use serde::Serialize as DeriveSerialize;
use supermech::algebra::{Coord, Monomial, Rational, SuperExpr};
use supermech::forms::GradedForm;
use supermech::jet::Chart;
use supermech::lagrangian::{LagrangianSystem, Regularity};

pub const SCHEMA: u32 = 1;

/// A map serialized in insertion order.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Ordered<V>(pub Vec<(String, V)>);

impl<V: Serialize> Serialize for Ordered<V> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

#[derive(Debug, Clone, DeriveSerialize)]
pub struct FormTerm {
    pub coeff: String,
    pub wedge: Vec<String>,
}

pub fn form_json(chart: &Chart, w: &GradedForm) -> Vec<FormTerm> {
    w.terms()
        .map(|(diffs, c)| FormTerm {
            coeff: chart.display(c).to_string(),
            wedge: diffs.iter().map(|d| format!("d{}", chart.name(*d))).collect(),
        })
        .collect()
}

pub fn expr_map<'a>(chart: &Chart, items: impl IntoIterator<Item = (&'a Coord, &'a SuperExpr)>) -> Ordered<String> {
    Ordered(items.into_iter().map(|(c, e)| (chart.name(*c), chart.display(e).to_string())).collect())
}

#[derive(Debug, Clone, DeriveSerialize)]
pub struct DeriveReport {
    pub schema: u32,
    pub order: u16,
    pub lagrangian: String,
    pub regular: bool,
    pub regularity: String,
    pub theta: Vec<FormTerm>,
    pub omega: Vec<FormTerm>,
    pub energy: String,
    pub euler_lagrange: Ordered<String>,
    pub forces: Option<Ordered<String>>,
    pub constraints: Option<Ordered<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn derive_report(system: &LagrangianSystem) -> DeriveReport {
    let k = system.order();
    let chart = system.chart().with_order(2 * k);
    let data = system.data();
    let verdict = system.regularity().verdict;
    let el = system.euler_lagrange_map();
    let (forces, constraints, error) = if verdict == Regularity::Regular {
        match system.solve_dynamics() {
            Ok(d) => (Some(expr_map(&chart, d.forces())), Some(expr_map(&chart, d.constraints())), None),
            Err(e) => (None, None, Some(e.to_string())),
        }
    } else {
        (None, None, Some(format!("Lagrangian is not regular ({verdict})")))
    };
    let report = DeriveReport {
        schema: SCHEMA,
        order: k,
        lagrangian: chart.display(system.lagrangian().expr()).to_string(),
        regular: forces.is_some(),
        regularity: verdict.to_string(),
        theta: form_json(&chart, &data.theta),
        omega: form_json(&chart, &data.omega),
        energy: chart.display(&data.energy).to_string(),
        euler_lagrange: expr_map(&chart, &el),
        forces,
        constraints,
        error,
    };
    report
}

#[derive(Debug, Clone, DeriveSerialize)]
pub struct NotSymmetryCertificate {
    pub coordinate: Option<String>,
    pub variational_derivative: String,
}

#[derive(Debug, Clone, Default, DeriveSerialize)]
pub struct NoetherReport {
    pub schema: u32,
    pub symmetry: Option<String>,
    pub is_symmetry: bool,
    pub field: Option<Ordered<String>>,
    #[serde(rename = "F")]
    pub f: Option<String>,
    pub charge: Option<String>,
    pub conserved: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<NotSymmetryCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, DeriveSerialize)]
pub struct DriftRow {
    pub name: String,
    pub expr: String,
    pub drift: f64,
    pub within_tol: bool,
}

#[derive(Debug, Clone, DeriveSerialize)]
pub struct SimulateReport {
    pub schema: u32,
    pub generators: usize,
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
    pub tol: f64,
    pub drift: Vec<DriftRow>,
    pub constraint_violation: f64,
    #[serde(rename = "final")]
    pub final_state: Ordered<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
    pub ok: bool,
}

fn latex_name(name: &str) -> String {
    const GREEK: &[&str] = &[
        "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda", "mu", "nu",
        "xi", "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi", "omega",
    ];
    if GREEK.contains(&name) {
        format!("\\{name}")
    } else if name.chars().count() == 1 {
        name.to_string()
    } else {
        format!("\\mathrm{{{}}}", name.replace('_', "\\_"))
    }
}

fn latex_coord(chart: &Chart, c: Coord) -> String {
    format!("{}_{{{}}}", latex_name(chart.base_name(c)), c.order)
}

fn latex_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", r.numer(), r.denom())
    }
}

/// Signed sum of `coefficient, body` terms; unit coefficients are dropped.
fn latex_terms(terms: Vec<(Rational, String)>) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (c, body)) in terms.into_iter().enumerate() {
        let negative = c < Rational::from_integer(0.into());
        let mag = if negative { -c } else { c };
        if i == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let one = mag == Rational::from_integer(1.into());
        match (one, body.is_empty()) {
            (_, true) => out.push_str(&latex_rational(&mag)),
            (true, false) => out.push_str(&body),
            (false, false) => {
                let _ = write!(out, "{}\\,{}", latex_rational(&mag), body);
            }
        }
    }
    out
}

fn latex_monomial(chart: &Chart, m: &Monomial) -> String {
    let mut body = Vec::new();
    for (x, p) in &m.even {
        let base = latex_coord(chart, *x);
        body.push(if *p == 1 { base } else { format!("{base}^{{{p}}}") });
    }
    body.extend(m.odd.iter().map(|x| latex_coord(chart, *x)));
    body.join(" ")
}

pub fn latex_expr(chart: &Chart, e: &SuperExpr) -> String {
    latex_terms(e.terms().map(|(m, c)| (c.clone(), latex_monomial(chart, m))).collect())
}

pub fn latex_form(chart: &Chart, w: &GradedForm) -> String {
    let terms = w
        .terms()
        .map(|(diffs, c)| {
            let wedge =
                diffs.iter().map(|d| format!("d{}", latex_coord(chart, *d))).collect::<Vec<_>>().join("\\wedge ");
            match c.terms().next() {
                Some((m, k)) if c.num_terms() == 1 => {
                    let mono = latex_monomial(chart, m);
                    let body = if mono.is_empty() { wedge } else { format!("{mono}\\,{wedge}") };
                    (k.clone(), body)
                }
                _ => (Rational::from_integer(1.into()), format!("\\left({}\\right)\\,{wedge}", latex_expr(chart, c))),
            }
        })
        .collect();
    latex_terms(terms)
}

pub fn derive_latex(system: &LagrangianSystem) -> String {
    let k = system.order();
    let chart = system.chart().with_order(2 * k);
    let data = system.data();
    let mut out = String::new();
    let _ = writeln!(out, "\\begin{{align*}}");
    let _ = writeln!(out, "L &= {} \\quad (k = {k})\\\\", latex_expr(&chart, system.lagrangian().expr()));
    let _ = writeln!(out, "\\Theta_L &= {}\\\\", latex_form(&chart, &data.theta));
    let _ = writeln!(out, "\\Omega_L &= {}\\\\", latex_form(&chart, &data.omega));
    let _ = writeln!(out, "E_L &= {}\\\\", latex_expr(&chart, &data.energy));
    let _ = writeln!(out, "\\delta L &= {}", latex_form(&chart, &data.delta_l));
    let verdict = system.regularity().verdict;
    if let Ok(d) = system.solve_dynamics() {
        for (c, f) in d.forces().iter().chain(d.constraints()) {
            let _ = write!(out, "\\\\\n{} &= {}", latex_coord(&chart, *c), latex_expr(&chart, f));
        }
        out.push('\n');
    } else {
        let _ = writeln!(out, "\\\\\n&\\text{{{verdict}}}");
    }
    let _ = writeln!(out, "\\end{{align*}}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use supermech::problem::parse_problem;

    fn system(text: &str) -> LagrangianSystem {
        LagrangianSystem::new(parse_problem(text).unwrap().super_lagrangian().unwrap()).unwrap()
    }

    #[test]
    fn latex_of_superparticle() {
        let s = system("even q; odd theta; order 1; L = 1/2*q[1]^2 + 1/2*theta[0]*theta[1]");
        let tex = derive_latex(&s);
        assert!(tex.contains("\\Theta_L &= q_{1}\\,dq_{0} + \\frac{1}{2}\\,\\theta_{0}\\,d\\theta_{0}"), "{tex}");
        assert!(tex.contains("\\theta_{1} &= 0"), "{tex}");
    }

    #[test]
    fn ordered_map_keeps_order() {
        let m = Ordered(vec![("b".to_string(), 1), ("a".to_string(), 2)]);
        assert_eq!(serde_json::to_string(&m).unwrap(), r#"{"b":1,"a":2}"#);
    }

    #[test]
    fn derive_json_fields() {
        let r = derive_report(&system("even q; order 2; L = 1/2*q[2]^2"));
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["forces"]["q[4]"], "0");
        assert_eq!(v["energy"], "-q[1]*q[3] + 1/2*q[2]^2");
        assert_eq!(v["theta"][0]["wedge"][0], "dq[0]");
    }
}
