//! Acceptance criteria 1-8. Runs as a plain binary and prints one line per
//! criterion; the process fails if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use proptest::collection::vec as pvec;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use supermech::algebra::{rat, Coord, Rational, SuperExpr};
use supermech::forms::GradedForm;
use supermech::jet::{total_derivative, Chart};
use supermech::lagrangian::{is_sode, LagrangianSystem, SuperLagrangian};
use supermech::noether::{certify_symmetry, lifted_action, noether_charge, noether_inverse, WitnessConfig};
use supermech::numeric::{conservation_report, integrate, rational_to_f64};
use supermech::problem::{parse_expression, parse_problem, ProblemFile};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn load(name: &str) -> ProblemFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_problem(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn system_of(p: &ProblemFile) -> LagrangianSystem {
    LagrangianSystem::new(p.super_lagrangian().unwrap()).unwrap()
}

fn system(even: &[&str], odd: &[&str], k: u16, l: &str) -> LagrangianSystem {
    let c = Chart::new(even.iter().map(|s| s.to_string()).collect(), odd.iter().map(|s| s.to_string()).collect(), k);
    let e = parse_expression(l, &c.with_order(k)).unwrap();
    LagrangianSystem::new(SuperLagrangian::new(c, e).unwrap()).unwrap()
}

fn q(j: u16) -> SuperExpr {
    SuperExpr::var(Coord::even(0, j))
}

fn criterion_1() -> Outcome {
    let s = system(&["q"], &[], 1, "1/2*q[1]^2 - 1/2*q[0]^2");
    let d = s.data();
    let theta = GradedForm::term(q(1), vec![Coord::even(0, 0)]);
    ensure(d.theta == theta, || format!("Θ_L = {}", d.theta))?;
    let energy = (&q(1).pow(2) + &q(0).pow(2)).scale(&rat(1, 2));
    ensure(d.energy == energy, || format!("E_L = {}", d.energy))?;
    let dynamics = s.solve_dynamics().map_err(|e| e.to_string())?;
    let forces: BTreeMap<_, _> = [(Coord::even(0, 2), -q(0))].into();
    ensure(*dynamics.forces() == forces, || format!("forces {:?}", dynamics.forces()))?;
    Ok("Θ_L = q1 dq0, E_L = (q1² + q0²)/2, q2 = -q0".into())
}

/// Polynomials in the jet coordinates `q_0..q_N` of one even coordinate,
/// keyed by exponent vectors. Kept separate from the library's expression type.
#[derive(Clone, Debug, Default, PartialEq)]
struct JetPoly(BTreeMap<Vec<u32>, Rational>);

const SLOTS: usize = 12;

impl JetPoly {
    fn add_term(&mut self, e: Vec<u32>, c: Rational) {
        let entry = self.0.entry(e.clone()).or_insert_with(|| rat(0, 1));
        *entry += c;
        if *self.0.get(&e).unwrap() == rat(0, 1) {
            self.0.remove(&e);
        }
    }

    fn partial(&self, j: usize) -> JetPoly {
        let mut out = JetPoly::default();
        for (e, c) in &self.0 {
            if e[j] > 0 {
                let mut e2 = e.clone();
                e2[j] -= 1;
                out.add_term(e2, c * Rational::from_integer(e[j].into()));
            }
        }
        out
    }

    /// `d/dt` with `q_j' = q_{j+1}`.
    fn dt(&self) -> JetPoly {
        let mut out = JetPoly::default();
        for (e, c) in &self.0 {
            for j in 0..SLOTS - 1 {
                if e[j] > 0 {
                    let mut e2 = e.clone();
                    e2[j] -= 1;
                    e2[j + 1] += 1;
                    out.add_term(e2, c * Rational::from_integer(e[j].into()));
                }
            }
        }
        out
    }

    fn neg_dt_pow(&self, n: usize) -> JetPoly {
        let mut out = self.clone();
        for _ in 0..n {
            out = out.dt();
            for c in out.0.values_mut() {
                *c = -c.clone();
            }
        }
        out
    }

    fn plus(&self, other: &JetPoly) -> JetPoly {
        let mut out = self.clone();
        for (e, c) in &other.0 {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    fn from_expr(e: &SuperExpr) -> JetPoly {
        let mut out = JetPoly::default();
        for (m, c) in e.terms() {
            let mut exps = vec![0; SLOTS];
            for (x, p) in &m.even {
                exps[x.order as usize] = *p;
            }
            out.add_term(exps, c.clone());
        }
        out
    }
}

/// A random polynomial of degree ≤ 3 in `q_0..q_k`, built in both representations.
fn random_lagrangian(rng: &mut ChaCha8Rng, k: u16) -> (SuperExpr, JetPoly) {
    let mut expr = SuperExpr::zero();
    let mut poly = JetPoly::default();
    for _ in 0..rng.gen_range(1..=5) {
        let c = rat(rng.gen_range(-5..=5), rng.gen_range(1..=3));
        let mut term = SuperExpr::constant(c.clone());
        let mut exps = vec![0u32; SLOTS];
        for _ in 0..rng.gen_range(0..=3) {
            let j = rng.gen_range(0..=k);
            term = &term * &q(j);
            exps[j as usize] += 1;
        }
        expr += term;
        poly.add_term(exps, c);
    }
    (expr, poly)
}

fn ostrogradski_case(k: u16, l: &SuperExpr, oracle: &JetPoly) -> Result<(), String> {
    let s = LagrangianSystem::new(SuperLagrangian::new(Chart::new(vec!["q".into()], vec![], k), l.clone()).unwrap())
        .map_err(|e| e.to_string())?;
    let d = s.data();
    let k = k as usize;
    let mut expected_theta_terms = 0;
    for j in 0..k {
        // p_j = Σ_l (-d_T)^l ∂L/∂q_{j+l+1}
        let p = (0..k - j).fold(JetPoly::default(), |acc, l| acc.plus(&oracle.partial(j + l + 1).neg_dt_pow(l)));
        let got = JetPoly::from_expr(&d.theta.coefficient(&[Coord::even(0, j as u16)]));
        ensure(got == p, || format!("L = {l}: momentum p_{j} mismatch"))?;
        expected_theta_terms += usize::from(!p.0.is_empty());
    }
    ensure(d.theta.terms().count() == expected_theta_terms, || format!("L = {l}: Θ_L has extra terms"))?;
    let e = (0..=k).fold(JetPoly::default(), |acc, j| acc.plus(&oracle.partial(j).neg_dt_pow(j)));
    let got = JetPoly::from_expr(&d.delta_l.coefficient(&[Coord::even(0, 0)]));
    ensure(got == e, || format!("L = {l}: Euler-Lagrange mismatch"))?;
    ensure(d.delta_l.terms().count() == usize::from(!e.0.is_empty()), || format!("L = {l}: δL has extra terms"))
}

fn random_suite() -> Vec<(u16, SuperExpr, JetPoly)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out = Vec::new();
    for k in [2u16, 3] {
        for _ in 0..20 {
            let (l, p) = random_lagrangian(&mut rng, k);
            out.push((k, l, p));
        }
    }
    out
}

fn criterion_2() -> Outcome {
    let suite = random_suite();
    for (k, l, p) in &suite {
        ostrogradski_case(*k, l, p)?;
    }
    Ok(format!("{} random Lagrangians (20 each at k = 2, 3) match the Ostrogradski oracle", suite.len()))
}

fn named_systems() -> Vec<(String, LagrangianSystem)> {
    let mut out: Vec<(String, LagrangianSystem)> = [
        "oscillator.sm",
        "free_particle.sm",
        "ostrogradski.sm",
        "superparticle.sm",
        "coupled_superparticle.sm",
        "anharmonic.sm",
    ]
    .iter()
    .map(|f| (f.to_string(), system_of(&load(f))))
    .collect();
    out.push(("1/2 q3^2".into(), system(&["q"], &[], 3, "1/2*q[3]^2")));
    out.push(("1/2 q2^2 - 1/2 q1^2 + 1/2 q0^2".into(), system(&["q"], &[], 2, "1/2*q[2]^2 - 1/2*q[1]^2 + 1/2*q[0]^2")));
    out.push((
        "two oscillators, coupled".into(),
        system(&["q", "r"], &[], 1, "1/2*q[1]^2 + 1/2*r[1]^2 - 1/2*q[0]^2 - r[0]^2 + q[0]*r[0]"),
    ));
    out
}

fn criterion_3() -> Outcome {
    let mut systems = named_systems();
    systems.push(("degenerate.sm".into(), system_of(&load("degenerate.sm"))));
    for (i, (k, l, _)) in random_suite().into_iter().enumerate() {
        let s =
            LagrangianSystem::new(SuperLagrangian::new(Chart::new(vec!["q".into()], vec![], k), l).unwrap()).unwrap();
        systems.push((format!("random #{i}"), s));
    }
    for (name, s) in &systems {
        let r = s.verify_structure().map_err(|e| format!("{name}: {e}"))?;
        ensure(r.omega_closed, || format!("{name}: dΩ_L ≠ 0"))?;
        ensure(r.identity_chain, || format!("{name}: δL ≠ i_T Ω_L - dE_L"))?;
        ensure(r.theta_semibasic, || format!("{name}: Θ_L not semibasic"))?;
        ensure(r.delta_semibasic, || format!("{name}: δL not semibasic"))?;
        ensure(r.cartan_identity, || format!("{name}: d_T Θ_L ≠ i_T dΘ_L + d i_T Θ_L"))?;
    }
    Ok(format!("{} Lagrangians: dΩ = 0, δL = i_T Ω - dE, semibasic Θ and δL", systems.len()))
}

fn criterion_4() -> Outcome {
    use common::*;
    let cases = 200;
    let mut runner = TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let fail = |law: &str, e: String| format!("{law}: {e}");
    runner.run(&form(2, 3), |w| d_squared(&w)).map_err(|e| fail("d² = 0", e.to_string()))?;
    runner
        .run(&form(2, 2), |w| d_commutes_with_total_derivative(&w))
        .map_err(|e| fail("d_T d = d d_T", e.to_string()))?;
    runner
        .run(&(homogeneous_form(1), homogeneous_form(1)), |(a, b)| bigraded_commutation(&a, &b))
        .map_err(|e| fail("wedge commutation", e.to_string()))?;
    runner
        .run(&(homogeneous(2), expr(2), coord(2)), |(a, b, x)| left_partial_derivation(&a, &b, x))
        .map_err(|e| fail("partial Leibniz", e.to_string()))?;
    runner
        .run(&(expr(2), coord(2), coord(2)), |(f, x, y)| partials_graded_commute(&f, x, y))
        .map_err(|e| fail("partials commute", e.to_string()))?;
    runner
        .run(&(field(2, 2), homogeneous_form(2), form(2, 2)), |(x, a, b)| interior_derivation(&x, &a, &b))
        .map_err(|e| fail("interior Leibniz", e.to_string()))?;
    runner
        .run(&(pairing_orders(), field(0, 1), pvec((0u8..4, expr(3)), 0..4)), |(o, x, c)| semibasic_pairing(o, &x, &c))
        .map_err(|e| fail("semibasic pairing", e.to_string()))?;
    Ok(format!("7 laws x {cases} randomized cases"))
}

fn criterion_5() -> Outcome {
    let systems = named_systems();
    for (name, s) in &systems {
        let dynamics = s.solve_dynamics().map_err(|e| format!("{name}: {e}"))?;
        let residual = dynamics.residual(s).map_err(|e| format!("{name}: {e}"))?;
        ensure(residual.is_zero(), || format!("{name}: i_Γ Ω_L - dE_L = {residual}"))?;
        let sode = is_sode(dynamics.chart(), dynamics.order(), dynamics.field()).map_err(|e| format!("{name}: {e}"))?;
        ensure(sode, || format!("{name}: Γ is not a SODE"))?;
    }
    Ok(format!("{} regular Lagrangians: residual 0, Γ is a SODE", systems.len()))
}

fn criterion_6() -> Outcome {
    let mut lines = Vec::new();
    for (file, sym) in [("free_particle.sm", "translation"), ("oscillator.sm", "time"), ("superparticle.sm", "susy")] {
        let p = load(file);
        let s = system_of(&p);
        let dynamics = s.solve_dynamics().map_err(|e| e.to_string())?;
        let x = p.symmetry_field(p.symmetry(sym).unwrap()).unwrap();
        let cert = certify_symmetry(&s, &x).map_err(|e| format!("{file} {sym}: {e}"))?;
        let g = cert.charge;
        let flow = dynamics.apply(&g).map_err(|e| e.to_string())?;
        ensure(flow.is_zero(), || format!("{file}: Γ(G) = {flow}"))?;

        let inv = noether_inverse(&s, &g, WitnessConfig::default()).map_err(|e| format!("{file} inverse: {e}"))?;
        let lhs = lifted_action(&s, &inv.field).map_err(|e| e.to_string())?;
        ensure(lhs == total_derivative(&inv.f), || format!("{file}: recovered field fails X^(k)L = T F"))?;
        let again = noether_charge(&s, &inv.field, &inv.f).map_err(|e| e.to_string())?;
        ensure(again == g && inv.charge == g, || format!("{file}: charge re-derivation gives {again}"))?;
        lines.push(format!("{sym}: G = {}", p.phase_chart().display(&g)));
    }
    Ok(lines.join(", "))
}

fn max_drift(p: &ProblemFile, dt: f64, extra: &[(String, SuperExpr)]) -> Result<(f64, Vec<(String, f64)>), String> {
    let s = system_of(p);
    let dynamics = s.solve_dynamics().map_err(|e| e.to_string())?;
    let sim = p.simulation.as_ref().ok_or("no simulate block")?;
    let t_end = rational_to_f64(&sim.t_end).map_err(|e| e.to_string())?;
    let traj = integrate(&dynamics, &p.initial_state().unwrap().unwrap(), dt, t_end).map_err(|e| e.to_string())?;
    let mut quantities = vec![("E_L".to_string(), s.data().energy.clone())];
    for sym in &p.symmetries {
        let cert = certify_symmetry(&s, &p.symmetry_field(sym).unwrap()).map_err(|e| format!("{}: {e}", sym.name))?;
        quantities.push((sym.name.clone(), cert.charge));
    }
    quantities.extend(p.charges.iter().cloned());
    quantities.extend(extra.iter().cloned());
    let report = conservation_report(&traj, &quantities).map_err(|e| e.to_string())?;
    Ok((traj.constraint_violation, report.into_iter().map(|d| (d.name, d.drift)).collect()))
}

fn criterion_7() -> Outcome {
    let mut summary = Vec::new();
    for file in ["oscillator.sm", "ostrogradski.sm", "superparticle.sm", "coupled_superparticle.sm"] {
        let p = load(file);
        let start = Instant::now();
        let (violation, drifts) = max_drift(&p, 1e-3, &[])?;
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(5), || format!("{file}: {elapsed:?}"))?;
        ensure(violation <= 1e-6, || format!("{file}: constraint violation {violation:e}"))?;
        for (name, d) in &drifts {
            ensure(*d <= 1e-6, || format!("{file}: {name} drifts by {d:e}"))?;
        }
        let worst = drifts.iter().map(|(_, d)| *d).fold(0.0, f64::max);
        summary.push(format!("{file} {} quantities ≤ {worst:.1e}", drifts.len()));
    }
    let p = load("free_particle.sm");
    let (_, drifts) = max_drift(&p, 1e-3, &[("q0".into(), q(0))])?;
    let control = drifts.last().unwrap().1;
    ensure((control - 1.0).abs() <= 1e-9, || format!("control q0 drifts by {control}"))?;
    summary.push(format!("control q0 drifts by {control:.12}"));
    Ok(summary.join("; "))
}

fn sci(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn criterion_8() -> Outcome {
    let p = load("anharmonic.sm");
    let mut drifts = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3] {
        let (_, d) = max_drift(&p, dt, &[])?;
        drifts.push(d[0].1);
    }
    let ratios = [drifts[0] / drifts[1], drifts[1] / drifts[2]];
    for r in ratios {
        ensure((8.0..=32.0).contains(&r), || format!("drifts {}, ratio {r:.2} outside [8, 32]", sci(&drifts)))?;
    }
    Ok(format!("E_L drifts {}, ratios {:.2}, {:.2}", sci(&drifts), ratios[0], ratios[1]))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("classical k=1 reduction", criterion_1),
        ("Ostrogradski oracle, k=2 and k=3", criterion_2),
        ("structural identities", criterion_3),
        ("calculus laws", criterion_4),
        ("dynamical equation residual", criterion_5),
        ("Noether round trip", criterion_6),
        ("numeric conservation", criterion_7),
        ("RK4 order", criterion_8),
    ];
    let budgets = [1.0, 30.0, f64::INFINITY, f64::INFINITY, f64::INFINITY, 10.0, f64::INFINITY, f64::INFINITY];
    let mut failed = 0;
    for (i, ((name, run), budget)) in criteria.iter().zip(budgets).enumerate() {
        let start = Instant::now();
        let mut result = run();
        let secs = start.elapsed().as_secs_f64();
        if result.is_ok() && secs > budget {
            result = Err(format!("took {secs:.2} s, budget {budget} s"));
        }
        match result {
            Ok(detail) => println!("criterion {} PASS {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name} ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
