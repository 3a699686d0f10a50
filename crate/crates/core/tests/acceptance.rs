//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use dialogic::entail::{self, build_formula, load_suite_file, Direction, Obstacle, Verdict};
use dialogic::formula::Formula;
use dialogic::gkk::{prove, SearchLimits, StrategicFault};
use dialogic::par;
use dialogic::translate::{
    derivation_to_strategy, find_winning_strategy, fresh_variable_violations, strategize, strategy_to_derivation,
    subformula_violations,
};
use dialogic::{Answer, Strategy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn limits() -> SearchLimits {
    SearchLimits::default()
}

fn figure_strategies() -> Outcome {
    let mut worst = 0;
    for text in FIGURE {
        let t = Instant::now();
        let s = match find_winning_strategy(&f(text), &limits()) {
            Ok(Some(s)) => s,
            other => return outcome(false, format!("{text}: {other:?}")),
        };
        let ms = t.elapsed().as_millis();
        worst = worst.max(ms);
        if let Err(e) = s.validate() {
            return outcome(false, format!("{text}: {e}"));
        }
        if !s.is_winning() || ms >= 1000 {
            return outcome(false, format!("{text}: winning={} in {ms} ms", s.is_winning()));
        }
    }
    outcome(true, format!("3/3 winning strategies, slowest {worst} ms"))
}

fn suite() -> Outcome {
    let t = Instant::now();
    let report = match entail::run_suite(&corpus_path(), &limits()) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let ms = t.elapsed().as_millis();
    let mut ok = report.all_match() && ms < 10_000;
    let mut certificate = String::from("none");
    for p in &report.problems {
        if p.expected != Some(Answer::Unknown) {
            continue;
        }
        match &p.verdict {
            Ok(Verdict::Unknown { positive: Obstacle::Polarity(c), .. }) => {
                certificate = format!("{} via {:?}/{:?}", p.id, c.positive_only, c.negative_only);
                ok &= c.names("suedois");
            }
            _ => ok = false,
        }
    }
    outcome(ok, format!("{}/{} in {ms} ms, certificate {certificate}", report.matched(), report.problems.len()))
}

fn completeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut formulas: Vec<Formula> = (0..500).map(|_| random_formula(&mut rng, 4, &["a", "b", "c"])).collect();
    formulas.extend(all_formulas(2));
    let found = par::map(&formulas, |g| {
        find_winning_strategy(g, &limits()).map(|s| s.map(|s| s.validate().is_ok() && s.is_winning()))
    });
    let mut bad = Vec::new();
    let mut valid = 0;
    for (g, r) in formulas.iter().zip(&found) {
        let taut = tautology(g);
        valid += taut as usize;
        let agrees = match r {
            Ok(Some(true)) => taut,
            Ok(None) => !taut,
            _ => false,
        };
        if !agrees {
            bad.push(g.to_string());
        }
    }
    let detail = format!(
        "{} formulas ({valid} valid), {} disagreements{}",
        formulas.len(),
        bad.len(),
        bad.first().map(|b| format!(", first {b}")).unwrap_or_default()
    );
    outcome(bad.is_empty(), detail)
}

fn sound(g: &Formula) -> Result<bool, String> {
    let d = prove(&goal(g), &limits()).map_err(|e| e.to_string())?;
    if let Some(d) = &d {
        d.validate().map_err(|e| format!("{g}: derivation {e}"))?;
        if !d.is_strategic() {
            return Err(format!("{g}: derivation not strategic"));
        }
    }
    let s = find_winning_strategy(g, &limits()).map_err(|e| format!("{g}: {e}"))?;
    if let Some(s) = &s {
        s.validate().map_err(|e| format!("{g}: strategy {e}"))?;
        if !s.is_winning() {
            return Err(format!("{g}: strategy not winning"));
        }
    }
    Ok(d.is_some() || s.is_some())
}

fn corpus_formulas() -> Vec<Formula> {
    let problems = load_suite_file(&corpus_path()).expect("corpus loads");
    problems
        .iter()
        .flat_map(|p| [build_formula(p, Direction::Positive), build_formula(p, Direction::Negative)])
        .collect()
}

fn fuzz_formulas(n: usize) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out: Vec<Formula> = (0..n / 2).map(|_| schema_instance(&mut rng)).collect();
    while out.len() < n {
        let g = random_formula(&mut rng, 5, &["a", "b", "c", "d"]);
        if tautology(&g) {
            out.push(g);
        }
    }
    out
}

fn soundness() -> Outcome {
    let mut formulas = corpus_formulas();
    formulas.extend(fuzz_formulas(10_000));
    let results = par::map(&formulas, sound);
    let emitted = results.iter().filter(|r| matches!(r, Ok(true))).count();
    let errors: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    outcome(
        errors.is_empty(),
        format!(
            "{} formulas, {emitted} with output, {} unsound{}",
            formulas.len(),
            errors.len(),
            errors.first().map(|e| format!(", first {e}")).unwrap_or_default()
        ),
    )
}

fn round_trips() -> Outcome {
    for text in FIGURE {
        let s = find_winning_strategy(&f(text), &limits()).unwrap().unwrap();
        let back = strategy_to_derivation(&s).and_then(|d| derivation_to_strategy(&d));
        match back {
            Ok(t) if t.validate().is_ok() && t.is_winning() && t.isomorphic(&s) => {}
            other => return outcome(false, format!("{text}: {:?}", other.map(|t| t.size()))),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut done = 0;
    while done < 100 {
        let g = random_formula(&mut rng, 4, &["a", "b", "c"]);
        if !tautology(&g) {
            continue;
        }
        let d = prove(&goal(&g), &limits()).unwrap().unwrap();
        let back = derivation_to_strategy(&d).and_then(|s| strategy_to_derivation(&s));
        match back {
            Ok(e) if e.validate().is_ok() && e.conclusion.multiset_eq(&d.conclusion) => done += 1,
            other => return outcome(false, format!("{g}: {:?}", other.err())),
        }
    }
    outcome(true, "3 figure strategies isomorphic after S->D->S, 100 random D->S->D valid")
}

fn counterexamples() -> Outcome {
    let cases = [
        (exists_counterexample(), vec![], StrategicFault::ExRPremise),
        (implication_counterexample(), vec![0], StrategicFault::ImpLLeftPremise),
    ];
    for (d, path, fault) in cases {
        if d.validate().is_err() {
            return outcome(false, "counterexample is not a valid derivation");
        }
        match d.strategic_violation() {
            Some(v) if v.path == path && v.fault == fault => {}
            other => return outcome(false, format!("expected {fault:?} at {path:?}, got {other:?}")),
        }
        if derivation_to_strategy(&d).is_ok() {
            return outcome(false, "non-strategic derivation was translated");
        }
        match strategize(&d, &limits()) {
            Ok(e) if e.validate().is_ok() && e.is_strategic() && e.conclusion.multiset_eq(&d.conclusion) => {
                let is_goal = e.conclusion.left.is_empty() && e.conclusion.right.len() == 1;
                if is_goal && !derivation_to_strategy(&e).is_ok_and(|s| s.is_winning()) {
                    return outcome(false, "repaired derivation does not translate");
                }
            }
            other => return outcome(false, format!("strategize: {other:?}")),
        }
    }
    outcome(true, "both faults located and repaired")
}

fn fresh_variables() -> Outcome {
    let mut formulas: Vec<Formula> = FIGURE.iter().map(|t| f(t)).collect();
    formulas.extend(corpus_formulas());
    formulas.extend(fuzz_formulas(1000));
    let strategies: Vec<Strategy> =
        par::map(&formulas, |g| find_winning_strategy(g, &limits()).ok().flatten()).into_iter().flatten().collect();
    let counts = par::map(&strategies, |s| {
        let fresh = fresh_variable_violations(s).map(|v| v.len()).unwrap_or(usize::MAX);
        let sub = subformula_violations(s).map(|v| v.len()).unwrap_or(usize::MAX);
        (fresh, sub)
    });
    let fresh: usize = counts.iter().map(|c| c.0.min(1_000_000)).sum();
    let sub: usize = counts.iter().map(|c| c.1.min(1_000_000)).sum();
    outcome(
        fresh == 0 && sub == 0,
        format!("{} strategies, {fresh} fresh-variable and {sub} subformula violations", strategies.len()),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Outcome); 7] = [
        ("figure-strategies", figure_strategies),
        ("entailment-suite", suite),
        ("propositional-completeness", completeness),
        ("soundness", soundness),
        ("round-trips", round_trips),
        ("strategic-counterexamples", counterexamples),
        ("fresh-variable-discipline", fresh_variables),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let t = Instant::now();
        let o = check();
        failed += !o.pass as usize;
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} ({} ms)", o.detail, t.elapsed().as_millis());
    }
    println!("{}/{} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
