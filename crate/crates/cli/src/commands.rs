use bandlab::chebyshev::propagate_site;
use bandlab::diffusion::{estimate_rho, second_moment_check, weak_test, DiffusionOptions};
use bandlab::limit::{Covariance, LimitDensity};
use bandlab::operator::HermitianOperator;
use bandlab::quadrature::adaptive;
use bandlab::spectral::{edge_experiment, EdgeOptions};
use serde_json::json;

use crate::checks::run_diagram_check;
use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{num, Outputs};
use crate::verify::run_suite;

/// Text for stdout plus an optional check failure (artifacts are still written).
pub struct Outcome {
    pub lines: Vec<String>,
    pub failure: Option<String>,
}

fn ok(lines: Vec<String>) -> Result<Outcome, CliError> {
    Ok(Outcome { lines, failure: None })
}

fn coords(x: &[i64]) -> Vec<String> {
    x.iter().map(|c| c.to_string()).collect()
}

fn coord_header(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("x{}", i + 1)).collect()
}

pub fn run(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let ensemble = cfg.ensemble.as_ref().map(|e| e.build()).transpose()?;
    match cfg.command {
        Command::Gen => {
            let e = ensemble.unwrap();
            let h = e.sample(p.realization.unwrap());
            let rows = h.upper_triangle().into_iter().map(|(x, y, z)| vec![x.to_string(), y.to_string(), num(z.re), num(z.im)]);
            out.csv("matrix.csv", &["x", "y", "re", "im"], rows)?;
            let summary = json!({
                "dim": h.dim(),
                "row_len": e.profile.row_len(),
                "M": e.profile.m(),
                "max_variance": e.profile.max_variance(),
                "schur_bound": h.schur_bound(),
                "max_normalized_entry": h.max_normalized_entry(),
                "warnings": e.profile.warnings(),
            });
            out.json("result.json", &summary)?;
            ok(vec![format!("sampled {}×{} matrix, Schur bound {:.6}", h.dim(), h.dim(), h.schur_bound())])
        }
        Command::Evolve => {
            let e = ensemble.unwrap();
            let h = e.sample(p.realization.unwrap());
            let lattice = e.profile.lattice();
            let prop = propagate_site(&h, lattice.origin(), p.t.unwrap(), p.residual_target.unwrap())?;
            let mut header = coord_header(lattice.dim());
            header.extend(["re", "im", "rho"].map(String::from));
            let rows = prop.state.iter().enumerate().map(|(i, z)| {
                let mut r = coords(&lattice.point(i));
                r.extend([num(z.re), num(z.im), num(z.norm_sqr())]);
                r
            });
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let meta = [("t", num(p.t.unwrap())), ("seed", cfg.seed.to_string()), ("residual", num(prop.residual))];
            out.csv_with("state.csv", &meta, &header, rows)?;
            out.json(
                "result.json",
                &json!({
                    "t": prop.t, "n_max": prop.n_max, "residual": prop.residual, "error_bound": prop.error_bound,
                    "norm": prop.norm, "norm_defect": prop.norm_defect, "schur_bound": prop.schur_bound,
                    "warnings": prop.warnings,
                }),
            )?;
            ok(vec![format!("t = {}: n_max = {}, norm defect {:.3e}", prop.t, prop.n_max, prop.norm_defect)])
        }
        Command::Diffusion => {
            let e = ensemble.unwrap();
            let opts = DiffusionOptions { residual_target: p.residual_target.unwrap(), ..DiffusionOptions::default() };
            let prof = estimate_rho(&e, p.t.unwrap(), p.realizations.unwrap(), opts)?;
            let mut header = coord_header(prof.d);
            header.extend(["rho", "rho_se"].map(String::from));
            let rows = prof.sites.iter().zip(prof.rho.iter().zip(&prof.rho_se)).map(|(x, (r, s))| {
                let mut row = coords(x);
                row.extend([num(*r), num(*s)]);
                row
            });
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            out.csv("rho.csv", &header, rows)?;
            let mut lines = vec![format!(
                "t = {}, {} realizations: ∑ϱ = {:.12}, max sum defect {:.3e}",
                prof.t,
                prof.realizations,
                prof.total(),
                prof.max_sum_defect
            )];
            let mut result = json!({ "profile": prof });
            if let (Some(k), Some(tt)) = (p.kappa, p.big_t) {
                let shape = e.profile.shape();
                let summary = weak_test(&prof, shape, k, tt, p.phis.as_deref().unwrap_or(&[]))?;
                let moment = second_moment_check(&prof, shape, k, tt)?;
                for w in &summary.weak_tests {
                    lines.push(format!("{}: lattice {:.6} ± {:.6}, limit {:.6}, gap {:+.6}", w.phi.name(), w.lattice_value, w.lattice_se, w.limit_value, w.gap));
                }
                lines.push(format!("second moment ratio {:.4} ± {:.4}", moment.ratio, moment.ratio_se));
                result["rescaled"] = json!(summary);
                result["second_moment"] = json!(moment);
            }
            out.json("result.json", &result)?;
            ok(lines)
        }
        Command::Limit => {
            let (tt, s) = (p.big_t.unwrap(), p.sigma.unwrap());
            let l = LimitDensity::new(tt, Covariance::scalar(1, s)?, p.quadrature_nodes.unwrap())?;
            let g = p.grid.as_ref().unwrap();
            let rows = (0..g.points).map(|i| {
                let x = g.min + (g.max - g.min) * i as f64 / (g.points - 1) as f64;
                vec![num(x), num(l.eval(&[x]))]
            });
            out.csv("density.csv", &["X", "L"], rows)?;
            let r = 40.0 * (tt * s).sqrt();
            let mass = adaptive(|x| l.eval(&[x]), -r, 0.0, 1e-13, 1e-12).value + adaptive(|x| l.eval(&[x]), 0.0, r, 1e-13, 1e-12).value;
            let m2 = 2.0 * adaptive(|x| x * x * l.eval(&[x]), 0.0, r, 1e-14, 1e-12).value;
            let mut expectations = Vec::new();
            for phi in p.phis.as_deref().unwrap_or(&[]) {
                expectations.push(json!({ "phi": phi, "value": l.expectation(phi)? }));
            }
            out.json(
                "result.json",
                &json!({ "T": tt, "sigma": s, "mass": mass, "second_moment": m2,
                         "second_moment_target": l.second_moment()[(0, 0)], "expectations": expectations }),
            )?;
            ok(vec![format!("∫L = {mass:.12}, second moment {m2:.10}")])
        }
        Command::Diagrams => {
            let s = run_diagram_check(p.check.unwrap(), p.max_edges.unwrap(), cfg.seed);
            out.json("result.json", &s)?;
            if !s.counterexamples.is_empty() {
                out.json("counterexamples.json", &s.counterexamples)?;
            }
            let lines = s
                .rows
                .iter()
                .map(|r| format!("{:<44} {:>8} instances {:>6} failures  {}", r.name, r.instances, r.failures, if r.failures == 0 { "PASS" } else { "FAIL" }))
                .collect();
            let failure = (!s.passed()).then(|| format!("{} counterexamples", s.counterexamples.len()));
            Ok(Outcome { lines, failure })
        }
        Command::Edge => {
            let e = ensemble.unwrap();
            let opts = EdgeOptions { rel_tol: p.rel_tol.unwrap(), ..EdgeOptions::default() };
            let r = edge_experiment(&e, p.epsilon.unwrap(), p.trials.unwrap(), &opts)?;
            let rows = r
                .lambda_max
                .iter()
                .zip(&r.schur_bounds)
                .enumerate()
                .map(|(i, (l, s))| vec![i.to_string(), num(*l), num(*s)]);
            out.csv("lambda_max.csv", &["trial", "lambda_max", "schur_bound"], rows)?;
            out.json("report.json", &r)?;
            let mut lines = vec![format!(
                "M = {}, threshold {:.6}: {}/{} exceed, median λ_max {:.6}",
                r.m, r.threshold, r.exceedances, r.trials, r.median
            )];
            lines.extend(r.odd_traces.iter().map(|o| format!("E tr Ũ_{} = {:+.4} ± {:.4}", o.n, o.mean, o.se)));
            lines.push(format!("Chebyshev growth margin {:.3e}", r.growth_margin));
            ok(lines)
        }
        Command::Verify => {
            let rows = run_suite(p.suite.unwrap(), cfg.seed, p.n_max.unwrap(), p.seeds.unwrap());
            out.json("verify.json", &rows)?;
            let lines = rows
                .iter()
                .map(|r| format!("{:<16} {:<56} {:>12.3e} ≤ {:<8.1e} {}", r.suite, r.check, r.value, r.tolerance, if r.pass { "PASS" } else { "FAIL" }))
                .collect();
            let failed = rows.iter().filter(|r| !r.pass).count();
            Ok(Outcome { lines, failure: (failed > 0).then(|| format!("{failed} checks failed")) })
        }
    }
}
