//! Exact-identity suites with fixed seeds.

use bandlab::chebyshev::{alpha_coefficients, exact_evolution, propagate_site};
use bandlab::ensemble::{EntryKind, EnsembleDescriptor, ShapeKind};
use bandlab::limit::{Covariance, LimitDensity, DEFAULT_NODES};
use bandlab::nonbacktracking::{max_entry_diff, path_expansion_check, random_hermitian, vn_direct, vn_recursive};
use bandlab::operator::HermitianOperator;
use bandlab::parallel::{map_indexed, Exec};
use bandlab::quadrature::adaptive;
use num_complex::Complex64;
use serde::Serialize;

use crate::checks::run_diagram_check;
use crate::config::{DiagramCheck, Suite};

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub suite: &'static str,
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn row(suite: &'static str, check: String, value: f64, tolerance: f64) -> Row {
    Row { suite, check, value, tolerance, pass: value <= tolerance }
}

fn chebyshev() -> Vec<Row> {
    let mut rows = Vec::new();
    for t in [1.0, 10.0, 50.0, 200.0] {
        let c = alpha_coefficients(t, 1e-12).expect("valid t");
        let s = c.sum_of_squares();
        let dev = 1.0 - s;
        let mut r = row("chebyshev", format!("1 − ∑|α_n|² at t={t}"), dev, 1e-12);
        r.pass = (0.0..=1e-12).contains(&dev);
        rows.push(r);
    }
    let results = map_indexed(Exec::Parallel, 10, |seed| {
        let e = EnsembleDescriptor::new(1, 64, 8, ShapeKind::Box, EntryKind::Gaussian, false, seed as u64)
            .build()
            .unwrap();
        let h = e.sample(0);
        [1.0, 5.0, 20.0].map(|t| {
            let p = propagate_site(&h, 0, t, 1e-12).unwrap();
            let mut psi0 = vec![Complex64::default(); h.dim()];
            psi0[0] = Complex64::new(1.0, 0.0);
            let exact = exact_evolution(&h, &psi0, t).unwrap();
            p.state.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        })
    });
    for (k, t) in [1.0, 5.0, 20.0].iter().enumerate() {
        let worst = results.iter().map(|r| r[k]).fold(0.0, f64::max);
        rows.push(row("chebyshev", format!("propagator ℓ² error t={t}, 10 seeds"), worst, 1e-8));
    }
    rows
}

fn nonbacktracking(n_max: usize, seeds: usize) -> Vec<Row> {
    let n_direct = n_max.min(6);
    let results = map_indexed(Exec::Parallel, seeds, |seed| {
        let h = if seed % 2 == 0 {
            random_hermitian(12, seed % 4 == 0, seed as u64)
        } else {
            let e = EnsembleDescriptor::new(1, 12, 3, ShapeKind::Box, EntryKind::Rademacher, seed % 3 == 0, seed as u64)
                .build()
                .unwrap();
            e.sample(0).to_dense()
        };
        let direct = vn_direct(&h, n_direct).unwrap();
        let rec = vn_recursive(&h, n_direct);
        let vn = direct.iter().zip(&rec).map(|(a, b)| max_entry_diff(a, b)).fold(0.0, f64::max);
        let path = (0..=n_max).map(|n| path_expansion_check(&h, n).unwrap().residual).fold(0.0, f64::max);
        (vn, path)
    });
    vec![
        row("nonbacktracking", format!("max |V_n rec − V_n direct|, n≤{n_direct}, {seeds} seeds"), results.iter().map(|r| r.0).fold(0.0, f64::max), 1e-10),
        row("nonbacktracking", format!("path expansion residual, n≤{n_max}, {seeds} seeds"), results.iter().map(|r| r.1).fold(0.0, f64::max), 1e-9),
    ]
}

fn limit() -> Vec<Row> {
    let mut rows = Vec::new();
    for (t, s) in [(1.0, 1.0 / 3.0), (0.5, 1.0), (2.0, 0.25)] {
        let l = LimitDensity::new(t, Covariance::scalar(1, s).unwrap(), DEFAULT_NODES).unwrap();
        let r = 40.0 * (t * s).sqrt();
        let mass = adaptive(|x| l.eval(&[x]), -r, 0.0, 1e-13, 1e-12).value + adaptive(|x| l.eval(&[x]), 0.0, r, 1e-13, 1e-12).value;
        rows.push(row("limit", format!("|∫L − 1| at T={t}, Σ={s:.4}"), (mass - 1.0).abs(), 1e-8));
        let m2 = 2.0 * adaptive(|x| x * x * l.eval(&[x]), 0.0, r, 1e-14, 1e-12).value;
        let target = 8.0 / (3.0 * std::f64::consts::PI) * t * s;
        rows.push(row("limit", format!("second moment rel. error at T={t}, Σ={s:.4}"), (m2 / target - 1.0).abs(), 1e-6));
    }
    rows
}

fn diagrams(seed: u64) -> Vec<Row> {
    let mut rows = Vec::new();
    for check in [DiagramCheck::Narayana, DiagramCheck::Skeleton, DiagramCheck::Greedy] {
        let s = run_diagram_check(check, 10, seed);
        for r in s.rows {
            rows.push(row("diagrams", format!("{} ({} instances)", r.name, r.instances), r.failures as f64, 0.0));
        }
    }
    rows
}

pub fn run_suite(suite: Suite, seed: u64, n_max: usize, seeds: usize) -> Vec<Row> {
    match suite {
        Suite::Chebyshev => chebyshev(),
        Suite::Nonbacktracking => nonbacktracking(n_max, seeds),
        Suite::Limit => limit(),
        Suite::Diagrams => diagrams(seed),
        Suite::All => [chebyshev(), nonbacktracking(n_max, seeds), limit(), diagrams(seed)].concat(),
    }
}
