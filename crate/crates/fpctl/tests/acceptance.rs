//! Acceptance gate. Each criterion prints exactly one PASS/FAIL line with
//! the measured numbers behind the verdict; the test panics at the end if
//! any criterion failed. Run with `cargo test --test acceptance`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::time::Instant;

use fpctl::backward::reflect_point;
use fpctl::forward::delta_coefficient;
use fpctl::harness::{
    apply_overrides, convergence_study, gradcheck, gradcheck_instance, run_benchmark,
    Reference, RunSummary,
};
use fpctl::interp::{axis_stencil, interp_eval};
use fpctl::mesh::{build_grid, Domain};
use fpctl::model::catalog;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// The libtest harness captures `println!`; the per-criterion report must
/// reach the terminal either way, so write to the process stdout directly.
fn report(line: &str) {
    let mut out = std::fs::OpenOptions::new()
        .write(true)
        .open("/dev/stdout")
        .expect("process stdout");
    let _ = writeln!(out, "{line}");
}

struct Verdict {
    criterion: usize,
    label: &'static str,
    failures: Vec<String>,
    detail: String,
}

impl Verdict {
    fn new(criterion: usize, label: &'static str) -> Self {
        Self {
            criterion,
            label,
            failures: Vec::new(),
            detail: String::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.failures.push(what);
        }
    }

    fn finish(self, all: &mut Vec<String>) {
        let line = if self.failures.is_empty() {
            format!(
                "criterion {} ({}): PASS {}",
                self.criterion, self.label, self.detail
            )
        } else {
            format!(
                "criterion {} ({}): FAIL {} [{}]",
                self.criterion,
                self.label,
                self.detail,
                self.failures.join("; ")
            )
        };
        report(&line);
        if !self.failures.is_empty() {
            all.push(format!("criterion {}", self.criterion));
        }
    }
}

fn criterion_1(failed: &mut Vec<String>, masses: &mut Vec<f64>) {
    let mut v = Verdict::new(1, "stationary convergence");
    let t0 = Instant::now();
    let cfg = catalog("stationary-1d").expect("catalog");
    let rows = convergence_study(&cfg, &[5, 6, 7, 8], &Reference::Analytic).expect("study");
    for r in rows.iter().skip(1) {
        let p2 = r.p2.unwrap();
        let pinf = r.pinf.unwrap();
        v.check(
            (1.8..=2.2).contains(&p2),
            format!("p2({}) = {p2:.3} outside [1.8, 2.2]", r.n_v),
        );
        v.check(
            (1.8..=2.2).contains(&pinf),
            format!("pinf({}) = {pinf:.3} outside [1.8, 2.2]", r.n_v),
        );
    }
    let e2_last = rows.last().unwrap().e2;
    v.check(
        e2_last <= 3e-5,
        format!("E2(8) = {e2_last:.4e} > 3e-5"),
    );
    let wall = t0.elapsed().as_secs_f64();
    v.check(wall < 60.0, format!("wall {wall:.1}s >= 60s"));
    // the marched states feed the mass ledger of criterion 7
    let run = run_benchmark(&cfg).expect("stationary run");
    masses.push(run.summary.e_int);
    let _ = write!(
        v.detail,
        "E2(8) {e2_last:.4e}, orders {:?}, {wall:.1}s",
        rows.iter()
            .skip(1)
            .map(|r| (r.p2.unwrap() * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    );
    v.finish(failed);
}

fn criterion_2(failed: &mut Vec<String>) {
    let mut v = Verdict::new(2, "adjoint order");
    let t0 = Instant::now();
    let cfg = catalog("hjb-order-1d").expect("catalog");
    let rows =
        convergence_study(&cfg, &[5, 6, 7, 8, 9], &Reference::Fine { n_v: 11 }).expect("study");
    for r in rows.iter().skip(1) {
        let p2 = r.p2.unwrap();
        v.check(
            (1.75..=2.35).contains(&p2),
            format!("p2({}) = {p2:.3} outside [1.75, 2.35]", r.n_v),
        );
    }
    let e2_6 = rows[1].e2;
    v.check(
        (2.4e-3..=1.0e-2).contains(&e2_6),
        format!("E2(6) = {e2_6:.4e} outside [2.4e-3, 1e-2]"),
    );
    let wall = t0.elapsed().as_secs_f64();
    v.check(wall < 900.0, format!("wall {wall:.1}s >= 15min"));
    let _ = write!(
        v.detail,
        "E2(6) {e2_6:.4e}, orders {:?}, {wall:.1}s",
        rows.iter()
            .skip(1)
            .map(|r| (r.p2.unwrap() * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    );
    v.finish(failed);
}

fn order_compare_runs(order: u32) -> Vec<RunSummary> {
    [4u32, 5, 6, 7]
        .iter()
        .map(|&nv| {
            let mut cfg = catalog("order-compare-1d").expect("catalog");
            apply_overrides(
                &mut cfg,
                &[
                    ("nv".into(), nv.to_string()),
                    ("order".into(), order.to_string()),
                ],
            )
            .expect("overrides");
            run_benchmark(&cfg).expect("run").summary
        })
        .collect()
}

fn criterion_3_and_4(failed: &mut Vec<String>, masses: &mut Vec<f64>) {
    let mut v = Verdict::new(3, "optimal cost replication");
    let t0 = Instant::now();
    let second = order_compare_runs(2);
    let wall = t0.elapsed().as_secs_f64();
    let published = [2.92e-1, 2.59e-1, 2.47e-1, 2.42e-1];
    for (s, &target) in second.iter().zip(&published) {
        let j = s.j_star.unwrap();
        let rel = (j - target).abs() / target;
        v.check(
            rel <= 0.02,
            format!("J* = {j:.4e} vs {target:.2e} (rel {rel:.3})"),
        );
        let it = s.iterations.unwrap();
        v.check(it <= 15, format!("{it} iterations > 15"));
        v.check(
            s.f_min >= -1e-14,
            format!("f_min = {:.2e} < -1e-14", s.f_min),
        );
        v.check(s.e_int <= 1e-12, format!("E_int = {:.2e} > 1e-12", s.e_int));
        masses.push(s.e_int);
    }
    v.check(wall < 60.0, format!("wall {wall:.1}s >= 60s"));
    let _ = write!(
        v.detail,
        "J* {:?}, iterations {:?}, {wall:.1}s",
        second
            .iter()
            .map(|s| format!("{:.4e}", s.j_star.unwrap()))
            .collect::<Vec<_>>(),
        second
            .iter()
            .map(|s| s.iterations.unwrap())
            .collect::<Vec<_>>()
    );
    v.finish(failed);

    let mut v = Verdict::new(4, "first vs second order");
    let first = order_compare_runs(1);
    for (s2, s1) in second.iter().zip(&first) {
        let (j2, j1) = (s2.j_star.unwrap(), s1.j_star.unwrap());
        v.check(
            j2 <= j1 + 1e-3,
            format!("second-order J* {j2:.4e} > first-order {j1:.4e} + 1e-3"),
        );
        let (i2, i1) = (s2.iterations.unwrap(), s1.iterations.unwrap());
        v.check(
            i2 <= i1 + 2,
            format!("second-order iterations {i2} > first-order {i1} + 2"),
        );
        masses.push(s1.e_int);
    }
    let _ = write!(
        v.detail,
        "first-order J* {:?}, iterations {:?}",
        first
            .iter()
            .map(|s| format!("{:.4e}", s.j_star.unwrap()))
            .collect::<Vec<_>>(),
        first
            .iter()
            .map(|s| s.iterations.unwrap())
            .collect::<Vec<_>>()
    );
    v.finish(failed);
}

fn criterion_5(failed: &mut Vec<String>, masses: &mut Vec<f64>) {
    let mut v = Verdict::new(5, "2D control run");
    let t0 = Instant::now();
    let cfg = catalog("bivariate-opinion-2d").expect("catalog");
    let s = run_benchmark(&cfg).expect("run").summary;
    let wall = t0.elapsed().as_secs_f64();
    let j = s.j_star.unwrap();
    let rel = (j - 1.99e-1).abs() / 1.99e-1;
    v.check(rel <= 0.10, format!("J* = {j:.4e} vs 1.99e-1 (rel {rel:.3})"));
    let it = s.iterations.unwrap();
    v.check(
        (6..=20).contains(&it),
        format!("{it} iterations outside [6, 20]"),
    );
    v.check(s.e_int <= 1e-12, format!("E_int = {:.2e} > 1e-12", s.e_int));
    v.check(wall < 300.0, format!("wall {wall:.1}s >= 5min"));
    masses.push(s.e_int);
    let _ = write!(
        v.detail,
        "J* {j:.4e}, {it} iterations, f_min {:.1e}, {wall:.1}s",
        s.f_min
    );
    v.finish(failed);
}

fn criterion_6(failed: &mut Vec<String>, masses: &mut Vec<f64>) {
    let mut v = Verdict::new(6, "opinion-contacts ordering");
    let t0 = Instant::now();
    let run_with = |penalty: &str| -> RunSummary {
        let mut cfg = catalog("opinion-contacts-2d").expect("catalog");
        apply_overrides(
            &mut cfg,
            &[
                ("nv".into(), "5".into()),
                ("penalty".into(), penalty.into()),
            ],
        )
        .expect("overrides");
        run_benchmark(&cfg).expect("run").summary
    };
    let influencers = run_with("influencers");
    let non_influencers = run_with("non-influencers");
    let wall = t0.elapsed().as_secs_f64();
    let (ji, jn) = (
        influencers.j_star.unwrap(),
        non_influencers.j_star.unwrap(),
    );
    v.check(ji < jn, format!("J*_infl {ji:.4e} not below J*_noninfl {jn:.4e}"));
    let rel_i = (ji - 3.96e-2).abs() / 3.96e-2;
    v.check(
        rel_i <= 0.25,
        format!("J*_infl = {ji:.4e} vs 3.96e-2 (rel {rel_i:.3})"),
    );
    let rel_n = (jn - 5.47e-2).abs() / 5.47e-2;
    v.check(
        rel_n <= 0.25,
        format!("J*_noninfl = {jn:.4e} vs 5.47e-2 (rel {rel_n:.3})"),
    );
    masses.push(influencers.e_int);
    masses.push(non_influencers.e_int);
    let _ = write!(
        v.detail,
        "J*_infl {ji:.4e} ({} it), J*_noninfl {jn:.4e} ({} it), {wall:.1}s",
        influencers.iterations.unwrap(),
        non_influencers.iterations.unwrap()
    );
    v.finish(failed);
}

fn criterion_7(failed: &mut Vec<String>, masses: &[f64]) {
    let mut v = Verdict::new(7, "property suite");

    // mass conservation ledger collected from every run above
    let worst_mass = masses.iter().cloned().fold(0.0f64, f64::max);
    v.check(
        worst_mass <= 1e-13,
        format!("worst catalog-run mass defect {worst_mass:.2e} > 1e-13"),
    );

    // interface blend: series and direct branches agree where they meet,
    // delta(0) = 1/2, and delta stays inside (0, 1)
    let direct = |l: f64| 1.0 / l - 1.0 / l.exp_m1();
    let mut worst_delta = 0.0f64;
    for l in [1e-4, -1e-4] {
        worst_delta = worst_delta.max((delta_coefficient(l) - direct(l)).abs());
    }
    v.check(
        worst_delta <= 1e-10,
        format!("delta series/direct gap {worst_delta:.2e} > 1e-10"),
    );
    v.check(
        delta_coefficient(0.0) == 0.5,
        "delta(0) != 1/2".to_string(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let delta_inside = (0..10_000).all(|_| {
        let l = rng.gen_range(-700.0..700.0);
        let d = delta_coefficient(l);
        d > 0.0 && d < 1.0
    });
    v.check(delta_inside, "delta left (0, 1)".to_string());

    // cubic stencil moment identities at random query points
    let domain = Domain::line(-1.0, 1.0).expect("domain");
    let grid = build_grid(&domain, &[32]).expect("grid");
    let mut worst_moment = 0.0f64;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let (i0, w) = axis_stencil(&grid, 0, x);
        // position of the query in stencil coordinates
        let s = (x - domain.lo(0)) / grid.step(0) - 0.5 - i0 as f64;
        for m in 0..4u32 {
            let got: f64 = w
                .iter()
                .enumerate()
                .map(|(j, wj)| wj * (j as f64).powi(m as i32))
                .sum();
            worst_moment = worst_moment.max((got - s.powi(m as i32)).abs());
        }
    }
    v.check(
        worst_moment <= 1e-15 * 32.0, // moments up to s^3 ~ 27, so in ulps
        format!("stencil moment defect {worst_moment:.2e}"),
    );

    // cubic interpolation reproduces degree-3 polynomials
    let field = fpctl::fields::ScalarField::from_fn(Arc::new(grid), |p| {
        let v = p[0];
        0.7 + v * (-0.3 + v * (0.9 + 0.5 * v))
    });
    let mut worst_cubic = 0.0f64;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let want = 0.7 + x * (-0.3 + x * (0.9 + 0.5 * x));
        let got = interp_eval(&field, &[x, 0.0]).expect("interp");
        worst_cubic = worst_cubic.max((got - want).abs());
    }
    v.check(
        worst_cubic <= 1e-12,
        format!("cubic reproduction defect {worst_cubic:.2e} > 1e-12"),
    );

    // adjoint gradient against central finite differences
    let gc = gradcheck(&gradcheck_instance(), 1e-5, 3, 11).expect("gradcheck");
    v.check(
        gc.worst_rel <= 1e-3,
        format!("gradient check rel {:.2e} > 1e-3", gc.worst_rel),
    );

    // reflected characteristics land inside the domain
    let box2 = Domain::rectangle(-1.0, 1.0, 1.0, 40.0).expect("domain");
    let mut reflected_inside = true;
    for _ in 0..10_000 {
        let y = [rng.gen_range(-3.0..3.0), rng.gen_range(-40.0..80.0)];
        let margin = rng.gen_range(0.0..0.9);
        let r = reflect_point(&box2, margin, &y);
        let inside = (0..2).all(|k| r[k] >= box2.lo(k) && r[k] <= box2.hi(k));
        reflected_inside &= inside;
    }
    v.check(reflected_inside, "reflection left the domain".to_string());

    let _ = write!(
        v.detail,
        "mass {worst_mass:.1e}, delta gap {worst_delta:.1e}, moments {worst_moment:.1e}, cubic {worst_cubic:.1e}, gradient rel {:.1e}",
        gc.worst_rel
    );
    v.finish(failed);
}

#[test]
fn acceptance() {
    let mut failed: Vec<String> = Vec::new();
    let mut masses: Vec<f64> = Vec::new();
    criterion_1(&mut failed, &mut masses);
    criterion_2(&mut failed);
    criterion_3_and_4(&mut failed, &mut masses);
    criterion_5(&mut failed, &mut masses);
    criterion_6(&mut failed, &mut masses);
    criterion_7(&mut failed, &masses);
    assert!(failed.is_empty(), "failed: {}", failed.join(", "));
}
