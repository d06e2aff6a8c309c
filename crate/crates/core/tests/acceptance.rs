//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use heisenberg_adiabatic::complex_ops::{probe_defects, theta, EpsilonFamily};
use heisenberg_adiabatic::exterior::{interior, wedge};
use heisenberg_adiabatic::heisenberg::{InvariantModel, ModeGrid};
use heisenberg_adiabatic::linalg::{self, NullTol};
use heisenberg_adiabatic::rumin::{symbol_order, RuminComplex};
use heisenberg_adiabatic::spectral::{
    geometric_schedule, limit_vs_rumin, spectral_sequence_report, sweep, RateClass, RateFit, RatePolicy, SsRow,
    SweepOptions, SweepRecord, TrackReport,
};
use heisenberg_adiabatic::{CoframeLabel, ExteriorAlgebra, PointForm, C64};
use nalgebra::DMatrix;

type Verdict = Result<String, String>;

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, budget: Duration) -> Result<(), String> {
    ensure(t.elapsed() < budget, || format!("runtime {:?} over budget {budget:?}", t.elapsed()))
}

fn schedule() -> Vec<f64> {
    geometric_schedule(1.0, 0.5, 9).unwrap()
}

fn criterion_1() -> Verdict {
    let t = Instant::now();
    let mut worst = [0.0f64; 5];
    for m in [1, 2] {
        let inv = InvariantModel::new(m);
        let model = inv.model();
        let fam = EpsilonFamily::new(&model).map_err(|e| e.to_string())?;
        let top = model.top();
        for eps in schedule() {
            for k in 0..=top {
                let de = fam.d_eps(k, eps).unwrap().to_dense();
                if k + 2 <= top {
                    let de1 = fam.d_eps(k + 1, eps).unwrap().to_dense();
                    worst[0] = worst[0].max(max_abs(&(de1 * &de)));
                }
                if k < top {
                    // Θ_ε d Θ_ε^{-1} against the ε-weighted split, with d taken from the
                    // structure constants rather than the assembled frame operator
                    let t1 = theta(&model, k + 1, eps).unwrap().to_dense();
                    let t0 = theta(&model, k, eps).unwrap().to_dense().try_inverse().unwrap();
                    worst[1] = worst[1].max(max_abs(&(t1 * inv.d(k) * t0 - &de)));
                }
                let lap = fam.laplacian_dense(k, eps).unwrap();
                worst[3] = worst[3].max(max_abs(&(&lap - lap.adjoint())));
            }
        }
        let alg = &inv.alg;
        for k in 0..top {
            for i in 0..2 * m {
                let x = CoframeLabel::A(i);
                let mut acc = alg.interior_matrix(CoframeLabel::Xi, k + 1) * alg.wedge_matrix(x, k);
                if k > 0 {
                    acc += alg.wedge_matrix(x, k - 1) * alg.interior_matrix(CoframeLabel::Xi, k);
                }
                worst[2] = worst[2].max(max_abs(&acc));
            }
        }
        for k in 0..top {
            worst[4] = worst[4].max(max_abs(&(fam.d(k).unwrap().to_dense() - inv.d(k))));
        }
    }
    // the pointwise identity on ω = e² ∧ ξ for m = 1
    let alg = ExteriorAlgebra::new(1);
    let omega = PointForm::monomial(&alg, &[CoframeLabel::A(1), CoframeLabel::Xi]);
    let e1 = PointForm::label(&alg, CoframeLabel::A(0));
    let a = wedge(&alg, &e1, &interior(&alg, CoframeLabel::Xi, &omega)).unwrap();
    let b = interior(&alg, CoframeLabel::Xi, &wedge(&alg, &e1, &omega).unwrap());
    worst[2] = worst[2].max(a.add(&b).norm_sqr().sqrt());

    let names = ["d_eps^2", "theta conjugation", "anticommutator", "hermiticity", "frame vs structure constants"];
    for (n, w) in names.iter().zip(worst) {
        ensure(w <= 1e-12, || format!("{n} residual {w:e} > 1e-12"))?;
    }
    within(t, Duration::from_secs(1))?;
    Ok(format!("max residual {:.1e}, {:?}", worst.iter().fold(0.0f64, |a, b| a.max(*b)), t.elapsed()))
}

fn criterion_2() -> Verdict {
    let t = Instant::now();
    let (mut d2, mut br) = (Vec::new(), Vec::new());
    for n in [8, 16, 32] {
        let grid = ModeGrid::new(1, 1.0, n).unwrap();
        d2.push(probe_defects(&grid, 0.5).unwrap().d_eps_squared);
        // independent bracket oracle on a probe outside the library's probe family
        let model = grid.model();
        let g = grid.probe(&[1.5], &[-1], 0.1, 0.4);
        let ab = model.derivs[0].mul_vec(&model.derivs[1].mul_vec(&g));
        let ba = model.derivs[1].mul_vec(&model.derivs[0].mul_vec(&g));
        let num: f64 = ab.iter().zip(&ba).zip(&g).map(|((x, y), z)| (x - y - model.dv * z).norm_sqr()).sum();
        let den: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        br.push((num / den).sqrt());
    }
    let od = linalg::observed_orders(&d2);
    let ob = linalg::observed_orders(&br);
    ensure(od.iter().chain(&ob).all(|o| *o >= 1.8), || format!("orders d^2 {od:?}, bracket {ob:?}"))?;
    within(t, Duration::from_secs(60))?;
    Ok(format!("orders d^2 {:.2?}, bracket {:.2?}, {:?}", od, ob, t.elapsed()))
}

fn criterion_3() -> Verdict {
    let t = Instant::now();
    let expect = vec![1, 2, 2, 1];
    let mut out = Vec::new();
    let grid = ModeGrid::new(1, 0.0, 8).unwrap();
    for (name, model, tol) in [
        ("invariant", InvariantModel::new(1).model(), NullTol::INVARIANT),
        ("n=0", grid.model(), NullTol::GRID),
    ] {
        let fam = EpsilonFamily::new(&model).unwrap();
        let rc = RuminComplex::new(&fam).unwrap();
        let lap: Vec<usize> = (0..4).map(|k| linalg::nullity(&fam.laplacian_dense(k, 1.0).unwrap(), tol)).collect();
        let harm: Vec<usize> = (0..4).map(|k| rc.harmonic_space(k, tol).unwrap().ncols()).collect();
        ensure(lap == expect && harm == expect, || format!("{name}: ker Δ {lap:?}, Rumin harmonic {harm:?}"))?;
        out.push(format!("{name} {lap:?}"));
    }
    within(t, Duration::from_secs(60))?;
    Ok(format!("{} = Rumin harmonic dims, {:?}", out.join(", "), t.elapsed()))
}

fn criterion_4() -> Verdict {
    let t = Instant::now();
    let mut fits = Vec::new();
    for (m, n, size, kappas, dims) in [
        (1, 1.0, 32, vec![4.0, 6.0, 8.0], vec![1, 2, 2, 1]),
        (2, 0.0, 8, vec![1.0, 2.0, 3.0], vec![1, 4, 5, 5, 4, 1]),
    ] {
        let grid = ModeGrid::new(m, n, size).unwrap();
        let fam = EpsilonFamily::new(&grid.model()).unwrap();
        let rc = RuminComplex::new(&fam).unwrap();
        ensure(rc.fiber_dims() == dims, || format!("m={m} fiber dims {:?}", rc.fiber_dims()))?;
        for k in 0..2 * m + 1 {
            let (p, _) = symbol_order(&rc, &grid, k, &kappas).unwrap().unwrap();
            let band = if k == m { 1.8..=2.2 } else { 0.8..=1.2 };
            ensure(band.contains(&p), || format!("m={m} k={k} order {p:.3} outside {band:?}"))?;
            fits.push(format!("{p:.2}"));
        }
    }
    within(t, Duration::from_secs(120))?;
    Ok(format!("fiber dims ok, orders [{}], {:?}", fits.join(" "), t.elapsed()))
}

struct DegreeSweep {
    record: SweepRecord,
    fits: Vec<RateFit>,
    reports: Vec<TrackReport>,
    rows: Vec<SsRow>,
}

struct Sweeps {
    grid: Vec<DegreeSweep>,
    invariant: Vec<(usize, Vec<DegreeSweep>)>,
    elapsed: Duration,
}

fn run_sweeps(family: &EpsilonFamily, tol: NullTol) -> Vec<DegreeSweep> {
    let rc = RuminComplex::new(family).unwrap();
    let opts = SweepOptions { count: 8, ..SweepOptions::default() };
    let mut out = Vec::new();
    let mut next = 0;
    for k in 0..=family.model.top() {
        let record = sweep(family, k, &schedule(), &opts, next).unwrap();
        next += record.tracks.len();
        let fits = record.fit_rates(&RatePolicy::default());
        let reports = limit_vs_rumin(&record, &fits, &rc, tol).unwrap();
        let (rows, _) = spectral_sequence_report(&record, &fits, &rc, tol, &[1, 2, 3]).unwrap();
        out.push(DegreeSweep { record, fits, reports, rows });
    }
    out
}

fn shared_sweeps() -> Sweeps {
    let t = Instant::now();
    let grid = ModeGrid::new(1, 1.0, 16).unwrap();
    let fam = EpsilonFamily::new(&grid.model()).unwrap();
    let g = run_sweeps(&fam, NullTol::GRID);
    let invariant = [1, 2]
        .into_iter()
        .map(|m| {
            let fam = EpsilonFamily::new(&InvariantModel::new(m).model()).unwrap();
            (m, run_sweeps(&fam, NullTol::INVARIANT))
        })
        .collect();
    Sweeps { grid: g, invariant, elapsed: t.elapsed() }
}

/// Classified near-harmonic tracks alive at the final ε.
fn final_tracks(d: &DegreeSweep) -> Vec<(&TrackReport, RateClass)> {
    d.record.final_window().into_iter().filter(|&ti| d.fits[ti].class.is_near_harmonic()).map(|ti| (&d.reports[ti], d.fits[ti].class)).collect()
}

fn criterion_5(s: &Sweeps) -> Verdict {
    let (mut n, mut worst_small, mut worst_off, mut worst_angle) = (0, 0.0f64, 0.0f64, 0.0f64);
    for d in &s.grid {
        for (r, _) in final_tracks(d) {
            let id = r.track_id;
            ensure(r.small_part_monotone(), || format!("track {id} small component not decreasing: {:?}", r.small_part))?;
            let small = r.final_small_part().unwrap();
            let off = r.final_off_rumin().unwrap();
            let angle = r.final_angle.ok_or_else(|| format!("track {id} has no limit eigenspace"))?.to_degrees();
            ensure(small <= 0.05 && off <= 0.05 && angle <= 5.0, || format!("track {id}: beta {small:.3e} off {off:.3e} angle {angle:.3}°"))?;
            worst_small = worst_small.max(small);
            worst_off = worst_off.max(off);
            worst_angle = worst_angle.max(angle);
            n += 1;
        }
    }
    ensure(n > 0, || "no classified tracks".into())?;
    ensure(s.elapsed < Duration::from_secs(600), || format!("sweep runtime {:?}", s.elapsed))?;
    Ok(format!(
        "{n} tracks, max final beta {worst_small:.2e}, off-R {worst_off:.2e}, angle {worst_angle:.2}°, sweeps {:?}",
        s.elapsed
    ))
}

fn check_sector(name: &str, m: usize, degrees: &[DegreeSweep]) -> Result<usize, String> {
    let mut rows = 0;
    for (k, d) in degrees.iter().enumerate() {
        for ti in d.record.final_window() {
            let fit = d.fits[ti];
            let id = d.record.tracks[ti].id;
            match fit.class {
                RateClass::Kernel | RateClass::Divergent => {}
                RateClass::Class(l) => {
                    let p = fit.exponent.unwrap();
                    let even = 2.0 * (l as f64 - 1.0);
                    ensure(l <= 3 && (p - even).abs() <= 0.3, || format!("{name} k={k} track {id}: exponent {p:.3}"))?;
                }
                RateClass::Unclassified => return Err(format!("{name} k={k} track {id} unclassified in the window")),
            }
        }
        for row in &d.rows {
            ensure(row.matched, || format!("{name} {row:?}"))?;
            rows += 1;
        }
        if k == m || k == m + 1 {
            let e3 = d.rows.iter().find(|r| r.l == 3).unwrap();
            let slow = d.record.final_window().iter().any(|&ti| d.fits[ti].class.at_least(3));
            ensure(slow == (e3.direct_dim > 0), || format!("{name} k={k}: class>=3 present {slow}, direct E3 {}", e3.direct_dim))?;
        }
    }
    Ok(rows)
}

fn criterion_6(s: &Sweeps) -> Verdict {
    let mut rows = check_sector("n=1 N=16", 1, &s.grid)?;
    for (m, degrees) in &s.invariant {
        rows += check_sector(&format!("invariant m={m}"), *m, degrees)?;
    }
    Ok(format!("{rows} (k, l) rows matched"))
}

fn criterion_7(s: &Sweeps) -> Verdict {
    let mut n = 0;
    for d in &s.grid {
        for (r, _) in final_tracks(d) {
            let id = r.track_id;
            ensure(r.d21_beta_bounded(10.0), || format!("track {id}: eps^-1 |d21 beta| {:?}", r.d21_beta_scaled))?;
            ensure(r.alpha_h1c_bounded(10.0), || format!("track {id}: alpha H1c {:?}", r.alpha_h1c))?;
            n += 1;
        }
    }
    Ok(format!("{n} tracks bounded (max <= 10x median)"))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let st = Command::new(env!("CARGO_BIN_EXE_adiabatic")).args(args).output().map_err(|e| e.to_string())?;
    let code = st.status.code().unwrap_or(-1);
    // verify may legitimately report invariant failures (1); determinism is about the bytes
    ensure(code == 0 || code == 1, || format!("{args:?} exited {code}: {}", String::from_utf8_lossy(&st.stderr)))
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = walk(dir)
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn criterion_8() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfgs = [
        ("verify", "model = mode\nn = 1\nN = 8\neps_count = 4\n"),
        ("sweep", "model = mode\nn = 0..1\nN = 8\ndegree = 1\neps_count = 5\nK = 6\n"),
        ("sweep", "model = invariant\nm = 2\n"),
        ("rumin", "model = mode\nn = 0..1\nN = 8\n"),
    ];
    let mut files = 0;
    for (i, (cmd, text)) in cfgs.iter().enumerate() {
        let cfg = tmp.path().join(format!("c{i}.cfg"));
        std::fs::write(&cfg, text).unwrap();
        let mut runs = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("run{i}_{rep}"));
            run_cli(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"])?;
            runs.push(csv_bytes(&out));
        }
        ensure(!runs[0].is_empty(), || format!("{cmd} wrote no CSV"))?;
        ensure(runs[0] == runs[1], || format!("{cmd} {i}: CSVs differ between runs"))?;
        files += runs[0].len();
    }
    Ok(format!("{files} CSVs byte-identical across reruns"))
}

fn report(n: usize, what: &str, v: &Verdict) -> bool {
    match v {
        Ok(msg) => println!("criterion {n} ({what}): PASS  {msg}"),
        Err(msg) => println!("criterion {n} ({what}): FAIL  {msg}"),
    }
    v.is_ok()
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    })
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut ok = true;
    ok &= report(1, "exact algebra", &guarded(criterion_1));
    ok &= report(2, "refinement", &guarded(criterion_2));
    ok &= report(3, "Betti numbers", &guarded(criterion_3));
    ok &= report(4, "Rumin structure", &guarded(criterion_4));
    let sweeps = std::panic::catch_unwind(shared_sweeps);
    match &sweeps {
        Ok(s) => {
            ok &= report(5, "convergence to Rumin", &guarded(|| criterion_5(s)));
            ok &= report(6, "spectral sequence", &guarded(|| criterion_6(s)));
            ok &= report(7, "diagnostics bounded", &guarded(|| criterion_7(s)));
        }
        Err(_) => {
            for (n, w) in [(5, "convergence to Rumin"), (6, "spectral sequence"), (7, "diagnostics bounded")] {
                ok &= report(n, w, &Err("sweep panicked".into()));
            }
        }
    }
    ok &= report(8, "determinism", &guarded(criterion_8));
    if !ok {
        std::process::exit(1);
    }
}
