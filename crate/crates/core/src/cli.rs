//! The `verify`, `sweep` and `rumin` commands: run a [`RunConfig`], write CSVs and a
//! JSON manifest, and map failures to exit codes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::complex_ops::{build_q, probe_defects, theta, EpsilonFamily};
use crate::config::{ModelChoice, RunConfig};
use crate::error::{Error, Result};
use crate::exterior::{CoframeLabel, C64};
use crate::heisenberg::{boundary_commutator_residual, InvariantModel, ModeGrid, Model};
use crate::linalg;
use crate::rumin::{symbol_order, RuminComplex};
use crate::spectral::{self, RatePolicy, Strategy, SweepOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Sweep,
    Rumin,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Rumin => "rumin",
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::NoConvergence { .. } => EXIT_INVARIANT,
        _ => EXIT_CONFIG,
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

pub const FLOAT_TOL: f64 = 1e-12;
const GAUGE_TOL: f64 = 1e-8;
const MIN_ORDER: f64 = 1.8;

#[derive(Clone, Debug)]
struct Check {
    name: String,
    value: f64,
    bound: f64,
    /// `value ≥ bound` instead of `value ≤ bound`.
    lower: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, lower: false }
    }

    fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, lower: true }
    }

    fn pass(&self) -> bool {
        if self.lower {
            self.value >= self.bound
        } else {
            self.value <= self.bound
        }
    }

    fn line(&self) -> String {
        let (rel, v) = if self.lower {
            ("≥", format!("{:.2}", self.value))
        } else {
            ("≤", format!("{:.1e}", self.value))
        };
        let bound = if self.lower { format!("{}", self.bound) } else { format!("{:e}", self.bound) };
        let tag = if self.pass() { "" } else { "  FAILED" };
        format!("{}: {v} {rel} {bound}{tag}", self.name)
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

struct Sector {
    label: String,
    model: Model,
    grid: Option<ModeGrid>,
}

fn sectors(cfg: &RunConfig) -> Result<Vec<Sector>> {
    match cfg.model {
        ModelChoice::Invariant => {
            let model = InvariantModel::new(cfg.m).model();
            Ok(vec![Sector { label: model.label(), model, grid: None }])
        }
        ModelChoice::Mode => cfg
            .modes()
            .into_iter()
            .map(|n| {
                let grid = ModeGrid::new(cfg.m, n as f64, cfg.grid)?;
                let model = grid.model();
                Ok(Sector { label: model.label(), model, grid: Some(grid) })
            })
            .collect(),
    }
}

fn schedule(cfg: &RunConfig) -> Result<Vec<f64>> {
    spectral::geometric_schedule(cfg.eps_start, cfg.eps_ratio, cfg.eps_count)
}

pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let mut w = Writer::new(out, cmd, cfg);
    let code = match cmd {
        Command::Verify => verify(cfg, &mut w)?,
        Command::Sweep => sweep(cfg, &mut w)?,
        Command::Rumin => rumin(cfg, &mut w)?,
    };
    w.finish()?;
    Ok(Outcome { code, report: w.report, files: w.files.iter().map(|(n, _)| n.clone()).collect() })
}

/// Collects outputs in memory and writes them (plus the manifest) in one place at the end.
struct Writer<'a> {
    dir: PathBuf,
    cmd: Command,
    cfg: &'a RunConfig,
    files: Vec<(String, String)>,
    timings: Vec<(String, u128)>,
    report: String,
    started: Instant,
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
    version: &'a str,
    files: Vec<FileEntry>,
    timings_ms: std::collections::BTreeMap<String, u128>,
}

impl<'a> Writer<'a> {
    fn new(dir: &Path, cmd: Command, cfg: &'a RunConfig) -> Self {
        Writer {
            dir: dir.to_path_buf(),
            cmd,
            cfg,
            files: Vec::new(),
            timings: Vec::new(),
            report: String::new(),
            started: Instant::now(),
        }
    }

    fn file(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body));
    }

    fn time(&mut self, stage: impl Into<String>, since: Instant) {
        self.timings.push((stage.into(), since.elapsed().as_millis()));
    }

    fn say(&mut self, line: impl AsRef<str>) {
        self.report.push_str(line.as_ref());
        self.report.push('\n');
    }

    fn finish(&mut self) -> Result<()> {
        self.timings.push(("total".into(), self.started.elapsed().as_millis()));
        fs::create_dir_all(&self.dir)?;
        let mut entries = Vec::new();
        for (name, body) in &self.files {
            let path = self.dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, body)?;
            entries.push(FileEntry { name: name.clone(), sha256: hex::encode(Sha256::digest(body.as_bytes())) });
        }
        let manifest = Manifest {
            command: self.cmd.name(),
            config: self.cfg,
            version: env!("CARGO_PKG_VERSION"),
            files: entries,
            timings_ms: self.timings.iter().cloned().collect(),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Invalid(e.to_string()))?;
        fs::write(self.dir.join("manifest.json"), json + "\n")?;
        Ok(())
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn exact_algebra_checks(family: &EpsilonFamily, eps: &[f64]) -> Result<Vec<Check>> {
    let model = &family.model;
    let alg = &model.alg;
    let top = model.top();
    let (mut d2, mut conj, mut herm, mut psd, mut q) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &e in eps {
        for k in 0..=top {
            let de = family.d_eps(k, e)?.to_dense();
            if k + 2 <= top {
                let de1 = family.d_eps(k + 1, e)?.to_dense();
                d2 = d2.max(max_abs(&(&de1 * &de)));
            }
            if k < top {
                let t0 = theta(model, k, e)?.to_dense();
                let t1 = theta(model, k + 1, e)?.to_dense();
                let t0inv = t0.clone().try_inverse().expect("Θ_ε is diagonal with positive entries");
                let lhs = t1 * family.d(k)?.to_dense() * t0inv;
                conj = conj.max(max_abs(&(lhs - &de)));
            }
            let lap = family.laplacian_dense(k, e)?;
            herm = herm.max(max_abs(&(&lap - lap.adjoint())));
            let (vals, _) = linalg::hermitian_eig(&lap);
            psd = psd.max(vals.first().map_or(0.0, |v| (-v).max(0.0)));
        }
    }
    for k in 0..=top {
        q = q.max(build_q(family, k)?.max_abs());
    }
    let mut anti = 0.0f64;
    for k in 0..top {
        for i in 0..2 * model.m() {
            let x = CoframeLabel::A(i);
            let v = CoframeLabel::Xi;
            let total = alg.interior_matrix(v, k + 1) * alg.wedge_matrix(x, k)
                + if k == 0 { DMatrix::zeros(1, 1) } else { alg.wedge_matrix(x, k - 1) * alg.interior_matrix(v, k) };
            anti = anti.max(max_abs(&total));
        }
    }
    Ok(vec![
        Check::at_most("d_eps_squared", d2, FLOAT_TOL),
        Check::at_most("theta_conjugation", conj, FLOAT_TOL),
        Check::at_most("anticommutator_e_i_v", anti, FLOAT_TOL),
        Check::at_most("laplacian_hermitian", herm, FLOAT_TOL),
        Check::at_most("laplacian_negative_part", psd, 1e-10),
        Check::at_most("q_operator", q, FLOAT_TOL),
    ])
}

fn invariant_checks(m: usize, eps: &[f64]) -> Result<Vec<Check>> {
    let inv = InvariantModel::new(m);
    let family = EpsilonFamily::new(&inv.model())?;
    let mut checks = exact_algebra_checks(&family, eps)?;
    let mut ce = 0.0f64;
    for k in 0..inv.alg.top() {
        ce = ce.max(max_abs(&(family.d(k)?.to_dense() - inv.d(k))));
    }
    checks.push(Check::at_most("frame_vs_chevalley_eilenberg", ce, FLOAT_TOL));
    let mut kernel_spread = 0usize;
    for k in 0..=inv.alg.top() {
        let dims: Vec<usize> = eps
            .iter()
            .map(|&e| Ok(linalg::nullity(&family.laplacian_dense(k, e)?, linalg::NullTol::INVARIANT)))
            .collect::<Result<_>>()?;
        let (lo, hi) = (dims.iter().min().unwrap(), dims.iter().max().unwrap());
        kernel_spread = kernel_spread.max(hi - lo);
    }
    checks.push(Check::at_most("kernel_dim_eps_dependence", kernel_spread as f64, 0.0));
    Ok(checks)
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> DVector<C64> {
    DVector::from_fn(n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn grid_checks(grid: &ModeGrid, eps: &[f64], seed: u64, count: usize) -> Result<Vec<Check>> {
    let m = grid.m();
    let n = grid.n;
    let label = format!("n={n}");
    let model = grid.model();
    let family = EpsilonFamily::new(&model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![Check::at_most(
        format!("{label} boundary_commutator"),
        boundary_commutator_residual(n as f64, grid.grid, grid.twist_shift),
        FLOAT_TOL,
    )];

    let mut skew = 0.0f64;
    for d in &model.derivs {
        skew = skew.max(d.add(&d.adjoint()).max_abs());
    }
    checks.push(Check::at_most(format!("{label} derivative_skew_adjoint"), skew, FLOAT_TOL));

    let mut adj = 0.0f64;
    let mut herm = 0.0f64;
    for k in 0..=model.top() {
        let c = family.component(k)?;
        for op in [&c.d21, &c.d10, &c.d01] {
            let a = random_field(&mut rng, op.matrix.ncols());
            let b = random_field(&mut rng, op.matrix.nrows());
            let lhs = b.dotc(&op.matrix.mul_dvec(&a));
            let rhs = op.matrix.adjoint().mul_dvec(&b).dotc(&a);
            adj = adj.max((lhs - rhs).norm() / (a.norm() * b.norm()).max(1.0));
        }
        let lap = family.laplacian(k, *eps.last().unwrap())?;
        let scale = lap.max_abs().max(1.0);
        herm = herm.max(lap.sub(&lap.adjoint()).max_abs() / scale);
    }
    checks.push(Check::at_most(format!("{label} adjoint_pairing"), adj, FLOAT_TOL));
    checks.push(Check::at_most(format!("{label} laplacian_hermitian"), herm, FLOAT_TOL));
    let mut q = 0.0f64;
    for k in 0..=model.top() {
        q = q.max(build_q(&family, k)?.max_abs());
    }
    checks.push(Check::at_most(format!("{label} q_operator"), q, FLOAT_TOL));

    // the same sector in another boundary gauge; only the low spectrum is compared,
    // the top of a spectral grid aliases differently in each gauge
    if grid.npts() * model.alg.dim(1) <= spectral::eigen::DENSE_LIMIT {
        let shifted = ModeGrid::with_twist_shift(m, n as f64, grid.grid, grid.grid / 2)?;
        let other = EpsilonFamily::new(&shifted.model())?;
        let mut gauge = 0.0f64;
        for k in 0..=model.top() {
            let (a, _) = linalg::hermitian_eig(&family.laplacian_dense(k, 1.0)?);
            let (b, _) = linalg::hermitian_eig(&other.laplacian_dense(k, 1.0)?);
            for (x, y) in a.iter().zip(&b).take(count) {
                gauge = gauge.max((x - y).abs() / x.abs().max(1.0));
            }
        }
        checks.push(Check::at_most(format!("{label} gauge_invariance"), gauge, GAUGE_TOL));
    }

    // refinement on smooth probes against the doubled grid
    let e = eps[eps.len() / 2];
    let coarse = probe_defects(grid, e)?;
    if m == 1 {
        let fine = probe_defects(&ModeGrid::new(m, n as f64, 2 * grid.grid)?, e)?;
        for (name, c, f) in [("d_eps_squared", coarse.d_eps_squared, fine.d_eps_squared), ("bracket_defect", coarse.bracket, fine.bracket)] {
            checks.push(Check::at_most(format!("{label} {name} N={}", grid.grid), c, f64::INFINITY));
            checks.push(Check::at_most(format!("{label} {name} N={}", 2 * grid.grid), f, f64::INFINITY));
            if c <= FLOAT_TOL {
                checks.push(Check::at_most(format!("{label} {name} (exact)"), c.max(f), FLOAT_TOL));
            } else {
                checks.push(Check::at_least(format!("{label} {name} observed_order"), (c / f).log2(), MIN_ORDER));
            }
        }
    } else {
        checks.push(Check::at_most(format!("{label} d_eps_squared N={}", grid.grid), coarse.d_eps_squared, f64::INFINITY));
        checks.push(Check::at_most(format!("{label} bracket_defect N={}", grid.grid), coarse.bracket, f64::INFINITY));
    }
    Ok(checks)
}

fn verify(cfg: &RunConfig, w: &mut Writer) -> Result<i32> {
    let eps = schedule(cfg)?;
    let t = Instant::now();
    let mut checks = invariant_checks(cfg.m, &eps)?;
    w.time("invariant", t);
    if cfg.model == ModelChoice::Mode {
        for n in cfg.modes() {
            let t = Instant::now();
            let grid = ModeGrid::new(cfg.m, n as f64, cfg.grid)?;
            checks.extend(grid_checks(&grid, &eps, cfg.seed, cfg.count)?);
            w.time(format!("n={n}"), t);
        }
    }
    let mut csv = String::from("check,value,bound,relation,pass\n");
    for c in &checks {
        w.say(c.line());
        let _ = writeln!(csv, "{},{},{},{},{}", c.name, fmt_f(c.value), fmt_f(c.bound), if c.lower { ">=" } else { "<=" }, c.pass());
    }
    w.file("verify.csv", csv);
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass()).collect();
    if failed.is_empty() {
        w.say(format!("all {} checks passed", checks.len()));
        Ok(EXIT_OK)
    } else {
        for c in &failed {
            w.say(format!("failed: {}", c.name));
        }
        Ok(EXIT_INVARIANT)
    }
}

fn sweep(cfg: &RunConfig, w: &mut Writer) -> Result<i32> {
    let eps = schedule(cfg)?;
    let tol = cfg.null_tol();
    let opts = SweepOptions {
        count: cfg.count,
        strategy: Strategy::Auto { seed: cfg.seed },
        tol_tracking: cfg.tol_tracking,
        ..SweepOptions::default()
    };
    let policy = RatePolicy { band: cfg.class_band, ..RatePolicy::default() };
    let secs = sectors(cfg)?;
    let multi = secs.len() > 1;
    let mut warnings = 0usize;
    let mut mismatches = 0usize;
    for sec in &secs {
        let prefix = if multi { format!("{}/", sec.label.replace('=', "")) } else { String::new() };
        let family = EpsilonFamily::new(&sec.model)?;
        let rc = RuminComplex::new(&family)?;
        let mut ev = String::from("eps,degree,track_id,lambda,residual,converged\n");
        let mut tr = String::from("track_id,fitted_exponent,class_l,fit_residual,final_rumin_angle,final_beta_norm\n");
        let mut ss = String::from("degree,l,scale_count,direct_dim,match\n");
        let mut diag = String::from("track_id,eps,off_rumin_norm,small_part_norm,d21_beta_scaled,alpha_h1c\n");
        let mut next_id = 0;
        for k in cfg.degrees() {
            let t = Instant::now();
            let rec = spectral::sweep(&family, k, &eps, &opts, next_id)?;
            next_id += rec.tracks.len();
            let fits = rec.fit_rates(&policy);
            let reports = spectral::limit_vs_rumin(&rec, &fits, &rc, tol)?;
            let (rows, label) = spectral::spectral_sequence_report(&rec, &fits, &rc, tol, &[1, 2, 3])?;
            w.time(format!("{} k={k}", sec.label), t);

            for (j, p) in rec.points.iter().enumerate() {
                for (i, pair) in p.pairs.iter().enumerate() {
                    let id = rec.tracks.iter().find(|t| t.members[j] == Some(i)).map(|t| t.id.to_string()).unwrap_or_default();
                    let conv = p.converged && pair.accepted();
                    warnings += usize::from(!conv);
                    let _ = writeln!(ev, "{},{k},{id},{},{},{conv}", fmt_f(p.eps), fmt_f(pair.lambda), fmt_f(pair.residual));
                }
            }
            for r in &reports {
                let _ = writeln!(
                    tr,
                    "{},{},{},{},{},{}",
                    r.track_id,
                    fmt_opt(r.fit.exponent),
                    r.fit.class.label(),
                    fmt_opt(r.fit.residual),
                    fmt_opt(r.final_angle.map(f64::to_degrees)),
                    fmt_opt(r.final_small_part()),
                );
                for j in 0..r.eps.len() {
                    let _ = writeln!(
                        diag,
                        "{},{},{},{},{},{}",
                        r.track_id,
                        fmt_f(r.eps[j]),
                        fmt_f(r.off_rumin[j]),
                        fmt_f(r.small_part[j]),
                        fmt_f(r.d21_beta_scaled[j]),
                        fmt_f(r.alpha_h1c[j])
                    );
                }
            }
            for row in &rows {
                let count = row.scale_count.map_or("indeterminate".to_string(), |c| c.to_string());
                let _ = writeln!(ss, "{k},{},{count},{},{}", row.l, row.direct_dim, row.matched);
                mismatches += usize::from(!row.matched);
                w.say(format!(
                    "{} k={k} l={}: scale count {count}, direct {} (window {}) {}",
                    sec.label,
                    row.l,
                    row.direct_dim,
                    row.window,
                    if row.matched { "match" } else { "MISMATCH" }
                ));
            }
            if let Some(l) = label {
                w.say(format!(
                    "{} k={k}: joint kernel dim {} reproduces the class>=1 count: {}, class>=2 count: {}",
                    sec.label, l.harmonic_dim, l.as_l1, l.as_l2
                ));
            }
        }
        w.file(format!("{prefix}eigenvalues.csv"), ev);
        w.file(format!("{prefix}tracks.csv"), tr);
        w.file(format!("{prefix}ss_report.csv"), ss);
        w.file(format!("{prefix}track_diagnostics.csv"), diag);
    }
    if warnings > 0 {
        w.say(format!("warning: {warnings} eigenpairs not converged (flagged converged=false)"));
    }
    w.say(format!("{mismatches} spectral-sequence mismatches"));
    Ok(EXIT_OK)
}

fn symbol_kappas(grid: &ModeGrid) -> Vec<f64> {
    if grid.n == 0 {
        vec![1.0, 2.0, 3.0]
    } else {
        let n = grid.grid as f64;
        vec![n / 8.0, 3.0 * n / 16.0, n / 4.0]
    }
}

fn rumin(cfg: &RunConfig, w: &mut Writer) -> Result<i32> {
    let tol = cfg.null_tol();
    let mut csv = String::from("degree,fiber_dim,sector,harmonic_dim,dxi_exponent,dr_exponent\n");
    let m = cfg.m;
    for sec in sectors(cfg)? {
        let t = Instant::now();
        let family = EpsilonFamily::new(&sec.model)?;
        let rc = RuminComplex::new(&family)?;
        let fibers = rc.fiber_dims();
        let mut harm = Vec::new();
        for k in 0..=sec.model.top() {
            let h = rc.harmonic_space(k, tol)?.ncols();
            harm.push(h);
            let order = match &sec.grid {
                Some(g) => symbol_order(&rc, g, k, &symbol_kappas(g))?.map(|(p, _)| p),
                None => None,
            };
            let (dxi, dr) = if k == m { (None, order) } else { (order, None) };
            let _ = writeln!(csv, "{k},{},{},{h},{},{}", fibers[k], sec.label, fmt_opt(dxi), fmt_opt(dr));
        }
        w.time(sec.label.clone(), t);
        w.say(format!("{}: fiber dims {:?}, harmonic dims {:?}", sec.label, fibers, harm));
    }
    w.file("rumin.csv", csv);
    Ok(EXIT_OK)
}
