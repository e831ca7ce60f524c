use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use jcwigner::oracle::{oracle_evolve, oracle_wigner_auto, DEFAULT_HEADROOM};
use jcwigner::{
    cat_signature, choose_truncation, evolve, grid_integral, inversion_series, make_field_at, negativity_volume,
    wigner_grid, Complex64, FieldSpec, FieldState, ModelParams, Truncation, WignerGrid,
};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, Output, Scenario};
use crate::render::render_heatmap;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model error: {0}")]
    Model(#[from] jcwigner::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        1
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationInfo {
    pub nmax: usize,
    pub eps_tail: f64,
    pub initial_trace: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub gt: f64,
    pub quantity: &'static str,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: Scenario,
    pub truncation: TruncationInfo,
    pub files: Vec<FileEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
}

impl Manifest {
    pub fn verification_failed(&self) -> bool {
        self.verification.as_ref().is_some_and(|v| !v.passed)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Node {
    pub re: f64,
    pub im: f64,
    pub w: f64,
}

impl Node {
    fn new(a: Complex64, w: f64) -> Self {
        Self { re: a.re, im: a.im, w }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SignatureMetrics {
    pub peak_plus: Node,
    pub peak_minus: Node,
    pub fringe_extremum: Node,
    pub fringe_sign: i8,
}

#[derive(Clone, Debug, Serialize)]
pub struct SnapshotMetrics {
    pub gt: f64,
    pub inversion: f64,
    pub trace: f64,
    pub trace_drift: f64,
    pub purity: f64,
    pub grid_integral: f64,
    pub negativity_volume: f64,
    pub max_abs_w: f64,
    pub w_max: Node,
    pub w_min: Node,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cat_signature: Option<SignatureMetrics>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metrics {
    pub scenario: String,
    pub nmax: usize,
    pub snapshots: Vec<SnapshotMetrics>,
}

/// One evaluated snapshot.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub gt: f64,
    pub rho_f: jcwigner::DMatrix<Complex64>,
    pub grid: WignerGrid,
    pub metrics: SnapshotMetrics,
}

/// `{:.16e}`: 17 significant digits, round-trip exact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// File-name label of a snapshot time.
pub fn time_label(gt: f64) -> String {
    format!("{gt}")
}

/// Initial field on the scenario's cutoff.
pub fn initial_field(s: &Scenario) -> Result<FieldState, RunError> {
    let spec = s.field_spec();
    let trunc = match s.nmax {
        Some(n) => Truncation::with_tail(n, s.eps_tail),
        None => choose_truncation(&spec, s.eps_tail)?,
    };
    Ok(make_field_at(&spec, trunc)?)
}

fn cat_center(spec: &FieldSpec) -> Option<Complex64> {
    match *spec {
        FieldSpec::Coherent { alpha } | FieldSpec::Cat { alpha, .. } if alpha.norm() > 0.0 => Some(alpha),
        _ => None,
    }
}

/// Reduced field, Wigner grid and metrics at `gt`.
pub fn snapshot(s: &Scenario, rho0: &FieldState, gt: f64) -> Result<Snapshot, RunError> {
    let params = ModelParams::new(s.detuning, gt)?;
    let evolved = evolve(rho0, &s.atom_prep(), &params)?;
    let grid = wigner_grid(&evolved.rho_f, &s.grid_spec())?;
    let (amax, wmax) = grid.argmax();
    let (amin, wmin) = grid
        .iter()
        .fold((Complex64::new(0.0, 0.0), f64::INFINITY), |b, (a, w)| if w < b.1 { (a, w) } else { b });
    let signature = match cat_center(&s.field_spec()) {
        Some(alpha0) => cat_signature(&grid, alpha0).ok().map(|sig| SignatureMetrics {
            peak_plus: Node::new(sig.peak_plus.location, sig.peak_plus.value),
            peak_minus: Node::new(sig.peak_minus.location, sig.peak_minus.value),
            fringe_extremum: Node::new(sig.fringe_extremum.location, sig.fringe_extremum.value),
            fringe_sign: sig.fringe_sign,
        }),
        None => None,
    };
    let trace = evolved.trace();
    let metrics = SnapshotMetrics {
        gt,
        inversion: evolved.inversion(),
        trace,
        trace_drift: (trace - rho0.trace()).abs(),
        purity: evolved.purity(),
        grid_integral: grid_integral(&grid),
        negativity_volume: negativity_volume(&grid),
        max_abs_w: grid.max_abs(),
        w_max: Node::new(amax, wmax),
        w_min: Node::new(amin, wmin),
        cat_signature: signature,
    };
    Ok(Snapshot {
        gt,
        rho_f: evolved.rho_f,
        grid,
        metrics,
    })
}

fn check(gt: f64, quantity: &'static str, diff: f64, tolerance: f64) -> Check {
    Check {
        gt,
        quantity,
        max_abs_diff: diff,
        tolerance,
        // NaN fails, and a zero tolerance can never be met
        passed: diff < tolerance,
    }
}

/// Cross-checks each snapshot against the brute-force oracles.
pub fn verify(s: &Scenario, rho0: &FieldState, snapshots: &[Snapshot]) -> Result<Verification, RunError> {
    let atom = s.atom_prep();
    let per_snapshot: Vec<Vec<Check>> = snapshots
        .par_iter()
        .map(|snap| -> Result<Vec<Check>, RunError> {
            let params = ModelParams::new(s.detuning, snap.gt)?;
            let exact = oracle_evolve(rho0, &atom, &params, DEFAULT_HEADROOM)?;
            let rho_diff = (&snap.rho_f - &exact.rho_f).iter().map(|v| v.norm()).fold(0.0, f64::max);
            let inv_diff = (snap.metrics.inversion - exact.inversion).abs();
            let mut w_diff: f64 = 0.0;
            let nodes = [
                s.grid_spec().center(),
                Complex64::new(snap.metrics.w_max.re, snap.metrics.w_max.im),
                Complex64::new(snap.metrics.w_min.re, snap.metrics.w_min.im),
            ];
            for a in nodes {
                let series = jcwigner::wigner_point(&snap.rho_f, a)?;
                let parity = oracle_wigner_auto(&snap.rho_f, a)?;
                w_diff = w_diff.max((series - parity).abs());
            }
            Ok(vec![
                check(snap.gt, "rho_f", rho_diff, s.verify_tolerance),
                check(snap.gt, "inversion", inv_diff, s.verify_tolerance),
                check(snap.gt, "wigner", w_diff, s.verify_wigner_tolerance),
            ])
        })
        .collect::<Result<_, _>>()?;
    let checks: Vec<Check> = per_snapshot.into_iter().flatten().collect();
    Ok(Verification {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<FileEntry>) -> Result<(), RunError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(io_err(&path))?;
    files.push(file_entry(name, bytes));
    Ok(())
}

fn file_entry(name: &str, bytes: &[u8]) -> FileEntry {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    FileEntry {
        name: name.to_string(),
        bytes: bytes.len() as u64,
        sha256: hex,
    }
}

pub fn inversion_csv(series: &[(f64, f64)]) -> String {
    let mut out = String::with_capacity(48 * (series.len() + 1));
    out.push_str("gt,n_ab\n");
    for &(t, n) in series {
        let _ = writeln!(out, "{},{}", fmt_f64(t), fmt_f64(n));
    }
    out
}

pub fn wigner_csv(grid: &WignerGrid) -> String {
    let mut out = String::with_capacity(72 * (grid.values.len() + 1));
    out.push_str("re_alpha,im_alpha,w\n");
    for (a, w) in grid.iter() {
        let _ = writeln!(out, "{},{},{}", fmt_f64(a.re), fmt_f64(a.im), fmt_f64(w));
    }
    out
}

/// Runs a resolved scenario and writes every requested artifact plus
/// `manifest.json` into `out_dir`.
pub fn run_scenario(s: &Scenario, out_dir: &Path) -> Result<Manifest, RunError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let rho0 = initial_field(s)?;
    let mut files = Vec::new();

    if s.wants(Output::Inversion) {
        let series = inversion_series(&rho0, &s.atom_prep(), s.detuning, &s.time_samples.samples())?;
        write_file(out_dir, "inversion.csv", inversion_csv(&series).as_bytes(), &mut files)?;
    }

    let snapshots: Vec<Snapshot> =
        s.snapshot_times.par_iter().map(|&gt| snapshot(s, &rho0, gt)).collect::<Result<_, _>>()?;

    for snap in &snapshots {
        let stem = format!("wigner_gt{}", time_label(snap.gt));
        if s.wants(Output::Wigner) {
            write_file(out_dir, &format!("{stem}.csv"), wigner_csv(&snap.grid).as_bytes(), &mut files)?;
        }
        if s.wants(Output::Heatmap) {
            let (png, axes) = render_heatmap(&snap.grid);
            write_file(out_dir, &format!("{stem}.png"), &png, &mut files)?;
            write_file(out_dir, &format!("{stem}.axes.txt"), axes.as_bytes(), &mut files)?;
        }
    }

    if s.wants(Output::Metrics) {
        let metrics = Metrics {
            scenario: s.name.clone(),
            nmax: rho0.nmax(),
            snapshots: snapshots.iter().map(|x| x.metrics.clone()).collect(),
        };
        let mut text = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
        text.push('\n');
        write_file(out_dir, "metrics.json", text.as_bytes(), &mut files)?;
    }

    let verification = if s.verify {
        Some(verify(s, &rho0, &snapshots)?)
    } else {
        None
    };

    let manifest = Manifest {
        tool: "jcwigner",
        version: env!("CARGO_PKG_VERSION"),
        scenario: s.clone(),
        truncation: TruncationInfo {
            nmax: rho0.nmax(),
            eps_tail: rho0.eps_tail(),
            initial_trace: rho0.trace(),
        },
        files,
        verification,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialize");
    text.push('\n');
    let path = out_dir.join("manifest.json");
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}
