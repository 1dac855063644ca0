//! Synthetic data, experiment drivers, and CSV persistence.
//!
//! Every experiment is a pure function of its parameter struct; the seed
//! fully determines the generated data, so identical parameters produce
//! byte-identical output files. Wall time is kept in the in-memory metadata
//! only and never serialized.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::Mat;
use crate::matcomp::{
    backtracking_run, run_fixed_step, BacktrackConfig, CompletionProblem, ProxMethod,
};
use crate::objective::{Logistic, Objective, Quadratic};
use crate::ode::estimate_order;
use crate::rng::SplitMix64;
use crate::stability::{
    analytic_region, empirical_probe, region_invariance_check, region_scan_rows, stable_region,
};
use crate::stepper::{Scheme, Termination};

// ─── Synthetic data ─────────────────────────────────────────────────────────

/// Exactly rank-`rank` matrix `A B^T / sqrt(rank)` with standard Gaussian
/// factors, so entries have unit variance regardless of the rank.
pub fn generate_low_rank(rows: usize, cols: usize, rank: usize, seed: u64) -> Mat {
    assert!(rank >= 1 && rank <= rows.min(cols));
    let mut rng = SplitMix64::new(seed);
    let a = Mat::from_fn(rows, rank, |_, _| rng.next_gaussian());
    let b = Mat::from_fn(cols, rank, |_, _| rng.next_gaussian());
    a.matmul_nt(&b).scale(1.0 / (rank as f64).sqrt())
}

/// Uniform without-replacement sample of `floor(fraction * rows * cols)`
/// entry positions, in row-major order.
pub fn sample_mask(rows: usize, cols: usize, fraction: f64, seed: u64) -> Vec<(u32, u32)> {
    assert!(fraction > 0.0 && fraction <= 1.0);
    let total = rows * cols;
    let count = (fraction * total as f64).floor() as usize;
    let mut rng = SplitMix64::new(seed);
    rng.sample_indices(total, count)
        .into_iter()
        .map(|idx| ((idx / cols) as u32, (idx % cols) as u32))
        .collect()
}

/// Desk benchmark problem: low-rank truth, uniformly observed entries.
/// The mask uses a split-off substream so truth and mask stay independent.
pub fn synth_problem(
    rows: usize,
    cols: usize,
    rank: usize,
    fraction: f64,
    lambda: f64,
    seed: u64,
) -> CompletionProblem {
    let mut rng = SplitMix64::new(seed);
    let truth_seed = rng.split().next_u64();
    let mask_seed = rng.split().next_u64();
    let truth = generate_low_rank(rows, cols, rank, truth_seed);
    let mask = sample_mask(rows, cols, fraction, mask_seed);
    let obs = mask.iter().map(|&(i, j)| truth.get(i as usize, j as usize)).collect();
    CompletionProblem::new(rows, cols, mask, obs, lambda, Some(truth))
}

// ─── Feasible-step scan ─────────────────────────────────────────────────────

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub method: ProxMethod,
    /// Per grid point: step size and whether the run stayed feasible.
    pub outcomes: Vec<(f64, bool)>,
    /// Largest step whose run and all smaller-step runs stayed feasible.
    pub max_feasible: Option<f64>,
}

/// Classify every step in `s_grid` (ascending) by running the solver for
/// `iters` iterations; a run is feasible when it never trips the objective
/// blow-up rule. Grid points run in parallel; the boundary is the last
/// feasible point before the first infeasible one.
pub fn feasible_step_scan(
    method: ProxMethod,
    p: &CompletionProblem,
    s_grid: &[f64],
    iters: usize,
) -> Result<ScanResult> {
    for w in s_grid.windows(2) {
        assert!(w[0] < w[1], "step grid must be ascending");
    }
    let outcomes: Vec<(f64, bool)> = s_grid
        .par_iter()
        .map(|&s| {
            let feasible = match run_fixed_step(method, p, s, iters) {
                Ok(trace) => trace.reason != Termination::Diverged,
                Err(_) => false,
            };
            (s, feasible)
        })
        .collect();
    let mut max_feasible = None;
    for &(s, ok) in &outcomes {
        if ok {
            max_feasible = Some(s);
        } else {
            break;
        }
    }
    Ok(ScanResult { method, outcomes, max_feasible })
}

// ─── Config and result tables ───────────────────────────────────────────────

/// Flat key=value experiment configuration. Canonicalization sorts keys and
/// joins trimmed `key=value` lines; the config hash is 64-bit FNV-1a over
/// that canonical text.
#[derive(Clone, Debug, Default)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.insert(key.trim().to_string(), value.to_string().trim().to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    /// Parse a flat key=value file; blank lines and `#` comments are ignored.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    cfg.set(k, v);
                }
                None => {
                    return Err(crate::error::Error::InvalidArgument(format!(
                        "{}:{}: expected key=value, got {line:?}",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Ok(cfg)
    }

    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical_text().as_bytes())
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[derive(Clone, Debug)]
pub struct TableMeta {
    pub operation: String,
    pub config_hash: u64,
    pub seed: u64,
    pub wall_time: Duration,
}

/// Rectangular result table plus provenance metadata.
#[derive(Clone, Debug)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub meta: TableMeta,
}

impl ResultTable {
    pub fn new(operation: &str, config: &ExperimentConfig, seed: u64, columns: &[&str]) -> Self {
        ResultTable {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            meta: TableMeta {
                operation: operation.to_string(),
                config_hash: config.hash(),
                seed,
                wall_time: Duration::ZERO,
            },
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "ragged row");
        self.rows.push(row);
    }

    /// Serialize to CSV. The leading comment carries the deterministic part
    /// of the metadata (operation, config hash, seed); wall time would break
    /// byte-identical reruns and stays in memory.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# operation={} config_hash={:016x} seed={}\n",
            self.meta.operation, self.meta.config_hash, self.meta.seed
        ));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Atomic write: temp file in the target directory, then rename.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        let tmp = match dir {
            Some(d) => d.join(format!(
                ".{}.tmp",
                path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
            )),
            None => Path::new(&format!(
                ".{}.tmp",
                path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
            ))
            .to_path_buf(),
        };
        {
            let mut fh = std::fs::File::create(&tmp)?;
            fh.write_all(self.to_csv().as_bytes())?;
            fh.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "nan".to_string()
    }
}

// ─── Experiments ────────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    Quadratic,
    Logistic,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Quadratic => "quadratic",
            ObjectiveKind::Logistic => "logistic",
        }
    }
}

#[derive(Clone, Debug)]
pub struct OrderParams {
    pub schemes: Vec<Scheme>,
    pub objective: ObjectiveKind,
    pub t: f64,
    pub h_max: f64,
    pub ladder_len: usize,
    pub seed: u64,
}

impl OrderParams {
    pub fn to_config(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::new();
        c.set("experiment", "order")
            .set("schemes", self.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join("+"))
            .set("objective", self.objective.name())
            .set("t", self.t)
            .set("h_max", self.h_max)
            .set("ladder_len", self.ladder_len)
            .set("seed", self.seed);
        c
    }
}

fn order_objective(kind: ObjectiveKind, seed: u64) -> (Arc<dyn Objective + Send + Sync>, Vec<f64>) {
    match kind {
        ObjectiveKind::Quadratic => (Arc::new(Quadratic::scalar(1.0)), vec![1.0]),
        ObjectiveKind::Logistic => {
            (Arc::new(Logistic::synthetic(2, 24, seed)), vec![1.0, -0.5])
        }
    }
}

/// Truncation-order ladders for the requested schemes.
/// Columns: scheme, t, h, l, slope, r2, status.
pub fn order_experiment(params: &OrderParams) -> ResultTable {
    let config = params.to_config();
    let start = Instant::now();
    let mut table = ResultTable::new(
        "order",
        &config,
        params.seed,
        &["scheme", "t", "h", "l", "slope", "r2", "status"],
    );
    let ladder: Vec<f64> = (0..params.ladder_len).map(|j| params.h_max / 2f64.powi(j as i32)).collect();
    let (f, x0) = order_objective(params.objective, params.seed);
    for &scheme in &params.schemes {
        match estimate_order(scheme, f.clone(), &x0, params.t, &ladder) {
            Ok(report) => {
                let slope = report.slope.map(fmt).unwrap_or_else(|| "exact".into());
                let r2 = report.r_squared.map(fmt).unwrap_or_else(|| "exact".into());
                for (h, l) in report.h_list.iter().zip(&report.l_values) {
                    table.push(vec![
                        scheme.name().into(),
                        fmt(params.t),
                        fmt(*h),
                        fmt(*l),
                        slope.clone(),
                        r2.clone(),
                        "ok".into(),
                    ]);
                }
            }
            Err(e) => table.push(vec![
                scheme.name().into(),
                fmt(params.t),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("error: {e}"),
            ]),
        }
    }
    table.meta.wall_time = start.elapsed();
    table
}

#[derive(Clone, Debug)]
pub struct StabilityParams {
    pub schemes: Vec<Scheme>,
    pub z_max: f64,
    pub grid: f64,
    /// Parameter triples for the invariance check.
    pub param_triples: Vec<(f64, f64, f64)>,
}

impl StabilityParams {
    pub fn to_config(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::new();
        c.set("experiment", "stability")
            .set("schemes", self.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join("+"))
            .set("z_max", self.z_max)
            .set("grid", self.grid)
            .set(
                "params",
                self.param_triples
                    .iter()
                    .map(|(k, m1, m2)| format!("{k},{m1},{m2}"))
                    .collect::<Vec<_>>()
                    .join(";"),
            );
        c
    }
}

/// Stability-region scan. Scan rows are `scheme, z, max_root_modulus,
/// stable`; the trailing summary rows use scheme `<name>_region` with the
/// interval endpoints in the z / modulus columns, and an `invariance` row
/// reports the parameter-family check.
pub fn stability_experiment(params: &StabilityParams) -> ResultTable {
    let config = params.to_config();
    let start = Instant::now();
    let mut table = ResultTable::new(
        "stability",
        &config,
        0,
        &["scheme", "z", "max_root_modulus", "stable", "status"],
    );
    for &scheme in &params.schemes {
        for row in region_scan_rows(scheme, params.z_max, params.grid) {
            table.push(vec![
                scheme.name().into(),
                fmt(row.z),
                fmt(row.max_root_modulus),
                (row.stable as u8).to_string(),
                "ok".into(),
            ]);
        }
    }
    for &scheme in &params.schemes {
        let region = stable_region(scheme, params.z_max, params.grid);
        let analytic = analytic_region(scheme);
        let agrees = (region.z_hi - analytic.z_hi).abs() <= params.grid + 1e-12;
        table.push(vec![
            format!("{}_region", scheme.name()),
            fmt(region.z_lo),
            fmt(region.z_hi),
            (agrees as u8).to_string(),
            "ok".into(),
        ]);
    }
    if !params.param_triples.is_empty() {
        let row = match region_invariance_check(&params.param_triples) {
            Ok(ok) => vec![
                "invariance".into(),
                fmt(0.0),
                fmt(4.0),
                (ok as u8).to_string(),
                "ok".into(),
            ],
            Err(e) => vec![
                "invariance".into(),
                String::new(),
                String::new(),
                "0".into(),
                format!("error: {e}"),
            ],
        };
        table.push(row);
    }
    table.meta.wall_time = start.elapsed();
    table
}

#[derive(Clone, Debug)]
pub struct ProbeParams {
    pub schemes: Vec<Scheme>,
    pub mu: f64,
    pub s_grid: Vec<f64>,
    pub iters: usize,
    pub burn_in: usize,
}

impl ProbeParams {
    pub fn to_config(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::new();
        c.set("experiment", "probe")
            .set("schemes", self.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join("+"))
            .set("mu", self.mu)
            .set("s_grid", self.s_grid.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"))
            .set("iters", self.iters)
            .set("burn_in", self.burn_in);
        c
    }
}

/// Empirical boundedness sweep. Columns: scheme, mu, s, z, outcome, status.
pub fn probe_experiment(params: &ProbeParams) -> ResultTable {
    let config = params.to_config();
    let start = Instant::now();
    let mut table = ResultTable::new(
        "probe",
        &config,
        0,
        &["scheme", "mu", "s", "z", "outcome", "status"],
    );
    for &scheme in &params.schemes {
        let rows: Vec<(f64, &'static str)> = params
            .s_grid
            .par_iter()
            .map(|&s| (s, empirical_probe(scheme, params.mu, s, params.iters, params.burn_in).name()))
            .collect();
        for (s, outcome) in rows {
            table.push(vec![
                scheme.name().into(),
                fmt(params.mu),
                fmt(s),
                fmt(s * params.mu),
                outcome.into(),
                "ok".into(),
            ]);
        }
    }
    table.meta.wall_time = start.elapsed();
    table
}

#[derive(Clone, Debug)]
pub enum MatcompMode {
    FixedStep { s: f64 },
    Scan { s_grid: Vec<f64> },
    Backtrack { beta: f64, s_init: f64 },
}

#[derive(Clone, Debug)]
pub struct MatcompParams {
    pub methods: Vec<ProxMethod>,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub fraction: f64,
    pub lambda: f64,
    pub iters: usize,
    pub seed: u64,
    pub mode: MatcompMode,
}

impl MatcompParams {
    pub fn to_config(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::new();
        c.set("experiment", "matcomp")
            .set("methods", self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join("+"))
            .set("rows", self.rows)
            .set("cols", self.cols)
            .set("rank", self.rank)
            .set("fraction", self.fraction)
            .set("lambda", self.lambda)
            .set("iters", self.iters)
            .set("seed", self.seed);
        match &self.mode {
            MatcompMode::FixedStep { s } => {
                c.set("mode", "fixed").set("s", s);
            }
            MatcompMode::Scan { s_grid } => {
                c.set("mode", "scan").set(
                    "s_grid",
                    s_grid.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
                );
            }
            MatcompMode::Backtrack { beta, s_init } => {
                c.set("mode", "backtrack").set("beta", beta).set("s_init", s_init);
            }
        }
        c
    }

    pub fn problem(&self) -> CompletionProblem {
        synth_problem(self.rows, self.cols, self.rank, self.fraction, self.lambda, self.seed)
    }
}

/// Matrix-completion experiment in one of three modes.
///
/// * fixed:      method, s, iteration, objective, status   (one row per iterate)
/// * scan:       method, s, feasible, max_feasible, status (one row per grid point)
/// * backtrack:  method, iteration, step, reductions, objective, status
pub fn matcomp_experiment(params: &MatcompParams) -> Result<ResultTable> {
    let config = params.to_config();
    let start = Instant::now();
    let p = params.problem();
    let mut table = match &params.mode {
        MatcompMode::FixedStep { s } => {
            let mut table = ResultTable::new(
                "matcomp_fixed",
                &config,
                params.seed,
                &["method", "s", "iteration", "objective", "status"],
            );
            for &method in &params.methods {
                match run_fixed_step(method, &p, *s, params.iters) {
                    Ok(trace) => {
                        let status = match trace.reason {
                            Termination::Diverged => "diverged",
                            _ => "ok",
                        };
                        for (i, v) in trace.values.iter().enumerate() {
                            table.push(vec![
                                method.name().into(),
                                fmt(*s),
                                i.to_string(),
                                fmt(*v),
                                status.into(),
                            ]);
                        }
                    }
                    Err(e) => table.push(vec![
                        method.name().into(),
                        fmt(*s),
                        String::new(),
                        String::new(),
                        format!("error: {e}"),
                    ]),
                }
            }
            table
        }
        MatcompMode::Scan { s_grid } => {
            let mut table = ResultTable::new(
                "matcomp_scan",
                &config,
                params.seed,
                &["method", "s", "feasible", "max_feasible", "status"],
            );
            for &method in &params.methods {
                match feasible_step_scan(method, &p, s_grid, params.iters) {
                    Ok(scan) => {
                        let max_s =
                            scan.max_feasible.map(fmt).unwrap_or_else(|| "none".to_string());
                        for (s, ok) in &scan.outcomes {
                            table.push(vec![
                                method.name().into(),
                                fmt(*s),
                                (*ok as u8).to_string(),
                                max_s.clone(),
                                "ok".into(),
                            ]);
                        }
                    }
                    Err(e) => table.push(vec![
                        method.name().into(),
                        String::new(),
                        String::new(),
                        String::new(),
                        format!("error: {e}"),
                    ]),
                }
            }
            table
        }
        MatcompMode::Backtrack { beta, s_init } => {
            let mut table = ResultTable::new(
                "matcomp_backtrack",
                &config,
                params.seed,
                &["method", "iteration", "step", "reductions", "objective", "reduction_count", "status"],
            );
            let cfg = BacktrackConfig::new(*beta, *s_init, 200);
            for &method in &params.methods {
                match backtracking_run(method, &p, &cfg, params.iters) {
                    Ok(trace) => {
                        for step in &trace.steps {
                            table.push(vec![
                                method.name().into(),
                                step.iteration.to_string(),
                                fmt(step.step),
                                step.reductions.to_string(),
                                fmt(trace.run.values[step.iteration + 1]),
                                trace.reduction_count.to_string(),
                                "ok".into(),
                            ]);
                        }
                    }
                    Err(e) => table.push(vec![
                        method.name().into(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        format!("error: {e}"),
                    ]),
                }
            }
            table
        }
    };
    table.meta.wall_time = start.elapsed();
    Ok(table)
}

#[derive(Clone, Debug)]
pub struct VerifyParams {
    pub n_max: u64,
    pub gronwall_seeds: u64,
}

impl VerifyParams {
    pub fn to_config(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::new();
        c.set("experiment", "verify")
            .set("n_max", self.n_max)
            .set("gronwall_seeds", self.gronwall_seeds);
        c
    }
}

/// Numerical verification report: transition-matrix closed forms and bounds,
/// the discrete Gronwall fuzz, and the recurrence coefficient identities.
/// Columns: check, detail, value, pass, status.
pub fn verify_experiment(params: &VerifyParams) -> ResultTable {
    let config = params.to_config();
    let start = Instant::now();
    let mut table =
        ResultTable::new("verify", &config, 0, &["check", "detail", "value", "pass", "status"]);

    let bounds = crate::transition::verify_transition_bounds(params.n_max);
    table.push(vec![
        "transition_closed_forms".into(),
        format!("n<= {}", params.n_max),
        fmt(bounds.closed_form_deviation),
        ((bounds.closed_form_deviation <= 1e-12) as u8).to_string(),
        "ok".into(),
    ]);
    table.push(vec![
        "transition_m3".into(),
        "||D_{n,n+1}||".into(),
        fmt(bounds.m3),
        (((bounds.m3 - 2f64.sqrt()).abs() <= 1e-12) as u8).to_string(),
        "ok".into(),
    ]);
    table.push(vec![
        "transition_m".into(),
        "sup_l ||D_{n,l}|| / n".into(),
        fmt(bounds.m_empirical),
        (bounds.m_empirical.is_finite() as u8).to_string(),
        "ok".into(),
    ]);

    let mut gronwall_ok = true;
    for seed in 0..params.gronwall_seeds {
        let mut rng = SplitMix64::new(seed);
        let alpha = rng.next_in(0.01, 1.5);
        let beta = rng.next_in(0.01, 2.0);
        let mut eta = vec![rng.next_in(0.0, beta)];
        let mut partial = eta[0];
        for _ in 1..60 {
            let e = rng.next_in(0.0, beta + alpha * partial);
            eta.push(e);
            partial += e;
        }
        match crate::transition::check_discrete_gronwall(&eta, alpha, beta) {
            Ok(true) => {}
            _ => gronwall_ok = false,
        }
    }
    table.push(vec![
        "discrete_gronwall_fuzz".into(),
        format!("{} seeds", params.gronwall_seeds),
        String::new(),
        (gronwall_ok as u8).to_string(),
        "ok".into(),
    ]);

    let mut coeff_ok = true;
    let k = crate::rational::Ratio::new(1, 2);
    let m2 = crate::rational::Ratio::new(3, 1);
    for n in 2..=params.n_max.min(100) as i64 {
        let got =
            crate::scheme::normalized_recurrence_exact(k, crate::rational::Ratio::ZERO, m2, n);
        match got {
            Ok(w) => {
                if w != crate::scheme::canonical_weights_exact(n) {
                    coeff_ok = false;
                }
            }
            Err(_) => coeff_ok = false,
        }
    }
    table.push(vec![
        "recurrence_identity".into(),
        "exact rational vs closed form".into(),
        String::new(),
        (coeff_ok as u8).to_string(),
        "ok".into(),
    ]);

    table.meta.wall_time = start.elapsed();
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_rank_generator_hits_exact_rank() {
        let m = generate_low_rank(40, 30, 4, 99);
        let f = crate::svd::svd(&m).unwrap();
        assert!(f.sigma[3] > 1e-9 * f.sigma[0]);
        for &s in &f.sigma[4..] {
            assert!(s < 1e-9 * f.sigma[0], "rank leaked: {s}");
        }
    }

    #[test]
    fn rank_one_minors_vanish() {
        let m = generate_low_rank(10, 10, 1, 3);
        for i in 0..9 {
            for j in 0..9 {
                let det = m.get(i, j) * m.get(i + 1, j + 1) - m.get(i, j + 1) * m.get(i + 1, j);
                assert!(det.abs() < 1e-10, "minor ({i},{j}) = {det}");
            }
        }
    }

    #[test]
    fn mask_cardinality_and_determinism() {
        let a = sample_mask(200, 200, 0.3, 5);
        assert_eq!(a.len(), 12_000);
        let b = sample_mask(200, 200, 0.3, 5);
        assert_eq!(a, b);
        let c = sample_mask(200, 200, 0.3, 6);
        assert_ne!(a, c);
        // Full mask.
        assert_eq!(sample_mask(7, 9, 1.0, 0).len(), 63);
        // Entries unique and in range.
        let mut seen = std::collections::HashSet::new();
        for &(i, j) in &a {
            assert!(i < 200 && j < 200);
            assert!(seen.insert((i, j)), "duplicate mask entry");
        }
    }

    #[test]
    fn scan_below_lipschitz_is_fully_feasible() {
        let p = synth_problem(24, 24, 2, 0.5, 0.5, 7);
        // Smooth-part curvature is at most 1; everything below 1/L is stable.
        let grid: Vec<f64> = (1..=5).map(|i| 0.1 * i as f64).collect();
        for method in [ProxMethod::Fista, ProxMethod::Apg, ProxMethod::Sfista] {
            let scan = feasible_step_scan(method, &p, &grid, 60).unwrap();
            assert_eq!(scan.max_feasible, Some(0.5), "{}", method.name());
            assert!(scan.outcomes.iter().all(|&(_, ok)| ok));
        }
    }

    #[test]
    fn config_hash_stable_under_insertion_order() {
        let mut a = ExperimentConfig::new();
        a.set("b", 2).set("a", 1);
        let mut b = ExperimentConfig::new();
        b.set("a", 1).set("b", 2);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.canonical_text(), "a=1\nb=2\n");
    }

    #[test]
    fn fnv1a_known_vectors() {
        // Published FNV-1a test vectors.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn csv_bytes_are_deterministic() {
        let run = || {
            let params = ProbeParams {
                schemes: vec![Scheme::Nag, Scheme::Sag],
                mu: 1.0,
                s_grid: vec![0.5, 1.5, 3.5],
                iters: 2_000,
                burn_in: 100,
            };
            probe_experiment(&params).to_csv()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn atomic_write_and_reread() {
        let dir = std::env::temp_dir().join(format!("sag_optim_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("probe.csv");
        let params = ProbeParams {
            schemes: vec![Scheme::Nag],
            mu: 1.0,
            s_grid: vec![0.5],
            iters: 1_000,
            burn_in: 100,
        };
        let table = probe_experiment(&params);
        table.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, table.to_csv());
        assert!(text.lines().nth(1).unwrap().starts_with("scheme,"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn order_experiment_smoke() {
        let params = OrderParams {
            schemes: vec![Scheme::Nag],
            objective: ObjectiveKind::Quadratic,
            t: 2.0,
            h_max: 0.04,
            ladder_len: 5,
            seed: 0,
        };
        let table = order_experiment(&params);
        assert_eq!(table.rows.len(), 5);
        assert!(table.rows.iter().all(|r| r.last().unwrap() == "ok"));
    }

    #[test]
    fn verify_experiment_all_pass() {
        let table = verify_experiment(&VerifyParams { n_max: 30, gronwall_seeds: 20 });
        for row in &table.rows {
            assert_eq!(row[3], "1", "failed check: {row:?}");
        }
    }
}
