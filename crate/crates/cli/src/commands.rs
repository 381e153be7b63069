use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qnee_core::hybrid::run_qnee;
use qnee_core::quantum::{von_neumann_exact, DensityMatrix};
use qnee_core::record::{curve_rows, EstimationRecord, Method};
use qnee_core::seed::derive_seed;
use qnee_core::vqse::run_vqse;
use qnee_core::xxz::{ground_state, XxzParams};

use crate::config::{MethodSel, SweepConfig};
use crate::error::{CliError, CliResult};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| qnee_core::Error::io(path, e).into()
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r).map_err(qnee_core::Error::from)?;
    }
    w.flush().map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

/// Read back any of the CSV tables written here.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(|e| qnee_core::Error::from(e).into()))
        .collect()
}

struct Block {
    lambda: f64,
    energy: f64,
    degeneracy: usize,
    subsystem: usize,
    rho: DensityMatrix,
}

fn blocks(cfg: &SweepConfig) -> CliResult<Vec<Block>> {
    let lambdas = cfg.lambdas()?;
    let per_lambda: Vec<Vec<Block>> = lambdas
        .par_iter()
        .map(|&lambda| -> CliResult<Vec<Block>> {
            let gs = ground_state(&XxzParams::new(cfg.sites, cfg.delta, lambda)?)?;
            cfg.subsystems
                .iter()
                .map(|&k| {
                    Ok(Block {
                        lambda,
                        energy: gs.energy,
                        degeneracy: gs.degeneracy,
                        subsystem: k,
                        rho: gs.block(k)?,
                    })
                })
                .collect()
        })
        .collect::<CliResult<_>>()?;
    Ok(per_lambda.into_iter().flatten().collect())
}

/// `ground_state.csv`: one row per (λ, subsystem size).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundRow {
    pub lambda: f64,
    pub subsystem: usize,
    pub energy: f64,
    pub degeneracy: usize,
    pub exact_entropy: f64,
}

/// `spectra.csv`: exact reduced-state eigenvalues, largest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub lambda: f64,
    pub subsystem: usize,
    pub rank: usize,
    pub eigenvalue: f64,
}

#[derive(Serialize)]
struct RdmEntry {
    lambda: f64,
    subsystem: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

pub struct GroundStateSummary {
    pub rows: Vec<GroundRow>,
    pub files: Vec<PathBuf>,
}

pub fn cmd_ground_state(cfg: &SweepConfig) -> CliResult<GroundStateSummary> {
    create_dir(&cfg.out)?;
    let blocks = blocks(cfg)?;
    let mut rows = Vec::new();
    let mut spectra = Vec::new();
    let mut rdms = Vec::new();
    for b in &blocks {
        let spec = b.rho.spectrum();
        rows.push(GroundRow {
            lambda: b.lambda,
            subsystem: b.subsystem,
            energy: b.energy,
            degeneracy: b.degeneracy,
            exact_entropy: von_neumann_exact(&b.rho),
        });
        spectra.extend(spec.eigenvalues.iter().enumerate().map(|(rank, &e)| SpectrumRow {
            lambda: b.lambda,
            subsystem: b.subsystem,
            rank,
            eigenvalue: e.max(0.0),
        }));
        let m = b.rho.matrix();
        let part = |f: fn(&qnee_core::quantum::C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        rdms.push(RdmEntry {
            lambda: b.lambda,
            subsystem: b.subsystem,
            re: part(|z| z.re),
            im: part(|z| z.im),
        });
    }
    let files = vec![
        cfg.out.join("ground_state.csv"),
        cfg.out.join("spectra.csv"),
        cfg.out.join("reduced_density_matrices.json"),
    ];
    write_csv(&files[0], &rows)?;
    write_csv(&files[1], &spectra)?;
    let json = serde_json::to_string_pretty(&rdms).map_err(qnee_core::Error::from)?;
    write_text(&files[2], &json)?;
    Ok(GroundStateSummary { rows, files })
}

/// Learning-curve row with the sweep coordinates attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveCsvRow {
    pub method: String,
    pub lambda: f64,
    pub subsystem: usize,
    pub trial: usize,
    pub outer_iter: usize,
    pub c_nn: f64,
    pub exact_entropy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub method: String,
    pub lambda: f64,
    pub subsystem: usize,
    pub trial: usize,
    pub estimate: f64,
    pub exact_entropy: f64,
    pub abs_error: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub lambda: f64,
    pub subsystem: usize,
    pub n_trials: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub min: Option<f64>,
    /// The method's reported estimate (for QNEE equal to `min`).
    pub estimate: Option<f64>,
    pub exact_entropy: f64,
    pub abs_error: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub method: String,
    pub subsystem: usize,
    pub lambda: f64,
    pub exact_entropy: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub method: String,
    pub lambda: f64,
    pub subsystem: usize,
    pub rank: usize,
    pub string: String,
    pub estimate: f64,
    pub exact: f64,
}

pub struct Cell {
    pub method: Method,
    pub lambda: f64,
    pub subsystem: usize,
    pub exact_entropy: f64,
    pub exact_spectrum: Vec<f64>,
    pub result: Result<EstimationRecord, String>,
}

pub struct EstimateSummary {
    pub cells: Vec<Cell>,
    pub aggregate: Vec<AggregateRow>,
    pub files: Vec<PathBuf>,
}

fn methods(sel: MethodSel) -> Vec<Method> {
    match sel {
        MethodSel::Qnee => vec![Method::Qnee],
        MethodSel::Vqse => vec![Method::Vqse],
        MethodSel::Both => vec![Method::Qnee, Method::Vqse],
        MethodSel::Exact => vec![],
    }
}

fn method_tag(m: Method) -> u64 {
    match m {
        Method::Qnee => 1,
        Method::Vqse => 2,
    }
}

fn mean_std_min(xs: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    (Some(mean), Some(std), Some(min))
}

fn lambda_label(lambda: f64) -> String {
    format!("{lambda:.4}").replace('.', "p").replace('-', "m")
}

/// Run every (λ, subsystem, method) cell of the sweep and write all tables.
/// Failed cells are written with their error and reported as an estimation
/// failure once everything else is on disk.
pub fn cmd_estimate(cfg: &SweepConfig) -> CliResult<EstimateSummary> {
    create_dir(&cfg.out)?;
    let blocks = blocks(cfg)?;
    let methods = methods(cfg.method);
    let jobs: Vec<(&Block, Method)> = blocks
        .iter()
        .flat_map(|b| methods.iter().map(move |&m| (b, m)))
        .collect();

    let total = jobs.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(b, m)| {
            let seed = derive_seed(cfg.seed, &[b.lambda.to_bits(), b.subsystem as u64, method_tag(m)]);
            let result = match m {
                Method::Qnee => run_qnee(
                    &b.rho,
                    &qnee_core::hybrid::QneeConfig {
                        seed,
                        ..cfg.qnee.clone()
                    },
                ),
                Method::Vqse => run_vqse(
                    &b.rho,
                    &qnee_core::vqse::VqseConfig {
                        seed,
                        ..cfg.vqse.clone()
                    },
                ),
            };
            let k = done.fetch_add(1, std::sync::atomic::Ordering::SeqCst) + 1;
            eprintln!(
                "[{k}/{total}] {} lambda={} n={} {}",
                m.as_str(),
                b.lambda,
                b.subsystem,
                match &result {
                    Ok(r) => format!("estimate={:.4}", r.estimate),
                    Err(e) => format!("failed: {e}"),
                }
            );
            Cell {
                method: m,
                lambda: b.lambda,
                subsystem: b.subsystem,
                exact_entropy: von_neumann_exact(&b.rho),
                exact_spectrum: b.rho.spectrum().eigenvalues,
                result: result.map_err(|e| e.to_string()),
            }
        })
        .collect();

    let mut curves = Vec::new();
    let mut trials = Vec::new();
    let mut aggregate = Vec::new();
    let mut scatter = Vec::new();
    let mut eigen = Vec::new();
    let records_dir = cfg.out.join("records");
    create_dir(&records_dir)?;
    let mut files = Vec::new();

    for c in &cells {
        let method = c.method.as_str().to_string();
        match &c.result {
            Ok(r) => {
                let exact = r.exact_entropy.unwrap_or(c.exact_entropy);
                let path = records_dir.join(format!(
                    "{method}_n{}_lambda{}.json",
                    c.subsystem,
                    lambda_label(c.lambda)
                ));
                write_text(&path, &r.to_json()?)?;
                files.push(path);
                curves.extend(curve_rows(r).into_iter().map(|row| CurveCsvRow {
                    method: method.clone(),
                    lambda: c.lambda,
                    subsystem: c.subsystem,
                    trial: row.trial,
                    outer_iter: row.outer_iter,
                    c_nn: row.c_nn,
                    exact_entropy: row.exact_entropy,
                }));
                for t in &r.trials {
                    trials.push(TrialRow {
                        method: method.clone(),
                        lambda: c.lambda,
                        subsystem: c.subsystem,
                        trial: t.trial,
                        estimate: t.estimate,
                        exact_entropy: exact,
                        abs_error: (t.estimate - exact).abs(),
                        failure: t.failure.clone(),
                    });
                }
                let ests: Vec<f64> = r.trials.iter().map(|t| t.estimate).collect();
                let (mean, std, min) = mean_std_min(&ests);
                let abs_error = (r.estimate - exact).abs();
                aggregate.push(AggregateRow {
                    method: method.clone(),
                    lambda: c.lambda,
                    subsystem: c.subsystem,
                    n_trials: ests.len(),
                    mean,
                    std,
                    min,
                    estimate: Some(r.estimate),
                    exact_entropy: exact,
                    abs_error: Some(abs_error),
                    status: "ok".into(),
                });
                scatter.push(ScatterRow {
                    method: method.clone(),
                    subsystem: c.subsystem,
                    lambda: c.lambda,
                    exact_entropy: exact,
                    abs_error,
                });
                for (rank, e) in r.best().eigen.iter().enumerate() {
                    eigen.push(EigenRow {
                        method: method.clone(),
                        lambda: c.lambda,
                        subsystem: c.subsystem,
                        rank,
                        string: qnee_core::ansatz::BitString::new(r.n_qubits, e.index)?.to_string(),
                        estimate: e.value,
                        exact: c.exact_spectrum.get(rank).copied().unwrap_or(0.0).max(0.0),
                    });
                }
            }
            Err(e) => aggregate.push(AggregateRow {
                method,
                lambda: c.lambda,
                subsystem: c.subsystem,
                n_trials: 0,
                mean: None,
                std: None,
                min: None,
                estimate: None,
                exact_entropy: c.exact_entropy,
                abs_error: None,
                status: format!("failed: {e}"),
            }),
        }
    }
    // Exact-only sweeps still produce aggregate rows.
    if methods.is_empty() {
        for b in &blocks {
            let s = von_neumann_exact(&b.rho);
            aggregate.push(AggregateRow {
                method: "exact".into(),
                lambda: b.lambda,
                subsystem: b.subsystem,
                n_trials: 0,
                mean: Some(s),
                std: Some(0.0),
                min: Some(s),
                estimate: Some(s),
                exact_entropy: s,
                abs_error: Some(0.0),
                status: "ok".into(),
            });
        }
    }

    let tables = [
        "curves.csv",
        "trials.csv",
        "aggregate.csv",
        "error_scatter.csv",
        "eigenvalues.csv",
    ]
    .map(|f| cfg.out.join(f));
    write_csv(&tables[0], &curves)?;
    write_csv(&tables[1], &trials)?;
    write_csv(&tables[2], &aggregate)?;
    write_csv(&tables[3], &scatter)?;
    write_csv(&tables[4], &eigen)?;
    files.extend(tables);

    let failed = cells.iter().filter(|c| c.result.is_err()).count();
    if failed > 0 {
        return Err(CliError::Estimation {
            failed,
            total: cells.len(),
        });
    }
    Ok(EstimateSummary {
        cells,
        aggregate,
        files,
    })
}
