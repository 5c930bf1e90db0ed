//! Command dispatch and artifact emission.

use crate::config::{Analysis, NumericSettings, ScenarioConfig};
use anyhow::{bail, Context};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use tippinglab::classify::{
    default_span, forward_attraction_probe, label_or_unclassifiable, write_solutions_csv, Case,
    CaseLabel, TransitionAnalyzer,
};
use tippinglab::field::{hypothesis_audit, AuditGrids};
use tippinglab::integrator::csv_number;
use tippinglab::models::{allee_type, collapse_scan, upper_solution_scaled};
use tippinglab::tipping::{
    find_phase_tipping, find_rate_tipping, find_shift_tipping, find_size_tipping, linear_grid,
    log_grid, sweep, ParameterKind, TippingOptions, BISECTION_TOL, RATE_POINTS_PER_DECADE,
    SIZE_POINTS,
};

pub const DEFAULT_OUT: &str = "runs";
pub const DEFAULT_CSV_STEP: f64 = 0.5;
pub const DEFAULT_HORIZON: f64 = 1000.0;

/// Command-line overrides, applied over the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub settings: NumericSettings,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    /// 0 on success, 2 on an unclassifiable transition.
    pub code: i32,
    pub summary: String,
}

/// Exit code for a failed run: 2 when a limit of the profile is outside
/// `R_f` (the transition cannot be classified), 1 otherwise.
pub fn error_code(err: &anyhow::Error) -> i32 {
    use tippinglab::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::FutureNotInRf { .. } | E::PastNotInRf { .. }) => 2,
        _ => 1,
    }
}

/// The config with command-line settings merged in, as run.
pub fn effective_config(cfg: &ScenarioConfig, opts: &RunOptions) -> ScenarioConfig {
    let mut eff = cfg.clone();
    eff.settings.merge(&opts.settings);
    eff
}

/// `run-<16 hex digits of the SHA-256 of snapshot>`.
pub fn run_dir_name(snapshot: &str) -> String {
    let digest = Sha256::digest(snapshot.as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("run-{hex}")
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn run(cfg: &ScenarioConfig, opts: &RunOptions) -> anyhow::Result<RunOutcome> {
    cfg.validate()?;
    let eff = effective_config(cfg, opts);
    let snapshot = eff.to_toml()?;
    let root = opts
        .out
        .clone()
        .or_else(|| eff.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let dir = root.join(run_dir_name(&snapshot));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    fs::write(dir.join("config.toml"), &snapshot)?;

    let threads = match eff.analysis {
        Analysis::Sweep { .. } => eff
            .settings
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        _ => 1,
    };
    if threads == 0 {
        bail!("--workers must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    let (code, summary) = pool.install(|| dispatch(&eff, &dir))?;
    Ok(RunOutcome { dir, code, summary })
}

fn dispatch(cfg: &ScenarioConfig, dir: &Path) -> anyhow::Result<(i32, String)> {
    let settings = cfg.settings.classify_settings()?;
    let csv_step = cfg.output.csv_step.unwrap_or(DEFAULT_CSV_STEP);
    if !(csv_step > 0.0) {
        bail!("output.csv_step must be positive");
    }
    let horizon = cfg.settings.horizon.unwrap_or(DEFAULT_HORIZON);
    let tol = cfg.settings.tol_bisect.unwrap_or(BISECTION_TOL);
    let profile = cfg.transition_profile();
    match &cfg.analysis {
        Analysis::Audit { gamma_range } => {
            let family = cfg.parametric_family()?;
            let range = match (gamma_range, &profile) {
                (Some(r), _) => *r,
                (None, Some(p)) => p.range(),
                (None, None) => bail!("audit needs `gamma_range` or a `profile`"),
            };
            let report = hypothesis_audit(&family, range, &AuditGrids::default());
            write_json(dir, "audit.json", &report)?;
            let verdict = if report.all_pass() { "pass" } else { "fail" };
            Ok((
                0,
                format!("audit over [{}, {}]: {verdict}", range.0, range.1),
            ))
        }
        Analysis::Classify { probes } => {
            let family = cfg.parametric_family()?;
            let profile = profile.expect("validated");
            let span = cfg
                .settings
                .span
                .map_or_else(|| default_span(&profile), |t| (-t, t));
            let analyzer = TransitionAnalyzer::for_profile(&family, &profile, span, &settings)?;
            let analysis = analyzer.analyze(&profile, span)?;
            let lab = label_or_unclassifiable(&analysis, &settings);
            write_json(dir, "label.json", &lab)?;
            let mut w = create(dir, "label.csv")?;
            writeln!(w, "{}\n{}", CaseLabel::CSV_HEADER, lab.csv_row())?;
            w.flush()?;
            let mut w = create(dir, "solutions.csv")?;
            write_solutions_csv(&analysis, &mut w, csv_step)?;
            w.flush()?;
            if !probes.is_empty() {
                let report =
                    forward_attraction_probe(&analyzer, &analysis, &lab, &profile, probes)?;
                write_json(dir, "probes.json", &report)?;
            }
            let code = if matches!(lab.case, Case::Unclassifiable(_)) {
                2
            } else {
                0
            };
            Ok((
                code,
                format!("case {} (gap {:e})", lab.case.name(), lab.gap_at_witness),
            ))
        }
        Analysis::Sweep {
            parameter,
            lo,
            hi,
            points,
        } => {
            let family = cfg.parametric_family()?;
            let profile = profile.expect("validated");
            let grid = match (parameter, points) {
                (ParameterKind::Rate, Some(n)) => geometric_grid(*lo, *hi, *n)?,
                (ParameterKind::Rate, None) => log_grid(*lo, *hi, RATE_POINTS_PER_DECADE),
                (_, n) => linear_grid(*lo, *hi, n.unwrap_or(SIZE_POINTS)),
            };
            let result = sweep(&family, &profile, *parameter, &grid, &settings)?;
            let mut w = create(dir, "sweep.csv")?;
            result.write_csv(&mut w)?;
            w.flush()?;
            write_json(dir, "sweep.json", &result)?;
            Ok((0, format!("sweep of {} samples", result.samples.len())))
        }
        Analysis::Tipping {
            parameter,
            lo,
            hi,
            with_phi,
        } => {
            let family = cfg.parametric_family()?;
            let profile = profile.expect("validated");
            let options = TippingOptions {
                tol,
                with_phi: *with_phi,
                ..TippingOptions::default()
            };
            let result = match parameter {
                ParameterKind::Rate => {
                    find_rate_tipping(&family, &profile, *lo, *hi, &options, &settings)
                }
                ParameterKind::Phase => {
                    find_phase_tipping(&family, &profile, *lo, *hi, &options, &settings)
                }
                ParameterKind::SizeSplit => {
                    find_size_tipping(&family, &profile, *lo, *hi, &options, &settings)
                }
                ParameterKind::SizeShift => {
                    find_shift_tipping(&family.base, &profile, *lo, *hi, &options, &settings)
                }
            }?;
            let mut w = create(dir, "tipping.csv")?;
            result.write_csv(&mut w)?;
            w.flush()?;
            write_json(dir, "tipping.json", &result)?;
            let values: Vec<String> = result
                .critical
                .iter()
                .map(|c| {
                    format!(
                        "{:.6} ± {:.1e} ({} | {})",
                        c.value,
                        c.half_width,
                        c.lo_label.case.name(),
                        c.hi_label.case.name()
                    )
                })
                .collect();
            Ok((0, format!("critical values: {}", values.join(", "))))
        }
        Analysis::Allee { gamma } => {
            let model = cfg.population_model()?.expect("validated");
            let report = allee_type(&model, *gamma, horizon, &settings.solver)?;
            write_json(dir, "allee.json", &report)?;
            Ok((
                0,
                format!("allee type {:?}", report.allee_type).to_lowercase(),
            ))
        }
        Analysis::Collapse { d, bisect } => {
            let model = cfg.population_model()?.expect("validated");
            let profile = profile.expect("validated");
            let scan = collapse_scan(
                &model,
                &profile,
                d,
                horizon,
                bisect.then_some(tol),
                &settings.solver,
            )?;
            write_json(dir, "collapse.json", &scan)?;
            let mut w = create(dir, "collapse.csv")?;
            writeln!(w, "d,tail,collapsed")?;
            for p in &scan.points {
                writeln!(
                    w,
                    "{},{},{}",
                    csv_number(p.d),
                    csv_number(p.tail),
                    p.collapsed
                )?;
            }
            w.flush()?;
            let solutions = d
                .iter()
                .map(|&di| upper_solution_scaled(&model, &profile, di, horizon, &settings.solver))
                .collect::<Result<Vec<_>, _>>()?;
            let mut w = create(dir, "upper_solutions.csv")?;
            let header: Vec<String> = d
                .iter()
                .map(|&di| format!("u_{}", csv_number(di)))
                .collect();
            writeln!(w, "t,{}", header.join(","))?;
            let n = (2.0 * horizon / csv_step).floor() as usize;
            for i in 0..=n {
                let t = -horizon + i as f64 * csv_step;
                let row = solutions
                    .iter()
                    .map(|s| s.at(t).map(csv_number))
                    .collect::<Result<Vec<_>, _>>()?;
                writeln!(w, "{},{}", csv_number(t), row.join(","))?;
            }
            w.flush()?;
            let summary = match scan.bracket {
                Some((lo, hi)) => format!("collapse between d = {lo:.6} and d = {hi:.6}"),
                None => {
                    let k = scan.points.iter().filter(|p| p.collapsed).count();
                    format!("collapsed at {k} of {} d values", scan.points.len())
                }
            };
            Ok((0, summary))
        }
    }
}

/// `n` geometrically spaced points from `lo` to `hi`.
fn geometric_grid(lo: f64, hi: f64, n: usize) -> anyhow::Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        bail!("rate sweep needs 0 < lo < hi and at least 2 points");
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64).exp()).collect();
    g[n - 1] = hi;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_dir_name_is_stable_and_short() {
        let a = run_dir_name("name = \"x\"\n");
        assert_eq!(a, run_dir_name("name = \"x\"\n"));
        assert_ne!(a, run_dir_name("name = \"y\"\n"));
        assert_eq!(a.len(), "run-".len() + 16);
    }

    #[test]
    fn geometric_grid_hits_both_ends() {
        let g = geometric_grid(0.1, 1.0, 5).unwrap();
        assert_eq!((g[0], g[4]), (0.1, 1.0));
        assert!((g[2] - 0.1f64.sqrt()).abs() < 1e-12);
        assert!(geometric_grid(0.0, 1.0, 5).is_err());
    }

    #[test]
    fn rf_errors_map_to_exit_two() {
        let e: anyhow::Error = tippinglab::Error::FutureNotInRf {
            gamma: 1.0,
            reason: "x".into(),
        }
        .into();
        assert_eq!(error_code(&e), 2);
        assert_eq!(error_code(&anyhow::anyhow!("other")), 1);
    }
}
