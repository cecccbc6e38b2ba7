use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use parisian_core::asymptotics::{classify, corollary_value, pickands_constant_spec, piterbarg_constant_spec, theorem1_value};
use parisian_core::mc_engine::{compare_table, McParams, RuinSimulator, Source, Threshold, WindowRule};
use parisian_core::rng::replicate_rng;
use parisian_core::{
    estimate_constant_with, parisian_sup_inf, ConstantEstimate, Constants, Convention, DriftedFieldSpec,
    FbmGridSampler, LabParams, PathGrid, PowerDrift, WindowSpec,
};
use serde_json::json;

use crate::config::{load_config, parse_vicinity, RunConfig};
use crate::error::{CliError, Result};
use crate::report::{
    write_report, AnalyzeRow, AsymptoticRow, ConstantRow, EvalRow, Format, PathRow, Row, RuinRow, RunManifest,
};

#[derive(Debug, Parser)]
#[command(name = "parisian", version, about = "Parisian ruin asymptotics and Monte Carlo experiments")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "PARISIAN_WORKERS")]
    pub workers: Option<usize>,

    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,

    /// Output file; a manifest is written next to it. Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Half,
    Symmetric,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one fBm path on a uniform grid.
    FbmSample {
        #[arg(long)]
        hurst: f64,
        /// Number of grid steps.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// First grid time.
        #[arg(long, default_value_t = 0.0)]
        origin: f64,
    },
    /// Evaluate the Parisian sup-inf functional of a sampled path.
    ParisianEval {
        /// CSV with a `value` column and optionally a uniform `t` column.
        #[arg(long = "in")]
        input: PathBuf,
        /// Window length in time units.
        #[arg(long)]
        window: f64,
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
        /// Outer set `a:b` in time units; defaults to every admissible start.
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
    },
    /// Optimal point, local expansion and asymptotic branch of a risk model.
    MiprAnalyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// First-order asymptotic values over a threshold grid.
    Asymptotic {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated levels u; overrides the configuration.
        #[arg(long, allow_hyphen_values = true)]
        u_grid: Option<String>,
        /// Comma-separated input counts N (risk model only).
        #[arg(long)]
        n_grid: Option<String>,
    },
    /// Monte Carlo estimates of Parisian Pickands/Piterbarg constants.
    Constant {
        #[arg(long)]
        alpha: f64,
        #[arg(long = "T", default_value_t = 0.0)]
        t: f64,
        /// Comma-separated outer lengths.
        #[arg(long)]
        lambda: String,
        /// Comma-separated grid steps.
        #[arg(long)]
        grid_step: String,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "half")]
        convention: ConventionArg,
        /// Power drift `a_minus,gamma_minus,a_plus,gamma_plus` (Piterbarg type).
        #[arg(long)]
        drift: Option<String>,
    },
    /// Crude Monte Carlo estimate of a Parisian ruin probability.
    McRuin {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// `log`, `lambda:<L>` or `none`.
        #[arg(long)]
        vicinity: Option<String>,
    },
    /// Monte Carlo against asymptotics over a threshold list.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Write 0 in the `seconds` column so outputs are reproducible byte for byte.
        #[arg(long)]
        zero_timing: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FbmSample { .. } => "fbm-sample",
            Command::ParisianEval { .. } => "parisian-eval",
            Command::MiprAnalyze { .. } => "mipr-analyze",
            Command::Asymptotic { .. } => "asymptotic",
            Command::Constant { .. } => "constant",
            Command::McRuin { .. } => "mc-ruin",
            Command::Compare { .. } => "compare",
        }
    }
}

fn parse_list(key: &'static str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse::<f64>()
                .map_err(|_| CliError::range(key, format!("not a number: {x:?}")))
        })
        .collect()
}

/// Provenance collected while a command runs.
#[derive(Default)]
struct Provenance {
    configuration: serde_json::Value,
    master_seed: Option<u64>,
    replicates: Option<u64>,
    grid: Option<serde_json::Value>,
}

/// Output sink that removes what it wrote if the run fails afterwards.
struct Emitter<'a> {
    format: Format,
    out: Option<&'a Path>,
    written: Vec<PathBuf>,
}

impl Emitter<'_> {
    fn emit<R: Row>(&mut self, rows: &[R]) -> Result<()> {
        if let Some(p) = self.out {
            self.written.push(p.to_path_buf());
        }
        write_report(rows, self.format, self.out)
    }

    fn cleanup(&self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
            let _ = std::fs::remove_file(RunManifest::manifest_path(p));
        }
    }
}

pub fn run(cli: &Cli, arguments: Vec<String>) -> Result<()> {
    let clock = Instant::now();
    let mut emitter = Emitter {
        format: cli.format,
        out: cli.out.as_deref(),
        written: Vec::new(),
    };
    let result = dispatch(cli, &mut emitter).and_then(|prov| {
        if let Some(out) = cli.out.as_deref() {
            let manifest = RunManifest {
                command: cli.command.name().to_string(),
                arguments,
                configuration: prov.configuration,
                master_seed: prov.master_seed,
                replicates: prov.replicates,
                workers: cli.workers,
                grid: prov.grid,
                wall_seconds: clock.elapsed().as_secs_f64(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                outputs: Vec::new(),
            };
            manifest.write_for(out)?;
        }
        Ok(())
    });
    if result.is_err() {
        emitter.cleanup();
    }
    result
}

fn config_echo(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

fn dispatch(cli: &Cli, emitter: &mut Emitter) -> Result<Provenance> {
    match &cli.command {
        Command::FbmSample {
            hurst,
            n,
            dt,
            seed,
            origin,
        } => {
            let sampler = FbmGridSampler::new(*hurst, *origin, *n, *dt)?;
            let path = sampler.sample(&mut replicate_rng(*seed, 0));
            let rows: Vec<PathRow> = path
                .values
                .iter()
                .enumerate()
                .map(|(j, &value)| PathRow { t: path.time(j), value })
                .collect();
            emitter.emit(&rows)?;
            Ok(Provenance {
                configuration: json!({"hurst": hurst, "n": n, "dt": dt, "seed": seed, "origin": origin}),
                master_seed: Some(*seed),
                replicates: Some(1),
                grid: Some(json!({"dt": dt, "origin": origin, "points": n + 1})),
            })
        }
        Command::ParisianEval {
            input,
            window,
            threshold,
            range,
        } => {
            let path = read_path_csv(input)?;
            let spec = WindowSpec::from_duration(*window, path.dt)?;
            let w = spec.window_len;
            if w + 1 > path.len() {
                return Err(parisian_core::Error::Dimension(format!(
                    "window of {} points does not fit in {} values",
                    w + 1,
                    path.len()
                ))
                .into());
            }
            let (a, b) = match range {
                None => (0, path.len() - 1 - w),
                Some(r) => {
                    let (lo, hi) = r
                        .split_once(':')
                        .ok_or_else(|| CliError::range("range", format!("expected a:b, got {r:?}")))?;
                    let idx = |s: &str| -> Result<usize> {
                        let x: f64 = s
                            .trim()
                            .parse()
                            .map_err(|_| CliError::range("range", format!("not a number: {s:?}")))?;
                        let k = ((x - path.origin) / path.dt).round();
                        if k < 0.0 {
                            return Err(CliError::range("range", format!("{x} precedes the first grid time")));
                        }
                        Ok(k as usize)
                    };
                    (idx(lo)?, idx(hi)?)
                }
            };
            let v = parisian_sup_inf(&path, (a, b), spec)?;
            let rows = [EvalRow {
                sup_inf: v,
                threshold: *threshold,
                event: threshold.map(|u| v > u),
                window_len: w,
                rounding_slack: spec.rounding_slack,
            }];
            emitter.emit(&rows)?;
            Ok(Provenance {
                configuration: json!({"in": input, "window": window, "threshold": threshold, "range": range}),
                grid: Some(json!({"dt": path.dt, "origin": path.origin, "points": path.len()})),
                ..Provenance::default()
            })
        }
        Command::MiprAnalyze { config } => {
            let cfg = load_config(config)?;
            let model = cfg.model()?;
            let opt = model.find_tstar()?;
            let exp = model.local_expansion_at(&opt)?;
            let label = classify(&exp)?;
            let rows = [AnalyzeRow {
                t_star: opt.t_star,
                kind: opt.kind.as_str().to_string(),
                sigma_star: opt.sigma_star,
                a_minus: exp.a_minus,
                gamma_minus: exp.gamma_minus,
                a_plus: exp.a_plus,
                gamma_plus: exp.gamma_plus,
                alpha: exp.alpha,
                d_corr: exp.d_corr,
                nu: label.nu,
                zeta: label.tail_power(),
                branch: label.case.as_str().to_string(),
            }];
            emitter.emit(&rows)?;
            Ok(Provenance {
                configuration: config_echo(&cfg),
                ..Provenance::default()
            })
        }
        Command::Asymptotic { config, u_grid, n_grid } => {
            let cfg = load_config(config)?;
            let source = cfg.source()?;
            let exp = source.local_expansion()?;
            let t = match cfg.window_rule() {
                WindowRule::AssumptionB(t) => t,
                WindowRule::Fixed(_) => {
                    return Err(CliError::range("T_u", "asymptotics need the window parameter `T`"));
                }
            };
            let constants = constants_from(&cfg, &source, t)?;
            let thresholds: Vec<Threshold> = match (u_grid, n_grid) {
                (Some(_), Some(_)) => return Err(CliError::Usage("give either --u-grid or --n-grid".into())),
                (Some(us), None) => parse_list("u_grid", us)?.into_iter().map(Threshold::U).collect(),
                (None, Some(ns)) => parse_list("n_grid", ns)?.into_iter().map(Threshold::N).collect(),
                (None, None) => cfg.thresholds(),
            };
            let mut rows = Vec::with_capacity(thresholds.len());
            for th in thresholds {
                let (n, v) = match (&source, th) {
                    (Source::Mipr(m), Threshold::N(n)) => (Some(n), corollary_value(m, n, t, &constants)?),
                    (Source::Synthetic(_), Threshold::N(_)) => {
                        return Err(CliError::Usage("--n-grid applies to the risk model only".into()));
                    }
                    (_, Threshold::U(u)) => (None, theorem1_value(&exp, t, u, &constants)?),
                };
                rows.push(AsymptoticRow {
                    n,
                    u: v.u,
                    value: v.value,
                    log_value: v.log_value,
                    prefactor: v.prefactor,
                    power: v.power,
                    branch: v.case.as_str().to_string(),
                    formula: serde_json::to_value(v.formula)
                        .ok()
                        .and_then(|x| x.as_str().map(str::to_string))
                        .unwrap_or_default(),
                });
            }
            emitter.emit(&rows)?;
            Ok(Provenance {
                configuration: json!({"config": config_echo(&cfg), "u_grid": u_grid, "n_grid": n_grid}),
                ..Provenance::default()
            })
        }
        Command::Constant {
            alpha,
            t,
            lambda,
            grid_step,
            reps,
            seed,
            convention,
            drift,
        } => {
            let lambdas = parse_list("lambda", lambda)?;
            let steps = parse_list("grid_step", grid_step)?;
            let drift = drift.as_deref().map(parse_drift).transpose()?;
            let convention = match convention {
                ConventionArg::Half => Convention::HalfInterval,
                ConventionArg::Symmetric => Convention::SymmetricInterval,
            };
            let params = LabParams {
                replicates: *reps,
                seed: *seed,
                workers: cli.workers,
            };
            let mut rows = Vec::new();
            for &l in &lambdas {
                for &g in &steps {
                    let spec = DriftedFieldSpec {
                        alpha: *alpha,
                        t: *t,
                        lambda: l,
                        grid_step: g,
                        drift,
                        convention,
                    };
                    let e = estimate_constant_with(&spec, params)?;
                    rows.push(ConstantRow {
                        alpha: *alpha,
                        t: *t,
                        lambda: l,
                        grid_step: g,
                        convention: e.convention.as_str().to_string(),
                        normalization: serde_json::to_value(e.normalization)
                            .ok()
                            .and_then(|x| x.as_str().map(str::to_string))
                            .unwrap_or_default(),
                        value: e.value,
                        stderr: e.stderr,
                        replicates: e.replicates,
                        seed: *seed,
                    });
                }
            }
            emitter.emit(&rows)?;
            Ok(Provenance {
                configuration: json!({
                    "alpha": alpha, "T": t, "lambda": lambdas, "grid_step": steps,
                    "convention": convention.as_str(), "drift": drift,
                }),
                master_seed: Some(*seed),
                replicates: Some(*reps),
                grid: None,
            })
        }
        Command::McRuin {
            config,
            reps,
            seed,
            vicinity,
        } => {
            let mut cfg = load_config(config)?;
            if let Some(r) = reps {
                cfg.replicates = Some(*r);
            }
            if let Some(s) = seed {
                cfg.seed = Some(*s);
            }
            if let Some(v) = vicinity {
                parse_vicinity(v)?;
                cfg.vicinity = Some(v.clone());
            }
            cfg.validate()?;
            let source = cfg.source()?;
            let params = mc_params(&cfg, cli.workers)?;
            let sim = RuinSimulator::new(&source, cfg.threshold()?, cfg.window_rule(), &params)?;
            let est = sim.run(params.replicates, params.seed, params.workers)?;
            let rows = [RuinRow {
                u: est.u,
                hits: est.hits,
                replicates: est.replicates,
                p_hat: est.p_hat,
                ci_lo: est.ci95.0,
                ci_hi: est.ci95.1,
                dt: est.grid.dt,
                grid_start: est.grid.start,
                grid_end: est.grid.end,
                window_len: est.window.window_len,
                t_u: est.window_duration,
                delta_minus: est.vicinity.map(|v| v.0),
                delta_plus: est.vicinity.map(|v| v.1),
                seed: est.master_seed,
            }];
            emitter.emit(&rows)?;
            Ok(Provenance {
                configuration: config_echo(&cfg),
                master_seed: Some(params.seed),
                replicates: Some(params.replicates),
                grid: serde_json::to_value(est.grid).ok(),
            })
        }
        Command::Compare { config, zero_timing } => {
            let cfg = load_config(config)?;
            let source = cfg.source()?;
            let params = mc_params(&cfg, cli.workers)?;
            let thresholds = cfg.thresholds();
            let constants = if thresholds.is_empty() {
                Constants::default()
            } else {
                let t = match cfg.window_rule() {
                    WindowRule::AssumptionB(t) => t,
                    WindowRule::Fixed(_) => 0.0,
                };
                constants_from(&cfg, &source, t)?
            };
            let mut rows = compare_table(&source, &thresholds, cfg.window_rule(), &constants, &params)?;
            if *zero_timing {
                for r in &mut rows {
                    r.seconds = 0.0;
                }
            }
            emitter.emit(&rows)?;
            Ok(Provenance {
                configuration: json!({"config": config_echo(&cfg), "zero_timing": zero_timing}),
                master_seed: Some(params.seed),
                replicates: Some(params.replicates),
                grid: None,
            })
        }
    }
}

fn mc_params(cfg: &RunConfig, workers: Option<usize>) -> Result<McParams> {
    let d = McParams::default();
    Ok(McParams {
        replicates: cfg.replicates.unwrap_or(d.replicates),
        seed: cfg.seed.unwrap_or(d.seed),
        dt: cfg.dt,
        resolution: cfg.resolution.unwrap_or(d.resolution),
        dt_floor: cfg.dt_floor.unwrap_or(d.dt_floor),
        vicinity: cfg.vicinity()?,
        workers,
    })
}

/// Externally supplied constants, tagged with the field they belong to.
fn constants_from(cfg: &RunConfig, source: &Source, t: f64) -> Result<Constants> {
    let Some(c) = &cfg.constants else {
        return Ok(Constants::default());
    };
    let exp = source.local_expansion()?;
    // Outer length and grid step are not meaningful for supplied values.
    Ok(Constants {
        pickands: c
            .pickands
            .map(|v| ConstantEstimate::known(v, pickands_constant_spec(&exp, t, 0.0, 0.0))),
        piterbarg: c
            .piterbarg
            .map(|v| ConstantEstimate::known(v, piterbarg_constant_spec(&exp, t, 0.0, 0.0))),
    })
}

fn parse_drift(s: &str) -> Result<PowerDrift> {
    let v = parse_list("drift", s)?;
    if v.len() != 4 {
        return Err(CliError::range("drift", "expected a_minus,gamma_minus,a_plus,gamma_plus"));
    }
    Ok(PowerDrift {
        a_minus: v[0],
        gamma_minus: v[1],
        a_plus: v[2],
        gamma_plus: v[3],
    })
}

/// Reads a path CSV with a `value` column and an optional uniform `t` column.
pub fn read_path_csv(path: &Path) -> Result<PathGrid> {
    let bad = |message: String| CliError::Input {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let vcol = col("value").ok_or_else(|| bad("missing `value` column".into()))?;
    let tcol = col("t");
    let mut ts = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(format!("row {}: not a number in column {c}", i + 2)))
        };
        values.push(num(vcol)?);
        if let Some(c) = tcol {
            ts.push(num(c)?);
        }
    }
    if values.is_empty() {
        return Err(bad("no data rows".into()));
    }
    let (origin, dt) = if ts.len() >= 2 {
        let dt = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
        if !(dt > 0.0) {
            return Err(bad("`t` column must be increasing".into()));
        }
        for (j, &t) in ts.iter().enumerate() {
            if (t - (ts[0] + j as f64 * dt)).abs() > 1e-9 * dt.max(t.abs()) {
                return Err(bad(format!("`t` column is not uniform at row {}", j + 2)));
            }
        }
        (ts[0], dt)
    } else {
        (ts.first().copied().unwrap_or(0.0), 1.0)
    };
    Ok(PathGrid {
        hurst: f64::NAN,
        origin,
        dt,
        values,
    })
}
