use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use hybrid_stirap::adiabatic::{relative_phases, spherical};
use hybrid_stirap::config::SimConfig;
use hybrid_stirap::harness::acceptance::{run_criterion, CRITERIA};
use hybrid_stirap::harness::figures::{FigureData, FigureOptions};
use hybrid_stirap::harness::readout::{run_ancilla_sweep, AncillaSweepConfig};
use hybrid_stirap::harness::sweep::content_hash;
use hybrid_stirap::harness::{run_figure, run_sweep, Figure, SweepOptions, SweepSpec};
use hybrid_stirap::run::{simulate, Evaluation};
use hybrid_stirap::synthesis::{forward_analytic, synthesize, target_from_spherical, verify};
use hybrid_stirap::{fidelity, ModelKind, PropagateOptions, QutritState};

#[derive(Parser)]
#[command(name = "hstirap", version, about = "Hybrid Rabi-STIRAP qutrit simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Evaluate closed forms instead of integrating.
    #[arg(long, global = true)]
    analytic: bool,
    /// Integrator tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output directory for datasets.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Common {
    fn evaluation(&self) -> Evaluation {
        if self.analytic {
            Evaluation::Analytic
        } else {
            Evaluation::Numeric
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one TOML config and write its trajectory.
    Simulate { config: PathBuf },
    /// Run a TOML sweep spec.
    Sweep { spec: PathBuf },
    /// Regenerate a built-in dataset (fig2, fig3, fig4, fig5).
    Figure { which: Figure },
    /// Control settings for a target state.
    Synthesize(SynthesizeArgs),
    /// Scan the ancilla fringe over the phase sum.
    AncillaSweep { config: Option<PathBuf> },
    /// Run the acceptance suite; exits nonzero on any failure.
    Acceptance {
        /// Only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Args)]
struct SynthesizeArgs {
    /// `reA imA reB imB reC imC`, or `ε ν Arg(AB*) Arg(AC*)` with
    /// `--spherical`.
    #[arg(allow_negative_numbers = true, num_args = 4..=6, required = true)]
    target: Vec<f64>,
    #[arg(long)]
    spherical: bool,
    /// Print a simulate config instead of the settings.
    #[arg(long)]
    emit_config: bool,
    /// Also propagate the settings and report the fidelity.
    #[arg(long)]
    verify: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cancel = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&cancel);
    if let Err(e) = ctrlc::set_handler(move || {
        log::warn!("interrupt received; finishing current points");
        flag.store(true, Ordering::SeqCst);
    }) {
        log::warn!("no interrupt handler: {e}");
    }
    match run(cli, &cancel) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli, cancel: &AtomicBool) -> Result<ExitCode> {
    let c = &cli.common;
    match cli.command {
        Command::Simulate { config } => simulate_cmd(c, &config),
        Command::Sweep { spec } => sweep_cmd(c, &spec, cancel),
        Command::Figure { which } => figure_cmd(c, which, cancel),
        Command::Synthesize(args) => synthesize_cmd(c, &args),
        Command::AncillaSweep { config } => ancilla_cmd(c, config.as_deref()),
        Command::Acceptance { only } => acceptance_cmd(&only),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
}

fn simulate_cmd(c: &Common, path: &Path) -> Result<ExitCode> {
    let mut cfg = SimConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(tol) = c.tol {
        cfg.tol = tol;
    }
    let tr = simulate(&cfg, c.evaluation())?;
    let csv = tr.to_csv_string()?;
    let last = tr.final_state();
    let pops = &last.populations()[..last.dim()];
    match &c.out {
        Some(dir) => {
            let name = stem(path);
            fs::create_dir_all(dir)?;
            let data = dir.join(format!("{name}.csv"));
            fs::write(&data, &csv)?;
            let manifest = serde_json::json!({
                "name": name,
                "kind": "trajectory",
                "evaluation": c.evaluation(),
                "model": tr.model,
                "integrator": tr.integrator,
                "samples": tr.len(),
                "complete": true,
                "final_populations": pops,
                "max_norm_drift": tr.max_norm_drift(),
                "steps": tr.stats,
                "content_sha256": content_hash(&csv),
                "config": cfg,
            });
            fs::write(dir.join(format!("{name}.manifest.json")), serde_json::to_string_pretty(&manifest)? + "\n")?;
            eprintln!("wrote {}", data.display());
        }
        None => print!("{csv}"),
    }
    eprintln!("final populations {pops:.6?}, norm drift {:.2e}", tr.max_norm_drift());
    Ok(ExitCode::SUCCESS)
}

fn sweep_cmd(c: &Common, path: &Path, cancel: &AtomicBool) -> Result<ExitCode> {
    let mut spec = SweepSpec::load(path).with_context(|| format!("loading {}", path.display()))?;
    if c.analytic {
        spec.evaluation = Evaluation::Analytic;
    }
    if let Some(tol) = c.tol {
        spec.base.tol = tol;
    }
    let res = run_sweep(&spec, &SweepOptions { jobs: c.jobs, cancel: Some(cancel) })?;
    let (data, _) = res.write(&c.out_dir())?;
    eprintln!("wrote {} ({}/{} points)", data.display(), res.rows.len(), res.total);
    if !res.complete() {
        eprintln!("sweep incomplete: {} points missing", res.total - res.rows.len());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn figure_cmd(c: &Common, which: Figure, cancel: &AtomicBool) -> Result<ExitCode> {
    let opts = FigureOptions { evaluation: c.evaluation(), jobs: c.jobs, tol: c.tol, cancel: Some(cancel) };
    let out = run_figure(which, &opts, &c.out_dir())?;
    eprintln!("wrote {} and {}", out.csv.display(), out.manifest.display());
    if let FigureData::Map(res) = &out.data {
        if !res.complete() {
            eprintln!("{which} incomplete: {} points missing", res.total - res.rows.len());
            return Ok(ExitCode::FAILURE);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn synthesize_cmd(c: &Common, args: &SynthesizeArgs) -> Result<ExitCode> {
    let target = match (args.spherical, args.target.as_slice()) {
        (true, &[eps, nu, ab, ac]) => target_from_spherical(eps, nu, ab, ac)?,
        (false, &[ar, ai, br, bi, cr, ci]) => QutritState::qutrit(
            Complex64::new(ar, ai),
            Complex64::new(br, bi),
            Complex64::new(cr, ci),
        ),
        (true, _) => bail!("--spherical takes four numbers: epsilon nu arg_ab arg_ac"),
        (false, _) => bail!("a target is six numbers: reA imA reB imB reC imC"),
    };
    let settings = synthesize(&target)?;
    if args.emit_config {
        let mut cfg = SimConfig::from_controls(&settings);
        if let Some(tol) = c.tol {
            cfg.tol = tol;
        }
        print!("{}", cfg.to_toml_string()?);
        return Ok(ExitCode::SUCCESS);
    }
    let predicted = forward_analytic(&settings)?;
    let mut report = serde_json::json!({
        "settings": settings,
        "spherical": spherical(&target)?,
        "relative_phases": relative_phases(&target),
        "analytic_fidelity": fidelity(&predicted, &target),
    });
    if args.verify {
        let opts = c.tol.map_or_else(PropagateOptions::default, PropagateOptions::with_tol);
        report["numeric_fidelity"] =
            verify(&settings, &target, ModelKind::IdealRwa3, Default::default(), &opts)?.into();
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn ancilla_cmd(c: &Common, path: Option<&Path>) -> Result<ExitCode> {
    let mut cfg = match path {
        Some(p) => AncillaSweepConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => AncillaSweepConfig::default(),
    };
    if c.analytic {
        cfg.numeric = false;
    }
    if let Some(tol) = c.tol {
        cfg.tol = tol;
    }
    let s = run_ancilla_sweep(&cfg, c.jobs)?;
    let csv = s.to_csv_string()?;
    match &c.out {
        Some(dir) => {
            let name = path.map_or_else(|| "ancilla".into(), stem);
            fs::create_dir_all(dir)?;
            let data = dir.join(format!("{name}.csv"));
            fs::write(&data, &csv)?;
            let manifest = serde_json::json!({
                "name": name,
                "kind": "ancilla_sweep",
                "complete": true,
                "visibility_closed_form": s.visibility,
                "fit_analytic": s.fit_analytic,
                "fit_numeric": s.fit_numeric,
                "min_block_fidelity": s.min_block_fidelity,
                "content_sha256": content_hash(&csv),
                "config": cfg,
            });
            fs::write(dir.join(format!("{name}.manifest.json")), serde_json::to_string_pretty(&manifest)? + "\n")?;
            eprintln!("wrote {}", data.display());
        }
        None => print!("{csv}"),
    }
    match (&s.fit_numeric, s.min_block_fidelity) {
        (Some(f), Some(b)) => eprintln!(
            "visibility: closed form {:.6}, fitted {:.6}; phase offset {:.4}; min block fidelity {b:.6}",
            s.visibility.unwrap_or(f64::NAN),
            f.visibility,
            f.phi_hat
        ),
        _ => eprintln!("visibility: closed form {:.6}", s.visibility.unwrap_or(f64::NAN)),
    }
    Ok(ExitCode::SUCCESS)
}

fn acceptance_cmd(only: &[u8]) -> Result<ExitCode> {
    let ids: Vec<u8> = if only.is_empty() { CRITERIA.iter().map(|(id, _)| *id).collect() } else { only.to_vec() };
    let mut failed = 0;
    for id in ids {
        let r = run_criterion(id);
        println!("{r}");
        failed += usize::from(!r.passed);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
