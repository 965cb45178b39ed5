use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use canal_core::scene::{catalog, parse_scene, run_scene, Diagnostic, RunOptions, SceneSpec};
use clap::{Args, Parser, Subcommand};

/// Canal hypersurfaces, sphere-family envelopes and their singular sets.
#[derive(Parser)]
#[command(name = "canal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis in a scene and write the report and meshes.
    Run {
        scene: PathBuf,
        /// Output directory.
        #[arg(short, long, env = "CANAL_OUT_DIR", default_value = "canal-out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Worker threads; 0 uses every core.
        #[arg(short, long, default_value_t = 0)]
        jobs: usize,
        /// Print the report to stdout as well.
        #[arg(long)]
        print: bool,
    },
    /// Check a scene without running it.
    Validate {
        scene: PathBuf,
        /// Emit diagnostics as JSON.
        #[arg(long)]
        json: bool,
    },
    /// List surfaces, families, analyses and tolerances.
    Catalog {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Overrides {
    /// Tolerance override, e.g. `--tol canal=1e-6`. Repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    #[arg(long)]
    surface_samples: Option<usize>,
    #[arg(long)]
    family_samples: Option<usize>,
    #[arg(long)]
    mesh_along: Option<usize>,
    #[arg(long)]
    mesh_angular: Option<usize>,
}

impl Overrides {
    fn apply(&self, scene: &mut SceneSpec) -> Result<()> {
        for item in &self.tol {
            let Some((name, value)) = item.split_once('=') else {
                bail!("--tol expects NAME=VALUE, got {item:?}");
            };
            let value: f64 = value.trim().parse().with_context(|| format!("--tol {name}: not a number"))?;
            scene.tolerances.set(name.trim(), value).map_err(anyhow::Error::msg)?;
        }
        let grid = &mut scene.grid;
        let pairs = [
            (&mut grid.surface_samples, self.surface_samples),
            (&mut grid.family_samples, self.family_samples),
            (&mut grid.mesh.along, self.mesh_along),
            (&mut grid.mesh.angular, self.mesh_angular),
        ];
        for (slot, v) in pairs {
            if let Some(v) = v {
                *slot = v;
            }
        }
        Ok(())
    }
}

fn print_diagnostics(path: &std::path::Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}: {}: {}", path.display(), d.location, d.message);
    }
}

fn load(path: &std::path::Path) -> Result<std::result::Result<SceneSpec, Vec<Diagnostic>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_scene(&text))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            scene,
            out,
            overrides,
            jobs,
            print,
        } => {
            let mut spec = match load(&scene)? {
                Ok(s) => s,
                Err(diags) => {
                    print_diagnostics(&scene, &diags);
                    return Ok(ExitCode::from(2));
                }
            };
            overrides.apply(&mut spec)?;
            // overrides go through the same checks as the file
            let text = serde_json::to_string(&spec)?;
            if let Err(diags) = parse_scene(&text) {
                for d in &diags {
                    eprintln!("override: {}: {}", d.location, d.message);
                }
                return Ok(ExitCode::from(2));
            }
            let output = run_scene(&spec, RunOptions { jobs })?;
            let written = output
                .write(&out)
                .with_context(|| format!("writing to {}", out.display()))?;
            if print {
                print!("{}", output.report.to_json());
            }
            for p in &written {
                eprintln!("wrote {}", p.display());
            }
            for e in &output.report.entries {
                for r in &e.results {
                    if let canal_core::scene::Outcome::Error(msg) = &r.outcome {
                        eprintln!("{} / {}: {msg}", e.name, r.analysis.name());
                    }
                }
            }
            Ok(if output.report.errors > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Validate { scene, json } => {
            let diags = load(&scene)?.err().unwrap_or_default();
            if json {
                println!("{}", serde_json::to_string_pretty(&diags)?);
            } else if diags.is_empty() {
                println!("{}: ok", scene.display());
            } else {
                print_diagnostics(&scene, &diags);
            }
            Ok(if diags.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Catalog { json } => {
            let cat = catalog();
            if json {
                println!("{}", serde_json::to_string_pretty(&cat)?);
            } else {
                for (section, items) in cat {
                    println!("{section}:");
                    for (name, about) in items {
                        println!("  {name:<16} {about}");
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
