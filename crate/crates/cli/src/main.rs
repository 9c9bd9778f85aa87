use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use ringshape::chanest::compute_covariances;
use ringshape::constellation::ConstellationSpec;
use ringshape::harness::{self, ExperimentConfig, RunOptions};
use ringshape::Error;

#[derive(Parser)]
#[command(name = "ringshape", version, about = "Shaped and unshaped LDPC-coded OFDM link simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER sweep described by a JSON config.
    Simulate {
        config: PathBuf,
        /// Use the config's reduced quick settings.
        #[arg(long)]
        quick: bool,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: results/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (also settable through RINGSHAPE_THREADS).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Estimate the channel covariances for a config and write the cache file.
    Covariance {
        config: PathBuf,
        #[arg(long)]
        draws: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the augmented constellation table (re, im, ring, label).
    Constellation {
        order: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot one or more results tables as an SVG.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "BER")]
        title: String,
    },
    /// Print rates, average power and PAPR of each scheme in a config.
    Rates { config: PathBuf },
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run(cli: Cli) -> ringshape::Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            quick,
            seed,
            out,
            threads,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if quick {
                cfg.apply_quick();
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = out.unwrap_or_else(|| PathBuf::from("results").join(&cfg.name));
            let output = harness::run_experiment(&cfg, &config_dir(&config), &out, &RunOptions { threads })?;
            println!("scheme\tsnr_db\tframes\tber\tshaping_ber\tfer");
            for p in &output.points {
                println!(
                    "{}\t{:.2}\t{}\t{:.3e}\t{:.3e}\t{:.3e}",
                    p.scheme, p.snr_db, p.frames, p.ber, p.shaping_ber, p.fer
                );
            }
            println!("results: {}", output.results_path.display());
            println!("metadata: {}", output.metadata_path.display());
        }
        Command::Covariance { config, draws, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            info!("{draws} channel draws");
            let cov = compute_covariances(&cfg.channel, &cfg.frame, draws, cfg.covariance.seed)?;
            cov.save(&out)?;
            println!("wrote {}", out.display());
        }
        Command::Constellation { order, out } => {
            let spec = ConstellationSpec::build_augmented_qam(order)?;
            let mut text = Vec::new();
            spec.write_table(&mut text).map_err(|e| Error::io(&out, e))?;
            std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
            println!("wrote {}", out.display());
        }
        Command::Plot { csv, out, title } => {
            let mut series = Vec::new();
            for path in &csv {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                for mut s in harness::series_from_results(&harness::read_results(path)?) {
                    if csv.len() > 1 {
                        s.label = format!("{stem}: {}", s.label);
                    }
                    series.push(s);
                }
            }
            harness::emit_plot(&series, &out, &title)?;
            println!("wrote {}", out.display());
        }
        Command::Rates { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!("scheme\torder\tldpc_rate\tshaping_rate\teffective_rate\tnet_rate\tpi_outer\tp_avg\tpapr");
            for s in cfg.resolve(&config_dir(&config))? {
                let link = &s.link;
                let shaping_rate = link.shaping.as_ref().map_or(0.0, |c| c.rate());
                let pi = link.outer_probability();
                println!(
                    "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                    s.name,
                    link.constellation.order(),
                    link.ldpc.rate(),
                    shaping_rate,
                    link.effective_rate(),
                    link.net_rate(),
                    pi,
                    link.average_power(),
                    link.constellation.papr(pi),
                );
            }
        }
    }
    Ok(())
}

/// 2 for anything wrong with the inputs, 3 for I/O and output failures.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Csv(_) | Error::Plot(_) => 3,
        Error::Cache { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
