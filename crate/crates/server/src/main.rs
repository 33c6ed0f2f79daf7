use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use concept_lens::cluster::{build_hierarchy, Hierarchy, HierarchyKind};
use concept_lens::consistency::{ColorDomain, EditGrid};
use concept_lens::extraction::{extract_budget, ExtractionConfig};
use concept_lens::store::{load_store, load_weight_bundle, write_directions, write_store, FeatureStore};
use concept_lens::synthetic::{generate_planted, SyntheticConfig};
use concept_lens_server::indices::parse_index_list;
use concept_lens_server::placeholder::write_placeholders;
use concept_lens_server::report::consistency_report;
use concept_lens_server::{router, AppState, ServeConfig, Session};

#[derive(Parser)]
#[command(name = "concept-lens", version, about = "Dual-hierarchy analytics over latent edit grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic store with planted concept and code groups.
    Synth {
        #[arg(long, default_value_t = 24)]
        codes: usize,
        #[arg(long, default_value_t = 16)]
        directions: usize,
        #[arg(long, default_value_t = 16)]
        feature_dim: usize,
        #[arg(long, default_value_t = 8)]
        latent_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
        #[arg(long, default_value_t = 4)]
        concept_groups: usize,
        #[arg(long, default_value_t = 3)]
        code_groups: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write placeholder images here, plus a manifest next to them.
        #[arg(long)]
        images: Option<PathBuf>,
        /// Planted labels as JSON.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Harvest concept directions from a weight bundle.
    Extract {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 400)]
        budget: usize,
        #[arg(long, default_value_t = 20)]
        top_k: usize,
        #[arg(long)]
        drop_rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep the singular vector with the largest singular value.
        #[arg(long)]
        keep_first: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build one hierarchy, optionally steered by an opposite-side index list.
    Cluster {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        kind: HierarchyKind,
        #[arg(long)]
        condition: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-node mean, std and color for a hierarchy.
    Stats {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        hierarchy: PathBuf,
        /// Opposite-side leaf indices to condition on.
        #[arg(long)]
        select: Option<PathBuf>,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 0.1)]
        gap_max: f64,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
}

fn read_indices(path: &Path) -> anyhow::Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_index_list(&text)?)
}

fn load_f64(path: &Path) -> anyhow::Result<FeatureStore<f64>> {
    Ok(load_store::<f32>(path).with_context(|| format!("loading store {}", path.display()))?.cast())
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.write_all(b"\n")?;
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn synth(
    cfg: SyntheticConfig,
    out: &Path,
    images: Option<&Path>,
    truth: Option<&Path>,
) -> anyhow::Result<()> {
    let (store, planted) = generate_planted::<f32>(&cfg)?;
    write_store(&store, out)?;
    if let Some(dir) = images {
        let manifest = write_placeholders(dir, cfg.num_codes, cfg.num_directions)?;
        manifest.write(dir.join("manifest.json"))?;
    }
    if let Some(path) = truth {
        let doc = serde_json::json!({
            "concept_groups": planted.concept_groups,
            "concept_subgroups": planted.concept_subgroups,
            "code_groups": planted.code_groups,
            "steer_group": planted.steer_group,
        });
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(())
}

async fn serve(cfg: ServeConfig, host: String, port: u16) -> anyhow::Result<()> {
    let addr: SocketAddr = format!("{host}:{port}").parse().context("bad host/port")?;
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    let state = AppState::pending();
    println!("listening on http://{}", listener.local_addr()?);
    std::io::stdout().flush()?;

    let loader = state.clone();
    tokio::task::spawn_blocking(move || match Session::open(&cfg) {
        Ok(session) => {
            loader.install(session);
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "session ready").and_then(|_| out.flush());
        }
        Err(e) => {
            eprintln!("error: cannot open session: {e}");
            std::process::exit(1);
        }
    });
    axum::serve(listener, router(state)).await?;
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth { codes, directions, feature_dim, latent_dim, seed, noise, concept_groups, code_groups, out, images, truth } => {
            let mut cfg = SyntheticConfig::new(codes, directions, feature_dim, latent_dim, seed);
            cfg.noise = noise;
            cfg.concept_groups = concept_groups;
            cfg.code_groups = code_groups;
            synth(cfg, &out, images.as_deref(), truth.as_deref())
        }
        Command::Extract { weights, budget, top_k, drop_rows, seed, keep_first, out } => {
            let bundle = load_weight_bundle::<f32>(&weights)?.layers().to_vec();
            let bundle = concept_lens::store::WeightBundle::new(
                bundle
                    .into_iter()
                    .map(|l| concept_lens::store::WeightLayer { name: l.name, matrix: l.matrix.map(f64::from) })
                    .collect(),
            )?;
            let cfg = ExtractionConfig { rows_to_drop: drop_rows, top_k, exclude_first: !keep_first, budget, seed };
            let set = extract_budget(&bundle, &cfg)?;
            write_directions(&set.directions.map(|x| x as f32), &out)?;
            eprintln!("{} directions from {} rounds, {} flagged as repeats", set.len(), set.rounds(), set.duplicate_count());
            Ok(())
        }
        Command::Cluster { store, kind, condition, out } => {
            let store = load_f64(&store)?;
            let condition = condition.as_deref().map(read_indices).transpose()?;
            let h = build_hierarchy(&store, kind, condition.as_deref())?;
            h.write(&out)?;
            Ok(())
        }
        Command::Stats { store, hierarchy, select, out } => {
            let store = load_f64(&store)?;
            let h = Hierarchy::<f64>::load(&hierarchy).with_context(|| format!("loading {}", hierarchy.display()))?;
            let expected = match h.kind {
                HierarchyKind::Concept => store.num_directions(),
                HierarchyKind::Code => store.num_codes(),
            };
            if h.num_leaves() != expected {
                bail!("{} hierarchy has {} leaves but the store has {expected}", h.kind, h.num_leaves());
            }
            let select = select.as_deref().map(read_indices).transpose()?;
            let grid = EditGrid::new(&store);
            let domain = ColorDomain::from_grid(&grid)?;
            let report = consistency_report(&grid, &domain, &h, select.as_deref())?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&report)?)
        }
        Command::Serve { store, manifest, images, port, host, gap_max, depth } => {
            let cfg = ServeConfig { store, manifest, images, gap_max, depth };
            tokio::runtime::Runtime::new()?.block_on(serve(cfg, host, port))
        }
    }
}
