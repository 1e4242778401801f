use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use quadpatch::cache::{read_cache, write_cache};
use quadpatch::edge::detect_edges;
use quadpatch::pipeline::{image_seed, sweep_split_values};
use quadpatch::{
    attention_cost, build_quadtree, preprocess_dataset, process_image, reconstruct_mask,
    render_overlay, stats_report, uniform_grid_patch, ApfConfig, CacheRecord, DatasetManifest,
    Error, GrayImage, RasterImage, Result,
};

#[derive(Parser)]
#[command(name = "quadpatch", version, about = "Adaptive quadtree patching for high-resolution images")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Patch a single image into a one-record cache.
    Patch {
        image: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write a leaf-boundary overlay PNG.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Also dump the quadtree as JSON.
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Preprocess every image of a JSON manifest.
    Dataset {
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Write the statistics report here instead of stdout.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Uniform-grid baseline tokens.
    Grid {
        image: PathBuf,
        #[arg(long)]
        patch: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sequence statistics of a cache, or a split-value sweep over a manifest.
    Stats {
        cache: Option<PathBuf>,
        /// Manifest whose images are swept (requires --sweep).
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Comma separated split values.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<u64>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attention-score cost of uniform vs adaptive sequences.
    Cost {
        #[arg(long)]
        resolution: u64,
        #[arg(long)]
        patch: u64,
        /// Adaptive sequence length to compare against.
        #[arg(long)]
        adaptive: Option<u64>,
    },
    /// Render the quadtree leaves over an image.
    Viz {
        image: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the Canny edge map as a 1-bit PNG.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Rebuild a full-resolution mask from cached tokens.
    Reconstruct {
        cache: PathBuf,
        #[arg(long, default_value_t = 0)]
        record: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Default)]
struct ConfigArgs {
    /// Split value v.
    #[arg(long)]
    split_value: Option<u64>,
    /// Depth limit H.
    #[arg(long)]
    depth: Option<u32>,
    /// Gaussian kernel size k.
    #[arg(long)]
    kernel: Option<u32>,
    #[arg(long)]
    t_low: Option<f64>,
    #[arg(long)]
    t_high: Option<f64>,
    /// Token side P_m.
    #[arg(long)]
    patch_size: Option<u32>,
    /// Sequence length L.
    #[arg(long)]
    seq_len: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Derive kernel and depth limit from the image resolution.
    #[arg(long)]
    schedule: bool,
}

impl ConfigArgs {
    fn apply(&self, mut cfg: ApfConfig) -> ApfConfig {
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { cfg.$field = v; })*
            };
        }
        set!(
            split_value => split_value,
            depth => depth_limit,
            kernel => kernel,
            t_low => t_low,
            t_high => t_high,
            patch_size => patch_size,
            seq_len => seq_len,
            seed => seed
        );
        cfg
    }

    fn for_image(&self, img: &RasterImage) -> ApfConfig {
        let mut cfg = ApfConfig::default();
        if self.schedule {
            cfg = cfg.with_schedule(img.width.max(img.height));
        }
        self.apply(cfg)
    }
}

fn write_json(path: Option<&Path>, json: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Patch {
            image,
            mask,
            config,
            out,
            overlay,
            tree,
        } => {
            let img = RasterImage::load(&image)?;
            let mask = mask.map(|m| GrayImage::<f32>::load(&m)).transpose()?;
            let cfg = config.for_image(&img);
            let start = Instant::now();
            let done = process_image(&img, mask.as_ref(), &cfg, image_seed(cfg.seed, 0))?;
            let record = CacheRecord {
                image_id: image.to_string_lossy().into_owned(),
                sequence: done.sequence,
                mask: done.mask,
            };
            write_cache(&out, std::slice::from_ref(&record))?;
            let elapsed = start.elapsed();
            if let Some(p) = overlay {
                render_overlay(&img, &done.tree).save_png(&p)?;
            }
            if let Some(p) = tree {
                fs::write(p, done.tree.to_json()?)?;
            }
            println!(
                "leaves={} seq_len={} dropped={} grid={} depth={} time_ms={:.1}",
                record.sequence.leaf_count,
                record.sequence.len(),
                record.sequence.dropped(),
                done.tree.grid_size,
                done.tree.effective_depth(),
                elapsed.as_secs_f64() * 1e3
            );
        }
        Command::Dataset {
            manifest,
            config,
            out,
            stats,
        } => {
            let mut m = DatasetManifest::load(&manifest)?;
            m.config = config.apply(m.config);
            m.auto_schedule |= config.schedule;
            let report = preprocess_dataset(&m, &out)?;
            for t in &report.timings {
                eprintln!("{}: {:.3} s", t.image_id, t.seconds);
            }
            for s in &report.skipped {
                eprintln!("skipped {}: {}", s.image.display(), s.reason);
            }
            eprintln!(
                "{} records in {:.3} s",
                report.stats.images, report.total_seconds
            );
            write_json(stats.as_deref(), &report.stats.to_json()?)?;
        }
        Command::Grid { image, patch, out } => {
            let img = RasterImage::load(&image)?;
            let seq = uniform_grid_patch::<f32>(&img, patch)?;
            let n = seq.len();
            write_cache(
                &out,
                &[CacheRecord {
                    image_id: image.to_string_lossy().into_owned(),
                    sequence: seq,
                    mask: None,
                }],
            )?;
            println!("N={n}");
        }
        Command::Stats {
            cache,
            manifest,
            sweep,
            config,
            out,
        } => {
            let mut report = match &cache {
                Some(c) => stats_report(c)?,
                None => quadpatch::StatsReport::from_images(Vec::new()),
            };
            if !sweep.is_empty() {
                let path = manifest.ok_or_else(|| {
                    Error::Config("--sweep needs --manifest".into())
                })?;
                let m = DatasetManifest::load(&path)?;
                let cfg = config.apply(m.config);
                let images = m
                    .entries
                    .iter()
                    .map(|e| {
                        let p = path.parent().unwrap_or(Path::new(".")).join(&e.image);
                        RasterImage::load(&p)
                    })
                    .collect::<Result<Vec<_>>>()?;
                report.sweep = sweep_split_values(&images, &cfg, &sweep)?;
            } else if cache.is_none() {
                return Err(Error::Config("stats needs a cache or --sweep".into()));
            }
            write_json(out.as_deref(), &report.to_json()?)?;
        }
        Command::Cost {
            resolution,
            patch,
            adaptive,
        } => {
            let c = attention_cost(resolution, patch, adaptive)?;
            println!("N={}", c.uniform_length);
            println!("entries={}", c.uniform_entries);
            if let (Some(n), Some(e), Some(r)) = (c.adaptive_length, c.adaptive_entries, c.reduction)
            {
                println!("adaptive_N={n}");
                println!("adaptive_entries={e}");
                println!("reduction={r:.2}");
            }
        }
        Command::Viz {
            image,
            config,
            out,
            edges,
        } => {
            let img = RasterImage::load(&image)?;
            let cfg = config.for_image(&img);
            cfg.validate()?;
            let edge_map = detect_edges::<f32>(&img, &cfg.edge_config())?;
            let tree = build_quadtree(&edge_map, cfg.split_value, cfg.depth_limit);
            render_overlay(&img, &tree).save_png(&out)?;
            if let Some(p) = edges {
                edge_map.save_png(&p)?;
            }
            println!("leaves={}", tree.leaf_count());
        }
        Command::Reconstruct { cache, record, out } => {
            let records = read_cache::<f32>(&cache)?;
            let rec = records.get(record).ok_or_else(|| {
                Error::CorruptCache(format!("record {record} not found ({} records)", records.len()))
            })?;
            // Mask tokens when present, otherwise the channel mean of the image tokens.
            let source = rec.mask.as_ref().unwrap_or(&rec.sequence);
            let ch = source.geometry.channels as usize;
            let preds: Vec<Vec<f32>> = source
                .real_tokens()
                .map(|t| {
                    t.pixels
                        .chunks_exact(ch)
                        .map(|px| px.iter().sum::<f32>() / ch as f32)
                        .collect()
                })
                .collect();
            let img = reconstruct_mask(source, &preds)?;
            img.save_png(&out)?;
            println!("wrote {}x{} mask", img.width, img.height);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
