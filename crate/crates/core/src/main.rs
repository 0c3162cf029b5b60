use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use elephant::dfb::{self, FrameSource, ImageFormat, ServeOptions, WorkerSpec};
use elephant::harness::{bench, bench_traversal, report_profile, BenchConfig};
use elephant::ingest::{load_scene_file, merge_scene_quads, parse_pbrt_file, write_biff_file, write_pbrt};
use elephant::render::{DenoiseParams, write_pfm, write_png, DisplayImage, Mode, RenderConfig, RenderScene, SceneOptions};
use elephant::scene::{materialize_preset, scene_stats, Preset, SceneDesc};

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn parse_res(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let p = |v: &str| v.parse::<u32>().ok().filter(|&v| v > 0).ok_or(format!("bad dimension `{v}`"));
    Ok((p(w)?, p(h)?))
}

#[derive(Parser)]
#[command(name = "elephant", version, about = "Path tracer for large instanced scenes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct SceneArg {
    /// Scene file (.pbrt or .biff)
    scene: Option<PathBuf>,
    /// Generate a preset instead of loading a file
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Convert PBRT text to BIFF
    Convert {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        no_quad_merge: bool,
    },
    /// Print scene statistics
    Stats {
        scene: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Generate a procedural scene (.pbrt or .biff by extension)
    Gen {
        #[arg(long)]
        preset: Preset,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        /// Texels per face edge for textured presets
        #[arg(long, default_value_t = 16)]
        face_res: u16,
    },
    /// Render to PNG
    Render {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value_t = 16)]
        spp: u32,
        #[arg(long, default_value_t = 5)]
        depth: u32,
        #[arg(long, value_parser = parse_res)]
        res: Option<(u32, u32)>,
        #[arg(long, default_value = "pathtrace")]
        mode: Mode,
        #[arg(long)]
        denoise: bool,
        #[arg(long)]
        deterministic: bool,
        #[arg(long, default_value_t = 1.0)]
        exposure: f32,
        #[arg(long, default_value = "inline")]
        workers: WorkerSpec,
        #[arg(short, long, default_value = "out.png")]
        output: PathBuf,
        /// Write PREFIX_color.pfm, PREFIX_albedo.pfm and PREFIX_normal.pfm
        #[arg(long)]
        dump_features: Option<String>,
    },
    /// Warm-up plus steady-state timing
    Bench {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value_t = 64)]
        warmup: u32,
        #[arg(long, default_value_t = 64)]
        measure: u32,
        #[arg(long, value_parser = parse_res, default_value = "1536x644")]
        res: (u32, u32),
        #[arg(long, default_value_t = 5)]
        depth: u32,
        #[arg(long, default_value = "inline")]
        workers: WorkerSpec,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Primary-ray traversal only
        #[arg(long)]
        traversal_only: bool,
    },
    /// Serve one interactive viewer over WebSocket
    Serve {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value = "127.0.0.1:9030")]
        listen: String,
        #[arg(long, default_value = "inline")]
        workers: WorkerSpec,
        #[arg(long, value_parser = parse_res, default_value = "768x322")]
        res: (u32, u32),
        #[arg(long, default_value_t = 5)]
        depth: u32,
        #[arg(long)]
        denoise: bool,
        #[arg(long)]
        png: bool,
        #[arg(long)]
        max_frames: Option<u64>,
    },
    /// Render tiles for a head node
    Worker {
        #[arg(long)]
        connect: String,
        #[arg(long, default_value_t = 0)]
        id: u32,
    },
}

fn load(arg: &SceneArg) -> Res<(String, SceneDesc, PathBuf)> {
    match (&arg.scene, arg.preset) {
        (Some(p), _) => {
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((p.display().to_string(), load_scene_file(p)?, base))
        }
        (None, Some(preset)) => {
            let dir = std::env::temp_dir().join(format!("elephant-{}-{}", preset.name(), arg.seed));
            let (scene, _) = materialize_preset(preset, arg.seed, &dir, 16)?;
            Ok((format!("{}:{}", preset.name(), arg.seed), scene, dir))
        }
        (None, None) => Err("give a scene file or --preset".into()),
    }
}

fn run(cli: Cli) -> Res<()> {
    match cli.cmd {
        Cmd::Convert { input, output, no_quad_merge } => {
            let mut scene = parse_pbrt_file(&input)?;
            if !no_quad_merge {
                let m = merge_scene_quads(&mut scene);
                println!("merged {} meshes ({} triangles -> {} quads), kept {}", m.merged_meshes, m.triangles_before, m.quads_after, m.kept_meshes);
            }
            let bytes = write_biff_file(&scene, &output)?;
            println!("wrote {} ({bytes} bytes)", output.display());
        }
        Cmd::Stats { scene, json } => {
            let s = scene_stats(&load_scene_file(&scene)?);
            if json {
                println!("{}", serde_json::to_string_pretty(&s)?);
            } else {
                print!("{}", s.to_table());
            }
        }
        Cmd::Gen { preset, seed, output, face_res } => {
            let dir = output.parent().map(Path::to_path_buf).unwrap_or_default();
            let (scene, manifest) = materialize_preset(preset, seed, &dir, face_res)?;
            if output.extension().is_some_and(|e| e == "biff") {
                write_biff_file(&scene, &output)?;
            } else {
                let mut f = std::io::BufWriter::new(std::fs::File::create(&output)?);
                write_pbrt(&scene, &mut f)?;
            }
            let mpath = output.with_extension("manifest.json");
            std::fs::write(&mpath, serde_json::to_string_pretty(&manifest)?)?;
            println!("wrote {} and {}", output.display(), mpath.display());
        }
        Cmd::Render { scene, spp, depth, res, mode, denoise, deterministic, exposure, workers, output, dump_features } => {
            let (_, desc, base) = load(&scene)?;
            let (w, h) = res
                .or(desc.camera.as_ref().map(|c| (c.resolution[0], c.resolution[1])))
                .unwrap_or((640, 360));
            let config = RenderConfig { max_path_depth: depth, samples_per_frame: 1, mode, deterministic, seed: scene.seed };
            let opts = SceneOptions { base_dir: base, ..Default::default() };
            let mut source = workers.start(desc, &opts, config, w, h)?;
            let mut results = Vec::new();
            for _ in 0..spp.max(1) {
                results.push(source.render_next()?);
            }
            let fb = source.framebuffer();
            let samples = fb.sample_count().unwrap_or(1);
            let color = fb.color_image();
            let (albedo, normal) = (fb.albedo_image(), fb.normal_image());
            let image = if denoise {
                elephant::render::denoise(&color, &albedo, &normal, w, h, samples, &DenoiseParams::default())?
            } else {
                color.clone()
            };
            write_png(&output, &DisplayImage::from_linear(w, h, &image, &fb.cost_image(), samples, mode, exposure))?;
            if let Some(prefix) = dump_features {
                write_pfm(Path::new(&format!("{prefix}_color.pfm")), w, h, &color)?;
                write_pfm(Path::new(&format!("{prefix}_albedo.pfm")), w, h, &albedo)?;
                write_pfm(Path::new(&format!("{prefix}_normal.pfm")), w, h, &normal)?;
            }
            let ms: f64 = results.iter().map(|r| r.stats.frame_millis).sum();
            let rays: u64 = results.iter().map(|r| r.stats.rays_traced).sum();
            println!("wrote {} ({w}x{h}, {samples} spp, {ms:.1} ms, {:.3} Mray/s)", output.display(), rays as f64 / (ms * 1e3));
            if let Some(r) = results.last() {
                print!("{}", report_profile(&[("last frame", &r.stats)])?);
            }
        }
        Cmd::Bench { scene, warmup, measure, res, depth, workers, json, traversal_only } => {
            let (id, desc, base) = load(&scene)?;
            if traversal_only {
                let rs = RenderScene::build(desc, &SceneOptions { base_dir: base, ..Default::default() })?;
                let r = bench_traversal(&rs, res.0, res.1, measure.max(1));
                println!("rays={} hits={} seconds={:.3} mrays_per_s={:.3}", r.rays, r.hits, r.seconds, r.mrays_per_second);
                println!(
                    "tlas_nodes={} blas_nodes={} instance_visits={} primitive_tests={}",
                    r.counters.tlas_nodes, r.counters.blas_nodes, r.counters.instance_visits, r.counters.primitive_tests
                );
                return Ok(());
            }
            let cfg = BenchConfig { width: res.0, height: res.1, max_path_depth: depth, warmup, measure, workers, seed: scene.seed, ..Default::default() };
            let report = bench(&id, desc, &base, &cfg)?;
            print!("{}", report.to_table());
            print!("{}", report.to_key_values());
            if let Some(p) = json {
                std::fs::write(p, serde_json::to_string_pretty(&report)?)?;
            }
        }
        Cmd::Serve { scene, listen, workers, res, depth, denoise, png, max_frames } => {
            let (_, desc, base) = load(&scene)?;
            let listener = dfb::bind(&listen)?;
            let config = RenderConfig { max_path_depth: depth, ..Default::default() };
            let mut source: Box<dyn FrameSource> = workers.start(desc, &SceneOptions { base_dir: base, ..Default::default() }, config, res.0, res.1)?;
            println!("listening on {listen}");
            let opts = ServeOptions { denoise, format: if png { ImageFormat::Png } else { ImageFormat::Raw }, max_frames, ..Default::default() };
            let summary = dfb::serve(&listener, source.as_mut(), &opts)?;
            println!("session ended: {} frames sent, {} rendered", summary.frames_sent, summary.frames_rendered);
        }
        Cmd::Worker { connect, id } => {
            let stream = std::net::TcpStream::connect(&connect)?;
            dfb::run_worker(dfb::tcp_connection(stream)?, id)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
