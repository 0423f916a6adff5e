//! Command-line frontend. One subcommand per pipeline stage, so each stage's
//! output can be inspected, cached, or swapped out. Every run prints a
//! reproducibility header (`# key = value`) with the parameters that shaped
//! the result — including derived scales like the support radius — and
//! mirrors it into a `<out>.meta.json` sidecar next to the output file.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use hopc::descriptor::DirectionSet;
use hopc::detect::detect;
use hopc::eval::{cross_view, generate_dataset, DatasetSpec, EvalParams};
use hopc::io::ply::export_ply;
use hopc::io::{
    load_codebook, load_desc, load_pcseq, load_stks, save_codebook, save_desc, save_pcseq,
    save_stks, DescFile, SequenceManifest, StkFile,
};
use hopc::local::{holistic_hopc, CellGrid};
use hopc::pipeline::{
    action_descriptor, bow_histogram, decision_scores, describe_stks, fscore_columns, kmeans,
    l1_normalized, predict, select_features, sequence_features, train, FeatureMode,
    PipelineParams, SequenceFeatures, SvmParams, TrainedModel,
};
use hopc::stkd::NormalizationMode;
use hopc::synth::{synth_generate, MotionKind, SynthSpec};

#[derive(Parser)]
#[command(
    name = "hopc",
    version,
    about = "View-, scale- and speed-invariant action descriptors for 3D pointcloud sequences"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Convert a depth-image manifest into a pointcloud sequence.
    Convert {
        /// JSON manifest listing depth frames and camera intrinsics.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic articulated motion sequence.
    Synth {
        /// JSON motion spec (kind, speed, height, camera, noise, frames, seed).
        #[arg(long)]
        spec: PathBuf,
        /// Override the seed from the spec file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the ground-truth moving-point mask as a JSON array
        /// (one entry per sampled point, valid for every frame).
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Detect spatio-temporal keypoints in a sequence.
    Detect(DetectArgs),
    /// Compute one local descriptor per detected keypoint.
    Describe(DescribeArgs),
    /// Compute the holistic whole-sequence descriptor (view-dependent).
    Holistic(HolisticArgs),
    /// Cluster local descriptors into a codebook.
    Codebook(CodebookArgs),
    /// Train a classifier from per-sequence descriptor files.
    Train(TrainArgs),
    /// Classify a sequence with a trained model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run the synthetic cross-view benchmark.
    Evaluate(EvaluateArgs),
    /// Export detected keypoints as an ASCII PLY pointcloud.
    ExportPly {
        #[arg(long)]
        stks: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Support radius as a fraction of the subject's spatial extent.
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    /// Eigenratio threshold for keypoint acceptance.
    #[arg(long, default_value_t = 1.3)]
    theta_stk: f64,
    /// Keypoint budget per sequence.
    #[arg(long, default_value_t = 400)]
    nk: usize,
    /// Fixed support radius, overriding sigma.
    #[arg(long)]
    radius: Option<f64>,
    /// Temporal half-window bound, overriding ceil(0.2 * frames).
    #[arg(long)]
    tau_max: Option<usize>,
    /// Evaluate every stride-th point of each frame.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Minimum quality factor for a keypoint to survive.
    #[arg(long, default_value_t = 1e-6)]
    quality_floor: f64,
    /// Suppression radius as a fraction of the support radius.
    #[arg(long, default_value_t = 0.5)]
    r_prime_frac: f64,
    /// Temporal suppression half-window, frames.
    #[arg(long, default_value_t = 2)]
    tau_prime: usize,
    /// Project onto unnormalized polytope directions (fidelity experiments).
    #[arg(long)]
    raw_directions: bool,
}

#[derive(Args)]
struct DescribeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Keypoint file produced by `detect`.
    #[arg(long)]
    stks: PathBuf,
    /// Cell grid as XxYxT.
    #[arg(long, default_value = "2x2x3")]
    grid: String,
    /// Eigenratio threshold for cell descriptors.
    #[arg(long, default_value_t = 1.3)]
    theta_l: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    raw_directions: bool,
}

#[derive(Args)]
struct HolisticArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Cell grid as XxYxT.
    #[arg(long, default_value = "6x5x3")]
    grid: String,
    /// Fixed temporal half-window, frames.
    #[arg(long, default_value_t = 2)]
    tau: usize,
    /// Support radius as a fraction of the subject's spatial extent.
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    /// Fixed support radius, overriding sigma.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    raw_directions: bool,
}

#[derive(Args)]
struct CodebookArgs {
    /// Directory of .bin descriptor files from `describe`.
    #[arg(long)]
    descs: PathBuf,
    /// Number of codewords.
    #[arg(long, default_value_t = 1500)]
    k: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of .bin descriptor files from `describe`.
    #[arg(long)]
    features: PathBuf,
    /// JSON object mapping descriptor file names to integer class labels.
    #[arg(long)]
    labels: PathBuf,
    /// Fraction of codewords kept by feature mining.
    #[arg(long, default_value_t = 0.98)]
    keep: f64,
    /// Soft-margin penalty.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    out: PathBuf,
    /// Reuse an existing codebook instead of clustering.
    #[arg(long)]
    codebook: Option<PathBuf>,
    /// Number of codewords when clustering here.
    #[arg(long, default_value_t = 1500)]
    k: usize,
    /// Clustering seed when clustering here.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Feature mode: combined, bow, or stkd.
    #[arg(long, default_value = "combined")]
    mode: String,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Evaluation protocol; only cross-view is available.
    #[arg(long, default_value = "cross-view")]
    protocol: String,
    /// Training camera views, e.g. V1,V2 (V1 = 0 deg, step 45 deg).
    #[arg(long)]
    train_views: String,
    /// Held-out camera views, e.g. V3.
    #[arg(long)]
    test_views: String,
    /// Summary CSV destination.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1500)]
    k: usize,
    #[arg(long, default_value_t = 0.98)]
    keep: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Subject analogues per motion class.
    #[arg(long, default_value_t = 5)]
    subjects: usize,
    #[arg(long, default_value_t = 32)]
    frames: usize,
    /// Points per frame.
    #[arg(long, default_value_t = 260)]
    points: usize,
    /// Depth noise sigma, meters.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Base speed multiplier.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Dataset base seed.
    #[arg(long, default_value_t = 1234)]
    seed: u64,
    #[arg(long, default_value_t = 7)]
    codebook_seed: u64,
    /// Keypoint budget per sequence.
    #[arg(long, default_value_t = 400)]
    nk: usize,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
}

enum CliError {
    /// Bad invocation: out-of-range parameter, malformed flag value. Exit 2.
    Usage(String),
    /// Bad world: unreadable, malformed, or inconsistent files. Exit 3.
    Data(String),
}

impl From<hopc::Error> for CliError {
    fn from(e: hopc::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn require(cond: bool, msg: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg.to_string()))
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Prefix library errors with the file they came from.
fn in_file<T>(path: &Path, r: hopc::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Reproducibility header: printed to standard output and mirrored as JSON
/// next to the output file.
struct Meta {
    command: &'static str,
    entries: Vec<(String, String)>,
}

impl Meta {
    fn new(command: &'static str) -> Self {
        Meta {
            command,
            entries: Vec::new(),
        }
    }

    fn add(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    fn print(&self) {
        println!("# hopc {}", self.command);
        for (k, v) in &self.entries {
            println!("# {k} = {v}");
        }
    }

    fn sidecar(&self, out: &Path) -> Result<(), CliError> {
        let mut params = serde_json::Map::new();
        for (k, v) in &self.entries {
            params.insert(k.clone(), serde_json::Value::String(v.clone()));
        }
        let doc = serde_json::json!({ "command": self.command, "params": params });
        let path = PathBuf::from(format!("{}.meta.json", out.display()));
        write_text(&path, &serde_json::to_string_pretty(&doc).expect("meta serializes"))
    }
}

fn parse_grid(s: &str) -> Result<CellGrid, CliError> {
    let bad = || CliError::Usage(format!("grid must look like 2x2x3, got {s:?}"));
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut dims = [0usize; 3];
    for (d, p) in dims.iter_mut().zip(&parts) {
        *d = p.trim().parse().map_err(|_| bad())?;
        if *d == 0 {
            return Err(CliError::Usage("grid dimensions must be positive".into()));
        }
    }
    Ok(CellGrid::new(dims[0], dims[1], dims[2]))
}

/// "V1,V3" -> zero-based view indices [0, 2].
fn parse_views(spec: &str) -> Result<Vec<usize>, CliError> {
    let mut views = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let digits = part
            .strip_prefix('V')
            .or_else(|| part.strip_prefix('v'))
            .unwrap_or(part);
        let n: usize = digits
            .parse()
            .map_err(|_| CliError::Usage(format!("bad view {part:?}; expected V1, V2, ...")))?;
        if n == 0 {
            return Err(CliError::Usage("views are numbered from V1".into()));
        }
        views.push(n - 1);
    }
    views.sort_unstable();
    views.dedup();
    Ok(views)
}

fn directions(raw: bool) -> DirectionSet {
    if raw {
        hopc::descriptor::dodecahedron_raw()
    } else {
        hopc::descriptor::dodecahedron()
    }
}

/// Descriptor files in a directory, sorted by name for determinism.
fn desc_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
            .path();
        if path.extension().is_some_and(|e| e == "bin") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!(
            "no .bin descriptor files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

fn normalization_name(mode: NormalizationMode) -> &'static str {
    match mode {
        NormalizationMode::PerAxis => "per-axis",
        NormalizationMode::Isotropic => "isotropic",
    }
}

fn cmd_convert(manifest_path: &Path, out: &Path) -> Result<(), CliError> {
    let manifest = in_file(manifest_path, SequenceManifest::load(manifest_path))?;
    let seq = hopc::io::convert(&manifest, manifest_path)?;
    in_file(out, save_pcseq(out, &seq))?;
    let mut meta = Meta::new("convert");
    meta.add("manifest", manifest_path.display())
        .add("id", &manifest.id)
        .add("action_label", &manifest.action_label)
        .add("view_id", &manifest.view_id)
        .add("frames", seq.frames.len())
        .add("points", seq.total_points());
    meta.print();
    meta.sidecar(out)
}

fn cmd_synth(
    spec_path: &Path,
    seed: Option<u64>,
    out: &Path,
    mask: Option<&Path>,
) -> Result<(), CliError> {
    let mut spec = in_file(spec_path, SynthSpec::from_json(&read_text(spec_path)?))?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let g = synth_generate(&spec)?;
    in_file(out, save_pcseq(out, &g.seq))?;
    if let Some(mask_path) = mask {
        let text = serde_json::to_string(&g.moving).expect("mask serializes");
        write_text(mask_path, &text)?;
    }
    let mut meta = Meta::new("synth");
    meta.add("motion", spec.motion.as_str())
        .add("speed", spec.speed)
        .add("height", spec.height)
        .add("yaw_deg", spec.camera.yaw_deg)
        .add("pitch_deg", spec.camera.pitch_deg)
        .add("roll_deg", spec.camera.roll_deg)
        .add("noise_sigma", spec.noise_sigma)
        .add("frames", spec.frames)
        .add("points_per_frame", spec.points_per_frame)
        .add("seed", spec.seed);
    meta.print();
    meta.sidecar(out)
}

fn cmd_detect(a: &DetectArgs) -> Result<(), CliError> {
    require(a.sigma.is_finite() && a.sigma > 0.0, "sigma must be positive")?;
    require(a.theta_stk.is_finite() && a.theta_stk > 1.0, "theta-stk must exceed 1")?;
    require(a.nk >= 1, "nk must be at least 1")?;
    require(a.stride >= 1, "stride must be at least 1")?;
    require(
        a.quality_floor.is_finite() && a.quality_floor >= 0.0,
        "quality-floor must be non-negative",
    )?;
    require(
        a.r_prime_frac.is_finite() && a.r_prime_frac > 0.0,
        "r-prime-frac must be positive",
    )?;
    if let Some(r) = a.radius {
        require(r.is_finite() && r > 0.0, "radius must be positive")?;
    }
    if let Some(t) = a.tau_max {
        require(t >= 1, "tau-max must be at least 1")?;
    }

    let seq = in_file(&a.input, load_pcseq(&a.input))?;
    let pp = PipelineParams {
        sigma: a.sigma,
        radius_override: a.radius,
        tau_max_override: a.tau_max,
        theta_stk: a.theta_stk,
        r_prime_frac: a.r_prime_frac,
        tau_prime: a.tau_prime,
        n_k: a.nk,
        quality_floor: a.quality_floor,
        stride: a.stride,
        raw_directions: a.raw_directions,
        ..PipelineParams::default()
    };
    let dirs = pp.direction_set();
    let r = pp.radius_for(&seq)?;
    let tau_max = pp.tau_max_for(&seq);
    let stks = detect(&seq, &pp.detector_params(r), tau_max, &dirs)?;
    let n = stks.len();
    in_file(&a.out, save_stks(&a.out, &StkFile { r, tau_max, stks }))?;

    let mut meta = Meta::new("detect");
    meta.add("input", a.input.display())
        .add("sigma", a.sigma)
        .add("r", r)
        .add("tau_max", tau_max)
        .add("theta_stk", a.theta_stk)
        .add("nk", a.nk)
        .add("r_prime", r * a.r_prime_frac)
        .add("tau_prime", a.tau_prime)
        .add("stride", a.stride)
        .add("quality_floor", a.quality_floor)
        .add("raw_directions", a.raw_directions)
        .add("frames", seq.frames.len())
        .add("stks", n);
    meta.print();
    meta.sidecar(&a.out)
}

fn cmd_describe(a: &DescribeArgs) -> Result<(), CliError> {
    require(a.theta_l.is_finite() && a.theta_l > 1.0, "theta-l must exceed 1")?;
    let grid = parse_grid(&a.grid)?;
    let seq = in_file(&a.input, load_pcseq(&a.input))?;
    let sf = in_file(&a.stks, load_stks(&a.stks))?;
    let dirs = directions(a.raw_directions);
    let rows = describe_stks(&seq, &sf.stks, sf.r, &grid, a.theta_l, &dirs)?;
    let n = rows.len();
    in_file(
        &a.out,
        save_desc(
            &a.out,
            &DescFile {
                r: sf.r,
                stks: sf.stks,
                rows,
            },
        ),
    )?;

    let mut meta = Meta::new("describe");
    meta.add("input", a.input.display())
        .add("stks_file", a.stks.display())
        .add("grid", &a.grid)
        .add("theta_l", a.theta_l)
        .add("r", sf.r)
        .add("tau_max", sf.tau_max)
        .add("raw_directions", a.raw_directions)
        .add("descriptors", n)
        .add("dim", grid.descriptor_len());
    meta.print();
    meta.sidecar(&a.out)
}

fn cmd_holistic(a: &HolisticArgs) -> Result<(), CliError> {
    require(a.sigma.is_finite() && a.sigma > 0.0, "sigma must be positive")?;
    if let Some(r) = a.radius {
        require(r.is_finite() && r > 0.0, "radius must be positive")?;
    }
    let grid = parse_grid(&a.grid)?;
    let seq = in_file(&a.input, load_pcseq(&a.input))?;
    let pp = PipelineParams {
        sigma: a.sigma,
        radius_override: a.radius,
        ..PipelineParams::default()
    };
    let r = pp.radius_for(&seq)?;
    let dirs = directions(a.raw_directions);
    let h = holistic_hopc(&seq, &grid, a.tau, r, &dirs)?;
    let dim = h.len();
    in_file(
        &a.out,
        save_desc(
            &a.out,
            &DescFile {
                r,
                stks: Vec::new(),
                rows: vec![h],
            },
        ),
    )?;

    let mut meta = Meta::new("holistic");
    meta.add("input", a.input.display())
        .add("grid", &a.grid)
        .add("tau", a.tau)
        .add("sigma", a.sigma)
        .add("r", r)
        .add("raw_directions", a.raw_directions)
        .add("dim", dim);
    meta.print();
    meta.sidecar(&a.out)
}

fn cmd_codebook(a: &CodebookArgs) -> Result<(), CliError> {
    require(a.k >= 1, "k must be at least 1")?;
    let files = desc_files(&a.descs)?;
    let mut rows = Vec::new();
    for f in &files {
        rows.extend(in_file(f, load_desc(f))?.rows);
    }
    let cb = kmeans(&rows, a.k, a.seed, 100)?;
    in_file(&a.out, save_codebook(&a.out, &cb))?;

    let mut meta = Meta::new("codebook");
    meta.add("descs", a.descs.display())
        .add("files", files.len())
        .add("descriptors", rows.len())
        .add("dim", cb.dim())
        .add("k", a.k)
        .add("seed", a.seed);
    meta.print();
    meta.sidecar(&a.out)
}

fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    require(
        a.keep.is_finite() && a.keep > 0.0 && a.keep <= 1.0,
        "keep must lie in (0, 1]",
    )?;
    require(a.c.is_finite() && a.c > 0.0, "c must be positive")?;
    require(a.k >= 1, "k must be at least 1")?;
    let mode =
        FeatureMode::from_str(&a.mode).map_err(|e| CliError::Usage(e.to_string()))?;

    let labels_map: BTreeMap<String, usize> = serde_json::from_str(&read_text(&a.labels)?)
        .map_err(|e| CliError::Data(format!("labels file {}: {e}", a.labels.display())))?;
    let files = desc_files(&a.features)?;
    let mut per = Vec::new();
    for f in &files {
        let name = f
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let Some(&label) = labels_map.get(&name) else {
            return Err(CliError::Data(format!(
                "no label for {name} in {}",
                a.labels.display()
            )));
        };
        let d = in_file(f, load_desc(f))?;
        if d.stks.is_empty() {
            return Err(CliError::Data(format!(
                "{name}: no keypoints; training needs per-keypoint descriptor files"
            )));
        }
        per.push((name, d, label));
    }

    let all_rows: Vec<Vec<f64>> = per
        .iter()
        .flat_map(|(_, d, _)| d.rows.iter().cloned())
        .collect();
    // A supplied codebook is reused for quantization only; the codeword mask
    // is always mined from this training set.
    let mut codebook = match &a.codebook {
        Some(p) => {
            let mut cb = in_file(p, load_codebook(p))?;
            cb.keep_mask = vec![true; cb.k()];
            cb
        }
        None => kmeans(&all_rows, a.k, a.seed, 100)?,
    };
    let dim = all_rows.first().map_or(0, Vec::len);
    if codebook.dim() != dim {
        return Err(CliError::Data(format!(
            "codebook dimension {} does not match descriptor dimension {dim}",
            codebook.dim()
        )));
    }

    let y: Vec<usize> = per.iter().map(|(_, _, l)| *l).collect();
    let bows: Vec<Vec<f64>> = per
        .iter()
        .map(|(_, d, _)| Ok(l1_normalized(&bow_histogram(&d.rows, &codebook)?)))
        .collect::<hopc::Result<_>>()?;
    let scores = fscore_columns(&bows, &y)?;
    codebook.keep_mask = select_features(&scores, a.keep)?;

    let pp = PipelineParams::default();
    let mut feats = Vec::new();
    for (_, d, _) in &per {
        let sf = SequenceFeatures {
            r: d.r,
            tau_max: d.stks.iter().map(|s| s.tau_star).max().unwrap_or(0),
            stks: d.stks.clone(),
            locals: d.rows.clone(),
        };
        let ad = action_descriptor(&sf, &codebook, &pp.stkd)?;
        feats.push(mode.vector(&ad));
    }
    let svm_params = SvmParams {
        c: a.c,
        ..SvmParams::default()
    };
    let machine = train(&feats, &y, &svm_params)?;
    let feature_dim = feats.first().map_or(0, Vec::len);
    let classes = machine.class_labels.len();
    let model = TrainedModel {
        pipeline: pp,
        feature_mode: mode,
        keep_fraction: a.keep,
        codebook,
        svm: machine,
    };
    in_file(&a.out, model.save(&a.out))?;

    let mut meta = Meta::new("train");
    meta.add("features", a.features.display())
        .add("files", per.len())
        .add("classes", classes)
        .add("mode", mode.as_str())
        .add("keep", a.keep)
        .add("c", a.c)
        .add(
            "codebook",
            a.codebook
                .as_ref()
                .map_or_else(|| "k-means".to_string(), |p| p.display().to_string()),
        )
        .add("k", model.codebook.k())
        .add("seed", a.seed)
        .add("theta_g", model.pipeline.stkd.theta_g)
        .add(
            "m_k",
            model
                .pipeline
                .stkd
                .m_k
                .map_or_else(|| "auto".to_string(), |m| m.to_string()),
        )
        .add("min_keep", model.pipeline.stkd.min_keep)
        .add("normalization", normalization_name(model.pipeline.stkd.mode))
        .add("feature_dim", feature_dim);
    meta.print();
    meta.sidecar(&a.out)
}

fn cmd_classify(model_path: &Path, input: &Path) -> Result<(), CliError> {
    let model = in_file(model_path, TrainedModel::load(model_path))?;
    let seq = in_file(input, load_pcseq(input))?;
    let features = sequence_features(&seq, &model.pipeline)?;
    let ad = action_descriptor(&features, &model.codebook, &model.pipeline.stkd)?;
    let x = model.feature_mode.vector(&ad);
    let scores = decision_scores(&model.svm, &x)?;
    let label = predict(&model.svm, &x)?;

    let mut meta = Meta::new("classify");
    meta.add("model", model_path.display())
        .add("input", input.display())
        .add("mode", model.feature_mode.as_str())
        .add("sigma", model.pipeline.sigma)
        .add("r", features.r)
        .add("tau_max", features.tau_max)
        .add("stks", features.stks.len());
    meta.print();
    println!("label {label}");
    for (cls, s) in model.svm.class_labels.iter().zip(&scores) {
        println!("score {cls} {s:.6}");
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    require(
        a.protocol == "cross-view",
        &format!("unknown protocol {:?}; only cross-view is available", a.protocol),
    )?;
    require(a.k >= 1, "k must be at least 1")?;
    require(
        a.keep.is_finite() && a.keep > 0.0 && a.keep <= 1.0,
        "keep must lie in (0, 1]",
    )?;
    require(a.c.is_finite() && a.c > 0.0, "c must be positive")?;
    require(a.subjects >= 1, "subjects must be at least 1")?;
    require(a.frames >= 4, "frames must be at least 4")?;
    require(a.points >= 20, "points must be at least 20")?;
    require(a.noise.is_finite() && a.noise >= 0.0, "noise must be non-negative")?;
    require(a.speed.is_finite() && a.speed > 0.0, "speed must be positive")?;
    require(a.sigma.is_finite() && a.sigma > 0.0, "sigma must be positive")?;
    require(a.nk >= 1, "nk must be at least 1")?;
    let train_req = parse_views(&a.train_views)?;
    let test_req = parse_views(&a.test_views)?;
    require(!train_req.is_empty(), "train-views is empty")?;
    require(!test_req.is_empty(), "test-views is empty")?;
    if let Some(v) = train_req.iter().find(|v| test_req.contains(v)) {
        return Err(CliError::Usage(format!(
            "view V{} appears in both train-views and test-views",
            v + 1
        )));
    }

    // The dataset holds exactly the requested views; indices are remapped
    // into its view list.
    let mut union: Vec<usize> = train_req.iter().chain(&test_req).copied().collect();
    union.sort_unstable();
    union.dedup();
    let views: Vec<f64> = union.iter().map(|&i| 45.0 * i as f64).collect();
    let position = |req: &[usize]| -> Vec<usize> {
        req.iter()
            .map(|i| union.binary_search(i).expect("requested view is in the union"))
            .collect()
    };
    let train_pos = position(&train_req);
    let test_pos = position(&test_req);

    let ds = DatasetSpec {
        motions: MotionKind::ALL.to_vec(),
        subjects: a.subjects,
        views,
        frames: a.frames,
        base_speed: a.speed,
        noise_sigma: a.noise,
        points_per_frame: a.points,
        base_seed: a.seed,
    };
    let pp = PipelineParams {
        sigma: a.sigma,
        n_k: a.nk,
        ..PipelineParams::default()
    };
    let ep = EvalParams {
        k: a.k,
        keep_fraction: a.keep,
        codebook_seed: a.codebook_seed,
        svm: SvmParams {
            c: a.c,
            ..SvmParams::default()
        },
        ..EvalParams::default()
    };
    let samples = generate_dataset(&ds, &pp)?;
    let report = cross_view(&samples, &train_pos, &test_pos, &ep, &pp)?;
    write_text(&a.out, &report.to_csv())?;

    let mut meta = Meta::new("evaluate");
    meta.add("protocol", &a.protocol)
        .add("train_views", &a.train_views)
        .add("test_views", &a.test_views)
        .add("subjects", a.subjects)
        .add("frames", a.frames)
        .add("points", a.points)
        .add("noise", a.noise)
        .add("speed", a.speed)
        .add("seed", a.seed)
        .add("sigma", a.sigma)
        .add("nk", a.nk)
        .add("k", a.k)
        .add("keep", a.keep)
        .add("c", a.c)
        .add("codebook_seed", a.codebook_seed)
        .add("n_train", report.n_train)
        .add("n_test", report.n_test);
    meta.print();
    meta.sidecar(&a.out)?;

    for m in &report.modes {
        println!(
            "mode {} accuracy {:.4} ({}/{})",
            m.mode.as_str(),
            m.accuracy,
            m.correct,
            m.total
        );
    }
    for m in &report.modes {
        println!("confusion {} (rows true, cols predicted)", m.mode.as_str());
        for (i, row) in m.confusion.iter().enumerate() {
            let name = ds.motions.get(i).map_or("?", MotionKind::as_str);
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            println!("  {name:<6} {}", cells.join(" "));
        }
    }
    Ok(())
}

fn cmd_export_ply(stks_path: &Path, out: &Path) -> Result<(), CliError> {
    let sf = in_file(stks_path, load_stks(stks_path))?;
    in_file(out, export_ply(out, &sf.stks))?;
    let mut meta = Meta::new("export-ply");
    meta.add("stks_file", stks_path.display())
        .add("r", sf.r)
        .add("tau_max", sf.tau_max)
        .add("stks", sf.stks.len());
    meta.print();
    meta.sidecar(out)
}

fn run(cmd: &Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Convert { manifest, out } => cmd_convert(manifest, out),
        Cmd::Synth {
            spec,
            seed,
            out,
            mask,
        } => cmd_synth(spec, *seed, out, mask.as_deref()),
        Cmd::Detect(a) => cmd_detect(a),
        Cmd::Describe(a) => cmd_describe(a),
        Cmd::Holistic(a) => cmd_holistic(a),
        Cmd::Codebook(a) => cmd_codebook(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Classify { model, input } => cmd_classify(model, input),
        Cmd::Evaluate(a) => cmd_evaluate(a),
        Cmd::ExportPly { stks, out } => cmd_export_ply(stks, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
