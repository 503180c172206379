//! Event simulation, encoding, statistics, reconstruction, evaluation and
//! slice export commands.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use lfturb::eventio::{
    encode_windows, read_events, read_frames, stack_views, write_events, write_events_csv, write_frames, write_voxels,
    EventStream, FrameSequence, TimeWindow, TIMESTAMPS_FILE,
};
use lfturb::evsim::frames_to_events;
use lfturb::lfgeom::Homography;
use lfturb::recon::{evaluate_clip, export_xt_slice, fuse_views, integrate_events, MetricsReport, ReconConfig, ReconError, SlicePath};
use lfturb::turbstats::{analyze, dot_intensity_series, estimate_contrast_threshold, DotGridLayout, DotGridTrack, StatsError, StatsReport};
use rayon::prelude::*;

use crate::config::{Config, EventFormat};
use crate::error::{CliError, Result};
use crate::simulate::{ClipManifest, MANIFEST_FILE};

/// `view_0`, `view_1`, ... entries of `dir` accepted by `exists`, stopping at
/// the first gap.
fn numbered(dir: &Path, suffix: &str, exists: impl Fn(&Path) -> bool) -> Vec<PathBuf> {
    (0..).map(|i| dir.join(format!("view_{i}{suffix}"))).take_while(|p| exists(p)).collect()
}

fn view_dirs(dir: &Path) -> Vec<PathBuf> {
    numbered(dir, "", Path::is_dir)
}

fn view_streams(dir: &Path) -> Vec<PathBuf> {
    numbered(dir, ".evlf", Path::is_file)
}

fn open_events(path: &Path) -> Result<EventStream> {
    Ok(read_events(BufReader::new(File::open(path)?))?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Converts a frame directory into an event stream.
pub fn cmd_events(cfg: &Config) -> Result<EventStream> {
    let input = cfg.input()?;
    let out = cfg.output()?;
    let sim = cfg.event_sim()?;
    let format = cfg.event_format()?;
    let frames = read_frames(&input)?;
    let stream = frames_to_events(&frames, &sim)?;
    let sink = create(&out)?;
    match format {
        EventFormat::Evlf => {
            write_events(&stream, sink)?;
        }
        EventFormat::Csv => write_events_csv(&stream, sink)?,
    }
    log::info!("{} events written to {}", stream.len(), out.display());
    Ok(stream)
}

/// Encodes consecutive `window_us` windows of every view into stacked voxel
/// files `window_<k>.evvx`. The input is a clip directory of `view_<i>.evlf`
/// streams or a single stream file. Returns the number of windows.
pub fn cmd_encode(cfg: &Config) -> Result<usize> {
    let input = cfg.input()?;
    let out = cfg.output()?;
    let bins = cfg.bins()?;
    let window = cfg.window_us()?;
    let paths = if input.is_file() { vec![input.clone()] } else { view_streams(&input) };
    if paths.is_empty() {
        return Err(CliError::data(format!("no view_<i>.evlf streams in {}", input.display())));
    }
    let streams = paths.iter().map(|p| open_events(p)).collect::<Result<Vec<_>>>()?;
    let duration = streams.iter().map(EventStream::duration).max().unwrap_or(0);
    let windows = (0..duration.div_ceil(window).max(1))
        .map(|k| TimeWindow::new(k * window, (k + 1) * window))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let grids = streams.par_iter().map(|s| encode_windows(s, &windows, bins)).collect::<std::result::Result<Vec<_>, _>>()?;
    let order: Vec<usize> = (0..streams.len()).collect();
    fs::create_dir_all(&out)?;
    for k in 0..windows.len() {
        let per_view: Vec<_> = grids.iter().map(|g| g[k].clone()).collect();
        let stacked = stack_views(&per_view, &order)?;
        write_voxels(&stacked, create(&out.join(format!("window_{k:06}.evvx")))?)?;
    }
    Ok(windows.len())
}

/// Frame directories of a recording: its `view_<i>` subdirectories, or the
/// directory itself.
fn recording_views(dir: &Path) -> Result<Vec<FrameSequence>> {
    let dirs = view_dirs(dir);
    let dirs = if dirs.is_empty() { vec![dir.to_path_buf()] } else { dirs };
    dirs.par_iter().map(|d| Ok(read_frames(d)?)).collect()
}

/// Runs the turbulence statistics suite on a dot-grid recording and writes
/// the report and its curves to the output directory.
pub fn cmd_stats(cfg: &Config) -> Result<StatsReport> {
    let input = cfg.input()?;
    let out = cfg.output()?;
    let references = cfg.references()?.ok_or(StatsError::MissingReference)?;
    let stats = cfg.stats();
    let views = recording_views(&input)?;
    let mut refs = recording_views(&references)?;
    if refs.len() == 1 && views.len() > 1 {
        refs = vec![refs[0].clone(); views.len()];
    }
    let (w, h) = views[0].shape().ok_or_else(|| CliError::data("empty recording"))?;
    let (rows, cols) = cfg.grid_shape();
    let layout = DotGridLayout::uniform(w, h, rows, cols, cfg.grid_margin(w, h), cfg.roi_half())?;
    let track = DotGridTrack::from_recordings(&views, &refs, &layout)?;
    let intensities = views.par_iter().map(|v| dot_intensity_series(v, &layout)).collect::<std::result::Result<Vec<_>, _>>()?;
    let mut report = analyze(&track, &intensities, &stats)?;
    let mut curve = None;
    if let Some(path) = cfg.contrast_events()? {
        let observed = open_events(&path)?;
        let base = cfg.event_sim()?;
        let est = estimate_contrast_threshold(&observed, &views[report.view], cfg.contrast_range()?, cfg.contrast_points()?, &base)?;
        report.contrast_threshold = Some(est.threshold);
        curve = Some(est.curve);
    }
    report.write_to_dir(&out)?;
    if let Some(curve) = curve {
        let mut w = create(&out.join("event_rate.csv"))?;
        writeln!(w, "threshold,rate")?;
        for (c, r) in curve {
            writeln!(w, "{c},{r}")?;
        }
        w.flush()?;
    }
    Ok(report)
}

/// Reconstruction scores of one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipScores {
    pub clip: PathBuf,
    pub single: MetricsReport,
    pub fused: MetricsReport,
}

/// Clip directories at or below `root`, in path order.
fn clip_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join("view_0.evlf").is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut found = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(root)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    entries.sort();
    for dir in entries {
        found.extend(clip_dirs(&dir)?);
    }
    Ok(found)
}

fn read_timestamps(dir: &Path) -> Result<Option<Vec<u64>>> {
    let path = dir.join(TIMESTAMPS_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    Ok(Some(lfturb::eventio::parse_timestamps(&fs::read_to_string(path)?)?))
}

/// Reconstructs every view of each clip under the input, writes the center
/// view (`single/`) and the fused light field (`fused/`), and scores both
/// against the ground truth when one is available.
pub fn cmd_recon(cfg: &Config) -> Result<Vec<ClipScores>> {
    let input = cfg.input()?;
    let out = cfg.output()?;
    let recon = cfg.recon()?;
    let depth = cfg.bit_depth()?;
    let fps = cfg.fps()?;
    let truth_override = cfg.truth()?;
    let homography_dir = cfg.homographies()?;
    let clips = clip_dirs(&input)?;
    if clips.is_empty() {
        return Err(CliError::data(format!("no clips with view_0.evlf under {}", input.display())));
    }
    let mut scores = Vec::new();
    for clip in &clips {
        let rel = clip.strip_prefix(&input).unwrap_or(clip);
        let dest = out.join(rel);
        let streams = view_streams(clip).iter().map(|p| open_events(p)).collect::<Result<Vec<_>>>()?;
        let n = streams.len();

        let manifest_path = clip.join(MANIFEST_FILE);
        let thresholds = match (cfg.contrast_threshold, manifest_path.is_file()) {
            (None, true) => ClipManifest::read(&manifest_path)?.contrast_thresholds,
            _ => vec![recon.contrast_threshold; n],
        };
        if thresholds.len() != n {
            return Err(CliError::data(format!("{}: {} thresholds for {n} views", clip.display(), thresholds.len())));
        }

        let truth_dir = truth_override.clone().unwrap_or_else(|| clip.join("clean"));
        let truth = if truth_dir.is_dir() { Some(read_frames(&truth_dir)?) } else { None };
        let timestamps = match &truth {
            Some(t) => t.timestamps().to_vec(),
            None => match read_timestamps(&clip.join("view_0"))? {
                Some(ts) => ts,
                None => {
                    let step = 1e6 / fps;
                    let end = streams[0].duration();
                    (0..).map(|k| (k as f64 * step).round() as u64).take_while(|&t| t <= end).collect()
                }
            },
        };

        let recons = streams
            .par_iter()
            .zip(&thresholds)
            .map(|(s, &c)| integrate_events(s, &timestamps, &ReconConfig { contrast_threshold: c, ..recon }))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let single = recons[n / 2].clone();
        let fused = if n == 1 {
            single.clone()
        } else {
            let hdir = homography_dir.clone().unwrap_or_else(|| clip.clone());
            let hs = (0..n)
                .map(|v| hdir.join(format!("view_{v}.homography")))
                .take_while(|p| p.is_file())
                .map(|p| Ok(fs::read_to_string(p)?.parse::<Homography>()?))
                .collect::<Result<Vec<_>>>()?;
            if hs.len() != n {
                return Err(ReconError::MissingHomographies { views: n, homographies: hs.len() }.into());
            }
            fuse_views(&recons, &hs, recon.fusion)?
        };
        write_frames(&single, &dest.join("single"), depth)?;
        write_frames(&fused, &dest.join("fused"), depth)?;

        match truth {
            Some(truth) => {
                let s = evaluate_clip(&single, &truth)?;
                let f = evaluate_clip(&fused, &truth)?;
                s.write_csv(create(&dest.join("metrics_single.csv"))?)?;
                f.write_csv(create(&dest.join("metrics_fused.csv"))?)?;
                log::info!(
                    "{}: single {:.2} dB / {:.3}, fused {:.2} dB / {:.3}",
                    rel.display(),
                    s.mean_psnr,
                    s.mean_ssim,
                    f.mean_psnr,
                    f.mean_ssim
                );
                scores.push(ClipScores { clip: rel.to_path_buf(), single: s, fused: f });
            }
            None => log::warn!("{}: no ground truth at {}, skipping evaluation", rel.display(), truth_dir.display()),
        }
    }
    if !scores.is_empty() {
        write_summary(&scores, &out.join("summary.csv"))?;
    }
    Ok(scores)
}

fn write_summary(scores: &[ClipScores], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "clip,frames,single_psnr,single_ssim,fused_psnr,fused_ssim")?;
    for s in scores {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.clip.display(),
            s.single.frames.len(),
            s.single.mean_psnr,
            s.single.mean_ssim,
            s.fused.mean_psnr,
            s.fused.mean_ssim
        )?;
    }
    let single: Vec<_> = scores.iter().map(|s| s.single.clone()).collect();
    let fused: Vec<_> = scores.iter().map(|s| s.fused.clone()).collect();
    let (sp, ss) = MetricsReport::aggregate(&single);
    let (fp, fs_) = MetricsReport::aggregate(&fused);
    let frames: usize = scores.iter().map(|s| s.single.frames.len()).sum();
    writeln!(w, "mean,{frames},{sp},{ss},{fp},{fs_}")?;
    w.flush()?;
    println!("single-view: {sp:.3} dB PSNR, {ss:.4} SSIM");
    println!("light field: {fp:.3} dB PSNR, {fs_:.4} SSIM ({:+.3} dB)", fp - sp);
    Ok(())
}

/// Scores a reconstructed frame directory against a ground-truth one.
pub fn cmd_eval(cfg: &Config) -> Result<MetricsReport> {
    let input = cfg.input()?;
    let truth = cfg.truth()?.ok_or_else(|| CliError::config("`truth` is required"))?;
    let report = evaluate_clip(&read_frames(&input)?, &read_frames(&truth)?)?;
    match &cfg.output {
        Some(path) => report.write_csv(create(path)?)?,
        None => report.write_csv(std::io::stdout().lock())?,
    }
    log::info!("{} frames: {:.3} dB PSNR, {:.4} SSIM", report.frames.len(), report.mean_psnr, report.mean_ssim);
    Ok(report)
}

/// Writes an x-t slice of a frame directory as CSV.
pub fn cmd_slice(cfg: &Config) -> Result<()> {
    let input = cfg.input()?;
    let path = match (cfg.row, cfg.column, cfg.slice_points()?) {
        (Some(r), None, None) => SlicePath::Row(r),
        (None, Some(c), None) => SlicePath::Column(c),
        (None, None, Some(p)) => SlicePath::Points(p),
        _ => return Err(CliError::config("exactly one of `row`, `column` or `points` is required")),
    };
    let frames = read_frames(&input)?;
    match &cfg.output {
        Some(out) => export_xt_slice(&frames, &path, create(out)?)?,
        None => export_xt_slice(&frames, &path, std::io::stdout().lock())?,
    }
    Ok(())
}
