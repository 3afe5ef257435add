//! Frame-by-frame orchestration.
//!
//! Per frame, in order: resolve the ripple pair, normalize, predict the next
//! positions, map them back to pixels, build the passed line, count
//! crossings, update the windowed count, compute the activity index, update
//! the windowed activity and step the feed controller. Frames without usable
//! geometry still produce a row (raw count 0, activity carried forward).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::control::{ControlConfig, ControlDecision, Controller};
use crate::counter::{
    count_crossings, passed_line, CrossingDirection, WindowedSum, DEFAULT_RHO, DEFAULT_WINDOW,
};
use crate::detection::{FrameRecord, PairTracker};
use crate::error::{Error, Result};
use crate::geometry::{to_normalized, to_pixel, RipplePair};
use crate::regressor::Predictor;
use crate::stats::Summary;
use crate::texture::{self, FeatureExtractor, GrayImage, WindowedMean};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub rho: f64,
    pub window: usize,
    pub direction: CrossingDirection,
    pub control: ControlConfig,
}

impl PipelineConfig {
    pub fn new(control: ControlConfig) -> Self {
        PipelineConfig {
            rho: DEFAULT_RHO,
            window: DEFAULT_WINDOW,
            direction: CrossingDirection::TowardRipple,
            control,
        }
    }
}

/// Supplies the activity index per frame.
///
/// `prepare` does any I/O for the frame and is not timed; `sigma` does the
/// computation. Returning `None` means no input exists for that frame.
pub trait ActivitySource {
    fn prepare(&mut self, frame: u64) -> Result<()>;
    fn sigma(&mut self, pair: &RipplePair) -> Result<Option<f64>>;
}

/// Crops frames from an image provider and runs a feature extractor.
pub struct ImageActivity<F, E> {
    images: F,
    extractor: E,
    current: Option<GrayImage>,
}

impl<F, E> ImageActivity<F, E>
where
    F: FnMut(u64) -> Result<Option<GrayImage>>,
    E: FeatureExtractor,
{
    pub fn new(images: F, extractor: E) -> Self {
        ImageActivity {
            images,
            extractor,
            current: None,
        }
    }
}

impl<F, E> ActivitySource for ImageActivity<F, E>
where
    F: FnMut(u64) -> Result<Option<GrayImage>>,
    E: FeatureExtractor,
{
    fn prepare(&mut self, frame: u64) -> Result<()> {
        self.current = (self.images)(frame)?;
        Ok(())
    }

    fn sigma(&mut self, pair: &RipplePair) -> Result<Option<f64>> {
        match self.current.take() {
            Some(img) => texture::frame_activity(&self.extractor, &img, pair).map(Some),
            None => Ok(None),
        }
    }
}

/// Files in `dir` whose stem parses as a frame index and whose extension matches.
pub fn index_frame_files(dir: &Path, extension: &str) -> Result<BTreeMap<u64, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(extension) {
            continue;
        }
        if let Some(idx) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok())
        {
            out.insert(idx, path);
        }
    }
    Ok(out)
}

/// Reads externally computed pyramids (`<frame>.pyr`) instead of images.
pub struct PyramidActivity {
    files: BTreeMap<u64, PathBuf>,
    current: Option<texture::FeaturePyramid>,
}

impl PyramidActivity {
    pub fn from_dir(dir: &Path) -> Result<Self> {
        Ok(PyramidActivity {
            files: index_frame_files(dir, "pyr")?,
            current: None,
        })
    }
}

impl ActivitySource for PyramidActivity {
    fn prepare(&mut self, frame: u64) -> Result<()> {
        self.current = match self.files.get(&frame) {
            Some(path) => Some(texture::load_pyramid(path)?),
            None => None,
        };
        Ok(())
    }

    fn sigma(&mut self, _pair: &RipplePair) -> Result<Option<f64>> {
        self.current
            .take()
            .map(|p| texture::pyramid_sigma(&p))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub frame: u64,
    pub geometry_ready: bool,
    pub raw_count: u32,
    pub windowed_count: u64,
    /// `None` in count-only mode.
    pub sigma: Option<f64>,
    pub windowed_sigma: Option<f64>,
    pub decision: ControlDecision,
    pub elapsed: Duration,
}

/// Streaming pipeline state.
pub struct Pipeline<P> {
    config: PipelineConfig,
    predictor: P,
    tracker: PairTracker,
    counts: WindowedSum,
    activity: WindowedMean,
    last_sigma: f64,
    controller: Controller,
    last_frame: Option<u64>,
}

impl<P: Predictor> Pipeline<P> {
    pub fn new(config: PipelineConfig, predictor: P) -> Result<Self> {
        if !(config.rho.is_finite() && config.rho > 0.0) {
            return Err(Error::Config(format!(
                "rho must be positive, got {}",
                config.rho
            )));
        }
        Ok(Pipeline {
            counts: WindowedSum::new(config.window)?,
            activity: WindowedMean::new(config.window)?,
            controller: Controller::new(config.control)?,
            tracker: PairTracker::new(),
            last_sigma: 0.0,
            last_frame: None,
            predictor,
            config,
        })
    }

    fn raw_count(&self, record: &FrameRecord, pair: &RipplePair) -> Result<u32> {
        let line = match passed_line(pair, self.config.rho) {
            Ok(line) => line,
            Err(Error::DegenerateLine { .. }) => return Ok(0),
            Err(e) => return Err(e),
        };
        let nf = to_normalized(record, pair)?;
        let kappa_next = self.predictor.predict_next(&nf)?;
        if kappa_next.len() != nf.kappa.len() {
            return Err(Error::shape(format!(
                "predictor returned {} points for {} nutriments",
                kappa_next.len(),
                nf.kappa.len()
            )));
        }
        let predicted = to_pixel(&kappa_next, pair)?;
        count_crossings(&record.centers(), &predicted, &line, self.config.direction)
    }

    /// Processes one frame. Frames must arrive in strictly increasing order.
    pub fn process(
        &mut self,
        record: &FrameRecord,
        activity: Option<&mut (dyn ActivitySource + '_)>,
    ) -> Result<FrameOutput> {
        if let Some(prev) = self.last_frame {
            if record.frame <= prev {
                return Err(Error::validation(format!(
                    "frame {} arrived after frame {prev}",
                    record.frame
                )));
            }
        }
        self.last_frame = Some(record.frame);

        let mut activity = activity;
        if let Some(src) = activity.as_deref_mut() {
            src.prepare(record.frame)?;
        }

        let start = Instant::now();
        let pair = self.tracker.update(record).filter(RipplePair::is_usable);
        let raw_count = match &pair {
            Some(p) => self.raw_count(record, p)?,
            None => 0,
        };
        let windowed_count = self.counts.push(raw_count);

        let (sigma, windowed_sigma) = match activity {
            Some(src) => {
                let fresh = match &pair {
                    Some(p) => src.sigma(p)?,
                    None => None,
                };
                if let Some(s) = fresh {
                    self.last_sigma = s;
                }
                let s = self.last_sigma;
                (Some(s), Some(self.activity.push(s)))
            }
            None => (None, None),
        };
        let decision = self
            .controller
            .step(record.frame, windowed_count, windowed_sigma);
        let elapsed = start.elapsed();

        Ok(FrameOutput {
            frame: record.frame,
            geometry_ready: pair.is_some(),
            raw_count,
            windowed_count,
            sigma,
            windowed_sigma,
            decision,
            elapsed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub frames: Vec<FrameOutput>,
    pub timing: TimingReport,
}

/// Runs the whole stream. Fails on the first frame error.
pub fn run<P: Predictor>(
    records: &[FrameRecord],
    predictor: P,
    mut activity: Option<&mut (dyn ActivitySource + '_)>,
    config: &PipelineConfig,
) -> Result<RunOutput> {
    let mut pipeline = Pipeline::new(config.clone(), predictor)?;
    let mut frames = Vec::with_capacity(records.len());
    for r in records {
        let src: Option<&mut (dyn ActivitySource + '_)> = match activity {
            Some(ref mut a) => Some(&mut **a),
            None => None,
        };
        frames.push(pipeline.process(r, src)?);
    }
    let ms: Vec<f64> = frames
        .iter()
        .map(|f| f.elapsed.as_secs_f64() * 1e3)
        .collect();
    let timing = timing_report(&ms)?;
    Ok(RunOutput { frames, timing })
}

/// Throughput statistics over per-frame processing times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub per_frame_ms: Vec<f64>,
    /// Statistics of per-frame fps (`1000 / ms` for each frame).
    pub fps: Summary,
    /// `1000 / mean(ms)`.
    pub aggregate_fps: f64,
}

/// Floor applied to a frame's duration before inverting it.
const MIN_FRAME_MS: f64 = 1e-6;

pub fn timing_report(per_frame_ms: &[f64]) -> Result<TimingReport> {
    if per_frame_ms.is_empty() {
        return Err(Error::EmptyInput("no frame timings"));
    }
    let fps: Vec<f64> = per_frame_ms
        .iter()
        .map(|ms| 1000.0 / ms.max(MIN_FRAME_MS))
        .collect();
    let mean_ms = per_frame_ms.iter().sum::<f64>() / per_frame_ms.len() as f64;
    Ok(TimingReport {
        per_frame_ms: per_frame_ms.to_vec(),
        fps: Summary::of(&fps)?,
        aggregate_fps: 1000.0 / mean_ms.max(MIN_FRAME_MS),
    })
}

impl std::fmt::Display for TimingReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = &self.fps;
        writeln!(
            f,
            "N\tMean (fps)\tStd. Dev.\tStd. Err.\t95% CI lower\t95% CI upper"
        )?;
        writeln!(
            f,
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            s.n, s.mean, s.std, s.stderr, s.ci_lower, s.ci_upper
        )?;
        writeln!(
            f,
            "aggregate fps (1000 / mean ms): {:.4}",
            self.aggregate_fps
        )
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_counts_csv<W: Write>(mut w: W, frames: &[FrameOutput]) -> Result<()> {
    writeln!(w, "frame,raw_count,windowed_count")?;
    for f in frames {
        writeln!(w, "{},{},{}", f.frame, f.raw_count, f.windowed_count)?;
    }
    Ok(())
}

pub fn write_activity_csv<W: Write>(mut w: W, frames: &[FrameOutput]) -> Result<()> {
    writeln!(w, "frame,sigma,windowed_sigma")?;
    for f in frames {
        writeln!(w, "{},{},{}", f.frame, opt(f.sigma), opt(f.windowed_sigma))?;
    }
    Ok(())
}

pub fn write_decisions_csv<W: Write>(mut w: W, frames: &[FrameOutput]) -> Result<()> {
    writeln!(
        w,
        "frame,feeding,raw_count,windowed_count,windowed_activity,reason"
    )?;
    for f in frames {
        let d = &f.decision;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            d.frame,
            u8::from(d.feeding),
            f.raw_count,
            d.windowed_count,
            opt(d.windowed_activity),
            d.reason.as_str()
        )?;
    }
    Ok(())
}

/// Writes `counts.csv`, `activity.csv`, `decisions.csv` and `timing.txt` into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
        Ok(std::io::BufWriter::new(std::fs::File::create(
            dir.join(name),
        )?))
    };
    write_counts_csv(file("counts.csv")?, &out.frames)?;
    write_activity_csv(file("activity.csv")?, &out.frames)?;
    write_decisions_csv(file("decisions.csv")?, &out.frames)?;
    write!(file("timing.txt")?, "{}", out.timing)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Reason;
    use crate::regressor::Persistence;

    #[test]
    fn constant_timing() {
        let t = timing_report(&[250.0; 10]).unwrap();
        assert_eq!(t.fps.mean, 4.0);
        assert_eq!(t.fps.std, 0.0);
        assert_eq!(t.fps.n, 10);
        assert_eq!(t.aggregate_fps, 4.0);
    }

    #[test]
    fn mixed_timing() {
        let t = timing_report(&[100.0, 300.0]).unwrap();
        assert!((t.fps.mean - (10.0 + 1000.0 / 300.0) / 2.0).abs() < 1e-12);
        assert!((t.fps.mean - 6.666_666_666_666_667).abs() < 1e-12);
        assert_eq!(t.aggregate_fps, 5.0);
        assert!(matches!(timing_report(&[]), Err(Error::EmptyInput(_))));
    }

    fn cfg() -> PipelineConfig {
        PipelineConfig::new(ControlConfig::new(0.5, 0.1, 100).unwrap())
    }

    #[test]
    fn rejects_out_of_order_frames() {
        let mut p = Pipeline::new(cfg(), Persistence).unwrap();
        let r = |frame| FrameRecord {
            frame,
            nutriments: vec![],
            ripples: vec![],
        };
        p.process(&r(3), None).unwrap();
        assert!(p.process(&r(3), None).is_err());
    }

    #[test]
    fn skipped_frames_still_emit_rows() {
        let r = |frame| FrameRecord {
            frame,
            nutriments: vec![],
            ripples: vec![],
        };
        let records: Vec<_> = (0..5).map(r).collect();
        let out = run(&records, Persistence, None, &cfg()).unwrap();
        assert_eq!(out.frames.len(), 5);
        assert!(out
            .frames
            .iter()
            .all(|f| !f.geometry_ready && f.raw_count == 0));
        assert_eq!(out.frames[0].decision.reason, Reason::CountOnly);
        assert_eq!(out.timing.fps.n, 5);
    }
}
