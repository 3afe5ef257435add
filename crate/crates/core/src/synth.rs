//! Synthetic feeding scenes with exact ground truth.
//!
//! Pellets leave a machine zone on ballistic arcs (constant velocity plus
//! constant downward acceleration) and land inside the ripple region after
//! roughly `flight_frames / speed` frames. Two ripple boxes mark the water;
//! they can jitter, drift with the camera, and drop out of individual frames.
//!
//! The truth for each frame holds every visible pellet's exact position in
//! the next frame and the exact number of directed passed-line crossings
//! under the pipeline's counting rule.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::counter::{passed_line, CrossingDirection, DEFAULT_RHO};
use crate::detection::{BoundingBox, FrameRecord, PairTracker, TruthRecord};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::texture::GrayImage;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub width: f64,
    pub height: f64,
    pub frames: usize,
    /// Number of pellet trajectories over the whole scene.
    pub tracks: usize,
    /// Flight-speed multiplier; 0 gives a static scene with every pellet present from frame 0.
    pub speed: f64,
    /// Nominal machine-to-water travel time at speed 1.
    pub flight_frames: f64,
    /// Downward acceleration in px/frame² at speed 1.
    pub gravity: f64,
    pub machine: Point,
    pub machine_spread: f64,
    pub ripple_centers: [Point; 2],
    pub ripple_size: (f64, f64),
    /// Standard deviation of per-frame ripple center noise, pixels.
    pub ripple_jitter: f64,
    /// Camera motion per frame, applied to everything in view.
    pub camera_drift: Point,
    /// Probability that a frame reports a ripple count other than two.
    pub ripple_dropout: f64,
    pub rho: f64,
    pub direction: CrossingDirection,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::for_frame(1920.0, 1080.0)
    }
}

impl SynthConfig {
    /// Scene geometry scaled to a frame size (calibrated on 1920×1080).
    pub fn for_frame(width: f64, height: f64) -> Self {
        let sx = width / 1920.0;
        let sy = height / 1080.0;
        SynthConfig {
            width,
            height,
            frames: 418,
            tracks: 60,
            speed: 1.0,
            flight_frames: 23.8,
            gravity: 4.0 * sy,
            machine: Point::new(220.0 * sx, 260.0 * sy),
            machine_spread: 60.0 * sx.min(sy),
            ripple_centers: [
                Point::new(760.0 * sx, 860.0 * sy),
                Point::new(1360.0 * sx, 880.0 * sy),
            ],
            ripple_size: (520.0 * sx, 170.0 * sy),
            ripple_jitter: 0.0,
            camera_drift: Point::default(),
            ripple_dropout: 0.0,
            rho: DEFAULT_RHO,
            direction: CrossingDirection::TowardRipple,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width >= 1.0 && self.height >= 1.0) {
            return Err(Error::Config(format!(
                "frame size {}x{} is empty",
                self.width, self.height
            )));
        }
        if self.frames == 0 {
            return Err(Error::Config("a scenario needs at least one frame".into()));
        }
        let finite = [
            self.speed,
            self.flight_frames,
            self.gravity,
            self.machine_spread,
            self.ripple_size.0,
            self.ripple_size.1,
            self.ripple_jitter,
            self.rho,
        ];
        if finite.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(
                "scene parameters must be finite and non-negative".into(),
            ));
        }
        if self.flight_frames <= 0.0 || self.rho <= 0.0 {
            return Err(Error::Config("flight time and rho must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.ripple_dropout) {
            return Err(Error::Config("ripple dropout must be a probability".into()));
        }
        Ok(())
    }
}

/// One pellet: `position(f) = origin + velocity·t + ½·accel·t²` with `t = f - spawn`,
/// visible while `0 ≤ t ≤ duration`.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub spawn: usize,
    pub origin: Point,
    pub velocity: Point,
    pub accel: Point,
    pub duration: f64,
    pub size: (f64, f64),
}

impl Track {
    /// World position `t` frames after spawning (no camera motion).
    pub fn world_at(&self, t: f64) -> Point {
        Point::new(
            self.origin.x + self.velocity.x * t + 0.5 * self.accel.x * t * t,
            self.origin.y + self.velocity.y * t + 0.5 * self.accel.y * t * t,
        )
    }

    pub fn visible_at(&self, frame: usize) -> bool {
        frame >= self.spawn && (frame - self.spawn) as f64 <= self.duration
    }
}

/// Per-frame truth attached to a synthetic stream.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    /// Exact next-frame image position of each nutriment in the record.
    pub next: Vec<Point>,
    pub crossings: u32,
    /// Pellets that landed during the trailing 20 frames, scaled to [0, 1].
    pub activity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScenario {
    pub config: SynthConfig,
    pub tracks: Vec<Track>,
    pub records: Vec<FrameRecord>,
    pub truth: Vec<FrameTruth>,
}

impl SyntheticScenario {
    /// Truth in the sidecar format, every nutriment annotated.
    pub fn truth_records(&self) -> Vec<TruthRecord> {
        self.records
            .iter()
            .zip(&self.truth)
            .map(|(r, t)| TruthRecord {
                frame: r.frame,
                next: t.next.iter().copied().map(Some).collect(),
                crossings: t.crossings,
            })
            .collect()
    }

    pub fn crossing_counts(&self) -> Vec<u32> {
        self.truth.iter().map(|t| t.crossings).collect()
    }
}

fn drift(cfg: &SynthConfig, frame: usize) -> Point {
    cfg.camera_drift * frame as f64
}

/// Random scene from `config` and `seed`.
pub fn synth_scenario(config: &SynthConfig, seed: u64) -> Result<SyntheticScenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tracks = random_tracks(config, &mut rng);
    build(config, tracks, &mut rng)
}

/// Scene from explicit tracks; `seed` drives ripple jitter, dropout and record order.
pub fn synth_from_tracks(
    config: &SynthConfig,
    tracks: Vec<Track>,
    seed: u64,
) -> Result<SyntheticScenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build(config, tracks, &mut rng)
}

fn random_tracks(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Track> {
    let [c1, c2] = cfg.ripple_centers;
    let (rw, rh) = cfg.ripple_size;
    let land_x = (c1.x.min(c2.x) - rw / 2.0, c1.x.max(c2.x) + rw / 2.0);
    let land_y = (c1.y.min(c2.y) - rh / 4.0, c1.y.max(c2.y) + rh / 4.0);
    let mut tracks = Vec::with_capacity(cfg.tracks);
    for _ in 0..cfg.tracks {
        let origin = Point::new(
            cfg.machine.x + rng.random_range(-1.0..=1.0) * cfg.machine_spread,
            cfg.machine.y + rng.random_range(-1.0..=1.0) * cfg.machine_spread,
        );
        let size = (rng.random_range(9.0..=13.0), rng.random_range(6.0..=36.0));
        if cfg.speed == 0.0 {
            tracks.push(Track {
                spawn: 0,
                origin,
                velocity: Point::default(),
                accel: Point::default(),
                duration: cfg.frames as f64,
                size,
            });
            continue;
        }
        let land = Point::new(
            rng.random_range(land_x.0..=land_x.1),
            rng.random_range(land_y.0..=land_y.1),
        );
        let duration = cfg.flight_frames / cfg.speed * rng.random_range(0.8..=1.2);
        let accel = Point::new(0.0, cfg.gravity * cfg.speed * cfg.speed);
        let velocity = Point::new(
            (land.x - origin.x) / duration,
            (land.y - origin.y - 0.5 * accel.y * duration * duration) / duration,
        );
        tracks.push(Track {
            spawn: rng.random_range(0..cfg.frames),
            origin,
            velocity,
            accel,
            duration,
            size,
        });
    }
    tracks
}

fn build(cfg: &SynthConfig, tracks: Vec<Track>, rng: &mut ChaCha8Rng) -> Result<SyntheticScenario> {
    let jitter = Normal::new(0.0, cfg.ripple_jitter.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut tracker = PairTracker::new();
    let mut records = Vec::with_capacity(cfg.frames);
    let mut truth = Vec::with_capacity(cfg.frames);

    for f in 0..cfg.frames {
        let shift = drift(cfg, f);
        let next_shift = drift(cfg, f + 1);

        let mut ripples: Vec<BoundingBox> = cfg
            .ripple_centers
            .iter()
            .map(|c| {
                let (jx, jy) = if cfg.ripple_jitter > 0.0 {
                    (jitter.sample(rng), jitter.sample(rng))
                } else {
                    (0.0, 0.0)
                };
                BoundingBox::new(
                    c.x + shift.x + jx,
                    c.y + shift.y + jy,
                    cfg.ripple_size.0,
                    cfg.ripple_size.1,
                )
            })
            .collect::<Result<_>>()?;
        if cfg.ripple_dropout > 0.0 && rng.random_bool(cfg.ripple_dropout) {
            match rng.random_range(0..3) {
                0 => ripples.clear(),
                1 => {
                    ripples.pop();
                }
                _ => ripples.push(ripples[0]),
            }
        }
        ripples.shuffle(rng);

        let mut nutriments = Vec::new();
        let mut current = Vec::new();
        let mut next = Vec::new();
        for track in tracks.iter().filter(|t| t.visible_at(f)) {
            let t = (f - track.spawn) as f64;
            let p = track.world_at(t) + shift;
            nutriments.push(BoundingBox::new(p.x, p.y, track.size.0, track.size.1)?);
            current.push(p);
            next.push(track.world_at(t + 1.0) + next_shift);
        }

        let record = FrameRecord {
            frame: f as u64,
            nutriments,
            ripples,
        };
        let crossings = match tracker.update(&record) {
            Some(pair) if pair.is_usable() => match passed_line(&pair, cfg.rho) {
                Ok(line) => crate::counter::count_crossings(&current, &next, &line, cfg.direction)?,
                Err(Error::DegenerateLine { .. }) => 0,
                Err(e) => return Err(e),
            },
            _ => 0,
        };
        let landed = tracks
            .iter()
            .filter(|t| {
                let land = t.spawn as f64 + t.duration;
                cfg.speed > 0.0 && land <= f as f64 && land > f as f64 - 20.0
            })
            .count();
        truth.push(FrameTruth {
            next,
            crossings,
            activity: (landed as f64 / 6.0).min(1.0),
        });
        records.push(record);
    }

    Ok(SyntheticScenario {
        config: cfg.clone(),
        tracks,
        records,
        truth,
    })
}

/// Renders a grayscale frame: flat background, ripple boxes textured in
/// proportion to the frame's truth activity, bright pellet boxes.
pub fn render_frame(scenario: &SyntheticScenario, index: usize) -> Result<GrayImage> {
    let cfg = &scenario.config;
    let record = &scenario.records[index];
    let amp = scenario.truth[index].activity;
    let (w, h) = (
        cfg.width.round().max(1.0) as usize,
        cfg.height.round().max(1.0) as usize,
    );
    let shift = drift(cfg, index);
    let rects: Vec<(f64, f64, f64, f64)> = cfg
        .ripple_centers
        .iter()
        .map(|c| {
            let (rw, rh) = cfg.ripple_size;
            (
                c.x + shift.x - rw / 2.0,
                c.y + shift.y - rh / 2.0,
                c.x + shift.x + rw / 2.0,
                c.y + shift.y + rh / 2.0,
            )
        })
        .collect();
    let phase = index as f64 * 0.7;
    let mut pixels = vec![0.35; w * h];
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            if rects
                .iter()
                .any(|r| fx >= r.0 && fx < r.2 && fy >= r.1 && fy < r.3)
            {
                let wave = (0.9 * fx + phase).sin() * (0.6 * fy - phase).sin();
                pixels[y * w + x] = 0.5 + 0.3 * amp * wave;
            }
        }
    }
    for b in &record.nutriments {
        let x0 = (b.cx - b.w / 2.0).floor().max(0.0) as usize;
        let y0 = (b.cy - b.h / 2.0).floor().max(0.0) as usize;
        let x1 = ((b.cx + b.w / 2.0).ceil().max(0.0) as usize).min(w);
        let y1 = ((b.cy + b.h / 2.0).ceil().max(0.0) as usize).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                pixels[y * w + x] = 0.9;
            }
        }
    }
    GrayImage::new(w, h, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_scene() {
        let cfg = SynthConfig {
            frames: 10,
            tracks: 1,
            speed: 0.0,
            ..SynthConfig::default()
        };
        let s = synth_scenario(&cfg, 7).unwrap();
        assert_eq!(s.records.len(), 10);
        for (r, t) in s.records.iter().zip(&s.truth) {
            assert_eq!(r.nutriments.len(), 1);
            assert_eq!(t.next, r.centers());
            assert_eq!(t.crossings, 0);
        }
    }

    #[test]
    fn scripted_crossing_at_frame_five() {
        let cfg = SynthConfig {
            frames: 12,
            tracks: 0,
            ..SynthConfig::default()
        };
        // passed line of the default geometry sits near y = 636 at x = 700
        let track = Track {
            spawn: 0,
            origin: Point::new(700.0, 380.0),
            velocity: Point::new(0.0, 50.0),
            accel: Point::default(),
            duration: 11.0,
            size: (10.0, 10.0),
        };
        let s = synth_from_tracks(&cfg, vec![track], 1).unwrap();
        let counts = s.crossing_counts();
        let mut expected = vec![0; 12];
        expected[5] = 1;
        assert_eq!(counts, expected);
    }

    #[test]
    fn same_seed_same_stream() {
        let cfg = SynthConfig {
            frames: 60,
            tracks: 20,
            ripple_jitter: 1.5,
            ripple_dropout: 0.2,
            ..SynthConfig::default()
        };
        let a = synth_scenario(&cfg, 42).unwrap();
        let b = synth_scenario(&cfg, 42).unwrap();
        let text = |s: &SyntheticScenario| {
            s.records
                .iter()
                .map(FrameRecord::to_line)
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(text(&a), text(&b));
        assert_eq!(a.truth, b.truth);
        assert_ne!(text(&a), text(&synth_scenario(&cfg, 43).unwrap()));
    }

    #[test]
    fn invalid_configs() {
        let zero = SynthConfig {
            width: 0.0,
            ..SynthConfig::default()
        };
        assert!(matches!(synth_scenario(&zero, 0), Err(Error::Config(_))));
        let no_frames = SynthConfig {
            frames: 0,
            ..SynthConfig::default()
        };
        assert!(synth_scenario(&no_frames, 0).is_err());
        let bad_p = SynthConfig {
            ripple_dropout: 1.5,
            ..SynthConfig::default()
        };
        assert!(synth_scenario(&bad_p, 0).is_err());
    }

    #[test]
    fn pellets_fly_and_cross() {
        let cfg = SynthConfig {
            frames: 200,
            tracks: 40,
            ..SynthConfig::default()
        };
        let s = synth_scenario(&cfg, 3).unwrap();
        let total: u32 = s.crossing_counts().iter().sum();
        // pellets spawning late may still be airborne at the end
        assert!((30..=40).contains(&total), "{total}");
        assert!(s.truth.iter().any(|t| t.activity > 0.0));
    }

    #[test]
    fn render_dimensions() {
        let cfg = SynthConfig {
            frames: 30,
            tracks: 5,
            ..SynthConfig::for_frame(192.0, 108.0)
        };
        let s = synth_scenario(&cfg, 1).unwrap();
        let img = render_frame(&s, 29).unwrap();
        assert_eq!((img.width(), img.height()), (192, 108));
    }
}
