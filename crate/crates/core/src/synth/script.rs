//! Scene scripts.
//!
//! Plain text, one setting or occluder per line, `#` starts a comment:
//!
//! ```text
//! width = 500
//! height = 500
//! frames = 10
//! background = procedural        # or: flat R,G,B   or: file path/to/bg.png
//! background_seed = 7
//! noise_sigma = 0
//! noise_seed = 1
//! occluder rect x=10 y=40 w=40 h=70 color=255,0,255 frames=0-9 step=48,0
//! occluder ellipse cx=440 cy=300 rx=30 ry=22 color=0,255,255 frames=0-9 step=-40,10
//! ```
//!
//! `frames=a-b` (or a single index) lists the frames an occluder appears in;
//! in frame `f` it is shifted by `(f - a) * step`. Within a frame, later
//! lines draw over earlier ones.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{RasterImage, Rgb};
use crate::io::load_image;

use super::procedural::procedural_background;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Rect { x: i64, y: i64, w: i64, h: i64 },
    Ellipse { cx: i64, cy: i64, rx: i64, ry: i64 },
}

impl Shape {
    pub fn translated(self, dx: i64, dy: i64) -> Self {
        match self {
            Shape::Rect { x, y, w, h } => Shape::Rect { x: x + dx, y: y + dy, w, h },
            Shape::Ellipse { cx, cy, rx, ry } => Shape::Ellipse {
                cx: cx + dx,
                cy: cy + dy,
                rx,
                ry,
            },
        }
    }

    /// Inclusive-exclusive bounding box `(x0, y0, x1, y1)`.
    pub fn bounds(self) -> (i64, i64, i64, i64) {
        match self {
            Shape::Rect { x, y, w, h } => (x, y, x + w, y + h),
            Shape::Ellipse { cx, cy, rx, ry } => (cx - rx, cy - ry, cx + rx + 1, cy + ry + 1),
        }
    }

    pub fn contains(self, px: i64, py: i64) -> bool {
        match self {
            Shape::Rect { x, y, w, h } => px >= x && px < x + w && py >= y && py < y + h,
            Shape::Ellipse { cx, cy, rx, ry } => {
                let (dx, dy) = ((px - cx) as f64, (py - cy) as f64);
                (dx * dx) / (rx * rx) as f64 + (dy * dy) / (ry * ry) as f64 <= 1.0
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occluder {
    pub first_frame: usize,
    pub last_frame: usize,
    pub shape: Shape,
    pub color: Rgb,
    /// Displacement per frame after `first_frame`.
    pub step: (i64, i64),
}

impl Occluder {
    pub fn appears_in(&self, frame: usize) -> bool {
        (self.first_frame..=self.last_frame).contains(&frame)
    }

    /// The shape as placed in `frame`.
    pub fn placement(&self, frame: usize) -> Option<Shape> {
        self.appears_in(frame).then(|| {
            let n = (frame - self.first_frame) as i64;
            self.shape.translated(n * self.step.0, n * self.step.1)
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BackgroundSource {
    Procedural { seed: u64 },
    Flat(Rgb),
    File(std::path::PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneScript {
    pub background: RasterImage,
    pub occluders: Vec<Occluder>,
    /// Default frame count when rendering.
    pub frames: usize,
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

/// The default acceptance scene: 500x500, 10 frames, three moving
/// occluders, one of which parks for the last three frames.
pub const DEFAULT_SCENE: &str = include_str!("default.scene");

fn err(line: usize, reason: impl Into<String>) -> Error {
    Error::Script {
        line,
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| err(line, format!("`{key}`: cannot parse `{v}`")))
}

fn parse_pair(line: usize, key: &str, v: &str) -> Result<(i64, i64)> {
    let (a, b) = v
        .split_once(',')
        .ok_or_else(|| err(line, format!("`{key}` expects two comma-separated values")))?;
    Ok((parse_num(line, key, a)?, parse_num(line, key, b)?))
}

fn parse_rgb(line: usize, v: &str) -> Result<Rgb> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 3 {
        return Err(err(line, format!("color `{v}` must be R,G,B")));
    }
    Ok([
        parse_num(line, "color", parts[0])?,
        parse_num(line, "color", parts[1])?,
        parse_num(line, "color", parts[2])?,
    ])
}

fn parse_occluder(line: usize, rest: &str) -> Result<Occluder> {
    let mut tokens = rest.split_whitespace();
    let kind = tokens.next().ok_or_else(|| err(line, "occluder needs a shape"))?;
    let mut fields = std::collections::BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected key=value, got `{tok}`")))?;
        fields.insert(k, v);
    }
    let mut take = |k: &str| fields.remove(k).ok_or_else(|| err(line, format!("occluder missing `{k}`")));

    let shape = match kind {
        "rect" => Shape::Rect {
            x: parse_num(line, "x", take("x")?)?,
            y: parse_num(line, "y", take("y")?)?,
            w: parse_num(line, "w", take("w")?)?,
            h: parse_num(line, "h", take("h")?)?,
        },
        "ellipse" => Shape::Ellipse {
            cx: parse_num(line, "cx", take("cx")?)?,
            cy: parse_num(line, "cy", take("cy")?)?,
            rx: parse_num(line, "rx", take("rx")?)?,
            ry: parse_num(line, "ry", take("ry")?)?,
        },
        other => return Err(err(line, format!("unknown shape `{other}`"))),
    };
    let color = parse_rgb(line, take("color")?)?;
    let frames = take("frames")?;
    let (first_frame, last_frame) = match frames.split_once('-') {
        Some((a, b)) => (parse_num(line, "frames", a)?, parse_num(line, "frames", b)?),
        None => {
            let f = parse_num(line, "frames", frames)?;
            (f, f)
        }
    };
    let step = match fields.remove("step") {
        Some(v) => parse_pair(line, "step", v)?,
        None => (0, 0),
    };
    if let Some(k) = fields.keys().next() {
        return Err(err(line, format!("unknown occluder field `{k}`")));
    }
    if first_frame > last_frame {
        return Err(err(line, "frame range is reversed"));
    }
    let degenerate = match shape {
        Shape::Rect { w, h, .. } => w <= 0 || h <= 0,
        Shape::Ellipse { rx, ry, .. } => rx <= 0 || ry <= 0,
    };
    if degenerate {
        return Err(err(line, "shape extents must be positive"));
    }
    Ok(Occluder {
        first_frame,
        last_frame,
        shape,
        color,
        step,
    })
}

impl SceneScript {
    /// Parses a script; `file` backgrounds resolve relative to `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut width = None;
        let mut height = None;
        let mut frames = 10usize;
        let mut source = BackgroundSource::Procedural { seed: 0 };
        let mut bg_seed = None;
        let mut noise_sigma = 0.0;
        let mut noise_seed = 0u64;
        let mut occluders = Vec::new();

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix("occluder ") {
                occluders.push(parse_occluder(line, rest)?);
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "width" => width = Some(parse_num::<usize>(line, k, v)?),
                "height" => height = Some(parse_num::<usize>(line, k, v)?),
                "frames" => frames = parse_num(line, k, v)?,
                "background_seed" => bg_seed = Some(parse_num(line, k, v)?),
                "noise_sigma" => noise_sigma = parse_num(line, k, v)?,
                "noise_seed" => noise_seed = parse_num(line, k, v)?,
                "background" => {
                    source = match v.split_once(char::is_whitespace) {
                        None if v == "procedural" => BackgroundSource::Procedural { seed: 0 },
                        Some(("flat", rgb)) => BackgroundSource::Flat(parse_rgb(line, rgb.trim())?),
                        Some(("file", p)) => BackgroundSource::File(base_dir.join(p.trim())),
                        _ => return Err(err(line, format!("unknown background `{v}`"))),
                    }
                }
                other => return Err(err(line, format!("unknown key `{other}`"))),
            }
        }
        if let (BackgroundSource::Procedural { seed }, Some(s)) = (&mut source, bg_seed) {
            *seed = s;
        }
        if !(noise_sigma >= 0.0) {
            return Err(err(0, "noise_sigma must be >= 0"));
        }

        let background = match source {
            BackgroundSource::File(p) => {
                let img = load_image(&p)?;
                if width.is_some_and(|w| w != img.width()) || height.is_some_and(|h| h != img.height()) {
                    return Err(err(0, "width/height disagree with the background file"));
                }
                img
            }
            BackgroundSource::Flat(rgb) => RasterImage::filled(
                width.ok_or_else(|| err(0, "missing width"))?,
                height.ok_or_else(|| err(0, "missing height"))?,
                rgb,
            )?,
            BackgroundSource::Procedural { seed } => procedural_background(
                width.ok_or_else(|| err(0, "missing width"))?,
                height.ok_or_else(|| err(0, "missing height"))?,
                seed,
            )?,
        };
        Ok(Self {
            background,
            occluders,
            frames,
            noise_sigma,
            noise_seed,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn default_acceptance() -> Self {
        Self::parse(DEFAULT_SCENE, Path::new(".")).expect("built-in scene parses")
    }

    /// Smallest per-pixel contrast (max over channels) between any occluder
    /// pixel and the background it hides, over frames `0..k`.
    pub fn min_occluder_contrast(&self, k: usize) -> Option<u8> {
        let (w, h) = self.background.dims();
        let mut best: Option<u8> = None;
        for f in 0..k {
            for o in &self.occluders {
                let Some(shape) = o.placement(f) else { continue };
                let (x0, y0, x1, y1) = shape.bounds();
                for y in y0.max(0)..y1.min(h as i64) {
                    for x in x0.max(0)..x1.min(w as i64) {
                        if shape.contains(x, y) {
                            let bg = self.background.pixel(x as usize, y as usize);
                            let d = (0..3).map(|c| bg[c].abs_diff(o.color[c])).max().unwrap_or(0);
                            best = Some(best.map_or(d, |b| b.min(d)));
                        }
                    }
                }
            }
        }
        best
    }
}
