//! Simulated optical front end.
//!
//! The printed board is modelled as a reflectance image. Each detection
//! pattern lights exactly one square, and the single-pixel detector returns
//! the inner product of pattern and scene, normalized by the lit area so a
//! noiseless reading equals the mean reflectance under the pattern.
//! Additive Gaussian noise models the detector.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{Board, Square, SquareState};
use crate::table::OutputCode;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid photometry: {0}")]
    InvalidPhotometry(String),
    #[error("scene is {scene:?} but mask is {mask:?}")]
    DimensionMismatch {
        scene: (usize, usize),
        mask: (usize, usize),
    },
    #[error("illumination mask has no lit pixels")]
    EmptyMask,
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Rect {
        Rect { x, y, width, height }
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, px: usize, py: usize) -> bool {
        px >= self.x && px < self.x + self.width && py >= self.y && py < self.y + self.height
    }

    fn fits(&self, width: usize, height: usize) -> bool {
        self.x + self.width <= width && self.y + self.height <= height
    }

    fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }

    fn rows(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (self.y..self.y + self.height).map(|_| self.x..self.x + self.width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub width: usize,
    pub height: usize,
    /// Square regions in square order 1..=9.
    pub squares: [Rect; 9],
    /// "You lose" indicator, lit together with a winning SPI move.
    pub top_strip: Rect,
    /// "You win" indicator, lit when the human has already won.
    pub bottom_strip: Rect,
}

impl Default for GeometryConfig {
    /// 240×320 image, 60-pixel squares with 10-pixel gaps centered in the
    /// frame, 30-pixel status strips along the top and bottom edges.
    fn default() -> Self {
        GeometryConfig::grid(240, 320, 60, 10, 30).expect("default geometry is valid")
    }
}

impl GeometryConfig {
    /// Centers a 3×3 grid of `side`-pixel squares separated by `gap` pixels
    /// in a `width`×`height` image with full-width strips of
    /// `strip_height` pixels at the top and bottom.
    pub fn grid(
        width: usize,
        height: usize,
        side: usize,
        gap: usize,
        strip_height: usize,
    ) -> Result<GeometryConfig, OpticsError> {
        let span = 3 * side + 2 * gap;
        if span > width || span + 2 * strip_height > height {
            return Err(OpticsError::InvalidGeometry(format!(
                "{span}-pixel grid with {strip_height}-pixel strips does not fit {width}x{height}"
            )));
        }
        let x0 = (width - span) / 2;
        let y0 = (height - span) / 2;
        let squares = std::array::from_fn(|i| {
            let (row, col) = (i / 3, i % 3);
            Rect::new(x0 + col * (side + gap), y0 + row * (side + gap), side, side)
        });
        let geom = GeometryConfig {
            width,
            height,
            squares,
            top_strip: Rect::new(0, 0, width, strip_height),
            bottom_strip: Rect::new(0, height - strip_height, width, strip_height),
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn square(&self, square: Square) -> Rect {
        self.squares[square.index()]
    }

    fn regions(&self) -> impl Iterator<Item = (String, &Rect)> {
        self.squares
            .iter()
            .enumerate()
            .map(|(i, r)| (format!("square {}", i + 1), r))
            .chain([
                ("top strip".to_string(), &self.top_strip),
                ("bottom strip".to_string(), &self.bottom_strip),
            ])
    }

    /// All 11 regions are non-empty, inside the image and pairwise disjoint.
    pub fn validate(&self) -> Result<(), OpticsError> {
        if self.width == 0 || self.height == 0 {
            return Err(OpticsError::InvalidGeometry("empty image".into()));
        }
        let regions: Vec<_> = self.regions().collect();
        for (i, (name, rect)) in regions.iter().enumerate() {
            if rect.area() == 0 {
                return Err(OpticsError::InvalidGeometry(format!("{name} is empty")));
            }
            if !rect.fits(self.width, self.height) {
                return Err(OpticsError::InvalidGeometry(format!(
                    "{name} lies outside the {}x{} image",
                    self.width, self.height
                )));
            }
            for (other_name, other) in &regions[i + 1..] {
                if rect.overlaps(other) {
                    return Err(OpticsError::InvalidGeometry(format!("{name} overlaps {other_name}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotometryConfig {
    pub r_black: f64,
    pub r_gray: f64,
    pub r_white: f64,
    pub r_background: f64,
    /// Standard deviation of the additive noise on each normalized reading.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for PhotometryConfig {
    fn default() -> Self {
        PhotometryConfig {
            r_black: 0.1,
            r_gray: 0.5,
            r_white: 0.9,
            r_background: 0.0,
            noise_sigma: 0.02,
            seed: 0,
        }
    }
}

impl PhotometryConfig {
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if ![self.r_black, self.r_gray, self.r_white, self.r_background]
            .into_iter()
            .all(unit)
        {
            return Err(OpticsError::InvalidPhotometry("reflectances must lie in [0, 1]".into()));
        }
        if !(self.r_black < self.r_gray && self.r_gray < self.r_white) {
            return Err(OpticsError::InvalidPhotometry(format!(
                "need r_black < r_gray < r_white, got {} / {} / {}",
                self.r_black, self.r_gray, self.r_white
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(OpticsError::InvalidPhotometry(format!(
                "noise sigma {} must be finite and non-negative",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    pub fn reflectance(&self, state: SquareState) -> f64 {
        match state {
            SquareState::HumanOccupied => self.r_black,
            SquareState::Empty => self.r_gray,
            SquareState::SpiOccupied => self.r_white,
        }
    }
}

/// Row-major per-pixel reflectance.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl SceneImage {
    pub fn filled(width: usize, height: usize, value: f64) -> SceneImage {
        SceneImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn fill_rect(&mut self, rect: &Rect, value: f64) {
        for (y, cols) in (rect.y..).zip(rect.rows()) {
            let row = y * self.width;
            self.pixels[row + cols.start..row + cols.end].fill(value);
        }
    }

    /// Binary PGM (P5), reflectance × 255 rounded.
    pub fn to_pgm(&self) -> Vec<u8> {
        pgm(
            self.width,
            self.height,
            self.pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
        )
    }
}

fn pgm(width: usize, height: usize, values: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    Detection(Square),
    /// Display pattern number 1..=19.
    Display(u8),
}

/// Binary illumination pattern covering the whole board.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationMask {
    width: usize,
    height: usize,
    lit: Vec<bool>,
    /// Maximal runs of lit pixels as flat index ranges.
    runs: Vec<std::ops::Range<usize>>,
    kind: MaskKind,
}

impl IlluminationMask {
    fn from_rects(geom: &GeometryConfig, rects: &[Rect], kind: MaskKind) -> IlluminationMask {
        let mut lit = vec![false; geom.width * geom.height];
        for rect in rects {
            for (y, cols) in (rect.y..).zip(rect.rows()) {
                let row = y * geom.width;
                lit[row + cols.start..row + cols.end].fill(true);
            }
        }
        IlluminationMask::from_pixels(geom.width, geom.height, lit, kind)
    }

    /// Mask from raw pixels; used for custom patterns and tests.
    pub fn from_pixels(width: usize, height: usize, lit: Vec<bool>, kind: MaskKind) -> IlluminationMask {
        assert_eq!(lit.len(), width * height, "mask pixel count");
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &on) in lit.iter().enumerate() {
            match (on, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..lit.len());
        }
        IlluminationMask {
            width,
            height,
            lit,
            runs,
            kind,
        }
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_lit(&self, x: usize, y: usize) -> bool {
        self.lit[y * self.width + x]
    }

    pub fn lit_count(&self) -> usize {
        self.runs.iter().map(|r| r.len()).sum()
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        pgm(
            self.width,
            self.height,
            self.lit.iter().map(|&on| if on { 255 } else { 0 }),
        )
    }
}

/// Pattern lighting only square `square`.
pub fn detection_mask(square: Square, geom: &GeometryConfig) -> Result<IlluminationMask, OpticsError> {
    geom.validate()?;
    Ok(IlluminationMask::from_rects(
        geom,
        &[geom.square(square)],
        MaskKind::Detection(square),
    ))
}

/// Display pattern for an output code; `None` for no action.
pub fn display_pattern_mask(code: OutputCode, geom: &GeometryConfig) -> Option<IlluminationMask> {
    let index = code.pattern_index()?;
    let rects = match code {
        OutputCode::Move { square, winning: false } => vec![geom.square(square)],
        OutputCode::Move { square, winning: true } => vec![geom.square(square), geom.top_strip],
        OutputCode::HumanWon => vec![geom.bottom_strip],
        OutputCode::NoAction => unreachable!("no pattern index"),
    };
    Some(IlluminationMask::from_rects(geom, &rects, MaskKind::Display(index)))
}

/// Renders the physical board: gray squares, black and white cards on
/// occupied squares, background reflectance everywhere else.
pub fn render_board(board: &Board, geom: &GeometryConfig, photo: &PhotometryConfig) -> Result<SceneImage, OpticsError> {
    geom.validate()?;
    let mut scene = SceneImage::filled(geom.width, geom.height, photo.r_background);
    for square in Square::ALL {
        scene.fill_rect(&geom.square(square), photo.reflectance(board.get(square)));
    }
    Ok(scene)
}

/// Unnormalized inner product of mask and scene.
pub fn inner_product(scene: &SceneImage, mask: &IlluminationMask) -> Result<f64, OpticsError> {
    if (scene.width, scene.height) != (mask.width, mask.height) {
        return Err(OpticsError::DimensionMismatch {
            scene: (scene.width, scene.height),
            mask: (mask.width, mask.height),
        });
    }
    Ok(mask
        .runs
        .iter()
        .map(|run| scene.pixels[run.clone()].iter().sum::<f64>())
        .sum())
}

/// One single-pixel reading: mean reflectance under the mask plus noise.
pub fn measure<R: Rng + ?Sized>(
    scene: &SceneImage,
    mask: &IlluminationMask,
    photo: &PhotometryConfig,
    rng: &mut R,
) -> Result<f64, OpticsError> {
    let raw = inner_product(scene, mask)?;
    let area = mask.lit_count();
    if area == 0 {
        return Err(OpticsError::EmptyMask);
    }
    Ok(raw / area as f64 + noise_sample(photo.noise_sigma, rng))
}

fn noise_sample<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
    } else {
        0.0
    }
}

/// Nine readings in square order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementVector(pub [f64; 9]);

impl MeasurementVector {
    pub fn get(&self, square: Square) -> f64 {
        self.0[square.index()]
    }
}

/// Runs the nine detection patterns in order 1..=9.
pub fn scan_state<R: Rng + ?Sized>(
    scene: &SceneImage,
    geom: &GeometryConfig,
    photo: &PhotometryConfig,
    rng: &mut R,
) -> Result<MeasurementVector, OpticsError> {
    let mut readings = [0.0; 9];
    for (slot, square) in readings.iter_mut().zip(Square::ALL) {
        *slot = measure(scene, &detection_mask(square, geom)?, photo, rng)?;
    }
    Ok(MeasurementVector(readings))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub t_low: f64,
    pub t_high: f64,
}

impl Thresholds {
    pub fn new(t_low: f64, t_high: f64) -> Result<Thresholds, OpticsError> {
        if 0.0 < t_low && t_low < t_high && t_high < 1.0 {
            Ok(Thresholds { t_low, t_high })
        } else {
            Err(OpticsError::InvalidPhotometry(format!(
                "thresholds must satisfy 0 < t_low < t_high < 1, got {t_low} / {t_high}"
            )))
        }
    }
}

/// Midpoints between adjacent reflectance levels.
pub fn default_thresholds(photo: &PhotometryConfig) -> Thresholds {
    Thresholds {
        t_low: (photo.r_black + photo.r_gray) / 2.0,
        t_high: (photo.r_gray + photo.r_white) / 2.0,
    }
}

pub fn classify_reading(value: f64, th: &Thresholds) -> SquareState {
    if value < th.t_low {
        SquareState::HumanOccupied
    } else if value > th.t_high {
        SquareState::SpiOccupied
    } else {
        SquareState::Empty
    }
}

pub fn classify(m: &MeasurementVector, th: &Thresholds) -> Board {
    Board::from_squares(m.0.map(|v| classify_reading(v, th)))
}

/// Geometry, photometry, thresholds and the nine detection masks built
/// once, for repeated scans of the same setup.
#[derive(Debug, Clone)]
pub struct OpticalFrontEnd {
    geom: GeometryConfig,
    photo: PhotometryConfig,
    thresholds: Thresholds,
    detection: Vec<IlluminationMask>,
}

impl OpticalFrontEnd {
    pub fn new(geom: GeometryConfig, photo: PhotometryConfig) -> Result<OpticalFrontEnd, OpticsError> {
        let thresholds = default_thresholds(&photo);
        OpticalFrontEnd::with_thresholds(geom, photo, thresholds)
    }

    pub fn with_thresholds(
        geom: GeometryConfig,
        photo: PhotometryConfig,
        thresholds: Thresholds,
    ) -> Result<OpticalFrontEnd, OpticsError> {
        geom.validate()?;
        photo.validate()?;
        let detection = Square::ALL
            .iter()
            .map(|&sq| detection_mask(sq, &geom))
            .collect::<Result<_, _>>()?;
        Ok(OpticalFrontEnd {
            geom,
            photo,
            thresholds,
            detection,
        })
    }

    pub fn geometry(&self) -> &GeometryConfig {
        &self.geom
    }

    pub fn photometry(&self) -> &PhotometryConfig {
        &self.photo
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    /// Renders the board and records the nine detection readings.
    pub fn scan<R: Rng + ?Sized>(&self, board: &Board, rng: &mut R) -> Result<MeasurementVector, OpticsError> {
        let scene = render_board(board, &self.geom, &self.photo)?;
        let mut readings = [0.0; 9];
        for (slot, mask) in readings.iter_mut().zip(&self.detection) {
            *slot = measure(&scene, mask, &self.photo, rng)?;
        }
        Ok(MeasurementVector(readings))
    }

    pub fn classify(&self, m: &MeasurementVector) -> Board {
        classify(m, &self.thresholds)
    }
}
