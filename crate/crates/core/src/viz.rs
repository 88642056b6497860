//! PNG image grids and 2-D scatter plots.

use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const GRID_COLUMNS: usize = 10;
pub const SEPARATOR: u32 = 2;
const SEPARATOR_SHADE: u8 = 128;

pub fn pixel_byte(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// `(rows, columns)` of a grid holding `n` tiles.
pub fn grid_layout(n: usize) -> (usize, usize) {
    let cols = n.clamp(1, GRID_COLUMNS);
    (n.div_ceil(cols).max(1), cols)
}

/// Tiles `height x width` grayscale images row-major; unused cells stay black.
pub fn render_grid(images: &[&[f32]], height: usize, width: usize) -> Result<GrayImage> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidArgument("tile size must be positive".into()));
    }
    if let Some(bad) = images.iter().find(|im| im.len() != height * width) {
        return Err(Error::Shape(format!(
            "tile of {} pixels for a {height}x{width} grid",
            bad.len()
        )));
    }
    let (rows, cols) = grid_layout(images.len());
    let (h, w) = (height as u32, width as u32);
    let total_w = cols as u32 * w + (cols as u32 - 1) * SEPARATOR;
    let total_h = rows as u32 * h + (rows as u32 - 1) * SEPARATOR;
    let mut img = GrayImage::from_pixel(total_w, total_h, Luma([SEPARATOR_SHADE]));
    for cell in 0..rows * cols {
        let x0 = (cell % cols) as u32 * (w + SEPARATOR);
        let y0 = (cell / cols) as u32 * (h + SEPARATOR);
        for y in 0..h {
            for x in 0..w {
                let v = images
                    .get(cell)
                    .map_or(0, |im| pixel_byte(im[(y * w + x) as usize]));
                img.put_pixel(x0 + x, y0 + y, Luma([v]));
            }
        }
    }
    Ok(img)
}

pub fn save_png_gray(path: &Path, img: &GrayImage) -> Result<()> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    write_atomic(path, buf.get_ref())
}

pub fn save_png_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    write_atomic(path, buf.get_ref())
}

pub fn save_grid(path: &Path, images: &[&[f32]], height: usize, width: usize) -> Result<()> {
    save_png_gray(path, &render_grid(images, height, width)?)
}

/// Named point series drawn in a fixed palette order.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: &'a [(f64, f64)],
}

const PALETTE: [[u8; 3]; 6] = [
    [31, 119, 180],
    [44, 160, 44],
    [214, 39, 40],
    [255, 127, 14],
    [148, 103, 189],
    [140, 86, 75],
];
const MARGIN: u32 = 20;

/// Scatter plot with a framed plot area; later series are drawn on top.
pub fn render_scatter(series: &[Series], width: u32, height: u32) -> Result<RgbImage> {
    if width <= 2 * MARGIN || height <= 2 * MARGIN {
        return Err(Error::InvalidArgument("scatter canvas too small".into()));
    }
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Numerical("non-finite scatter point".into()));
        }
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if x_lo > x_hi {
        return Err(Error::EmptySelection("scatter with no points".into()));
    }
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (sx, sy) = (span(x_lo, x_hi), span(y_lo, y_hi));
    let (pw, ph) = ((width - 2 * MARGIN - 1) as f64, (height - 2 * MARGIN - 1) as f64);

    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let frame = Rgb([0, 0, 0]);
    for x in MARGIN - 1..=width - MARGIN {
        img.put_pixel(x, MARGIN - 1, frame);
        img.put_pixel(x, height - MARGIN, frame);
    }
    for y in MARGIN - 1..=height - MARGIN {
        img.put_pixel(MARGIN - 1, y, frame);
        img.put_pixel(width - MARGIN, y, frame);
    }
    for (i, s) in series.iter().enumerate() {
        let color = Rgb(PALETTE[i % PALETTE.len()]);
        for &(x, y) in s.points {
            let px = MARGIN as i64 + ((x - x_lo) / sx * pw).round() as i64;
            let py = (height - MARGIN - 1) as i64 - ((y - y_lo) / sy * ph).round() as i64;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (qx, qy) = (px + dx, py + dy);
                    if qx >= MARGIN as i64
                        && qy >= MARGIN as i64
                        && qx < (width - MARGIN) as i64
                        && qy < (height - MARGIN) as i64
                    {
                        img.put_pixel(qx as u32, qy as u32, color);
                    }
                }
            }
        }
    }
    Ok(img)
}
