//! Rectangular raster regions with normalized intensities.
//!
//! An [`ImageRegion`] stores row-major, channel-interleaved intensity values
//! in `[0, 1]` with 1 (grayscale) or 3 (color) channels. Regions are the
//! common currency between frame ingestion, cropping, template buffering and
//! the point embedding.

use crate::error::{Error, Result};
use image::DynamicImage;

#[derive(Clone, Debug, PartialEq)]
pub struct ImageRegion {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageRegion {
    /// Builds a region from raw data. `data` is row-major and
    /// channel-interleaved, length `width * height * channels`, values in
    /// `[0, 1]`.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("region dimensions must be positive"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "unsupported channel count {channels} (expected 1 or 3)"
            )));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "data length {} does not match {}x{}x{} = {}",
                data.len(),
                width,
                height,
                channels,
                expected
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("intensity values must lie in [0, 1]"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Converts a decoded image. Grayscale inputs keep a single channel,
    /// everything else is expanded to RGB.
    pub fn from_dynamic(img: &DynamicImage) -> Self {
        use image::ColorType::*;
        match img.color() {
            L8 | L16 | La8 | La16 => {
                let gray = img.to_luma8();
                let (w, h) = gray.dimensions();
                let data = gray.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
                Self {
                    width: w as usize,
                    height: h as usize,
                    channels: 1,
                    data,
                }
            }
            _ => {
                let rgb = img.to_rgb8();
                let (w, h) = rgb.dimensions();
                let data = rgb.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
                Self {
                    width: w as usize,
                    height: h as usize,
                    channels: 3,
                    data,
                }
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Intensity at pixel (x, y), channel c.
    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Crops a continuous box, rounding to whole pixels and clamping so the
    /// crop stays inside the region. The crop is at least 1x1.
    pub fn crop(&self, x: f64, y: f64, w: f64, h: f64) -> Result<ImageRegion> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(Error::Frame("crop box has non-finite coordinates".into()));
        }
        let cw = (w.round() as i64).clamp(1, self.width as i64) as usize;
        let ch = (h.round() as i64).clamp(1, self.height as i64) as usize;
        let x0 = (x.round() as i64).clamp(0, (self.width - cw) as i64) as usize;
        let y0 = (y.round() as i64).clamp(0, (self.height - ch) as i64) as usize;

        let mut data = Vec::with_capacity(cw * ch * self.channels);
        for yy in y0..y0 + ch {
            let row = (yy * self.width + x0) * self.channels;
            data.extend_from_slice(&self.data[row..row + cw * self.channels]);
        }
        Ok(ImageRegion {
            width: cw,
            height: ch,
            channels: self.channels,
            data,
        })
    }

    /// Bilinear resize. Values stay in `[0, 1]` because interpolation is a
    /// convex combination of the source values.
    pub fn resize(&self, target_w: usize, target_h: usize) -> Result<ImageRegion> {
        if target_w == 0 || target_h == 0 {
            return Err(Error::invalid("resize target dimensions must be positive"));
        }
        let src_x = |i: usize| -> f64 {
            if target_w > 1 {
                i as f64 * (self.width - 1) as f64 / (target_w - 1) as f64
            } else {
                (self.width - 1) as f64 / 2.0
            }
        };
        let src_y = |j: usize| -> f64 {
            if target_h > 1 {
                j as f64 * (self.height - 1) as f64 / (target_h - 1) as f64
            } else {
                (self.height - 1) as f64 / 2.0
            }
        };

        let mut data = Vec::with_capacity(target_w * target_h * self.channels);
        for j in 0..target_h {
            let sy = src_y(j);
            let y0 = sy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let fy = sy - y0 as f64;
            for i in 0..target_w {
                let sx = src_x(i);
                let x0 = sx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let fx = sx - x0 as f64;
                for c in 0..self.channels {
                    let top = self.get(x0, y0, c) * (1.0 - fx) + self.get(x1, y0, c) * fx;
                    let bot = self.get(x0, y1, c) * (1.0 - fx) + self.get(x1, y1, c) * fx;
                    data.push(top * (1.0 - fy) + bot * fy);
                }
            }
        }
        Ok(ImageRegion {
            width: target_w,
            height: target_h,
            channels: self.channels,
            data,
        })
    }
}
