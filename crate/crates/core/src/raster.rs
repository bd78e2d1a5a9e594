//! In-memory RGB images with the handful of pixel operations the pipeline
//! needs: decode/encode, bilinear sampling, and letterbox resizing.

use crate::error::{Error, Result};
use std::path::Path;

/// An 8-bit RGB image, row-major interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageTensor {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ImageTensor {
    pub fn new(width: u32, height: u32) -> ImageTensor {
        assert!(width >= 1 && height >= 1);
        ImageTensor {
            width,
            height,
            data: vec![0; (width * height * 3) as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> ImageTensor {
        let mut img = ImageTensor::new(width, height);
        for y in 0..height {
            for x in 0..width {
                img.set_px(x, y, f(x, y));
            }
        }
        img
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<ImageTensor> {
        if data.len() != (width * height * 3) as usize {
            return Err(Error::invalid("raw buffer does not match dimensions"));
        }
        if width < 1 || height < 1 {
            return Err(Error::invalid("image dimensions must be at least 1x1"));
        }
        Ok(ImageTensor {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn px(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_px(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = ((y * self.width + x) * 3) as usize;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Nearest pixel with coordinates clamped to the canvas; sampling past
    /// the border replicates the edge.
    #[inline]
    pub fn px_clamped(&self, x: i64, y: i64) -> [u8; 3] {
        let cx = x.clamp(0, self.width as i64 - 1) as u32;
        let cy = y.clamp(0, self.height as i64 - 1) as u32;
        self.px(cx, cy)
    }

    /// Bilinear sample at fractional coordinates, edge-replicated.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> [u8; 3] {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (x0, y0) = (x0 as i64, y0 as i64);
        let p00 = self.px_clamped(x0, y0);
        let p10 = self.px_clamped(x0 + 1, y0);
        let p01 = self.px_clamped(x0, y0 + 1);
        let p11 = self.px_clamped(x0 + 1, y0 + 1);
        let mut out = [0u8; 3];
        for c in 0..3 {
            let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
            let bot = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
            out[c] = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
        }
        out
    }

    /// Aspect-preserving resize onto a square side-by-side canvas; the
    /// remainder is letterboxed with black bars.
    pub fn letterbox(&self, side: u32) -> ImageTensor {
        assert!(side >= 1);
        if self.width == side && self.height == side {
            return self.clone();
        }
        let scale = (side as f64 / self.width as f64).min(side as f64 / self.height as f64);
        let new_w = ((self.width as f64 * scale).round() as u32).max(1);
        let new_h = ((self.height as f64 * scale).round() as u32).max(1);
        let off_x = (side - new_w) / 2;
        let off_y = (side - new_h) / 2;
        let mut out = ImageTensor::new(side, side);
        for y in 0..new_h {
            for x in 0..new_w {
                let src_x = (x as f64 + 0.5) / scale - 0.5;
                let src_y = (y as f64 + 0.5) / scale - 0.5;
                out.set_px(x + off_x, y + off_y, self.sample_bilinear(src_x, src_y));
            }
        }
        out
    }

    pub fn read(path: &Path) -> Result<ImageTensor> {
        let img = image::open(path)?.into_rgb8();
        ImageTensor::from_raw(img.width(), img.height(), img.into_raw())
    }

    /// Writes PNG or JPEG depending on the file extension.
    pub fn write(&self, path: &Path) -> Result<()> {
        let buf: image::RgbImage =
            image::ImageBuffer::from_raw(self.width, self.height, self.data.clone())
                .expect("buffer matches dimensions");
        buf.save(path)?;
        Ok(())
    }

    /// PNG-encoded bytes, for serving over the wire.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut bytes = Vec::new();
        let buf: image::RgbImage =
            image::ImageBuffer::from_raw(self.width, self.height, self.data.clone())
                .expect("buffer matches dimensions");
        buf.write_to(
            &mut std::io::Cursor::new(&mut bytes),
            image::ImageFormat::Png,
        )?;
        Ok(bytes)
    }
}
