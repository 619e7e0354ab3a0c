//! RGB rasters with values in `[0, 1]`, binary masks, and PNG I/O.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};
use sha2::{Digest, Sha256};

use crate::error::{Error, IoContext, Result};

pub type Texel = [f32; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<Texel>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0.0; 3])
    }

    pub fn filled(width: usize, height: usize, value: Texel) -> Self {
        assert!(width > 0 && height > 0, "raster must be at least 1x1");
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Texel) -> Self {
        let mut r = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                r.data[y * width + x] = f(x, y);
            }
        }
        r
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[Texel] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Texel] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Texel {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: Texel) {
        self.data[y * self.width + x] = v;
    }

    /// Torus lookup.
    pub fn get_wrapped(&self, x: i64, y: i64) -> Texel {
        let xx = x.rem_euclid(self.width as i64) as usize;
        let yy = y.rem_euclid(self.height as i64) as usize;
        self.get(xx, yy)
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Raster> {
        if x + w > self.width || y + h > self.height || w == 0 || h == 0 {
            return Err(Error::Geometry(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{}",
                self.width, self.height
            )));
        }
        Ok(Raster::from_fn(w, h, |i, j| self.get(x + i, y + j)))
    }

    /// Rounds every channel to the nearest 8-bit level, so that a PNG round
    /// trip is lossless.
    pub fn quantize(&mut self) {
        for t in &mut self.data {
            for c in t.iter_mut() {
                *c = to_u8(*c) as f32 / 255.0;
            }
        }
    }

    pub fn quantized(mut self) -> Raster {
        self.quantize();
        self
    }

    pub fn to_rgb8(&self) -> RgbImage {
        RgbImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let t = self.get(x as usize, y as usize);
            Rgb([to_u8(t[0]), to_u8(t[1]), to_u8(t[2])])
        })
    }

    pub fn from_rgb8(img: &RgbImage) -> Raster {
        Raster::from_fn(img.width() as usize, img.height() as usize, |x, y| {
            let p = img.get_pixel(x as u32, y as u32).0;
            [p[0] as f32 / 255.0, p[1] as f32 / 255.0, p[2] as f32 / 255.0]
        })
    }

    pub fn to_png_bytes(&self) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        self.to_rgb8()
            .write_to(&mut buf, ImageFormat::Png)
            .expect("in-memory PNG encoding");
        buf.into_inner()
    }

    pub fn from_image_bytes(bytes: &[u8]) -> Result<Raster> {
        Ok(Raster::from_rgb8(&image::load_from_memory(bytes)?.to_rgb8()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Raster> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).at(path)?;
        Self::from_image_bytes(&bytes)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_png_bytes()).at(path)
    }

    /// Box filter by an integer factor; trailing texels that do not fill a
    /// whole box are dropped.
    pub fn downsample(&self, factor: usize) -> Result<Raster> {
        if factor == 0 {
            return Err(Error::Config("downsample factor must be at least 1".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let (w, h) = (self.width / factor, self.height / factor);
        if w == 0 || h == 0 {
            return Err(Error::Geometry(format!("downsampling by {factor} leaves nothing")));
        }
        let norm = 1.0 / (factor * factor) as f64;
        Ok(Raster::from_fn(w, h, |x, y| {
            let mut acc = [0f64; 3];
            for j in 0..factor {
                for i in 0..factor {
                    let t = self.get(x * factor + i, y * factor + j);
                    for c in 0..3 {
                        acc[c] += t[c] as f64;
                    }
                }
            }
            [(acc[0] * norm) as f32, (acc[1] * norm) as f32, (acc[2] * norm) as f32]
        }))
    }

    /// Stable digest of the texel values.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.width as u64).to_le_bytes());
        h.update((self.height as u64).to_le_bytes());
        for t in &self.data {
            for c in t {
                h.update(c.to_bits().to_le_bytes());
            }
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// A binary raster; `true` usually marks texels to synthesize.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, false)
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Mask {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.bits[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    pub fn and(&self, other: &Mask) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect(),
        }
    }

    pub fn not(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// White where set.
    pub fn to_raster(&self) -> Raster {
        Raster::from_fn(self.width, self.height, |x, y| {
            if self.get(x, y) {
                [1.0; 3]
            } else {
                [0.0; 3]
            }
        })
    }

    /// Set wherever the mean channel value exceeds one half.
    pub fn from_raster(r: &Raster) -> Mask {
        Mask::from_fn(r.width(), r.height(), |x, y| {
            let t = r.get(x, y);
            (t[0] + t[1] + t[2]) / 3.0 > 0.5
        })
    }

    /// 4-neighbour distance from every set texel to the nearest unset one
    /// (0 on unset texels, `u32::MAX` where no unset texel is reachable).
    pub fn distance_to_unset(&self) -> Vec<u32> {
        let (w, h) = (self.width, self.height);
        let mut dist = vec![u32::MAX; w * h];
        let mut queue = std::collections::VecDeque::new();
        for i in 0..w * h {
            if !self.bits[i] {
                dist[i] = 0;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let d = dist[i] + 1;
            let mut visit = |j: usize| {
                if dist[j] == u32::MAX {
                    dist[j] = d;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        dist
    }
}
