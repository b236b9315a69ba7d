//! Row-major interleaved image buffers and PNG I/O.

use std::path::Path;

use crate::error::{Error, Result};

/// Pixel sample type. Interpolation runs in `f32` unless a type overrides [`Sample::blend`].
pub trait Sample: Copy + Send + Sync + PartialEq + std::fmt::Debug + 'static {
    fn to_f32(self) -> f32;
    fn from_f32(v: f32) -> Self;

    /// Bilinear blend. `top` and `bottom` each hold two horizontally adjacent
    /// pixels of `out.len()` channels; `fx`, `fy` lie in `[0, 1)`.
    #[inline(always)]
    fn blend(top: &[Self], bottom: &[Self], fx: f32, fy: f32, out: &mut [Self]) {
        let c = out.len();
        for ch in 0..c {
            let (a, b) = (top[ch].to_f32(), top[c + ch].to_f32());
            let (cc, d) = (bottom[ch].to_f32(), bottom[c + ch].to_f32());
            let t = a + fx * (b - a);
            let m = cc + fx * (d - cc);
            out[ch] = Self::from_f32(t + fy * (m - t));
        }
    }
}

/// Fractional bits of the fixed-point weights used for `u8` blending.
const BLEND_BITS: u32 = 11;

impl Sample for u8 {
    #[inline]
    fn to_f32(self) -> f32 {
        self as f32
    }
    #[inline]
    fn from_f32(v: f32) -> Self {
        // truncation equals floor here: negatives saturate to 0, as does NaN
        (v + 0.5) as u8
    }

    #[inline(always)]
    fn blend(top: &[u8], bottom: &[u8], fx: f32, fy: f32, out: &mut [u8]) {
        let one = 1u32 << BLEND_BITS;
        let wx = (fx * one as f32 + 0.5) as u32;
        let wy = (fy * one as f32 + 0.5) as u32;
        let (vx, vy) = (one - wx, one - wy);
        let lerp = |a: u32, wa: u32, b: u32, wb: u32| a.wrapping_mul(wa).wrapping_add(b.wrapping_mul(wb));
        // at most 255 << 22 before rounding, so nothing wraps
        let c = out.len();
        for ch in 0..c {
            let t = lerp(top[ch] as u32, vx, top[c + ch] as u32, wx);
            let m = lerp(bottom[ch] as u32, vx, bottom[c + ch] as u32, wx);
            let v = lerp(t, vy, m, wy).wrapping_add(1 << (2 * BLEND_BITS - 1));
            out[ch] = (v >> (2 * BLEND_BITS)) as u8;
        }
    }
}

impl Sample for f32 {
    #[inline]
    fn to_f32(self) -> f32 {
        self
    }
    #[inline]
    fn from_f32(v: f32) -> Self {
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer<T> {
    width: u32,
    height: u32,
    channels: u32,
    data: Vec<T>,
}

impl<T: Sample> ImageBuffer<T> {
    pub fn from_vec(width: u32, height: u32, channels: u32, data: Vec<T>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::invalid("image must have at least one channel"));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "image data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u32, value: T) -> Self {
        let n = width as usize * height as usize * channels.max(1) as usize;
        Self {
            width,
            height,
            channels: channels.max(1),
            data: vec![value; n],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn channels(&self) -> u32 {
        self.channels
    }
    pub fn data(&self) -> &[T] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u32) -> T {
        self.data[((y as usize * self.width as usize + x as usize) * self.channels as usize) + c as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: u32, value: T) {
        let i = (y as usize * self.width as usize + x as usize) * self.channels as usize + c as usize;
        self.data[i] = value;
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> ImageBuffer<U> {
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_f32(&self) -> ImageBuffer<f32> {
        self.map(Sample::to_f32)
    }

    /// Rounds and saturates into 8-bit samples.
    pub fn to_u8(&self) -> ImageBuffer<u8> {
        self.map(|v| u8::from_f32(v.to_f32()))
    }
}

/// Area-average downsample by an integer factor; trailing partial blocks are dropped.
pub fn downsample<T: Sample>(img: &ImageBuffer<T>, factor: u32) -> Result<ImageBuffer<T>> {
    if factor == 0 {
        return Err(Error::invalid("downsample factor must be at least 1"));
    }
    let w = img.width / factor;
    let h = img.height / factor;
    let c = img.channels;
    let mut out = ImageBuffer::filled(w, h, c, T::from_f32(0.0));
    let norm = 1.0 / (factor * factor) as f32;
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0f32;
                for dy in 0..factor {
                    for dx in 0..factor {
                        acc += img.get(x * factor + dx, y * factor + dy, ch).to_f32();
                    }
                }
                out.set(x, y, ch, T::from_f32(acc * norm));
            }
        }
    }
    Ok(out)
}

/// Loads a PNG as 1-channel gray or 3-channel RGB (alpha dropped).
pub fn load_png(path: impl AsRef<Path>) -> Result<ImageBuffer<u8>> {
    let path = path.as_ref();
    let img = image::open(path)?;
    let (w, h) = (img.width(), img.height());
    if img.color().has_color() {
        ImageBuffer::from_vec(w, h, 3, img.to_rgb8().into_raw())
    } else {
        ImageBuffer::from_vec(w, h, 1, img.to_luma8().into_raw())
    }
}

pub fn save_png(img: &ImageBuffer<u8>, path: impl AsRef<Path>) -> Result<()> {
    let color = match img.channels {
        1 => image::ExtendedColorType::L8,
        2 => image::ExtendedColorType::La8,
        3 => image::ExtendedColorType::Rgb8,
        4 => image::ExtendedColorType::Rgba8,
        n => return Err(Error::invalid(format!("cannot write a {n}-channel PNG"))),
    };
    image::save_buffer_with_format(
        path.as_ref(),
        &img.data,
        img.width,
        img.height,
        color,
        image::ImageFormat::Png,
    )?;
    Ok(())
}
