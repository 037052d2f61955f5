use fgt_tensor::{Scalar, Tensor};

use crate::error::{shape_err, Error, Result};

/// A raster with interleaved channels that can be resampled by a flow.
pub trait Raster<T: Scalar>: Sized {
    const CHANNELS: usize;
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn samples(&self) -> &[T];
    fn from_samples(width: usize, height: usize, samples: Vec<T>) -> Self;
}

/// Dense per-pixel displacement `(dx, dy)` in pixels, row-major and interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> FlowField<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(shape_err(format!("flow field must be at least 2x2, got {width}x{height}")));
        }
        if data.len() != width * height * 2 {
            return Err(shape_err(format!(
                "flow {width}x{height} needs {} values, got {}",
                width * height * 2,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flow field".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, T::zero(), T::zero())
    }

    pub fn constant(width: usize, height: usize, dx: T, dy: T) -> Self {
        assert!(width >= 2 && height >= 2, "flow field must be at least 2x2");
        let mut data = Vec::with_capacity(width * height * 2);
        for _ in 0..width * height {
            data.push(dx);
            data.push(dy);
        }
        Self { width, height, data }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> (T, T)) -> Self {
        assert!(width >= 2 && height >= 2, "flow field must be at least 2x2");
        let mut data = Vec::with_capacity(width * height * 2);
        for y in 0..height {
            for x in 0..width {
                let (dx, dy) = f(x, y);
                data.push(dx);
                data.push(dy);
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (T, T) {
        let i = 2 * (y * self.width + x);
        (self.data[i], self.data[i + 1])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: (T, T)) {
        let i = 2 * (y * self.width + x);
        self.data[i] = v.0;
        self.data[i + 1] = v.1;
    }

    pub fn same_size(&self, other: &impl HasSize) -> bool {
        self.width == other.size().0 && self.height == other.size().1
    }

    pub fn negated(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| -v).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> FlowField<U> {
        FlowField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| U::of(v.as_f64())).collect(),
        }
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.data
            .chunks_exact(2)
            .map(|c| c[0].as_f64().hypot(c[1].as_f64()))
            .collect()
    }

    /// `[2, H, W]` planar tensor.
    pub fn to_tensor(&self) -> Tensor<T> {
        planar(&self.data, self.width, self.height, 2)
    }

    pub fn from_tensor(t: &Tensor<T>) -> Result<Self> {
        let (w, h, data) = interleaved(t, 2)?;
        Self::new(w, h, data)
    }
}

impl<T: Scalar> Raster<T> for FlowField<T> {
    const CHANNELS: usize = 2;
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn samples(&self) -> &[T] {
        &self.data
    }
    fn from_samples(width: usize, height: usize, samples: Vec<T>) -> Self {
        Self {
            width,
            height,
            data: samples,
        }
    }
}

/// RGB frame, values in `[0, 1]`, row-major and interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> Frame<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(shape_err(format!(
                "frame {width}x{height} needs {} values, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, v: T) -> Self {
        Self {
            width,
            height,
            data: vec![v; width * height * 3],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [T; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [T; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [T; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&v);
    }

    pub fn cast<U: Scalar>(&self) -> Frame<U> {
        Frame {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| U::of(v.as_f64())).collect(),
        }
    }

    /// `[3, H, W]` planar tensor.
    pub fn to_tensor(&self) -> Tensor<T> {
        planar(&self.data, self.width, self.height, 3)
    }

    pub fn from_tensor(t: &Tensor<T>) -> Result<Self> {
        let (w, h, data) = interleaved(t, 3)?;
        Self::new(w, h, data)
    }
}

impl<T: Scalar> Raster<T> for Frame<T> {
    const CHANNELS: usize = 3;
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn samples(&self) -> &[T] {
        &self.data
    }
    fn from_samples(width: usize, height: usize, samples: Vec<T>) -> Self {
        Self {
            width,
            height,
            data: samples,
        }
    }
}

/// Binary per-pixel map.
///
/// As a [`RegionMask`], `true` marks corrupted / invalid pixels; as an
/// [`EdgeMap`], `true` marks edge pixels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMap {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

pub type RegionMask = BinaryMap;
pub type EdgeMap = BinaryMap;

impl BinaryMap {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(shape_err(format!(
                "mask {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn coverage(&self) -> f64 {
        self.count() as f64 / self.data.len() as f64
    }

    pub fn inverted(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        assert_eq!((self.width, self.height), (other.width, other.height));
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a || b).collect(),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        assert_eq!((self.width, self.height), (other.width, other.height));
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a && b).collect(),
        }
    }

    /// 8-neighbourhood dilation by `r` pixels.
    pub fn dilated(&self, r: usize) -> Self {
        let (w, h) = (self.width, self.height);
        let r = r as isize;
        Self::from_fn(w, h, |x, y| {
            for dy in -r..=r {
                for dx in -r..=r {
                    let (xx, yy) = (x as isize + dx, y as isize + dy);
                    if xx >= 0 && yy >= 0 && (xx as usize) < w && (yy as usize) < h && self.get(xx as usize, yy as usize) {
                        return true;
                    }
                }
            }
            false
        })
    }

    /// Intersection-over-union with another map (1 when both are empty).
    pub fn iou(&self, other: &Self) -> f64 {
        let inter = self.intersection(other).count();
        let uni = self.union(other).count();
        if uni == 0 {
            1.0
        } else {
            inter as f64 / uni as f64
        }
    }

    /// `[1, H, W]` tensor of 0/1.
    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        Tensor::new(
            &[1, self.height, self.width],
            self.data.iter().map(|&b| if b { T::one() } else { T::zero() }).collect(),
        )
    }
}

/// Anything with a `(width, height)`.
pub trait HasSize {
    fn size(&self) -> (usize, usize);
}

impl<T> HasSize for FlowField<T> {
    fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

impl<T> HasSize for Frame<T> {
    fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

impl HasSize for BinaryMap {
    fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

pub(crate) fn check_same(what: &str, a: &impl HasSize, b: &impl HasSize) -> Result<()> {
    if a.size() != b.size() {
        return Err(shape_err(format!(
            "{what}: {:?} vs {:?}",
            a.size(),
            b.size()
        )));
    }
    Ok(())
}

fn planar<T: Scalar>(data: &[T], w: usize, h: usize, c: usize) -> Tensor<T> {
    let mut out = vec![T::zero(); data.len()];
    for i in 0..w * h {
        for ch in 0..c {
            out[ch * w * h + i] = data[i * c + ch];
        }
    }
    Tensor::new(&[c, h, w], out)
}

fn interleaved<T: Scalar>(t: &Tensor<T>, c: usize) -> Result<(usize, usize, Vec<T>)> {
    let s = t.shape();
    if s.len() != 3 || s[0] != c {
        return Err(shape_err(format!("expected [{c}, H, W] tensor, got {s:?}")));
    }
    let (h, w) = (s[1], s[2]);
    let mut out = vec![T::zero(); t.numel()];
    for i in 0..w * h {
        for ch in 0..c {
            out[i * c + ch] = t.data()[ch * w * h + i];
        }
    }
    Ok((w, h, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_or_non_finite_fields() {
        assert!(FlowField::<f32>::new(1, 4, vec![0.0; 8]).is_err());
        assert!(FlowField::<f32>::new(2, 2, vec![0.0; 7]).is_err());
        let mut d = vec![0.0f32; 8];
        d[3] = f32::NAN;
        assert!(matches!(FlowField::new(2, 2, d), Err(Error::NonFinite(_))));
    }

    #[test]
    fn tensor_layout_round_trip() {
        let f = FlowField::<f64>::from_fn(3, 2, |x, y| (x as f64, 10.0 + y as f64));
        let t = f.to_tensor();
        assert_eq!(t.shape(), &[2, 2, 3]);
        assert_eq!(t.data()[..3], [0.0, 1.0, 2.0]);
        assert_eq!(FlowField::from_tensor(&t).unwrap(), f);
    }

    #[test]
    fn mask_set_ops() {
        let a = BinaryMap::from_fn(4, 4, |x, _| x < 2);
        let b = BinaryMap::from_fn(4, 4, |x, _| x >= 1 && x < 3);
        assert_eq!(a.intersection(&b).count(), 4);
        assert_eq!(a.union(&b).count(), 12);
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(a.inverted().count(), 8);
        let d = BinaryMap::from_fn(5, 5, |x, y| x == 2 && y == 2).dilated(1);
        assert_eq!(d.count(), 9);
    }
}
