//! Clip directories: `frames/%05d.png`, `masks/%05d.png`, `flows_fwd/%05d.flo`,
//! `flows_bwd/%05d.flo` and `meta.json`.

use std::fs;
use std::path::{Path, PathBuf};

use fgt_tensor::Scalar;
use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::flowcore::{read_flo, write_flo, FlowField, Frame, RegionMask};
use crate::video::Clip;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn numbered(dir: &Path, i: usize, ext: &str) -> PathBuf {
    dir.join(format!("{i:05}.{ext}"))
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_frame_png<T: Scalar>(frame: &Frame<T>, path: &Path) -> Result<()> {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let img = RgbImage::from_fn(w, h, |x, y| {
        let v = frame.get(x as usize, y as usize);
        image::Rgb([to_u8(v[0].as_f64()), to_u8(v[1].as_f64()), to_u8(v[2].as_f64())])
    });
    img.save(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_frame_png<T: Scalar>(path: &Path) -> Result<Frame<T>> {
    let img = image::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(Frame::from_fn(w, h, |x, y| {
        let p = img.get_pixel(x as u32, y as u32).0;
        p.map(|c| T::of(c as f64 / 255.0))
    }))
}

/// Masks are stored as 8-bit grey, 255 on holes; anything above 127 reads as hole.
pub fn write_mask_png(mask: &RegionMask, path: &Path) -> Result<()> {
    let img = GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        image::Luma([if mask.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    img.save(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_mask_png(path: &Path) -> Result<RegionMask> {
    let img = image::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?.to_luma8();
    Ok(RegionMask::from_fn(img.width() as usize, img.height() as usize, |x, y| {
        img.get_pixel(x as u32, y as u32).0[0] > 127
    }))
}

/// Number of consecutive `%05d.<ext>` files from 0.
fn count_numbered(dir: &Path, ext: &str) -> usize {
    (0..).take_while(|&i| numbered(dir, i, ext).is_file()).count()
}

pub fn write_frames<T: Scalar>(dir: &Path, frames: &[Frame<T>]) -> Result<()> {
    mkdir(dir)?;
    frames.iter().enumerate().try_for_each(|(i, f)| write_frame_png(f, &numbered(dir, i, "png")))
}

pub fn read_frames<T: Scalar>(dir: &Path) -> Result<Vec<Frame<T>>> {
    let n = count_numbered(dir, "png");
    if n == 0 {
        return Err(Error::Format(format!("no frames in {}", dir.display())));
    }
    (0..n).map(|i| read_frame_png(&numbered(dir, i, "png"))).collect()
}

pub fn write_masks(dir: &Path, masks: &[RegionMask]) -> Result<()> {
    mkdir(dir)?;
    masks.iter().enumerate().try_for_each(|(i, m)| write_mask_png(m, &numbered(dir, i, "png")))
}

pub fn read_masks(dir: &Path) -> Result<Vec<RegionMask>> {
    let n = count_numbered(dir, "png");
    (0..n).map(|i| read_mask_png(&numbered(dir, i, "png"))).collect()
}

pub fn write_flows<T: Scalar>(dir: &Path, flows: &[FlowField<T>]) -> Result<()> {
    mkdir(dir)?;
    flows.iter().enumerate().try_for_each(|(i, f)| write_flo(f, numbered(dir, i, "flo")))
}

pub fn read_flows<T: Scalar>(dir: &Path) -> Result<Vec<FlowField<T>>> {
    let n = count_numbered(dir, "flo");
    (0..n).map(|i| Ok(read_flo::<f32>(numbered(dir, i, "flo"))?.cast())).collect()
}

pub fn write_clip<T: Scalar>(dir: &Path, clip: &Clip<T>, seed: Option<u64>) -> Result<()> {
    clip.validate()?;
    write_frames(&dir.join("frames"), &clip.frames)?;
    write_masks(&dir.join("masks"), &clip.masks)?;
    write_flows(&dir.join("flows_fwd"), &clip.flows_fwd)?;
    write_flows(&dir.join("flows_bwd"), &clip.flows_bwd)?;
    let (w, h) = clip.size();
    let meta = ClipMeta {
        frames: clip.len(),
        width: w,
        height: h,
        seed,
    };
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

/// Reads a clip directory. Missing flow directories read as zero motion.
pub fn read_clip<T: Scalar>(dir: &Path) -> Result<Clip<T>> {
    let frames = read_frames::<T>(&dir.join("frames"))?;
    let masks = read_masks(&dir.join("masks"))?;
    if masks.len() != frames.len() {
        return Err(shape_err(format!("{} frames but {} masks in {}", frames.len(), masks.len(), dir.display())));
    }
    let (w, h) = (frames[0].width(), frames[0].height());
    let n = frames.len() - 1;
    let flows = |name: &str| -> Result<Vec<FlowField<T>>> {
        let d = dir.join(name);
        if d.is_dir() {
            read_flows(&d)
        } else {
            Ok(vec![FlowField::zeros(w, h); n])
        }
    };
    let clip = Clip {
        flows_fwd: flows("flows_fwd")?,
        flows_bwd: flows("flows_bwd")?,
        frames,
        masks,
    };
    clip.validate()?;
    Ok(clip)
}

/// Clip directories directly under `root`, in name order.
pub fn list_clips(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join("frames").is_dir() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("frames").is_dir())
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Error::Format(format!("no clip directories under {}", root.display())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{generate_clip, random_clip_spec, MaskSpec};

    #[test]
    fn clip_round_trip() {
        let spec = random_clip_spec(2, 3, 16, 12, 1, 1.0, MaskSpec::default());
        let clip = generate_clip::<f32>(&spec).unwrap().clip;
        let dir = tempfile::tempdir().unwrap();
        write_clip(dir.path(), &clip, Some(2)).unwrap();
        let back = read_clip::<f32>(dir.path()).unwrap();
        assert_eq!(back.masks, clip.masks);
        assert_eq!(back.flows_fwd, clip.flows_fwd);
        for (a, b) in back.frames.iter().zip(&clip.frames) {
            assert!(a.data().iter().zip(b.data()).all(|(x, y)| (x - y).abs() <= 0.5 / 255.0 + 1e-6));
        }
        assert_eq!(list_clips(dir.path()).unwrap(), vec![dir.path().to_path_buf()]);
    }
}
