//! Key-count accounting for window attention with global tokens.

use crate::error::{Error, Result};

/// Keys seen by one query: the `h×w` window plus `⌈H′/s⌉·⌈W′/s⌉` global tokens.
pub fn retrieval_count(grid_h: usize, grid_w: usize, h: usize, w: usize, s: usize) -> usize {
    assert!(s >= 1, "global stride must be >= 1");
    grid_h.div_ceil(s) * grid_w.div_ceil(s) + h * w
}

/// `⌈√(H′W′ / (H′W′ − hw))⌉`, the continuous-area bound on the stride.
pub fn closed_form_global_stride(grid_h: usize, grid_w: usize, h: usize, w: usize) -> Result<usize> {
    let (n, win) = (grid_h * grid_w, h * w);
    if win >= n {
        return Err(Error::Config(format!(
            "window {h}x{w} covers the whole {grid_h}x{grid_w} grid; stride bound undefined"
        )));
    }
    let r = (n as f64 / (n - win) as f64).sqrt();
    // guard against r landing a hair above an integer
    let c = r.ceil() as usize;
    Ok(if c > 1 && ((c - 1) as f64 - r).abs() < 1e-12 { c - 1 } else { c })
}

/// Smallest stride from which every larger stride keeps the per-query key count
/// strictly below `H′·W′`.
///
/// Returns the closed form when it satisfies that post-condition. The closed form
/// ignores the ceilings in the global grid size and can be too small when the
/// window nearly fills the grid; the smallest verified stride is returned then.
pub fn min_global_stride(grid_h: usize, grid_w: usize, h: usize, w: usize) -> Result<usize> {
    let bound = closed_form_global_stride(grid_h, grid_w, h, w)?;
    let n = grid_h * grid_w;
    let smax = grid_h.max(grid_w);
    // beyond smax the global grid is 1x1 and the count no longer changes
    let ok_from = |s0: usize| (s0..=smax.max(s0)).all(|s| retrieval_count(grid_h, grid_w, h, w, s) < n);
    if ok_from(bound) {
        return Ok(bound);
    }
    (bound..=smax)
        .find(|&s| ok_from(s))
        .ok_or_else(|| Error::Config(format!("no global stride keeps {h}x{w} windows below {grid_h}x{grid_w} keys")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_configs() {
        assert_eq!(min_global_stride(8, 8, 7, 7).unwrap(), 3);
        assert_eq!(retrieval_count(64, 108, 8, 8, 4), 64 + 432);
        assert_eq!(closed_form_global_stride(64, 108, 8, 8).unwrap(), 2);
        assert_eq!(min_global_stride(64, 108, 8, 8).unwrap(), 2);
        assert!(retrieval_count(64, 108, 8, 8, 1) >= 64 * 108);
        assert!(min_global_stride(4, 4, 4, 4).is_err());
    }

    #[test]
    fn closed_form_can_undershoot() {
        // ceil(sqrt(16/4)) = 2, but a 2-stride global grid of 2x2 plus 12 keys is 16
        assert_eq!(closed_form_global_stride(4, 4, 3, 4).unwrap(), 2);
        assert_eq!(retrieval_count(4, 4, 3, 4, 2), 16);
        let s = min_global_stride(4, 4, 3, 4).unwrap();
        assert!(s > 2 && retrieval_count(4, 4, 3, 4, s) < 16);
    }
}
