use fgt_tensor::Scalar;

use super::field::FlowField;

/// Forward differences of a multi-channel raster.
///
/// Layout is `[y][x][channel][dir]` with `dir` 0 = along x, 1 = along y. The
/// last column (row) has no forward neighbour and its difference is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Gradients {
    pub fn of_raster(width: usize, height: usize, channels: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), width * height * channels);
        let mut data = vec![0.0; width * height * channels * 2];
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    let v = values[(y * width + x) * channels + c];
                    let o = ((y * width + x) * channels + c) * 2;
                    if x + 1 < width {
                        data[o] = values[(y * width + x + 1) * channels + c] - v;
                    }
                    if y + 1 < height {
                        data[o + 1] = values[((y + 1) * width + x) * channels + c] - v;
                    }
                }
            }
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize, dir: usize) -> f64 {
        self.data[((y * self.width + x) * self.channels + c) * 2 + dir]
    }

    /// The same operator applied to every gradient component.
    pub fn second_order(&self) -> Gradients {
        Gradients::of_raster(self.width, self.height, self.channels * 2, &self.data)
    }

    pub fn mean_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum::<f64>() / self.data.len() as f64
    }
}

pub fn flow_gradients<T: Scalar>(flow: &FlowField<T>) -> Gradients {
    let values: Vec<f64> = flow.data().iter().map(|v| v.as_f64()).collect();
    Gradients::of_raster(flow.width(), flow.height(), 2, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_plane() {
        assert!(flow_gradients(&FlowField::<f32>::constant(5, 4, 2.0, 1.0)).data.iter().all(|&v| v == 0.0));
        let g = flow_gradients(&FlowField::<f64>::from_fn(6, 5, |x, _| (x as f64, 0.0)));
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(g.get(x, y, 0, 0), 1.0);
                assert_eq!(g.get(x, y, 0, 1), 0.0);
            }
            assert_eq!(g.get(5, y, 0, 0), 0.0);
        }
    }

    #[test]
    fn second_order_of_quadratic() {
        let g = flow_gradients(&FlowField::<f64>::from_fn(6, 3, |x, _| ((x * x) as f64, 0.0))).second_order();
        // d/dx of (x+1)^2 - x^2 = 2x+1 is 2 wherever both differences exist
        for x in 0..4 {
            assert_eq!(g.get(x, 1, 0, 0), 2.0);
        }
    }
}
