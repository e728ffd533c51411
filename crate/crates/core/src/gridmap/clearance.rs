//! Exact Euclidean distance transform (two-pass lower envelope of parabolas).

use super::OccupancyGrid;
use crate::point::Point;

/// Per-cell distance from the cell center to the nearest occupied cell center.
#[derive(Clone, Debug, PartialEq)]
pub struct ClearanceField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ClearanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Bilinear interpolation between cell centers. Points beyond the outermost
    /// centers are clamped onto them.
    pub fn sample(&self, p: Point) -> f64 {
        let max_u = (self.width - 1) as f64;
        let max_v = (self.height - 1) as f64;
        let u = (p.x - 0.5).clamp(0.0, max_u);
        let v = (p.y - 0.5).clamp(0.0, max_v);
        let x0 = (u.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (v.floor() as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = u - x0 as f64;
        let ty = v - y0 as f64;
        let top = self.at(x0, y0) * (1.0 - tx) + self.at(x1, y0) * tx;
        let bottom = self.at(x0, y1) * (1.0 - tx) + self.at(x1, y1) * tx;
        top * (1.0 - ty) + bottom * ty
    }

    /// Clearance seen by a body at `p`: zero inside occupied cells or outside
    /// the map, bilinear elsewhere.
    pub fn sample_in(&self, grid: &OccupancyGrid, p: Point) -> f64 {
        if grid.is_free_at(p) {
            self.sample(p)
        } else {
            0.0
        }
    }
}

/// Exact Euclidean distance transform of the free space.
pub fn distance_transform(grid: &OccupancyGrid) -> ClearanceField {
    let (w, h) = (grid.width(), grid.height());
    let mut sq: Vec<f64> = grid
        .cells()
        .iter()
        .map(|c| if c.is_free() { f64::INFINITY } else { 0.0 })
        .collect();

    let n = w.max(h);
    let mut buf = Envelope::with_capacity(n);
    let mut column = vec![0.0; h];
    let mut out = vec![0.0; n];
    for x in 0..w {
        for y in 0..h {
            column[y] = sq[y * w + x];
        }
        buf.transform(&column, &mut out[..h]);
        for y in 0..h {
            sq[y * w + x] = out[y];
        }
    }
    let mut row = vec![0.0; w];
    for y in 0..h {
        row.copy_from_slice(&sq[y * w..(y + 1) * w]);
        buf.transform(&row, &mut out[..w]);
        sq[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }

    ClearanceField {
        width: w,
        height: h,
        values: sq.into_iter().map(f64::sqrt).collect(),
    }
}

/// Scratch space for the 1D squared-distance transform.
struct Envelope {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            vertices: vec![0; n],
            bounds: vec![0.0; n + 1],
        }
    }

    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        // Sources with infinite cost contribute nothing to the envelope.
        let mut k: isize = -1;
        for q in 0..n {
            if f[q].is_infinite() {
                continue;
            }
            loop {
                if k < 0 {
                    k = 0;
                    self.vertices[0] = q;
                    self.bounds[0] = f64::NEG_INFINITY;
                    self.bounds[1] = f64::INFINITY;
                    break;
                }
                let v = self.vertices[k as usize];
                let s = ((f[q] + (q * q) as f64) - (f[v] + (v * v) as f64)) / (2.0 * (q as f64 - v as f64));
                if s <= self.bounds[k as usize] {
                    k -= 1;
                    continue;
                }
                k += 1;
                self.vertices[k as usize] = q;
                self.bounds[k as usize] = s;
                self.bounds[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
        if k < 0 {
            out.fill(f64::INFINITY);
            return;
        }
        let mut j = 0usize;
        for (q, o) in out.iter_mut().enumerate() {
            while self.bounds[j + 1] < q as f64 {
                j += 1;
            }
            let v = self.vertices[j];
            let d = q as f64 - v as f64;
            *o = d * d + f[v];
        }
    }
}
