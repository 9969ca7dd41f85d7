//! Decision-boundary grids for 2-D data: fit the base classifier on the
//! dummy-augmented training set (the pre-relabel state), evaluate it over a
//! regular grid, and export CSV plus a PNG heatmap where the dummy class
//! renders black.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::Classifier;
use crate::dataset::{augment, sample_test, RowOrigin};
use crate::error::{Error, Result};
use crate::{mix_seed, seed_tags};

use super::config::ExperimentConfig;
use super::png::write_rgb_png;
use super::report::format_float;

/// Dummy class renders black; known classes cycle this palette.
const PALETTE: [[u8; 3]; 12] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 190],
    [0, 128, 128],
    [170, 110, 40],
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryGrid {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub resolution: usize,
    /// Row-major predicted labels, row 0 at the minimum y.
    pub labels: Vec<usize>,
    /// Overlay points: (x, y, label, sample-origin flag).
    pub points: Vec<(f64, f64, usize, bool)>,
    pub dummy_label: usize,
}

/// Builds the grid for a 2-D config and writes `<stem>_grid.csv`,
/// `<stem>_points.csv`, and `<stem>_boundary.png` into `out_dir`.
pub fn export_boundary(
    config: &ExperimentConfig,
    resolution: usize,
    out_dir: &Path,
) -> Result<BoundaryGrid> {
    if resolution == 0 {
        return Err(Error::invalid("resolution", "must be >= 1"));
    }
    let scenario = config.build_scenario()?;
    if scenario.train.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: scenario.train.dim(),
        });
    }
    let cfg = config.rtscv_with_seed();
    let ts = sample_test(
        &scenario.test,
        cfg.c,
        mix_seed(cfg.seed, seed_tags::SAMPLE),
    )?;
    let dummy = scenario.train.n_classes();
    let aug = augment(&scenario.train, &ts.sample, dummy)?;
    let model = config
        .classifier
        .fit(&aug.data, mix_seed(cfg.seed, seed_tags::FOLD_FIT))?;

    // ranges cover the augmented data with a 5% margin
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in aug.data.features().rows() {
        x_min = x_min.min(row[0]);
        x_max = x_max.max(row[0]);
        y_min = y_min.min(row[1]);
        y_max = y_max.max(row[1]);
    }
    let pad_x = 0.05 * (x_max - x_min).max(1e-9);
    let pad_y = 0.05 * (y_max - y_min).max(1e-9);
    let x_range = (x_min - pad_x, x_max + pad_x);
    let y_range = (y_min - pad_y, y_max + pad_y);

    let coord = |range: (f64, f64), i: usize| {
        if resolution == 1 {
            0.5 * (range.0 + range.1)
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (resolution - 1) as f64
        }
    };

    let mut labels = Vec::with_capacity(resolution * resolution);
    for iy in 0..resolution {
        let y = coord(y_range, iy);
        for ix in 0..resolution {
            let x = coord(x_range, ix);
            labels.push(model.predict(ndarray::aview1(&[x, y]))?);
        }
    }

    let points: Vec<(f64, f64, usize, bool)> = (0..aug.data.n_samples())
        .map(|row| {
            let xy = aug.data.row(row);
            let is_sample = matches!(aug.origin(row), RowOrigin::Sample { .. });
            (xy[0], xy[1], aug.data.labels()[row], is_sample)
        })
        .collect();

    let grid = BoundaryGrid {
        x_range,
        y_range,
        resolution,
        labels,
        points,
        dummy_label: dummy,
    };

    std::fs::create_dir_all(out_dir)?;
    let stem = config.cell_name();
    grid.write_grid_csv(&out_dir.join(format!("{stem}_grid.csv")))?;
    grid.write_points_csv(&out_dir.join(format!("{stem}_points.csv")))?;
    grid.write_png(&out_dir.join(format!("{stem}_boundary.png")))?;
    Ok(grid)
}

impl BoundaryGrid {
    pub fn label_at(&self, ix: usize, iy: usize) -> usize {
        self.labels[iy * self.resolution + ix]
    }

    /// Number of grid cells carrying the dummy label.
    pub fn dummy_cells(&self) -> usize {
        self.labels
            .iter()
            .filter(|&&l| l == self.dummy_label)
            .count()
    }

    /// Largest 4-connected region of dummy-labeled cells.
    pub fn largest_dummy_region(&self) -> usize {
        let res = self.resolution;
        let mut seen = vec![false; self.labels.len()];
        let mut best = 0usize;
        for start in 0..self.labels.len() {
            if seen[start] || self.labels[start] != self.dummy_label {
                continue;
            }
            let mut stack = vec![start];
            let mut size = 0usize;
            seen[start] = true;
            while let Some(cell) = stack.pop() {
                size += 1;
                let (iy, ix) = (cell / res, cell % res);
                let mut push = |jy: usize, jx: usize| {
                    let j = jy * res + jx;
                    if !seen[j] && self.labels[j] == self.dummy_label {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if ix > 0 {
                    push(iy, ix - 1);
                }
                if ix + 1 < res {
                    push(iy, ix + 1);
                }
                if iy > 0 {
                    push(iy - 1, ix);
                }
                if iy + 1 < res {
                    push(iy + 1, ix);
                }
            }
            best = best.max(size);
        }
        best
    }

    pub fn write_grid_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x,y,label")?;
        let res = self.resolution;
        let coord = |range: (f64, f64), i: usize| {
            if res == 1 {
                0.5 * (range.0 + range.1)
            } else {
                range.0 + (range.1 - range.0) * i as f64 / (res - 1) as f64
            }
        };
        for iy in 0..res {
            for ix in 0..res {
                writeln!(
                    out,
                    "{},{},{}",
                    format_float(Some(coord(self.x_range, ix))),
                    format_float(Some(coord(self.y_range, iy))),
                    self.label_at(ix, iy),
                )?;
            }
        }
        Ok(())
    }

    pub fn write_points_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x,y,label,sample_origin")?;
        for &(x, y, label, is_sample) in &self.points {
            writeln!(
                out,
                "{},{},{},{}",
                format_float(Some(x)),
                format_float(Some(y)),
                label,
                u8::from(is_sample),
            )?;
        }
        Ok(())
    }

    /// Heatmap with row 0 of the image at the maximum y (plot convention).
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let res = self.resolution;
        let mut pixels = Vec::with_capacity(3 * res * res);
        for iy in (0..res).rev() {
            for ix in 0..res {
                let label = self.label_at(ix, iy);
                let rgb = if label == self.dummy_label {
                    [0u8, 0, 0]
                } else {
                    PALETTE[label % PALETTE.len()]
                };
                pixels.extend_from_slice(&rgb);
            }
        }
        write_rgb_png(path, res, res, &pixels)
    }
}
