//! Class-conditional kernel density estimates on a shared 2-D grid.

use super::VizError;

/// Gaussian-kernel densities for the fraud and genuine classes evaluated on
/// a common grid of cell centers. A class absent from the input has no
/// density surface. Each surface is normalized so its grid mass
/// (sum × cell area) is 1.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    resolution: usize,
    fraud: Option<Vec<f64>>,
    genuine: Option<Vec<f64>>,
}

impl DensityGrid {
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (self.x_min, self.x_max, self.y_min, self.y_max)
    }

    /// Cells per axis; the grid has `resolution²` cells.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            (self.x_max - self.x_min) / self.resolution as f64,
            (self.y_max - self.y_min) / self.resolution as f64,
        )
    }

    /// Row-major values (`iy * resolution + ix`), or None when the class
    /// had no points.
    pub fn fraud(&self) -> Option<&[f64]> {
        self.fraud.as_deref()
    }

    pub fn genuine(&self) -> Option<&[f64]> {
        self.genuine.as_deref()
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.resolution + ix
    }

    pub fn x_centers(&self) -> Vec<f64> {
        let (dx, _) = self.cell_size();
        (0..self.resolution)
            .map(|i| self.x_min + (i as f64 + 0.5) * dx)
            .collect()
    }

    pub fn y_centers(&self) -> Vec<f64> {
        let (_, dy) = self.cell_size();
        (0..self.resolution)
            .map(|i| self.y_min + (i as f64 + 0.5) * dy)
            .collect()
    }
}

/// Two-dimensional rule-of-thumb bandwidth: per-axis standard deviation
/// scaled by n^(−1/6).
fn silverman(std: f64, n: usize) -> f64 {
    std * (n as f64).powf(-1.0 / 6.0)
}

fn std_dev(values: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

struct ClassKde {
    points: Vec<(f64, f64)>,
    name: &'static str,
    hx: f64,
    hy: f64,
}

impl ClassKde {
    fn prepare(
        points: Vec<(f64, f64)>,
        name: &'static str,
        override_h: Option<f64>,
    ) -> Result<Option<Self>, VizError> {
        if points.is_empty() {
            log::warn!("no {name} points; {name} density omitted");
            return Ok(None);
        }
        if points.len() < 2 {
            return Err(VizError::TooFewPoints(name));
        }
        let n = points.len();
        let (hx, hy) = match override_h {
            Some(h) => (h, h),
            None => {
                let guarded = |axis: &str, std: f64| {
                    if std > 0.0 {
                        silverman(std, n)
                    } else {
                        log::warn!("{name} points have zero {axis} spread; unit bandwidth used");
                        silverman(1.0, n)
                    }
                };
                (
                    guarded("x", std_dev(points.iter().map(|p| p.0), n)),
                    guarded("y", std_dev(points.iter().map(|p| p.1), n)),
                )
            }
        };
        Ok(Some(ClassKde { points, name, hx, hy }))
    }

    fn evaluate(&self, xs: &[f64], ys: &[f64], cell_area: f64) -> Result<Vec<f64>, VizError> {
        let res = xs.len();
        let kernel = |centers: &[f64], coord: f64, h: f64| -> Vec<f64> {
            centers
                .iter()
                .map(|c| {
                    let t = (c - coord) / h;
                    (-0.5 * t * t).exp()
                })
                .collect()
        };
        let mut values = vec![0.0; res * res];
        for &(px, py) in &self.points {
            let kx = kernel(xs, px, self.hx);
            let ky = kernel(ys, py, self.hy);
            for (iy, wy) in ky.iter().enumerate() {
                let row = &mut values[iy * res..(iy + 1) * res];
                for (cell, wx) in row.iter_mut().zip(&kx) {
                    *cell += wy * wx;
                }
            }
        }
        let mass: f64 = values.iter().sum::<f64>() * cell_area;
        if !(mass > 0.0) {
            log::error!("{} density underflowed on the grid", self.name);
            return Err(VizError::BadBandwidth);
        }
        for v in &mut values {
            *v /= mass;
        }
        Ok(values)
    }
}

/// Estimates per-class densities of the projected points on one shared
/// grid. `bandwidth` overrides the rule-of-thumb choice for both axes and
/// both classes when given. A class with no points is omitted with a
/// warning; a class with a single point is an error.
pub fn density_grid(
    points: &[(f64, f64)],
    is_fraud: &[bool],
    resolution: usize,
    bandwidth: Option<f64>,
) -> Result<DensityGrid, VizError> {
    if points.is_empty() {
        return Err(VizError::EmptyInput);
    }
    if points.len() != is_fraud.len() {
        return Err(VizError::LengthMismatch {
            a: points.len(),
            b: is_fraud.len(),
        });
    }
    if resolution < 2 {
        return Err(VizError::BadResolution);
    }
    if points
        .iter()
        .any(|&(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(VizError::NonFinite);
    }
    if let Some(h) = bandwidth {
        if !(h > 0.0 && h.is_finite()) {
            return Err(VizError::BadBandwidth);
        }
    }

    let split = |want_fraud: bool| -> Vec<(f64, f64)> {
        points
            .iter()
            .zip(is_fraud)
            .filter(|(_, &f)| f == want_fraud)
            .map(|(&p, _)| p)
            .collect()
    };
    let fraud = ClassKde::prepare(split(true), "fraud", bandwidth)?;
    let genuine = ClassKde::prepare(split(false), "genuine", bandwidth)?;

    let pad = 3.0
        * [&fraud, &genuine]
            .iter()
            .filter_map(|c| c.as_ref())
            .flat_map(|c| [c.hx, c.hy])
            .fold(0.0_f64, f64::max);
    let fold_min = |get: fn(&(f64, f64)) -> f64| {
        points.iter().map(get).fold(f64::INFINITY, f64::min)
    };
    let fold_max = |get: fn(&(f64, f64)) -> f64| {
        points.iter().map(get).fold(f64::NEG_INFINITY, f64::max)
    };

    let mut grid = DensityGrid {
        x_min: fold_min(|p| p.0) - pad,
        x_max: fold_max(|p| p.0) + pad,
        y_min: fold_min(|p| p.1) - pad,
        y_max: fold_max(|p| p.1) + pad,
        resolution,
        fraud: None,
        genuine: None,
    };
    let xs = grid.x_centers();
    let ys = grid.y_centers();
    let (dx, dy) = grid.cell_size();
    if let Some(kde) = fraud {
        grid.fraud = Some(kde.evaluate(&xs, &ys, dx * dy)?);
    }
    if let Some(kde) = genuine {
        grid.genuine = Some(kde.evaluate(&xs, &ys, dx * dy)?);
    }
    Ok(grid)
}
