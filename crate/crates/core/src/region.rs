//! Scaled box regions and homogeneous Poisson point patterns inside them.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `K_n = n K` with `K = [0, a_1] x ... x [0, a_d]`,
/// translated to `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    sides: Vec<f64>,
    scale: f64,
    origin: Vec<f64>,
}

impl Region {
    pub fn new(sides: Vec<f64>, scale: f64) -> Result<Self> {
        let origin = vec![0.0; sides.len()];
        Self::with_origin(sides, scale, origin)
    }

    pub fn with_origin(sides: Vec<f64>, scale: f64, origin: Vec<f64>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::domain("region needs at least one side"));
        }
        if sides.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::domain("region sides must be positive and finite"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain("region scale must be positive and finite"));
        }
        if origin.len() != sides.len() || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::domain(
                "region origin must be finite and match the dimension",
            ));
        }
        Ok(Self {
            sides,
            scale,
            origin,
        })
    }

    /// Box with the given realized side lengths (scale 1).
    pub fn from_extent(extent: Vec<f64>, origin: Vec<f64>) -> Result<Self> {
        Self::with_origin(extent, 1.0, origin)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Realized side lengths `n * a_i`.
    pub fn extent(&self) -> Vec<f64> {
        self.sides.iter().map(|a| self.scale * a).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.origin
            .iter()
            .zip(self.extent())
            .map(|(o, e)| o + e)
            .collect()
    }

    pub fn area(&self) -> f64 {
        self.extent().iter().product()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.origin
            .iter()
            .zip(self.extent())
            .map(|(o, e)| o + 0.5 * e)
            .collect()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.origin.iter().zip(self.extent()))
            .all(|(v, (o, e))| *v >= *o && *v <= o + e)
    }

    pub fn translated(&self, origin: Vec<f64>) -> Result<Self> {
        Self::with_origin(self.sides.clone(), self.scale, origin)
    }

    /// Anchor set `K_n(1 - c) = {y : B + y in K_n}` for the block `B = c K_n`.
    pub fn erode(&self, c: f64) -> Result<Erosion> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::domain(format!("block ratio {c} not in (0, 1)")));
        }
        let anchors = Self::with_origin(
            self.sides.iter().map(|a| (1.0 - c) * a).collect(),
            self.scale,
            self.origin.clone(),
        )?;
        let block = Self::with_origin(
            self.sides.iter().map(|a| c * a).collect(),
            self.scale,
            vec![0.0; self.dim()],
        )?;
        Ok(Erosion { anchors, block })
    }
}

/// Result of eroding a region by a block ratio `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Erosion {
    /// Translations `y` keeping `B + y` inside the region.
    pub anchors: Region,
    /// The block `B = c K_n`, anchored at zero.
    pub block: Region,
}

/// Finite point set inside a region, generated with intensity `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    coords: Vec<f64>,
    region: Region,
    intensity: f64,
}

impl PointPattern {
    /// Builds a pattern from explicit points; every point must lie in the region.
    pub fn new(points: &[Vec<f64>], region: Region, intensity: f64) -> Result<Self> {
        if !(intensity > 0.0) {
            return Err(Error::domain("intensity must be positive"));
        }
        let d = region.dim();
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in points {
            if p.len() != d {
                return Err(Error::domain("point dimension does not match region"));
            }
            if !region.contains(p) {
                return Err(Error::domain(format!(
                    "point {p:?} lies outside the region"
                )));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self {
            coords,
            region,
            intensity,
        })
    }

    pub fn empty(region: Region, intensity: f64) -> Self {
        Self {
            coords: Vec::new(),
            region,
            intensity,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.region.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim())
    }

    /// Indices of points in the half-open translated block `[y_i, y_i + side_i)`.
    pub fn block_indices(&self, anchor: &[f64], block: &Region) -> Result<Vec<usize>> {
        check_block(&self.region, anchor, block)?;
        let extent = block.extent();
        Ok(self.block_indices_unchecked(anchor, &extent))
    }

    pub(crate) fn block_indices_unchecked(&self, anchor: &[f64], extent: &[f64]) -> Vec<usize> {
        self.points()
            .enumerate()
            .filter(|(_, p)| in_half_open(p, anchor, extent))
            .map(|(i, _)| i)
            .collect()
    }

    /// Sub-pattern of points inside `B + y`.
    pub fn restrict(&self, anchor: &[f64], block: &Region) -> Result<PointPattern> {
        let idx = self.block_indices(anchor, block)?;
        let d = self.dim();
        let mut coords = Vec::with_capacity(idx.len() * d);
        for i in idx {
            coords.extend_from_slice(self.point(i));
        }
        Ok(PointPattern {
            coords,
            region: block.translated(anchor.to_vec())?,
            intensity: self.intensity,
        })
    }

    /// Writes one row per point; columns `x, y` in the plane, `x1..xd` otherwise.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(coordinate_header(self.dim()))?;
        for p in self.points() {
            w.write_record(p.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn coordinate_header(d: usize) -> Vec<String> {
    match d {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        _ => (1..=d).map(|k| format!("x{k}")).collect(),
    }
}

#[inline]
pub(crate) fn in_half_open(p: &[f64], anchor: &[f64], extent: &[f64]) -> bool {
    p.iter()
        .zip(anchor.iter().zip(extent))
        .all(|(v, (y, e))| *v >= *y && *v < y + e)
}

fn check_block(region: &Region, anchor: &[f64], block: &Region) -> Result<()> {
    if anchor.len() != region.dim() || block.dim() != region.dim() {
        return Err(Error::domain("block dimension does not match region"));
    }
    let slack = 1e-9;
    let inside = anchor
        .iter()
        .zip(block.extent())
        .zip(region.origin().iter().zip(region.extent()))
        .all(|((y, b), (o, e))| {
            let tol = slack * e.abs().max(1.0);
            *y >= o - tol && y + b <= o + e + tol
        });
    if !inside {
        return Err(Error::domain(
            "translated block is not contained in the region",
        ));
    }
    Ok(())
}

/// Homogeneous Poisson random measure with intensity `r` restricted to the region.
pub fn sample_prm<R: Rng + ?Sized>(region: &Region, r: f64, rng: &mut R) -> Result<PointPattern> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("intensity {r} must be positive")));
    }
    let mean = r * region.area();
    let count = Poisson::new(mean)
        .map_err(|e| Error::domain(format!("poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    let d = region.dim();
    let extent = region.extent();
    let mut coords = Vec::with_capacity(count * d);
    for _ in 0..count {
        for (o, e) in region.origin().iter().zip(&extent) {
            coords.push(o + e * rng.random::<f64>());
        }
    }
    Ok(PointPattern {
        coords,
        region: region.clone(),
        intensity: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square() -> Region {
        Region::new(vec![1.0, 1.0], 10.0).unwrap()
    }

    #[test]
    fn areas() {
        assert_eq!(square().area(), 100.0);
        assert_eq!(Region::new(vec![5.0, 20.0], 1.0).unwrap().area(), 100.0);
        assert!((Region::new(vec![1.0, 1.0, 1.0], 3.0).unwrap().area() - 27.0).abs() < 1e-12);
    }

    #[test]
    fn erosion_boxes() {
        let e = square().erode(0.2).unwrap();
        assert!(e.block.extent().iter().all(|s| (s - 2.0).abs() < 1e-12));
        assert!(e.anchors.extent().iter().all(|s| (s - 8.0).abs() < 1e-12));
        assert!((e.anchors.area() - 64.0).abs() < 1e-9);

        let rect = Region::new(vec![5.0, 20.0], 1.0)
            .unwrap()
            .erode(0.4)
            .unwrap();
        let (b, a) = (rect.block.extent(), rect.anchors.extent());
        assert!((b[0] - 2.0).abs() < 1e-12 && (b[1] - 8.0).abs() < 1e-12);
        assert!((a[0] - 3.0).abs() < 1e-12 && (a[1] - 12.0).abs() < 1e-12);

        let tiny = square().erode(1e-6).unwrap();
        assert!((tiny.anchors.area() / 100.0 - 1.0).abs() < 1e-4);

        for c in [0.0, 1.0, -0.1, 1.5] {
            assert!(square().erode(c).is_err());
        }
    }

    #[test]
    fn restrict_fixture() {
        let pts = vec![
            vec![1.5, 1.5],
            vec![2.9, 1.0],
            vec![3.0, 1.5],
            vec![0.5, 0.5],
            vec![8.0, 8.0],
        ];
        let pattern = PointPattern::new(&pts, square(), 1.0).unwrap();
        let block = Region::from_extent(vec![2.0, 2.0], vec![0.0, 0.0]).unwrap();
        let sub = pattern.restrict(&[1.0, 1.0], &block).unwrap();
        // [1,3) x [1,3): (1.5,1.5) and (2.9,1.0); (3.0,1.5) sits on the open edge
        let got: Vec<Vec<f64>> = sub.points().map(<[f64]>::to_vec).collect();
        assert_eq!(got, vec![vec![1.5, 1.5], vec![2.9, 1.0]]);
    }

    #[test]
    fn restrict_identity_and_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pattern = sample_prm(&square(), 1.0, &mut rng).unwrap();
        let full = Region::from_extent(vec![10.0, 10.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(
            pattern.restrict(&[0.0, 0.0], &full).unwrap().len(),
            pattern.len()
        );

        let empty = PointPattern::empty(square(), 1.0);
        let block = Region::from_extent(vec![2.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert!(empty.restrict(&[3.0, 3.0], &block).unwrap().is_empty());
    }

    #[test]
    fn restrict_outside_region_fails() {
        let empty = PointPattern::empty(square(), 1.0);
        let block = Region::from_extent(vec![2.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            empty.restrict(&[9.0, 0.0], &block),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn points_outside_region_rejected() {
        assert!(PointPattern::new(&[vec![11.0, 0.0]], square(), 1.0).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let pattern = PointPattern::new(&[vec![1.0, 2.0]], square(), 1.0).unwrap();
        let mut buf = Vec::new();
        pattern.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y\n1,2\n");
    }
}
