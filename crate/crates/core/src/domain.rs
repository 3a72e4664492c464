//! Computational domain: the Cartesian grid, the embedded bone rectangle,
//! source and receiver placement, and recorded signal traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular Cartesian grid of `nx × ny` cells. Cell `(i, j)` has its center at
/// `origin + ((i + ½)dx, (j + ½)dy)`; `j` grows upward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: [f64; 2],
}

impl Grid {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, origin: [f64; 2]) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Geometry(format!(
                "grid needs at least 4×4 cells, got {nx}×{ny}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::Geometry(format!(
                "cell sizes must be positive, got {dx}×{dy}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            origin,
        })
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.dx,
            self.origin[1] + (j as f64 + 0.5) * self.dy,
        ]
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn min_spacing(&self) -> f64 {
        self.dx.min(self.dy)
    }

    /// Cell whose closed extent contains `point`; points on a shared face go
    /// to the upper cell.
    pub fn cell_containing(&self, point: [f64; 2]) -> Option<(usize, usize)> {
        let fx = (point[0] - self.origin[0]) / self.dx;
        let fy = (point[1] - self.origin[1]) / self.dy;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let i = (fx.floor() as usize).min(self.nx - 1);
        let j = (fy.floor() as usize).min(self.ny - 1);
        if fx > self.nx as f64 || fy > self.ny as f64 {
            return None;
        }
        Some((i, j))
    }

    /// Whether the cell belongs to the outermost ring, where `P = 0` is imposed.
    #[inline]
    pub fn on_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }
}

/// Axis-aligned rectangle in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Fluid,
    Bone,
}

/// Inclusive cell-index range of the bone block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRange {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl CellRange {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i <= self.i1 && j >= self.j0 && j <= self.j1
    }

    pub fn count(&self) -> usize {
        (self.i1 - self.i0 + 1) * (self.j1 - self.j0 + 1)
    }
}

/// A face between a fluid cell and a bone cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfaceFace {
    pub fluid: (usize, usize),
    pub bone: (usize, usize),
    /// Unit normal pointing from the bone cell into the fluid cell.
    pub normal: [i8; 2],
}

/// Per-cell fluid/bone labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    labels: Vec<CellKind>,
    bone: Option<(Rect, CellRange)>,
}

impl RegionMap {
    /// Labels a cell as bone iff its center lies in the closed rectangle.
    pub fn rasterize(grid: &Grid, bone: Option<Rect>) -> Result<Self> {
        let mut labels = vec![CellKind::Fluid; grid.len()];
        let Some(rect) = bone else {
            return Ok(Self { labels, bone: None });
        };
        let mut range: Option<CellRange> = None;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if rect.contains(grid.center(i, j)) {
                    labels[grid.index(i, j)] = CellKind::Bone;
                    range = Some(match range {
                        None => CellRange {
                            i0: i,
                            i1: i,
                            j0: j,
                            j1: j,
                        },
                        Some(r) => CellRange {
                            i0: r.i0.min(i),
                            i1: r.i1.max(i),
                            j0: r.j0.min(j),
                            j1: r.j1.max(j),
                        },
                    });
                }
            }
        }
        let range = range.ok_or_else(|| {
            Error::Geometry("bone rectangle contains no cell center".into())
        })?;
        if range.i0 < 1 || range.j0 < 1 || range.i1 + 2 > grid.nx || range.j1 + 2 > grid.ny {
            return Err(Error::Geometry(
                "bone touches the outer boundary; at least one fluid cell must separate them"
                    .into(),
            ));
        }
        Ok(Self {
            labels,
            bone: Some((rect, range)),
        })
    }

    #[inline]
    pub fn kind(&self, idx: usize) -> CellKind {
        self.labels[idx]
    }

    #[inline]
    pub fn is_bone(&self, idx: usize) -> bool {
        self.labels[idx] == CellKind::Bone
    }

    pub fn bone_rect(&self) -> Option<Rect> {
        self.bone.map(|(r, _)| r)
    }

    pub fn bone_cells(&self) -> Option<CellRange> {
        self.bone.map(|(_, c)| c)
    }

    pub fn labels(&self) -> &[CellKind] {
        &self.labels
    }

    /// Every face separating a fluid cell from a bone cell.
    pub fn interface_faces(&self, grid: &Grid) -> Vec<InterfaceFace> {
        let mut faces = Vec::new();
        let Some(r) = self.bone_cells() else {
            return faces;
        };
        for j in r.j0..=r.j1 {
            for i in r.i0..=r.i1 {
                let candidates: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
                for (di, dj) in candidates {
                    let ni = (i as isize + di) as usize;
                    let nj = (j as isize + dj) as usize;
                    if !self.is_bone(grid.index(ni, nj)) {
                        faces.push(InterfaceFace {
                            fluid: (ni, nj),
                            bone: (i, j),
                            normal: [di as i8, dj as i8],
                        });
                    }
                }
            }
        }
        faces
    }
}

/// Point source driven by the windowed sine pulse of [`source_amplitude`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub position: [f64; 2],
    /// Hz
    pub center_frequency: f64,
    /// m/s²
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverSpec {
    pub position: [f64; 2],
    /// Strictly increasing sample times, s.
    pub times: Vec<f64>,
}

/// `F(t) = F₀ exp(−4(f_c t − 1)²) sin(2π f_c t)`.
pub fn source_amplitude(t: f64, s: &SourceSpec) -> f64 {
    let ft = s.center_frequency * t;
    s.amplitude * (-4.0 * (ft - 1.0).powi(2)).exp() * (2.0 * std::f64::consts::PI * ft).sin()
}

/// `m` equally spaced sample times `i·T/m`, `i = 1..=m`.
pub fn uniform_sample_times(duration: f64, n_samples: usize) -> Vec<f64> {
    let step = duration / n_samples as f64;
    (1..=n_samples).map(|i| i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Simulated,
    SyntheticNoisy,
    External,
}

/// Pressure recorded at the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub times: Vec<f64>,
    pub pressures: Vec<f64>,
    pub provenance: Provenance,
}

impl SignalTrace {
    pub fn new(times: Vec<f64>, pressures: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if times.len() != pressures.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                actual: pressures.len(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Geometry(
                "trace sample times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            times,
            pressures,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.pressures.iter().fold(0.0f64, |m, p| m.max(p.abs()))
    }
}

/// Euclidean norm of `a − b`.
pub fn misfit_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Physical layout of the experiment, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub width: f64,
    pub height: f64,
    /// Target cell edge length; the grid adjusts it so the box is tiled exactly.
    pub cell_size: f64,
    pub bone: Option<Rect>,
    pub source: [f64; 2],
    pub receiver: [f64; 2],
}

impl GeometryConfig {
    /// Through-transmission layout: a 10 mm × 4 mm bone padded by 4 mm of
    /// fluid on every side, source 2 mm above the top face, receiver 2 mm
    /// below the bottom face. All lengths are multiplied by `scale`.
    pub fn through_transmission(scale: f64, cell_size: f64) -> Self {
        let mm = 1e-3 * scale;
        let pad = 4.0 * mm;
        let (bone_w, bone_h) = (10.0 * mm, 4.0 * mm);
        let width = bone_w + 2.0 * pad;
        let height = bone_h + 2.0 * pad;
        let bone = Rect {
            x_min: pad,
            x_max: pad + bone_w,
            y_min: pad,
            y_max: pad + bone_h,
        };
        let xc = width / 2.0;
        Self {
            width,
            height,
            cell_size,
            bone: Some(bone),
            source: [xc, bone.y_max + 2.0 * mm],
            receiver: [xc, bone.y_min - 2.0 * mm],
        }
    }

    pub fn without_bone(mut self) -> Self {
        self.bone = None;
        self
    }

    /// Earliest time a wave leaving the source can reach the receiver after
    /// one reflection off the outer boundary, travelling at `speed`.
    pub fn first_boundary_reflection_time(&self, speed: f64) -> f64 {
        let [sx, sy] = self.source;
        let [rx, ry] = self.receiver;
        let images = [
            [-sx, sy],
            [2.0 * self.width - sx, sy],
            [sx, -sy],
            [sx, 2.0 * self.height - sy],
        ];
        images
            .iter()
            .map(|[ix, iy]| ((ix - rx).powi(2) + (iy - ry).powi(2)).sqrt() / speed)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Cell edge resolving `cells_per_wavelength` cells per wavelength of a
/// wave travelling at `slowest_speed` with frequency `frequency`.
pub fn resolution_cell_size(slowest_speed: f64, frequency: f64, cells_per_wavelength: f64) -> f64 {
    slowest_speed / (frequency * cells_per_wavelength)
}

/// Grid, labels, source and receiver of one experiment.
#[derive(Debug, Clone)]
pub struct Domain {
    pub grid: Grid,
    pub regions: RegionMap,
    pub source: SourceSpec,
    pub receiver: ReceiverSpec,
}

impl Domain {
    pub fn source_cell(&self) -> (usize, usize) {
        self.grid
            .cell_containing(self.source.position)
            .expect("validated at construction")
    }

    pub fn receiver_cell(&self) -> (usize, usize) {
        self.grid
            .cell_containing(self.receiver.position)
            .expect("validated at construction")
    }
}

/// Rasterizes `geom` and places the source and receiver.
pub fn build_domain(
    geom: &GeometryConfig,
    center_frequency: f64,
    amplitude: f64,
    sample_times: Vec<f64>,
) -> Result<Domain> {
    if !(geom.width > 0.0 && geom.height > 0.0 && geom.cell_size > 0.0) {
        return Err(Error::Geometry(
            "domain size and cell size must be positive".into(),
        ));
    }
    if !(center_frequency > 0.0) {
        return Err(Error::Geometry("center frequency must be positive".into()));
    }
    if !amplitude.is_finite() {
        return Err(Error::Geometry("source amplitude must be finite".into()));
    }
    let nx = (geom.width / geom.cell_size).round().max(1.0) as usize;
    let ny = (geom.height / geom.cell_size).round().max(1.0) as usize;
    let grid = Grid::new(
        nx,
        ny,
        geom.width / nx as f64,
        geom.height / ny as f64,
        [0.0, 0.0],
    )?;
    if let Some(rect) = geom.bone {
        if rect.x_min < 0.0 || rect.y_min < 0.0 || rect.x_max > geom.width || rect.y_max > geom.height
        {
            return Err(Error::Geometry("bone rectangle leaves the domain".into()));
        }
        if !(rect.width() > 0.0 && rect.height() > 0.0) {
            return Err(Error::Geometry("bone rectangle is degenerate".into()));
        }
    }
    let regions = RegionMap::rasterize(&grid, geom.bone)?;

    for (name, pos) in [("source", geom.source), ("receiver", geom.receiver)] {
        let (i, j) = grid
            .cell_containing(pos)
            .ok_or_else(|| Error::Geometry(format!("{name} lies outside the domain")))?;
        if regions.is_bone(grid.index(i, j)) {
            return Err(Error::Geometry(format!("{name} lies inside the bone")));
        }
        if grid.on_boundary(i, j) {
            return Err(Error::Geometry(format!(
                "{name} lies in a boundary cell where P = 0 is imposed"
            )));
        }
    }
    if sample_times.is_empty() || sample_times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Geometry(
            "receiver sample times must be non-empty and strictly increasing".into(),
        ));
    }
    if sample_times[0] <= 0.0 {
        return Err(Error::Geometry("receiver sample times must be positive".into()));
    }

    Ok(Domain {
        grid,
        regions,
        source: SourceSpec {
            position: geom.source,
            center_frequency,
            amplitude,
        },
        receiver: ReceiverSpec {
            position: geom.receiver,
            times: sample_times,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pulse(f: f64) -> SourceSpec {
        SourceSpec {
            position: [0.0, 0.0],
            center_frequency: f,
            amplitude: 1.0,
        }
    }

    #[test]
    fn pulse_values() {
        let s = pulse(1e6);
        assert_eq!(source_amplitude(0.0, &s), 0.0);
        assert!(source_amplitude(1e-6, &s).abs() < 1e-12);
        let quarter = source_amplitude(0.25e-6, &s);
        assert!((quarter - 0.105_399_224_561_864_33).abs() < 1e-12);
    }

    #[test]
    fn reference_layout_is_valid() {
        let geom = GeometryConfig::through_transmission(1.0, 1e-4);
        let dom = build_domain(&geom, 1e6, 1.0, uniform_sample_times(7e-5, 512)).unwrap();
        let bone = dom.regions.bone_rect().unwrap();
        assert!((bone.width() - 10e-3).abs() < 1e-12);
        assert!((bone.height() - 4e-3).abs() < 1e-12);
        assert!(dom.source.position[1] > bone.y_max);
        assert!(dom.receiver.position[1] < bone.y_min);
        assert!(((dom.source.position[1] - bone.y_max) - 2e-3).abs() < 1e-12);
        let cells = dom.regions.bone_cells().unwrap();
        assert_eq!(cells.i1 - cells.i0 + 1, 100);
        assert_eq!(cells.j1 - cells.j0 + 1, 40);
    }

    #[test]
    fn bone_touching_boundary_is_rejected() {
        let mut geom = GeometryConfig::through_transmission(1.0, 5e-4);
        geom.bone.as_mut().unwrap().x_min = 0.0;
        assert!(matches!(
            build_domain(&geom, 1e6, 1.0, vec![1e-6]),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn source_in_bone_is_rejected() {
        let mut geom = GeometryConfig::through_transmission(1.0, 5e-4);
        geom.source = [9e-3, 6e-3];
        assert!(matches!(
            build_domain(&geom, 1e6, 1.0, vec![1e-6]),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn interface_faces_surround_bone() {
        let geom = GeometryConfig::through_transmission(1.0, 1e-3);
        let dom = build_domain(&geom, 1e6, 1.0, vec![1e-6]).unwrap();
        let r = dom.regions.bone_cells().unwrap();
        let faces = dom.regions.interface_faces(&dom.grid);
        let perimeter = 2 * (r.i1 - r.i0 + 1) + 2 * (r.j1 - r.j0 + 1);
        assert_eq!(faces.len(), perimeter);
        for f in faces {
            let fi = dom.grid.index(f.fluid.0, f.fluid.1);
            let bi = dom.grid.index(f.bone.0, f.bone.1);
            assert!(!dom.regions.is_bone(fi) && dom.regions.is_bone(bi));
        }
    }

    #[test]
    fn trace_rejects_unsorted_times() {
        assert!(SignalTrace::new(vec![1.0, 0.5], vec![0.0, 0.0], Provenance::External).is_err());
        assert!(matches!(
            SignalTrace::new(vec![1.0], vec![0.0, 0.0], Provenance::External),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reflection_time_for_reference_layout() {
        let geom = GeometryConfig::through_transmission(1.0, 1e-4);
        let t = geom.first_boundary_reflection_time(1500.0);
        // top and bottom walls both give a 12 mm image path
        let expect = 12e-3 / 1500.0;
        assert!((t - expect).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn pulse_is_bounded(t in 0.0f64..1e-4, f0 in -10.0f64..10.0) {
            let s = SourceSpec { amplitude: f0, ..pulse(1e6) };
            prop_assert!(source_amplitude(t, &s).abs() <= f0.abs());
        }

        #[test]
        fn bone_labels_follow_cell_centers(x0 in 1.0f64..5.0, w in 1.0f64..4.0, y0 in 1.0f64..5.0, h in 1.0f64..4.0) {
            let grid = Grid::new(12, 12, 1.0, 1.0, [0.0, 0.0]).unwrap();
            let rect = Rect { x_min: x0, x_max: x0 + w, y_min: y0, y_max: y0 + h };
            if let Ok(map) = RegionMap::rasterize(&grid, Some(rect)) {
                for j in 0..12 {
                    for i in 0..12 {
                        prop_assert_eq!(map.is_bone(grid.index(i, j)), rect.contains(grid.center(i, j)));
                    }
                }
            }
        }
    }
}
