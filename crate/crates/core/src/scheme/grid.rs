//! Layered media and their uniform-per-layer finite-volume grids.

use std::sync::Arc;

use crate::numflux::NumericalFlux;
use crate::rockphys::RockFunctions;

use super::SchemeError;

/// Relative tolerance for layer lengths to be whole multiples of the cell
/// size, and for layer endpoints to meet.
const EDGE_TOL: f64 = 1e-9;

/// One layer: an interval of the domain filled with a single rock.
#[derive(Debug, Clone)]
pub struct MediumLayer {
    pub start: f64,
    pub end: f64,
    pub rock: Arc<RockFunctions>,
    pub flux: Arc<NumericalFlux>,
}

impl MediumLayer {
    pub fn new(start: f64, end: f64, rock: Arc<RockFunctions>) -> Self {
        let flux = Arc::new(NumericalFlux::godunov(rock.flux_fn()));
        Self {
            start,
            end,
            rock,
            flux,
        }
    }

    /// Layer sharing an already built numerical flux.
    pub fn with_flux(start: f64, end: f64, rock: Arc<RockFunctions>, flux: Arc<NumericalFlux>) -> Self {
        Self {
            start,
            end,
            rock,
            flux,
        }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// Ordered layers tiling `[start, end]`.
#[derive(Debug, Clone)]
pub struct LayeredMedium {
    layers: Vec<MediumLayer>,
}

impl LayeredMedium {
    pub fn new(layers: Vec<MediumLayer>) -> Result<Self, SchemeError> {
        if layers.is_empty() {
            return Err(SchemeError::validation("medium needs at least one layer"));
        }
        let scale = layers.last().unwrap().end - layers[0].start;
        for (k, l) in layers.iter().enumerate() {
            if !(l.start.is_finite() && l.end.is_finite() && l.start < l.end) {
                return Err(SchemeError::validation(format!(
                    "layer {k} has an empty or invalid interval [{}, {}]",
                    l.start, l.end
                )));
            }
            if k > 0 {
                let prev = layers[k - 1].end;
                if (l.start - prev).abs() > EDGE_TOL * scale.abs() {
                    let what = if l.start < prev { "overlaps" } else { "leaves a gap after" };
                    return Err(SchemeError::validation(format!(
                        "layer {k} {what} layer {} ({} vs {prev})",
                        k - 1,
                        l.start
                    )));
                }
            }
        }
        let q = layers[0].rock.total_rate();
        if layers.iter().any(|l| l.rock.total_rate() != q) {
            return Err(SchemeError::validation(
                "all rocks must share the same total flow rate q",
            ));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[MediumLayer] {
        &self.layers
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.layers[0].start, self.layers.last().unwrap().end)
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// `max ‖Gᵢ‖∞` over the layers.
    pub fn max_flux_sup(&self) -> f64 {
        self.layers
            .iter()
            .fold(0.0, |m, l| m.max(l.flux.sup_norm()))
    }
}

/// What sits at a cell edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    LeftBoundary,
    RightBoundary,
    /// Edge inside a layer.
    Interior { layer: usize },
    /// Edge between layers `id` and `id + 1`.
    Interface { id: usize },
}

/// Grid metadata: per-layer uniform cells and uniform time steps.
///
/// With a global resolution `N` the cell size is `(domain length)/(2N)`,
/// so that a domain of length 2 gets `δx = 1/N`.
#[derive(Debug, Clone)]
pub struct Discretization {
    n: usize,
    m: usize,
    t_final: f64,
    dt: f64,
    layer_cells: Vec<usize>,
    layer_dx: Vec<f64>,
    layer_first: Vec<usize>,
    cell_layer: Vec<usize>,
    edges: Vec<f64>,
    edge_kind: Vec<EdgeKind>,
    interface_edges: Vec<usize>,
}

impl Discretization {
    /// Global resolution `N`: every layer uses `δx = L/(2N)` and must hold a
    /// whole number of cells.
    pub fn uniform(
        medium: &LayeredMedium,
        n: usize,
        m: usize,
        t_final: f64,
    ) -> Result<Self, SchemeError> {
        if n == 0 {
            return Err(SchemeError::validation("N must be positive"));
        }
        let (a, b) = medium.domain();
        let dx = (b - a) / (2 * n) as f64;
        let mut cells = Vec::with_capacity(medium.len());
        for (k, l) in medium.layers().iter().enumerate() {
            let ratio = l.length() / dx;
            let r = ratio.round();
            if r < 1.0 || (ratio - r).abs() > EDGE_TOL * ratio.max(1.0) {
                return Err(SchemeError::validation(format!(
                    "layer {k} boundary at x = {} does not fall on a cell edge for δx = {dx} \
                     ({ratio} cells)",
                    l.end
                )));
            }
            cells.push(r as usize);
        }
        Self::build(medium, n, cells, m, t_final)
    }

    /// Explicit cell counts per layer; each layer keeps its own `δx`.
    pub fn with_layer_cells(
        medium: &LayeredMedium,
        cells: Vec<usize>,
        m: usize,
        t_final: f64,
    ) -> Result<Self, SchemeError> {
        if cells.len() != medium.len() || cells.contains(&0) {
            return Err(SchemeError::validation(
                "need one positive cell count per layer",
            ));
        }
        let total: usize = cells.iter().sum();
        Self::build(medium, total.div_ceil(2), cells, m, t_final)
    }

    fn build(
        medium: &LayeredMedium,
        n: usize,
        layer_cells: Vec<usize>,
        m: usize,
        t_final: f64,
    ) -> Result<Self, SchemeError> {
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(SchemeError::validation("final time must be finite and nonnegative"));
        }
        let dt = if m == 0 { 0.0 } else { t_final / m as f64 };
        if m > 0 && !(dt > 0.0) {
            return Err(SchemeError::validation("time step must be positive"));
        }
        let layers = medium.layers();
        let mut layer_dx = Vec::with_capacity(layers.len());
        let mut layer_first = Vec::with_capacity(layers.len());
        let mut cell_layer = Vec::new();
        let mut edges = vec![layers[0].start];
        let mut edge_kind = vec![EdgeKind::LeftBoundary];
        let mut interface_edges = Vec::new();
        for (k, (l, &nc)) in layers.iter().zip(&layer_cells).enumerate() {
            let dx = l.length() / nc as f64;
            layer_dx.push(dx);
            layer_first.push(cell_layer.len());
            if k > 0 {
                // the edge already pushed closes the previous layer
                *edge_kind.last_mut().unwrap() = EdgeKind::Interface { id: k - 1 };
                interface_edges.push(edges.len() - 1);
            }
            for i in 0..nc {
                cell_layer.push(k);
                let x = if i + 1 == nc {
                    l.end
                } else {
                    l.start + (i + 1) as f64 * dx
                };
                edges.push(x);
                edge_kind.push(EdgeKind::Interior { layer: k });
            }
        }
        *edge_kind.last_mut().unwrap() = EdgeKind::RightBoundary;
        Ok(Self {
            n,
            m,
            t_final,
            dt,
            layer_cells,
            layer_dx,
            layer_first,
            cell_layer,
            edges,
            edge_kind,
            interface_edges,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn cells(&self) -> usize {
        self.cell_layer.len()
    }

    pub fn layer_cells(&self) -> &[usize] {
        &self.layer_cells
    }

    pub fn layer_dx(&self, layer: usize) -> f64 {
        self.layer_dx[layer]
    }

    /// Cell index range of a layer.
    pub fn layer_range(&self, layer: usize) -> std::ops::Range<usize> {
        let s = self.layer_first[layer];
        s..s + self.layer_cells[layer]
    }

    pub fn layer_of_cell(&self, j: usize) -> usize {
        self.cell_layer[j]
    }

    pub fn dx(&self, j: usize) -> f64 {
        self.layer_dx[self.cell_layer[j]]
    }

    pub fn min_dx(&self) -> f64 {
        self.layer_dx.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Edge positions, `cells() + 1` of them.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn edge_kind(&self, e: usize) -> EdgeKind {
        self.edge_kind[e]
    }

    pub fn cell_center(&self, j: usize) -> f64 {
        0.5 * (self.edges[j] + self.edges[j + 1])
    }

    /// Edge index of each interface, in order.
    pub fn interface_edges(&self) -> &[usize] {
        &self.interface_edges
    }

    /// Index of the edge at `x`, if `x` is an edge within the relative
    /// tolerance used for layer alignment.
    pub fn edge_at(&self, x: f64) -> Option<usize> {
        let scale = self.edges.last().unwrap() - self.edges[0];
        let tol = EDGE_TOL * scale.max(1.0);
        let k = self.edges.partition_point(|&e| e < x - tol);
        (k < self.edges.len() && (self.edges[k] - x).abs() <= tol).then_some(k)
    }

    pub fn time(&self, step: usize) -> f64 {
        if self.m == 0 {
            0.0
        } else if step == self.m {
            self.t_final
        } else {
            step as f64 * self.dt
        }
    }
}
