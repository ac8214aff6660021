//! Exterior-domain geometry and its two discretisations.
//!
//! A domain is `R^N` minus a compact hole containing the origin, truncated
//! at an artificial outer radius. Two grid backends are provided:
//!
//! * [`Backend::Radial`]: for ball holes with radially symmetric data the
//!   Laplacian reduces to `s^{1-N} (s^{N-1} u')'` and the grid is the line
//!   `r <= s <= R` with node spacing `h`. Node weights are `omega_N s^{N-1} h`
//!   with the two end nodes halved.
//! * [`Backend::Cartesian`]: lattice points `h Z^N` (`N` in {2, 3}) inside the
//!   closed ball `|x| <= R` and outside the hole. Holes are staircase masks,
//!   every weight is `h^N`.
//!
//! Each grid also carries the conductances of interior edges and the list of
//! boundary faces; the operator module turns those into a stiffness matrix.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::scalar::{unit_sphere_area, Real};

/// Integer lattice coordinates of a node, padded with zeros to three axes.
/// Radial grids use `[i, 0, 0]` with `s = r + i h`.
pub type LatticeKey = [i64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Radial,
    Cartesian,
}

/// A primitive shape rasterised onto the lattice to form a mask hole.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskShape<T> {
    /// Closed axis-aligned box `|x_i - c_i| <= half_widths_i`.
    Box { center: Vec<T>, half_widths: Vec<T> },
    /// Closed ball `|x - c| <= radius`.
    Ball { center: Vec<T>, radius: T },
}

impl<T: Real> MaskShape<T> {
    fn contains(&self, x: &[T]) -> bool {
        let eps = T::lit(1e-9);
        match self {
            MaskShape::Box {
                center,
                half_widths,
            } => x
                .iter()
                .zip(center.iter().zip(half_widths))
                .all(|(&xi, (&c, &hw))| (xi - c).abs() <= hw + eps),
            MaskShape::Ball { center, radius } => {
                let d2: T = x
                    .iter()
                    .zip(center)
                    .map(|(&xi, &c)| (xi - c) * (xi - c))
                    .sum();
                d2 <= *radius * *radius + eps
            }
        }
    }

    /// Per-axis bounds `(lo, hi)` of the shape.
    fn bounds(&self, dimension: usize) -> Vec<(T, T)> {
        (0..dimension)
            .map(|d| match self {
                MaskShape::Box {
                    center,
                    half_widths,
                } => (center[d] - half_widths[d], center[d] + half_widths[d]),
                MaskShape::Ball { center, radius } => (center[d] - *radius, center[d] + *radius),
            })
            .collect()
    }

    fn dimension_ok(&self, dimension: usize) -> bool {
        match self {
            MaskShape::Box {
                center,
                half_widths,
            } => {
                center.len() == dimension
                    && half_widths.len() == dimension
                    && half_widths.iter().all(|&w| w >= T::zero())
            }
            MaskShape::Ball { center, radius } => center.len() == dimension && *radius > T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Hole<T> {
    Ball {
        radius: T,
    },
    /// Union of shapes; a lattice point is inside the hole when any shape
    /// contains it. Several connected components are allowed.
    Mask(Vec<MaskShape<T>>),
}

impl<T: Real> Hole<T> {
    /// Radius of the smallest origin-centred closed ball containing the hole.
    pub fn extent(&self) -> T {
        match self {
            Hole::Ball { radius } => *radius,
            Hole::Mask(shapes) => shapes
                .iter()
                .map(|shape| {
                    let dim = match shape {
                        MaskShape::Box { center, .. } | MaskShape::Ball { center, .. } => {
                            center.len()
                        }
                    };
                    shape
                        .bounds(dim)
                        .iter()
                        .map(|&(lo, hi)| {
                            let m = lo.abs().max(hi.abs());
                            m * m
                        })
                        .sum::<T>()
                        .sqrt()
                })
                .fold(T::zero(), T::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec<T> {
    pub dimension: usize,
    pub hole: Hole<T>,
    pub truncation_radius: T,
    pub spacing: T,
    pub backend: Backend,
}

impl<T: Real> DomainSpec<T> {
    pub fn radial(dimension: usize, hole_radius: T, truncation_radius: T, spacing: T) -> Self {
        Self {
            dimension,
            hole: Hole::Ball {
                radius: hole_radius,
            },
            truncation_radius,
            spacing,
            backend: Backend::Radial,
        }
    }

    pub fn cartesian(dimension: usize, hole: Hole<T>, truncation_radius: T, spacing: T) -> Self {
        Self {
            dimension,
            hole,
            truncation_radius,
            spacing,
            backend: Backend::Cartesian,
        }
    }

    /// Same domain with another truncation radius (used by profile ladders).
    pub fn with_truncation_radius(&self, radius: T) -> Self {
        Self {
            truncation_radius: radius,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.spacing;
        let big_r = self.truncation_radius;
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "spacing must be positive, got {h}"
            )));
        }
        if !(big_r > T::zero()) || !big_r.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "truncation radius must be positive, got {big_r}"
            )));
        }
        if self.dimension == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        match self.backend {
            Backend::Radial => {
                let Hole::Ball { radius } = self.hole else {
                    return Err(Error::InvalidSpec(
                        "the radial backend requires a ball hole".into(),
                    ));
                };
                if !(radius > T::zero()) {
                    return Err(Error::InvalidSpec(format!(
                        "hole radius must be positive, got {radius}"
                    )));
                }
                if !(radius < big_r) {
                    return Err(Error::InvalidSpec(format!(
                        "hole radius {radius} is not inside the truncation radius {big_r}"
                    )));
                }
                let cells = (big_r - radius) / h;
                if (cells - cells.round()).abs() > T::lit(1e-6) {
                    return Err(Error::InvalidSpec(format!(
                        "spacing {h} does not divide R - r = {}",
                        big_r - radius
                    )));
                }
            }
            Backend::Cartesian => {
                if !(2..=3).contains(&self.dimension) {
                    return Err(Error::InvalidSpec(format!(
                        "Cartesian grids support N = 2 or 3, got {}",
                        self.dimension
                    )));
                }
                match &self.hole {
                    Hole::Ball { radius } => {
                        if !(*radius > T::zero()) {
                            return Err(Error::InvalidSpec(format!(
                                "hole radius must be positive, got {radius}"
                            )));
                        }
                        if !(*radius < big_r - T::lit(2.0) * h) {
                            return Err(Error::InvalidSpec(format!(
                                "hole radius {radius} must be below R - 2h = {}",
                                big_r - T::lit(2.0) * h
                            )));
                        }
                    }
                    Hole::Mask(shapes) => {
                        if shapes.is_empty() {
                            return Err(Error::InvalidSpec("mask hole has no shapes".into()));
                        }
                        if let Some(bad) = shapes.iter().find(|s| !s.dimension_ok(self.dimension)) {
                            return Err(Error::InvalidSpec(format!(
                                "mask shape {bad:?} does not match dimension {}",
                                self.dimension
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// An interior edge between two nodes; `coupling` is face area over node distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub a: usize,
    pub b: usize,
    pub coupling: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceSide {
    Hole { component: usize },
    Outer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFace<T> {
    pub node: usize,
    pub side: FaceSide,
    pub area: T,
    /// Outward normal of the computational domain.
    pub normal: Vec<T>,
    pub midpoint: Vec<T>,
    /// Distance from the node to the ghost point carrying Dirichlet data.
    /// `None` when the boundary passes through the node itself (radial grids).
    pub ghost_distance: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    dimension: usize,
    spacing: T,
    backend: Backend,
    hole: Hole<T>,
    truncation_radius: T,
    /// Radius of the smallest origin-centred ball containing the hole.
    hole_extent: T,
    coord_dim: usize,
    coords: Vec<T>,
    radii: Vec<T>,
    weights: Vec<T>,
    keys: Vec<LatticeKey>,
    index: HashMap<LatticeKey, usize>,
    edges: Vec<Edge<T>>,
    faces: Vec<BoundaryFace<T>>,
    hole_components: usize,
}

impl<T: Real> Grid<T> {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn hole(&self) -> &Hole<T> {
        &self.hole
    }

    pub fn truncation_radius(&self) -> T {
        self.truncation_radius
    }

    pub fn hole_extent(&self) -> T {
        self.hole_extent
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// Number of coordinates stored per node: 1 for radial grids, `N` otherwise.
    pub fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    pub fn coords(&self, node: usize) -> &[T] {
        &self.coords[node * self.coord_dim..(node + 1) * self.coord_dim]
    }

    /// `|x|` of a node.
    pub fn radius(&self, node: usize) -> T {
        self.radii[node]
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn weight(&self, node: usize) -> T {
        self.weights[node]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn key(&self, node: usize) -> LatticeKey {
        self.keys[node]
    }

    pub fn node_at(&self, key: &LatticeKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn faces(&self) -> &[BoundaryFace<T>] {
        &self.faces
    }

    pub fn hole_faces(&self) -> impl Iterator<Item = &BoundaryFace<T>> {
        self.faces
            .iter()
            .filter(|f| matches!(f.side, FaceSide::Hole { .. }))
    }

    pub fn outer_faces(&self) -> impl Iterator<Item = &BoundaryFace<T>> {
        self.faces.iter().filter(|f| f.side == FaceSide::Outer)
    }

    pub fn hole_components(&self) -> usize {
        self.hole_components
    }

    pub fn total_volume(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Grids that differ only by truncation radius share node keys and
    /// weights on their common part.
    pub fn is_nested_with(&self, other: &Grid<T>) -> bool {
        self.dimension == other.dimension
            && self.backend == other.backend
            && self.spacing == other.spacing
            && self.hole == other.hole
    }

    /// Node closest to `point`. For radial grids `point` is `[s]` or any
    /// vector whose norm is used as the radius.
    pub fn nearest_node(&self, point: &[T]) -> usize {
        match self.backend {
            Backend::Radial => {
                let s = point.iter().map(|&p| p * p).sum::<T>().sqrt();
                let r = self.radii[0];
                let i = ((s - r) / self.spacing).round();
                let i = if i < T::zero() { T::zero() } else { i };
                i.to_usize().unwrap_or(0).min(self.node_count() - 1)
            }
            Backend::Cartesian => {
                let mut best = 0;
                let mut best_d = T::infinity();
                for node in 0..self.node_count() {
                    let d: T = self
                        .coords(node)
                        .iter()
                        .zip(point)
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum();
                    if d < best_d {
                        best_d = d;
                        best = node;
                    }
                }
                best
            }
        }
    }
}

/// Builds the grid for a domain spec.
pub fn build_grid<T: Real>(spec: &DomainSpec<T>) -> Result<Grid<T>> {
    spec.validate()?;
    match spec.backend {
        Backend::Radial => Ok(build_radial(spec)),
        Backend::Cartesian => build_cartesian(spec),
    }
}

fn build_radial<T: Real>(spec: &DomainSpec<T>) -> Grid<T> {
    let Hole::Ball { radius: r } = spec.hole else {
        unreachable!("validated: radial backend has a ball hole");
    };
    let h = spec.spacing;
    let big_r = spec.truncation_radius;
    let cells = ((big_r - r) / h).round().to_usize().unwrap_or(0);
    let n_nodes = cells + 1;
    let n = spec.dimension;
    // Single ray for N = 1: the half-line r <= x <= R.
    let omega = if n == 1 {
        T::one()
    } else {
        unit_sphere_area::<T>(n)
    };
    let pow = |s: T| s.powi(n as i32 - 1);
    let half = T::lit(0.5);

    let coords: Vec<T> = (0..n_nodes)
        .map(|i| {
            if i == cells {
                big_r
            } else {
                r + T::from_usize_lossy(i) * h
            }
        })
        .collect();
    let weights = coords
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let w = omega * pow(s) * h;
            if i == 0 || i == cells {
                w * half
            } else {
                w
            }
        })
        .collect();
    let edges = (0..cells)
        .map(|i| {
            let mid = (coords[i] + coords[i + 1]) * half;
            Edge {
                a: i,
                b: i + 1,
                coupling: omega * pow(mid) / h,
            }
        })
        .collect();
    let faces = vec![
        BoundaryFace {
            node: 0,
            side: FaceSide::Hole { component: 0 },
            area: omega * pow(r),
            normal: vec![-T::one()],
            midpoint: vec![r],
            ghost_distance: None,
        },
        BoundaryFace {
            node: cells,
            side: FaceSide::Outer,
            area: omega * pow(big_r),
            normal: vec![T::one()],
            midpoint: vec![big_r],
            ghost_distance: None,
        },
    ];
    let keys: Vec<LatticeKey> = (0..n_nodes).map(|i| [i as i64, 0, 0]).collect();
    let index = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    Grid {
        dimension: n,
        spacing: h,
        backend: Backend::Radial,
        hole: spec.hole.clone(),
        truncation_radius: big_r,
        hole_extent: r,
        coord_dim: 1,
        radii: coords.clone(),
        coords,
        weights,
        keys,
        index,
        edges,
        faces,
        hole_components: 1,
    }
}

fn lattice_point<T: Real>(key: &LatticeKey, dimension: usize, h: T) -> Vec<T> {
    key[..dimension]
        .iter()
        .map(|&i| T::from_i64_lossy(i) * h)
        .collect()
}

/// Masked lattice points with their connected-component index.
fn rasterize_hole<T: Real>(spec: &DomainSpec<T>) -> BTreeMap<LatticeKey, usize> {
    let h = spec.spacing;
    let n = spec.dimension;
    let shapes: Vec<MaskShape<T>> = match &spec.hole {
        Hole::Ball { radius } => vec![MaskShape::Ball {
            center: vec![T::zero(); n],
            radius: *radius,
        }],
        Hole::Mask(shapes) => shapes.clone(),
    };
    let mut masked = BTreeMap::new();
    for shape in &shapes {
        let bounds = shape.bounds(n);
        let lo: Vec<i64> = bounds
            .iter()
            .map(|&(a, _)| (a / h).floor().to_i64().unwrap_or(0))
            .collect();
        let hi: Vec<i64> = bounds
            .iter()
            .map(|&(_, b)| (b / h).ceil().to_i64().unwrap_or(0))
            .collect();
        for_each_key(&lo, &hi, |key| {
            if shape.contains(&lattice_point(&key, n, h)) {
                masked.insert(key, usize::MAX);
            }
        });
    }

    // Face-adjacent flood fill; BTreeMap order makes component numbering deterministic.
    let keys: Vec<LatticeKey> = masked.keys().copied().collect();
    let mut next = 0;
    for start in keys {
        if masked[&start] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        masked.insert(start, next);
        while let Some(k) = queue.pop_front() {
            for nb in neighbours(&k, n) {
                if masked.get(&nb) == Some(&usize::MAX) {
                    masked.insert(nb, next);
                    queue.push_back(nb);
                }
            }
        }
        next += 1;
    }
    masked
}

fn for_each_key(lo: &[i64], hi: &[i64], mut f: impl FnMut(LatticeKey)) {
    let n = lo.len();
    let mut key = [0i64; 3];
    key[..n].copy_from_slice(lo);
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    loop {
        f(key);
        // Increment the last axis fastest.
        let mut d = n;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            if key[d] < hi[d] {
                key[d] += 1;
                for (k, &l) in key[d + 1..n].iter_mut().zip(&lo[d + 1..n]) {
                    *k = l;
                }
                break;
            }
        }
    }
}

fn neighbours(key: &LatticeKey, dimension: usize) -> impl Iterator<Item = LatticeKey> + '_ {
    (0..dimension).flat_map(move |d| {
        [-1i64, 1].into_iter().map(move |step| {
            let mut nb = *key;
            nb[d] += step;
            nb
        })
    })
}

fn build_cartesian<T: Real>(spec: &DomainSpec<T>) -> Result<Grid<T>> {
    let n = spec.dimension;
    let h = spec.spacing;
    let big_r = spec.truncation_radius;
    let masked = rasterize_hole(spec);

    if masked.is_empty() {
        return Err(Error::InvalidSpec(
            "the hole contains no lattice point at this spacing".into(),
        ));
    }
    if !masked.contains_key(&[0, 0, 0]) {
        return Err(Error::InvalidSpec(
            "the origin must lie inside the hole".into(),
        ));
    }
    let limit = big_r - T::lit(2.0) * h;
    let mut hole_extent = T::zero();
    for key in masked.keys() {
        let x = lattice_point(key, n, h);
        let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm < limit) {
            return Err(Error::InvalidSpec(format!(
                "masked cell {:?} lies at |x| = {norm}, not within R - 2h = {limit}",
                &key[..n]
            )));
        }
        hole_extent = hole_extent.max(norm);
    }

    let m = (big_r / h + T::lit(1e-9)).floor().to_i64().unwrap_or(0);
    let bound = (big_r / h) * (big_r / h) * (T::one() + T::lit(1e-12));
    let inside_ball = |key: &LatticeKey| {
        let s: i64 = key[..n].iter().map(|&i| i * i).sum();
        T::from_i64_lossy(s) <= bound
    };

    let mut keys = Vec::new();
    for_each_key(&vec![-m; n], &vec![m; n], |key| {
        if inside_ball(&key) && !masked.contains_key(&key) {
            keys.push(key);
        }
    });
    let index: HashMap<LatticeKey, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();

    let mut coords = Vec::with_capacity(keys.len() * n);
    let mut radii = Vec::with_capacity(keys.len());
    for key in &keys {
        let x = lattice_point(key, n, h);
        radii.push(x.iter().map(|&v| v * v).sum::<T>().sqrt());
        coords.extend(x);
    }
    let cell = h.powi(n as i32);
    let weights = vec![cell; keys.len()];
    let area = h.powi(n as i32 - 1);
    let coupling = area / h;
    let half = T::lit(0.5);

    let mut edges = Vec::new();
    let mut faces = Vec::new();
    for (node, key) in keys.iter().enumerate() {
        for d in 0..n {
            for step in [-1i64, 1] {
                let mut nb = *key;
                nb[d] += step;
                let sign = T::from_i64_lossy(step);
                if let Some(&other) = index.get(&nb) {
                    if step == 1 {
                        edges.push(Edge {
                            a: node,
                            b: other,
                            coupling,
                        });
                    }
                    continue;
                }
                let side = match masked.get(&nb) {
                    Some(&component) => FaceSide::Hole { component },
                    None => FaceSide::Outer,
                };
                let mut normal = vec![T::zero(); n];
                normal[d] = sign;
                let mut midpoint = coords[node * n..(node + 1) * n].to_vec();
                midpoint[d] += sign * h * half;
                faces.push(BoundaryFace {
                    node,
                    side,
                    area,
                    normal,
                    midpoint,
                    ghost_distance: Some(h),
                });
            }
        }
    }
    let hole_components = masked.values().copied().max().map_or(0, |c| c + 1);

    Ok(Grid {
        dimension: n,
        spacing: h,
        backend: Backend::Cartesian,
        hole: spec.hole.clone(),
        truncation_radius: big_r,
        hole_extent,
        coord_dim: n,
        coords,
        radii,
        weights,
        keys,
        index,
        edges,
        faces,
        hole_components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_square() -> Hole<f64> {
        Hole::Mask(vec![MaskShape::Box {
            center: vec![0.0, 0.0],
            half_widths: vec![0.5, 0.5],
        }])
    }

    #[test]
    fn radial_three_dimensional_weights() {
        let grid = build_grid(&DomainSpec::radial(3, 1.0, 2.0, 0.5)).unwrap();
        assert_eq!(grid.radii(), &[1.0, 1.5, 2.0]);
        let expected = [PI, 4.0 * PI * 2.25 * 0.5, 4.0 * PI];
        for (w, e) in grid.weights().iter().zip(expected) {
            assert!((w - e).abs() < 1e-12, "{w} vs {e}");
        }
    }

    #[test]
    fn radial_one_dimensional_single_ray() {
        let grid = build_grid(&DomainSpec::radial(1, 1.0, 3.0, 1.0)).unwrap();
        assert_eq!(grid.radii(), &[1.0, 2.0, 3.0]);
        assert_eq!(grid.weights(), &[0.5, 1.0, 0.5]);
        assert_eq!(grid.hole_faces().count(), 1);
        assert_eq!(grid.outer_faces().count(), 1);
    }

    #[test]
    fn cartesian_square_hole_count_matches_enumeration() {
        let spec = DomainSpec::cartesian(2, unit_square(), 4.0, 0.25);
        let grid = build_grid(&spec).unwrap();
        // Enumeration oracle over the lattice.
        let mut expected = 0;
        for i in -16i64..=16 {
            for j in -16i64..=16 {
                let (x, y) = (i as f64 * 0.25, j as f64 * 0.25);
                let in_ball = x * x + y * y <= 16.0 + 1e-12;
                let in_hole = x.abs() <= 0.5 && y.abs() <= 0.5;
                if in_ball && !in_hole {
                    expected += 1;
                }
            }
        }
        assert_eq!(grid.node_count(), expected);
        assert!(grid.weights().iter().all(|&w| w == 0.0625));
        assert_eq!(grid.hole_components(), 1);
        // The 5x5 masked block exposes 4 * 5 faces.
        assert_eq!(grid.hole_faces().count(), 20);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(matches!(
            build_grid(&DomainSpec::radial(3, 2.0, 1.0, 0.5)),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            build_grid(&DomainSpec::radial(3, 1.0, 2.0, -0.5)),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            build_grid(&DomainSpec::radial(3, 1.0, 2.0, 0.3)),
            Err(Error::InvalidSpec(_))
        ));
        let off_origin = Hole::Mask(vec![MaskShape::Ball {
            center: vec![2.0, 0.0],
            radius: 0.5,
        }]);
        assert!(matches!(
            build_grid(&DomainSpec::cartesian(2, off_origin, 4.0, 0.25)),
            Err(Error::InvalidSpec(_))
        ));
        let too_big = Hole::Mask(vec![MaskShape::Box {
            center: vec![0.0, 0.0],
            half_widths: vec![3.8, 0.5],
        }]);
        assert!(matches!(
            build_grid(&DomainSpec::cartesian(2, too_big, 4.0, 0.25)),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn multiple_components_are_labelled() {
        let hole = Hole::Mask(vec![
            MaskShape::Box {
                center: vec![0.0, 0.0],
                half_widths: vec![0.5, 0.5],
            },
            MaskShape::Ball {
                center: vec![2.0, 0.0],
                radius: 0.5,
            },
        ]);
        let grid = build_grid(&DomainSpec::cartesian(2, hole, 5.0, 0.25)).unwrap();
        assert_eq!(grid.hole_components(), 2);
        let comps: std::collections::HashSet<_> = grid
            .hole_faces()
            .map(|f| match f.side {
                FaceSide::Hole { component } => component,
                FaceSide::Outer => unreachable!(),
            })
            .collect();
        assert_eq!(comps.len(), 2);
    }

    #[test]
    fn faces_are_disjoint_and_normals_point_out_of_the_domain() {
        let grid = build_grid(&DomainSpec::cartesian(
            3,
            Hole::Ball { radius: 0.6 },
            2.0,
            0.25,
        ))
        .unwrap();
        for face in grid.faces() {
            let x = grid.coords(face.node);
            let outward: f64 = face
                .midpoint
                .iter()
                .zip(x)
                .zip(&face.normal)
                .map(|((m, x), n)| (m - x) * n)
                .sum();
            assert!(outward > 0.0);
            let moves_out =
                grid.radius(face.node) < face.midpoint.iter().map(|m| m * m).sum::<f64>().sqrt();
            match face.side {
                FaceSide::Outer => assert!(moves_out || grid.radius(face.node) > 1.5),
                FaceSide::Hole { .. } => assert!(grid.radius(face.node) < 1.2),
            }
        }
        assert!(grid.hole_faces().count() > 0 && grid.outer_faces().count() > 0);
    }

    #[test]
    fn build_is_deterministic() {
        let spec = DomainSpec::cartesian(2, unit_square(), 3.0, 0.25);
        assert_eq!(build_grid(&spec).unwrap(), build_grid(&spec).unwrap());
    }

    #[test]
    fn generic_over_f32() {
        let grid = build_grid(&DomainSpec::<f32>::radial(2, 1.0, 2.0, 0.25)).unwrap();
        assert_eq!(grid.node_count(), 5);
        let exact = std::f32::consts::PI * 3.0;
        assert!((grid.total_volume() - exact).abs() < 1e-4);
    }
}
