//! Discrete `-Delta` with theta boundary conditions, plus an optional shift `gamma`.
//!
//! The operator is stored in stiffness form `K` over the free nodes, with
//! `A = W^{-1} K` where `W` is the diagonal of node weights. `K` is symmetric,
//! so `A` is self-adjoint for `<f, g>_h = sum w_i f_i g_i`, and it has the
//! M-matrix sign pattern, so `(I + dt A)^{-1}` is entrywise nonnegative.
//!
//! Boundary handling:
//!
//! * Dirichlet nodes on the boundary (radial grids) are eliminated: the node
//!   is fixed and its coupling is folded into the diagonal and the source.
//! * Ghost-point Dirichlet faces (Cartesian grids) add `area / d` to the
//!   diagonal, where `d` is the distance to the ghost.
//! * Robin faces add `b * area` on an on-node boundary and
//!   `area * b / (1 + b d)` on a ghost face, so the coupling increases with
//!   `b` and tends to the Dirichlet value as `b -> inf`.
//! * Neumann faces add nothing.

use std::io::{self, Write};
use std::sync::Arc;

use crate::boundary::{BoundaryData, FaceClass, FaceCondition};
use crate::error::{Error, Result};
use crate::field::{same_grid, Field};
use crate::geometry::Grid;
use crate::linsolve::SpdSystem;
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Test fixture: subtracts the Robin terms instead of adding them.
    #[doc(hidden)]
    pub flip_robin_sign: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeState<T> {
    /// Index into the free-unknown vector.
    Free(usize),
    Fixed(T),
}

/// A Dirichlet-type coupling between a free node and prescribed data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLink<T> {
    pub free: usize,
    pub conductance: T,
    pub value: T,
    pub outer: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinTerm<T> {
    pub face: usize,
    pub free: usize,
    /// Contribution added to the stiffness diagonal.
    pub coupling: T,
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator<T> {
    grid: Arc<Grid<T>>,
    boundary: BoundaryData<T>,
    gamma: T,
    state: Vec<NodeState<T>>,
    free: Vec<usize>,
    free_weights: Vec<T>,
    stiffness: CsrMatrix<T>,
    source: Vec<T>,
    links: Vec<BoundaryLink<T>>,
    robin: Vec<RobinTerm<T>>,
}

pub fn assemble_operator<T: Real>(
    grid: Arc<Grid<T>>,
    bc: &BoundaryData<T>,
    gamma: T,
) -> Result<DiscreteOperator<T>> {
    assemble_operator_with(grid, bc, gamma, AssemblyOptions::default())
}

pub fn assemble_operator_with<T: Real>(
    grid: Arc<Grid<T>>,
    bc: &BoundaryData<T>,
    gamma: T,
    options: AssemblyOptions,
) -> Result<DiscreteOperator<T>> {
    if bc.face_count() != grid.faces().len() {
        return Err(Error::InconsistentInputs(format!(
            "boundary data has {} faces, grid has {}",
            bc.face_count(),
            grid.faces().len()
        )));
    }
    if !(gamma >= T::zero()) || !gamma.is_finite() {
        return Err(Error::InconsistentInputs(format!(
            "gamma must be finite and nonnegative, got {gamma}"
        )));
    }
    let n = grid.node_count();

    // Nodes carrying their own boundary condition (on-node faces).
    let mut fixed: Vec<Option<T>> = vec![None; n];
    let mut fixed_outer = vec![false; n];
    for (face, cond) in grid.faces().iter().zip(bc.conditions()) {
        if face.ghost_distance.is_some() {
            continue;
        }
        match *cond {
            FaceCondition::Hole {
                class: FaceClass::Dirichlet,
                ..
            } => fixed[face.node] = Some(T::zero()),
            FaceCondition::Outer(outer) => {
                if let Some(v) = outer.fixed_value::<T>() {
                    // Hole data wins if both ends of a one-cell grid are fixed.
                    if fixed[face.node].is_none() {
                        fixed[face.node] = Some(v);
                        fixed_outer[face.node] = true;
                    }
                }
            }
            FaceCondition::Hole { .. } => {}
        }
    }

    let mut state = Vec::with_capacity(n);
    let mut free = Vec::new();
    for (node, f) in fixed.iter().enumerate() {
        match f {
            Some(v) => state.push(NodeState::Fixed(*v)),
            None => {
                state.push(NodeState::Free(free.len()));
                free.push(node);
            }
        }
    }
    let free_weights: Vec<T> = free.iter().map(|&i| grid.weight(i)).collect();
    let m = free.len();
    let mut triplets = Vec::with_capacity(4 * grid.edges().len() + m);
    let mut source = vec![T::zero(); m];
    let mut links = Vec::new();
    let mut robin = Vec::new();

    for edge in grid.edges() {
        match (state[edge.a], state[edge.b]) {
            (NodeState::Free(ia), NodeState::Free(ib)) => {
                let c = edge.coupling;
                triplets.push((ia, ia, c));
                triplets.push((ib, ib, c));
                triplets.push((ia, ib, -c));
                triplets.push((ib, ia, -c));
            }
            (NodeState::Free(i), NodeState::Fixed(v))
            | (NodeState::Fixed(v), NodeState::Free(i)) => {
                let fixed_node = if matches!(state[edge.a], NodeState::Fixed(_)) {
                    edge.a
                } else {
                    edge.b
                };
                triplets.push((i, i, edge.coupling));
                source[i] += edge.coupling * v;
                links.push(BoundaryLink {
                    free: i,
                    conductance: edge.coupling,
                    value: v,
                    outer: fixed_outer[fixed_node],
                });
            }
            (NodeState::Fixed(_), NodeState::Fixed(_)) => {}
        }
    }

    let sign = if options.flip_robin_sign {
        -T::one()
    } else {
        T::one()
    };
    for (index, (face, cond)) in grid.faces().iter().zip(bc.conditions()).enumerate() {
        let NodeState::Free(i) = state[face.node] else {
            continue;
        };
        match (*cond, face.ghost_distance) {
            (
                FaceCondition::Hole {
                    class: FaceClass::Dirichlet,
                    ..
                },
                Some(d),
            ) => {
                let c = face.area / d;
                triplets.push((i, i, c));
                links.push(BoundaryLink {
                    free: i,
                    conductance: c,
                    value: T::zero(),
                    outer: false,
                });
            }
            (
                FaceCondition::Hole {
                    class: FaceClass::Robin,
                    robin: b,
                    ..
                },
                ghost,
            ) => {
                let c = match ghost {
                    None => b * face.area,
                    Some(d) => face.area * b / (T::one() + b * d),
                };
                triplets.push((i, i, sign * c));
                robin.push(RobinTerm {
                    face: index,
                    free: i,
                    coupling: sign * c,
                });
            }
            (FaceCondition::Outer(outer), Some(d)) => {
                if let Some(v) = outer.fixed_value::<T>() {
                    let c = face.area / d;
                    triplets.push((i, i, c));
                    source[i] += c * v;
                    links.push(BoundaryLink {
                        free: i,
                        conductance: c,
                        value: v,
                        outer: true,
                    });
                }
            }
            _ => {}
        }
    }
    // Keep every diagonal slot present so preconditioners can rely on it.
    triplets.extend((0..m).map(|i| (i, i, T::zero())));

    Ok(DiscreteOperator {
        grid,
        boundary: bc.clone(),
        gamma,
        state,
        free,
        free_weights,
        stiffness: CsrMatrix::from_triplets(m, triplets),
        source,
        links,
        robin,
    })
}

impl<T: Real> DiscreteOperator<T> {
    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn boundary(&self) -> &BoundaryData<T> {
        &self.boundary
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn state(&self, node: usize) -> NodeState<T> {
        self.state[node]
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn free_weights(&self) -> &[T] {
        &self.free_weights
    }

    /// Nodes eliminated by a homogeneous Dirichlet hole condition.
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        self.grid
            .faces()
            .iter()
            .zip(self.boundary.conditions())
            .filter(|(f, c)| {
                f.ghost_distance.is_none()
                    && matches!(
                        c,
                        FaceCondition::Hole {
                            class: FaceClass::Dirichlet,
                            ..
                        }
                    )
            })
            .map(|(f, _)| f.node)
            .collect()
    }

    /// Stiffness matrix `K` over the free nodes (without the `gamma W` shift).
    pub fn stiffness(&self) -> &CsrMatrix<T> {
        &self.stiffness
    }

    /// Boundary data folded into the right-hand side, in stiffness form.
    pub fn source(&self) -> &[T] {
        &self.source
    }

    pub fn links(&self) -> &[BoundaryLink<T>] {
        &self.links
    }

    pub fn robin_terms(&self) -> &[RobinTerm<T>] {
        &self.robin
    }

    /// Diagonal of `K + gamma W` at a free node.
    pub fn diagonal_entry(&self, node: usize) -> Option<T> {
        match self.state[node] {
            NodeState::Free(i) => Some(self.stiffness.diag(i) + self.gamma * self.free_weights[i]),
            NodeState::Fixed(_) => None,
        }
    }

    /// True when some term removes the constants from the kernel.
    pub fn is_nonsingular(&self) -> bool {
        self.gamma > T::zero()
            || !self.links.is_empty()
            || self.robin.iter().any(|r| r.coupling != T::zero())
            || self.free.is_empty()
    }

    /// `mass_coef W + stiff_coef (K + gamma W)` as a linear system.
    pub fn system(&self, mass_coef: T, stiff_coef: T) -> SpdSystem<'_, T> {
        SpdSystem {
            matrix: &self.stiffness,
            weights: &self.free_weights,
            mass_coef: mass_coef + stiff_coef * self.gamma,
            stiff_coef,
        }
    }

    pub fn gather(&self, field: &Field<T>) -> Vec<T> {
        self.free.iter().map(|&i| field.values()[i]).collect()
    }

    /// Field with the free values given and every fixed node at its data.
    pub fn scatter(&self, free_values: &[T]) -> Field<T> {
        Field::from_fn(self.grid.clone(), |node| match self.state[node] {
            NodeState::Free(i) => free_values[i],
            NodeState::Fixed(v) => v,
        })
    }

    /// Overwrites fixed nodes of `field` with their boundary data.
    pub fn impose(&self, field: &mut Field<T>) {
        for (node, v) in field.values_mut().iter_mut().enumerate() {
            if let NodeState::Fixed(data) = self.state[node] {
                *v = data;
            }
        }
    }

    fn check_grid(&self, f: &Field<T>) -> Result<()> {
        if same_grid(&self.grid, f.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `(A + gamma) f` with homogeneous boundary data; zero at fixed nodes.
    pub fn apply(&self, f: &Field<T>) -> Result<Field<T>> {
        self.check_grid(f)?;
        let x = self.gather(f);
        let kx = self.stiffness.matvec(&x);
        Ok(self.to_field(|i| kx[i] / self.free_weights[i] + self.gamma * x[i]))
    }

    /// `(A + gamma) f` including the boundary data: the residual of the
    /// homogeneous equation for a field meeting the prescribed values.
    pub fn apply_affine(&self, f: &Field<T>) -> Result<Field<T>> {
        self.check_grid(f)?;
        let x = self.gather(f);
        let kx = self.stiffness.matvec(&x);
        Ok(self.to_field(|i| (kx[i] - self.source[i]) / self.free_weights[i] + self.gamma * x[i]))
    }

    fn to_field(&self, free_value: impl Fn(usize) -> T) -> Field<T> {
        Field::from_fn(self.grid.clone(), |node| match self.state[node] {
            NodeState::Free(i) => free_value(i),
            NodeState::Fixed(_) => T::zero(),
        })
    }

    /// Sign pattern and weak diagonal dominance of `K + gamma W`.
    pub fn is_m_matrix(&self) -> bool {
        (0..self.stiffness.dim()).all(|i| {
            let diag = self.stiffness.diag(i) + self.gamma * self.free_weights[i];
            let mut off = T::zero();
            for (j, v) in self.stiffness.row(i) {
                if j != i {
                    if v > T::zero() {
                        return false;
                    }
                    off += v.abs();
                }
            }
            diag > T::zero() && diag >= off * (T::one() - T::lit(1e-12))
        })
    }

    /// Rate of flow out through the outer boundary for a field.
    pub fn outer_outflow(&self, f: &Field<T>) -> T {
        self.links
            .iter()
            .filter(|l| l.outer)
            .map(|l| l.conductance * (f.values()[self.free[l.free]] - l.value))
            .sum()
    }

    /// Rate of flow out through the hole boundary (Dirichlet and Robin faces).
    pub fn hole_outflow(&self, f: &Field<T>) -> T {
        let dirichlet: T = self
            .links
            .iter()
            .filter(|l| !l.outer)
            .map(|l| l.conductance * (f.values()[self.free[l.free]] - l.value))
            .sum();
        let robin: T = self
            .robin
            .iter()
            .map(|r| r.coupling * f.values()[self.free[r.free]])
            .sum();
        dirichlet + robin
    }

    /// Writes `K + gamma W` as `row col value` lines with grid node ids.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "% stiffness matrix K + gamma W over free nodes; {} rows, {} nonzeros",
            self.stiffness.dim(),
            self.stiffness.nnz()
        )?;
        for i in 0..self.stiffness.dim() {
            for (j, v) in self.stiffness.row(i) {
                let v = if i == j {
                    v + self.gamma * self.free_weights[i]
                } else {
                    v
                };
                if v != T::zero() {
                    writeln!(
                        out,
                        "{} {} {:.16e}",
                        self.free[i],
                        self.free[j],
                        v.to_f64_lossy()
                    )?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{classify_boundary, OuterCondition, ThetaSpec};
    use crate::geometry::{build_grid, DomainSpec, Hole};
    use std::f64::consts::PI;

    fn radial_op(
        n: usize,
        r: f64,
        big_r: f64,
        h: f64,
        theta: f64,
        outer: OuterCondition,
    ) -> DiscreteOperator<f64> {
        let grid = Arc::new(build_grid(&DomainSpec::radial(n, r, big_r, h)).unwrap());
        let bc = classify_boundary(&grid, &ThetaSpec::constant(theta, outer)).unwrap();
        assemble_operator(grid, &bc, 0.0).unwrap()
    }

    #[test]
    fn neumann_rows_sum_to_zero() {
        let op = radial_op(1, 1.0, 3.0, 1.0, 1.0, OuterCondition::Neumann0);
        assert_eq!(op.free_nodes().len(), 3);
        for i in 0..3 {
            let s: f64 = op.stiffness().row(i).map(|(_, v)| v).sum();
            assert_eq!(s, 0.0);
        }
        let one = Field::constant(op.grid().clone(), 1.0);
        assert!(op.apply(&one).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(!op.is_nonsingular());
    }

    #[test]
    fn dirichlet_annihilates_linear_function_in_1d() {
        let op = radial_op(1, 1.0, 3.0, 1.0, 0.0, OuterCondition::Neumann0);
        assert_eq!(op.dirichlet_nodes(), vec![0]);
        let u = Field::from_fn(op.grid().clone(), |i| op.grid().radius(i) - 1.0);
        let au = op.apply(&u).unwrap();
        // Node 1 is the only interior node.
        assert_eq!(au.values()[1], 0.0);
    }

    #[test]
    fn robin_term_on_three_dimensional_boundary_node() {
        let op = radial_op(3, 1.0, 2.0, 0.25, 0.5, OuterCondition::Dirichlet0);
        let h: f64 = 0.25;
        let edge = 4.0 * PI * (1.0 + h / 2.0).powi(2) / h;
        let robin = 4.0 * PI;
        let diag = op.diagonal_entry(0).unwrap();
        assert!((diag - (edge + robin)).abs() < 1e-12, "{diag}");
        assert_eq!(op.robin_terms().len(), 1);
        assert!((op.robin_terms()[0].coupling - robin).abs() < 1e-12);
    }

    #[test]
    fn apply_zero_is_zero_and_grid_mismatch_detected() {
        let op = radial_op(2, 1.0, 2.0, 0.25, 0.3, OuterCondition::Dirichlet0);
        let zero = Field::zeros(op.grid().clone());
        assert!(op.apply(&zero).unwrap().values().iter().all(|&v| v == 0.0));
        let other = Arc::new(build_grid(&DomainSpec::radial(2, 1.0, 3.0, 0.25)).unwrap());
        assert_eq!(op.apply(&Field::zeros(other)), Err(Error::GridMismatch));
    }

    #[test]
    fn closed_form_residual_is_second_order() {
        let residual = |h: f64| {
            let op = radial_op(3, 1.0, 2.0, h, 0.0, OuterCondition::FixedOne);
            let exact = |s: f64| (1.0 / s - 1.0) / (0.5 - 1.0);
            let u = Field::from_fn(op.grid().clone(), |i| exact(op.grid().radius(i)));
            op.apply_affine(&u).unwrap().max_abs()
        };
        let (coarse, fine) = (residual(0.025), residual(0.0125));
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn cartesian_operator_is_symmetric_m_matrix() {
        let grid = Arc::new(
            build_grid(&DomainSpec::cartesian(
                2,
                Hole::Ball { radius: 1.0 },
                3.0,
                0.25,
            ))
            .unwrap(),
        );
        for theta in [0.0, 0.2, 1.0] {
            let bc =
                classify_boundary(&grid, &ThetaSpec::constant(theta, OuterCondition::FixedOne))
                    .unwrap();
            let op = assemble_operator(grid.clone(), &bc, 0.5).unwrap();
            assert!(op.stiffness().is_symmetric(1e-14));
            assert!(op.is_m_matrix());
        }
    }

    #[test]
    fn coordinate_dump_lists_entries() {
        let op = radial_op(1, 1.0, 3.0, 1.0, 0.0, OuterCondition::Dirichlet0);
        let mut buf = Vec::new();
        op.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with('%'));
        assert_eq!(lines[1], "1 1 2.0000000000000000e0");
    }

    #[test]
    fn flipped_robin_fixture_breaks_sign_pattern() {
        let grid = Arc::new(build_grid(&DomainSpec::radial(2, 1.0, 2.0, 0.25)).unwrap());
        let bc = classify_boundary(
            &grid,
            &ThetaSpec::constant(0.05, OuterCondition::Dirichlet0),
        )
        .unwrap();
        let op = assemble_operator_with(
            grid,
            &bc,
            0.0,
            AssemblyOptions {
                flip_robin_sign: true,
            },
        )
        .unwrap();
        assert!(!op.is_m_matrix());
    }
}
