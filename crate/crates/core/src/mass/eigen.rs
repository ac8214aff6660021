use crate::error::{Error, Result};
use crate::linsolve::SolveReport;
use crate::scalar::{unit_sphere_area, Real};

/// First Dirichlet eigenpair of the Laplacian on the unit ball, in radial form.
#[derive(Debug, Clone, PartialEq)]
pub struct BallEigenpair<T> {
    pub dimension: usize,
    pub lambda: T,
    /// Sample radii `s_i = i / resolution`, ending at `s = 1`.
    pub radii: Vec<T>,
    /// Positive samples with `psi(1) = 0`, normalised to unit `L^1` mass.
    pub psi: Vec<T>,
    pub iterations: usize,
}

impl<T: Real> BallEigenpair<T> {
    /// Piecewise linear `psi(s)`, zero for `s >= 1`.
    pub fn psi_at(&self, s: T) -> T {
        let s = s.abs();
        if s >= T::one() {
            return T::zero();
        }
        let m = self.radii.len() - 1;
        let pos = s * T::from_usize_lossy(m);
        let i = pos.floor().to_usize().unwrap_or(0).min(m - 1);
        let frac = pos - T::from_usize_lossy(i);
        self.psi[i] * (T::one() - frac) + self.psi[i + 1] * frac
    }
}

/// Solves `-(s^{1-N} (s^{N-1} psi')') = lambda psi` on `[0, 1]` with
/// `psi(1) = 0` by inverse iteration on a vertex-centred finite-volume grid.
pub fn dirichlet_ball_eigenpair<T: Real>(
    dimension: usize,
    resolution: usize,
) -> Result<BallEigenpair<T>> {
    if !(1..=3).contains(&dimension) {
        return Err(Error::OutOfRange {
            name: "dimension",
            value: dimension as f64,
            range: "{1, 2, 3}",
        });
    }
    if resolution < 4 {
        return Err(Error::OutOfRange {
            name: "resolution",
            value: resolution as f64,
            range: "[4, inf)",
        });
    }
    let m = resolution;
    let h = T::one() / T::from_usize_lossy(m);
    let half = T::lit(0.5);
    let nf = T::from_usize_lossy(dimension);
    let power = |s: T| s.powi(dimension as i32 - 1);
    let node = |i: usize| T::from_usize_lossy(i) * h;

    // Unknowns at s_0 .. s_{m-1}; psi(s_m) = 0.
    let weights: Vec<T> = (0..m)
        .map(|i| {
            let lo = if i == 0 {
                T::zero()
            } else {
                node(i) - half * h
            };
            let hi = node(i) + half * h;
            (hi.powi(dimension as i32) - lo.powi(dimension as i32)) / nf
        })
        .collect();
    let coupling: Vec<T> = (0..m).map(|i| power(node(i) + half * h) / h).collect();
    let diag: Vec<T> = (0..m)
        .map(|i| coupling[i] + if i == 0 { T::zero() } else { coupling[i - 1] })
        .collect();

    let apply_k = |v: &[T]| -> Vec<T> {
        (0..m)
            .map(|i| {
                let mut y = diag[i] * v[i];
                if i > 0 {
                    y -= coupling[i - 1] * v[i - 1];
                }
                if i + 1 < m {
                    y -= coupling[i] * v[i + 1];
                }
                y
            })
            .collect()
    };
    let rayleigh = |v: &[T]| -> T {
        let kv = apply_k(v);
        let num: T = v.iter().zip(&kv).map(|(&a, &b)| a * b).sum();
        let den: T = v.iter().zip(&weights).map(|(&a, &w)| a * a * w).sum();
        num / den
    };

    let mut v: Vec<T> = (0..m).map(|i| T::one() - node(i) * node(i)).collect();
    let mut lambda = rayleigh(&v);
    let max_iter = 1000;
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let rhs: Vec<T> = v.iter().zip(&weights).map(|(&a, &w)| a * w).collect();
        v = thomas(&diag, &coupling, &rhs);
        let scale = v.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        v.iter_mut().for_each(|x| *x /= scale);
        let next = rayleigh(&v);
        let change = ((next - lambda) / next).abs();
        history.push(change.to_f64_lossy());
        lambda = next;
        if change <= T::lit(1e-13).max(T::epsilon() * T::lit(64.0)) {
            let omega: T = unit_sphere_area(dimension);
            if v[0] < T::zero() {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            let l1: T = v.iter().zip(&weights).map(|(&a, &w)| a * w).sum::<T>() * omega;
            let mut psi: Vec<T> = v.iter().map(|&x| x / l1).collect();
            psi.push(T::zero());
            return Ok(BallEigenpair {
                dimension,
                lambda,
                radii: (0..=m).map(node).collect(),
                psi,
                iterations: it,
            });
        }
    }
    Err(Error::NotConverged {
        report: SolveReport {
            iterations: max_iter,
            relative_residual: history.last().copied().unwrap_or(f64::NAN),
            converged: false,
            history,
        },
    })
}

/// Solves the symmetric tridiagonal system with diagonal `diag` and
/// off-diagonals `-coupling[i]` between `i` and `i + 1`.
fn thomas<T: Real>(diag: &[T], coupling: &[T], rhs: &[T]) -> Vec<T> {
    let m = diag.len();
    let mut c = vec![T::zero(); m];
    let mut d = vec![T::zero(); m];
    let mut denom = diag[0];
    if m > 1 {
        c[0] = -coupling[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..m {
        let a = -coupling[i - 1];
        denom = diag[i] - a * c[i - 1];
        if i + 1 < m {
            c[i] = -coupling[i] / denom;
        }
        d[i] = (rhs[i] - a * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..m - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}
