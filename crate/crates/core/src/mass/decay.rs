use crate::error::{Error, Result};
use crate::mass::MassTrace;
use crate::scalar::Real;

/// Least-squares fit of `log y = log amplitude + exponent * log t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit<T> {
    pub exponent: T,
    pub amplitude: T,
    pub r_squared: T,
    pub points: usize,
}

/// Fits `|m(t) - m_inf| ~ amplitude * t^exponent` over `t_lo <= t <= t_hi`.
pub fn fit_decay_exponent<T: Real>(
    trace: &MassTrace<T>,
    m_inf: T,
    window: (T, T),
) -> Result<DecayFit<T>> {
    let (lo, hi) = window;
    let mut pts = Vec::new();
    for &(t, m) in &trace.points {
        if t < lo || t > hi {
            continue;
        }
        let gap = m - m_inf;
        if !(gap > T::zero()) {
            return Err(Error::DegenerateWindow(format!(
                "m(t) - m_inf = {gap} is not positive at t = {t}"
            )));
        }
        pts.push((t, gap));
    }
    fit_power_law(&pts)
}

/// Fits `y ~ amplitude * t^exponent` to positive samples; needs at least 8.
pub fn fit_power_law<T: Real>(points: &[(T, T)]) -> Result<DecayFit<T>> {
    if points.len() < 8 {
        return Err(Error::DegenerateWindow(format!(
            "{} points in the fit window, need at least 8",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(t, y)| !(t > T::zero()) || !(y > T::zero()))
    {
        return Err(Error::DegenerateWindow(
            "log-log fit needs positive t and y".into(),
        ));
    }
    let n = T::from_usize_lossy(points.len());
    let xs: Vec<T> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<T> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateWindow("all fit times coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > T::zero() {
        sxy * sxy / (sxx * syy)
    } else {
        T::one()
    };
    Ok(DecayFit {
        exponent: slope,
        amplitude: intercept.exp(),
        r_squared,
        points: points.len(),
    })
}
