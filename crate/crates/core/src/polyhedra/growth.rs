//! Growth directions, widths and cardinality degree fitting.

use num_traits::{One, Zero};

use super::{Binding, ConvexSet, DirVector};
use crate::complexity::ComplexityTerm;
use crate::error::{Error, Result};
use crate::fm::System;
use crate::linalg::{LinearSpace, Row};
use crate::lp::{Cmp, LinearProgram, LpResult};
use crate::Rat;

/// Parameter value held fixed while another parameter is scaled.
pub const DEGREE_BASE: i64 = 8;
pub const DEGREE_SCALES: [i64; 4] = [8, 16, 32, 64];
pub const DEGREE_TOLERANCE: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeEstimate {
    pub term: ComplexityTerm,
    /// Fitted log-log slope per parameter.
    pub slopes: Vec<f64>,
    pub max_residual: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Max minus min of `d·x` over the rational relaxation at `b`; `None` if unbounded.
pub fn width_along(set: &ConvexSet, d: &DirVector, b: &Binding) -> Result<Option<Rat>> {
    let bound = set.bind(b)?;
    if bound.is_empty() {
        return Ok(Some(Rat::zero()));
    }
    let n = bound.space().n_vars();
    let mut lp = LinearProgram::new(n);
    for k in 0..n {
        lp.set_free(k);
    }
    for r in bound.ineq_rows() {
        lp.add_dense(&r[..n], Cmp::Ge, -r[n].clone());
    }
    for r in bound.eq_rows() {
        lp.add_dense(&r[..n], Cmp::Eq, -r[n].clone());
    }
    let obj = d.as_rats();
    let hi = match lp.maximize(&obj) {
        LpResult::Optimal { value, .. } => value,
        LpResult::Unbounded => return Ok(None),
        LpResult::Infeasible => return Ok(Some(Rat::zero())),
    };
    let lo = match lp.minimize(&obj) {
        LpResult::Optimal { value, .. } => value,
        LpResult::Unbounded => return Ok(None),
        LpResult::Infeasible => return Ok(Some(Rat::zero())),
    };
    Ok(Some(hi - lo))
}

impl ConvexSet {
    /// Linear span of the directions along which the set stretches as the
    /// parameters grow: the variable part of the span of the recession cone
    /// of the set in (variables, parameters) with parameters non-decreasing.
    pub fn growth_space(&self) -> LinearSpace<Rat> {
        let nv = self.space().n_vars();
        let nc = self.space().ncols();
        if self.is_empty() {
            return LinearSpace::zero(nv);
        }
        let homog = |r: &Row<Rat>| -> Row<Rat> {
            let mut out = r[..nc].to_vec();
            out.push(Rat::zero());
            out
        };
        let mut ineqs: Vec<Row<Rat>> = self.ineq_rows().iter().map(homog).collect();
        for p in 0..self.space().n_params() {
            let mut row = vec![Rat::zero(); nc + 1];
            row[nv + p] = Rat::one();
            ineqs.push(row);
        }
        let eqs: Vec<Row<Rat>> = self.eq_rows().iter().map(homog).collect();
        let cone = System::new(nc, ineqs.clone(), eqs.clone());
        let mut hull: Vec<Row<Rat>> = eqs.iter().map(|r| r[..nc].to_vec()).collect();
        for r in &ineqs {
            let mut probe = cone.clone();
            let mut strict = r.clone();
            strict[nc] = -Rat::one();
            probe.ineqs.push(strict);
            probe.simplify();
            if probe.is_empty() {
                hull.push(r[..nc].to_vec());
            }
        }
        let span = LinearSpace::kernel(nc, &hull);
        let projected: Vec<Row<Rat>> = span.basis().iter().map(|b| b[..nv].to_vec()).collect();
        LinearSpace::span(nv, &projected)
    }

    /// Primitive integer basis of [`ConvexSet::growth_space`].
    pub fn growth_directions(&self) -> Vec<DirVector> {
        self.growth_space()
            .primitive_basis()
            .into_iter()
            .map(|v| DirVector::new(v.iter().map(|x| x.to_integer().try_into().unwrap_or(i64::MAX)).collect()))
            .collect()
    }

    /// Degree of the point count in each parameter.
    pub fn cardinality_degree(&self) -> Result<ComplexityTerm> {
        Ok(self.degree_estimate(DEGREE_BASE, &DEGREE_SCALES)?.term)
    }

    pub fn degree_estimate(&self, base: i64, scales: &[i64]) -> Result<DegreeEstimate> {
        let params = self.space().params.clone();
        let mut exps = Vec::new();
        let mut slopes = Vec::new();
        let mut max_residual: f64 = 0.0;
        for p in &params {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for &s in scales {
                let mut b: Binding = params.iter().map(|q| (q.clone(), base)).collect();
                b.insert(p.clone(), s);
                let c = self.count_points(&b)?;
                if c > 0 {
                    xs.push(s as f64);
                    ys.push(c as f64);
                }
            }
            if xs.is_empty() {
                exps.push(0);
                slopes.push(0.0);
                continue;
            }
            if xs.len() < 2 {
                return Err(Error::DegreeFit(format!("too few nonzero counts while scaling `{p}`")));
            }
            let slope = log_log_slope(&xs, &ys);
            let rounded = slope.round();
            let residual = (slope - rounded).abs();
            if residual > DEGREE_TOLERANCE || rounded < 0.0 {
                return Err(Error::DegreeFit(format!(
                    "exponent {slope:.3} in `{p}` is not within {DEGREE_TOLERANCE} of a non-negative integer"
                )));
            }
            max_residual = max_residual.max(residual);
            exps.push(rounded as u32);
            slopes.push(slope);
        }
        Ok(DegreeEstimate { term: ComplexityTerm::new(params, exps), slopes, max_residual })
    }
}
