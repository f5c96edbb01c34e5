//! Integer point enumeration and counting at a fixed parameter binding.

use num_traits::ToPrimitive;

use super::{Binding, ConvexSet};
use crate::caps::caps;
use crate::error::{Error, Result};
use crate::fm::System;
use crate::Rat;

/// Per-level loop bounds: level k holds the rows of the projection onto
/// the first k+1 variables that mention variable k.
pub struct Bounds {
    levels: Vec<Vec<(Vec<i128>, bool)>>,
    empty: bool,
}

fn to_i128(v: &Rat) -> Result<i128> {
    if !v.is_integer() {
        return Err(Error::Internal("non-integral row after normalization".into()));
    }
    v.numer().to_i128().ok_or(Error::CapExceeded { what: "coefficient magnitude", cap: i128::MAX as usize })
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

impl Bounds {
    pub fn new(set: &ConvexSet, b: &Binding) -> Result<Bounds> {
        let bound = set.bind(b)?;
        let n = bound.space().n_vars();
        if bound.is_empty() {
            return Ok(Bounds { levels: vec![Vec::new(); n], empty: true });
        }
        let mut levels = vec![Vec::new(); n];
        let mut sys: System<Rat> = bound.system().clone();
        for k in (0..n).rev() {
            let mut lvl = Vec::new();
            for (rows, is_eq) in [(&sys.ineqs, false), (&sys.eqs, true)] {
                for r in rows {
                    if !r[k].is_zero_ref() {
                        let ints = r[..=k]
                            .iter()
                            .chain(std::iter::once(&r[n]))
                            .map(to_i128)
                            .collect::<Result<Vec<_>>>()?;
                        lvl.push((ints, is_eq));
                    }
                }
            }
            let has_lower = lvl.iter().any(|(r, e)| *e || r[k] > 0);
            let has_upper = lvl.iter().any(|(r, e)| *e || r[k] < 0);
            if !(has_lower && has_upper) {
                return Err(Error::Unbounded);
            }
            levels[k] = lvl;
            sys.eliminate(k);
            if sys.infeasible {
                return Ok(Bounds { levels, empty: true });
            }
        }
        Ok(Bounds { levels, empty: false })
    }

    /// Inclusive range of variable `k` given the prefix values.
    fn range(&self, k: usize, prefix: &[i64]) -> Option<(i128, i128)> {
        let mut lo = i128::MIN;
        let mut hi = i128::MAX;
        for (r, is_eq) in &self.levels[k] {
            let a = r[k];
            let mut rest = r[k + 1];
            for (j, &v) in prefix.iter().enumerate() {
                rest += r[j] * v as i128;
            }
            if *is_eq {
                if rest % a != 0 {
                    return None;
                }
                let v = -rest / a;
                lo = lo.max(v);
                hi = hi.min(v);
            } else if a > 0 {
                lo = lo.max(ceil_div(-rest, a));
            } else {
                hi = hi.min(floor_div(rest, -a));
            }
        }
        if lo > hi {
            None
        } else {
            Some((lo, hi))
        }
    }

    fn walk(&self, prefix: &mut Vec<i64>, visit: &mut dyn FnMut(&[i64], i128, i128) -> Result<()>) -> Result<()> {
        let k = prefix.len();
        let Some((lo, hi)) = self.range(k, prefix) else { return Ok(()) };
        if k + 1 == self.levels.len() {
            return visit(prefix, lo, hi);
        }
        for v in lo..=hi {
            prefix.push(v as i64);
            self.walk(prefix, visit)?;
            prefix.pop();
        }
        Ok(())
    }

    /// Calls `visit(prefix, lo, hi)` for every feasible prefix of the
    /// first n−1 variables with the last variable's range.
    pub fn for_each_row(&self, visit: &mut dyn FnMut(&[i64], i128, i128) -> Result<()>) -> Result<()> {
        if self.empty {
            return Ok(());
        }
        if self.levels.is_empty() {
            return visit(&[], 0, 0);
        }
        self.walk(&mut Vec::new(), visit)
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }
}

trait ZeroRef {
    fn is_zero_ref(&self) -> bool;
}

impl ZeroRef for Rat {
    fn is_zero_ref(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

impl ConvexSet {
    pub fn enumerate_points(&self, b: &Binding) -> Result<Vec<Vec<i64>>> {
        self.enumerate_points_capped(b, caps().points)
    }

    /// All integer points in lexicographic order.
    pub fn enumerate_points_capped(&self, b: &Binding, cap: usize) -> Result<Vec<Vec<i64>>> {
        let bounds = Bounds::new(self, b)?;
        let nv = self.space().n_vars();
        let mut pts: Vec<Vec<i64>> = Vec::new();
        bounds.for_each_row(&mut |prefix, lo, hi| {
            if nv == 0 {
                pts.push(Vec::new());
                return Ok(());
            }
            if pts.len() as i128 + (hi - lo + 1) > cap as i128 {
                return Err(Error::CapExceeded { what: "point", cap });
            }
            for v in lo..=hi {
                let mut p = prefix.to_vec();
                p.push(v as i64);
                pts.push(p);
            }
            Ok(())
        })?;
        Ok(pts)
    }

    /// Number of integer points; only the first n−1 variables are enumerated.
    pub fn count_points(&self, b: &Binding) -> Result<u128> {
        let cap = caps().points;
        let bounds = Bounds::new(self, b)?;
        let mut total: u128 = 0;
        let mut rows = 0usize;
        bounds.for_each_row(&mut |_, lo, hi| {
            rows += 1;
            if rows > cap {
                return Err(Error::CapExceeded { what: "point", cap });
            }
            total += (hi - lo + 1) as u128;
            Ok(())
        })?;
        Ok(total)
    }
}
