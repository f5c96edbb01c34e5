//! Built-in pure functions callable from expressions.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::Rat;

pub const INTRINSICS: &[&str] = &["f", "g", "sample"];

pub fn is_intrinsic(name: &str) -> bool {
    INTRINSICS.contains(&name)
}

fn unary<'a>(name: &str, args: &'a [Rat]) -> Result<&'a Rat> {
    match args {
        [x] => Ok(x),
        _ => Err(Error::Exec(format!("`{name}` takes one argument, got {}", args.len()))),
    }
}

/// `f(x) = x + 1`, `g(x) = 2x - 1`; `sample` hashes its arguments and the
/// seed to 0 or 1.
pub fn call_intrinsic(name: &str, args: &[Rat], seed: u64) -> Result<Rat> {
    match name {
        "f" => Ok(unary(name, args)? + Rat::one()),
        "g" => Ok(unary(name, args)? * Rat::from_integer(2.into()) - Rat::one()),
        "sample" => {
            let mut h = DefaultHasher::new();
            seed.hash(&mut h);
            for a in args {
                a.numer().hash(&mut h);
                a.denom().hash(&mut h);
            }
            Ok(if h.finish() & 1 == 1 { Rat::one() } else { Rat::zero() })
        }
        other => Err(Error::Exec(format!("unknown intrinsic `{other}`"))),
    }
}
