//! `array NAME { (i,j) = value; ... }` text for array contents.

use std::fmt::Write as _;

use super::{ArrayStore, Cell};
use crate::error::Result;
use crate::polyhedra::parse::{describe, Cursor, Tok};
use crate::Rat;

pub fn format_arrays(store: &ArrayStore) -> String {
    let mut out = String::new();
    for (name, cells) in store {
        let _ = writeln!(out, "array {name} {{");
        for (cell, v) in cells {
            let idx: Vec<String> = cell.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "  ({}) = {v};", idx.join(","));
        }
        out.push_str("}\n");
    }
    out
}

fn signed_int(c: &mut Cursor) -> Result<i64> {
    let neg = c.eat("-");
    match c.next() {
        Tok::Int(v) => Ok(if neg { -v } else { v }),
        other => c.error(format!("expected integer, found {}", describe(&other))),
    }
}

pub fn parse_arrays(text: &str) -> Result<ArrayStore> {
    let mut c = Cursor::new(text)?;
    let mut store = ArrayStore::new();
    while !c.at_eof() {
        if !c.is_ident("array") {
            return c.error(format!("expected `array`, found {}", describe(c.peek())));
        }
        c.next();
        let name = c.ident()?;
        c.expect("{")?;
        let cells = store.entry(name).or_default();
        while !c.eat("}") {
            c.expect("(")?;
            let mut cell: Cell = Vec::new();
            if !c.is_punct(")") {
                loop {
                    cell.push(signed_int(&mut c)?);
                    if !c.eat(",") {
                        break;
                    }
                }
            }
            c.expect(")")?;
            c.expect("=")?;
            let num = signed_int(&mut c)?;
            let den = if c.eat("/") { signed_int(&mut c)? } else { 1 };
            if den == 0 {
                return c.error("zero denominator");
            }
            c.expect(";")?;
            cells.insert(cell, Rat::new(num.into(), den.into()));
        }
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "array B {\n  (0) = 1;\n  (1) = -7/2;\n}\narray E {\n  () = 0;\n}\n";
        let s = parse_arrays(text).unwrap();
        assert_eq!(format_arrays(&s), text);
    }
}
