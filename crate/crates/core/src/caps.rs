//! Process-wide resource caps. Defaults suit the bundled corpus; the CLI
//! may override them once at startup.

use std::sync::RwLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Integer points produced by one enumeration.
    pub points: usize,
    /// Inequalities allowed in face enumeration.
    pub faces: usize,
    /// Nodes in an instance graph.
    pub nodes: usize,
    /// Faces with candidates visited by the exhaustive search.
    pub search_faces: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { points: 1_000_000, faces: 20, nodes: 100_000, search_faces: 24 }
    }
}

static CAPS: RwLock<Caps> = RwLock::new(Caps { points: 1_000_000, faces: 20, nodes: 100_000, search_faces: 24 });

pub fn caps() -> Caps {
    *CAPS.read().expect("caps lock")
}

pub fn set_caps(c: Caps) {
    *CAPS.write().expect("caps lock") = c;
}

impl Caps {
    /// Parse `points=..,faces=..,nodes=..,search_faces=..` over the defaults.
    pub fn parse_override(text: &str) -> Result<Caps, String> {
        let mut c = Caps::default();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("bad cap entry `{part}`"))?;
            let v: usize = v.trim().parse().map_err(|_| format!("bad cap value `{v}`"))?;
            if v == 0 {
                return Err(format!("cap `{k}` must be positive"));
            }
            match k.trim() {
                "points" => c.points = v,
                "faces" => c.faces = v,
                "nodes" => c.nodes = v,
                "search_faces" => c.search_faces = v,
                other => return Err(format!("unknown cap `{other}`")),
            }
        }
        Ok(c)
    }
}
