//! Built-in systems and system lookup.

use std::path::Path;

use crate::error::{Error, Result};
use crate::system::{parse_system, SystemDef};

const BUILTINS: &[(&str, &str)] = &[
    ("disc", include_str!("../systems/disc.sys")),
    ("ball-sphere", include_str!("../systems/ball-sphere.sys")),
    ("heisenberg", include_str!("../systems/heisenberg.sys")),
];

pub fn builtin_ids() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(id, _)| *id)
}

/// Source text of a built-in system file.
pub fn builtin_source(id: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(b, _)| *b == id).map(|(_, s)| *s)
}

pub fn builtin(id: &str) -> Result<SystemDef> {
    let text = builtin_source(id).ok_or_else(|| Error::UnknownSystem(id.to_string()))?;
    parse_system(text, id)
}

/// A built-in id, or else a path to a system file.
pub fn load_system(id_or_path: &str) -> Result<SystemDef> {
    if builtin_source(id_or_path).is_some() {
        return builtin(id_or_path);
    }
    let path = Path::new(id_or_path);
    if path.exists() {
        SystemDef::from_path(path)
    } else {
        Err(Error::UnknownSystem(id_or_path.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        let disc = load_system("disc").unwrap();
        assert_eq!((disc.dim(), disc.levels.clone()), (5, vec![3, 4, 5]));
        assert_eq!(disc.param_names(), vec!["A", "C", "R"]);
        let ball = load_system("ball-sphere").unwrap();
        assert_eq!((ball.dim(), ball.levels.clone()), (5, vec![3, 5]));
        assert_eq!(ball.param_names(), vec!["A", "k"]);
        let h = load_system("heisenberg").unwrap();
        assert_eq!((h.dim(), h.levels.clone()), (3, vec![2, 3]));
    }

    #[test]
    fn unknown_id() {
        assert!(matches!(load_system("nope"), Err(Error::UnknownSystem(_))));
    }
}
