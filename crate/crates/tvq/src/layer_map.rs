//! Layer-map files: one `tensor-name<TAB>layer-index` pair per line.
//! Blank lines and lines starting with `#` are skipped.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_layer_map(text: &str) -> Result<BTreeMap<String, usize>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let bad = |msg: String| Error::LayerMap { line, msg };
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (name, layer) = trimmed
            .split_once('\t')
            .ok_or_else(|| bad("expected `name<TAB>layer`".into()))?;
        if name.is_empty() {
            return Err(bad("empty tensor name".into()));
        }
        let layer: usize = layer
            .trim()
            .parse()
            .map_err(|_| bad(format!("`{}` is not a layer index", layer.trim())))?;
        if map.insert(name.to_string(), layer).is_some() {
            return Err(bad(format!("`{name}` listed twice")));
        }
    }
    Ok(map)
}

pub fn read_layer_map(path: impl AsRef<Path>) -> Result<BTreeMap<String, usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_layer_map(&text)
}
