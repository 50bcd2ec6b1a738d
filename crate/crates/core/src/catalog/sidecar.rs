//! Catalog sidecar: a line-oriented `key = value` file. Each `class` key opens
//! a new record; `images`, `overlap` and `split` apply to the latest record.
//!
//! ```text
//! # comment
//! class = Black_footed_Albatross
//! images = 60
//! overlap = 0
//! split = unseen
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ClassCatalog, ClassInfo, ExistingRole};
use crate::error::{Error, Result};

pub fn load_sidecar(path: &Path) -> Result<ClassCatalog> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sidecar(&text, path)
}

pub(crate) fn parse_sidecar(text: &str, path: &Path) -> Result<ClassCatalog> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column: 1,
        message,
    };
    let mut classes: Vec<ClassInfo> = Vec::new();
    let mut explicit_count = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(line_no, format!("expected `key = value`, got {line:?}")))?;
        if key == "class" {
            classes.push(ClassInfo {
                class_id: classes.len(),
                name: value.to_string(),
                image_count: 1,
                overlaps_pretraining: false,
                existing_role: None,
            });
            explicit_count.push(false);
            continue;
        }
        let current = classes
            .last_mut()
            .ok_or_else(|| err(line_no, format!("`{key}` appears before any `class`")))?;
        match key {
            "images" => {
                current.image_count = value
                    .parse()
                    .map_err(|_| err(line_no, format!("bad image count {value:?}")))?;
                *explicit_count.last_mut().unwrap() = true;
            }
            "overlap" => {
                current.overlaps_pretraining = match value {
                    "0" => false,
                    "1" => true,
                    _ => return Err(err(line_no, format!("overlap must be 0 or 1, got {value:?}"))),
                }
            }
            "split" => {
                current.existing_role = Some(match value {
                    "seen" => ExistingRole::Seen,
                    "unseen" => ExistingRole::Unseen,
                    _ => return Err(err(line_no, format!("split must be seen or unseen, got {value:?}"))),
                })
            }
            _ => return Err(err(line_no, format!("unknown key {key:?}"))),
        }
    }
    for (c, explicit) in classes.iter().zip(&explicit_count) {
        if !explicit {
            log::warn!("class {}: no image count given, defaulting to 1", c.name);
        }
    }
    ClassCatalog::new(classes)
}

pub fn write_sidecar(catalog: &ClassCatalog, path: &Path) -> Result<()> {
    let mut out = String::new();
    for c in catalog.classes() {
        let _ = writeln!(out, "class = {}", c.name);
        let _ = writeln!(out, "images = {}", c.image_count);
        let _ = writeln!(out, "overlap = {}", u8::from(c.overlaps_pretraining));
        match c.existing_role {
            Some(ExistingRole::Seen) => out.push_str("split = seen\n"),
            Some(ExistingRole::Unseen) => out.push_str("split = unseen\n"),
            None => {}
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
