//! Phase sets named in a run configuration.
//!
//! A set `name` is described by keys under `set.<name>.`:
//!
//! | kind            | keys                                           |
//! |-----------------|------------------------------------------------|
//! | `full`          |                                                |
//! | `cantor`        | `level.<n>.k`, `level.<n>.delta`, `depth`      |
//! | `middle-thirds` | `depth`                                        |
//! | `sublevel`      | `k`, `ell`                                     |
//! | `file`          | `path`                                         |
//!
//! Every kind also accepts `box_scales`, the radii used for the box
//! dimension estimate.

use std::fmt::Write as _;
use std::path::Path;

use lfu_core::setlib::{dyadic_sublevel, middle_thirds, CantorSpec, IntervalSet};

use crate::config::{parse_u64, Config};
use crate::error::{CliError, CliResult};

/// Default box-counting radii: `10^-1 .. 10^-12`.
pub fn default_box_scales() -> Vec<f64> {
    (1..=12).map(|i| 10f64.powi(-i)).collect()
}

/// A resolved set with its descriptive statistics.
#[derive(Clone, Debug)]
pub struct NamedSet {
    pub name: String,
    pub kind: String,
    pub set: IntervalSet,
    pub box_dimension: f64,
    pub hausdorff_bound: Option<f64>,
}

impl NamedSet {
    pub const CSV_HEADER: &'static str = "set,kind,intervals,measure,box_dimension,hausdorff_bound";

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},",
            self.name,
            self.kind,
            self.set.len(),
            self.set.measure_f64(),
            self.box_dimension
        );
        if let Some(h) = self.hausdorff_bound {
            let _ = write!(s, "{h}");
        }
        s.push('\n');
        s
    }
}

fn field<'a>(entries: &[(&str, &'a str)], key: &str) -> Option<&'a str> {
    entries.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

fn field_u64(name: &str, entries: &[(&str, &str)], key: &str) -> CliResult<Option<u64>> {
    field(entries, key)
        .map(|v| {
            parse_u64(v).ok_or_else(|| {
                CliError::Config(format!("set.{name}.{key} = {v:?}: expected an integer"))
            })
        })
        .transpose()
}

/// Resolves `set.<name>.*`, relative file paths against `base`.
pub fn resolve(config: &Config, name: &str, base: &Path) -> CliResult<NamedSet> {
    let entries = config.section(&format!("set.{name}"));
    let kind = field(&entries, "kind")
        .ok_or_else(|| CliError::Config(format!("missing key set.{name}.kind")))?;
    let allowed: &[&str] = match kind {
        "full" => &[],
        "cantor" => &["depth"],
        "middle-thirds" => &["depth"],
        "sublevel" => &["k", "ell"],
        "file" => &["path"],
        other => {
            return Err(CliError::Config(format!(
                "set.{name}.kind = {other:?}: expected full, cantor, middle-thirds, sublevel or file"
            )))
        }
    };
    for (key, _) in &entries {
        let known = *key == "kind"
            || *key == "box_scales"
            || allowed.contains(key)
            || (kind == "cantor" && key.starts_with("level."));
        if !known {
            return Err(CliError::Config(format!("unknown key set.{name}.{key}")));
        }
    }
    let mut hausdorff_bound = None;
    let set = match kind {
        "full" => IntervalSet::full(),
        "cantor" => {
            let has_levels = entries.iter().any(|(k, _)| k.starts_with("level."));
            let spec = if has_levels {
                CantorSpec::from_entries(entries.iter().copied())?
            } else {
                CantorSpec::default_demo()
            };
            let depth = match field_u64(name, &entries, "depth")? {
                Some(d) => d as usize,
                None => spec.depth() - 1,
            };
            if depth >= 2 {
                hausdorff_bound = Some(spec.hausdorff_lower_bound(depth)?);
            }
            spec.level(depth)?
        }
        "middle-thirds" => {
            let depth = field_u64(name, &entries, "depth")?.unwrap_or(8);
            middle_thirds(u32::try_from(depth).unwrap_or(u32::MAX))?
        }
        "sublevel" => {
            let k = field_u64(name, &entries, "k")?
                .ok_or_else(|| CliError::Config(format!("missing key set.{name}.k")))?;
            let ell = field_u64(name, &entries, "ell")?
                .ok_or_else(|| CliError::Config(format!("missing key set.{name}.ell")))?;
            dyadic_sublevel(u32::try_from(k).unwrap_or(u32::MAX), ell)?
        }
        _ => {
            let rel = field(&entries, "path")
                .ok_or_else(|| CliError::Config(format!("missing key set.{name}.path")))?;
            let path = base.join(rel);
            let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
            IntervalSet::parse(&text)?
        }
    };
    let scales = config.f64_list_or(&format!("set.{name}.box_scales"), &default_box_scales())?;
    let box_dimension = set.box_dimension_estimate(&scales)?;
    Ok(NamedSet {
        name: name.to_string(),
        kind: kind.to_string(),
        set,
        box_dimension,
        hausdorff_bound,
    })
}
