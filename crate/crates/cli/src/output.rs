use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;
use tempfile::NamedTempFile;

use crate::config::Format;

/// Write `contents` to a temp file beside `path`, then rename over it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(_) | Value::Bool(_) => v.to_string(),
        _ => serde_json::to_string(v).expect("valid json"),
    }
}

/// One header row and one row per object; nested values become JSON text.
pub fn to_csv(rows: &Value) -> io::Result<Vec<u8>> {
    let objects: Vec<&serde_json::Map<String, Value>> = match rows {
        Value::Array(items) => items.iter().filter_map(Value::as_object).collect(),
        Value::Object(o) => vec![o],
        _ => vec![],
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(first) = objects.first() {
        let header: Vec<&String> = first.keys().collect();
        w.write_record(&header)?;
        for o in &objects {
            w.write_record(
                header
                    .iter()
                    .map(|k| o.get(*k).map(cell).unwrap_or_default()),
            )?;
        }
    }
    w.into_inner().map_err(|e| e.into_error())
}

pub fn render(json: &Value, rows: &Value, format: Format) -> io::Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(json)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => to_csv(rows),
    }
}
