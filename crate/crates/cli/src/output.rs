use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// `out.csv` → `out<suffix>`, e.g. `out.model.json`.
pub fn side_path(main: &Path, suffix: &str) -> PathBuf {
    let stem = main.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    main.with_file_name(format!("{stem}{suffix}"))
}

/// CSV with two comment lines: the timestamp, then the config echo.
pub fn write_csv<T: Serialize>(path: &Path, cfg: &ExperimentConfig, rows: &[T]) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "# generated: {}", timestamp())?;
    writeln!(out, "# config: {}", cfg.echo())?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON object with `generated` and `config` keys ahead of `body`'s.
pub fn write_json<T: Serialize>(path: &Path, cfg: &ExperimentConfig, body: &T) -> Result<(), CliError> {
    let mut obj = serde_json::Map::new();
    obj.insert("generated".into(), timestamp().into());
    obj.insert("config".into(), serde_json::to_value(cfg)?);
    match serde_json::to_value(body)? {
        serde_json::Value::Object(fields) => obj.extend(fields),
        other => {
            obj.insert("result".into(), other);
        }
    }
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &obj)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
{
    let mut out = create(path)?;
    f(&mut out)?;
    out.flush()?;
    Ok(())
}
