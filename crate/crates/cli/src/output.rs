use crate::config::RunConfig;
use crate::error::CliError;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// 17 significant digits in scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table: header plus string rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Numeric column values; cells that are empty or not numbers are skipped.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.header.iter().position(|h| h == name) else {
            return Vec::new();
        };
        self.rows.iter().filter_map(|r| r[i].parse().ok()).collect()
    }
}

/// Writes the config echo as `#` comments, then the header and rows.
pub fn write_csv(out: &mut dyn Write, config: &RunConfig, table: &Table) -> Result<(), CliError> {
    for line in config.echo() {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `-` means standard output.
pub fn emit(target: &str, config: &RunConfig, table: &Table) -> Result<(), CliError> {
    if target == "-" {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        write_csv(&mut lock, config, table)
    } else {
        save_csv(Path::new(target), config, table)
    }
}

pub fn save_csv(path: &Path, config: &RunConfig, table: &Table) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    write_csv(&mut w, config, table)?;
    w.flush()?;
    Ok(())
}

pub fn save_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
