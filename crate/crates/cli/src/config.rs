//! `key = value` run configuration shared by every subcommand.
//!
//! Each subcommand declares its keys with defaults. A run's configuration is
//! the defaults, overlaid by the config file, overlaid by command-line flags.

use crate::error::CliError;
use bell_halfline::testfn::TSIRELSON_C;

/// Key set and defaults of one subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Schema {
    pub command: &'static str,
    pub keys: &'static [(&'static str, &'static str)],
}

pub const DEFAULT_EPS_LIST: &str = "1e-1,3e-2,1e-2,3e-3,1e-3";
pub const DEFAULT_LEVELS: &str = "2,4,6,8";
pub const DEFAULT_ETA_LIST: &str = "1e-1,3e-2,1e-2,3e-3,1e-3";

pub const SPECFUN_TABLE: Schema = Schema {
    command: "specfun-table",
    keys: &[("fn", "k1"), ("grid", "0.01,30,100,log"), ("eps", "0.1"), ("output", "-")],
};

pub const TESTFN_SAMPLE: Schema = Schema {
    command: "testfn-sample",
    keys: &[("family", "phi"), ("eps", "0.1"), ("mass", "1"), ("grid", "0,25,501,lin"), ("output", "-")],
};

pub const FORMS_SWEEP: Schema = Schema {
    command: "forms-sweep",
    keys: &[
        ("kernel", "carleman"),
        ("mass", "1"),
        ("eps-list", DEFAULT_EPS_LIST),
        ("route", "all"),
        ("panels", "6"),
        ("nodes-per-panel", "16"),
        ("output", "-"),
    ],
};

pub const BELL_SWEEP: Schema = Schema {
    command: "bell-sweep",
    keys: &[
        ("kernel", "massless"),
        ("mass", "1"),
        ("c", "tsirelson"),
        ("eps-list", DEFAULT_EPS_LIST),
        ("panels", "6"),
        ("nodes-per-panel", "16"),
        ("output", "-"),
    ],
};

pub const COMPRESS_SWEEP: Schema = Schema {
    command: "compress-sweep",
    keys: &[("depth-list", DEFAULT_LEVELS), ("span-list", DEFAULT_LEVELS), ("dump-matrix", ""), ("output", "-")],
};

pub const APPENDIX_CHECK: Schema = Schema {
    command: "appendix-check",
    keys: &[
        ("what", "all"),
        ("mass", "1"),
        ("eps", "0.1"),
        ("eta-list", DEFAULT_ETA_LIST),
        ("delta", "0.5"),
        ("panels", "6"),
        ("nodes-per-panel", "16"),
        ("output", "-"),
    ],
};

pub const REPRODUCE_PAPER: Schema = Schema {
    command: "reproduce-paper",
    keys: &[
        ("output-dir", "reproduce-output"),
        ("eps-list", DEFAULT_EPS_LIST),
        ("mass", "1"),
        ("c-list", "0,0.1,0.2,tsirelson"),
        ("depth-list", DEFAULT_LEVELS),
        ("span-list", DEFAULT_LEVELS),
        ("eta-list", DEFAULT_ETA_LIST),
        ("delta", "0.5"),
        ("schedule-eps", "0.1"),
        ("panels", "6"),
        ("nodes-per-panel", "16"),
    ],
};

/// The merged configuration of one run, in schema key order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: &'static str,
    pub entries: Vec<(&'static str, String)>,
}

fn suggestion(schema: &Schema, unknown: &str) -> Option<&'static str> {
    schema
        .keys
        .iter()
        .map(|&(k, _)| (k, strsim::jaro_winkler(unknown, k)))
        .filter(|&(_, score)| score >= 0.7)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
}

fn unknown_key(schema: &Schema, key: &str, line: Option<usize>) -> CliError {
    let valid: Vec<&str> = schema.keys.iter().map(|&(k, _)| k).collect();
    let at = line.map(|n| format!(" (line {n})")).unwrap_or_default();
    let hint = suggestion(schema, key).map(|k| format!("; did you mean `{k}`?")).unwrap_or_default();
    CliError::Usage(format!(
        "unknown key `{key}`{at} for {}{hint}; valid keys: {}",
        schema.command,
        valid.join(", ")
    ))
}

/// Parses a config file body into `(key, value)` pairs, rejecting unknown
/// and repeated keys.
pub fn parse_file(schema: &Schema, text: &str) -> Result<Vec<(&'static str, String)>, CliError> {
    let mut out: Vec<(&'static str, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {line_no}: expected `key = value`, got `{line}`")));
        };
        let (k, v) = (k.trim(), v.trim());
        let key = schema
            .keys
            .iter()
            .map(|&(name, _)| name)
            .find(|&name| name == k)
            .ok_or_else(|| unknown_key(schema, k, Some(line_no)))?;
        if out.iter().any(|(seen, _)| *seen == key) {
            return Err(CliError::Usage(format!("config line {line_no}: key `{key}` given twice")));
        }
        out.push((key, v.to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, then `file` entries, then `flags`.
    pub fn build(schema: &Schema, file: Option<&str>, flags: &[(&str, String)]) -> Result<Self, CliError> {
        let mut entries: Vec<(&'static str, String)> =
            schema.keys.iter().map(|&(k, d)| (k, d.to_string())).collect();
        let mut set = |key: &str, value: String, line: Option<usize>| -> Result<(), CliError> {
            match entries.iter_mut().find(|(k, _)| *k == key) {
                Some(slot) => {
                    slot.1 = value;
                    Ok(())
                }
                None => Err(unknown_key(schema, key, line)),
            }
        };
        if let Some(text) = file {
            for (k, v) in parse_file(schema, text)? {
                set(k, v, None)?;
            }
        }
        for (k, v) in flags {
            set(k, v.clone(), None)?;
        }
        Ok(Self { command: schema.command, entries })
    }

    pub fn get(&self, key: &str) -> &str {
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
            .unwrap_or_else(|| panic!("key `{key}` is not part of the {} schema", self.command))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        parse_number(key, self.get(key))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let v = self.get(key);
        v.parse().map_err(|_| CliError::Usage(format!("`{key}` expects a nonnegative integer, got `{v}`")))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        split_list(self.get(key)).map(|s| parse_number(key, s)).collect()
    }

    pub fn u32_list(&self, key: &str) -> Result<Vec<u32>, CliError> {
        split_list(self.get(key))
            .map(|s| s.parse().map_err(|_| CliError::Usage(format!("`{key}` expects integers, got `{s}`"))))
            .collect()
    }

    /// `key = value` lines, as written into every CSV header.
    pub fn echo(&self) -> Vec<String> {
        let mut lines = vec![format!("command = {}", self.command)];
        lines.extend(self.entries.iter().map(|(k, v)| format!("{k} = {v}")));
        lines
    }
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// A real number, accepting `tsirelson` for the mixing constant `sqrt 2 - 1`.
pub fn parse_number(key: &str, text: &str) -> Result<f64, CliError> {
    if text.eq_ignore_ascii_case("tsirelson") {
        return Ok(TSIRELSON_C);
    }
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Usage(format!("`{key}` expects a finite number, got `{text}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::build(&BELL_SWEEP, Some(""), &[]).unwrap();
        assert_eq!(c.get("eps-list"), DEFAULT_EPS_LIST);
        assert_eq!(c.f64("c").unwrap(), TSIRELSON_C);
    }

    #[test]
    fn flags_override_file() {
        let file = "# comment\nmass = 2\n\neps-list = 0.1, 0.01\n";
        let c = RunConfig::build(&BELL_SWEEP, Some(file), &[("mass", "3".into())]).unwrap();
        assert_eq!(c.f64("mass").unwrap(), 3.0);
        assert_eq!(c.f64_list("eps-list").unwrap(), vec![0.1, 0.01]);
    }

    #[test]
    fn unknown_key_suggests_closest() {
        let err = RunConfig::build(&REPRODUCE_PAPER, Some("epss = 0.1"), &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("did you mean `eps-list`"), "{msg}");
        assert!(msg.contains("valid keys"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = RunConfig::build(&BELL_SWEEP, Some("mass = 1\nnonsense\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(RunConfig::build(&BELL_SWEEP, Some("mass = 1\nmass = 2"), &[]).is_err());
    }
}
