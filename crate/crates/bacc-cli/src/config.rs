//! Plain `key=value` config files. Precedence: command-line flags override
//! config-file values, which override built-in defaults. Keys use the long
//! flag spelling (`s-max=450`); `#` starts a comment.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use clap::parser::ValueSource;
use clap::ArgMatches;

pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        ConfigFile {
            values: HashMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key=value", lineno + 1))?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    /// Override `field` from the config when the flag was not given on the
    /// command line. `key` is the long flag name as written in the file; `id`
    /// is the clap argument id (the struct field name).
    pub fn merge<T>(&self, matches: &ArgMatches, key: &str, id: &str, field: &mut T) -> Result<()>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if matches.value_source(id) == Some(ValueSource::CommandLine) {
            return Ok(());
        }
        if let Some(raw) = self.values.get(key) {
            *field = raw
                .parse()
                .map_err(|e| anyhow!("config key {key}={raw}: {e}"))?;
        }
        Ok(())
    }

    /// Same for optional fields.
    pub fn merge_opt<T>(
        &self,
        matches: &ArgMatches,
        key: &str,
        id: &str,
        field: &mut Option<T>,
    ) -> Result<()>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if matches.value_source(id) == Some(ValueSource::CommandLine) {
            return Ok(());
        }
        if let Some(raw) = self.values.get(key) {
            *field = Some(
                raw.parse()
                    .map_err(|e| anyhow!("config key {key}={raw}: {e}"))?,
            );
        }
        Ok(())
    }
}
