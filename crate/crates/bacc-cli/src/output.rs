//! Output plumbing: atomic CSV writes, round-trip-safe float formatting,
//! run manifests, and companion gnuplot scripts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};

/// 17 significant digits; parses back to the same f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a file atomically: temp file in the target directory, rename on
/// success. A failed command leaves no partial output behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        Ok(())
    })();
    match result {
        Ok(()) => {
            fs::rename(&tmp, path)
                .with_context(|| format!("renaming into place: {}", path.display()))?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

pub fn write_atomic_bytes(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("bin.tmp");
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        Ok(())
    })();
    match result {
        Ok(()) => Ok(fs::rename(&tmp, path)?),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// Records one command run; written next to the primary output. Every CSV a
/// command emits is listed in exactly one manifest.
pub struct ManifestBuilder {
    command: &'static str,
    config: serde_json::Value,
    master_seed: Option<u64>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &'static str, config: serde_json::Value, master_seed: Option<u64>) -> Self {
        ManifestBuilder {
            command,
            config,
            master_seed,
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Write `<primary>.manifest.json`.
    pub fn write(self, primary: &Path) -> Result<PathBuf> {
        let path = manifest_path(primary);
        let doc = serde_json::json!({
            "command": self.command,
            "config": self.config,
            "master_seed": self.master_seed,
            "library_version": env!("CARGO_PKG_VERSION"),
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "wall_time_secs": self.started.elapsed().as_secs_f64(),
        });
        write_atomic(&path, &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
        Ok(path)
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    name.push_str(".manifest.json");
    primary.with_file_name(name)
}

pub fn plot_path(csv: &Path) -> PathBuf {
    csv.with_extension("plt")
}

/// Companion gnuplot script for an error-sweep CSV
/// (`s,mean_rel_err,min_rel_err,max_rel_err,...`).
pub fn sweep_plot_script(csv: &Path) -> String {
    let name = csv
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!(
        "# gnuplot script; run from the directory containing {name}\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale y\n\
         set xlabel 'stragglers s'\n\
         set ylabel 'relative error'\n\
         plot '{name}' using 1:2 with linespoints title 'mean', \\\n     '' using 1:3 with lines title 'min', \\\n     '' using 1:4 with lines title 'max'\n"
    )
}

/// Companion script for the paired node-family CSV (rows alternate
/// chebyshev/equidistant per `s`).
pub fn compare_plot_script(csv: &Path) -> String {
    let name = csv
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!(
        "# gnuplot script; run from the directory containing {name}\n\
         set datafile separator ','\n\
         set logscale y\n\
         set xlabel 'stragglers s'\n\
         set ylabel 'mean relative error'\n\
         plot '{name}' every 2::0 using 1:2 with linespoints title 'chebyshev', \\\n     '' every 2::1 using 1:2 with linespoints title 'equidistant'\n"
    )
}

/// Companion script for a function/curve CSV (`x,...`).
pub fn xy_plot_script(csv: &Path, ycol: usize, ylabel: &str, logy: bool) -> String {
    let name = csv
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!(
        "# gnuplot script; run from the directory containing {name}\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         {}set xlabel 'x'\n\
         set ylabel '{ylabel}'\n\
         plot '{name}' using 1:{ycol} with lines\n",
        if logy { "set logscale y\n" } else { "" }
    )
}
