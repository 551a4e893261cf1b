//! The four subcommands. Each `run` function reads its inputs, writes its
//! files into the output directory and returns a summary; the computational
//! cores are exposed separately so they can be driven without files.

pub mod bounds;
pub mod denoise;
pub mod simulate;
pub mod sweep;

use std::path::{Path, PathBuf};

use stripefree::kernels::sample_kernel;
use stripefree::{Dims, Grid};

use crate::config::{FilterConfig, KernelConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::image_io::{encode, read_image, ImageFormat};
use crate::report::content_hash;

/// Samples every configured filter on `dims`.
pub fn load_filters(filters: &[FilterConfig], dims: Dims) -> CliResult<Vec<Grid<f64>>> {
    filters
        .iter()
        .map(|f| match &f.kernel {
            KernelConfig::File { path } => {
                let psi = read_image(path)?;
                if psi.dims() != dims {
                    return Err(CliError::format(
                        path,
                        format!("kernel is {} but the image is {dims}", psi.dims()),
                    ));
                }
                Ok(psi)
            }
            k => Ok(sample_kernel(&k.spec().expect("parametric kernel"), dims)?),
        })
        .collect()
}

pub(crate) fn require_input(cfg: &RunConfig) -> CliResult<&Path> {
    cfg.input
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("`{}` needs an `input` image", cfg.command)))
}

/// Output directory that remembers the bytes of every image it wrote.
pub(crate) struct OutputDir {
    dir: PathBuf,
    format: Option<ImageFormat>,
    written: Vec<(String, Vec<u8>)>,
}

impl OutputDir {
    pub fn create(cfg: &RunConfig) -> CliResult<Self> {
        std::fs::create_dir_all(&cfg.output).map_err(|e| CliError::io(&cfg.output, e))?;
        Ok(Self {
            dir: cfg.output.clone(),
            format: cfg.output_format,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn image(&mut self, stem: &str, grid: &Grid<f64>) -> CliResult<PathBuf> {
        let format = self.format.unwrap_or_else(|| ImageFormat::default_for(grid.dims()));
        let path = self.dir.join(format!("{stem}.{}", format.extension()));
        let bytes = encode(grid, format).map_err(|m| CliError::format(&path, m))?;
        std::fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push((stem.to_string(), bytes));
        Ok(path)
    }

    /// Hash of every image written so far, in order.
    pub fn hash(&self) -> String {
        content_hash(self.written.iter().map(|(_, b)| b.as_slice()))
    }
}

/// `report` if configured, otherwise `default` inside the output directory.
pub(crate) fn report_path(cfg: &RunConfig, out: &OutputDir, default: &str) -> PathBuf {
    cfg.report.clone().unwrap_or_else(|| out.path(default))
}
