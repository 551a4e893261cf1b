#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use stripefree::Grid;
use stripefree_cli::image_io::read_image;
use tempfile::TempDir;

pub const BIN: &str = env!("CARGO_BIN_EXE_stripefree");

pub struct Workspace {
    pub dir: TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        Self {
            dir: tempfile::tempdir().expect("temporary directory"),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    /// Runs the binary and returns its exit code and stderr.
    pub fn run(&self, command: &str, config: &str, extra: &[&str]) -> (i32, String) {
        let out = Command::new(BIN)
            .arg(command)
            .arg("--config")
            .arg(self.path(config))
            .args(extra)
            .output()
            .expect("binary runs");
        (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
    }

    pub fn ok(&self, command: &str, config: &str, extra: &[&str]) {
        let (code, err) = self.run(command, config, extra);
        assert_eq!(code, 0, "{command} failed: {err}");
    }

    pub fn image(&self, name: &str) -> Grid<f64> {
        read_image(&self.path(name)).unwrap()
    }

    pub fn json(&self, name: &str) -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }

    pub fn csv(&self, name: &str) -> (Vec<String>, Vec<Vec<String>>) {
        read_csv(&self.path(name))
    }
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

pub fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

pub fn rel(a: &Grid<f64>, b: &Grid<f64>) -> f64 {
    a.sub(b).unwrap().norm2() / b.norm2().max(f64::MIN_POSITIVE)
}

/// 64² horizontally striped benchmark: the shapes phantom without texture and
/// Bernoulli–uniform noise through a Gaussian elongated along axis 0.
pub const STRIPE_SIM: &str = "\
dims = 64x64
seed = 3
texture = 0
marginal = bernoulli_uniform
gamma = 1
noise_fraction = 0.5
output = sim

[filter]
kernel = gaussian
sigmas = 1000, 0.3
";

pub const STRIPE_KERNEL: &str = "kernel = gaussian\nsigmas = 1000, 0.3\n";
