//! Curve CSVs and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use dpsbound_core::{CurvePoint, FrontierKind};

use crate::CliError;

pub const POINT_COLUMNS: &str = "m_min,q,gain,qber,dc_rate,distance_km";

/// Twelve significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn row(out: &mut String, p: &CurvePoint) {
    let dist = p.distance_km.map(num).unwrap_or_default();
    let _ = write!(
        out,
        "{},{},{},{},{},{}",
        p.m_min,
        num(p.q),
        num(p.gain),
        num(p.qber),
        num(p.dc_rate),
        dist
    );
}

pub fn points_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(POINT_COLUMNS);
    out.push('\n');
    for p in points {
        row(&mut out, p);
        out.push('\n');
    }
    out
}

pub fn frontier_csv(frontiers: &[(FrontierKind, &[CurvePoint])]) -> String {
    let mut out = format!("{POINT_COLUMNS},frontier_kind\n");
    for (kind, points) in frontiers {
        for p in points.iter() {
            row(&mut out, p);
            out.push(',');
            out.push_str(kind.as_str());
            out.push('\n');
        }
    }
    out
}

/// Writes through a temporary file in the same directory and renames it into
/// place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(contents).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

#[derive(Debug, Default)]
pub struct Written(pub Vec<PathBuf>);

impl Written {
    pub fn write(&mut self, dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
        let path = dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        log::info!("wrote {}", path.display());
        self.0.push(path);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(q: f64, d: Option<f64>) -> CurvePoint {
        CurvePoint {
            m_min: 3,
            q,
            gain: 1.0 / 3.0,
            qber: 0.05,
            dc_rate: 0.0,
            distance_km: d,
        }
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(num(0.0), "0.00000000000e0");
    }

    #[test]
    fn csv_layout() {
        let csv = points_csv(&[pt(0.5, None), pt(1.0, Some(12.5))]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], POINT_COLUMNS);
        assert!(lines[1].ends_with(','));
        assert!(lines[2].ends_with("1.25000000000e1"));
        let pts = [pt(0.5, None)];
        let f = frontier_csv(&[(FrontierKind::MinQber, &pts), (FrontierKind::MinDc, &pts)]);
        assert!(f.starts_with("m_min,q,gain,qber,dc_rate,distance_km,frontier_kind\n"));
        assert!(f.lines().nth(2).unwrap().ends_with(",min_dc"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("dpsbound-out-{}", std::process::id()));
        let path = dir.join("a.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(dir).unwrap();
    }
}
