//! Plain-text exports: CSV tables with header rows, JSON reports, atomic writes.

use crate::error::{Error, Result};
use crate::spectral::SpectralMeasure;
use crate::weyl::MTrace;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let io_err = |e: std::io::Error| Error::Invalid(format!("{}: {e}", path.display()));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(bytes).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

pub fn mtrace_csv(trace: &MTrace) -> String {
    let mut s = String::from("re_z,im_z,re_M,im_M\n");
    for (z, m) in &trace.samples {
        s.push_str(&format!("{},{},{},{}\n", z.re, z.im, m.re, m.im));
    }
    s
}

/// Eigenvalue table `j,mu,nu`; `j` starts at 1 and a missing entry is left empty.
pub fn eigen_csv(mu: &[f64], nu: &[f64]) -> String {
    let mut s = String::from("j,mu,nu\n");
    let cell = |v: Option<&f64>| v.map_or(String::new(), |v| v.to_string());
    for j in 0..mu.len().max(nu.len()) {
        s.push_str(&format!("{},{},{}\n", j + 1, cell(mu.get(j)), cell(nu.get(j))));
    }
    s
}

pub fn measure_csv(m: &SpectralMeasure) -> String {
    let mut s = String::from("lambda,density\n");
    for (x, d) in m.grid.iter().zip(&m.density) {
        s.push_str(&format!("{x},{d}\n"));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub lambda: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomList {
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub flagged: Vec<f64>,
}

pub fn measure_atoms_json(m: &SpectralMeasure) -> Result<String> {
    to_json(&AtomList {
        atoms: m.atoms.iter().map(|&(lambda, mass)| Atom { lambda, mass }).collect(),
        flagged: m.flagged.clone(),
    })
}

/// Rebuilds a measure from its CSV density table and JSON atom list.
pub fn read_measure(csv_text: &str, atoms_json: Option<&str>) -> Result<SpectralMeasure> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "lambda" || &headers[1] != "density" {
        return Err(Error::Parse("measure table needs header 'lambda,density'".into()));
    }
    let mut grid = Vec::new();
    let mut density = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}'")));
        grid.push(num(&rec[0])?);
        density.push(num(&rec[1])?);
    }
    let list = match atoms_json {
        Some(s) => serde_json::from_str::<AtomList>(s).map_err(|e| Error::Parse(e.to_string()))?,
        None => AtomList {
            atoms: Vec::new(),
            flagged: Vec::new(),
        },
    };
    let mut m = SpectralMeasure::new(grid, density, list.atoms.iter().map(|a| (a.lambda, a.mass)).collect())?;
    m.flagged = list.flagged;
    Ok(m)
}

/// Pretty JSON with a trailing newline; non-finite floats become `null`.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn measure_round_trip() {
        let mut m = SpectralMeasure::from_density(vec![0.0, 0.5, 1.25, 3.0], |x| x.sqrt() / 3.0).unwrap();
        m.atoms = vec![(-1.0, 8.0), (-0.1, 1.0 / 3.0)];
        m.flagged = vec![0.0];
        let back = read_measure(&measure_csv(&m), Some(&measure_atoms_json(&m).unwrap())).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn headers_present() {
        let t = MTrace {
            samples: vec![(Complex64::new(-4.0, 0.0), Complex64::new(-2.0, 0.0))],
            convention: String::new(),
        };
        assert_eq!(mtrace_csv(&t), "re_z,im_z,re_M,im_M\n-4,0,-2,0\n");
        assert_eq!(eigen_csv(&[1.0, 2.0], &[0.5]), "j,mu,nu\n1,1,0.5\n2,2,\n");
        assert!(read_measure("x,q\n1,2\n", None).is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("swm-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("out.csv");
        write_atomic(&p, b"a\n").unwrap();
        write_atomic(&p, b"b\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "b\n");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
