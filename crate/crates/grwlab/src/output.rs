//! Report files: pretty JSON, CSV with 17 significant digits, OFF meshes.
//! Every file is written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use grwlab_core::fiber::{Backend, FiberMesh};
use grwlab_core::WarpSpec;
use serde::Serialize;

use crate::error::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    file.write_all(bytes).map_err(io_err(&tmp))?;
    file.sync_all().map_err(io_err(&tmp))?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Shortest scientific rendering with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// A CSV table held in memory until it is written.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).map_err(|e| CliError::Serialize(e.to_string()))?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::Serialize(e.to_string()))
    }

    pub fn write(self, path: &Path) -> Result<(), CliError> {
        let bytes = self.writer.into_inner().map_err(|e| CliError::Serialize(e.to_string()))?;
        write_atomic(path, &bytes)
    }
}

/// The graph as a triangle mesh: `(x, y, u)` over grids, and the fiber
/// sphere scaled by `f(u)` (the warped radius) on the sphere.
pub fn off_mesh(mesh: &FiberMesh, warp: &WarpSpec, u: &[f64]) -> Option<String> {
    let (points, faces): (Vec<[f64; 3]>, Vec<[usize; 3]>) = match mesh.backend() {
        Backend::Circle => return None,
        Backend::Torus => {
            let g = mesh.grid()?;
            let (nx, ny) = (g.counts[0], g.counts[1]);
            // Duplicate the seam so the surface is an open sheet over the fundamental domain.
            let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
            for j in 0..=ny {
                for i in 0..=nx {
                    let v = (j % ny) * nx + (i % nx);
                    pts.push([i as f64 * g.spacing(0), j as f64 * g.spacing(1), u[v]]);
                }
            }
            let id = |i: usize, j: usize| j * (nx + 1) + i;
            let mut faces = Vec::with_capacity(2 * nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                    faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
            (pts, faces)
        }
        Backend::Sphere => {
            let pts = mesh
                .positions()
                .iter()
                .zip(u)
                .map(|(p, &t)| {
                    let r = warp.derivs_unchecked(t).0;
                    [r * p[0], r * p[1], r * p[2]]
                })
                .collect();
            (pts, mesh.triangles().to_vec())
        }
    };
    let mut s = format!("OFF\n{} {} 0\n", points.len(), faces.len());
    for p in &points {
        s.push_str(&format!("{} {} {}\n", fmt17(p[0]), fmt17(p[1]), fmt17(p[2])));
    }
    for f in &faces {
        s.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt17(f64::NAN), "NaN");
        assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn csv_uses_lf() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let mut t = Table::new(&["a", "b"]).unwrap();
        t.row([fmt17(1.5), "x".to_string()]).unwrap();
        t.write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\n1.5000000000000000e0,x\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn off_counts() {
        let mesh = FiberMesh::torus([8, 8], [1.0, 1.0]).unwrap();
        let warp = WarpSpec::cosh();
        let off = off_mesh(&mesh, &warp, &vec![0.0; 64]).unwrap();
        assert!(off.starts_with("OFF\n81 128 0\n"));
        let s = FiberMesh::sphere(1).unwrap();
        let off = off_mesh(&s, &warp, &vec![0.0; s.vertex_count()]).unwrap();
        assert!(off.starts_with("OFF\n42 80 0\n"));
        assert!(off_mesh(&FiberMesh::circle(8, 1.0).unwrap(), &warp, &[0.0; 8]).is_none());
    }
}
