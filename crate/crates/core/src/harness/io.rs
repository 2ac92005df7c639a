//! Point clouds and trajectory dumps on disk.
//!
//! Trajectory CSV rows are `t, particle, x0, …, x{d-1}`. The binary layout
//! is little-endian throughout:
//!
//! ```text
//! magic   8 bytes  "CNTRAJ\0\0"
//! version u32      1
//! dim     u32
//! rows    u64      snapshots × particles
//! data    rows × (2 + dim) f64: t, particle, x0, …, x{d-1}
//! ```

use super::config::DumpFormat;
use crate::cloud::PointCloud;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::transport::MeasurePath;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const TRAJECTORY_MAGIC: [u8; 8] = *b"CNTRAJ\0\0";
pub const TRAJECTORY_VERSION: u32 = 1;

/// Read a point cloud: one point per row, comma separated. A first row
/// that does not parse as numbers is taken as a header.
pub fn read_cloud_csv(reader: impl Read) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::invalid(format!("row {}: {e}", line + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Error::invalid("point cloud file has no rows"));
    }
    PointCloud::from_rows(&rows)
}

pub fn read_cloud_file(path: &Path) -> Result<PointCloud> {
    read_cloud_csv(std::fs::File::open(path)?)
}

pub fn write_cloud_csv(cloud: &PointCloud, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record((0..cloud.dim()).map(|k| format!("x{k}")))?;
    for row in cloud.rows() {
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "particle".to_string()];
    h.extend((0..dim).map(|k| format!("x{k}")));
    h
}

fn write_snapshots_csv<'a>(
    dim: usize,
    snaps: impl Iterator<Item = (f64, &'a PointCloud)>,
    w: impl Write,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(dim))?;
    for (t, cloud) in snaps {
        for (i, row) in cloud.rows().enumerate() {
            let mut rec = vec![t.to_string(), i.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_trajectory_csv(traj: &Trajectory, w: impl Write) -> Result<()> {
    let dim = traj.snapshots.first().map_or(0, |c| c.dim());
    write_snapshots_csv(dim, traj.times.iter().copied().zip(&traj.snapshots), w)
}

/// Measure path atoms in the trajectory CSV layout (weights are uniform
/// along every path this crate produces).
pub fn write_measure_path_csv(path: &MeasurePath, w: impl Write) -> Result<()> {
    let dim = path.measures().first().map_or(0, |m| m.dim());
    write_snapshots_csv(dim, path.times().iter().copied().zip(path.measures().iter().map(|m| m.points())), w)
}

pub fn write_trajectory_binary(traj: &Trajectory, mut w: impl Write) -> Result<()> {
    let dim = traj.snapshots.first().map_or(0, |c| c.dim());
    let rows: u64 = traj.snapshots.iter().map(|c| c.len() as u64).sum();
    w.write_all(&TRAJECTORY_MAGIC)?;
    w.write_all(&TRAJECTORY_VERSION.to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&rows.to_le_bytes())?;
    let mut buf = Vec::with_capacity((2 + dim) * 8);
    for (t, cloud) in traj.times.iter().zip(&traj.snapshots) {
        for (i, row) in cloud.rows().enumerate() {
            buf.clear();
            buf.extend_from_slice(&t.to_le_bytes());
            buf.extend_from_slice(&(i as f64).to_le_bytes());
            for v in row {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Decoded binary dump: `(dim, rows)` with rows `t, particle, x…`.
pub fn read_trajectory_binary(mut r: impl Read) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != TRAJECTORY_MAGIC {
        return Err(Error::invalid("not a trajectory dump (bad magic)"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != TRAJECTORY_VERSION {
        return Err(Error::invalid(format!("unsupported trajectory dump version {version}")));
    }
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let rows = u64::from_le_bytes(b8) as usize;
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut row = Vec::with_capacity(2 + dim);
        for _ in 0..2 + dim {
            r.read_exact(&mut b8)?;
            row.push(f64::from_le_bytes(b8));
        }
        out.push(row);
    }
    Ok((dim, out))
}

/// Write `traj` as `<dir>/<name>.csv` or `<dir>/<name>.bin`; `None` for
/// [`DumpFormat::None`].
pub fn dump_trajectory(traj: &Trajectory, dir: &Path, name: &str, format: DumpFormat) -> Result<Option<PathBuf>> {
    let path = match format {
        DumpFormat::None => return Ok(None),
        DumpFormat::Csv => dir.join(format!("{name}.csv")),
        DumpFormat::Binary => dir.join(format!("{name}.bin")),
    };
    let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    match format {
        DumpFormat::Csv => write_trajectory_csv(traj, file)?,
        DumpFormat::Binary => write_trajectory_binary(traj, file)?,
        DumpFormat::None => unreachable!(),
    }
    Ok(Some(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::NoiseMode;

    fn tiny() -> Trajectory {
        Trajectory {
            times: vec![0.0, 0.5],
            steps: vec![0, 1],
            snapshots: vec![
                PointCloud::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
                PointCloud::new(2, vec![1.5, 2.5, -3.0, 0.25]).unwrap(),
            ],
            noise_mode: NoiseMode::Common,
            dt: 0.5,
        }
    }

    #[test]
    fn binary_round_trip() {
        let mut buf = Vec::new();
        write_trajectory_binary(&tiny(), &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 8 + 4 * 4 * 8);
        let (dim, rows) = read_trajectory_binary(&buf[..]).unwrap();
        assert_eq!(dim, 2);
        assert_eq!(rows[3], vec![0.5, 1.0, -3.0, 0.25]);
        buf[0] = b'X';
        assert!(read_trajectory_binary(&buf[..]).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_trajectory_csv(&tiny(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,particle,x0,x1");
        assert_eq!(lines[4], "0.5,1,-3,0.25");
    }

    #[test]
    fn cloud_round_trip_and_header_detection() {
        let c = PointCloud::new(3, vec![0.1, -2.0, 3.5, 1e-300, 7.0, -0.0]).unwrap();
        let mut buf = Vec::new();
        write_cloud_csv(&c, &mut buf).unwrap();
        assert_eq!(read_cloud_csv(&buf[..]).unwrap(), c);
        let bare = read_cloud_csv("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(bare.len(), 2);
        assert!(read_cloud_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_cloud_csv("1,2\nx,4\n".as_bytes()).is_err());
    }
}
