//! CSV rows and the `CUM1` binary grid dump.
//!
//! Dump layout, all little-endian: magic `CUM1`; `u32` geometry (0 for the
//! line, otherwise the radial dimension); `u32` boundary (0 Dirichlet,
//! 1 Neumann); `f64` half-width; `u64` node count; `u64` frame count;
//! the frame times; then the values frame by frame.

use std::io::{Read, Write};

use super::grid::{Boundary, Geometry, SpaceGrid};
use super::solver::CumulantSolution;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CUM1";

/// Writes `t,x,u` rows with a header.
pub fn write_csv<W: Write>(solution: &CumulantSolution, out: &mut W) -> Result<()> {
    writeln!(out, "t,x,u")?;
    let xs = solution.grid.coordinates();
    for (t, frame) in solution.times.iter().zip(&solution.values) {
        for (x, u) in xs.iter().zip(frame) {
            writeln!(out, "{t},{x},{u}")?;
        }
    }
    Ok(())
}

pub fn write_dump<W: Write>(solution: &CumulantSolution, out: &mut W) -> Result<()> {
    let g = &solution.grid;
    out.write_all(MAGIC)?;
    let geometry = match g.geometry {
        Geometry::Line => 0u32,
        Geometry::Radial { dim } => dim as u32,
    };
    let boundary = match g.boundary {
        Boundary::DirichletZero => 0u32,
        Boundary::NeumannZero => 1u32,
    };
    out.write_all(&geometry.to_le_bytes())?;
    out.write_all(&boundary.to_le_bytes())?;
    out.write_all(&g.half_width.to_le_bytes())?;
    out.write_all(&(g.nodes as u64).to_le_bytes())?;
    out.write_all(&(solution.times.len() as u64).to_le_bytes())?;
    for t in &solution.times {
        out.write_all(&t.to_le_bytes())?;
    }
    for frame in &solution.values {
        for v in frame {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// A decoded dump: the grid, frame times and values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDump {
    pub grid: SpaceGrid,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

pub fn read_dump<R: Read>(input: &mut R) -> Result<GridDump> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::MalformedDump("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b4)?;
    let geometry = match u32::from_le_bytes(b4) {
        0 => Geometry::Line,
        d => Geometry::Radial { dim: d as usize },
    };
    input.read_exact(&mut b4)?;
    let boundary = match u32::from_le_bytes(b4) {
        0 => Boundary::DirichletZero,
        1 => Boundary::NeumannZero,
        other => return Err(Error::MalformedDump(format!("unknown boundary code {other}"))),
    };
    input.read_exact(&mut b8)?;
    let half_width = f64::from_le_bytes(b8);
    input.read_exact(&mut b8)?;
    let nodes = u64::from_le_bytes(b8) as usize;
    input.read_exact(&mut b8)?;
    let frames = u64::from_le_bytes(b8) as usize;
    let grid = SpaceGrid::new(geometry, half_width, nodes, boundary)
        .map_err(|e| Error::MalformedDump(e.to_string()))?;
    let mut read_f64 = |input: &mut R| -> Result<f64> {
        input.read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    let times = (0..frames).map(|_| read_f64(input)).collect::<Result<Vec<_>>>()?;
    let values = (0..frames)
        .map(|_| (0..nodes).map(|_| read_f64(input)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(GridDump { grid, times, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solution() -> CumulantSolution {
        let grid = SpaceGrid::new(Geometry::Radial { dim: 2 }, 1.0, 64, Boundary::NeumannZero).unwrap();
        CumulantSolution {
            times: vec![0.0, 0.5],
            values: vec![(0..64).map(|j| j as f64).collect(), vec![0.25; 64]],
            grid,
            dt_pde: 0.5,
            reaction_step: 0.5,
            clipped: 0,
            updates: 64,
        }
    }

    #[test]
    fn dump_round_trip() {
        let s = solution();
        let mut buf = Vec::new();
        write_dump(&s, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"CUM1");
        assert_eq!(buf.len(), 4 + 4 + 4 + 8 + 8 + 8 + 2 * 8 + 2 * 64 * 8);
        let d = read_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(d.grid, s.grid);
        assert_eq!(d.times, s.times);
        assert_eq!(d.values, s.values);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let s = solution();
        let mut buf = Vec::new();
        write_dump(&s, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_dump(&mut bad.as_slice()), Err(Error::MalformedDump(_))));
        buf.truncate(buf.len() - 3);
        assert!(read_dump(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        write_csv(&solution(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("t,x,u"));
        assert_eq!(text.lines().count(), 1 + 2 * 64);
    }
}
