//! Field files.
//!
//! Binary layout (all little-endian): `u32 d`, `d x u32` points per axis,
//! `u32 m` components, then `m x prod(N)` `f64` samples, component-major,
//! each component in grid order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Field, NonlocalError, PeriodicGrid};

pub fn encode_binary(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(8 + 4 * grid.dim() + 8 * grid.len() * field.num_components());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for &n in grid.dims() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&(field.num_components() as u32).to_le_bytes());
    for c in field.components() {
        for x in c {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<Field, NonlocalError> {
    let mut pos = 0;
    let u32_at = |pos: &mut usize| -> Result<usize, NonlocalError> {
        let b = bytes.get(*pos..*pos + 4).ok_or_else(|| NonlocalError::Io("truncated header".into()))?;
        *pos += 4;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    };
    let d = u32_at(&mut pos)?;
    if !(1..=3).contains(&d) {
        return Err(NonlocalError::Io(format!("bad dimension {d}")));
    }
    let dims = (0..d).map(|_| u32_at(&mut pos)).collect::<Result<Vec<_>, _>>()?;
    let m = u32_at(&mut pos)?;
    let grid = PeriodicGrid::new(&dims)?;
    let need = pos + 8 * m * grid.len();
    if bytes.len() != need {
        return Err(NonlocalError::Io(format!("expected {need} bytes, found {}", bytes.len())));
    }
    let comps = (0..m)
        .map(|_| {
            (0..grid.len())
                .map(|_| {
                    let v = f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
                    pos += 8;
                    v
                })
                .collect()
        })
        .collect();
    Field::new(grid, comps)
}

pub fn write_binary(field: &Field, path: &Path) -> Result<(), NonlocalError> {
    fs::write(path, encode_binary(field)).map_err(|e| NonlocalError::Io(format!("{}: {e}", path.display())))
}

pub fn read_binary(path: &Path) -> Result<Field, NonlocalError> {
    let bytes = fs::read(path).map_err(|e| NonlocalError::Io(format!("{}: {e}", path.display())))?;
    decode_binary(&bytes)
}

/// One row per point: coordinates `x1..xd`, then components `c1..cm`.
pub fn encode_csv(field: &Field) -> String {
    let grid = field.grid();
    let mut out = String::new();
    let head: Vec<String> = (1..=grid.dim())
        .map(|a| format!("x{a}"))
        .chain((1..=field.num_components()).map(|c| format!("c{c}")))
        .collect();
    out.push_str(&head.join(","));
    out.push('\n');
    for k in 0..grid.len() {
        let row: Vec<String> = grid
            .point(k)
            .iter()
            .copied()
            .chain(field.components().iter().map(|c| c[k]))
            .map(|v| format!("{v:e}"))
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn decode_csv(text: &str, grid: &PeriodicGrid) -> Result<Field, NonlocalError> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| NonlocalError::Io("empty csv".into()))?;
    let cols = head.split(',').count();
    if cols <= grid.dim() {
        return Err(NonlocalError::Io("csv has no component columns".into()));
    }
    let m = cols - grid.dim();
    let mut comps = vec![Vec::with_capacity(grid.len()); m];
    for (row, line) in lines.enumerate() {
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| NonlocalError::Io(format!("row {}: {e}", row + 2)))?;
        if vals.len() != cols {
            return Err(NonlocalError::Io(format!("row {} has {} columns, expected {cols}", row + 2, vals.len())));
        }
        for (c, v) in comps.iter_mut().zip(&vals[grid.dim()..]) {
            c.push(*v);
        }
    }
    Field::new(grid.clone(), comps)
}

pub fn write_csv(field: &Field, path: &Path) -> Result<(), NonlocalError> {
    fs::write(path, encode_csv(field)).map_err(|e| NonlocalError::Io(format!("{}: {e}", path.display())))
}
