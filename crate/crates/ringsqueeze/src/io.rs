//! Binary dump of propagator blocks with a JSON sidecar.
//!
//! `name.bin` holds V then W, each row-major, every entry as two little-endian
//! f64 (re, im). `name.json` describes the layout.

use crate::error::{Error, Result};
use crate::propagator::{Basis, ModeVectorLayout, Propagator};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    /// Byte offset into the binary file.
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub dtype: String,
    pub byte_order: String,
    pub order: String,
    pub basis: Basis,
    pub t0_ps: f64,
    pub t1_ps: f64,
    pub layout: ModeVectorLayout,
    pub bins: [String; 3],
    pub blocks: Vec<BlockInfo>,
}

pub fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

fn encode(m: &DMatrix<C64>, out: &mut Vec<u8>) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.extend_from_slice(&m[(r, c)].re.to_le_bytes());
            out.extend_from_slice(&m[(r, c)].im.to_le_bytes());
        }
    }
}

fn decode(bytes: &[u8], rows: usize, cols: usize) -> DMatrix<C64> {
    let f = |i: usize| f64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    DMatrix::from_fn(rows, cols, |r, c| {
        let i = 2 * (r * cols + c);
        C64::new(f(i), f(i + 1))
    })
}

pub fn write_vw(path: &Path, prop: &Propagator, layout: &ModeVectorLayout) -> Result<()> {
    let n = prop.v.nrows();
    if n != layout.len() {
        return Err(Error::Io(format!("propagator has {n} rows, layout {}", layout.len())));
    }
    let mut bytes = Vec::with_capacity(32 * n * n);
    encode(&prop.v, &mut bytes);
    encode(&prop.w, &mut bytes);
    let block = 16 * n * n;
    let side = Sidecar {
        format: "ringsqueeze-vw".into(),
        dtype: "complex128".into(),
        byte_order: "little".into(),
        order: "row-major".into(),
        basis: prop.basis,
        t0_ps: prop.t0 * 1e12,
        t1_ps: prop.t1 * 1e12,
        layout: layout.clone(),
        bins: ["LI".into(), "S".into(), "RI".into()],
        blocks: vec![
            BlockInfo { name: "V".into(), offset: 0, rows: n, cols: n },
            BlockInfo { name: "W".into(), offset: block, rows: n, cols: n },
        ],
    };
    std::fs::write(path, bytes)?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_vw(path: &Path) -> Result<(Propagator, Sidecar)> {
    let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    if side.dtype != "complex128" || side.byte_order != "little" || side.order != "row-major" {
        return Err(Error::Io(format!("unsupported encoding {} {} {}", side.dtype, side.byte_order, side.order)));
    }
    let bytes = std::fs::read(path)?;
    let block = |name: &str| -> Result<DMatrix<C64>> {
        let b = side.blocks.iter().find(|b| b.name == name).ok_or_else(|| Error::Io(format!("sidecar lacks block {name}")))?;
        let end = b.offset + 16 * b.rows * b.cols;
        if end > bytes.len() {
            return Err(Error::Io(format!("block {name} runs past the end of {}", path.display())));
        }
        Ok(decode(&bytes[b.offset..end], b.rows, b.cols))
    };
    let prop = Propagator { v: block("V")?, w: block("W")?, basis: side.basis, t0: side.t0_ps * 1e-12, t1: side.t1_ps * 1e-12 };
    Ok((prop, side))
}

/// Named mode subsets of a layout: `signal_out`, `idler_out`, `outputs`, `all`,
/// or `<bin>_all` for every port of one bin.
pub fn subset_rows(layout: &ModeVectorLayout, name: &str) -> Result<Vec<usize>> {
    let bin_all = |j: usize| -> Vec<usize> { (layout.offset(j)..layout.offset(j) + layout.n_k[j] * layout.n_ports).collect() };
    Ok(match name {
        "signal_out" => layout.output_rows(1),
        "idler_out" => [layout.output_rows(0), layout.output_rows(2)].concat(),
        "outputs" => (0..3).flat_map(|j| layout.output_rows(j)).collect(),
        "all" => (0..layout.len()).collect(),
        "li_all" => bin_all(0),
        "signal_all" => bin_all(1),
        "ri_all" => bin_all(2),
        _ => return Err(Error::InvalidConfig { field: "subset".into(), reason: format!("unknown subset {name}") }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let layout = ModeVectorLayout { n_k: [2, 3, 2], n_ports: 2 };
        let n = layout.len();
        let v = DMatrix::from_fn(n, n, |r, c| C64::new(r as f64 + 0.1 * c as f64, -(c as f64) / 3.0));
        let w = DMatrix::from_fn(n, n, |r, c| C64::new((r * c) as f64 * 1e-7, std::f64::consts::PI * r as f64));
        let prop = Propagator { v, w, basis: Basis::Out, t0: 0.0, t1: 2.5e-9 };
        let dir = std::env::temp_dir().join(format!("rsq-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("VW.bin");
        write_vw(&path, &prop, &layout).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, 32 * n * n);
        let (back, side) = read_vw(&path).unwrap();
        assert_eq!(back.v, prop.v);
        assert_eq!(back.w, prop.w);
        assert_eq!(side.layout, layout);
        assert_eq!(back.basis, Basis::Out);
        // first entry of W sits right after V
        let bytes = std::fs::read(&path).unwrap();
        let off = side.blocks[1].offset + 16 * (1 * n + 2);
        assert_eq!(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()), prop.w[(1, 2)].re);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn subsets() {
        let layout = ModeVectorLayout { n_k: [2, 3, 2], n_ports: 2 };
        assert_eq!(subset_rows(&layout, "signal_out").unwrap(), vec![4, 6, 8]);
        assert_eq!(subset_rows(&layout, "idler_out").unwrap(), vec![0, 2, 10, 12]);
        assert_eq!(subset_rows(&layout, "signal_all").unwrap(), (4..10).collect::<Vec<_>>());
        assert!(subset_rows(&layout, "pump").is_err());
    }
}
