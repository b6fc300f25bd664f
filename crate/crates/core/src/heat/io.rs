//! Flat binary field files: a 64-byte header (magic, N, M, L) followed by
//! little-endian `f64` values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Field, Grid};
use crate::error::{Error, Result};

pub const FIELD_MAGIC: [u8; 8] = *b"HHFIELD1";
const HEADER_LEN: usize = 64;

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let g = field.grid();
    let mut header = [0u8; HEADER_LEN];
    header[..8].copy_from_slice(&FIELD_MAGIC);
    header[8..16].copy_from_slice(&(g.dimension() as u64).to_le_bytes());
    header[16..24].copy_from_slice(&(g.points_per_axis() as u64).to_le_bytes());
    header[24..32].copy_from_slice(&g.half_width().to_le_bytes());
    out.write_all(&header)?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field> {
    let mut input = BufReader::new(File::open(path)?);
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if header[..8] != FIELD_MAGIC {
        return Err(Error::Domain(format!("{}: not a field file", path.display())));
    }
    let word = |i: usize| <[u8; 8]>::try_from(&header[i..i + 8]).unwrap();
    let n = u64::from_le_bytes(word(8)) as usize;
    let m = u64::from_le_bytes(word(16)) as usize;
    let l = f64::from_le_bytes(word(24));
    let grid = Grid::with_budget(n, l, m, usize::MAX)?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Alignment(format!(
            "{}: expected {} values, found {} bytes",
            path.display(),
            grid.len(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Field::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join(format!("hhfield-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.bin");
        let g = Grid::new(2, 1.5, 8).unwrap();
        let f = Field::from_fn(g, |x| x[0] - 3.0 * x[1] + 0.125);
        write_field(&path, &f).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 64 + 8 * 64);
        assert_eq!(read_field(&path).unwrap(), f);
        std::fs::write(&path, [0u8; 80]).unwrap();
        assert!(read_field(&path).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
