//! Matrix files: plain CSV (one matrix row per line, no header) and the
//! little-endian binary `DMAT` layout (magic, u32 rows, u32 cols, column-major
//! f64 payload).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::dense::DenseMatrix;
use crate::{Error, Result};

pub const DMAT_MAGIC: &[u8; 4] = b"DMAT";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Dmat,
}

impl MatrixFormat {
    /// `.csv` (any case) selects CSV, everything else DMAT.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Dmat,
        }
    }
}

pub fn read_matrix(path: &Path, format: Option<MatrixFormat>) -> Result<DenseMatrix<f64>> {
    let reader = BufReader::new(File::open(path)?);
    match format.unwrap_or_else(|| MatrixFormat::from_path(path)) {
        MatrixFormat::Csv => read_csv(reader),
        MatrixFormat::Dmat => read_dmat(reader),
    }
}

pub fn write_matrix(path: &Path, m: &DenseMatrix<f64>, format: Option<MatrixFormat>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format.unwrap_or_else(|| MatrixFormat::from_path(path)) {
        MatrixFormat::Csv => write_csv(&mut w, m)?,
        MatrixFormat::Dmat => write_dmat(&mut w, m)?,
    }
    w.flush()?;
    Ok(())
}

/// Parses one comma-separated row per non-empty line.
pub fn read_csv<R: BufRead>(reader: R) -> Result<DenseMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map_err(|e| {
                    Error::format("CSV", format!("line {}: {field:?}: {e}", lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    "CSV",
                    format!("line {}: {} fields, expected {}", lineno + 1, row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format("CSV", "no rows"));
    }
    DenseMatrix::from_rows(&rows)
}

/// Writes values with Rust's shortest round-trip formatting, so reading the
/// file back reproduces every bit.
pub fn write_csv<W: Write>(w: &mut W, m: &DenseMatrix<f64>) -> Result<()> {
    for i in 0..m.rows() {
        let mut line = String::new();
        for j in 0..m.cols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&m[(i, j)].to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn read_dmat<R: Read>(mut r: R) -> Result<DenseMatrix<f64>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DMAT_MAGIC {
        return Err(Error::format("DMAT", format!("bad magic {magic:?}")));
    }
    let rows = read_u32(&mut r)? as usize;
    let cols = read_u32(&mut r)? as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(read_f64(&mut r)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::format("DMAT", "trailing bytes after payload"));
    }
    DenseMatrix::from_col_major(rows, cols, data)
}

pub fn write_dmat<W: Write>(w: &mut W, m: &DenseMatrix<f64>) -> Result<()> {
    w.write_all(DMAT_MAGIC)?;
    w.write_all(&u32_len(m.rows())?.to_le_bytes())?;
    w.write_all(&u32_len(m.cols())?.to_le_bytes())?;
    for x in m.as_slice() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub(crate) fn u32_len(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::invalid(format!("dimension {n} does not fit in u32")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::haar_orthogonal;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let u: DenseMatrix<f64> = haar_orthogonal(7, 3);
        let mut buf = Vec::new();
        write_csv(&mut buf, &u).unwrap();
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn csv_layout() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.5], [-3.0, 0.0]]).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &m).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,2.5\n-3,0\n");
    }

    #[test]
    fn csv_rejects_ragged_and_garbage() {
        assert!(read_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_csv("1,x\n".as_bytes()).is_err());
        assert!(read_csv("".as_bytes()).is_err());
        assert!(read_csv("1,nan\n".as_bytes()).is_err());
    }

    #[test]
    fn dmat_header_and_round_trip() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let mut buf = Vec::new();
        write_dmat(&mut buf, &m).unwrap();
        assert_eq!(&buf[..4], b"DMAT");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[8..12], &3u32.to_le_bytes());
        // column-major: first payload value is (0,0), second is (1,0)
        assert_eq!(&buf[20..28], &4.0f64.to_le_bytes());
        assert_eq!(buf.len(), 12 + 6 * 8);
        assert_eq!(read_dmat(&buf[..]).unwrap(), m);
    }

    #[test]
    fn dmat_rejects_truncation_and_bad_magic() {
        let m: DenseMatrix<f64> = DenseMatrix::identity(3);
        let mut buf = Vec::new();
        write_dmat(&mut buf, &m).unwrap();
        assert!(read_dmat(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_dmat(&bad[..]).is_err());
        buf.push(0);
        assert!(read_dmat(&buf[..]).is_err());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(MatrixFormat::from_path(Path::new("a/b.CSV")), MatrixFormat::Csv);
        assert_eq!(MatrixFormat::from_path(Path::new("u.dmat")), MatrixFormat::Dmat);
        assert_eq!(MatrixFormat::from_path(Path::new("u")), MatrixFormat::Dmat);
    }
}
