//! `EGT1` files: a little-endian binary layout for `GivensProduct<f64>` and a
//! JSON mirror with the same field names. Indices are 1-based on disk.
//!
//! ```text
//! "EGT1" | u32 version | u32 d | u32 p | u32 g | u8 sigma_rule
//! g x (u32 i | u32 j | f64 c | f64 s | u8 kind)
//! p x f64 sigma
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::factorizer::{GivensProduct, SigmaRule};
use crate::givens2x2::{ExtendedGivens, GivensKind};
use crate::matcore::io::{read_f64, read_u32, u32_len};
use crate::matcore::DiagonalWeights;
use crate::{Error, Result};

pub const EGT_MAGIC: &[u8; 4] = b"EGT1";
pub const EGT_VERSION: u32 = 1;

pub fn write_egt<W: Write>(w: &mut W, product: &GivensProduct<f64>) -> Result<()> {
    w.write_all(EGT_MAGIC)?;
    for n in [EGT_VERSION, u32_len(product.d())?, u32_len(product.p())?, u32_len(product.g())?] {
        w.write_all(&n.to_le_bytes())?;
    }
    w.write_all(&[product.sigma_rule().code()])?;
    for t in product.transforms() {
        w.write_all(&u32_len(t.i + 1)?.to_le_bytes())?;
        w.write_all(&u32_len(t.j + 1)?.to_le_bytes())?;
        w.write_all(&t.c.to_le_bytes())?;
        w.write_all(&t.s.to_le_bytes())?;
        w.write_all(&[kind_code(t.kind)])?;
    }
    for v in product.weights().values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_egt<R: Read>(mut r: R) -> Result<GivensProduct<f64>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != EGT_MAGIC {
        return Err(Error::format("EGT1", format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != EGT_VERSION {
        return Err(Error::format("EGT1", format!("unsupported version {version}")));
    }
    let d = read_u32(&mut r)? as usize;
    let p = read_u32(&mut r)? as usize;
    let g = read_u32(&mut r)? as usize;
    let rule_code = read_u8(&mut r)?;
    let rule = SigmaRule::from_code(rule_code)
        .ok_or_else(|| Error::format("EGT1", format!("unknown sigma rule code {rule_code}")))?;
    if p > d {
        return Err(Error::format("EGT1", format!("p = {p} exceeds d = {d}")));
    }
    let mut transforms = Vec::with_capacity(g.min(1 << 20));
    for k in 0..g {
        let i = read_u32(&mut r)? as usize;
        let j = read_u32(&mut r)? as usize;
        let c = read_f64(&mut r)?;
        let s = read_f64(&mut r)?;
        let code = read_u8(&mut r)?;
        let kind = kind_from_code(code)
            .ok_or_else(|| Error::format("EGT1", format!("transform {}: kind code {code}", k + 1)))?;
        transforms.push(transform_from_disk(k, i, j, c, s, kind)?);
    }
    let mut sigma = Vec::with_capacity(p);
    for _ in 0..p {
        sigma.push(read_f64(&mut r)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::format("EGT1", "trailing bytes after payload"));
    }
    GivensProduct::new(d, transforms, DiagonalWeights::new(d, sigma)?, rule)
}

pub fn save_egt(path: &Path, product: &GivensProduct<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_egt(&mut w, product)?;
    w.flush()?;
    Ok(())
}

pub fn load_egt(path: &Path) -> Result<GivensProduct<f64>> {
    read_egt(BufReader::new(File::open(path)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgtTransform {
    pub i: usize,
    pub j: usize,
    pub c: f64,
    pub s: f64,
    pub kind: GivensKind,
}

/// JSON form of an `EGT1` file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgtJson {
    pub version: u32,
    pub d: usize,
    pub p: usize,
    pub g: usize,
    pub sigma_rule: SigmaRule,
    pub transforms: Vec<EgtTransform>,
    pub sigma: Vec<f64>,
}

pub fn to_json(product: &GivensProduct<f64>) -> EgtJson {
    EgtJson {
        version: EGT_VERSION,
        d: product.d(),
        p: product.p(),
        g: product.g(),
        sigma_rule: product.sigma_rule(),
        transforms: product
            .transforms()
            .iter()
            .map(|t| EgtTransform {
                i: t.i + 1,
                j: t.j + 1,
                c: t.c,
                s: t.s,
                kind: t.kind,
            })
            .collect(),
        sigma: product.weights().values().to_vec(),
    }
}

pub fn from_json(doc: &EgtJson) -> Result<GivensProduct<f64>> {
    if doc.version != EGT_VERSION {
        return Err(Error::format("EGT1 JSON", format!("unsupported version {}", doc.version)));
    }
    if doc.g != doc.transforms.len() || doc.p != doc.sigma.len() {
        return Err(Error::format(
            "EGT1 JSON",
            format!(
                "header says g = {}, p = {} but found {} transforms, {} weights",
                doc.g,
                doc.p,
                doc.transforms.len(),
                doc.sigma.len()
            ),
        ));
    }
    let transforms = doc
        .transforms
        .iter()
        .enumerate()
        .map(|(k, t)| transform_from_disk(k, t.i, t.j, t.c, t.s, t.kind))
        .collect::<Result<Vec<_>>>()?;
    GivensProduct::new(doc.d, transforms, DiagonalWeights::new(doc.d, doc.sigma.clone())?, doc.sigma_rule)
}

fn transform_from_disk(
    k: usize,
    i: usize,
    j: usize,
    c: f64,
    s: f64,
    kind: GivensKind,
) -> Result<ExtendedGivens<f64>> {
    if i == 0 || j == 0 {
        return Err(Error::format("EGT1", format!("transform {}: indices are 1-based", k + 1)));
    }
    ExtendedGivens::new(i - 1, j - 1, c, s, kind)
        .map_err(|e| Error::format("EGT1", format!("transform {}: {e}", k + 1)))
}

fn kind_code(kind: GivensKind) -> u8 {
    match kind {
        GivensKind::Rotation => 0,
        GivensKind::Reflector => 1,
    }
}

fn kind_from_code(code: u8) -> Option<GivensKind> {
    match code {
        0 => Some(GivensKind::Rotation),
        1 => Some(GivensKind::Reflector),
        _ => None,
    }
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}
