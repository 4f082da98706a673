//! Regenerates `fixtures/two_blobs.csv`.
//!
//! ```text
//! cargo run -p fastortho --example make_fixtures
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use fastortho::pca::{two_blobs, write_dataset_csv};

pub const BLOBS_SEED: u64 = 20_240_617;

fn main() -> fastortho::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/two_blobs.csv");
    let data = two_blobs(64, 2000, BLOBS_SEED);
    let mut out = BufWriter::new(File::create(&path)?);
    write_dataset_csv(&mut out, &data)?;
    println!("wrote {} ({} x {})", path.display(), data.len(), data.dim());
    Ok(())
}
