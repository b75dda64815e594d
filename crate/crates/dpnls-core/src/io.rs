//! File formats: profile CSV, the scattering-data document, field CSVs.

use std::fs;
use std::path::Path;

use crate::scattering::{InitialProfile, ScatteringData};
use crate::{Error, Result, C64};

/// 17 significant digits, '.' decimal point, no locale.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads `x, re q, im q` rows; a header line is allowed.
pub fn read_profile_csv(path: &Path) -> Result<InitialProfile> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut x = Vec::new();
    let mut q = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = match vals {
            Ok(v) => v,
            Err(_) if n == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("{} line {}: {e}", path.display(), n + 1))),
        };
        if vals.len() != 3 {
            return Err(Error::Parse(format!("{} line {}: expected 3 columns", path.display(), n + 1)));
        }
        x.push(vals[0]);
        q.push(C64::new(vals[1], vals[2]));
    }
    InitialProfile::new(x, q)
}

pub fn write_profile_csv(path: &Path, profile: &InitialProfile) -> Result<()> {
    let mut out = String::from("x,re_q,im_q\n");
    for (x, q) in profile.x_grid.iter().zip(&profile.q0) {
        out.push_str(&format!("{},{},{}\n", fmt17(*x), fmt17(q.re), fmt17(q.im)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// The document uses shortest round-trip float formatting, so every value
/// reads back bit-exactly.
pub fn write_scattering(path: &Path, data: &ScatteringData) -> Result<()> {
    let text = serde_json::to_string_pretty(data).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_scattering(path: &Path) -> Result<ScatteringData> {
    let text = fs::read_to_string(path)?;
    let data: ScatteringData =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    data.validate()?;
    Ok(data)
}

/// Writes rows of real columns under a header.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
