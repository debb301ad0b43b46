//! Binary cohort container.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes  "ICUCOHRT"
//! version      u32      1
//! n_variables  u32      14
//! count        u64
//! count x encounter:
//!   encounter_id    u32 length + UTF-8
//!   patient_id      u32 length + UTF-8
//!   age_years       f64
//!   label           u8 (0/1)
//!   icu_stay_index  u32
//!   hours           u32
//!   grid            hours*14 f64, hour-major
//!   observed        hours*14 u8 (0/1)
//! ```

use std::path::Path;

use super::series::EncounterSeries;
use crate::binio::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::variables::N_VARIABLES;

pub const COHORT_MAGIC: &[u8; 8] = b"ICUCOHRT";
pub const COHORT_VERSION: u32 = 1;

pub fn encode_cohort(cohort: &[EncounterSeries]) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(COHORT_MAGIC);
    w.u32(COHORT_VERSION);
    w.u32(N_VARIABLES as u32);
    w.u64(cohort.len() as u64);
    for e in cohort {
        w.str(&e.encounter_id);
        w.str(&e.patient_id);
        w.f64(e.age_years);
        w.u8(u8::from(e.label));
        w.u32(e.icu_stay_index);
        w.u32(e.hours() as u32);
        for &v in e.grid() {
            w.f64(v);
        }
        for &m in e.observed_mask() {
            w.u8(u8::from(m));
        }
    }
    w.into_inner()
}

pub fn decode_cohort(bytes: &[u8]) -> Result<Vec<EncounterSeries>> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(COHORT_MAGIC)?;
    let version = r.u32()?;
    if version != COHORT_VERSION {
        return Err(Error::Container(format!("unsupported cohort version {version}")));
    }
    let n_vars = r.u32()? as usize;
    if n_vars != N_VARIABLES {
        return Err(Error::Container(format!("expected {N_VARIABLES} variables, found {n_vars}")));
    }
    let count = r.u64()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let encounter_id = r.str()?;
        let patient_id = r.str()?;
        let age_years = r.f64()?;
        let label = r.u8()? != 0;
        let icu_stay_index = r.u32()?;
        let cells = r.u32()? as usize * N_VARIABLES;
        let grid = (0..cells).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let observed = (0..cells).map(|_| r.u8().map(|b| b != 0)).collect::<Result<Vec<_>>>()?;
        let mut e = EncounterSeries::from_grid(encounter_id, patient_id, grid, observed, label)
            .map_err(|e| Error::Container(e.to_string()))?;
        e.age_years = age_years;
        e.icu_stay_index = icu_stay_index;
        out.push(e);
    }
    r.finish()?;
    Ok(out)
}

pub fn save_cohort(path: &Path, cohort: &[EncounterSeries]) -> Result<()> {
    std::fs::write(path, encode_cohort(cohort)).map_err(|e| Error::io(path, e))
}

pub fn load_cohort(path: &Path) -> Result<Vec<EncounterSeries>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cohort(&bytes)
}
