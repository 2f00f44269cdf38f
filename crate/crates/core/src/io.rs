//! Snapshot serialization: a little-endian binary layout and a CSV view.
//!
//! Binary layout: magic `DPHF`, `u32` version, `u32 k_max`, `u32 n_omega`,
//! `f64 half_width`, `f64 time_tag`, then `(2k_max+1)·n_omega` pairs
//! `(re, im)` of `f64`, rows ordered `k = -k_max..=k_max`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::MixedField;
use crate::grid::OmegaGrid;

const MAGIC: &[u8; 4] = b"DPHF";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 3 * 4 + 2 * 8;

pub fn field_to_bytes(field: &MixedField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * field.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(field.k_max as u32).to_le_bytes());
    out.extend_from_slice(&(field.grid.n_points as u32).to_le_bytes());
    out.extend_from_slice(&field.grid.half_width.to_le_bytes());
    out.extend_from_slice(&field.time_tag.to_le_bytes());
    for v in &field.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn take<const N: usize>(bytes: &[u8], at: &mut usize) -> Result<[u8; N]> {
    let chunk = bytes
        .get(*at..*at + N)
        .ok_or_else(|| Error::Format(format!("snapshot truncated at byte {at}")))?;
    *at += N;
    Ok(chunk.try_into().expect("slice has length N"))
}

pub fn field_from_bytes(bytes: &[u8]) -> Result<MixedField> {
    let mut at = 0;
    if &take::<4>(bytes, &mut at)? != MAGIC {
        return Err(Error::Format("not a snapshot file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(bytes, &mut at)?);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let k_max = u32::from_le_bytes(take(bytes, &mut at)?) as usize;
    let n_omega = u32::from_le_bytes(take(bytes, &mut at)?) as usize;
    let half_width = f64::from_le_bytes(take(bytes, &mut at)?);
    let time_tag = f64::from_le_bytes(take(bytes, &mut at)?);
    let grid = OmegaGrid::new(half_width, n_omega)?;
    let count = (2 * k_max + 1) * n_omega;
    if bytes.len() != HEADER_LEN + 16 * count {
        return Err(Error::Format(format!(
            "snapshot payload is {} bytes, expected {}",
            bytes.len() - HEADER_LEN,
            16 * count
        )));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f64::from_le_bytes(take(bytes, &mut at)?);
        let im = f64::from_le_bytes(take(bytes, &mut at)?);
        values.push(Complex64::new(re, im));
    }
    Ok(MixedField {
        k_max,
        grid,
        values,
        time_tag,
    })
}

/// `k,omega,re_h,im_h` rows, full precision.
pub fn field_to_csv(field: &MixedField) -> String {
    let omegas = field.grid.points();
    let mut out = String::from("k,omega,re_h,im_h\n");
    for k in field.modes() {
        for (v, w) in field.row(k).iter().zip(&omegas) {
            out.push_str(&format!("{k},{w:.16e},{:.16e},{:.16e}\n", v.re, v.im));
        }
    }
    out
}

/// File name of the `index`-th snapshot.
pub fn snapshot_name(index: usize) -> String {
    format!("snap_{index:04}.bin")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> MixedField {
        let mut f = MixedField::zeros(2, OmegaGrid::new(3.0, 17).unwrap(), 1.25);
        for (i, v) in f.values.iter_mut().enumerate() {
            *v = Complex64::new(i as f64 / 7.0, -(i as f64).sqrt());
        }
        f
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let f = field();
        let bytes = field_to_bytes(&f);
        assert_eq!(&bytes[..4], b"DPHF");
        let g = field_from_bytes(&bytes).unwrap();
        assert_eq!(g.values, f.values);
        assert_eq!(g.time_tag, f.time_tag);
        assert_eq!(g.grid, f.grid);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let bytes = field_to_bytes(&field());
        assert!(field_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(field_from_bytes(&bad).is_err());
        let mut v2 = bytes;
        v2[4] = 2;
        assert!(matches!(field_from_bytes(&v2), Err(Error::Format(_))));
    }

    #[test]
    fn csv_has_one_row_per_entry() {
        let f = field();
        let csv = field_to_csv(&f);
        assert_eq!(csv.lines().count(), 1 + f.values.len());
        assert!(csv.lines().nth(1).unwrap().starts_with("-2,"));
    }
}
