//! Attention matrices as CSV and as binary PGM heatmaps.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// One row per hour, one column per attended hour.
pub fn attention_csv(attention: &Matrix) -> String {
    let mut out = String::from("hour");
    for j in 1..=attention.cols() {
        let _ = write!(out, ",h{j}");
    }
    out.push('\n');
    for t in 0..attention.rows() {
        let _ = write!(out, "{}", t + 1);
        for &a in attention.row(t) {
            let _ = write!(out, ",{a}");
        }
        out.push('\n');
    }
    out
}

/// P5 greyscale image, `cell_px` pixels per weight. Darker means more weight.
pub fn attention_pgm(attention: &Matrix, cell_px: usize) -> Vec<u8> {
    let cell = cell_px.max(1);
    let (w, h) = (attention.cols() * cell, attention.rows() * cell);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for t in 0..attention.rows() {
        let line: Vec<u8> = attention
            .row(t)
            .iter()
            .flat_map(|&a| {
                let shade = 255 - (a.clamp(0.0, 1.0) * 255.0).round() as u8;
                std::iter::repeat_n(shade, cell)
            })
            .collect();
        for _ in 0..cell {
            out.extend_from_slice(&line);
        }
    }
    out
}

pub fn write_attention_csv(path: &Path, attention: &Matrix) -> Result<()> {
    std::fs::write(path, attention_csv(attention)).map_err(|e| Error::io(path, e))
}

pub fn write_attention_pgm(path: &Path, attention: &Matrix, cell_px: usize) -> Result<()> {
    std::fs::write(path, attention_pgm(attention, cell_px)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lower() -> Matrix {
        Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.25, 0.75]).unwrap()
    }

    #[test]
    fn csv_layout() {
        assert_eq!(attention_csv(&lower()), "hour,h1,h2\n1,1,0\n2,0.25,0.75\n");
    }

    #[test]
    fn pgm_layout() {
        let img = attention_pgm(&lower(), 2);
        let header = b"P5\n4 4\n255\n";
        assert_eq!(&img[..header.len()], header);
        let px = &img[header.len()..];
        assert_eq!(px.len(), 16);
        assert_eq!(&px[..4], &[0, 0, 255, 255]);
        assert_eq!(&px[8..12], &[191, 191, 64, 64]);
    }
}
