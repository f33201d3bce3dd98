//! Similarity matrix exports: CSV and a plain (P2) PGM heatmap.

use std::fmt::Write as _;

use kmh_core::consensus::SimilarityMatrix;

/// Plain PGM of `ψ` with rows and columns in `order`; pixel = round(255 ψ).
pub fn pgm(psi: &SimilarityMatrix, order: &[usize]) -> String {
    let n = order.len();
    let mut out = format!("P2\n{n} {n}\n255\n");
    for &i in order {
        let mut line_len = 0;
        for (pos, &j) in order.iter().enumerate() {
            let px = (255.0 * psi.psi(i, j)).round() as u32;
            let tok = px.to_string();
            // plain PGM lines stay within 70 characters
            if pos > 0 {
                if line_len + 1 + tok.len() > 70 {
                    out.push('\n');
                    line_len = 0;
                } else {
                    out.push(' ');
                    line_len += 1;
                }
            }
            out.push_str(&tok);
            line_len += tok.len();
        }
        out.push('\n');
    }
    out
}

/// `ψ` as CSV; the header and first column carry the original row indices.
pub fn similarity_csv(psi: &SimilarityMatrix, rows: &[usize]) -> String {
    let mut out = String::from("index");
    for r in rows {
        write!(out, ",{r}").unwrap();
    }
    out.push('\n');
    for (a, r) in rows.iter().enumerate() {
        write!(out, "{r}").unwrap();
        for b in 0..rows.len() {
            write!(out, ",{}", psi.psi(a, b)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Heatmap position → original row index.
pub fn order_csv(order: &[usize], rows: &[usize]) -> String {
    let mut out = String::from("position,index\n");
    for (pos, &i) in order.iter().enumerate() {
        writeln!(out, "{pos},{}", rows[i]).unwrap();
    }
    out
}

/// Pixel grid of a P2 file, for checks.
pub fn parse_pgm(text: &str) -> Option<(usize, Vec<u32>)> {
    let mut it = text.split_ascii_whitespace();
    if it.next()? != "P2" {
        return None;
    }
    let w: usize = it.next()?.parse().ok()?;
    let h: usize = it.next()?.parse().ok()?;
    let _max: u32 = it.next()?.parse().ok()?;
    let px: Vec<u32> = it.map(|t| t.parse().ok()).collect::<Option<_>>()?;
    (w == h && px.len() == w * h).then_some((w, px))
}
