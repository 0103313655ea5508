//! On-disk matrix format.
//!
//! ```text
//! DETCS-MAT v1 m=<m> n=<n> kind=<dense|blockcirc> p=<p> s=<s> d=<d> [normalized=<0|1>]
//! ```
//!
//! For `kind=blockcirc` the second line is `blocks=<len,len,...>` followed by
//! one generator column per line; for `kind=dense` the header is followed by
//! m rows of n entries. Entries are `re:im` pairs separated by spaces,
//! printed with shortest round-trip formatting. `p=s=d=0` marks matrices
//! without construction parameters (Gaussian or user supplied).

use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::matgen::{BlockCirculantMatrix, ConstructionParams, DenseMatrix};
use crate::{Error, Result};

const MAGIC: &str = "DETCS-MAT";
const VERSION: &str = "v1";
/// Caps keep hostile headers from allocating unbounded memory.
const MAX_DIM: usize = 1 << 20;
const MAX_ENTRIES: usize = 1 << 26;

#[derive(Debug, Clone)]
pub enum MatrixFile {
    Dense(DenseMatrix),
    Block(BlockCirculantMatrix),
}

fn bad(path: &str, message: impl Into<String>) -> Error {
    Error::MalformedMatrix {
        path: path.to_string(),
        message: message.into(),
    }
}

fn parse_entry(tok: &str, path: &str, line_no: usize) -> Result<Complex64> {
    let (re, im) = tok
        .split_once(':')
        .ok_or_else(|| bad(path, format!("line {line_no}: entry `{tok}` is not re:im")))?;
    let re = f64::from_str(re)
        .map_err(|_| bad(path, format!("line {line_no}: bad real part `{re}`")))?;
    let im = f64::from_str(im)
        .map_err(|_| bad(path, format!("line {line_no}: bad imaginary part `{im}`")))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(bad(path, format!("line {line_no}: non-finite entry `{tok}`")));
    }
    Ok(Complex64::new(re, im))
}

fn parse_row(line: &str, want: usize, path: &str, line_no: usize) -> Result<Vec<Complex64>> {
    let row: Vec<Complex64> = line
        .split_whitespace()
        .map(|tok| parse_entry(tok, path, line_no))
        .collect::<Result<_>>()?;
    if row.len() != want {
        return Err(bad(
            path,
            format!("line {line_no}: expected {want} entries, found {}", row.len()),
        ));
    }
    Ok(row)
}

struct Header {
    m: usize,
    n: usize,
    kind: String,
    p: u32,
    s: u32,
    d: u32,
    normalized: bool,
}

fn parse_header(line: &str, path: &str) -> Result<Header> {
    let mut toks = line.split_whitespace();
    if toks.next() != Some(MAGIC) {
        return Err(bad(path, "missing DETCS-MAT magic"));
    }
    match toks.next() {
        Some(VERSION) => {}
        Some(v) => return Err(bad(path, format!("unsupported version `{v}`"))),
        None => return Err(bad(path, "missing version")),
    }
    let (mut m, mut n, mut kind) = (None, None, None);
    let (mut p, mut s, mut d) = (None, None, None);
    let mut normalized = false;
    for tok in toks {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| bad(path, format!("malformed header token `{tok}`")))?;
        match key {
            "m" | "n" => {
                let v: usize = value
                    .parse()
                    .map_err(|_| bad(path, format!("bad {key}=`{value}`")))?;
                if key == "m" { m = Some(v) } else { n = Some(v) }
            }
            "kind" => kind = Some(value.to_string()),
            "p" | "s" | "d" => {
                let v: u32 = value
                    .parse()
                    .map_err(|_| bad(path, format!("bad {key}=`{value}`")))?;
                match key {
                    "p" => p = Some(v),
                    "s" => s = Some(v),
                    _ => d = Some(v),
                }
            }
            "normalized" => match value {
                "0" => normalized = false,
                "1" => normalized = true,
                _ => return Err(bad(path, format!("bad normalized=`{value}`"))),
            },
            _ => return Err(bad(path, format!("unknown header key `{key}`"))),
        }
    }
    let header = Header {
        m: m.ok_or_else(|| bad(path, "header lacks m"))?,
        n: n.ok_or_else(|| bad(path, "header lacks n"))?,
        kind: kind.ok_or_else(|| bad(path, "header lacks kind"))?,
        p: p.ok_or_else(|| bad(path, "header lacks p"))?,
        s: s.ok_or_else(|| bad(path, "header lacks s"))?,
        d: d.ok_or_else(|| bad(path, "header lacks d"))?,
        normalized,
    };
    if header.m < 1 || header.n < 1 {
        return Err(bad(path, "m and n must be >= 1"));
    }
    if header.m > header.n {
        return Err(bad(path, format!("m = {} exceeds n = {}", header.m, header.n)));
    }
    if header.m > MAX_DIM || header.n > MAX_DIM || header.m.saturating_mul(header.n) > MAX_ENTRIES {
        return Err(bad(path, "matrix dimensions exceed the size guard"));
    }
    Ok(header)
}

/// Parse the text of a matrix file. `path` is only used in error messages.
pub fn parse_matrix(text: &str, path: &str) -> Result<MatrixFile> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or_else(|| bad(path, "empty file"))?;
    let h = parse_header(first, path)?;
    let params = if h.p == 0 && h.s == 0 && h.d == 0 {
        None
    } else {
        Some(ConstructionParams {
            p: h.p,
            s: h.s,
            d: h.d,
            n: h.n,
        })
    };
    match h.kind.as_str() {
        "dense" => {
            let mut cols = vec![Vec::with_capacity(h.m); h.n];
            let mut rows_seen = 0usize;
            for (line_no, line) in lines {
                if line.trim().is_empty() {
                    continue;
                }
                if rows_seen == h.m {
                    return Err(bad(path, format!("line {line_no}: more than {} rows", h.m)));
                }
                let row = parse_row(line, h.n, path, line_no)?;
                for (col, v) in cols.iter_mut().zip(row) {
                    col.push(v);
                }
                rows_seen += 1;
            }
            if rows_seen != h.m {
                return Err(bad(path, format!("expected {} rows, found {rows_seen}", h.m)));
            }
            Ok(MatrixFile::Dense(DenseMatrix::from_columns(
                h.m,
                cols,
                h.normalized,
            )))
        }
        "blockcirc" => {
            let (blocks_line_no, blocks_line) = lines
                .next()
                .ok_or_else(|| bad(path, "blockcirc file lacks a blocks= line"))?;
            let spec = blocks_line
                .trim()
                .strip_prefix("blocks=")
                .ok_or_else(|| bad(path, format!("line {blocks_line_no}: expected blocks=")))?;
            let block_lens: Vec<usize> = spec
                .split(',')
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| bad(path, format!("line {blocks_line_no}: bad block length `{t}`")))
                })
                .collect::<Result<_>>()?;
            if block_lens.iter().any(|&l| l < 1 || l > h.m) {
                return Err(bad(
                    path,
                    format!("line {blocks_line_no}: block lengths must be in 1..=m"),
                ));
            }
            if block_lens.iter().sum::<usize>() != h.n {
                return Err(bad(
                    path,
                    format!("line {blocks_line_no}: block lengths do not sum to n = {}", h.n),
                ));
            }
            let mut generators = Vec::with_capacity(block_lens.len());
            for (line_no, line) in lines {
                if line.trim().is_empty() {
                    continue;
                }
                if generators.len() == block_lens.len() {
                    return Err(bad(
                        path,
                        format!("line {line_no}: more generators than blocks"),
                    ));
                }
                generators.push(parse_row(line, h.m, path, line_no)?);
            }
            if generators.len() != block_lens.len() {
                return Err(bad(
                    path,
                    format!(
                        "expected {} generators, found {}",
                        block_lens.len(),
                        generators.len()
                    ),
                ));
            }
            Ok(MatrixFile::Block(BlockCirculantMatrix {
                m: h.m,
                n: h.n,
                generators,
                block_lens,
                params,
            }))
        }
        other => Err(bad(path, format!("unknown kind `{other}`"))),
    }
}

pub fn read_matrix(path: &Path) -> Result<MatrixFile> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text, &path.display().to_string())
}

fn push_row(out: &mut String, entries: impl Iterator<Item = Complex64>) {
    let mut first = true;
    for z in entries {
        if !first {
            out.push(' ');
        }
        out.push_str(&format!("{}:{}", z.re, z.im));
        first = false;
    }
    out.push('\n');
}

pub fn format_dense(mat: &DenseMatrix) -> String {
    let mut out = format!(
        "{MAGIC} {VERSION} m={} n={} kind=dense p=0 s=0 d=0 normalized={}\n",
        mat.m,
        mat.n,
        mat.normalized as u8
    );
    for i in 0..mat.m {
        push_row(&mut out, (0..mat.n).map(|j| mat.entry(i, j)));
    }
    out
}

pub fn format_block(mat: &BlockCirculantMatrix) -> String {
    let (p, s, d) = mat.params.map_or((0, 0, 0), |c| (c.p, c.s, c.d));
    let mut out = format!(
        "{MAGIC} {VERSION} m={} n={} kind=blockcirc p={p} s={s} d={d}\n",
        mat.m, mat.n
    );
    out.push_str("blocks=");
    out.push_str(
        &mat.block_lens
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for gen in &mat.generators {
        push_row(&mut out, gen.iter().copied());
    }
    out
}

pub fn write_dense(path: &Path, mat: &DenseMatrix) -> Result<()> {
    std::fs::write(path, format_dense(mat))?;
    Ok(())
}

pub fn write_block(path: &Path, mat: &BlockCirculantMatrix) -> Result<()> {
    std::fs::write(path, format_block(mat))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgen::{generate_deterministic, generate_gaussian};

    fn assert_dense_eq(a: &DenseMatrix, b: &DenseMatrix) {
        assert_eq!((a.m, a.n, a.normalized), (b.m, b.n, b.normalized));
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn dense_round_trip_is_bit_exact() {
        let mat = generate_gaussian(7, 19, 3).unwrap();
        let text = format_dense(&mat);
        let MatrixFile::Dense(back) = parse_matrix(&text, "mem").unwrap() else {
            panic!("expected dense")
        };
        assert_dense_eq(&mat, &back);
    }

    #[test]
    fn block_round_trip_is_bit_exact() {
        let mat = generate_deterministic(5, 2, 2, 125).unwrap();
        let text = format_block(&mat);
        let MatrixFile::Block(back) = parse_matrix(&text, "mem").unwrap() else {
            panic!("expected blockcirc")
        };
        assert_eq!((back.m, back.n), (24, 125));
        assert_eq!(back.block_lens, mat.block_lens);
        assert_eq!(back.generators, mat.generators);
        assert_eq!(back.params, mat.params);
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("detcs-matio-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("blk.mat");
        let mat = generate_deterministic(3, 2, 2, 48).unwrap();
        write_block(&path, &mat).unwrap();
        let MatrixFile::Block(back) = read_matrix(&path).unwrap() else {
            panic!("expected blockcirc")
        };
        assert_eq!(back.generators, mat.generators);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_malformed_headers() {
        let cases = [
            "",
            "NOT-MAGIC v1 m=2 n=3 kind=dense p=0 s=0 d=0",
            "DETCS-MAT v2 m=2 n=3 kind=dense p=0 s=0 d=0",
            "DETCS-MAT v1 n=3 kind=dense p=0 s=0 d=0",
            "DETCS-MAT v1 m=2 n=3 kind=weird p=0 s=0 d=0",
            "DETCS-MAT v1 m=2 n=3 kind=dense p=0 s=0 d=0 bogus=1",
            "DETCS-MAT v1 m=0 n=3 kind=dense p=0 s=0 d=0",
            "DETCS-MAT v1 m=4 n=3 kind=dense p=0 s=0 d=0",
            "DETCS-MAT v1 m=9999999 n=9999999 kind=dense p=0 s=0 d=0",
            "DETCS-MAT v1 m=2 n=3 kind=dense p=0 s=0 d=0 normalized=2",
        ];
        for text in cases {
            assert!(
                matches!(parse_matrix(text, "mem"), Err(Error::MalformedMatrix { .. })),
                "accepted: {text:?}"
            );
        }
    }

    #[test]
    fn rejects_malformed_bodies() {
        let ok_header = "DETCS-MAT v1 m=2 n=2 kind=dense p=0 s=0 d=0\n";
        let cases = [
            format!("{ok_header}1:0 0:0\n"),                   // too few rows
            format!("{ok_header}1:0 0:0\n0:0 1:0\n0:0 0:0\n"), // too many rows
            format!("{ok_header}1:0 0:0 0:0\n0:0 1:0\n"),      // wrong row width
            format!("{ok_header}1:0 0;0\n0:0 1:0\n"),          // bad separator
            format!("{ok_header}1:0 nan:0\n0:0 1:0\n"),        // non-finite
            format!("{ok_header}1:0 x:0\n0:0 1:0\n"),          // unparseable float
            "DETCS-MAT v1 m=2 n=4 kind=blockcirc p=0 s=0 d=0\n1:0 0:0\n".to_string(), // no blocks=
            "DETCS-MAT v1 m=2 n=4 kind=blockcirc p=0 s=0 d=0\nblocks=2,3\n1:0 0:0\n0:1 1:1\n"
                .to_string(), // sum != n
            "DETCS-MAT v1 m=2 n=4 kind=blockcirc p=0 s=0 d=0\nblocks=2,2\n1:0 0:0\n".to_string(), // missing generator
            "DETCS-MAT v1 m=2 n=4 kind=blockcirc p=0 s=0 d=0\nblocks=4\n1:0 0:0\n".to_string(), // block longer than m
        ];
        for text in &cases {
            assert!(
                matches!(parse_matrix(text, "mem"), Err(Error::MalformedMatrix { .. })),
                "accepted: {text:?}"
            );
        }
    }

    #[test]
    fn error_messages_carry_line_numbers() {
        let text = "DETCS-MAT v1 m=2 n=2 kind=dense p=0 s=0 d=0\n1:0 0:0\n0:0 oops:0\n";
        let err = parse_matrix(text, "somefile").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("somefile") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn shortest_float_formatting_round_trips() {
        let vals = [0.1, 1.0 / 3.0, -2.5e-17, 1e300, f64::MIN_POSITIVE];
        for &v in &vals {
            let s = format!("{v}");
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn params_zero_means_none() {
        let text = "DETCS-MAT v1 m=2 n=2 kind=blockcirc p=0 s=0 d=0\nblocks=2\n0.5:0 0.5:0\n";
        let MatrixFile::Block(b) = parse_matrix(text, "mem").unwrap() else {
            panic!()
        };
        assert!(b.params.is_none());
        let text = "DETCS-MAT v1 m=2 n=2 kind=blockcirc p=3 s=1 d=1 \nblocks=2\n0.5:0 0.5:0\n";
        let MatrixFile::Block(b) = parse_matrix(text, "mem").unwrap() else {
            panic!()
        };
        assert_eq!(
            b.params,
            Some(ConstructionParams { p: 3, s: 1, d: 1, n: 2 })
        );
    }
}
