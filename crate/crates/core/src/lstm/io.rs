//! Model files. Two equivalent encodings of the same schema:
//!
//! Binary (default): magic `CTXDLSTM`, then little-endian `u32` fields
//! `version=1, d1, d2, C, vocab_size`, then `vocab_size` tokens (each a
//! `u32` byte length plus UTF-8 bytes), then the weight blocks. Every block
//! is a declared `u32 rows, u32 cols` header followed by `rows*cols`
//! little-endian `f64` values, row-major. Vectors are stored as `len x 1`
//! blocks. Block order: `embeddings (V x d1)`, `w_o w_f w_i w_g (d2 x d1)`,
//! `v_o v_f v_i v_g (d2 x d2)`, `b_o b_f b_i b_g (d2 x 1)`,
//! `w_soft (C x d2)`, `b_soft (C x 1)`.
//!
//! Text (for hand-written fixtures, chosen by a `.txt` extension): the line
//! `ctxdlstm-text 1`, a `dims d1 d2 C V` line, `V` lines `token <tok>`,
//! then the same blocks in the same order, each introduced by
//! `block <name> <rows> <cols>` with one whitespace-separated row per line.
//! Floats are printed in shortest round-trip form, so a text round trip is
//! also bit exact.

use super::{LstmModel, LstmParams};
use crate::numerics::{Matrix, Vector};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 8] = b"CTXDLSTM";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("field {field}: {detail}")]
    Field { field: String, detail: String },
}

fn field_err(field: &str, detail: impl Into<String>) -> ModelIoError {
    ModelIoError::Field {
        field: field.to_string(),
        detail: detail.into(),
    }
}

/// Saves a model; a `.txt` extension selects the text form.
pub fn save_model(path: &Path, model: &LstmModel) -> Result<(), ModelIoError> {
    let bytes = if path.extension().is_some_and(|e| e == "txt") {
        to_text(model).into_bytes()
    } else {
        to_binary(model)
    };
    std::fs::write(path, bytes).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a model, sniffing the encoding from the leading bytes.
pub fn load_model(path: &Path) -> Result<LstmModel, ModelIoError> {
    let bytes = std::fs::read(path).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if bytes.starts_with(MAGIC) {
        from_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| ModelIoError::BadMagic)?;
        from_text(&text)
    }
}

struct Blocks<'a> {
    names: Vec<&'static str>,
    shapes: Vec<(usize, usize)>,
    data: Vec<&'a [f64]>,
}

fn blocks(model: &LstmModel) -> Blocks<'_> {
    let p = &model.params;
    let v = model.vocab.len();
    let names = vec![
        "embeddings", "w_o", "w_f", "w_i", "w_g", "v_o", "v_f", "v_i", "v_g", "b_o", "b_f",
        "b_i", "b_g", "w_soft", "b_soft",
    ];
    let shapes = vec![
        (v, p.d1),
        (p.d2, p.d1),
        (p.d2, p.d1),
        (p.d2, p.d1),
        (p.d2, p.d1),
        (p.d2, p.d2),
        (p.d2, p.d2),
        (p.d2, p.d2),
        (p.d2, p.d2),
        (p.d2, 1),
        (p.d2, 1),
        (p.d2, 1),
        (p.d2, 1),
        (p.n_classes, p.d2),
        (p.n_classes, 1),
    ];
    let data = vec![
        model.embeddings.data(),
        p.w_o.data(),
        p.w_f.data(),
        p.w_i.data(),
        p.w_g.data(),
        p.v_o.data(),
        p.v_f.data(),
        p.v_i.data(),
        p.v_g.data(),
        p.b_o.as_slice(),
        p.b_f.as_slice(),
        p.b_i.as_slice(),
        p.b_g.as_slice(),
        p.w_soft.data(),
        p.b_soft.as_slice(),
    ];
    Blocks {
        names,
        shapes,
        data,
    }
}

fn expected_shapes(d1: usize, d2: usize, c: usize, v: usize) -> Vec<(&'static str, usize, usize)> {
    vec![
        ("embeddings", v, d1),
        ("w_o", d2, d1),
        ("w_f", d2, d1),
        ("w_i", d2, d1),
        ("w_g", d2, d1),
        ("v_o", d2, d2),
        ("v_f", d2, d2),
        ("v_i", d2, d2),
        ("v_g", d2, d2),
        ("b_o", d2, 1),
        ("b_f", d2, 1),
        ("b_i", d2, 1),
        ("b_g", d2, 1),
        ("w_soft", c, d2),
        ("b_soft", c, 1),
    ]
}

fn assemble(
    d1: usize,
    d2: usize,
    c: usize,
    vocab: Vec<String>,
    buffers: Vec<Vec<f64>>,
) -> LstmModel {
    let mut bufs = buffers.into_iter();
    let mut take =
        move |rows: usize, cols: usize| Matrix::from_row_major(rows, cols, bufs.next().unwrap());
    let embeddings = take(vocab.len(), d1);
    let params = LstmParams {
        d1,
        d2,
        n_classes: c,
        w_o: take(d2, d1),
        w_f: take(d2, d1),
        w_i: take(d2, d1),
        w_g: take(d2, d1),
        v_o: take(d2, d2),
        v_f: take(d2, d2),
        v_i: take(d2, d2),
        v_g: take(d2, d2),
        b_o: Vector::new(take(d2, 1).data().to_vec()),
        b_f: Vector::new(take(d2, 1).data().to_vec()),
        b_i: Vector::new(take(d2, 1).data().to_vec()),
        b_g: Vector::new(take(d2, 1).data().to_vec()),
        w_soft: take(c, d2),
        b_soft: Vector::new(take(c, 1).data().to_vec()),
    };
    LstmModel::new(params, vocab, embeddings)
}

// ---- binary form ----

fn to_binary(model: &LstmModel) -> Vec<u8> {
    let p = &model.params;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    for value in [
        VERSION,
        p.d1 as u32,
        p.d2 as u32,
        p.n_classes as u32,
        model.vocab.len() as u32,
    ] {
        out.extend_from_slice(&value.to_le_bytes());
    }
    for tok in &model.vocab {
        out.extend_from_slice(&(tok.len() as u32).to_le_bytes());
        out.extend_from_slice(tok.as_bytes());
    }
    let b = blocks(model);
    for ((shape, data), _name) in b.shapes.iter().zip(&b.data).zip(&b.names) {
        out.extend_from_slice(&(shape.0 as u32).to_le_bytes());
        out.extend_from_slice(&(shape.1 as u32).to_le_bytes());
        for &x in *data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u32(&mut self, field: &str) -> Result<u32, ModelIoError> {
        if self.pos + 4 > self.bytes.len() {
            return Err(field_err(field, "file truncated"));
        }
        let v = u32::from_le_bytes(self.bytes[self.pos..self.pos + 4].try_into().unwrap());
        self.pos += 4;
        Ok(v)
    }

    fn f64s(&mut self, field: &str, n: usize) -> Result<Vec<f64>, ModelIoError> {
        if self.pos + 8 * n > self.bytes.len() {
            return Err(field_err(field, "file truncated"));
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(f64::from_le_bytes(
                self.bytes[self.pos..self.pos + 8].try_into().unwrap(),
            ));
            self.pos += 8;
        }
        Ok(out)
    }

    fn str(&mut self, field: &str) -> Result<String, ModelIoError> {
        let len = self.u32(field)? as usize;
        if self.pos + len > self.bytes.len() {
            return Err(field_err(field, "file truncated"));
        }
        let s = std::str::from_utf8(&self.bytes[self.pos..self.pos + len])
            .map_err(|_| field_err(field, "invalid UTF-8"))?
            .to_string();
        self.pos += len;
        Ok(s)
    }
}

fn from_binary(bytes: &[u8]) -> Result<LstmModel, ModelIoError> {
    let mut cur = Cursor {
        bytes,
        pos: MAGIC.len(),
    };
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(ModelIoError::UnsupportedVersion(version));
    }
    let d1 = cur.u32("d1")? as usize;
    let d2 = cur.u32("d2")? as usize;
    let c = cur.u32("C")? as usize;
    let v = cur.u32("vocab_size")? as usize;
    let mut vocab = Vec::with_capacity(v);
    for k in 0..v {
        vocab.push(cur.str(&format!("vocab[{k}]"))?);
    }
    let mut buffers = Vec::new();
    for (name, rows, cols) in expected_shapes(d1, d2, c, v) {
        let got_rows = cur.u32(name)? as usize;
        let got_cols = cur.u32(name)? as usize;
        if (got_rows, got_cols) != (rows, cols) {
            return Err(field_err(
                name,
                format!("expected shape {rows}x{cols}, got {got_rows}x{got_cols}"),
            ));
        }
        buffers.push(cur.f64s(name, rows * cols)?);
    }
    if cur.pos != bytes.len() {
        return Err(field_err("trailer", "trailing bytes after last block"));
    }
    Ok(assemble(d1, d2, c, vocab, buffers))
}

// ---- text form ----

fn to_text(model: &LstmModel) -> String {
    let p = &model.params;
    let mut out = String::new();
    out.push_str(&format!("ctxdlstm-text {VERSION}\n"));
    out.push_str(&format!(
        "dims {} {} {} {}\n",
        p.d1,
        p.d2,
        p.n_classes,
        model.vocab.len()
    ));
    for tok in &model.vocab {
        out.push_str(&format!("token {tok}\n"));
    }
    let b = blocks(model);
    for ((name, shape), data) in b.names.iter().zip(&b.shapes).zip(&b.data) {
        out.push_str(&format!("block {name} {} {}\n", shape.0, shape.1));
        for row in 0..shape.0 {
            let cells: Vec<String> = (0..shape.1)
                .map(|col| format!("{}", data[row * shape.1 + col]))
                .collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    }
    out
}

fn from_text(text: &str) -> Result<LstmModel, ModelIoError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(ModelIoError::BadMagic)?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("ctxdlstm-text") {
        return Err(ModelIoError::BadMagic);
    }
    let version: u32 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| field_err("version", "missing or non-numeric"))?;
    if version != VERSION {
        return Err(ModelIoError::UnsupportedVersion(version));
    }

    let dims_line = lines
        .next()
        .ok_or_else(|| field_err("dims", "missing line"))?;
    let dims: Vec<usize> = dims_line
        .strip_prefix("dims")
        .ok_or_else(|| field_err("dims", format!("expected \"dims ...\", got {dims_line:?}")))?
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| field_err("dims", "non-numeric value"))?;
    if dims.len() != 4 {
        return Err(field_err("dims", format!("expected 4 values, got {}", dims.len())));
    }
    let (d1, d2, c, v) = (dims[0], dims[1], dims[2], dims[3]);

    let mut vocab = Vec::with_capacity(v);
    for k in 0..v {
        let line = lines
            .next()
            .ok_or_else(|| field_err(&format!("vocab[{k}]"), "missing line"))?;
        let tok = line
            .strip_prefix("token ")
            .ok_or_else(|| field_err(&format!("vocab[{k}]"), format!("expected \"token ...\", got {line:?}")))?;
        vocab.push(tok.to_string());
    }

    let mut buffers = Vec::new();
    for (name, rows, cols) in expected_shapes(d1, d2, c, v) {
        let line = lines
            .next()
            .ok_or_else(|| field_err(name, "missing block header"))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some("block") || parts.next() != Some(name) {
            return Err(field_err(name, format!("expected \"block {name} ...\", got {line:?}")));
        }
        let got_rows: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| field_err(name, "bad rows"))?;
        let got_cols: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| field_err(name, "bad cols"))?;
        if (got_rows, got_cols) != (rows, cols) {
            return Err(field_err(
                name,
                format!("expected shape {rows}x{cols}, got {got_rows}x{got_cols}"),
            ));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for row in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| field_err(name, format!("missing row {row}")))?;
            let cells: Vec<&str> = line.split_whitespace().collect();
            if cells.len() != cols {
                return Err(field_err(
                    name,
                    format!("row {row}: expected {cols} values, got {}", cells.len()),
                ));
            }
            for cell in cells {
                data.push(
                    cell.parse::<f64>()
                        .map_err(|_| field_err(name, format!("bad float {cell:?}")))?,
                );
            }
        }
        buffers.push(data);
    }
    Ok(assemble(d1, d2, c, vocab, buffers))
}
