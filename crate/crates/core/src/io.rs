//! On-disk formats: the PairStats text format, the `PGE1` embedding binary
//! format, and the draw-store directory layout.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EmbeddingState, IdentificationConstraint, PairCount, PairStats, PosteriorDraws};

pub const PAIRSTATS_HEADER: &str = "#pairstats v1";
pub const EMBEDDING_MAGIC: &[u8; 4] = b"PGE1";

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

pub fn write_pair_stats<W: Write>(stats: &PairStats, mut out: W) -> Result<()> {
    writeln!(out, "{PAIRSTATS_HEADER} V={}", stats.vocab_size())?;
    for e in stats.entries() {
        writeln!(out, "{}\t{}\t{}\t{}", e.w, e.v, e.n_pos, e.n_neg)?;
    }
    Ok(())
}

pub fn read_pair_stats<R: BufRead>(input: R) -> Result<PairStats> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return format_err("empty pairstats file"),
    };
    let rest = match header.trim_end().strip_prefix(PAIRSTATS_HEADER) {
        Some(r) => r,
        None => return format_err(format!("bad pairstats header {header:?}")),
    };
    let mut vocab_size = None;
    for field in rest.split_whitespace() {
        if let Some(v) = field.strip_prefix("V=") {
            vocab_size = v.parse::<usize>().ok();
        }
    }
    let vocab_size = match vocab_size {
        Some(v) if v > 0 => v,
        _ => return format_err("pairstats header lacks a positive V=<V>"),
    };
    let mut entries = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return format_err(format!("line {}: expected 4 tab-separated fields", lineno + 2));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::Format(format!("line {}: bad integer {s:?}", lineno + 2)))
        };
        entries.push(PairCount {
            w: parse(fields[0])? as usize,
            v: parse(fields[1])? as usize,
            n_pos: parse(fields[2])?,
            n_neg: parse(fields[3])?,
        });
    }
    PairStats::new(vocab_size, 0, entries)
}

pub fn save_pair_stats(stats: &PairStats, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_pair_stats(stats, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_pair_stats(path: &Path) -> Result<PairStats> {
    read_pair_stats(BufReader::new(File::open(path)?))
}

pub fn write_embedding<W: Write>(theta: &EmbeddingState, mut out: W) -> Result<()> {
    out.write_all(EMBEDDING_MAGIC)?;
    out.write_all(&(theta.vocab_size() as u32).to_le_bytes())?;
    out.write_all(&(theta.dim() as u32).to_le_bytes())?;
    for x in theta.rho().iter().chain(theta.alpha()) {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Reads one record; `Ok(None)` on a clean end of stream.
pub fn read_embedding<R: Read>(mut input: R) -> Result<Option<EmbeddingState>> {
    let mut magic = [0u8; 4];
    match read_exact_or_eof(&mut input, &mut magic)? {
        false => return Ok(None),
        true if &magic != EMBEDDING_MAGIC => return format_err("bad embedding magic"),
        true => {}
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let v = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let k = u32::from_le_bytes(word) as usize;
    let mut buf = vec![0u8; 2 * v * k * 8];
    input.read_exact(&mut buf)?;
    let values: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let (rho, alpha) = values.split_at(v * k);
    EmbeddingState::new(v, k, rho.to_vec(), alpha.to_vec()).map(Some)
}

fn read_exact_or_eof<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = input.read(&mut buf[filled..])?;
        if n == 0 {
            return if filled == 0 { Ok(false) } else { format_err("truncated record") };
        }
        filled += n;
    }
    Ok(true)
}

pub fn save_embedding(theta: &EmbeddingState, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_embedding(theta, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_embedding(path: &Path) -> Result<EmbeddingState> {
    match read_embedding(BufReader::new(File::open(path)?))? {
        Some(theta) => Ok(theta),
        None => format_err(format!("{} is empty", path.display())),
    }
}

/// `meta.json` of a draw store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawStoreMeta {
    #[serde(rename = "V")]
    pub vocab_size: usize,
    #[serde(rename = "K")]
    pub dim: usize,
    pub seed: u64,
    pub burn_in: usize,
    /// Inner Polya-Gamma steps; absent for non-Gibbs draws.
    #[serde(rename = "S")]
    pub inner_steps: Option<usize>,
    pub constraint_ids: Option<Vec<usize>>,
    #[serde(rename = "M")]
    pub constraint_matrix: Option<Vec<Vec<f64>>>,
    pub num_draws: usize,
    #[serde(default)]
    pub method: Option<String>,
}

pub const DRAWS_FILE: &str = "draws.bin";
pub const META_FILE: &str = "meta.json";

pub fn save_draw_store(
    draws: &PosteriorDraws,
    inner_steps: Option<usize>,
    method: &str,
    dir: &Path,
) -> Result<()> {
    let (v, k) = match draws.shape() {
        Some(s) => s,
        None => return Err(Error::InvalidInput("cannot store an empty draw set".into())),
    };
    fs::create_dir_all(dir)?;
    let meta = DrawStoreMeta {
        vocab_size: v,
        dim: k,
        seed: draws.seed(),
        burn_in: draws.burn_in(),
        inner_steps,
        constraint_ids: draws.constraint().map(|c| c.indices().to_vec()),
        constraint_matrix: draws.constraint().map(IdentificationConstraint::matrix_rows),
        num_draws: draws.len(),
        method: Some(method.to_string()),
    };
    fs::write(dir.join(META_FILE), serde_json::to_string_pretty(&meta)? + "\n")?;
    let mut out = BufWriter::new(File::create(dir.join(DRAWS_FILE))?);
    for d in draws.draws() {
        write_embedding(d, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_draw_store(dir: &Path) -> Result<(PosteriorDraws, DrawStoreMeta)> {
    let meta: DrawStoreMeta = serde_json::from_str(&fs::read_to_string(dir.join(META_FILE))?)?;
    let mut input = BufReader::new(File::open(dir.join(DRAWS_FILE))?);
    let mut draws = Vec::with_capacity(meta.num_draws);
    while let Some(d) = read_embedding(&mut input)? {
        if d.vocab_size() != meta.vocab_size || d.dim() != meta.dim {
            return format_err("draw shape disagrees with meta.json");
        }
        draws.push(d);
    }
    if draws.len() != meta.num_draws {
        return format_err(format!(
            "meta.json lists {} draws but {} were read",
            meta.num_draws,
            draws.len()
        ));
    }
    let constraint = match (&meta.constraint_ids, &meta.constraint_matrix) {
        (Some(ids), Some(m)) => Some(IdentificationConstraint::new(ids.clone(), m.concat())?),
        (None, None) => None,
        _ => return format_err("constraint ids and matrix must be given together"),
    };
    Ok((PosteriorDraws::new(draws, meta.burn_in, meta.seed, constraint)?, meta))
}
