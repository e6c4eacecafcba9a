//! Checkpoint format and interoperable text export.
//!
//! Checkpoints are fully pinned: magic `MWE1`, little-endian, header
//! integers as unsigned 64-bit, parameters as 64-bit floats in declared
//! tensor order, so identical runs produce identical bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{word_vector, Combiner, VectorSource};
use crate::model::{param_count, Mat, ModelParams, Role};
use crate::num::Scalar;
use crate::vocab::{RelationRegistry, Vocabulary};
use crate::Model64;

pub const MAGIC: [u8; 4] = *b"MWE1";
pub const VERSION: u64 = 1;

/// A loaded checkpoint: parameters plus the vocabulary and relation
/// registry they were trained against, and the run provenance.
#[derive(Debug)]
pub struct Checkpoint {
    pub params: Model64,
    pub vocab: Vocabulary,
    pub rels: RelationRegistry,
    pub epoch: u64,
    pub seed: u64,
}

/// Exact on-disk size of a checkpoint for these contents.
pub fn expected_bytes(vocab: &Vocabulary, rels: &RelationRegistry, d: u64, s: u64) -> u64 {
    let header = 4 + 9 * 8;
    let vocab_bytes: u64 = (0..vocab.n())
        .map(|i| 8 + vocab.word(i).unwrap().len() as u64 + 8)
        .sum();
    let rel_bytes: u64 = rels.names().map(|n| 8 + n.len() as u64).sum();
    header
        + vocab_bytes
        + rel_bytes
        + 8 * param_count(vocab.n() as u64, rels.m() as u64, d, s)
}

pub fn save_checkpoint<F: Scalar>(
    params: &ModelParams<F>,
    vocab: &Vocabulary,
    rels: &RelationRegistry,
    epoch: u64,
    seed: u64,
    path: &Path,
) -> Result<()> {
    if vocab.n() != params.n() || rels.m() != params.m() {
        return Err(Error::InvalidInput(format!(
            "model is {}x{} but vocabulary/registry are {}x{}",
            params.n(),
            params.m(),
            vocab.n(),
            rels.m()
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);

    w.write_all(&MAGIC).map_err(io)?;
    for v in [
        VERSION,
        params.n() as u64,
        params.m() as u64,
        params.d() as u64,
        params.s() as u64,
    ] {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.write_all(&params.drift().as_f64().to_le_bytes()).map_err(io)?;
    w.write_all(&params.scale_k().as_f64().to_le_bytes()).map_err(io)?;
    w.write_all(&epoch.to_le_bytes()).map_err(io)?;
    w.write_all(&seed.to_le_bytes()).map_err(io)?;

    for i in 0..vocab.n() {
        let word = vocab.word(i).unwrap().as_bytes();
        w.write_all(&(word.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(word).map_err(io)?;
        w.write_all(&vocab.freq(i).to_le_bytes()).map_err(io)?;
    }
    for name in rels.names() {
        w.write_all(&(name.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(name.as_bytes()).map_err(io)?;
    }

    let mut write_mat = |m: &Mat<F>| -> Result<()> {
        for v in m.values() {
            w.write_all(&v.as_f64().to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    };
    write_mat(params.center(Role::Head))?;
    write_mat(params.center(Role::Tail))?;
    for r in 0..params.m() {
        write_mat(params.local(Role::Head, r))?;
    }
    for r in 0..params.m() {
        write_mat(params.local(Role::Tail, r))?;
    }
    for r in 0..params.m() {
        write_mat(params.xform(Role::Head, r))?;
    }
    for r in 0..params.m() {
        write_mat(params.xform(Role::Tail, r))?;
    }

    let file = w.into_inner().map_err(|e| Error::io(path, e.into()))?;
    file.sync_all().map_err(io)?;
    Ok(())
}

struct Reader<R> {
    inner: R,
    remaining: u64,
}

impl<R: Read> Reader<R> {
    fn read_exact(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        if (buf.len() as u64) > self.remaining {
            return Err(Error::Truncated(format!(
                "{what}: need {} bytes, {} left",
                buf.len(),
                self.remaining
            )));
        }
        self.inner
            .read_exact(buf)
            .map_err(|e| Error::Truncated(format!("{what}: {e}")))?;
        self.remaining -= buf.len() as u64;
        Ok(())
    }

    fn read_u64(&mut self, what: &str) -> Result<u64> {
        let mut buf = [0u8; 8];
        self.read_exact(&mut buf, what)?;
        Ok(u64::from_le_bytes(buf))
    }

    fn read_f64(&mut self, what: &str) -> Result<f64> {
        let mut buf = [0u8; 8];
        self.read_exact(&mut buf, what)?;
        Ok(f64::from_le_bytes(buf))
    }

    fn read_string(&mut self, what: &str) -> Result<String> {
        let len = self.read_u64(what)?;
        if len > self.remaining {
            return Err(Error::Truncated(format!(
                "{what}: string of {len} bytes exceeds remaining {}",
                self.remaining
            )));
        }
        let mut buf = vec![0u8; len as usize];
        self.read_exact(&mut buf, what)?;
        String::from_utf8(buf).map_err(|_| Error::InvalidInput(format!("{what}: invalid UTF-8")))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut r = Reader {
        inner: BufReader::new(file),
        remaining: len,
    };

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.read_u64("version")?;
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let n = r.read_u64("n")? as usize;
    let m = r.read_u64("m")? as usize;
    let d = r.read_u64("d")? as usize;
    let s = r.read_u64("s")? as usize;
    let drift = r.read_f64("drift range")?;
    let scale_k = r.read_f64("scaling parameter")?;
    let epoch = r.read_u64("epoch")?;
    let seed = r.read_u64("seed")?;

    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let word = r.read_string(&format!("vocab word {i}"))?;
        let freq = r.read_u64(&format!("vocab freq {i}"))?;
        entries.push((word, freq));
    }
    let vocab = Vocabulary::from_entries(entries);
    if !vocab.is_bijective() {
        return Err(Error::InvalidInput("duplicate word in checkpoint vocabulary".into()));
    }
    let mut names = Vec::with_capacity(m);
    for i in 0..m {
        names.push(r.read_string(&format!("relation {i}"))?);
    }
    let rels = RelationRegistry::from_names(names);
    if rels.m() != m {
        return Err(Error::InvalidInput("duplicate relation names in checkpoint".into()));
    }

    let mut params = Model64::zeros(n, m, d, s, drift, scale_k)?;
    {
        let mut read_mat = |mat: &mut Mat<f64>, what: &str| -> Result<()> {
            for v in mat.values_mut() {
                let mut buf = [0u8; 8];
                if r.remaining < 8 {
                    return Err(Error::Truncated(format!(
                        "{what}: need 8 bytes, {} left",
                        r.remaining
                    )));
                }
                r.inner
                    .read_exact(&mut buf)
                    .map_err(|e| Error::Truncated(format!("{what}: {e}")))?;
                r.remaining -= 8;
                *v = f64::from_le_bytes(buf);
            }
            Ok(())
        };
        read_mat(params.center_mut(Role::Head), "head centers")?;
        read_mat(params.center_mut(Role::Tail), "tail centers")?;
        for rel in 0..m {
            read_mat(params.local_mut(Role::Head, rel), "head locals")?;
        }
        for rel in 0..m {
            read_mat(params.local_mut(Role::Tail, rel), "tail locals")?;
        }
        for rel in 0..m {
            read_mat(params.xform_mut(Role::Head, rel), "head transforms")?;
        }
        for rel in 0..m {
            read_mat(params.xform_mut(Role::Tail, rel), "tail transforms")?;
        }
    }
    if r.remaining != 0 {
        return Err(Error::InvalidInput(format!(
            "{} trailing bytes after the last tensor",
            r.remaining
        )));
    }

    Ok(Checkpoint {
        params,
        vocab,
        rels,
        epoch,
        seed,
    })
}

/// Writes vectors as text: a `<rows> <dim>` header line, then one
/// `token v1 .. vdim` line per word with 6-decimal fixed formatting.
/// Center exports use the bare word as token; relational exports use
/// `word@<relation>`.
pub fn export_text<F: Scalar>(
    params: &ModelParams<F>,
    vocab: &Vocabulary,
    rels: &RelationRegistry,
    source: VectorSource,
    combiner: Combiner,
    path: &Path,
) -> Result<()> {
    if vocab.n() != params.n() {
        return Err(Error::InvalidInput(
            "vocabulary size does not match the model".into(),
        ));
    }
    let suffix = match source {
        VectorSource::Center => None,
        VectorSource::Relation(r) => Some(
            rels.name(r)
                .ok_or(Error::RelationIdOutOfRange { id: r, m: rels.m() })?
                .to_string(),
        ),
    };
    let dim = match combiner {
        Combiner::Concat => 2 * params.d(),
        _ => params.d(),
    };

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {}", vocab.n(), dim).map_err(io)?;
    for i in 0..vocab.n() {
        let word = vocab.word(i).unwrap();
        match &suffix {
            None => write!(w, "{word}").map_err(io)?,
            Some(rel) => write!(w, "{word}@{rel}").map_err(io)?,
        }
        for v in word_vector(params, i, source, combiner)? {
            write!(w, " {v:.6}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}
