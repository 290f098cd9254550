//! Binary model file: magic, version, a JSON header with the architecture,
//! the vocabularies, and every named parameter tensor. All integers and
//! reals are little-endian; strings are u32-length-prefixed UTF-8.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnRoles, SymbolTable, Vocab};
use crate::error::{Error, Result};
use crate::train::{assemble, Model, ModelSpec};

pub const MAGIC: &[u8; 8] = b"EDGECRF1";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    columns: String,
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    let n = u32::try_from(s.len()).map_err(|_| Error::Format("string too long".into()))?;
    put_u32(w, n)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("model file is truncated".into())
    } else {
        Error::Io(e)
    }
}

fn get_bytes<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(b)
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(get_bytes(r)?))
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(get_bytes(r)?))
}

fn get_str<R: Read>(r: &mut R) -> Result<String> {
    let n = get_u32(r)? as usize;
    let mut buf = Vec::new();
    r.by_ref().take(n as u64).read_to_end(&mut buf)?;
    if buf.len() != n {
        return Err(Error::Format("model file is truncated".into()));
    }
    String::from_utf8(buf).map_err(|_| Error::Format("string is not valid UTF-8".into()))
}

fn vocab_tables(v: &Vocab) -> [&SymbolTable; 6] {
    [&v.words, &v.suffix1, &v.suffix2, &v.pos, &v.labels, &v.bigrams]
}

pub fn write_model<W: Write>(w: &mut W, model: &Model, columns: &ColumnRoles) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    let header = Header {
        spec: model.spec().clone(),
        columns: columns.to_string(),
    };
    put_str(
        w,
        &serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?,
    )?;
    for t in vocab_tables(model.vocab()) {
        w.write_all(&[t.is_reserved() as u8])?;
        put_u32(w, t.len() as u32)?;
        for s in t.symbols() {
            put_str(w, s)?;
        }
    }
    let store = &model.store;
    put_u32(w, store.len() as u32)?;
    for id in store.ids() {
        let info = store.info(id);
        put_str(w, &info.name)?;
        put_u64(w, info.rows as u64)?;
        put_u64(w, info.cols as u64)?;
        let mut buf = Vec::with_capacity(8 * info.len());
        for v in store.value(id) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_model<R: Read>(r: &mut R) -> Result<(Model, ColumnRoles)> {
    let magic: [u8; 8] = get_bytes(r)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported model format version {version} (this build reads version {VERSION})"
        )));
    }
    let header: Header =
        serde_json::from_str(&get_str(r)?).map_err(|e| Error::Format(format!("bad model header: {e}")))?;
    let columns: ColumnRoles = header.columns.parse()?;
    let mut tables = Vec::with_capacity(6);
    for _ in 0..6 {
        let [reserved] = get_bytes::<_, 1>(r)?;
        let n = get_u32(r)? as usize;
        let symbols = (0..n).map(|_| get_str(r)).collect::<Result<Vec<_>>>()?;
        tables.push(SymbolTable::from_symbols(symbols, reserved != 0)?);
    }
    let mut it = tables.into_iter();
    let mut next = || it.next().expect("six tables");
    let vocab = Vocab {
        words: next(),
        suffix1: next(),
        suffix2: next(),
        pos: next(),
        labels: next(),
        bigrams: next(),
    };
    let mut model = assemble(header.spec, vocab, 0)?;
    let count = get_u32(r)? as usize;
    if count != model.store.len() {
        return Err(Error::Format(format!(
            "model file has {count} parameter slots, architecture expects {}",
            model.store.len()
        )));
    }
    for _ in 0..count {
        let name = get_str(r)?;
        let rows = get_u64(r)? as usize;
        let cols = get_u64(r)? as usize;
        let id = model
            .store
            .id(&name)
            .ok_or_else(|| Error::Format(format!("unexpected parameter slot {name:?}")))?;
        let info = model.store.info(id);
        if (info.rows, info.cols) != (rows, cols) {
            return Err(Error::Format(format!(
                "slot {name:?} is {rows}x{cols} in the file but {}x{} in the architecture",
                info.rows, info.cols
            )));
        }
        let mut buf = vec![0u8; 8 * rows * cols];
        r.read_exact(&mut buf).map_err(truncated)?;
        for (v, b) in model.store.value_mut(id).iter_mut().zip(buf.chunks_exact(8)) {
            *v = f64::from_le_bytes(b.try_into().expect("8 bytes"));
        }
    }
    Ok((model, columns))
}

pub fn save_model(path: &Path, model: &Model, columns: &ColumnRoles) -> Result<()> {
    let f =
        File::create(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut w = BufWriter::new(f);
    write_model(&mut w, model, columns)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(Model, ColumnRoles)> {
    let f =
        File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_model(&mut BufReader::new(f))
}
