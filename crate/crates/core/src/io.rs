//! Binary and text file formats.
//!
//! All binary formats are little-endian and start with a 4-byte magic and a
//! `u32` version.
//!
//! Graph (`FSGR`): version, `u8` index width (4 or 8), `u64` num_nodes,
//! `u64` nnz, then `indptr` (`num_nodes + 1` entries) and `indices` (`nnz`
//! entries), each entry `width` bytes.
//!
//! Features (`FSFT`): version, `u64` num_nodes, `u32` dim, `u8` dtype
//! (0 = f32), then the row-major payload.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::features::{FeatureMatrix, LabelSet};
use crate::graph::{CooGraph, CscGraph, NodeId};

pub const GRAPH_MAGIC: [u8; 4] = *b"FSGR";
pub const FEATURE_MAGIC: [u8; 4] = *b"FSFT";
pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0;

const CHUNK_ELEMS: usize = 1 << 16;

/// On-disk width of node ids and edge offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexWidth {
    U32,
    U64,
}

impl IndexWidth {
    pub fn bytes(self) -> usize {
        match self {
            IndexWidth::U32 => 4,
            IndexWidth::U64 => 8,
        }
    }

    pub fn from_bytes(bytes: u8) -> Result<Self, FormatError> {
        match bytes {
            4 => Ok(IndexWidth::U32),
            8 => Ok(IndexWidth::U64),
            other => Err(FormatError::Invalid(format!(
                "index width {other} is not 4 or 8"
            ))),
        }
    }

    /// Narrowest width that can hold every offset and id of `g`.
    pub fn fitting(g: &CscGraph) -> Self {
        let max = g.nnz().max(g.num_src()) as u64;
        if max <= u32::MAX as u64 {
            IndexWidth::U32
        } else {
            IndexWidth::U64
        }
    }
}

pub(crate) fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Format(FormatError::Truncated { what }),
        _ => Error::Io(e),
    })
}

pub(crate) fn read_magic<R: Read>(r: &mut R, expected: [u8; 4]) -> Result<()> {
    let mut found = [0u8; 4];
    read_exact(r, &mut found, "magic")?;
    if found != expected {
        return Err(FormatError::BadMagic { expected, found }.into());
    }
    Ok(())
}

pub(crate) fn read_u8<R: Read>(r: &mut R, what: &'static str) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b, what)?;
    Ok(b[0])
}

pub(crate) fn read_u32<R: Read>(r: &mut R, what: &'static str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R, what: &'static str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_version<R: Read>(r: &mut R) -> Result<()> {
    let found = read_u32(r, "version")?;
    if found != FORMAT_VERSION {
        return Err(FormatError::VersionMismatch {
            expected: FORMAT_VERSION,
            found,
        }
        .into());
    }
    Ok(())
}

/// Reads `count` integers of the given width, chunk by chunk so a corrupt
/// header cannot trigger one giant allocation before the payload runs out.
pub(crate) fn read_index_vec<R: Read>(
    r: &mut R,
    count: u64,
    width: IndexWidth,
    what: &'static str,
) -> Result<Vec<u64>> {
    let w = width.bytes();
    let mut out = Vec::with_capacity((count as usize).min(CHUNK_ELEMS));
    let mut buf = vec![0u8; CHUNK_ELEMS.min(count as usize).max(1) * w];
    let mut remaining = count as usize;
    while remaining > 0 {
        let take = remaining.min(CHUNK_ELEMS);
        let bytes = &mut buf[..take * w];
        read_exact(r, bytes, what)?;
        match width {
            IndexWidth::U32 => out.extend(
                bytes
                    .chunks_exact(4)
                    .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as u64),
            ),
            IndexWidth::U64 => out.extend(
                bytes
                    .chunks_exact(8)
                    .map(|c| u64::from_le_bytes(c.try_into().unwrap())),
            ),
        }
        remaining -= take;
    }
    Ok(out)
}

pub(crate) fn write_index_iter<W: Write>(
    w: &mut W,
    values: impl Iterator<Item = u64>,
    width: IndexWidth,
) -> Result<()> {
    for v in values {
        match width {
            IndexWidth::U32 => {
                let v = u32::try_from(v).map_err(|_| {
                    Error::Parameter(format!("value {v} does not fit a 4-byte index"))
                })?;
                w.write_all(&v.to_le_bytes())?;
            }
            IndexWidth::U64 => w.write_all(&v.to_le_bytes())?,
        }
    }
    Ok(())
}

pub(crate) fn expect_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut b = [0u8; 1];
    loop {
        match r.read(&mut b) {
            Ok(0) => return Ok(()),
            Ok(_) => return Err(FormatError::TrailingData.into()),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        }
    }
}

/// Graph section without the square-ness check; rows and raw indices.
pub(crate) fn read_csc_section<R: Read>(r: &mut R) -> Result<(Vec<usize>, Vec<NodeId>)> {
    read_magic(r, GRAPH_MAGIC)?;
    read_version(r)?;
    let width = IndexWidth::from_bytes(read_u8(r, "index width")?)?;
    let num_nodes = read_u64(r, "num_nodes")?;
    let nnz = read_u64(r, "nnz")?;
    let indptr = read_index_vec(r, num_nodes + 1, width, "row pointers")?;
    let indices = read_index_vec(r, nnz, width, "column indices")?;
    Ok((indptr.into_iter().map(|x| x as usize).collect(), indices))
}

pub(crate) fn write_csc_section<W: Write>(
    w: &mut W,
    g: &CscGraph,
    width: IndexWidth,
) -> Result<()> {
    w.write_all(&GRAPH_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[width.bytes() as u8])?;
    w.write_all(&(g.num_rows() as u64).to_le_bytes())?;
    w.write_all(&(g.nnz() as u64).to_le_bytes())?;
    write_index_iter(w, g.indptr().iter().map(|&x| x as u64), width)?;
    write_index_iter(w, g.indices().iter().copied(), width)?;
    Ok(())
}

pub fn write_graph<W: Write>(w: &mut W, g: &CscGraph, width: IndexWidth) -> Result<()> {
    if !g.is_square() {
        return Err(Error::Parameter(
            "graph files hold square graphs only".into(),
        ));
    }
    write_csc_section(w, g, width)
}

pub fn read_graph<R: Read>(r: &mut R) -> Result<CscGraph> {
    let (indptr, indices) = read_csc_section(r)?;
    expect_eof(r)?;
    let n = indptr.len() - 1;
    CscGraph::new(n, indptr, indices).map_err(|e| FormatError::Invalid(e.to_string()).into())
}

pub fn save_graph(path: impl AsRef<Path>, g: &CscGraph, width: IndexWidth) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_graph(&mut w, g, width)?;
    w.flush()?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<CscGraph> {
    read_graph(&mut BufReader::new(File::open(path)?))
}

pub fn write_features<W: Write>(w: &mut W, f: &FeatureMatrix) -> Result<()> {
    let dim =
        u32::try_from(f.dim()).map_err(|_| Error::Parameter("feature dim exceeds u32".into()))?;
    w.write_all(&FEATURE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(f.num_nodes() as u64).to_le_bytes())?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&[DTYPE_F32])?;
    for x in f.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_features<R: Read>(r: &mut R) -> Result<FeatureMatrix> {
    read_magic(r, FEATURE_MAGIC)?;
    read_version(r)?;
    let num_nodes = read_u64(r, "num_nodes")? as usize;
    let dim = read_u32(r, "dim")? as usize;
    let dtype = read_u8(r, "dtype")?;
    if dtype != DTYPE_F32 {
        return Err(FormatError::Invalid(format!("unsupported dtype code {dtype}")).into());
    }
    let total = num_nodes
        .checked_mul(dim)
        .ok_or_else(|| FormatError::Invalid("feature shape overflows".into()))?;
    let mut data = Vec::with_capacity(total.min(CHUNK_ELEMS));
    let mut buf = vec![0u8; total.min(CHUNK_ELEMS).max(1) * 4];
    let mut remaining = total;
    while remaining > 0 {
        let take = remaining.min(CHUNK_ELEMS);
        let bytes = &mut buf[..take * 4];
        read_exact(r, bytes, "feature payload")?;
        data.extend(
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap())),
        );
        remaining -= take;
    }
    expect_eof(r)?;
    FeatureMatrix::new(num_nodes, dim, data)
}

pub fn save_features(path: impl AsRef<Path>, f: &FeatureMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_features(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    read_features(&mut BufReader::new(File::open(path)?))
}

fn data_lines<R: BufRead>(r: R) -> impl Iterator<Item = Result<(usize, String)>> {
    r.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(Error::Io(e))),
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, t.to_string())))
            }
        }
    })
}

fn parse_id(tok: Option<&str>, line: usize, what: &str) -> Result<NodeId> {
    let tok = tok.ok_or_else(|| FormatError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| {
        FormatError::Parse {
            line,
            msg: format!("bad {what} {tok:?}"),
        }
        .into()
    })
}

/// Parses `src dst` lines. The node count is `num_nodes` when given,
/// otherwise one past the largest id seen.
pub fn read_edgelist_text<R: BufRead>(r: R, num_nodes: Option<usize>) -> Result<CooGraph> {
    let mut dst = Vec::new();
    let mut src = Vec::new();
    for item in data_lines(r) {
        let (line, text) = item?;
        let mut toks = text.split_whitespace();
        let s = parse_id(toks.next(), line, "source")?;
        let d = parse_id(toks.next(), line, "destination")?;
        if toks.next().is_some() {
            return Err(FormatError::Parse {
                line,
                msg: "expected exactly two columns".into(),
            }
            .into());
        }
        src.push(s);
        dst.push(d);
    }
    let inferred = dst.iter().chain(&src).max().map_or(0, |&m| m as usize + 1);
    let n = match num_nodes {
        Some(n) if n < inferred => {
            return Err(FormatError::Invalid(format!(
                "edge list references node {} but num_nodes is {n}",
                inferred - 1
            ))
            .into())
        }
        Some(n) => n,
        None => inferred,
    };
    CooGraph::new(n, dst, src)
}

pub fn write_edgelist_text<W: Write>(w: &mut W, g: &CooGraph) -> Result<()> {
    for (s, d) in g.edges() {
        writeln!(w, "{s} {d}")?;
    }
    Ok(())
}

/// One node id per line, any order; duplicates collapse.
pub fn read_labels<R: BufRead>(r: R, num_nodes: usize) -> Result<LabelSet> {
    let mut nodes = Vec::new();
    for item in data_lines(r) {
        let (line, text) = item?;
        nodes.push(parse_id(Some(text.as_str()), line, "node id")?);
    }
    LabelSet::from_unsorted(nodes, num_nodes)
        .map_err(|e| FormatError::Invalid(e.to_string()).into())
}

pub fn write_labels<W: Write>(w: &mut W, labels: &LabelSet) -> Result<()> {
    for v in labels.nodes() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn load_labels(path: impl AsRef<Path>, num_nodes: usize) -> Result<LabelSet> {
    read_labels(BufReader::new(File::open(path)?), num_nodes)
}

pub fn save_labels(path: impl AsRef<Path>, labels: &LabelSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_labels(&mut w, labels)?;
    w.flush()?;
    Ok(())
}
