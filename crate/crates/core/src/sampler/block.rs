use std::io::{Read, Write};

use crate::error::{Error, FormatError, Result};
use crate::graph::{CscGraph, NodeId};
use crate::io::{
    expect_eof, read_csc_section, read_index_vec, read_magic, read_u64, read_u8, read_version,
    write_csc_section, IndexWidth, FORMAT_VERSION,
};

pub const BLOCK_MAGIC: [u8; 4] = *b"FSMB";

/// One bipartite message-flow level.
///
/// Row `i` of `block` is destination `dst_globals[i]`; its entries are local
/// indices into `src_globals`. When `include_dst` is set the destinations
/// occupy the first `dst_globals.len()` source slots, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MfgBlock {
    pub dst_globals: Vec<NodeId>,
    pub src_globals: Vec<NodeId>,
    pub block: CscGraph,
    pub include_dst: bool,
}

impl MfgBlock {
    pub fn empty(include_dst: bool) -> Self {
        Self {
            dst_globals: Vec::new(),
            src_globals: Vec::new(),
            block: CscGraph::empty(0),
            include_dst,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.block.nnz()
    }

    /// Sampled edges as global `(src, dst)` pairs, in stored order.
    pub fn global_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.block.num_rows()).flat_map(move |i| {
            let dst = self.dst_globals[i];
            self.block
                .row(i)
                .iter()
                .map(move |&s| (self.src_globals[s as usize], dst))
        })
    }

    /// Global sources sampled for row `i`.
    pub fn row_globals(&self, i: usize) -> impl Iterator<Item = NodeId> + '_ {
        self.block
            .row(i)
            .iter()
            .map(move |&s| self.src_globals[s as usize])
    }
}

/// An L-level sample: `blocks[0]` holds the batch seeds as destinations,
/// and each block's sources are the next block's destinations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniBatchSample {
    pub blocks: Vec<MfgBlock>,
    /// Nodes whose input features the sample needs (sources of the deepest block).
    pub input_nodes: Vec<NodeId>,
}

impl MiniBatchSample {
    pub fn seeds(&self) -> &[NodeId] {
        self.blocks.first().map_or(&[], |b| &b.dst_globals)
    }

    pub fn num_edges(&self) -> usize {
        self.blocks.iter().map(MfgBlock::num_edges).sum()
    }
}

/// Serializes a block: `FSMB`, version, `u8` include_dst, `u64` dst count,
/// `u64` src count, both id vectors as `u64`, then the local CSC as a graph
/// section.
pub fn write_block<W: Write>(w: &mut W, b: &MfgBlock) -> Result<()> {
    w.write_all(&BLOCK_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[b.include_dst as u8])?;
    w.write_all(&(b.dst_globals.len() as u64).to_le_bytes())?;
    w.write_all(&(b.src_globals.len() as u64).to_le_bytes())?;
    for v in b.dst_globals.iter().chain(&b.src_globals) {
        w.write_all(&v.to_le_bytes())?;
    }
    write_csc_section(w, &b.block, IndexWidth::fitting(&b.block))
}

pub fn read_block<R: Read>(r: &mut R) -> Result<MfgBlock> {
    read_magic(r, BLOCK_MAGIC)?;
    read_version(r)?;
    let include_dst = match read_u8(r, "include_dst flag")? {
        0 => false,
        1 => true,
        x => return Err(FormatError::Invalid(format!("include_dst flag {x}")).into()),
    };
    let n_dst = read_u64(r, "dst count")?;
    let n_src = read_u64(r, "src count")?;
    let dst_globals = read_index_vec(r, n_dst, IndexWidth::U64, "dst ids")?;
    let src_globals = read_index_vec(r, n_src, IndexWidth::U64, "src ids")?;
    let (indptr, indices) = read_csc_section(r)?;
    expect_eof(r)?;
    if indptr.len() - 1 != dst_globals.len() {
        return Err(FormatError::Invalid("block rows differ from dst count".into()).into());
    }
    let block = CscGraph::bipartite(dst_globals.len(), src_globals.len(), indptr, indices)
        .map_err(|e| match e {
            Error::Malformed(m) => Error::Format(FormatError::Invalid(m)),
            other => other,
        })?;
    Ok(MfgBlock {
        dst_globals,
        src_globals,
        block,
        include_dst,
    })
}
