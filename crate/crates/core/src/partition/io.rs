//! Partition map files.
//!
//! Text: one `node_id machine_id` pair per line, every node exactly once.
//! Binary (`FSPM`): version, `u64` num_nodes, `u32` P, then one `u32`
//! machine id per node.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{MachineId, PartitionMap};
use crate::error::{FormatError, Result};
use crate::io::{
    expect_eof, read_exact, read_magic, read_u32, read_u64, read_version, FORMAT_VERSION,
};

pub const PARTITION_MAGIC: [u8; 4] = *b"FSPM";

fn parse_err(line: usize, msg: impl Into<String>) -> crate::error::Error {
    FormatError::Parse {
        line,
        msg: msg.into(),
    }
    .into()
}

/// Parses the text form. With `num_parts = None`, P is one past the largest
/// machine id.
pub fn read_partition_map_text<R: BufRead>(
    r: R,
    num_nodes: usize,
    num_parts: Option<u32>,
) -> Result<PartitionMap> {
    let mut assignment = vec![MachineId::MAX; num_nodes];
    let mut max_machine = 0;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let mut toks = t.split_whitespace();
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(parse_err(lineno, "expected `node_id machine_id`"));
        };
        let v: usize = a
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad node id {a:?}")))?;
        let m: MachineId = b
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad machine id {b:?}")))?;
        if v >= num_nodes {
            return Err(
                FormatError::Invalid(format!("node {v} exceeds graph size {num_nodes}")).into(),
            );
        }
        if let Some(p) = num_parts {
            if m >= p {
                return Err(FormatError::Invalid(format!(
                    "node {v} assigned to machine {m} but P = {p}"
                ))
                .into());
            }
        }
        if m == MachineId::MAX {
            return Err(parse_err(lineno, "machine id out of range"));
        }
        if assignment[v] != MachineId::MAX {
            return Err(FormatError::Invalid(format!("node {v} assigned twice")).into());
        }
        assignment[v] = m;
        max_machine = max_machine.max(m);
    }
    if let Some(v) = assignment.iter().position(|&m| m == MachineId::MAX) {
        return Err(FormatError::Invalid(format!("node {v} has no assignment")).into());
    }
    let p = num_parts.unwrap_or(if num_nodes == 0 { 1 } else { max_machine + 1 });
    PartitionMap::new(assignment, p).map_err(|e| FormatError::Invalid(e.to_string()).into())
}

pub fn write_partition_map_text<W: Write>(w: &mut W, pmap: &PartitionMap) -> Result<()> {
    for (v, m) in pmap.assignment().iter().enumerate() {
        writeln!(w, "{v} {m}")?;
    }
    Ok(())
}

pub fn write_partition_map_binary<W: Write>(w: &mut W, pmap: &PartitionMap) -> Result<()> {
    w.write_all(&PARTITION_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(pmap.num_nodes() as u64).to_le_bytes())?;
    w.write_all(&pmap.num_parts().to_le_bytes())?;
    for m in pmap.assignment() {
        w.write_all(&m.to_le_bytes())?;
    }
    Ok(())
}

/// Reads the binary form; `expected_nodes` guards against a map built for
/// a different graph.
pub fn read_partition_map_binary<R: Read>(
    r: &mut R,
    expected_nodes: Option<usize>,
) -> Result<PartitionMap> {
    read_magic(r, PARTITION_MAGIC)?;
    read_version(r)?;
    let n = read_u64(r, "num_nodes")? as usize;
    if let Some(expected) = expected_nodes {
        if n != expected {
            return Err(FormatError::Invalid(format!(
                "map covers {n} nodes, graph has {expected}"
            ))
            .into());
        }
    }
    let p = read_u32(r, "machine count")?;
    let mut assignment = Vec::with_capacity(n.min(1 << 20));
    let mut buf = [0u8; 4];
    for _ in 0..n {
        read_exact(r, &mut buf, "assignment")?;
        assignment.push(u32::from_le_bytes(buf));
    }
    expect_eof(r)?;
    PartitionMap::new(assignment, p).map_err(|e| FormatError::Invalid(e.to_string()).into())
}

/// Loads either form, sniffing the binary magic.
pub fn load_partition_map(
    path: impl AsRef<Path>,
    num_nodes: usize,
    num_parts: Option<u32>,
) -> Result<PartitionMap> {
    let mut r = BufReader::new(File::open(path)?);
    let is_binary = r.fill_buf()?.starts_with(&PARTITION_MAGIC);
    let pmap = if is_binary {
        read_partition_map_binary(&mut r, Some(num_nodes))?
    } else {
        read_partition_map_text(r, num_nodes, num_parts)?
    };
    if let Some(p) = num_parts {
        if pmap.num_parts() != p {
            return Err(FormatError::Invalid(format!(
                "map has {} machines, expected {p}",
                pmap.num_parts()
            ))
            .into());
        }
    }
    Ok(pmap)
}

pub fn save_partition_map(path: impl AsRef<Path>, pmap: &PartitionMap, binary: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if binary {
        write_partition_map_binary(&mut w, pmap)?;
    } else {
        write_partition_map_text(&mut w, pmap)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::partition::partition_hash;
    use proptest::prelude::*;

    #[test]
    fn text_example() {
        let p = read_partition_map_text("0 1\n1 0\n".as_bytes(), 2, Some(2)).unwrap();
        assert_eq!(p.assignment(), &[1, 0]);
        let inferred = read_partition_map_text("1 0\n0 1\n".as_bytes(), 2, None).unwrap();
        assert_eq!(inferred, p);
    }

    #[test]
    fn text_errors() {
        let bad = |s: &str, n, p| read_partition_map_text(s.as_bytes(), n, p);
        assert!(matches!(
            bad("0 2\n1 0\n", 2, Some(2)),
            Err(Error::Format(FormatError::Invalid(_)))
        ));
        assert!(matches!(
            bad("0 0\n", 2, Some(2)),
            Err(Error::Format(FormatError::Invalid(_)))
        ));
        assert!(matches!(
            bad("0 0\n1 0\n2 0\n", 2, Some(2)),
            Err(Error::Format(FormatError::Invalid(_)))
        ));
        assert!(matches!(
            bad("0 0\n0 1\n", 2, Some(2)),
            Err(Error::Format(FormatError::Invalid(_)))
        ));
        assert!(matches!(
            bad("0\n", 1, Some(2)),
            Err(Error::Format(FormatError::Parse { .. }))
        ));
    }

    #[test]
    fn binary_size_mismatch() {
        let mut buf = Vec::new();
        write_partition_map_binary(&mut buf, &partition_hash(6, 2).unwrap()).unwrap();
        assert!(matches!(
            read_partition_map_binary(&mut &buf[..], Some(5)),
            Err(Error::Format(_))
        ));
        let cut = &buf[..buf.len() - 1];
        assert!(matches!(
            read_partition_map_binary(&mut &cut[..], None),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
    }

    #[test]
    fn load_sniffs_format() {
        let dir = tempfile::tempdir().unwrap();
        let pmap = partition_hash(9, 3).unwrap();
        for binary in [false, true] {
            let path = dir.path().join(format!("map-{binary}"));
            save_partition_map(&path, &pmap, binary).unwrap();
            assert_eq!(load_partition_map(&path, 9, Some(3)).unwrap(), pmap);
            if binary {
                assert!(load_partition_map(&path, 9, Some(4)).is_err());
            }
            assert!(load_partition_map(&path, 8, Some(3)).is_err());
        }
    }

    proptest! {
        #[test]
        fn round_trips(assignment in proptest::collection::vec(0u32..5, 0..200)) {
            let pmap = PartitionMap::new(assignment, 5).unwrap();
            let mut bin = Vec::new();
            write_partition_map_binary(&mut bin, &pmap).unwrap();
            prop_assert_eq!(&read_partition_map_binary(&mut &bin[..], Some(pmap.num_nodes())).unwrap(), &pmap);
            let mut text = Vec::new();
            write_partition_map_text(&mut text, &pmap).unwrap();
            prop_assert_eq!(&read_partition_map_text(&text[..], pmap.num_nodes(), Some(5)).unwrap(), &pmap);
        }
    }
}
