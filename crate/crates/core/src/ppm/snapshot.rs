//! Binary snapshot of a trained trie.
//!
//! Little-endian layout:
//!
//! ```text
//! magic     8 bytes  "CSQTRIE\0"
//! version   u32      1
//! alphabet  u64
//! max_depth u64      u64::MAX when unbounded
//! nodes     u64
//! per node: count u64, children u32, then (symbol u32, child u32) per child
//! ```

use std::io::{self, Read, Write};

use thiserror::Error;

use super::trie::{Node, NodeId};
use super::ContextTrie;

const MAGIC: &[u8; 8] = b"CSQTRIE\0";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a trie snapshot")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_snapshot(trie: &ContextTrie, mut out: impl Write) -> io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(trie.alphabet as u64).to_le_bytes())?;
    out.write_all(&trie.max_depth.map_or(u64::MAX, |d| d as u64).to_le_bytes())?;
    out.write_all(&(trie.nodes.len() as u64).to_le_bytes())?;
    for node in &trie.nodes {
        out.write_all(&node.count.to_le_bytes())?;
        out.write_all(&(node.children.len() as u32).to_le_bytes())?;
        for &(s, c) in &node.children {
            out.write_all(&s.to_le_bytes())?;
            out.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_snapshot(mut input: impl Read) -> Result<ContextTrie, SnapshotError> {
    let mut magic = [0; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    let alphabet = read_u64(&mut input)? as usize;
    let max_depth = match read_u64(&mut input)? {
        u64::MAX => None,
        d => Some(d as usize),
    };
    let n = read_u64(&mut input)?;
    if n == 0 || n > u32::MAX as u64 {
        return Err(SnapshotError::Corrupt(format!("node count {n}")));
    }
    let mut nodes = Vec::with_capacity(n.min(1 << 20) as usize);
    for id in 0..n {
        let count = read_u64(&mut input)?;
        let k = read_u32(&mut input)?;
        let mut children = Vec::with_capacity(k.min(1 << 16) as usize);
        for _ in 0..k {
            let s = read_u32(&mut input)?;
            let c: NodeId = read_u32(&mut input)?;
            if s as usize >= alphabet || c as u64 >= n || c as u64 <= id {
                return Err(SnapshotError::Corrupt(format!("node {id} has a bad child ({s}, {c})")));
            }
            if children.last().is_some_and(|&(prev, _)| prev >= s) {
                return Err(SnapshotError::Corrupt(format!("children of node {id} are not sorted")));
            }
            children.push((s, c));
        }
        nodes.push(Node { count, children });
    }
    let mut extra = [0; 1];
    if input.read(&mut extra)? != 0 {
        return Err(SnapshotError::Corrupt("trailing bytes".into()));
    }
    Ok(ContextTrie { nodes, alphabet, max_depth })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for depth in [None, Some(2)] {
            let mut t = ContextTrie::with_max_depth(4, depth);
            t.train_sequence(&[0, 1, 2, 3, 0, 1, 1]).unwrap();
            t.train_sequence(&[3, 3, 2]).unwrap();
            let mut buf = Vec::new();
            write_snapshot(&t, &mut buf).unwrap();
            assert_eq!(read_snapshot(&buf[..]).unwrap(), t);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_snapshot(&b"NOTATRIE\x01\0\0\0"[..]), Err(SnapshotError::BadMagic)));
        let mut buf = Vec::new();
        write_snapshot(&ContextTrie::new(2), &mut buf).unwrap();
        buf[8] = 9;
        assert!(matches!(read_snapshot(&buf[..]), Err(SnapshotError::UnsupportedVersion(9))));
        buf[8] = 1;
        buf.push(0);
        assert!(matches!(read_snapshot(&buf[..]), Err(SnapshotError::Corrupt(_))));
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_snapshot(&buf[..]), Err(SnapshotError::Io(_))));
    }
}
