//! Single-BDD file format.
//!
//! All integers are little-endian.
//!
//! ```text
//! offset  size  field
//!      0     8  magic "C4BDD1\0\0"
//!      8     4  format version (1)
//!     12     2  width
//!     14     2  height
//!     16     2  ply
//!     18     1  encoding kind id
//!     19     1  role (0 states, 1 win, 2 lost)
//!     20     4  variable count
//!     24     4  node count
//!     28     4  root (0 false, 1 true, otherwise 2 + record index)
//!     32  12*n  records (var, low, high), children before parents
//!  32+12n    8  FNV-1a 64 over every preceding byte
//! ```
//!
//! Record `k` has file index `2 + k`; indices 0 and 1 are the terminals.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bdd::{BddManager, NodeRef, Var};
use crate::encoding::{BoardGeometry, EncodingKind};

use super::StoreError;

pub const MAGIC: [u8; 8] = *b"C4BDD1\0\0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;
const RECORD_LEN: usize = 12;

/// What a layer file holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerRole {
    States,
    Win,
    Lost,
}

impl LayerRole {
    pub const ALL: [LayerRole; 3] = [LayerRole::States, LayerRole::Win, LayerRole::Lost];

    pub fn id(self) -> u8 {
        match self {
            LayerRole::States => 0,
            LayerRole::Win => 1,
            LayerRole::Lost => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    /// File-name component, as in `layer_<ply>.<name>.bdd`.
    pub fn name(self) -> &'static str {
        match self {
            LayerRole::States => "states",
            LayerRole::Win => "win",
            LayerRole::Lost => "lost",
        }
    }
}

/// Header fields of a BDD file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BddMeta {
    pub geometry: BoardGeometry,
    pub kind: EncodingKind,
    pub ply: u32,
    pub role: LayerRole,
    pub var_count: u32,
}

/// A BDD read from disk, held as a flat node array outside any manager.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredBdd {
    pub meta: BddMeta,
    nodes: Vec<[u32; 3]>,
    root: u32,
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

/// Writes `root` to `w`; returns the number of bytes written.
pub fn write_bdd<W: Write>(m: &BddManager, root: NodeRef, meta: &BddMeta, w: W) -> Result<u64, StoreError> {
    let topo = m.topological_nodes(root);
    let mut index = std::collections::HashMap::with_capacity(topo.len());
    let map = |index: &std::collections::HashMap<u32, u32>, x: u32| if x < 2 { x } else { index[&x] };
    let mut w = BufWriter::new(w);
    let mut sum = Fnv::new();
    let mut put = |w: &mut BufWriter<W>, bytes: &[u8]| -> Result<(), StoreError> {
        sum.update(bytes);
        w.write_all(bytes)?;
        Ok(())
    };

    let root_id = if root.is_terminal() { root.index() } else { topo.len() as u32 + 1 };
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&(meta.geometry.width() as u16).to_le_bytes());
    header.extend_from_slice(&(meta.geometry.height() as u16).to_le_bytes());
    header.extend_from_slice(&(meta.ply as u16).to_le_bytes());
    header.push(meta.kind.id());
    header.push(meta.role.id());
    header.extend_from_slice(&meta.var_count.to_le_bytes());
    header.extend_from_slice(&(topo.len() as u32).to_le_bytes());
    header.extend_from_slice(&root_id.to_le_bytes());
    put(&mut w, &header)?;

    for (k, &(idx, var, low, high)) in topo.iter().enumerate() {
        let mut rec = [0u8; RECORD_LEN];
        rec[0..4].copy_from_slice(&var.to_le_bytes());
        rec[4..8].copy_from_slice(&map(&index, low).to_le_bytes());
        rec[8..12].copy_from_slice(&map(&index, high).to_le_bytes());
        put(&mut w, &rec)?;
        index.insert(idx, k as u32 + 2);
    }
    let digest = sum.0;
    w.write_all(&digest.to_le_bytes())?;
    w.flush()?;
    Ok((HEADER_LEN + RECORD_LEN * topo.len() + 8) as u64)
}

/// Writes `root` to `path`, replacing any existing file.
pub fn save_bdd(m: &BddManager, root: NodeRef, meta: &BddMeta, path: &Path) -> Result<u64, StoreError> {
    let file = File::create(path).map_err(|e| StoreError::io(path, e))?;
    write_bdd(m, root, meta, file).map_err(|e| e.at(path))
}

fn corrupt(offset: u64, reason: &'static str) -> StoreError {
    StoreError::CorruptFile { path: None, offset, reason }
}

struct Reader<R> {
    inner: R,
    offset: u64,
    sum: Fnv,
}

impl<R: Read> Reader<R> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], StoreError> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => corrupt(self.offset, "truncated file"),
            _ => StoreError::Io { path: None, source: e },
        })?;
        self.sum.update(&buf);
        self.offset += N as u64;
        Ok(buf)
    }

    fn u16(&mut self) -> Result<u16, StoreError> {
        Ok(u16::from_le_bytes(self.take()?))
    }

    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.take()?))
    }
}

impl StoredBdd {
    /// Parses and validates a BDD file.
    pub fn read_from<R: Read>(r: R) -> Result<Self, StoreError> {
        let mut r = Reader { inner: BufReader::new(r), offset: 0, sum: Fnv::new() };
        if r.take::<8>()? != MAGIC {
            return Err(corrupt(0, "bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(StoreError::Unsupported { version });
        }
        let (width, height, ply) = (r.u16()?, r.u16()?, r.u16()?);
        let geometry = BoardGeometry::new(width as u32, height as u32)
            .map_err(|_| corrupt(12, "board dimensions out of range"))?;
        let [kind] = r.take::<1>()?;
        let kind = EncodingKind::from_id(kind).ok_or(corrupt(18, "unknown encoding kind"))?;
        let [role] = r.take::<1>()?;
        let role = LayerRole::from_id(role).ok_or(corrupt(19, "unknown layer role"))?;
        let var_count = r.u32()?;
        let node_count = r.u32()?;
        let root = r.u32()?;
        if ply as u32 > geometry.max_ply() {
            return Err(corrupt(16, "ply beyond board size"));
        }

        // Reserve conservatively; a corrupt count must not trigger a huge
        // allocation before truncation is noticed.
        let mut nodes: Vec<[u32; 3]> = Vec::with_capacity((node_count as usize).min(1 << 20));
        let var_of = |nodes: &[[u32; 3]], x: u32| if x < 2 { u32::MAX } else { nodes[x as usize - 2][0] };
        for k in 0..node_count {
            let at = r.offset;
            let (var, low, high) = (r.u32()?, r.u32()?, r.u32()?);
            let next = k + 2;
            if var >= var_count || low >= next || high >= next || low == high {
                return Err(corrupt(at, "malformed node record"));
            }
            if var_of(&nodes, low) <= var || var_of(&nodes, high) <= var {
                return Err(corrupt(at, "node record breaks variable order"));
            }
            nodes.push([var, low, high]);
        }
        let expected_root = if node_count == 0 { root } else { node_count + 1 };
        if root != expected_root || (node_count == 0 && root > 1) {
            return Err(corrupt(28, "root is not the last record"));
        }
        let digest = r.sum.0;
        let at = r.offset;
        let stored = u64::from_le_bytes(r.take::<8>()?);
        if stored != digest {
            return Err(corrupt(at, "checksum mismatch"));
        }
        let mut extra = [0u8; 1];
        if r.inner.read(&mut extra)? != 0 {
            return Err(corrupt(r.offset, "trailing bytes"));
        }
        let meta = BddMeta { geometry, kind, ply: ply as u32, role, var_count };
        Ok(StoredBdd { meta, nodes, root })
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let file = File::open(path).map_err(|e| StoreError::io(path, e))?;
        Self::read_from(file).map_err(|e| e.at(path))
    }

    /// Decision nodes in the file (terminals excluded).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_false(&self) -> bool {
        self.root == 0
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        let mut x = self.root;
        while x >= 2 {
            let [var, low, high] = self.nodes[x as usize - 2];
            x = if assignment[var as usize] { high } else { low };
        }
        x == 1
    }

    /// Rebuilds the BDD inside `m` and returns a referenced root.
    pub fn to_manager(&self, m: &mut BddManager) -> Result<NodeRef, StoreError> {
        if self.meta.var_count > m.num_vars() {
            return Err(StoreError::Mismatch(format!(
                "file uses {} variables but the manager has {}",
                self.meta.var_count,
                m.num_vars()
            )));
        }
        let mut built: Vec<NodeRef> = Vec::with_capacity(self.nodes.len());
        let node = |built: &[NodeRef], x: u32| match x {
            0 => NodeRef::FALSE,
            1 => NodeRef::TRUE,
            _ => built[x as usize - 2],
        };
        for &[var, low, high] in &self.nodes {
            match m.make_node(var as Var, node(&built, low), node(&built, high)) {
                Ok(n) => built.push(n),
                Err(e) => {
                    for n in built {
                        m.deref_node(n)?;
                    }
                    return Err(e.into());
                }
            }
        }
        let root = m.ref_node(node(&built, self.root));
        for n in built {
            m.deref_node(n)?;
        }
        Ok(root)
    }
}

/// Reads `path` into `m`; returns the header and a referenced root.
pub fn load_bdd(m: &mut BddManager, path: &Path) -> Result<(BddMeta, NodeRef), StoreError> {
    let stored = StoredBdd::load(path)?;
    let root = stored.to_manager(m).map_err(|e| e.at(path))?;
    Ok((stored.meta, root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdd::VarSet;

    fn meta(role: LayerRole, var_count: u32) -> BddMeta {
        BddMeta { geometry: BoardGeometry::new(4, 4).unwrap(), kind: EncodingKind::Compressed, ply: 5, role, var_count }
    }

    fn sample(m: &mut BddManager) -> NodeRef {
        let a = m.mk_var(0).unwrap();
        let b = m.mk_var(3).unwrap();
        let c = m.mk_var(5).unwrap();
        let ab = m.xor(a, b).unwrap();
        m.or(ab, c).unwrap()
    }

    #[test]
    fn terminal_files_have_no_records() {
        let m = BddManager::new(16, 4).unwrap();
        for t in [NodeRef::FALSE, NodeRef::TRUE] {
            let mut buf = Vec::new();
            let n = write_bdd(&m, t, &meta(LayerRole::Win, 4), &mut buf).unwrap();
            assert_eq!(n as usize, HEADER_LEN + 8);
            assert_eq!(buf.len(), HEADER_LEN + 8);
            let s = StoredBdd::read_from(&buf[..]).unwrap();
            assert!(s.is_empty());
            assert_eq!(s.eval(&[false; 4]), t.is_true());
        }
    }

    #[test]
    fn round_trip_preserves_function() {
        let mut m = BddManager::new(1024, 8).unwrap();
        let f = sample(&mut m);
        let mut buf = Vec::new();
        write_bdd(&m, f, &meta(LayerRole::Lost, 8), &mut buf).unwrap();
        let s = StoredBdd::read_from(&buf[..]).unwrap();
        assert_eq!(s.meta, meta(LayerRole::Lost, 8));
        assert_eq!(s.len() + 2, m.node_count(f));
        let mut m2 = BddManager::new(1024, 8).unwrap();
        let g = s.to_manager(&mut m2).unwrap();
        let all = VarSet::new((0..8).collect::<Vec<_>>()).unwrap();
        assert_eq!(m.satcount(f, &all).unwrap(), m2.satcount(g, &all).unwrap());
        for bits in 0u32..256 {
            let a: Vec<bool> = (0..8).map(|i| bits >> i & 1 == 1).collect();
            assert_eq!(m.eval(f, &a), s.eval(&a));
            assert_eq!(m.eval(f, &a), m2.eval(g, &a));
        }
        // Rebuilding in the same manager yields the very same node.
        assert_eq!(s.to_manager(&mut m).unwrap(), f);
        m2.audit().unwrap();
    }

    #[test]
    fn every_single_byte_flip_is_detected() {
        let mut m = BddManager::new(1024, 8).unwrap();
        let f = sample(&mut m);
        let mut buf = Vec::new();
        write_bdd(&m, f, &meta(LayerRole::Win, 8), &mut buf).unwrap();
        for i in 0..buf.len() {
            let mut bad = buf.clone();
            bad[i] ^= 0x10;
            let r = StoredBdd::read_from(&bad[..]);
            assert!(
                matches!(r, Err(StoreError::CorruptFile { .. }) | Err(StoreError::Unsupported { .. })),
                "flip at {i} went unnoticed"
            );
        }
    }

    #[test]
    fn truncation_reports_offset() {
        let mut m = BddManager::new(1024, 8).unwrap();
        let f = sample(&mut m);
        let mut buf = Vec::new();
        write_bdd(&m, f, &meta(LayerRole::Win, 8), &mut buf).unwrap();
        let cut = HEADER_LEN + 5;
        match StoredBdd::read_from(&buf[..cut]) {
            Err(StoreError::CorruptFile { offset, .. }) => assert_eq!(offset, HEADER_LEN as u64 + 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn version_mismatch_is_unsupported() {
        let m = BddManager::new(16, 4).unwrap();
        let mut buf = Vec::new();
        write_bdd(&m, NodeRef::TRUE, &meta(LayerRole::Win, 4), &mut buf).unwrap();
        buf[8] = 9;
        assert!(matches!(StoredBdd::read_from(&buf[..]), Err(StoreError::Unsupported { version: 9 })));
    }
}
