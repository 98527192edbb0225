//! On-disk dataset format and block-granular reading.
//!
//! A dataset file is a fixed header followed by its vectors back to back,
//! everything little-endian:
//!
//! ```text
//! magic   [u8; 4]   "SKNJ"
//! version u32       currently 1
//! dims    u32       dimensionality bound; every feature dim is < dims
//! count   u64       number of vectors that follow
//! ```
//!
//! Each vector is `id: u64`, `feature_count: u32`, then `feature_count`
//! pairs of `dim: u32`, `weight: f32` sorted by strictly increasing `dim`
//! with positive finite weights, so a vector occupies `12 + 8 * nnz` bytes.
//! Readers validate every invariant on the way in; writers refuse to emit a
//! vector that violates them, which keeps a write→read→write cycle
//! byte-identical.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{Feature, SparseVector};

pub const MAGIC: [u8; 4] = *b"SKNJ";
pub const FORMAT_VERSION: u32 = 1;
/// Size of the fixed file header in bytes.
pub const HEADER_BYTES: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub dims: u32,
    pub vector_count: u64,
}

/// Streaming writer. `finish` must be called to backpatch the vector count
/// into the header; dropping the writer without it leaves the count at the
/// number recorded by the most recent `finish`, i.e. zero for a new file.
pub struct DatasetWriter<W: Write + Seek> {
    out: W,
    dims: u32,
    written: u64,
}

impl DatasetWriter<BufWriter<File>> {
    pub fn create<P: AsRef<Path>>(path: P, dims: u32) -> Result<Self> {
        let file = File::create(path)?;
        Self::new(BufWriter::new(file), dims)
    }
}

impl<W: Write + Seek> DatasetWriter<W> {
    pub fn new(mut out: W, dims: u32) -> Result<Self> {
        out.write_all(&MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&dims.to_le_bytes())?;
        out.write_all(&0u64.to_le_bytes())?;
        Ok(Self {
            out,
            dims,
            written: 0,
        })
    }

    pub fn write_vector(&mut self, v: &SparseVector) -> Result<()> {
        if let Some(&max) = v.dims().last() {
            if max >= self.dims {
                return Err(Error::DimensionOutOfRange {
                    id: v.id(),
                    dim: max,
                    dims: self.dims,
                });
            }
        }
        self.out.write_all(&v.id().to_le_bytes())?;
        self.out.write_all(&(v.nnz() as u32).to_le_bytes())?;
        for f in v.features() {
            self.out.write_all(&f.dim.to_le_bytes())?;
            self.out.write_all(&f.weight.to_le_bytes())?;
        }
        self.written += 1;
        Ok(())
    }

    /// Backpatches the header with the final vector count and returns the
    /// underlying writer, flushed.
    pub fn finish(mut self) -> Result<W> {
        self.out.seek(SeekFrom::Start(12))?;
        self.out.write_all(&self.written.to_le_bytes())?;
        self.out.seek(SeekFrom::End(0))?;
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Writes `vectors` to `path` in one pass.
pub fn write_dataset<P, I>(path: P, dims: u32, vectors: I) -> Result<DatasetHeader>
where
    P: AsRef<Path>,
    I: IntoIterator<Item = SparseVector>,
{
    let mut w = DatasetWriter::create(path, dims)?;
    let mut count = 0u64;
    for v in vectors {
        w.write_vector(&v)?;
        count += 1;
    }
    w.finish()?;
    Ok(DatasetHeader {
        dims,
        vector_count: count,
    })
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    match r.read_exact(buf) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Err(Error::Truncated),
        Err(e) => Err(Error::Io(e)),
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_truncated(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or_truncated(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_header<R: Read>(r: &mut R) -> Result<DatasetHeader> {
    let mut magic = [0u8; 4];
    read_exact_or_truncated(r, &mut magic)?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::BadVersion(version));
    }
    let dims = read_u32(r)?;
    let vector_count = read_u64(r)?;
    Ok(DatasetHeader { dims, vector_count })
}

fn read_vector<R: Read>(r: &mut R, dims: u32) -> Result<SparseVector> {
    let id = read_u64(r)?;
    let feature_count = read_u32(r)?;
    let mut features = Vec::with_capacity(feature_count.min(dims) as usize);
    let mut prev: Option<u32> = None;
    for _ in 0..feature_count {
        let mut pair = [0u8; 8];
        read_exact_or_truncated(r, &mut pair)?;
        let dim = u32::from_le_bytes(pair[..4].try_into().unwrap());
        let weight = f32::from_le_bytes(pair[4..].try_into().unwrap());
        // Validate as we go so corrupt counts fail fast instead of
        // ballooning memory.
        if prev.is_some_and(|p| dim <= p) {
            return Err(Error::UnsortedFeatures { id });
        }
        if dim >= dims {
            return Err(Error::DimensionOutOfRange { id, dim, dims });
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::NonPositiveWeight { id, dim, weight });
        }
        prev = Some(dim);
        features.push(Feature { dim, weight });
    }
    SparseVector::new(id, features)
}

/// A group of consecutive vectors whose serialized sizes fit one block
/// budget.
#[derive(Debug, Clone)]
pub struct Block {
    pub vectors: Vec<SparseVector>,
    /// Total on-disk bytes of the vectors in this block.
    pub serialized_bytes: u64,
}

impl Block {
    pub fn from_vectors(vectors: Vec<SparseVector>) -> Self {
        let serialized_bytes = vectors.iter().map(SparseVector::serialized_size).sum();
        Self {
            vectors,
            serialized_bytes,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Streams a dataset as maximal blocks: vectors are packed greedily in file
/// order until the next vector would push the block past `budget_bytes`.
/// A single vector larger than the whole budget is an error, so every block
/// emitted is non-empty and within budget.
pub struct BlockReader<R: Read> {
    input: R,
    header: DatasetHeader,
    budget_bytes: u64,
    remaining: u64,
    pending: Option<SparseVector>,
    alive: bool,
}

impl BlockReader<BufReader<File>> {
    pub fn open<P: AsRef<Path>>(path: P, budget_bytes: u64) -> Result<Self> {
        let mut input = BufReader::new(File::open(path)?);
        let header = read_header(&mut input)?;
        Ok(Self::with_header(input, header, budget_bytes))
    }
}

impl<R: Read> BlockReader<R> {
    pub fn new(mut input: R, budget_bytes: u64) -> Result<Self> {
        let header = read_header(&mut input)?;
        Ok(Self::with_header(input, header, budget_bytes))
    }

    pub fn with_header(input: R, header: DatasetHeader, budget_bytes: u64) -> Self {
        Self {
            input,
            header,
            budget_bytes,
            remaining: header.vector_count,
            pending: None,
            alive: true,
        }
    }

    pub fn header(&self) -> DatasetHeader {
        self.header
    }

    fn next_block(&mut self) -> Result<Option<Block>> {
        let mut vectors = Vec::new();
        let mut bytes = 0u64;
        loop {
            let v = match self.pending.take() {
                Some(v) => v,
                None if self.remaining > 0 => {
                    self.remaining -= 1;
                    read_vector(&mut self.input, self.header.dims)?
                }
                None => break,
            };
            let size = v.serialized_size();
            if size > self.budget_bytes {
                return Err(Error::VectorExceedsBudget {
                    id: v.id(),
                    bytes: size,
                    budget: self.budget_bytes,
                });
            }
            if bytes + size > self.budget_bytes {
                self.pending = Some(v);
                break;
            }
            bytes += size;
            vectors.push(v);
        }
        if vectors.is_empty() {
            Ok(None)
        } else {
            Ok(Some(Block {
                vectors,
                serialized_bytes: bytes,
            }))
        }
    }
}

impl<R: Read> Iterator for BlockReader<R> {
    type Item = Result<Block>;

    fn next(&mut self) -> Option<Self::Item> {
        if !self.alive {
            return None;
        }
        match self.next_block() {
            Ok(Some(block)) => Some(Ok(block)),
            Ok(None) => {
                self.alive = false;
                None
            }
            Err(e) => {
                self.alive = false;
                Some(Err(e))
            }
        }
    }
}

/// Loads an entire dataset into memory. Intended for tests and small inputs;
/// the join driver streams blocks instead.
pub fn read_dataset<P: AsRef<Path>>(path: P) -> Result<(DatasetHeader, Vec<SparseVector>)> {
    let mut input = BufReader::new(File::open(path)?);
    let header = read_header(&mut input)?;
    let mut vectors = Vec::with_capacity(header.vector_count.min(1 << 20) as usize);
    for _ in 0..header.vector_count {
        vectors.push(read_vector(&mut input, header.dims)?);
    }
    Ok((header, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn sv(id: u64, pairs: &[(u32, f32)]) -> SparseVector {
        SparseVector::new(
            id,
            pairs
                .iter()
                .map(|&(dim, weight)| Feature { dim, weight })
                .collect(),
        )
        .unwrap()
    }

    fn write_to_bytes(dims: u32, vectors: &[SparseVector]) -> Vec<u8> {
        let mut w = DatasetWriter::new(Cursor::new(Vec::new()), dims).unwrap();
        for v in vectors {
            w.write_vector(v).unwrap();
        }
        w.finish().unwrap().into_inner()
    }

    #[test]
    fn golden_bytes_for_tiny_dataset() {
        let vectors = vec![sv(1, &[(2, 0.5), (7, 1.25)]), sv(300, &[])];
        let bytes = write_to_bytes(10, &vectors);

        let mut expected = Vec::new();
        expected.extend_from_slice(b"SKNJ");
        expected.extend_from_slice(&1u32.to_le_bytes()); // version
        expected.extend_from_slice(&10u32.to_le_bytes()); // dims
        expected.extend_from_slice(&2u64.to_le_bytes()); // count
        expected.extend_from_slice(&1u64.to_le_bytes()); // id 1
        expected.extend_from_slice(&2u32.to_le_bytes()); // nnz
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&0.5f32.to_le_bytes());
        expected.extend_from_slice(&7u32.to_le_bytes());
        expected.extend_from_slice(&1.25f32.to_le_bytes());
        expected.extend_from_slice(&300u64.to_le_bytes()); // id 300
        expected.extend_from_slice(&0u32.to_le_bytes()); // empty vector
        assert_eq!(bytes, expected);
        assert_eq!(bytes.len() as u64, HEADER_BYTES + 28 + 12);
    }

    #[test]
    fn roundtrip_and_rewrite_is_byte_identical() {
        let vectors = vec![
            sv(0, &[(0, 1.0)]),
            sv(1, &[(1, 0.25), (99, 4.0)]),
            sv(2, &[]),
        ];
        let bytes = write_to_bytes(100, &vectors);

        let mut cursor = Cursor::new(bytes.clone());
        let header = read_header(&mut cursor).unwrap();
        assert_eq!(
            header,
            DatasetHeader {
                dims: 100,
                vector_count: 3
            }
        );
        let mut back = Vec::new();
        for _ in 0..header.vector_count {
            back.push(read_vector(&mut cursor, header.dims).unwrap());
        }
        assert_eq!(back, vectors);
        assert_eq!(write_to_bytes(100, &back), bytes);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            read_header(&mut Cursor::new(b"JUNK".to_vec())),
            Err(Error::BadMagic) | Err(Error::Truncated)
        ));
        let mut v2 = Vec::new();
        v2.extend_from_slice(b"SKNJ");
        v2.extend_from_slice(&2u32.to_le_bytes());
        v2.extend_from_slice(&10u32.to_le_bytes());
        v2.extend_from_slice(&0u64.to_le_bytes());
        assert!(matches!(
            read_header(&mut Cursor::new(v2)),
            Err(Error::BadVersion(2))
        ));
    }

    #[test]
    fn truncated_vector_is_detected() {
        let bytes = write_to_bytes(10, &[sv(1, &[(2, 0.5), (7, 1.25)])]);
        for cut in (HEADER_BYTES as usize + 1)..bytes.len() {
            let mut cursor = Cursor::new(bytes[..cut].to_vec());
            let header = read_header(&mut cursor).unwrap();
            assert!(
                matches!(read_vector(&mut cursor, header.dims), Err(Error::Truncated)),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn corrupt_payloads_are_rejected() {
        // Weight of zero.
        let mut bytes = write_to_bytes(10, &[sv(1, &[(2, 0.5)])]);
        let weight_off = bytes.len() - 4;
        bytes[weight_off..].copy_from_slice(&0.0f32.to_le_bytes());
        let mut cursor = Cursor::new(bytes);
        let header = read_header(&mut cursor).unwrap();
        assert!(matches!(
            read_vector(&mut cursor, header.dims),
            Err(Error::NonPositiveWeight { id: 1, dim: 2, .. })
        ));

        // Dimension at the bound.
        let mut bytes = write_to_bytes(10, &[sv(1, &[(2, 0.5)])]);
        let dim_off = bytes.len() - 8;
        bytes[dim_off..dim_off + 4].copy_from_slice(&10u32.to_le_bytes());
        let mut cursor = Cursor::new(bytes);
        let header = read_header(&mut cursor).unwrap();
        assert!(matches!(
            read_vector(&mut cursor, header.dims),
            Err(Error::DimensionOutOfRange { id: 1, dim: 10, dims: 10 })
        ));
    }

    #[test]
    fn blocks_pack_greedily_and_respect_budget() {
        // Four vectors of 20 bytes each (one feature): budget 50 packs 2+2.
        let vectors: Vec<_> = (0..4).map(|i| sv(i, &[(i as u32, 1.0)])).collect();
        let bytes = write_to_bytes(10, &vectors);
        let reader = BlockReader::new(Cursor::new(bytes), 50).unwrap();
        let blocks: Vec<_> = reader.map(|b| b.unwrap()).collect();
        assert_eq!(blocks.len(), 2);
        for b in &blocks {
            assert_eq!(b.len(), 2);
            assert_eq!(b.serialized_bytes, 40);
        }
        let ids: Vec<u64> = blocks
            .iter()
            .flat_map(|b| b.vectors.iter().map(|v| v.id()))
            .collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn oversized_vector_is_a_hard_error() {
        let bytes = write_to_bytes(100, &[sv(9, &[(0, 1.0), (1, 1.0), (2, 1.0)])]);
        let mut reader = BlockReader::new(Cursor::new(bytes), 30).unwrap();
        assert!(matches!(
            reader.next(),
            Some(Err(Error::VectorExceedsBudget {
                id: 9,
                bytes: 36,
                budget: 30
            }))
        ));
        assert!(reader.next().is_none());
    }

    proptest! {
        #[test]
        fn roundtrip_arbitrary_datasets(
            specs in proptest::collection::vec(
                proptest::collection::btree_map(0u32..50, 0.001f32..100.0, 0..10),
                0..20,
            ),
            budget in 12u64..400,
        ) {
            let vectors: Vec<_> = specs
                .iter()
                .enumerate()
                .map(|(i, m)| sv(i as u64, &m.iter().map(|(&d, &w)| (d, w)).collect::<Vec<_>>()))
                .collect();
            let bytes = write_to_bytes(50, &vectors);
            prop_assert_eq!(
                bytes.len() as u64,
                HEADER_BYTES + vectors.iter().map(|v| v.serialized_size()).sum::<u64>()
            );

            let max_size = vectors.iter().map(|v| v.serialized_size()).max().unwrap_or(0);
            let reader = BlockReader::new(Cursor::new(bytes.clone()), budget).unwrap();
            if max_size > budget {
                prop_assert!(reader.collect::<Result<Vec<_>>>().is_err());
            } else {
                let blocks: Vec<Block> = reader.collect::<Result<_>>().unwrap();
                for b in &blocks {
                    prop_assert!(!b.is_empty());
                    prop_assert!(b.serialized_bytes <= budget);
                    prop_assert_eq!(
                        b.serialized_bytes,
                        b.vectors.iter().map(|v| v.serialized_size()).sum::<u64>()
                    );
                }
                // Greedy maximality: no block could absorb the next block's head.
                for pair in blocks.windows(2) {
                    let head = pair[1].vectors[0].serialized_size();
                    prop_assert!(pair[0].serialized_bytes + head > budget);
                }
                let back: Vec<_> = blocks.into_iter().flat_map(|b| b.vectors).collect();
                prop_assert_eq!(back, vectors);
            }
        }
    }
}
