/// Fixed-width membership bitmap over `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSet {
    blocks: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet { blocks: vec![0; len.div_ceil(64)] }
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.blocks[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.blocks[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.blocks[i >> 6] &= !(1 << (i & 63));
    }
}
