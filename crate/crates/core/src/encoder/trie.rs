//! Four-way trie over `ACGT` for enumerating every vocabulary token that
//! starts at a given sequence position.

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    children: [u32; 4],
    token: u32,
}

impl Node {
    const EMPTY: Node = Node {
        children: [NONE; 4],
        token: NONE,
    };
}

#[inline]
pub(crate) fn base_index(b: u8) -> Option<usize> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct NucleotideTrie {
    nodes: Vec<Node>,
}

impl Default for NucleotideTrie {
    fn default() -> Self {
        Self::new()
    }
}

impl NucleotideTrie {
    pub fn new() -> Self {
        Self {
            nodes: vec![Node::EMPTY],
        }
    }

    /// Inserts `token` with payload `id`. Returns false if `token` is empty
    /// or has a character outside `ACGT`.
    pub fn insert(&mut self, token: &[u8], id: u32) -> bool {
        if token.is_empty() {
            return false;
        }
        let mut node = 0usize;
        for &b in token {
            let Some(k) = base_index(b) else {
                return false;
            };
            let next = self.nodes[node].children[k];
            node = if next == NONE {
                self.nodes.push(Node::EMPTY);
                let id = (self.nodes.len() - 1) as u32;
                self.nodes[node].children[k] = id;
                id as usize
            } else {
                next as usize
            };
        }
        self.nodes[node].token = id;
        true
    }

    pub fn get(&self, token: &[u8]) -> Option<u32> {
        let mut node = 0usize;
        for &b in token {
            let next = self.nodes[node].children[base_index(b)?];
            if next == NONE {
                return None;
            }
            node = next as usize;
        }
        let t = self.nodes[node].token;
        (t != NONE && !token.is_empty()).then_some(t)
    }

    /// `(length, id)` of every stored token that is a prefix of
    /// `seq[start..]`, shortest first.
    pub fn prefixes<'a>(&'a self, seq: &'a [u8], start: usize) -> Prefixes<'a> {
        Prefixes {
            trie: self,
            seq,
            pos: start,
            start,
            node: 0,
        }
    }
}

pub struct Prefixes<'a> {
    trie: &'a NucleotideTrie,
    seq: &'a [u8],
    pos: usize,
    start: usize,
    node: u32,
}

impl Iterator for Prefixes<'_> {
    type Item = (usize, u32);

    fn next(&mut self) -> Option<(usize, u32)> {
        while self.node != NONE && self.pos < self.seq.len() {
            let Some(k) = base_index(self.seq[self.pos]) else {
                self.node = NONE;
                break;
            };
            self.node = self.trie.nodes[self.node as usize].children[k];
            self.pos += 1;
            if self.node == NONE {
                break;
            }
            let t = self.trie.nodes[self.node as usize].token;
            if t != NONE {
                return Some((self.pos - self.start, t));
            }
        }
        None
    }
}
