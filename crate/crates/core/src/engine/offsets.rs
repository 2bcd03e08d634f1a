//! Persistent, structure-shared offset-list expressions.
//!
//! Mark positions inside chunks are collected as `Concat`/`Shift`
//! expressions over an arena instead of eager vectors: a nested
//! nonterminal's list is referenced once with an additive shift, never
//! copied, which keeps the bottom-up pass linear in the grammar even when
//! the result set is huge. Constructors normalize — empty sides vanish,
//! shifts fuse into shifts and singletons — so the unfolded expression has
//! no unary chains and flattening costs O(result length).

use num_bigint::BigUint;

/// Reference into an [`OffsetArena`]; `OffsetArena::EMPTY` is the empty list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OffRef(u32);

#[derive(Debug, Clone)]
enum OffNode {
    Empty,
    Single(BigUint),
    Concat(OffRef, OffRef),
    Shift(BigUint, OffRef),
}

#[derive(Debug, Clone)]
pub struct OffsetArena {
    nodes: Vec<OffNode>,
}

impl Default for OffsetArena {
    fn default() -> Self {
        OffsetArena::new()
    }
}

impl OffsetArena {
    pub const EMPTY: OffRef = OffRef(0);

    pub fn new() -> OffsetArena {
        OffsetArena { nodes: vec![OffNode::Empty] }
    }

    /// Construction nodes allocated so far (the shared `Empty` not counted).
    pub fn allocs(&self) -> u64 {
        self.nodes.len() as u64 - 1
    }

    fn alloc(&mut self, node: OffNode) -> OffRef {
        let r = OffRef(self.nodes.len() as u32);
        self.nodes.push(node);
        r
    }

    pub fn single(&mut self, offset: BigUint) -> OffRef {
        self.alloc(OffNode::Single(offset))
    }

    pub fn concat(&mut self, a: OffRef, b: OffRef) -> OffRef {
        if a == Self::EMPTY {
            return b;
        }
        if b == Self::EMPTY {
            return a;
        }
        self.alloc(OffNode::Concat(a, b))
    }

    pub fn shift(&mut self, delta: &BigUint, inner: OffRef) -> OffRef {
        if inner == Self::EMPTY {
            return Self::EMPTY;
        }
        if delta.bits() == 0 {
            return inner;
        }
        match &self.nodes[inner.0 as usize] {
            OffNode::Single(o) => {
                let o = o.clone();
                self.alloc(OffNode::Single(delta + o))
            }
            OffNode::Shift(d, i) => {
                let (d, i) = (d.clone(), *i);
                self.alloc(OffNode::Shift(delta + d, i))
            }
            _ => self.alloc(OffNode::Shift(delta.clone(), inner)),
        }
    }

    /// Unfolds the expression into the strictly increasing offset list.
    pub fn flatten(&self, list: OffRef) -> Vec<BigUint> {
        let mut out = Vec::new();
        let mut stack: Vec<(OffRef, BigUint)> = vec![(list, BigUint::from(0u32))];
        while let Some((r, delta)) = stack.pop() {
            match &self.nodes[r.0 as usize] {
                OffNode::Empty => {}
                OffNode::Single(o) => out.push(&delta + o),
                OffNode::Shift(d, i) => stack.push((*i, &delta + d)),
                OffNode::Concat(a, b) => {
                    // Right below left so the left side is emitted first.
                    stack.push((*b, delta.clone()));
                    stack.push((*a, delta));
                }
            }
        }
        debug_assert!(out.windows(2).all(|w| w[0] < w[1]), "offsets strictly increase");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn builds_and_flattens_shared_lists() {
        let mut a = OffsetArena::new();
        let one = a.single(big(1));
        let three = a.single(big(3));
        let block = a.concat(one, three); // [1, 3]
        // Share `block` twice at different shifts: [1, 3, 11, 13].
        let shifted = a.shift(&big(10), block);
        let both = a.concat(block, shifted);
        assert_eq!(a.flatten(both), [big(1), big(3), big(11), big(13)]);
        // Two singles, two concats, one shift.
        assert_eq!(a.allocs(), 5);
    }

    #[test]
    fn normalization_elides_trivial_nodes() {
        let mut a = OffsetArena::new();
        let e = OffsetArena::EMPTY;
        assert_eq!(a.concat(e, e), e);
        let s = a.single(big(2));
        assert_eq!(a.concat(e, s), s);
        assert_eq!(a.concat(s, e), s);
        assert_eq!(a.shift(&big(0), s), s);
        assert_eq!(a.shift(&big(5), e), e);
        // Shift over single folds; shift over shift fuses.
        let shifted = a.shift(&big(5), s);
        assert_eq!(a.flatten(shifted), [big(7)]);
        let pair = a.concat(s, shifted);
        let nested = a.shift(&big(1), pair);
        let renested = a.shift(&big(2), nested);
        assert_eq!(a.flatten(renested), [big(5), big(10)]);
    }

    #[test]
    fn flatten_of_deep_chain_is_iterative() {
        let mut a = OffsetArena::new();
        let mut list = OffsetArena::EMPTY;
        for i in 0..200_000u64 {
            let s = a.single(big(i + 1));
            list = a.concat(list, s);
        }
        let flat = a.flatten(list);
        assert_eq!(flat.len(), 200_000);
        assert_eq!(flat[0], big(1));
    }
}
