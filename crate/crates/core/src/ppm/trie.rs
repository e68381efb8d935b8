use crate::encoder::TokenId;

use super::PpmError;

pub(crate) type NodeId = u32;
pub(crate) const ROOT: NodeId = 0;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Node {
    pub(crate) count: u64,
    /// Sorted by symbol.
    pub(crate) children: Vec<(TokenId, NodeId)>,
}

/// Context trie of n-gram counts.
///
/// The node reached by the path `w` counts the occurrences of `w` in the
/// inserted sequences, so the children of `w` hold the continuation counts
/// of context `w`. The root counts every inserted symbol. Contexts never span
/// two inserted sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextTrie {
    pub(crate) nodes: Vec<Node>,
    pub(crate) alphabet: usize,
    pub(crate) max_depth: Option<usize>,
}

/// Insertion position within one sequence: the nodes of every stored suffix
/// of the symbols pushed so far, shortest first (`[0]` is the length-1 suffix).
#[derive(Debug, Clone, Default)]
pub struct Cursor {
    suffixes: Vec<NodeId>,
}

impl Cursor {
    /// Context node of each order, starting with the root (order 0).
    pub(crate) fn context_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::once(ROOT).chain(self.suffixes.iter().copied())
    }
}

impl ContextTrie {
    /// Unbounded context length.
    pub fn new(alphabet: usize) -> Self {
        Self::with_max_depth(alphabet, None)
    }

    /// `max_depth` bounds the stored context length (the model order).
    pub fn with_max_depth(alphabet: usize, max_depth: Option<usize>) -> Self {
        Self { nodes: vec![Node::default()], alphabet, max_depth }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn max_depth(&self) -> Option<usize> {
        self.max_depth
    }

    /// Number of symbols inserted.
    pub fn total(&self) -> u64 {
        self.nodes[ROOT as usize].count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub(crate) fn child(&self, node: NodeId, symbol: TokenId) -> Option<NodeId> {
        let children = &self.nodes[node as usize].children;
        children.binary_search_by_key(&symbol, |&(s, _)| s).ok().map(|i| children[i].1)
    }

    pub(crate) fn children(&self, node: NodeId) -> &[(TokenId, NodeId)] {
        &self.nodes[node as usize].children
    }

    pub(crate) fn count(&self, node: NodeId) -> u64 {
        self.nodes[node as usize].count
    }

    /// Node for the path `context`, if every prefix of it was seen.
    pub(crate) fn find(&self, context: &[TokenId]) -> Option<NodeId> {
        context.iter().try_fold(ROOT, |node, &s| self.child(node, s))
    }

    /// Continuation counts `(symbol, count)` after `context`, sorted by
    /// symbol. Empty if the context never occurred with a successor.
    pub fn continuations(&self, context: &[TokenId]) -> Vec<(TokenId, u64)> {
        self.find(context)
            .map(|n| self.children(n).iter().map(|&(s, c)| (s, self.count(c))).collect())
            .unwrap_or_default()
    }

    fn child_or_insert(&mut self, node: NodeId, symbol: TokenId) -> NodeId {
        let next = self.nodes.len() as NodeId;
        let children = &mut self.nodes[node as usize].children;
        match children.binary_search_by_key(&symbol, |&(s, _)| s) {
            Ok(i) => children[i].1,
            Err(i) => {
                children.insert(i, (symbol, next));
                self.nodes.push(Node::default());
                next
            }
        }
    }

    fn check(&self, symbol: TokenId) -> Result<(), PpmError> {
        if (symbol as usize) < self.alphabet {
            Ok(())
        } else {
            Err(PpmError::UnknownSymbol { symbol, alphabet: self.alphabet })
        }
    }

    /// Appends `symbol` to the sequence tracked by `cursor`, counting it after
    /// every stored context of order `floor` or higher. Lower-order context
    /// nodes are still extended (with no count) so later contexts resolve.
    pub fn push(&mut self, cursor: &mut Cursor, symbol: TokenId, floor: usize) -> Result<(), PpmError> {
        self.check(symbol)?;
        let mut next = Vec::with_capacity(cursor.suffixes.len() + 1);
        for order in 0..=cursor.suffixes.len() {
            let ctx = if order == 0 { ROOT } else { cursor.suffixes[order - 1] };
            let child = self.child_or_insert(ctx, symbol);
            if order >= floor {
                self.nodes[child as usize].count += 1;
            }
            next.push(child);
        }
        self.nodes[ROOT as usize].count += 1;
        next.truncate(self.max_depth.unwrap_or(usize::MAX));
        cursor.suffixes = next;
        Ok(())
    }

    /// Inserts one whole sequence with full counting.
    pub fn train_sequence(&mut self, sequence: &[TokenId]) -> Result<(), PpmError> {
        if let Some(&bad) = sequence.iter().find(|&&s| s as usize >= self.alphabet) {
            return Err(PpmError::UnknownSymbol { symbol: bad, alphabet: self.alphabet });
        }
        let mut cursor = Cursor::default();
        for &s in sequence {
            self.push(&mut cursor, s, 0)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invariant_holds(trie: &ContextTrie) -> bool {
        trie.nodes.iter().all(|n| n.count >= n.children.iter().map(|&(_, c)| trie.count(c)).sum::<u64>())
    }

    #[test]
    fn counts_aab() {
        let mut t = ContextTrie::new(2);
        t.train_sequence(&[0, 0, 1]).unwrap();
        assert_eq!(t.total(), 3);
        assert_eq!(t.continuations(&[]), vec![(0, 2), (1, 1)]);
        assert_eq!(t.continuations(&[0]), vec![(0, 1), (1, 1)]);
        assert_eq!(t.continuations(&[0, 0]), vec![(1, 1)]);
        assert!(t.continuations(&[1]).is_empty());
        assert!(invariant_holds(&t));
    }

    #[test]
    fn twice_doubles_every_count() {
        let seq = [2, 0, 1, 2, 2, 0];
        let mut once = ContextTrie::new(3);
        once.train_sequence(&seq).unwrap();
        let mut twice = ContextTrie::new(3);
        twice.train_sequence(&seq).unwrap();
        twice.train_sequence(&seq).unwrap();
        assert_eq!(once.node_count(), twice.node_count());
        for (a, b) in once.nodes.iter().zip(&twice.nodes) {
            assert_eq!(2 * a.count, b.count);
        }
    }

    #[test]
    fn unknown_symbol_rejected() {
        let mut t = ContextTrie::new(2);
        assert_eq!(t.train_sequence(&[0, 2]), Err(PpmError::UnknownSymbol { symbol: 2, alphabet: 2 }));
        assert!(t.is_empty());
    }

    #[test]
    fn depth_bound() {
        let mut t = ContextTrie::with_max_depth(2, Some(1));
        t.train_sequence(&[0, 1, 0, 1]).unwrap();
        assert_eq!(t.continuations(&[0]), vec![(1, 2)]);
        assert!(t.continuations(&[1, 0]).is_empty());
        assert!(invariant_holds(&t));
    }

    #[test]
    fn sequences_do_not_share_contexts() {
        let mut t = ContextTrie::new(2);
        t.train_sequence(&[0]).unwrap();
        t.train_sequence(&[1]).unwrap();
        assert!(t.continuations(&[0]).is_empty());
    }
}
