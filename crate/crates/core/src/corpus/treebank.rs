//! Parser for binarized sentiment treebank s-expressions.
//!
//! Grammar: `(label child child)` for internal nodes, `(label token)` for
//! leaves, with integer labels 0..=4. Token spans are 1-based inclusive
//! positions over the leaf sequence.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

/// A binarized constituency node with its sentiment label and token span.
#[derive(Clone, Debug, PartialEq)]
pub struct TreebankNode {
    pub label: u8,
    /// First leaf position covered by the node, 1-based inclusive.
    pub start: usize,
    /// Last leaf position covered by the node, 1-based inclusive.
    pub end: usize,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Leaf(String),
    Internal(Box<TreebankNode>, Box<TreebankNode>),
}

impl TreebankNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf(_))
    }

    /// Number of leaves under the node.
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn children(&self) -> Option<(&TreebankNode, &TreebankNode)> {
        match &self.kind {
            NodeKind::Leaf(_) => None,
            NodeKind::Internal(l, r) => Some((l, r)),
        }
    }

    /// Leaf tokens in left-to-right order.
    pub fn tokens(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        self.collect_tokens(&mut out);
        out
    }

    fn collect_tokens(&self, out: &mut Vec<String>) {
        match &self.kind {
            NodeKind::Leaf(tok) => out.push(tok.clone()),
            NodeKind::Internal(l, r) => {
                l.collect_tokens(out);
                r.collect_tokens(out);
            }
        }
    }

    /// All nodes in pre-order (self first).
    pub fn nodes(&self) -> Vec<&TreebankNode> {
        let mut out = Vec::new();
        self.collect_nodes(&mut out);
        out
    }

    fn collect_nodes<'a>(&'a self, out: &mut Vec<&'a TreebankNode>) {
        out.push(self);
        if let NodeKind::Internal(l, r) = &self.kind {
            l.collect_nodes(out);
            r.collect_nodes(out);
        }
    }

    /// Canonical single-space s-expression form.
    pub fn serialize(&self) -> String {
        match &self.kind {
            NodeKind::Leaf(tok) => format!("({} {})", self.label, tok),
            NodeKind::Internal(l, r) => {
                format!("({} {} {})", self.label, l.serialize(), r.serialize())
            }
        }
    }
}

/// Parses one s-expression into a tree with computed spans.
pub fn parse_ptb_tree(text: &str) -> Result<TreebankNode, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut next_leaf = 1;
    let node = parse_node(&chars, &mut pos, &mut next_leaf)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(err(pos, "trailing content after tree"));
    }
    Ok(node)
}

fn err(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        offset,
        message: message.into(),
    }
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_node(
    chars: &[char],
    pos: &mut usize,
    next_leaf: &mut usize,
) -> Result<TreebankNode, ParseError> {
    skip_ws(chars, pos);
    if *pos >= chars.len() || chars[*pos] != '(' {
        return Err(err(*pos, "expected '('"));
    }
    *pos += 1;
    skip_ws(chars, pos);

    // Label: an integer 0..=4 must come right after the paren.
    let label_start = *pos;
    while *pos < chars.len() && chars[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == label_start {
        return Err(err(label_start, "missing label: expected digit 0..=4"));
    }
    let label_str: String = chars[label_start..*pos].iter().collect();
    let label: u8 = label_str
        .parse()
        .map_err(|_| err(label_start, format!("bad label {label_str:?}")))?;
    if label > 4 {
        return Err(err(label_start, format!("label {label} outside 0..=4")));
    }

    skip_ws(chars, pos);
    if *pos >= chars.len() {
        return Err(err(*pos, "unbalanced parentheses: unexpected end"));
    }

    let node = if chars[*pos] == '(' {
        let left = parse_node(chars, pos, next_leaf)?;
        skip_ws(chars, pos);
        if *pos < chars.len() && chars[*pos] == ')' {
            return Err(err(*pos, "non-binary node: internal node needs 2 children"));
        }
        let right = parse_node(chars, pos, next_leaf)?;
        skip_ws(chars, pos);
        if *pos < chars.len() && chars[*pos] == '(' {
            return Err(err(*pos, "non-binary node: more than 2 children"));
        }
        TreebankNode {
            label,
            start: left.start,
            end: right.end,
            kind: NodeKind::Internal(Box::new(left), Box::new(right)),
        }
    } else if chars[*pos] == ')' {
        return Err(err(*pos, "node needs a token or children"));
    } else {
        let tok_start = *pos;
        while *pos < chars.len() && !chars[*pos].is_whitespace() && chars[*pos] != ')' {
            if chars[*pos] == '(' {
                return Err(err(*pos, "unexpected '(' inside token"));
            }
            *pos += 1;
        }
        let token: String = chars[tok_start..*pos].iter().collect();
        let leaf_pos = *next_leaf;
        *next_leaf += 1;
        TreebankNode {
            label,
            start: leaf_pos,
            end: leaf_pos,
            kind: NodeKind::Leaf(token),
        }
    };

    skip_ws(chars, pos);
    if *pos >= chars.len() || chars[*pos] != ')' {
        return Err(err(*pos, "unbalanced parentheses: expected ')'"));
    }
    *pos += 1;
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn two_leaf_tree() {
        let t = parse_ptb_tree("(3 (2 good) (2 movie))").unwrap();
        assert_eq!(t.label, 3);
        assert_eq!((t.start, t.end), (1, 2));
        let (l, r) = t.children().unwrap();
        assert_eq!((l.start, l.end), (1, 1));
        assert_eq!((r.start, r.end), (2, 2));
        assert_eq!(t.tokens(), vec!["good", "movie"]);
    }

    #[test]
    fn single_leaf_tree() {
        let t = parse_ptb_tree("(2 fine)").unwrap();
        assert_eq!(t.label, 2);
        assert!(t.is_leaf());
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn missing_label_is_an_error() {
        let e = parse_ptb_tree("((2 a) (2 b))").unwrap_err();
        assert!(e.message.contains("missing label"), "{e}");
        assert_eq!(e.offset, 1);
    }

    #[test]
    fn unbalanced_and_malformed_inputs() {
        assert!(parse_ptb_tree("(3 (2 good) (2 movie)")
            .unwrap_err()
            .message
            .contains("unbalanced"));
        assert!(parse_ptb_tree("(7 fine)")
            .unwrap_err()
            .message
            .contains("outside 0..=4"));
        assert!(parse_ptb_tree("(3 (2 a))")
            .unwrap_err()
            .message
            .contains("non-binary"));
        assert!(parse_ptb_tree("(3 (2 a) (2 b) (2 c))")
            .unwrap_err()
            .message
            .contains("non-binary"));
        assert!(parse_ptb_tree("(3)").unwrap_err().message.contains("token"));
    }

    #[test]
    fn round_trip_normalizes_whitespace_only() {
        let noisy = "( 3   (2 good)\t(2   movie) )";
        let t = parse_ptb_tree(noisy).unwrap();
        assert_eq!(t.serialize(), "(3 (2 good) (2 movie))");
        let again = parse_ptb_tree(&t.serialize()).unwrap();
        assert_eq!(t, again);
    }

    fn random_tree(rng: &mut ChaCha20Rng, depth: usize, next_leaf: &mut usize) -> TreebankNode {
        let label = rng.random_range(0..=4);
        if depth == 0 || rng.random_bool(0.4) {
            let pos = *next_leaf;
            *next_leaf += 1;
            TreebankNode {
                label,
                start: pos,
                end: pos,
                kind: NodeKind::Leaf(format!("w{}", rng.random_range(0..50))),
            }
        } else {
            let left = random_tree(rng, depth - 1, next_leaf);
            let right = random_tree(rng, depth - 1, next_leaf);
            TreebankNode {
                label,
                start: left.start,
                end: right.end,
                kind: NodeKind::Internal(Box::new(left), Box::new(right)),
            }
        }
    }

    #[test]
    fn random_trees_round_trip_with_consistent_spans() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let mut next_leaf = 1;
            let tree = random_tree(&mut rng, 4, &mut next_leaf);
            let parsed = parse_ptb_tree(&tree.serialize()).unwrap();
            assert_eq!(parsed, tree);
            // Parent span must be the contiguous union of child spans.
            for node in parsed.nodes() {
                if let Some((l, r)) = node.children() {
                    assert_eq!(node.start, l.start);
                    assert_eq!(node.end, r.end);
                    assert_eq!(l.end + 1, r.start);
                }
            }
            assert_eq!(parsed.tokens().len(), parsed.len());
        }
    }
}
