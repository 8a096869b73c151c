use super::{Node, SyntaxTree, Token, TreeKind};
use crate::error::{Error, Location, Result};

const EMPTY_ELEMENT: &str = "-NONE-";

#[derive(Debug)]
enum Sexp<'a> {
    Atom(&'a str),
    List { items: Vec<Sexp<'a>>, at: usize },
}

/// Parses bracketed constituency trees, one per top-level expression.
///
/// A list `(LABEL child...)` becomes an internal node; bare atoms become
/// leaves carrying tokens, so `(NP she)` is an `NP` node over the leaf
/// `she`. `-NONE-` subtrees are dropped before tokens are numbered, as is
/// any constituent they leave without children. An outer unlabeled
/// wrapper around a single tree, as in `( (S ...) )`, is removed.
pub fn parse_ptb(text: &str) -> Result<Vec<SyntaxTree>> {
    read_sexps(text)?
        .into_iter()
        .enumerate()
        .map(|(i, sexp)| to_tree(sexp, i + 1))
        .collect()
}

fn read_sexps(text: &str) -> Result<Vec<Sexp<'_>>> {
    let bytes = text.as_bytes();
    let mut top = Vec::new();
    let mut stack: Vec<(usize, Vec<Sexp<'_>>)> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                stack.push((i, Vec::new()));
                i += 1;
            }
            b')' => {
                let (at, items) = stack
                    .pop()
                    .ok_or_else(|| Error::format(Location::Byte(i), "unbalanced ')'"))?;
                let list = Sexp::List { items, at };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(list),
                    None => top.push(list),
                }
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'(' && bytes[i] != b')' {
                    i += 1;
                }
                let atom = &text[start..i];
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(Sexp::Atom(atom)),
                    None => {
                        return Err(Error::format(
                            Location::Byte(start),
                            format!("bare token {atom:?} outside brackets"),
                        ))
                    }
                }
            }
        }
    }
    if let Some((at, _)) = stack.last() {
        return Err(Error::format(Location::Byte(*at), "unbalanced '(': never closed"));
    }
    Ok(top)
}

/// Intermediate tree after empty-element removal.
enum Draft {
    Internal { label: String, children: Vec<Draft> },
    Leaf(String),
}

/// `Ok(None)` means the subtree vanished through `-NONE-` removal.
fn to_draft(sexp: &Sexp<'_>) -> Result<Option<Draft>> {
    let (items, at) = match sexp {
        Sexp::Atom(a) => return Ok(Some(Draft::Leaf((*a).to_string()))),
        Sexp::List { items, at } => (items, *at),
    };
    let (label, rest) = match items.split_first() {
        None => return Err(Error::format(Location::Byte(at), "empty expression '()'")),
        Some((Sexp::Atom(l), rest)) => (l.to_string(), rest),
        Some(_) => (String::new(), &items[..]),
    };
    if label == EMPTY_ELEMENT {
        return Ok(None);
    }
    if rest.is_empty() {
        return Err(Error::format(
            Location::Byte(at),
            format!("constituent {label:?} has no children"),
        ));
    }
    let mut children = Vec::with_capacity(rest.len());
    for child in rest {
        if let Some(d) = to_draft(child)? {
            children.push(d);
        }
    }
    if children.is_empty() {
        return Ok(None);
    }
    Ok(Some(Draft::Internal { label, children }))
}

fn to_tree(sexp: Sexp<'_>, number: usize) -> Result<SyntaxTree> {
    let at = match &sexp {
        Sexp::List { at, items } if items.is_empty() => {
            return Err(Error::format(Location::Byte(*at), "empty top-level expression"))
        }
        Sexp::List { at, .. } => *at,
        Sexp::Atom(_) => unreachable!("top-level atoms are rejected while reading"),
    };
    let mut draft = to_draft(&sexp)?.ok_or_else(|| {
        Error::Structure(format!(
            "tree {number} (byte {at}) has no tokens after removing empty elements"
        ))
    })?;
    loop {
        match draft {
            Draft::Internal {
                ref label,
                ref mut children,
            } if label.is_empty() && children.len() == 1 && matches!(children[0], Draft::Internal { .. }) => {
                draft = children.pop().unwrap();
            }
            _ => break,
        }
    }
    if let Draft::Leaf(_) = draft {
        return Err(Error::Structure(format!("tree {number} is a bare token")));
    }

    let mut tree = SyntaxTree {
        kind: TreeKind::Constituency,
        tokens: Vec::new(),
        nodes: Vec::new(),
        root: 1,
    };
    number_nodes(draft, None, &mut tree);
    Ok(tree)
}

/// Preorder numbering from 1; leaves receive token indices in reading order.
fn number_nodes(draft: Draft, parent: Option<usize>, tree: &mut SyntaxTree) {
    let id = tree.nodes.len() + 1;
    match draft {
        Draft::Leaf(form) => {
            let index = tree.tokens.len() + 1;
            tree.nodes.push(Node {
                id,
                label: form.clone(),
                parent,
                token: Some(index),
            });
            tree.tokens.push(Token { index, form });
        }
        Draft::Internal { label, children } => {
            tree.nodes.push(Node {
                id,
                label,
                parent,
                token: None,
            });
            for c in children {
                number_nodes(c, Some(id), tree);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::validate;

    fn shape(t: &SyntaxTree) -> Vec<(usize, String, Option<usize>, Option<usize>)> {
        t.nodes
            .iter()
            .map(|n| (n.id, n.label.clone(), n.parent, n.token))
            .collect()
    }

    #[test]
    fn simple_sentence() {
        let t = parse_ptb("(S (NP she) (VP eats))").unwrap().remove(0);
        assert_eq!(
            shape(&t),
            vec![
                (1, "S".into(), None, None),
                (2, "NP".into(), Some(1), None),
                (3, "she".into(), Some(2), Some(1)),
                (4, "VP".into(), Some(1), None),
                (5, "eats".into(), Some(4), Some(2)),
            ]
        );
        assert_eq!(t.root, 1);
        assert!(validate(&t).is_empty());
    }

    #[test]
    fn unbalanced() {
        let err = parse_ptb("(S (NP she) (VP eats)").unwrap_err();
        assert!(
            matches!(
                err,
                Error::Format {
                    at: Location::Byte(0),
                    ..
                }
            ),
            "{err}"
        );
        let err = parse_ptb("(S (NP she)))").unwrap_err();
        assert!(
            matches!(
                err,
                Error::Format {
                    at: Location::Byte(12),
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn empty_elements_removed() {
        let t = parse_ptb("(S (-NONE- *) (VP eats))").unwrap().remove(0);
        assert_eq!(
            shape(&t),
            vec![
                (1, "S".into(), None, None),
                (2, "VP".into(), Some(1), None),
                (3, "eats".into(), Some(2), Some(1)),
            ]
        );
        // A constituent holding only an empty element disappears too.
        let t = parse_ptb("(S (NP (-NONE- *T*-1)) (VP eats))").unwrap().remove(0);
        assert_eq!(t.nodes.len(), 3);
    }

    #[test]
    fn empty_top_level() {
        assert!(matches!(parse_ptb("()"), Err(Error::Format { .. })));
        assert!(matches!(parse_ptb("( )"), Err(Error::Format { .. })));
    }

    #[test]
    fn wrapper_and_function_tags() {
        let trees = parse_ptb("( (S (NP-SBJ=2 (PRP she)) (VP (VBZ eats))) )\n(X (Y a))").unwrap();
        assert_eq!(trees.len(), 2);
        let t = &trees[0];
        assert_eq!(t.node(1).unwrap().label, "S");
        assert_eq!(t.node(2).unwrap().label, "NP-SBJ=2");
        assert_eq!(
            t.tokens.iter().map(|x| x.form.as_str()).collect::<Vec<_>>(),
            ["she", "eats"]
        );
    }

    #[test]
    fn bare_atom_is_error() {
        assert!(matches!(
            parse_ptb("word (S (A b))"),
            Err(Error::Format {
                at: Location::Byte(0),
                ..
            })
        ));
    }
}
