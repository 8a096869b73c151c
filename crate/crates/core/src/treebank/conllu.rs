use super::{join_violations, validate, Node, SyntaxTree, Token, TreeKind};
use crate::error::{Error, Location, Result};

const COLUMNS: usize = 10;
const ID: usize = 0;
const FORM: usize = 1;
const HEAD: usize = 6;
const DEPREL: usize = 7;

struct Row {
    form: String,
    head: usize,
    deprel: String,
    line: usize,
}

/// Parses a CoNLL-U document into one dependency tree per sentence.
///
/// Multiword ranges (`3-4`) and empty nodes (`5.1`) are skipped. Node ids
/// equal token indices and node labels carry the DEPREL column.
pub fn parse_conllu(text: &str) -> Result<Vec<SyntaxTree>> {
    let mut trees = Vec::new();
    let mut rows: Vec<Row> = Vec::new();

    for (lineno, raw) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !rows.is_empty() {
                trees.push(build(std::mem::take(&mut rows), trees.len() + 1)?);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != COLUMNS {
            return Err(Error::format(
                Location::Line(lineno),
                format!("expected {COLUMNS} tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[ID];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let id: usize = id
            .parse()
            .map_err(|_| Error::format(Location::Line(lineno), format!("invalid token id {id:?}")))?;
        if id != rows.len() + 1 {
            return Err(Error::format(
                Location::Line(lineno),
                format!("token id {id} out of sequence, expected {}", rows.len() + 1),
            ));
        }
        let head: usize = cols[HEAD]
            .parse()
            .map_err(|_| Error::format(Location::Line(lineno), format!("invalid HEAD {:?}", cols[HEAD])))?;
        rows.push(Row {
            form: cols[FORM].to_string(),
            head,
            deprel: cols[DEPREL].to_string(),
            line: lineno,
        });
    }
    if !rows.is_empty() {
        trees.push(build(rows, trees.len() + 1)?);
    }
    Ok(trees)
}

fn build(rows: Vec<Row>, sentence: usize) -> Result<SyntaxTree> {
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.head > n) {
        return Err(Error::Structure(format!(
            "sentence {sentence}: line {}: HEAD {} refers to a nonexistent token",
            r.line, r.head
        )));
    }
    let root = rows.iter().position(|r| r.head == 0).map_or(0, |p| p + 1);
    let mut tokens = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    for (i, r) in rows.into_iter().enumerate() {
        let index = i + 1;
        nodes.push(Node {
            id: index,
            label: r.deprel,
            parent: (r.head != 0).then_some(r.head),
            token: Some(index),
        });
        tokens.push(Token { index, form: r.form });
    }
    let tree = SyntaxTree {
        kind: TreeKind::Dependency,
        tokens,
        nodes,
        root,
    };
    let violations = validate(&tree);
    if !violations.is_empty() {
        return Err(Error::Structure(format!(
            "sentence {sentence}: {}",
            join_violations(&violations)
        )));
    }
    Ok(tree)
}
