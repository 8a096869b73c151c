use std::io::Read;
use std::path::Path;

use clap::ValueEnum;
use synattn::treebank::trees_from_json;
use synattn::{parse_conllu, parse_ptb, Matrix, SyntaxTree};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeFormat {
    Conllu,
    Ptb,
    /// Canonical tree JSON, as written by `parse`.
    Json,
}

impl TreeFormat {
    fn from_path(path: &Path) -> Option<TreeFormat> {
        match path.extension()?.to_str()? {
            "conllu" | "conll" => Some(TreeFormat::Conllu),
            "ptb" | "mrg" | "tree" | "trees" => Some(TreeFormat::Ptb),
            "json" => Some(TreeFormat::Json),
            _ => None,
        }
    }
}

/// Reads a file, or stdin for `-`.
pub fn read_text(path: &Path) -> CliResult<String> {
    let mut text = String::new();
    let read = if path == Path::new("-") {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map(|_| ())
    };
    read.map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(text)
}

pub fn read_trees(path: &Path, format: Option<TreeFormat>) -> CliResult<Vec<SyntaxTree>> {
    let shown = path.display().to_string();
    let format = format
        .or_else(|| TreeFormat::from_path(path))
        .ok_or_else(|| CliError::usage(format!("cannot tell the tree format of {shown}; pass --format")))?;
    let text = read_text(path)?;
    let trees = match format {
        TreeFormat::Conllu => parse_conllu(&text),
        TreeFormat::Ptb => parse_ptb(&text),
        TreeFormat::Json => trees_from_json(&text),
    };
    trees.map_err(|e| CliError::from(e).in_file(&shown))
}

/// Sentence-aligned trees from several files: entry `k` holds the k-th tree
/// of every file.
pub fn read_sentences(paths: &[impl AsRef<Path>], format: Option<TreeFormat>) -> CliResult<Vec<Vec<SyntaxTree>>> {
    if paths.is_empty() {
        return Err(CliError::usage("no input tree files given"));
    }
    let files = paths
        .iter()
        .map(|p| read_trees(p.as_ref(), format))
        .collect::<CliResult<Vec<_>>>()?;
    let count = files[0].len();
    if let Some((k, f)) = files.iter().enumerate().find(|(_, f)| f.len() != count) {
        return Err(CliError {
            code: crate::error::exit::STRUCTURE,
            message: format!(
                "{} has {} trees but {} has {count}",
                paths[k].as_ref().display(),
                f.len(),
                paths[0].as_ref().display()
            ),
        });
    }
    let mut files: Vec<_> = files.into_iter().map(Vec::into_iter).collect();
    Ok((0..count)
        .map(|_| files.iter_mut().map(|f| f.next().unwrap()).collect())
        .collect())
}

/// One n × d matrix per sentence, stored as a JSON array of row arrays.
pub fn read_embeddings(path: &Path) -> CliResult<Vec<Matrix>> {
    let shown = path.display().to_string();
    let text = read_text(path)?;
    let raw: Vec<Vec<Vec<f64>>> = serde_json::from_str(&text).map_err(|e| CliError::format(format!("{shown}: {e}")))?;
    raw.iter()
        .enumerate()
        .map(|(k, rows)| {
            Matrix::from_rows(rows).map_err(|e| CliError::from(e).in_file(&format!("{shown} sentence {}", k + 1)))
        })
        .collect()
}
