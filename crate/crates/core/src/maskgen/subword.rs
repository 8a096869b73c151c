use std::ops::Range;

use super::Mask;
use crate::error::{Error, Result};

/// Word-to-subword alignment: word `w` expands to the subword positions
/// `spans[w]` (0-based, half-open). Spans tile `0..subword_count` in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    spans: Vec<Range<usize>>,
}

impl Alignment {
    pub fn new(spans: Vec<Range<usize>>) -> Result<Self> {
        let mut next = 0;
        for (w, span) in spans.iter().enumerate() {
            if span.start != next || span.end <= span.start {
                return Err(Error::Structure(format!(
                    "alignment span for word {} is {}..{}, expected a nonempty span starting at {next}",
                    w + 1,
                    span.start,
                    span.end
                )));
            }
            next = span.end;
        }
        Ok(Alignment { spans })
    }

    /// From the number of subwords each word splits into.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let mut start = 0;
        let spans = counts
            .iter()
            .map(|&c| {
                let span = start..start + c;
                start += c;
                span
            })
            .collect();
        Alignment::new(spans)
    }

    pub fn identity(n: usize) -> Self {
        Alignment {
            spans: (0..n).map(|i| i..i + 1).collect(),
        }
    }

    pub fn word_count(&self) -> usize {
        self.spans.len()
    }

    pub fn subword_count(&self) -> usize {
        self.spans.last().map_or(0, |s| s.end)
    }

    pub fn spans(&self) -> &[Range<usize>] {
        &self.spans
    }

    /// Word index of every subword position.
    pub fn word_of(&self) -> Vec<usize> {
        self.spans
            .iter()
            .enumerate()
            .flat_map(|(w, s)| s.clone().map(move |_| w))
            .collect()
    }
}

/// Lifts a word-level mask to subwords: subwords `p`, `q` are connected iff
/// their words are. The diagonal is set afterwards when `self_loops` is on.
pub fn expand_to_subwords(mask: &Mask, alignment: &Alignment, self_loops: bool) -> Result<Mask> {
    if mask.n() != alignment.word_count() {
        return Err(Error::dim(format!(
            "mask covers {} words but the alignment has {}",
            mask.n(),
            alignment.word_count()
        )));
    }
    let word = alignment.word_of();
    let rows = word
        .iter()
        .enumerate()
        .map(|(p, &wp)| {
            let mut row: Vec<usize> = mask
                .row(wp)
                .iter()
                .flat_map(|&wq| alignment.spans[wq].clone())
                .collect();
            if self_loops {
                row.push(p);
            }
            row
        })
        .collect();
    Mask::from_rows(word.len(), *mask.spec(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskgen::MaskSpec;
    use crate::treebank::TreeKind;

    fn spec() -> MaskSpec {
        MaskSpec::parent(TreeKind::Dependency, 1)
    }

    #[test]
    fn identity_alignment_is_noop() {
        let m = Mask::from_fn(4, spec(), |i, j| (i * 3 + j) % 5 == 0);
        assert_eq!(expand_to_subwords(&m, &Alignment::identity(4), false).unwrap(), m);
    }

    #[test]
    fn split_word_copies_column() {
        // words 1,2,3 -> subwords {1}, {2,3}, {4}
        let al = Alignment::from_counts(&[1, 2, 1]).unwrap();
        let m = Mask::from_fn(3, spec(), |i, j| i == 0 && j == 1);
        let out = expand_to_subwords(&m, &al, false).unwrap();
        let ones: Vec<(usize, usize)> = (0..4).flat_map(|i| out.row(i).iter().map(move |&j| (i, j))).collect();
        assert_eq!(ones, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn bad_alignment() {
        assert!(Alignment::from_counts(&[1, 0, 2]).is_err());
        assert!(Alignment::new(vec![0..1, 2..3]).is_err());
        let m = Mask::identity(2, spec());
        let al = Alignment::identity(3);
        assert!(expand_to_subwords(&m, &al, true).is_err());
    }
}
