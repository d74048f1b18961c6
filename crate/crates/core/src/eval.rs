//! Exact-match span scoring.
//!
//! A predicted span counts as a true positive only when a gold span in the
//! same sentence has identical start, end and class. Counts are pooled per
//! class over the whole corpus. Macro scores are unweighted means of the
//! per-class values, so macro F1 is the mean of per-class F1 and in general
//! differs from the harmonic mean of macro precision and macro recall:
//!
//! ```
//! use nerkit::eval::f_score;
//!
//! // A reported macro triple P = 86.47, R = 89.49, F1 = 87.91: the harmonic
//! // mean of P and R is 87.95, so F1 there is a mean of per-class scores.
//! let harmonic = f_score(86.47, 89.49);
//! assert!((harmonic - 87.95).abs() < 0.005);
//! assert!((harmonic - 87.91).abs() > 0.03);
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{repair_bio, tags_to_spans, BioTag, Corpus, EntityClass, EntitySpan, NUM_LABELS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("corpora have {gold} and {pred} sentences")]
    SentenceCount { gold: usize, pred: usize },
    #[error("sentence {index}: gold has {gold} tokens, prediction has {pred}")]
    TokenCount { index: usize, gold: usize, pred: usize },
    #[error("sentence {index} of the {side} corpus has no tags")]
    Untagged { side: &'static str, index: usize },
    #[error("sentence {index} of the gold corpus is not valid BIO (token {token})")]
    InvalidGold { index: usize, token: usize },
}

impl EvalError {
    /// First sentence index at which the two corpora disagree, if the error
    /// is a misalignment.
    pub fn mismatch_index(&self) -> Option<usize> {
        match self {
            EvalError::SentenceCount { gold, pred } => Some(*gold.min(pred)),
            EvalError::TokenCount { index, .. } => Some(*index),
            _ => None,
        }
    }
}

/// `2PR/(P+R)`, zero when both are zero.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: EntityClass,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassScore {
    pub fn from_counts(class: EntityClass, tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        ClassScore {
            class,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f1: f_score(precision, recall),
        }
    }

    pub fn gold_spans(&self) -> usize {
        self.true_positives + self.false_negatives
    }

    pub fn predicted_spans(&self) -> usize {
        self.true_positives + self.false_positives
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// One entry per class, in canonical class order.
    pub per_class: Vec<ClassScore>,
    /// Classes the macro averages range over.
    pub macro_classes: Vec<EntityClass>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub sentences: usize,
    pub gold_spans: usize,
    pub predicted_spans: usize,
}

impl EvalReport {
    pub fn class(&self, class: EntityClass) -> &ClassScore {
        &self.per_class[class.index()]
    }

    /// Aligned plain-text table with percentages.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}", "class", "prec", "rec", "f1", "tp", "fp", "fn");
        let pct = |v: f64| format!("{:.2}", 100.0 * v);
        for s in &self.per_class {
            let _ = writeln!(
                out,
                "{:<8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}",
                s.class.as_str(),
                pct(s.precision),
                pct(s.recall),
                pct(s.f1),
                s.true_positives,
                s.false_positives,
                s.false_negatives
            );
        }
        let _ = writeln!(
            out,
            "{:<8}{:>8}{:>8}{:>8}",
            "macro",
            pct(self.macro_precision),
            pct(self.macro_recall),
            pct(self.macro_f1)
        );
        let _ = writeln!(
            out,
            "{:<8}{:>8}{:>8}{:>8}",
            "micro",
            pct(self.micro_precision),
            pct(self.micro_recall),
            pct(self.micro_f1)
        );
        let _ = writeln!(
            out,
            "sentences {}  gold spans {}  predicted spans {}",
            self.sentences, self.gold_spans, self.predicted_spans
        );
        out
    }
}

/// Checks sentence and token alignment and that both sides are tagged.
pub fn check_aligned(gold: &Corpus, pred: &Corpus) -> Result<(), EvalError> {
    for (index, (g, p)) in gold.iter().zip(pred.iter()).enumerate() {
        if g.len() != p.len() {
            return Err(EvalError::TokenCount { index, gold: g.len(), pred: p.len() });
        }
        if g.tags().is_none() {
            return Err(EvalError::Untagged { side: "gold", index });
        }
        if p.tags().is_none() {
            return Err(EvalError::Untagged { side: "predicted", index });
        }
    }
    if gold.len() != pred.len() {
        return Err(EvalError::SentenceCount { gold: gold.len(), pred: pred.len() });
    }
    Ok(())
}

/// Per-class (tp, fp, fn) for one sentence.
fn count_sentence(gold: &[EntitySpan], pred: &[EntitySpan], counts: &mut [[usize; 3]; 6]) {
    // Both lists are sorted and internally disjoint, so a merge suffices.
    let (mut i, mut j) = (0, 0);
    while i < gold.len() || j < pred.len() {
        match (gold.get(i), pred.get(j)) {
            (Some(g), Some(p)) if g == p => {
                counts[g.class.index()][0] += 1;
                i += 1;
                j += 1;
            }
            (Some(g), Some(p)) if g < p => {
                counts[g.class.index()][2] += 1;
                i += 1;
            }
            (Some(g), None) => {
                counts[g.class.index()][2] += 1;
                i += 1;
            }
            (_, Some(p)) => {
                counts[p.class.index()][1] += 1;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
}

/// Scores `pred` against `gold`. Predicted tags are BIO-repaired first.
///
/// With `include_absent_classes` the macro averages run over all six
/// classes; otherwise over classes with at least one gold or predicted span.
pub fn score(gold: &Corpus, pred: &Corpus, include_absent_classes: bool) -> Result<EvalReport, EvalError> {
    check_aligned(gold, pred)?;
    let mut counts = [[0usize; 3]; 6];
    for (index, (g, p)) in gold.iter().zip(pred.iter()).enumerate() {
        let gold_spans = tags_to_spans(g.tags().expect("checked")).map_err(|e| match e {
            crate::corpus::CorpusError::InvalidBio { index: token } => EvalError::InvalidGold { index, token },
            other => unreachable!("{other}"),
        })?;
        let pred_spans = tags_to_spans(&repair_bio(p.tags().expect("checked"))).expect("repaired tags are valid");
        count_sentence(&gold_spans, &pred_spans, &mut counts);
    }
    Ok(report_from_counts(&counts, gold.len(), include_absent_classes))
}

pub(crate) fn report_from_counts(
    counts: &[[usize; 3]; 6],
    sentences: usize,
    include_absent_classes: bool,
) -> EvalReport {
    let per_class: Vec<ClassScore> = EntityClass::ALL
        .iter()
        .map(|&c| {
            let [tp, fp, fn_] = counts[c.index()];
            ClassScore::from_counts(c, tp, fp, fn_)
        })
        .collect();
    let macro_classes: Vec<EntityClass> = per_class
        .iter()
        .filter(|s| include_absent_classes || s.gold_spans() + s.predicted_spans() > 0)
        .map(|s| s.class)
        .collect();
    let mean = |f: fn(&ClassScore) -> f64| {
        if macro_classes.is_empty() {
            0.0
        } else {
            macro_classes.iter().map(|c| f(&per_class[c.index()])).sum::<f64>() / macro_classes.len() as f64
        }
    };
    let macro_precision = mean(|s| s.precision);
    let macro_recall = mean(|s| s.recall);
    let macro_f1 = mean(|s| s.f1);

    let tp: usize = counts.iter().map(|c| c[0]).sum();
    let fp: usize = counts.iter().map(|c| c[1]).sum();
    let fn_: usize = counts.iter().map(|c| c[2]).sum();
    let micro_precision = ratio(tp, tp + fp);
    let micro_recall = ratio(tp, tp + fn_);
    EvalReport {
        per_class,
        macro_classes,
        macro_precision,
        macro_recall,
        macro_f1,
        micro_precision,
        micro_recall,
        micro_f1: f_score(micro_precision, micro_recall),
        sentences,
        gold_spans: tp + fn_,
        predicted_spans: tp + fp,
    }
}

/// Token-level confusion counts: `matrix[gold_id][pred_id]`.
pub fn confusion(gold: &Corpus, pred: &Corpus) -> Result<[[u64; NUM_LABELS]; NUM_LABELS], EvalError> {
    check_aligned(gold, pred)?;
    let mut matrix = [[0u64; NUM_LABELS]; NUM_LABELS];
    for (g, p) in gold.iter().zip(pred.iter()) {
        for (gt, pt) in g.tags().expect("checked").iter().zip(p.tags().expect("checked")) {
            matrix[gt.id()][pt.id()] += 1;
        }
    }
    Ok(matrix)
}

/// Fraction of tokens whose predicted tag equals the gold tag.
pub fn token_accuracy(gold: &Corpus, pred: &Corpus) -> Result<f64, EvalError> {
    let matrix = confusion(gold, pred)?;
    let total: u64 = matrix.iter().flatten().sum();
    let correct: u64 = (0..NUM_LABELS).map(|i| matrix[i][i]).sum();
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

/// Renders a confusion matrix with tag names as row and column headers.
pub fn confusion_table(matrix: &[[u64; NUM_LABELS]; NUM_LABELS]) -> String {
    let tags = BioTag::all();
    let mut out = format!("{:<8}", "gold\\pred");
    for t in tags {
        let _ = write!(out, "{:>8}", t.to_string());
    }
    out.push('\n');
    for (i, row) in matrix.iter().enumerate() {
        let _ = write!(out, "{:<8}", tags[i].to_string());
        for v in row {
            let _ = write!(out, "{v:>8}");
        }
        out.push('\n');
    }
    out
}
