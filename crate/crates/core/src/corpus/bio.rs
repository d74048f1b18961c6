//! BIO sequence checks and conversion to and from entity spans.

use super::{BioTag, CorpusError, EntitySpan};

fn continues(prev: Option<BioTag>, class: super::EntityClass) -> bool {
    matches!(prev, Some(BioTag::B(c)) | Some(BioTag::I(c)) if c == class)
}

/// Indices of `I-X` tags not preceded by `B-X` or `I-X` of the same class.
pub fn validate_bio(tags: &[BioTag]) -> Vec<usize> {
    let mut prev = None;
    let mut violations = Vec::new();
    for (i, &tag) in tags.iter().enumerate() {
        if let BioTag::I(class) = tag {
            if !continues(prev, class) {
                violations.push(i);
            }
        }
        prev = Some(tag);
    }
    violations
}

/// Rewrites every dangling `I-X` to `B-X`. Valid input comes back unchanged.
pub fn repair_bio(tags: &[BioTag]) -> Vec<BioTag> {
    let mut out: Vec<BioTag> = Vec::with_capacity(tags.len());
    for &tag in tags {
        let fixed = match tag {
            BioTag::I(class) if !continues(out.last().copied(), class) => BioTag::B(class),
            other => other,
        };
        out.push(fixed);
    }
    out
}

/// Maximal `B-X (I-X)*` runs as spans, in start order.
pub fn tags_to_spans(tags: &[BioTag]) -> Result<Vec<EntitySpan>, CorpusError> {
    if let Some(&index) = validate_bio(tags).first() {
        return Err(CorpusError::InvalidBio { index });
    }
    let mut spans = Vec::new();
    let mut open: Option<EntitySpan> = None;
    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            BioTag::I(_) => {
                if let Some(span) = open.as_mut() {
                    span.end = i + 1;
                }
            }
            BioTag::B(class) => {
                spans.extend(open.take());
                open = Some(EntitySpan::new(i, i + 1, class));
            }
            BioTag::O => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    Ok(spans)
}

/// Renders disjoint spans as a BIO sequence of length `n`.
pub fn spans_to_tags(spans: &[EntitySpan], n: usize) -> Result<Vec<BioTag>, CorpusError> {
    let mut sorted = spans.to_vec();
    sorted.sort();
    for span in &sorted {
        if span.start >= span.end || span.end > n {
            return Err(CorpusError::SpanOutOfRange { start: span.start, end: span.end, len: n });
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(CorpusError::OverlappingSpans {
                first_start: pair[0].start,
                first_end: pair[0].end,
                second_start: pair[1].start,
                second_end: pair[1].end,
            });
        }
    }
    let mut tags = vec![BioTag::O; n];
    for span in &sorted {
        tags[span.start] = BioTag::B(span.class);
        for tag in &mut tags[span.start + 1..span.end] {
            *tag = BioTag::I(span.class);
        }
    }
    Ok(tags)
}
