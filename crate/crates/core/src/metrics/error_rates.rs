use crate::error::{Error, Result};

fn mismatch_fraction<T: PartialEq>(truth: &[T], decided: &[T]) -> Result<f64> {
    if truth.len() != decided.len() {
        return Err(Error::shape(
            "error rate inputs",
            truth.len(),
            decided.len(),
        ));
    }
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let errors = truth.iter().zip(decided).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / truth.len() as f64)
}

/// Empirical symbol error rate.
pub fn ser<T: PartialEq>(true_labels: &[T], decisions: &[T]) -> Result<f64> {
    mismatch_fraction(true_labels, decisions)
}

/// Empirical bit error rate.
pub fn ber(true_bits: &[bool], decided_bits: &[bool]) -> Result<f64> {
    mismatch_fraction(true_bits, decided_bits)
}
