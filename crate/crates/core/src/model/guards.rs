//! Index ranges on which the individual terms of the transition tensor and of the
//! indirect (tax/welfare) variations exist. All indices are 1-based class numbers.

/// `C^i_{i+1,k}`: an `(i+1)`-individual pays a `k`-individual and drops to class `i`.
#[inline]
pub fn descent_entry(i: usize, k: usize, n: usize) -> bool {
    i < n && k < n
}

/// Second addendum of `C^i_{i,k}`: a `k`-individual pays an `i`-individual, who leaves upward.
#[inline]
pub fn diagonal_gain_term(i: usize, k: usize, n: usize) -> bool {
    i < n && k >= 2
}

/// Third addendum of `C^i_{i,k}`: the `i`-individual pays and leaves downward.
#[inline]
pub fn diagonal_payment_term(i: usize, k: usize, n: usize) -> bool {
    i >= 2 && k < n
}

/// `C^i_{i-1,k}`: an `(i-1)`-individual is paid by a `k`-individual and rises to class `i`.
#[inline]
pub fn ascent_entry(i: usize, k: usize) -> bool {
    i >= 2 && k >= 2
}

/// Welfare inflow into class `i` from class `i - 1`.
#[inline]
pub fn welfare_inflow(i: usize) -> bool {
    i >= 2
}

/// Welfare outflow from class `i` to class `i + 1`.
#[inline]
pub fn welfare_outflow(i: usize, n: usize) -> bool {
    i < n
}

/// Tax-payment inflow into class `i` from a payer of class `i + 1`.
#[inline]
pub fn tax_inflow(i: usize, n: usize) -> bool {
    i < n
}

/// Tax-payment outflow from a payer of class `i` to class `i - 1`.
#[inline]
pub fn tax_outflow(i: usize) -> bool {
    i >= 2
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: usize = 5;

    #[test]
    fn descent_guard() {
        assert!(descent_entry(1, 1, N));
        assert!(descent_entry(4, 4, N));
        assert!(!descent_entry(5, 1, N));
        assert!(!descent_entry(1, 5, N));
    }

    #[test]
    fn diagonal_gain_guard() {
        assert!(diagonal_gain_term(1, 2, N));
        assert!(!diagonal_gain_term(1, 1, N));
        assert!(!diagonal_gain_term(5, 3, N));
        assert!(diagonal_gain_term(4, 5, N));
    }

    #[test]
    fn diagonal_payment_guard() {
        assert!(diagonal_payment_term(2, 1, N));
        assert!(!diagonal_payment_term(1, 1, N));
        assert!(!diagonal_payment_term(3, 5, N));
        assert!(diagonal_payment_term(5, 4, N));
    }

    #[test]
    fn ascent_guard() {
        assert!(ascent_entry(2, 2));
        assert!(!ascent_entry(1, 3));
        assert!(!ascent_entry(3, 1));
        assert!(ascent_entry(5, 5));
    }

    #[test]
    fn welfare_guards() {
        assert!(!welfare_inflow(1));
        assert!(welfare_inflow(2) && welfare_inflow(N));
        assert!(welfare_outflow(1, N) && welfare_outflow(N - 1, N));
        assert!(!welfare_outflow(N, N));
    }

    #[test]
    fn tax_guards() {
        assert!(tax_inflow(1, N) && tax_inflow(N - 1, N));
        assert!(!tax_inflow(N, N));
        assert!(!tax_outflow(1));
        assert!(tax_outflow(2) && tax_outflow(N));
    }
}
