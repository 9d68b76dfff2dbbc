//! Log-space helpers shared by the closed-form evaluators.

/// `ln C(n, k)`.
pub(crate) fn ln_binom(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Log mass of the negative binomial law: `failures` outcomes of probability
/// `1 - p` observed before the `successes`-th outcome of probability `p`,
/// i.e. `C(failures + successes - 1, failures) p^successes (1-p)^failures`.
pub(crate) fn ln_negbin(failures: u64, successes: u64, ln_p: f64, ln_q: f64) -> f64 {
    debug_assert!(successes >= 1);
    ln_binom(failures + successes - 1, failures) + successes as f64 * ln_p + failures as f64 * ln_q
}

/// Sums non-negative terms smallest first.
pub(crate) fn ascending_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(|a, b| a.total_cmp(b));
    terms.iter().sum()
}

/// Sums `exp(ln_term(j))` for `j = start, start+1, ...`, stopping once the
/// remainder is provably below `tol`.
///
/// `ratio(j)` must bound `term(j+1) / term(j)` from above and be
/// non-increasing in `j`; once it drops below 1 the remainder after `j` is at
/// most `term(j) * r / (1 - r)`. Returns `(sum, remainder_bound)`.
pub(crate) fn tail_sum(
    start: u64,
    ln_term: impl Fn(u64) -> f64,
    ratio: impl Fn(u64) -> f64,
    tol: f64,
) -> (f64, f64) {
    const MAX_TERMS: u64 = 10_000_000;
    let mut terms = Vec::new();
    let mut j = start;
    let remainder = loop {
        let t = ln_term(j).exp();
        terms.push(t);
        let r = ratio(j);
        if r < 1.0 {
            let bound = t * r / (1.0 - r);
            if bound < tol {
                break bound;
            }
        }
        j += 1;
        if j - start >= MAX_TERMS {
            // Unreachable for alpha < 1/2; report the last term as the error.
            break f64::INFINITY;
        }
    };
    (ascending_sum(&mut terms), remainder)
}
