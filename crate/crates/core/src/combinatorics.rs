//! Binomial coefficients and lexicographic combination unranking.

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// Number of monomials of degree 1..=`degree` over `n` variables.
pub fn terms_up_to_degree(n: u64, degree: u64) -> Option<u128> {
    (1..=degree.min(n)).try_fold(0u128, |acc, k| acc.checked_add(binomial(n, k)?))
}

/// The `rank`-th k-subset of `{0, .., n-1}` in lexicographic order.
pub fn unrank_combination(n: u64, k: u64, mut rank: u128) -> Vec<u64> {
    let mut out = Vec::with_capacity(k as usize);
    let mut next = 0u64;
    for slot in 0..k {
        let remaining = k - slot - 1;
        loop {
            // subsets starting with `next` at this slot
            let block = binomial(n - next - 1, remaining).unwrap_or(u128::MAX);
            if rank < block {
                out.push(next);
                next += 1;
                break;
            }
            rank -= block;
            next += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(6, 3), Some(20));
        assert_eq!(binomial(39, 4), Some(82_251));
        assert_eq!(binomial(5, 0), Some(1));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(130, 65), None);
    }

    #[test]
    fn unranking_enumerates_all_subsets_in_order() {
        let all: Vec<_> = (0..binomial(5, 3).unwrap())
            .map(|r| unrank_combination(5, 3, r))
            .collect();
        let mut brute = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                for c in b + 1..5 {
                    brute.push(vec![a, b, c]);
                }
            }
        }
        assert_eq!(all, brute);
    }

    #[test]
    fn full_powerset_minus_empty() {
        for n in 1..=30 {
            assert_eq!(terms_up_to_degree(n, n), Some((1u128 << n) - 1));
        }
    }
}
