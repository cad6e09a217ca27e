//! Small combinatorial visitors used by exact enumeration.

/// Calls `visit` once for every permutation of `items` (Heap's algorithm).
pub fn for_each_permutation<T, F: FnMut(&[T])>(items: &mut [T], mut visit: F) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Calls `visit` with every `k`-subset of `0..n`, in lexicographic order.
pub fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut visit: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        if idx[i] == i + n - k {
            return;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `n!` as a float, saturating to infinity.
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn heap_visits_every_permutation_once() {
        let mut items = vec![0, 1, 2, 3, 4];
        let mut seen = HashSet::new();
        for_each_permutation(&mut items, |p| {
            assert!(seen.insert(p.to_vec()));
        });
        assert_eq!(seen.len(), 120);
    }

    #[test]
    fn combinations_are_complete() {
        let mut count = 0;
        let mut seen = HashSet::new();
        for_each_combination(6, 3, |c| {
            count += 1;
            assert!(c.windows(2).all(|w| w[0] < w[1]));
            seen.insert(c.to_vec());
        });
        assert_eq!(count, 20);
        assert_eq!(seen.len(), 20);
        let mut empty = 0;
        for_each_combination(4, 0, |_| empty += 1);
        assert_eq!(empty, 1);
        let mut all = 0;
        for_each_combination(4, 4, |_| all += 1);
        assert_eq!(all, 1);
    }

    #[test]
    fn counts() {
        assert_eq!(factorial(5), 120.0);
        assert_eq!(binomial(16, 8), 12870.0);
        assert_eq!(binomial(17, 7), 19448.0);
    }
}
