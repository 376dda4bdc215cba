use crate::engine::SupportConfig;
use crate::error::{Error, Result};

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `C(n, k)` supports of size `k`, lexicographic in the bitstring (qubit
/// 1 leftmost, `1` before `0`).
pub fn enumerate_supports(n: usize, k: usize) -> Result<Vec<SupportConfig>> {
    if k == 0 || k > n {
        return Err(Error::Config(format!("support size {k} outside 1..={n}")));
    }
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut combo: Vec<usize> = (1..=k).collect();
    loop {
        out.push(SupportConfig::from_qubits(&combo, n)?);
        // advance to the next k-combination of 1..=n
        let mut i = k;
        while i > 0 && combo[i - 1] == n - k + i {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        combo[i - 1] += 1;
        for j in i..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
    Ok(out)
}

/// Named support-size sets: `odd` = odd sizes in `3..n`, `even` = even sizes
/// in `2..n`, or an explicit list `ks=2,4`.
pub fn parse_size_set(spec: &str, n: usize) -> Result<Vec<usize>> {
    let spec = spec.trim();
    let sizes: Vec<usize> = match spec {
        "odd" => (3..n).step_by(2).collect(),
        "even" => (2..n).step_by(2).collect(),
        _ => {
            let list = spec.strip_prefix("ks=").unwrap_or(spec);
            list.split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Config(format!("bad size {t:?}: {e}"))))
                .collect::<Result<_>>()?
        }
    };
    if sizes.is_empty() || sizes.iter().any(|&k| k == 0 || k > n) {
        return Err(Error::Config(format!("support sizes {sizes:?} invalid for {n} qubits")));
    }
    Ok(sizes)
}

/// Sample-complexity scaling of a size-`k` operator under a random Clifford
/// unitary on its support, `(2^k + 1)^{1/k}`.
pub fn rc_baseline(k: usize) -> f64 {
    assert!(k >= 1, "baseline needs k >= 1");
    (2f64.powi(k as i32) + 1.0).powf(1.0 / k as f64)
}

/// Range of α reported for shallow random-Clifford circuits on contiguous
/// operators.
pub const SHALLOW_BAND: (f64, f64) = (2.0, 2.28);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(enumerate_supports(9, 2).unwrap().len(), 36);
        let odd: usize = [3, 5, 7].iter().map(|&k| enumerate_supports(9, k).unwrap().len()).sum();
        assert_eq!(odd, 246);
        let all = enumerate_supports(3, 3).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].to_string(), "111");
        assert!(enumerate_supports(3, 0).is_err());
        assert!(enumerate_supports(3, 4).is_err());
    }

    #[test]
    fn lexicographic_and_distinct() {
        let s: Vec<String> = enumerate_supports(4, 2).unwrap().iter().map(|q| q.to_string()).collect();
        assert_eq!(s, ["1100", "1010", "1001", "0110", "0101", "0011"]);
    }

    #[test]
    fn size_sets() {
        assert_eq!(parse_size_set("odd", 9).unwrap(), vec![3, 5, 7]);
        assert_eq!(parse_size_set("even", 9).unwrap(), vec![2, 4, 6, 8]);
        assert_eq!(parse_size_set("ks=3,5", 9).unwrap(), vec![3, 5]);
        assert!(parse_size_set("ks=10", 9).is_err());
    }

    #[test]
    fn baselines() {
        assert!((rc_baseline(1) - 3.0).abs() < 1e-15);
        assert!((rc_baseline(2) - 5f64.sqrt()).abs() < 1e-15);
        assert!((rc_baseline(4) - 2.0305).abs() < 5e-5);
        for k in 1..12 {
            assert!(rc_baseline(k + 1) < rc_baseline(k));
            assert!(rc_baseline(k) > 2.0);
        }
    }
}
