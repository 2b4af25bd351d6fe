//! Evidence for the range of Banach limits of a bounded real sequence.

use serde::Serialize;

use crate::error::{Error, Result};

/// Extremal length-`len` window averages `(x_k + … + x_{k+len−1}) / len` over `1 <= k <= horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowExtrema {
    pub len: usize,
    pub max: f64,
    pub argmax: usize,
    pub min: f64,
    pub argmin: usize,
    /// The maximising window is constant.
    pub max_plateau: bool,
    /// The minimising window is constant.
    pub min_plateau: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BanachReport {
    pub horizon: usize,
    /// `(n, (x_1 + … + x_n) / n)` at doubling checkpoints and any requested extras.
    pub checkpoints: Vec<(usize, f64)>,
    pub windows: Vec<WindowExtrema>,
}

/// `(x_1 + … + x_n) / n` where `seq[0] = x_1`.
pub fn cesaro_mean_at(seq: &[f64], n: usize) -> Result<f64> {
    if n == 0 || n > seq.len() {
        return Err(Error::Input(format!("mean at {n} needs 1 <= n <= {}", seq.len())));
    }
    Ok(seq[..n].iter().sum::<f64>() / n as f64)
}

/// Partial means and window extrema of `x_1, x_2, …` (with `seq[0] = x_1`).
///
/// A constant window of length `L` at value `v` for every tested `L` is evidence that
/// `v` lies in the range of Banach limits; nothing is claimed beyond the horizon.
pub fn banach_range_bounds(
    seq: &[f64],
    horizon: usize,
    l_max: usize,
    extra_checkpoints: &[usize],
) -> Result<BanachReport> {
    let needed = horizon + l_max.saturating_sub(1);
    if horizon == 0 || seq.len() < needed {
        return Err(Error::Input(format!(
            "horizon exhausted: {needed} values needed, {} given",
            seq.len()
        )));
    }
    let mut prefix = Vec::with_capacity(seq.len() + 1);
    prefix.push(0.0);
    for &x in seq {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + x);
    }
    let mut points: Vec<usize> = std::iter::successors(Some(1usize), |n| n.checked_mul(2))
        .take_while(|&n| n <= horizon)
        .collect();
    for &n in extra_checkpoints {
        if n == 0 || n > seq.len() {
            return Err(Error::Input(format!("checkpoint {n} outside 1..={}", seq.len())));
        }
        points.push(n);
    }
    points.sort_unstable();
    points.dedup();
    let checkpoints = points.into_iter().map(|n| (n, prefix[n] / n as f64)).collect();

    let windows = (1..=l_max)
        .map(|len| {
            let avg = |k: usize| (prefix[k - 1 + len] - prefix[k - 1]) / len as f64;
            let (mut max, mut argmax, mut min, mut argmin) = (f64::NEG_INFINITY, 1, f64::INFINITY, 1);
            for k in 1..=horizon {
                let a = avg(k);
                if a > max {
                    (max, argmax) = (a, k);
                }
                if a < min {
                    (min, argmin) = (a, k);
                }
            }
            let constant = |k: usize| seq[k - 1..k - 1 + len].iter().all(|&x| x == seq[k - 1]);
            WindowExtrema { len, max, argmax, min, argmin, max_plateau: constant(argmax), min_plateau: constant(argmin) }
        })
        .collect();
    Ok(BanachReport { horizon, checkpoints, windows })
}

impl BanachReport {
    pub fn mean_at(&self, n: usize) -> Option<f64> {
        self.checkpoints.iter().find(|(m, _)| *m == n).map(|(_, v)| *v)
    }

    /// Every tested window length has a constant window at the maximum value `v`.
    pub fn plateaus_at_max(&self, v: f64) -> bool {
        self.windows.iter().all(|w| w.max_plateau && w.max == v)
    }

    pub fn plateaus_at_min(&self, v: f64) -> bool {
        self.windows.iter().all(|w| w.min_plateau && w.min == v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lazyop::{WeightGen, WeightRule};

    #[test]
    fn constant_sequence() {
        let seq = vec![0.75; 100];
        let r = banach_range_bounds(&seq, 90, 10, &[]).unwrap();
        assert!(r.checkpoints.iter().all(|&(_, v)| v == 0.75));
        assert!(r.plateaus_at_max(0.75) && r.plateaus_at_min(0.75));
        assert_eq!(r.checkpoints.iter().map(|c| c.0).collect::<Vec<_>>(), [1, 2, 4, 8, 16, 32, 64]);
    }

    #[test]
    fn horizon_exhausted() {
        assert!(matches!(banach_range_bounds(&[1.0; 10], 10, 2, &[]), Err(Error::Input(_))));
        assert!(banach_range_bounds(&[1.0; 11], 10, 2, &[]).is_ok());
    }

    #[test]
    fn run_indicator_evidence() {
        let g = WeightGen::new(WeightRule::RunIndicator { base: 3, high: 2.0 });
        let k = 3usize.pow(10);
        let seq: Vec<f64> = (1..=(k + 10) as i64).map(|n| g.value(n)).collect();
        let r = banach_range_bounds(&seq, k, 10, &[k]).unwrap();
        // Oracle: runs [3^l, 3^l + l) for l = 1..=10 contribute l extra units each.
        let extra: usize = (1..=10).sum::<usize>() - 10 + 1;
        assert_eq!(r.mean_at(k).unwrap(), (k + extra) as f64 / k as f64);
        assert!(r.plateaus_at_max(2.0));
        assert!(r.plateaus_at_min(1.0));
        assert_eq!(r.windows[9].argmax, k);
    }

    #[test]
    fn non_convergent_means() {
        // 2 on [3^l, 2·3^l) for l >= 1, else 1.
        let x = |n: usize| {
            let mut p = 3;
            while p <= n {
                if n < 2 * p {
                    return 2.0;
                }
                p *= 3;
            }
            1.0
        };
        let seq: Vec<f64> = (1..=2 * 3usize.pow(8)).map(x).collect();
        assert_eq!(cesaro_mean_at(&seq, 27).unwrap(), 40.0 / 27.0);
        assert_eq!(cesaro_mean_at(&seq, 54).unwrap(), 93.0 / 54.0);
        for l in 3..=8u32 {
            let p = 3usize.pow(l);
            let gap = cesaro_mean_at(&seq, 2 * p).unwrap() - cesaro_mean_at(&seq, p).unwrap();
            assert!(gap > 0.2, "l = {l}: {gap}");
        }
    }
}
