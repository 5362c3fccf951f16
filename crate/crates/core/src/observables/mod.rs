//! Observables of the spanning-tree measure: overlaps, length, diameter, local
//! structure, walk diagnostics and exact identity checks.
//!
//! Every observable has an exact path (gated by enumeration or solver size) and a
//! Monte Carlo path. Monte Carlo estimators draw replica `i` from the substream with
//! index `i` and aggregate in index order, so results do not depend on the worker count.

pub mod checks;
pub mod diagnostics;
pub mod local;
pub mod overlap;

pub use checks::{
    bump_step_verify, bump_sweep, derivative_checks, derivative_report, mst_equality_probability,
    tv_distance,
    BumpReport, DerivativeReport,
};
pub use diagnostics::{
    bottleneck_exhaustive, bottleneck_heuristic, heat_cheeger_bound, walk_diagnostics,
    BottleneckProfile, WalkDiagnostics, EXHAUSTIVE_LIMIT, KERNEL_LIMIT,
};
pub use local::{
    count_tree_maps, local_ball, pattern_path, pattern_star, rooted_isomorphic,
    sample_poisson_backbone_ball, tree_moment_report, LocalBall, TreeMomentReport,
};
pub use overlap::{
    edge_overlap_exact, edge_overlap_mc, expected_length_exact, overlap_report, tree_length,
    tree_overlap_exact, OverlapReport,
};

/// A Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean (0 for exact values or a single sample).
    pub stderr: f64,
    pub count: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            stderr: 0.0,
            count: 0,
        }
    }

    /// Mean and standard error of i.i.d. samples, summed in the given order.
    pub fn from_samples(xs: &[f64]) -> Self {
        let k = xs.len();
        if k == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                count: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / k as f64;
        let stderr = if k > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr,
            count: k,
        }
    }

    /// Number of combined standard errors separating two estimates.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let s = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        let d = (self.mean - other.mean).abs();
        if s == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / s
        }
    }
}

/// Median of a sample (mean of the two middle values for even sizes).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
