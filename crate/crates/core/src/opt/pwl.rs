//! Piecewise-linear segmentization of the exponential terms appearing in
//! quantal-response objectives, plus the per-target left-to-right fill
//! patterns that replace the binary variables of the MILP formulation.
//!
//! For each target `i` two functions of the exposure `y` are approximated
//! on `[0, 1]` with `K` equal segments: the decay `exp(-beta_i * y)` and
//! the weighted decay `y * exp(-beta_i * y)`. Slopes are exact secant
//! slopes between consecutive breakpoints `j / K`.

/// Secant-slope approximation of the per-target exponential terms.
#[derive(Debug, Clone)]
pub struct PwlApprox {
    pub segments: usize,
    pub betas: Vec<f64>,
    /// `decay_slopes[i][j]`: secant slope of `exp(-beta_i y)` on segment `j`.
    pub decay_slopes: Vec<Vec<f64>>,
    /// `weighted_slopes[i][j]`: secant slope of `y exp(-beta_i y)` on segment `j`.
    pub weighted_slopes: Vec<Vec<f64>>,
}

impl PwlApprox {
    pub fn build(betas: &[f64], segments: usize) -> Self {
        assert!(segments >= 1, "need at least one segment");
        let k = segments as f64;
        let decay = |beta: f64, y: f64| (-beta * y).exp();
        let weighted = |beta: f64, y: f64| y * (-beta * y).exp();
        let slopes = |f: &dyn Fn(f64, f64) -> f64, beta: f64| -> Vec<f64> {
            (1..=segments)
                .map(|j| {
                    let y0 = (j - 1) as f64 / k;
                    let y1 = j as f64 / k;
                    (f(beta, y1) - f(beta, y0)) * k
                })
                .collect()
        };
        PwlApprox {
            segments,
            betas: betas.to_vec(),
            decay_slopes: betas.iter().map(|&b| slopes(&decay, b)).collect(),
            weighted_slopes: betas.iter().map(|&b| slopes(&weighted, b)).collect(),
        }
    }

    pub fn segment_width(&self) -> f64 {
        1.0 / self.segments as f64
    }

    /// Splits a level `y` in `[0, 1]` into left-to-right segment fills.
    pub fn fills_for_level(&self, y: f64) -> Vec<f64> {
        let width = self.segment_width();
        (0..self.segments)
            .map(|j| (y - j as f64 * width).clamp(0.0, width))
            .collect()
    }

    /// Piecewise-linear value of `exp(-beta_i y)`.
    pub fn decay_value(&self, i: usize, y: f64) -> f64 {
        1.0 + self.decay_slopes[i]
            .iter()
            .zip(self.fills_for_level(y))
            .map(|(s, fill)| s * fill)
            .sum::<f64>()
    }

    /// Piecewise-linear value of `y exp(-beta_i y)`.
    pub fn weighted_value(&self, i: usize, y: f64) -> f64 {
        self.weighted_slopes[i]
            .iter()
            .zip(self.fills_for_level(y))
            .map(|(s, fill)| s * fill)
            .sum::<f64>()
    }
}

/// One per-target fill structure: the first `full_segments` segments are
/// filled to `1/K`, then one optional fractional segment, then zeros.
/// These are exactly the structures the MILP ordering binaries admit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FillPattern {
    pub full_segments: usize,
    pub has_fractional: bool,
}

impl FillPattern {
    pub const EMPTY: FillPattern = FillPattern {
        full_segments: 0,
        has_fractional: false,
    };

    /// Index of the fractional segment, if any.
    pub fn fractional_segment(&self) -> Option<usize> {
        self.has_fractional.then_some(self.full_segments)
    }

    /// Bounds `[lo, hi]` for segment `j` under this pattern.
    pub fn segment_bounds(&self, j: usize, width: f64) -> (f64, f64) {
        if j < self.full_segments {
            (width, width)
        } else if self.fractional_segment() == Some(j) {
            (0.0, width)
        } else {
            (0.0, 0.0)
        }
    }

    /// Range of total levels `y` reachable under this pattern.
    pub fn level_range(&self, width: f64) -> (f64, f64) {
        let base = self.full_segments as f64 * width;
        if self.has_fractional {
            (base, base + width)
        } else {
            (base, base)
        }
    }
}

/// All `K + 1` monotone fill patterns for `K` segments: the empty pattern
/// plus one pattern per choice of fractional segment. Together they cover
/// every level in `[0, 1]`, overlapping only at segment boundaries.
pub fn fill_order_patterns(segments: usize) -> Vec<FillPattern> {
    assert!(segments >= 1, "need at least one segment");
    let mut patterns = vec![FillPattern::EMPTY];
    patterns.extend((0..segments).map(|m| FillPattern {
        full_segments: m,
        has_fractional: true,
    }));
    patterns
}
