use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Central-difference step used by [`grad_check`].
pub const FD_STEP: f64 = 1e-5;

/// Fragments that check themselves against central finite differences
/// expose a flat parameter vector, a scalar loss and its analytic gradient.
pub trait Differentiable {
    fn param_count(&self) -> usize;
    fn param(&self, index: usize) -> f64;
    fn set_param(&mut self, index: usize, value: f64);
    fn loss(&self) -> f64;
    /// Analytic gradient of [`Differentiable::loss`], one entry per parameter.
    fn gradient(&self) -> Vec<f64>;
    /// Identifies the active piece of a piecewise-smooth loss (relu masks,
    /// pooling winners). Central differences are only valid when both
    /// probes stay on the same piece.
    fn kink_signature(&self) -> Option<u64> {
        None
    }
}

/// Outcome of a finite-difference sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Parameters whose probes crossed a kink even at the smallest step.
    pub skipped: usize,
}

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Maximum relative error over every parameter of `fragment`.
pub fn grad_check<F: Differentiable + ?Sized>(fragment: &mut F, seed: u64) -> f64 {
    let n = fragment.param_count();
    grad_check_sampled(fragment, seed, n).max_relative_error
}

/// Probes at most `max_checks` parameters drawn uniformly without
/// replacement from `seed` (all of them when `max_checks` covers the count).
///
/// When the fragment reports kink signatures, a probe pair that lands on a
/// different piece is retried with the step shrunk tenfold, up to three
/// times; parameters that still straddle a kink are skipped and counted.
pub fn grad_check_sampled<F: Differentiable + ?Sized>(
    fragment: &mut F,
    seed: u64,
    max_checks: usize,
) -> GradCheckReport {
    let n = fragment.param_count();
    if n == 0 || max_checks == 0 {
        return GradCheckReport::default();
    }
    let indices: Vec<usize> = if max_checks >= n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = sample(&mut rng, n, max_checks).into_vec();
        picked.sort_unstable();
        picked
    };
    grad_check_indices(fragment, &indices)
}

/// Finite-difference check restricted to `indices`.
pub fn grad_check_indices<F: Differentiable + ?Sized>(
    fragment: &mut F,
    indices: &[usize],
) -> GradCheckReport {
    let mut report = GradCheckReport::default();
    if indices.is_empty() {
        return report;
    }
    let base_sig = fragment.kink_signature();
    let analytic = fragment.gradient();
    for &i in indices {
        let original = fragment.param(i);
        let mut step = FD_STEP;
        let mut numeric = None;
        for _ in 0..4 {
            fragment.set_param(i, original + step);
            let plus = fragment.loss();
            let sig_plus = fragment.kink_signature();
            fragment.set_param(i, original - step);
            let minus = fragment.loss();
            let sig_minus = fragment.kink_signature();
            fragment.set_param(i, original);
            if sig_plus == base_sig && sig_minus == base_sig {
                numeric = Some((plus - minus) / (2.0 * step));
                break;
            }
            step /= 10.0;
        }
        match numeric {
            Some(numeric) => {
                report.checked += 1;
                report.max_relative_error = report
                    .max_relative_error
                    .max(relative_error(analytic[i], numeric));
            }
            None => report.skipped += 1,
        }
    }
    report
}
