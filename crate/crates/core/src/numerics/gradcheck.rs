use std::collections::BTreeMap;

use crate::error::{shape, Error, Result};

/// A collection of named flat parameter tensors.
///
/// Segment order and lengths must be identical between `segments` and
/// `segments_mut`, and between a parameter set and its gradient.
pub trait ParamSet {
    fn segments(&self) -> Vec<(String, &[f64])>;
    fn segments_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_scalars(&self) -> usize {
        self.segments().iter().map(|(_, s)| s.len()).sum()
    }
}

impl ParamSet for Vec<f64> {
    fn segments(&self) -> Vec<(String, &[f64])> {
        vec![("theta".to_string(), self.as_slice())]
    }

    fn segments_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub max_rel_error: f64,
    /// Path of the worst scalar, as `segment[index]`.
    pub worst_param: String,
    /// Worst relative error within each segment.
    pub per_param_errors: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub scalars_checked: usize,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

/// Compares `analytic` against central differences of `loss_fn` at `params`.
///
/// Relative error per scalar is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn check_gradients<P, F>(
    loss_fn: F,
    params: &P,
    analytic: &P,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradReport>
where
    P: ParamSet + Clone,
    F: Fn(&P) -> f64,
{
    if !(epsilon > 0.0) {
        return Err(Error::Invalid(format!("epsilon must be > 0, got {epsilon}")));
    }
    let names: Vec<String> = params.segments().into_iter().map(|(n, _)| n).collect();
    let lens: Vec<usize> = params.segments().iter().map(|(_, s)| s.len()).collect();
    let grads: Vec<Vec<f64>> = analytic
        .segments()
        .into_iter()
        .map(|(_, s)| s.to_vec())
        .collect();
    if grads.len() != lens.len() || grads.iter().zip(&lens).any(|(g, &l)| g.len() != l) {
        return Err(shape("analytic gradient does not mirror the parameter set"));
    }

    let mut probe = params.clone();
    let mut report = GradReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        per_param_errors: BTreeMap::new(),
        tolerance,
        scalars_checked: 0,
    };
    for (seg, name) in names.iter().enumerate() {
        let mut seg_worst = 0.0f64;
        for idx in 0..lens[seg] {
            let orig = probe.segments_mut()[seg][idx];
            probe.segments_mut()[seg][idx] = orig + epsilon;
            let plus = loss_fn(&probe);
            probe.segments_mut()[seg][idx] = orig - epsilon;
            let minus = loss_fn(&probe);
            probe.segments_mut()[seg][idx] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFiniteProbe(format!("{name}[{idx}]")));
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            let exact = grads[seg][idx];
            let denom = exact.abs().max(numeric.abs()).max(1e-8);
            let rel = (exact - numeric).abs() / denom;
            seg_worst = seg_worst.max(rel);
            if rel > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = report.max_rel_error.max(rel);
                report.worst_param = format!("{name}[{idx}]");
            }
            report.scalars_checked += 1;
        }
        report.per_param_errors.insert(name.clone(), seg_worst);
    }
    Ok(report)
}
