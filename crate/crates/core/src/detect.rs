//! Streaming residual generation `a(q) r = N(q) L_0 [y_tilde; u]`, evaluation `J = r^2`
//! and thresholded alarm logic.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::simulate::{DetectorOutputs, Trace};
use crate::synthesis::{Denominator, FilterCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlarmKind {
    Raised,
    Cleared,
}

impl AlarmKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlarmKind::Raised => "raised",
            AlarmKind::Cleared => "cleared",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlarmEvent {
    pub k: usize,
    pub j: f64,
    pub kind: AlarmKind,
}

/// Output of one [`Detector::push`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub r: f64,
    pub j: f64,
    pub alarm: bool,
}

/// Direct realization of the strictly proper filter `N(q) L_0 / a(q)`.
///
/// Both delay lines hold the last `d_a` samples, oldest first, so `r(k)` only depends on
/// inputs up to `k - 1`. The stream's history before the first sample is unknown and taken as
/// zero, so the alarm logic is armed only once the delay line holds `d_a` real samples; `r`
/// and `J` are reported from the first sample on.
#[derive(Debug, Clone)]
pub struct Detector {
    taps: Vec<Vec<f64>>,
    a: Vec<f64>,
    threshold: f64,
    eval_window: usize,
    z_hist: VecDeque<Vec<f64>>,
    r_hist: VecDeque<f64>,
    run: usize,
    alarm: bool,
    faulted: bool,
    pushed: usize,
}

impl Detector {
    /// `taps[s] = N_s L_0`, each of width `n_y + n_u`.
    pub fn new(taps: Vec<Vec<f64>>, denominator: &Denominator, threshold: f64, eval_window: usize) -> Result<Self> {
        let d_a = denominator.degree();
        if taps.is_empty() || taps.len() > d_a {
            return Err(Error::InvalidParameter {
                field: "taps",
                reason: format!("{} numerator taps for a denominator of degree {d_a}; need 1..={d_a}", taps.len()),
            });
        }
        let width = taps[0].len();
        if taps.iter().any(|t| t.len() != width) {
            return Err(Error::Dimension("numerator taps have unequal widths".into()));
        }
        if eval_window == 0 {
            return Err(Error::InvalidParameter { field: "eval_window", reason: "must be >= 1".into() });
        }
        if threshold.is_nan() || threshold < 0.0 {
            return Err(Error::InvalidParameter { field: "threshold", reason: format!("must be >= 0, got {threshold}") });
        }
        Ok(Self {
            taps,
            a: denominator.coeffs()[..d_a].to_vec(),
            threshold,
            eval_window,
            z_hist: std::iter::repeat_n(vec![0.0; width], d_a).collect(),
            r_hist: std::iter::repeat_n(0.0, d_a).collect(),
            run: 0,
            alarm: false,
            faulted: false,
            pushed: 0,
        })
    }

    pub fn from_filter(filter: &FilterCoefficients, l0: &Mat, threshold: f64, eval_window: usize) -> Result<Self> {
        Self::new(filter.input_taps(l0), &filter.denominator, threshold, eval_window)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn eval_window(&self) -> usize {
        self.eval_window
    }

    pub fn width(&self) -> usize {
        self.taps[0].len()
    }

    /// Clear both delay lines, the alarm state and a latched fault.
    pub fn reset(&mut self) {
        self.z_hist.iter_mut().for_each(|z| z.fill(0.0));
        self.r_hist.iter_mut().for_each(|r| *r = 0.0);
        self.run = 0;
        self.alarm = false;
        self.faulted = false;
        self.pushed = 0;
    }

    /// Number of leading samples during which no alarm can be raised, the denominator degree.
    pub fn arming_delay(&self) -> usize {
        self.a.len()
    }

    /// Advance one sample with `z(k) = [y_tilde(k); u(k)]`.
    pub fn push(&mut self, y_tilde: &[f64], u: &[f64]) -> Result<Sample> {
        if self.faulted {
            return Err(Error::DetectorFault);
        }
        if y_tilde.len() + u.len() != self.width() {
            return Err(Error::Dimension(format!(
                "detector expects {} input channels, got {}",
                self.width(),
                y_tilde.len() + u.len()
            )));
        }
        if y_tilde.iter().chain(u).any(|v| !v.is_finite()) {
            self.faulted = true;
            return Err(Error::DetectorFault);
        }
        let d_a = self.a.len();
        // z_hist[i] = z(k - d_a + i), r_hist[i] = r(k - d_a + i)
        let mut r = 0.0;
        for (a_j, r_j) in self.a.iter().zip(&self.r_hist) {
            r -= a_j * r_j;
        }
        for (tap, z) in self.taps.iter().zip(&self.z_hist) {
            r += tap.iter().zip(z).map(|(t, v)| t * v).sum::<f64>();
        }
        let mut z = self.z_hist.pop_front().expect("delay line has d_a >= 1 entries");
        z[..y_tilde.len()].copy_from_slice(y_tilde);
        z[y_tilde.len()..].copy_from_slice(u);
        self.z_hist.push_back(z);
        self.r_hist.pop_front();
        self.r_hist.push_back(r);
        debug_assert_eq!(self.r_hist.len(), d_a);

        let j = r * r;
        let armed = self.pushed >= d_a;
        self.pushed += 1;
        if armed && j > self.threshold {
            self.run += 1;
        } else {
            self.run = 0;
        }
        self.alarm = self.run >= self.eval_window;
        Ok(Sample { r, j, alarm: self.alarm })
    }
}

/// Batch form of the same filter: convolve `w(k) = sum_s taps_s . z(k + s)` with the impulse
/// response of `1 / a(q)`. Used to cross-check the streaming recursion.
pub fn filter_batch(taps: &[Vec<f64>], denominator: &Denominator, z: &[Vec<f64>]) -> Vec<f64> {
    let n = z.len();
    let lead = taps.len() - 1;
    let ell = denominator.impulse_response(n + lead);
    // w[m + lead] = w(m) for m = -lead..n; windows that start before k = 0 see zero history
    let w: Vec<f64> = (0..n + lead)
        .map(|idx| {
            taps.iter()
                .enumerate()
                .filter_map(|(s, tap)| (idx + s).checked_sub(lead).and_then(|j| z.get(j)).map(|zj| (tap, zj)))
                .map(|(tap, zj)| tap.iter().zip(zj).map(|(t, v)| t * v).sum::<f64>())
                .sum()
        })
        .collect();
    (0..n).map(|k| (0..=k + lead).map(|i| ell[i] * w[k + lead - i]).sum()).collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionReport {
    pub events: Vec<AlarmEvent>,
    pub first_alarm_after_fault: Option<usize>,
    /// `first_alarm_after_fault - fault_step`.
    pub detection_delay: Option<usize>,
    /// Samples with an active alarm before the fault (or over the whole trace if fault-free).
    pub alarms_before_fault: usize,
    /// Whether the alarm stayed on from its first post-fault raise to the end of the trace.
    pub persistent_after_fault: bool,
    /// Share of samples from the first post-fault raise onward with an active alarm.
    pub alarm_fraction_after_detection: f64,
}

/// Stream a trace through the detector, annotate it and collect the alarm events.
pub fn run_detection(trace: &mut Trace, det: &mut Detector) -> Result<DetectionReport> {
    det.reset();
    let n = trace.len();
    let mut out = DetectorOutputs {
        r: Vec::with_capacity(n),
        j: Vec::with_capacity(n),
        alarm: Vec::with_capacity(n),
        j_th: det.threshold(),
    };
    let mut events = Vec::new();
    let mut prev = false;
    for k in 0..n {
        let s = det.push(&trace.y_tilde[k], &trace.u[k])?;
        if s.alarm != prev {
            let kind = if s.alarm { AlarmKind::Raised } else { AlarmKind::Cleared };
            events.push(AlarmEvent { k, j: s.j, kind });
            prev = s.alarm;
        }
        out.r.push(s.r);
        out.j.push(s.j);
        out.alarm.push(s.alarm);
    }
    let fault = trace.fault_step.unwrap_or(n);
    let first = events.iter().find(|e| e.kind == AlarmKind::Raised && e.k >= fault).map(|e| e.k);
    let report = DetectionReport {
        first_alarm_after_fault: first,
        detection_delay: first.map(|k| k - fault),
        alarms_before_fault: out.alarm[..fault.min(n)].iter().filter(|&&a| a).count(),
        persistent_after_fault: first.is_some_and(|k| out.alarm[k..].iter().all(|&a| a)),
        alarm_fraction_after_detection: first.map_or(0.0, |k| {
            out.alarm[k..].iter().filter(|&&a| a).count() as f64 / (n - k) as f64
        }),
        events,
    };
    trace.detection = Some(out);
    Ok(report)
}

/// Pooled fraction of post-burn-in samples with `J > threshold`.
pub fn exceedance_rate(js: &[&[f64]], burn_in: usize, threshold: f64) -> Result<f64> {
    let mut total = 0usize;
    let mut hits = 0usize;
    for j in js {
        if let Some(tail) = j.get(burn_in..) {
            total += tail.len();
            hits += tail.iter().filter(|&&v| v > threshold).count();
        }
    }
    if total == 0 {
        return Err(Error::InvalidParameter { field: "burn_in", reason: "no samples left after burn-in".into() });
    }
    Ok(hits as f64 / total as f64)
}

/// Empirical false-alarm rate of annotated, fault-free traces against their own threshold.
pub fn false_alarm_rate(traces: &[Trace], burn_in: usize) -> Result<f64> {
    let mut js = Vec::with_capacity(traces.len());
    let mut threshold = None;
    for t in traces {
        if t.fault_step.is_some_and(|kf| kf < t.len()) {
            return Err(Error::InvalidParameter { field: "traces", reason: "false-alarm rate needs fault-free traces".into() });
        }
        let det = t
            .detection
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter { field: "traces", reason: "trace has no detector output".into() })?;
        threshold = Some(det.j_th);
        js.push(det.j.as_slice());
    }
    let th = threshold.ok_or_else(|| Error::InvalidParameter { field: "traces", reason: "no traces".into() })?;
    exceedance_rate(&js, burn_in, th)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fir(d_n: usize, width: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..=d_n).map(|s| (0..width).map(|c| ((s * 7 + c * 3) as f64 + seed as f64).sin()).collect()).collect()
    }

    #[test]
    fn zero_input_gives_zero_residual() {
        let mut det = Detector::new(fir(3, 6, 0), &Denominator::deadbeat(4), 0.0, 1).unwrap();
        for _ in 0..50 {
            let s = det.push(&[0.0; 2], &[0.0; 4]).unwrap();
            assert_eq!((s.r, s.j, s.alarm), (0.0, 0.0, false));
        }
    }

    #[test]
    fn impulse_through_deadbeat_filter_reads_out_taps() {
        let d_n = 3;
        let taps = fir(d_n, 6, 1);
        let mut det = Detector::new(taps.clone(), &Denominator::deadbeat(d_n + 1), 1.0, 1).unwrap();
        let mut r = Vec::new();
        for k in 0..10 {
            let y = if k == 0 { [1.0, 0.0] } else { [0.0, 0.0] };
            r.push(det.push(&y, &[0.0; 4]).unwrap().r);
        }
        // r(k) = (N_{d_N + 1 - k} L_0) e_1: the impulse enters the delay line at the newest slot
        assert_eq!(r[0], 0.0);
        for k in 1..=d_n + 1 {
            assert_eq!(r[k], taps[d_n + 1 - k][0], "k={k}");
        }
        assert!(r[d_n + 2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_finite_input_latches_fault_until_reset() {
        let mut det = Detector::new(fir(1, 6, 0), &Denominator::deadbeat(2), 0.0, 1).unwrap();
        assert!(matches!(det.push(&[f64::NAN, 0.0], &[0.0; 4]), Err(Error::DetectorFault)));
        assert!(matches!(det.push(&[0.0, 0.0], &[0.0; 4]), Err(Error::DetectorFault)));
        det.reset();
        assert!(det.push(&[0.0, 0.0], &[0.0; 4]).is_ok());
    }

    #[test]
    fn eval_window_requires_consecutive_exceedances() {
        // r(k) = z(k - 1) channel 0
        let mut det = Detector::new(vec![vec![1.0, 0.0]], &Denominator::deadbeat(1), 0.5, 3).unwrap();
        let stream = [1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0];
        let alarms: Vec<bool> = stream.iter().map(|&v| det.push(&[v], &[0.0]).unwrap().alarm).collect();
        assert_eq!(alarms, [false, false, false, false, false, false, true, true, false]);
    }

    #[test]
    fn no_alarm_before_delay_line_fills() {
        let mut det = Detector::new(vec![vec![1.0, 0.0]], &Denominator::deadbeat(3), 0.5, 1).unwrap();
        assert_eq!(det.arming_delay(), 3);
        // r(k) = z(k - 3); history before k = 0 reads as zero, so feed a large start
        let alarms: Vec<bool> = (0..6).map(|_| det.push(&[2.0], &[0.0]).unwrap().alarm).collect();
        assert_eq!(alarms, [false, false, false, true, true, true]);
        det.reset();
        assert!(!det.push(&[2.0], &[0.0]).unwrap().alarm);
    }

    #[test]
    fn rejects_improper_filters() {
        assert!(Detector::new(fir(3, 6, 0), &Denominator::deadbeat(3), 0.0, 1).is_err());
        assert!(Detector::new(fir(1, 6, 0), &Denominator::deadbeat(3), 0.0, 0).is_err());
    }

    #[test]
    fn rates_at_extreme_thresholds() {
        let j: Vec<f64> = (0..100).map(|k| 1e-3 * (1.0 + (k as f64).sin().abs())).collect();
        assert_eq!(exceedance_rate(&[&j], 10, 1e300).unwrap(), 0.0);
        assert_eq!(exceedance_rate(&[&j], 10, 0.0).unwrap(), 1.0);
        assert!(exceedance_rate(&[&j], 100, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn streaming_matches_batch(
            d_n in 0usize..4,
            extra in 1usize..3,
            pole in 0.0f64..0.9,
            seed in 0u64..1000,
            input in prop::collection::vec(-10.0f64..10.0, 60..120),
        ) {
            let a = Denominator::repeated_pole(pole, d_n + extra).unwrap();
            let taps = fir(d_n, 2, seed);
            let z: Vec<Vec<f64>> = input.chunks(2).filter(|c| c.len() == 2).map(|c| c.to_vec()).collect();
            let mut det = Detector::new(taps.clone(), &a, 0.0, 1).unwrap();
            let stream: Vec<f64> = z.iter().map(|zk| det.push(&zk[..1], &zk[1..]).unwrap().r).collect();
            let batch = filter_batch(&taps, &a, &z);
            let scale = batch.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            for (s, b) in stream.iter().zip(&batch) {
                prop_assert!((s - b).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn higher_threshold_never_adds_alarms(
            input in prop::collection::vec(-5.0f64..5.0, 20..80),
            lo in 0.0f64..4.0,
            gap in 0.0f64..4.0,
            window in 1usize..4,
        ) {
            let run = |th: f64| {
                let mut det = Detector::new(vec![vec![1.0, 0.5]], &Denominator::deadbeat(2), th, window).unwrap();
                input.iter().map(|&v| det.push(&[v], &[1.0]).unwrap().alarm).collect::<Vec<_>>()
            };
            let low = run(lo);
            let high = run(lo + gap);
            for (l, h) in low.iter().zip(&high) {
                prop_assert!(!h || *l);
            }
        }
    }
}
